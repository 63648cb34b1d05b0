#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "prk/tensor.hpp"

namespace prk {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return graph != nullptr && id >= 0; }
};

/// Eager reverse-mode tape. One graph per forward pass; discard after backward.
///
/// Nodes are appended in execution order, so the node vector is already a
/// topological order and backward is a single reverse sweep. Gradients live in
/// the graph, not in the leaf tensors, so separate graphs over shared
/// parameters can run on separate threads.
class Graph {
 public:
  // Receives the gradient of the node's output; accumulates into its inputs.
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value, bool trainable = true);

  /// Records an operation. `fn` is dropped when no input requires a gradient.
  Var record(std::string kind, Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  const std::string& kind(Var v) const;
  std::vector<int> inputs(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  /// Gradient accumulator for `v` during backward, or nullptr if `v` is not
  /// on a differentiable path.
  Tensor* grad_sink(Var v);

  void backward(Var loss);

  /// d loss / d v after backward; zeros if `v` received no gradient.
  Tensor grad(Var v) const;

  // Piecewise ops record which branch each element took, so finite-difference
  // checks can detect stencils that straddle a kink.
  void set_track_branches(bool on) { track_branches_ = on; }
  bool track_branches() const { return track_branches_; }
  void append_branches(const std::vector<std::uint8_t>& bits);
  const std::vector<std::uint8_t>& branch_signature() const { return branches_; }

 private:
  struct Node {
    std::string kind;
    Tensor value;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
    Tensor grad;
    bool has_grad = false;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;
  bool backward_done_ = false;
  bool track_branches_ = false;
  std::vector<std::uint8_t> branches_;
};

inline const Tensor& Var::value() const { return graph->value(*this); }

}  // namespace prk
