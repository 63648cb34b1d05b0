#include "prk/graph.hpp"

#include "prk/errors.hpp"

namespace prk {

Graph::Node& Graph::node(Var v) {
  require(v.graph == this && v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(), "variable not in this graph");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Graph::Node& Graph::node(Var v) const {
  require(v.graph == this && v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(), "variable not in this graph");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Graph::constant(Tensor value) { return record("constant", std::move(value), {}, nullptr); }

Var Graph::leaf(Tensor value, bool trainable) {
  Var v = record("leaf", std::move(value), {}, nullptr);
  Node& n = node(v);
  n.is_leaf = true;
  n.requires_grad = trainable;
  return v;
}

Var Graph::record(std::string kind, Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  require(!backward_done_, "graph already consumed by backward");
  Node n;
  n.kind = std::move(kind);
  n.value = std::move(value);
  for (const Var& in : inputs) {
    n.inputs.push_back(in.id);
    if (node(in).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const { return node(v).value; }
bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }
const std::string& Graph::kind(Var v) const { return node(v).kind; }
std::vector<int> Graph::inputs(Var v) const { return node(v).inputs; }

Tensor* Graph::grad_sink(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return &n.grad;
}

void Graph::backward(Var loss) {
  Node& root = node(loss);
  require(root.value.size() == 1, "backward requires a scalar loss, got shape " + shape_str(root.value.shape()));
  require(!backward_done_, "backward already ran on this graph");
  backward_done_ = true;
  if (!root.requires_grad) return;
  grad_sink(loss)->fill(1.0);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
    // Interior gradients are no longer needed once propagated.
    if (!n.is_leaf) n.grad = Tensor();
    n.backward = nullptr;
  }
}

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad && n.grad.size() == n.value.size()) return n.grad;
  return Tensor(n.value.shape(), 0.0);
}

void Graph::append_branches(const std::vector<std::uint8_t>& bits) {
  if (track_branches_) branches_.insert(branches_.end(), bits.begin(), bits.end());
}

}  // namespace prk
