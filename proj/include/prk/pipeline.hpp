#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "prk/config.hpp"
#include "prk/dataset.hpp"
#include "prk/model.hpp"

namespace prk {

/// Line-delimited JSON training log. Records stay in memory as well; the file is optional.
class RunLog {
 public:
  explicit RunLog(const RunConfig& cfg, const std::string& path = "");
  void write(Json record);
  const std::vector<Json>& records() const { return records_; }
  std::uint64_t config_hash() const { return hash_; }
  /// Closes the log with a wall-time record.
  void finish();

 private:
  std::uint64_t hash_;
  std::vector<Json> records_;
  std::ofstream file_;
  std::chrono::steady_clock::time_point start_;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double gt_term = 0.0;
  double pl_term = 0.0;
};

struct CoarsePhase {
  std::string stage;
  int epochs = 0;
  double lr = 3e-3;
  int batch_size = 4;
  LossWeights loss;
  bool hflip = false;
  std::uint64_t seed = 0;
};

/// Trains the coarse network with silog on valid full-resolution pixels of the
/// upsampled coarse prediction.
std::vector<EpochStats> train_coarse(CoarseNet& net, const Dataset& data, const CoarsePhase& phase, RunLog* log);

struct RefinerPhase {
  std::string stage;
  int epochs = 0;
  double lr = 3e-3;
  int batch_size = 4;
  LossWeights loss;
  // Phase B of student training; needs pseudo labels.
  bool dsd = false;
  bool hflip = false;
  TilingConfig tiling;
  // When set, half of every batch comes from these dense samples with silog only.
  const Dataset* mix = nullptr;
  std::uint64_t seed = 0;
};

/// Trains the refiner with the coarse network frozen. Each step draws
/// batch_size patches of one image uniformly from the tiling grid.
std::vector<EpochStats> train_refiner(RefinerNet& net, const CoarseNet& coarse, const Dataset& data,
                                      const RefinerPhase& phase, RunLog* log);

struct Teacher {
  CoarseNet coarse;
  RefinerNet refiner;
};

/// Stage 1: coarse on synthetic data, then frozen; refiner initialized from it.
Teacher train_teacher(const RunConfig& cfg, const Dataset& synth, RunLog* log);

/// Stage 2: a coarse network trained on valid real-domain pixels only.
CoarseNet train_coarse_real(const RunConfig& cfg, const Dataset& real, RunLog* log);

/// Dense teacher predictions on `data`, stored in Sample::pseudo (float-rounded like the PFM files).
void generate_pseudo_labels(const Teacher& teacher, Dataset& data, const TilingConfig& tiling);

/// Stage 3 phase A: silog on valid ground truth, from the teacher refiner.
RefinerNet train_student_silog(const RunConfig& cfg, const Dataset& real, const RefinerNet& teacher_refiner,
                               const CoarseNet& coarse_real, RunLog* log, const Dataset* mix = nullptr);
/// Stage 3 phase B: DSD loss with fresh pairs per step, continuing from `init`.
RefinerNet train_student_dsd(const RunConfig& cfg, const Dataset& real, const RefinerNet& init,
                             const CoarseNet& coarse_real, RunLog* log, const Dataset* mix = nullptr);
/// Both phases back to back.
RefinerNet train_student(const RunConfig& cfg, const Dataset& real, const RefinerNet& teacher_refiner,
                         const CoarseNet& coarse_real, RunLog* log, const Dataset* mix = nullptr);

/// Coarse network plus an optional refiner, as stored on disk.
struct Bundle {
  CoarseNet coarse;
  std::optional<RefinerNet> refiner;
  std::string stage;
};

/// Binary checkpoint plus `<path>.json` sidecar holding the config, stage and parameter hashes.
void save_bundle(const std::string& path, const Bundle& b, const RunConfig& cfg);
Bundle load_bundle(const std::string& path, const ModelConfig& model);

/// Inverse of softplus, used to start the coarse head at a sensible depth.
double softplus_inverse(double y);

}  // namespace prk
