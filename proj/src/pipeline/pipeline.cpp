#include "prk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "prk/checkpoint.hpp"
#include "prk/errors.hpp"
#include "prk/evaluate.hpp"
#include "prk/formats.hpp"
#include "prk/losses.hpp"
#include "prk/ops.hpp"
#include "prk/optim.hpp"
#include "prk/parallel.hpp"
#include "prk/rng.hpp"
#include "prk/tiling.hpp"

namespace prk {

RunLog::RunLog(const RunConfig& cfg, const std::string& path)
    : hash_(prk::config_hash(cfg)), start_(std::chrono::steady_clock::now()) {
  if (!path.empty()) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : std::filesystem::path(path).parent_path());
    file_.open(path, std::ios::trunc);
    if (!file_) throw IoError("cannot open run log " + path);
  }
  write({{"event", "start"}, {"config_hash", hex64(hash_)}, {"seed", cfg.seed}});
}

void RunLog::write(Json record) {
  if (file_.is_open()) {
    file_ << record.dump() << "\n";
    file_.flush();
  }
  records_.push_back(std::move(record));
}

void RunLog::finish() {
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write({{"event", "end"}, {"config_hash", hex64(hash_)}, {"wall_time_s", secs}});
}

double softplus_inverse(double y) {
  require(y > 0.0, "softplus_inverse: non-positive argument");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

namespace {

Tensor flip_tensor(const Tensor& t) {
  Tensor out(t.shape());
  const int C = t.dim(0), H = t.dim(1), W = t.dim(2);
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) out.at(c, y, W - 1 - x) = t.at(c, y, x);
  return out;
}

template <typename T>
Grid<T> flip_grid(const Grid<T>& g) {
  Grid<T> out(g.rows(), g.cols());
  for (int y = 0; y < g.rows(); ++y)
    for (int x = 0; x < g.cols(); ++x) out(y, g.cols() - 1 - x) = g(y, x);
  return out;
}

DepthMap flip_depth(const DepthMap& d) {
  DepthMap out;
  out.depth = flip_grid(d.depth);
  out.valid = flip_grid(d.valid);
  return out;
}

Sample flip_sample(const Sample& s) {
  Sample f;
  f.index = s.index;
  f.image = flip_tensor(s.image);
  f.depth = flip_depth(s.depth);
  f.seg = flip_grid(s.seg);
  if (s.has_pseudo()) f.pseudo = flip_depth(s.pseudo);
  return f;
}

// Gradient accumulator over the patches or images of one step.
struct Accum {
  std::vector<Tensor> grads;
  void add(const std::vector<Tensor>& g, double w) {
    if (grads.empty()) {
      grads.reserve(g.size());
      for (const auto& t : g) grads.emplace_back(t.shape());
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      double* dst = grads[i].ptr();
      const double* src = g[i].ptr();
      for (std::size_t k = 0; k < g[i].size(); ++k) dst[k] += w * src[k];
    }
  }
};

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericalError(what + " became non-finite");
}

double geometric_mean_depth(const Dataset& data) {
  double s = 0.0;
  std::size_t n = 0;
  for (const Sample& smp : data)
    for (std::size_t k = 0; k < smp.depth.valid.size(); ++k)
      if (smp.depth.valid.values()[k]) {
        s += std::log(smp.depth.depth.values()[k]);
        ++n;
      }
  return n ? std::exp(s / static_cast<double>(n)) : 1.0;
}

Json epoch_record(const std::string& stage, const EpochStats& e) {
  return {{"event", "epoch"}, {"stage", stage},         {"epoch", e.epoch},
          {"loss", e.loss},   {"gt_term", e.gt_term}, {"pl_term", e.pl_term}};
}

}  // namespace

std::vector<EpochStats> train_coarse(CoarseNet& net, const Dataset& data, const CoarsePhase& phase, RunLog* log) {
  require(!data.empty(), "train_coarse: empty dataset");
  std::vector<Sample> flipped;
  if (phase.hflip)
    for (const Sample& s : data) flipped.push_back(flip_sample(s));
  const std::size_t n = data.size();
  const std::size_t batch = static_cast<std::size_t>(phase.batch_size);
  const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long total = steps_per_epoch * phase.epochs;
  Adam opt(net.params());
  std::vector<EpochStats> out;
  long step = 0;
  for (int epoch = 0; epoch < phase.epochs; ++epoch) {
    Rng rng(Rng::derive(phase.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    EpochStats es{epoch, 0.0, 0.0, 0.0};
    for (std::size_t b0 = 0; b0 < n; b0 += batch, ++step) {
      const std::size_t bn = std::min(batch, n - b0);
      std::vector<const Sample*> picks(bn);
      for (std::size_t k = 0; k < bn; ++k) {
        const bool flip = phase.hflip && rng.bernoulli(0.5);
        picks[k] = flip ? &flipped[order[b0 + k]] : &data[order[b0 + k]];
      }
      std::vector<std::vector<Tensor>> grads(bn);
      std::vector<double> losses(bn);
      parallel_for(bn, [&](std::size_t k) {
        const Sample& s = *picks[k];
        Graph g;
        const Bound bd = bind(g, net.params(), true);
        const UnetOutput o = net.forward(g, bd, g.constant(net.downsample(s.image)));
        const Var up = bilinear_resample(o.depth, NormRoi{0.0, 0.0, 1.0, 1.0}, s.image.dim(1), s.image.dim(2));
        const Var loss = silog_loss(up, s.depth, s.depth.valid, phase.loss.silog_alpha, phase.loss.silog_beta);
        losses[k] = loss.value().data()[0];
        g.backward(loss);
        grads[k] = gradients(g, bd);
      });
      Accum acc;
      double mean_loss = 0.0;
      for (std::size_t k = 0; k < bn; ++k) {
        acc.add(grads[k], 1.0 / static_cast<double>(bn));
        mean_loss += losses[k] / static_cast<double>(bn);
      }
      check_finite(mean_loss, phase.stage + " loss");
      const double lr = cosine_lr(phase.lr, step, total);
      opt.step(net.params(), acc.grads, lr);
      es.loss += mean_loss / static_cast<double>(steps_per_epoch);
      if (log)
        log->write({{"event", "step"}, {"stage", phase.stage}, {"epoch", epoch}, {"step", step}, {"lr", lr},
                    {"loss", mean_loss}, {"gt_term", mean_loss}, {"pl_term", 0.0}});
    }
    es.gt_term = es.loss;
    out.push_back(es);
    if (log) log->write(epoch_record(phase.stage, es));
  }
  return out;
}

namespace {

struct PatchResult {
  std::vector<Tensor> grads;
  double loss = 0.0, gt = 0.0, pl = 0.0, rank = 0.0, ssi = 0.0;
  bool used = false;
};

struct PatchJob {
  const Sample* sample = nullptr;
  const CoarseCache* cache = nullptr;
  PatchRoi roi;
  bool dsd = false;
  std::uint64_t pair_seed = 0;
};

PatchResult run_patch(const RefinerNet& net, const PatchJob& job, const RefinerPhase& phase) {
  PatchResult r;
  const Sample& s = *job.sample;
  const DepthMap gt = crop(s.depth, job.roi);
  const std::size_t n_valid = count_set(gt.valid);
  if (n_valid < 2) return r;  // nothing to supervise in this patch
  Graph g;
  const Bound b = bind(g, net.params(), true);
  const RefineOutput o =
      net.forward(g, b, g.constant(crop_chw(s.image, job.roi)), *job.cache, job.roi, s.image.dim(1), s.image.dim(2));
  Var loss;
  if (job.dsd) {
    const DepthMap pseudo = crop(s.pseudo, job.roi);
    const PointPairSet pairs = sample_pairs(pseudo, phase.loss.pairs_n, phase.loss.tau, job.pair_seed, phase.loss.edge_bias);
    const DsdLoss d = dsd_loss(o.depth, gt, gt.valid, pseudo, pairs, phase.loss);
    loss = d.total;
    r.gt = d.gt_term;
    r.pl = d.pl_term;
    r.rank = d.rank;
    r.ssi = d.ssi;
  } else {
    loss = silog_loss(o.depth, gt, gt.valid, phase.loss.silog_alpha, phase.loss.silog_beta);
    r.gt = loss.value().data()[0];
  }
  r.loss = loss.value().data()[0];
  g.backward(loss);
  r.grads = gradients(g, b);
  r.used = true;
  return r;
}

}  // namespace

std::vector<EpochStats> train_refiner(RefinerNet& net, const CoarseNet& coarse, const Dataset& data,
                                      const RefinerPhase& phase, RunLog* log) {
  require(!data.empty(), "train_refiner: empty dataset");
  if (phase.dsd)
    for (const Sample& s : data)
      if (!s.has_pseudo()) throw ConfigError("DSD training needs pseudo labels for every sample");
  const int H = data.front().image.dim(1), W = data.front().image.dim(2);
  const PatchGrid grid = make_grid(H, W, phase.tiling.patch_h, phase.tiling.patch_w, phase.tiling.mode,
                                   phase.tiling.random_n, phase.tiling.seed);

  // Frozen coarse outputs for every image (and its mirror when flipping).
  auto caches_for = [&](const std::vector<Sample>& d) {
    std::vector<CoarseCache> c(d.size());
    parallel_for(d.size(), [&](std::size_t i) { c[i] = coarse.run(coarse.downsample(d[i].image)); });
    return c;
  };
  std::vector<Sample> flipped, mix_flipped;
  if (phase.hflip) {
    for (const Sample& s : data) flipped.push_back(flip_sample(s));
    if (phase.mix)
      for (const Sample& s : *phase.mix) mix_flipped.push_back(flip_sample(s));
  }
  const std::vector<CoarseCache> cache = caches_for(data);
  const std::vector<CoarseCache> cache_f = caches_for(flipped);
  const std::vector<CoarseCache> mix_cache = phase.mix ? caches_for(*phase.mix) : std::vector<CoarseCache>{};
  const std::vector<CoarseCache> mix_cache_f = caches_for(mix_flipped);
  if (phase.mix) require(!phase.mix->empty(), "train_refiner: empty mix dataset");

  const std::uint64_t coarse_hash = coarse.params().hash();
  const std::size_t n = data.size();
  const long total = static_cast<long>(n) * phase.epochs;
  Adam opt(net.params());
  std::vector<EpochStats> out;
  long step = 0;
  for (int epoch = 0; epoch < phase.epochs; ++epoch) {
    Rng rng(Rng::derive(phase.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    EpochStats es{epoch, 0.0, 0.0, 0.0};
    for (std::size_t oi = 0; oi < n; ++oi, ++step) {
      const std::size_t idx = order[oi];
      // Patches drawn without replacement from the grid (with replacement when it is smaller than the batch).
      std::vector<int> rois(grid.rois.size());
      for (std::size_t k = 0; k < rois.size(); ++k) rois[k] = static_cast<int>(k);
      rng.shuffle(rois.begin(), rois.end());
      std::vector<PatchJob> jobs(static_cast<std::size_t>(phase.batch_size));
      for (std::size_t k = 0; k < jobs.size(); ++k) {
        PatchJob& j = jobs[k];
        j.roi = grid.rois[static_cast<std::size_t>(k < rois.size() ? rois[k] : rng.uniform_int(0, static_cast<int>(rois.size()) - 1))];
        const bool flip = phase.hflip && rng.bernoulli(0.5);
        if (phase.mix && k % 2 == 1) {
          const std::size_t m = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(phase.mix->size()) - 1));
          j.sample = flip ? &mix_flipped[m] : &(*phase.mix)[m];
          j.cache = flip ? &mix_cache_f[m] : &mix_cache[m];
          j.dsd = false;
        } else {
          j.sample = flip ? &flipped[idx] : &data[idx];
          j.cache = flip ? &cache_f[idx] : &cache[idx];
          j.dsd = phase.dsd;
        }
        j.pair_seed = Rng::derive(phase.seed ^ 0x5EED, static_cast<std::uint64_t>(step) * 64 + k);
      }
      std::vector<PatchResult> res(jobs.size());
      parallel_for(jobs.size(), [&](std::size_t k) { res[k] = run_patch(net, jobs[k], phase); });
      std::size_t used = 0;
      for (const auto& r : res) used += r.used;
      if (used == 0) continue;
      Accum acc;
      PatchResult mean;
      for (const auto& r : res) {
        if (!r.used) continue;
        const double w = 1.0 / static_cast<double>(used);
        acc.add(r.grads, w);
        mean.loss += w * r.loss;
        mean.gt += w * r.gt;
        mean.pl += w * r.pl;
        mean.rank += w * r.rank;
        mean.ssi += w * r.ssi;
      }
      check_finite(mean.loss, phase.stage + " loss");
      const double lr = cosine_lr(phase.lr, step, total);
      opt.step(net.params(), acc.grads, lr);
      es.loss += mean.loss / static_cast<double>(n);
      es.gt_term += mean.gt / static_cast<double>(n);
      es.pl_term += mean.pl / static_cast<double>(n);
      if (log)
        log->write({{"event", "step"}, {"stage", phase.stage}, {"epoch", epoch}, {"step", step},
                    {"lr", lr},         {"loss", mean.loss},   {"gt_term", mean.gt}, {"pl_term", mean.pl},
                    {"rank", mean.rank}, {"ssi", mean.ssi}});
    }
    out.push_back(es);
    if (log) log->write(epoch_record(phase.stage, es));
  }
  if (coarse.params().hash() != coarse_hash) throw NumericalError("frozen coarse parameters changed during training");
  return out;
}

namespace {

CoarsePhase coarse_phase(const RunConfig& cfg, const std::string& stage, std::uint64_t stream) {
  CoarsePhase p;
  p.stage = stage;
  p.epochs = cfg.train.epochs_coarse;
  p.lr = cfg.train.lr;
  p.batch_size = cfg.train.batch_size;
  p.loss = cfg.loss;
  p.hflip = cfg.train.hflip;
  p.seed = Rng::derive(cfg.seed, stream);
  return p;
}

RefinerPhase refiner_phase(const RunConfig& cfg, const std::string& stage, int epochs, bool dsd,
                           std::uint64_t stream) {
  RefinerPhase p;
  p.stage = stage;
  p.epochs = epochs;
  p.lr = cfg.train.lr;
  p.batch_size = cfg.train.batch_size;
  p.loss = cfg.loss;
  p.dsd = dsd;
  p.hflip = cfg.train.hflip;
  p.tiling = cfg.tiling;
  p.seed = Rng::derive(cfg.seed, stream);
  return p;
}

CoarseNet fresh_coarse(const RunConfig& cfg, const Dataset& data, std::uint64_t stream) {
  CoarseNet net(cfg.model, Rng::derive(cfg.seed, stream));
  net.set_head_bias(softplus_inverse(geometric_mean_depth(data) / cfg.model.output_scale));
  return net;
}

}  // namespace

Teacher train_teacher(const RunConfig& cfg, const Dataset& synth, RunLog* log) {
  cfg.validate();
  require_dense(synth, "train_teacher");
  CoarseNet coarse = fresh_coarse(cfg, synth, 1);
  train_coarse(coarse, synth, coarse_phase(cfg, "teacher_coarse", 11), log);
  RefinerNet refiner(cfg.model, Rng::derive(cfg.seed, 2));
  refiner.init_base_from(coarse);
  train_refiner(refiner, coarse, synth, refiner_phase(cfg, "teacher_refiner", cfg.train.epochs_refiner, false, 12),
                log);
  return {std::move(coarse), std::move(refiner)};
}

CoarseNet train_coarse_real(const RunConfig& cfg, const Dataset& real, RunLog* log) {
  cfg.validate();
  CoarseNet coarse = fresh_coarse(cfg, real, 3);
  train_coarse(coarse, real, coarse_phase(cfg, "coarse_real", 13), log);
  return coarse;
}

void generate_pseudo_labels(const Teacher& teacher, Dataset& data, const TilingConfig& tiling) {
  for (Sample& s : data) {
    DepthMap p = predict_tiled(teacher.coarse, teacher.refiner, s.image, tiling);
    for (double& v : p.depth.values()) v = static_cast<double>(static_cast<float>(v));
    s.pseudo = std::move(p);
  }
}

RefinerNet train_student_silog(const RunConfig& cfg, const Dataset& real, const RefinerNet& teacher_refiner,
                               const CoarseNet& coarse_real, RunLog* log, const Dataset* mix) {
  cfg.validate();
  RefinerNet net = teacher_refiner;
  RefinerPhase p = refiner_phase(cfg, "student_silog", cfg.train.epochs_silog, false, 14);
  if (cfg.train.mix) p.mix = mix;
  train_refiner(net, coarse_real, real, p, log);
  return net;
}

RefinerNet train_student_dsd(const RunConfig& cfg, const Dataset& real, const RefinerNet& init,
                             const CoarseNet& coarse_real, RunLog* log, const Dataset* mix) {
  cfg.validate();
  RefinerNet net = init;
  RefinerPhase p = refiner_phase(cfg, "student_dsd", cfg.train.epochs_dsd, true, 15);
  if (cfg.train.mix) p.mix = mix;
  train_refiner(net, coarse_real, real, p, log);
  return net;
}

RefinerNet train_student(const RunConfig& cfg, const Dataset& real, const RefinerNet& teacher_refiner,
                         const CoarseNet& coarse_real, RunLog* log, const Dataset* mix) {
  const RefinerNet a = train_student_silog(cfg, real, teacher_refiner, coarse_real, log, mix);
  return train_student_dsd(cfg, real, a, coarse_real, log, mix);
}

void save_bundle(const std::string& path, const Bundle& b, const RunConfig& cfg) {
  NamedTensors blobs;
  for (std::size_t i = 0; i < b.coarse.params().size(); ++i)
    blobs.emplace_back("coarse/" + b.coarse.params().name(i), b.coarse.params().value(i));
  if (b.refiner)
    for (std::size_t i = 0; i < b.refiner->params().size(); ++i)
      blobs.emplace_back("refiner/" + b.refiner->params().name(i), b.refiner->params().value(i));
  write_checkpoint(path, blobs);
  Json side;
  side["format_version"] = kCheckpointVersion;
  side["stage"] = b.stage;
  side["coarse_hash"] = hex64(b.coarse.params().hash());
  side["refiner_hash"] = b.refiner ? hex64(b.refiner->params().hash()) : "";
  side["config_hash"] = hex64(config_hash(cfg));
  side["config"] = to_json(cfg);
  write_file(path + ".json", side.dump(2) + "\n");
}

Bundle load_bundle(const std::string& path, const ModelConfig& model) {
  if (!std::filesystem::exists(path)) throw IoError("missing checkpoint " + path);
  const NamedTensors blobs = read_checkpoint(path);
  Bundle b{CoarseNet(model, 0), std::nullopt, ""};
  bool any_refiner = false;
  for (const auto& [name, t] : blobs) any_refiner = any_refiner || name.rfind("refiner/", 0) == 0;
  if (any_refiner) b.refiner.emplace(model, 0);
  std::size_t n_coarse = 0, n_refiner = 0;
  for (const auto& [name, t] : blobs) {
    ParamSet* set = nullptr;
    std::string key;
    if (name.rfind("coarse/", 0) == 0) {
      set = &b.coarse.params();
      key = name.substr(7);
      ++n_coarse;
    } else if (name.rfind("refiner/", 0) == 0) {
      set = &b.refiner->params();
      key = name.substr(8);
      ++n_refiner;
    } else {
      throw IoError(path + ": unexpected blob '" + name + "'");
    }
    if (!set->contains(key)) throw IoError(path + ": blob '" + name + "' does not belong to the configured model");
    Tensor& dst = set->value(static_cast<std::size_t>(set->index(key)));
    if (dst.shape() != t.shape())
      throw IoError(path + ": blob '" + name + "' has shape " + shape_str(t.shape()) + ", model expects " +
                    shape_str(dst.shape()));
    dst = t;
  }
  if (n_coarse != b.coarse.params().size() || (b.refiner && n_refiner != b.refiner->params().size()))
    throw IoError(path + ": checkpoint is missing parameters for the configured model");
  const std::string side = path + ".json";
  if (std::filesystem::exists(side)) {
    const Json j = Json::parse(read_file(side), nullptr, false);
    if (!j.is_discarded() && j.contains("stage")) b.stage = j["stage"].get<std::string>();
  }
  return b;
}

}  // namespace prk
