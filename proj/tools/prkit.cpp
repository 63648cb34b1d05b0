// prkit: command-line driver for data generation, the three training stages,
// pseudo labelling, inference, evaluation and the self-checks.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prk/config.hpp"
#include "prk/dataset.hpp"
#include "prk/errors.hpp"
#include "prk/evaluate.hpp"
#include "prk/formats.hpp"
#include "prk/gradcheck.hpp"
#include "prk/oracles.hpp"
#include "prk/pipeline.hpp"

namespace fs = std::filesystem;
using namespace prk;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "run";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--set", c.overrides, "dotted key=value override (repeatable)");
  cmd->add_option("--out", c.out, "run directory for every output");
}

// Loads the config before any work and writes the echo beside the outputs.
RunConfig start(const Common& c, const std::string& command) {
  RunConfig cfg = load_config(c.config, c.overrides);
  write_file((fs::path(c.out) / (command + ".config.json")).string(), config_echo(cfg));
  std::cerr << "prkit " << command << ": config hash " << hex64(config_hash(cfg)) << "\n";
  return cfg;
}

std::string data_root(const RunConfig& cfg, const std::string& flag) { return flag.empty() ? cfg.data.root : flag; }

void write_report(const Common& c, const std::string& name, const Json& j) {
  const std::string text = j.dump(2) + "\n";
  write_file((fs::path(c.out) / name).string(), text);
  std::cout << text;
}

const char* category(ErrorKind k) {
  switch (k) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::acceptance: return "acceptance";
  }
  return "unknown";
}

class AcceptanceError : public Error {
 public:
  explicit AcceptanceError(const std::string& what) : Error(ErrorKind::acceptance, what) {}
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prkit: patch refinement toolkit"};
  app.require_subcommand(1);

  Common c;
  std::string data, teacher, coarse, ckpt, pred, split = "real_val", mode;
  bool coarse_only = false;
  std::uint64_t check_seed = 2024;

  auto* datagen = app.add_subcommand("datagen", "generate the synthetic and real-domain splits");
  add_common(datagen, c);
  datagen->add_option("--data", data, "dataset root (default data.root)");

  auto* tt = app.add_subcommand("train-teacher", "train coarse + refiner on dense synthetic data");
  add_common(tt, c);
  tt->add_option("--data", data, "dataset root");

  auto* tc = app.add_subcommand("train-coarse", "train the real-domain coarse network");
  add_common(tc, c);
  tc->add_option("--data", data, "dataset root");

  auto* pl = app.add_subcommand("pseudo-label", "write teacher pseudo labels beside a split");
  add_common(pl, c);
  pl->add_option("--data", data, "dataset root");
  pl->add_option("--teacher", teacher, "teacher checkpoint")->required();
  pl->add_option("--split", split, "split to label")->default_val("real_train");

  auto* ts = app.add_subcommand("train-student", "train the student refiner (silog then DSD)");
  add_common(ts, c);
  ts->add_option("--data", data, "dataset root");
  ts->add_option("--teacher", teacher, "teacher checkpoint")->required();
  ts->add_option("--coarse", coarse, "real-domain coarse checkpoint")->required();

  auto* inf = app.add_subcommand("infer", "predict depth for a split");
  add_common(inf, c);
  inf->add_option("--data", data, "dataset root");
  inf->add_option("--ckpt", ckpt, "checkpoint")->required();
  inf->add_option("--split", split, "split to predict");
  inf->add_option("--tiling", mode, "override tiling.mode");
  inf->add_flag("--coarse-only", coarse_only, "skip the refiner");

  auto* ev = app.add_subcommand("eval", "evaluate predictions against a split");
  add_common(ev, c);
  ev->add_option("--data", data, "dataset root holding ground truth");
  ev->add_option("--pred", pred, "prediction root ({split}/{index}_depth.pfm)")->required();
  ev->add_option("--split", split, "split to evaluate");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every op and loss");
  add_common(gc, c);
  gc->add_option("--seed", check_seed, "instance seed");

  auto* oc = app.add_subcommand("oracle-check", "compare metrics and losses against brute-force oracles");
  add_common(oc, c);
  oc->add_option("--seed", check_seed, "instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*datagen) {
      const RunConfig cfg = start(c, "datagen");
      const std::string root = data_root(cfg, data);
      for (Split s : {Split::synth_train, Split::synth_val, Split::real_train, Split::real_val}) {
        const Dataset d = make_split(cfg, s);
        write_split(root, s, d);
        std::cerr << "  " << to_string(s) << ": " << d.size() << " scenes\n";
      }
    } else if (*tt) {
      const RunConfig cfg = start(c, "train-teacher");
      const Dataset synth = read_split(data_root(cfg, data), Split::synth_train);
      RunLog log(cfg, (fs::path(c.out) / "runlog.jsonl").string());
      Teacher t = train_teacher(cfg, synth, &log);
      log.finish();
      save_bundle((fs::path(c.out) / "teacher.ckpt").string(), {t.coarse, t.refiner, "teacher"}, cfg);
    } else if (*tc) {
      const RunConfig cfg = start(c, "train-coarse");
      const Dataset real = read_split(data_root(cfg, data), Split::real_train);
      RunLog log(cfg, (fs::path(c.out) / "runlog.jsonl").string());
      CoarseNet net = train_coarse_real(cfg, real, &log);
      log.finish();
      save_bundle((fs::path(c.out) / "coarse_real.ckpt").string(), {net, std::nullopt, "coarse_real"}, cfg);
    } else if (*pl) {
      const RunConfig cfg = start(c, "pseudo-label");
      const Split s = parse_split(split);
      Bundle b = load_bundle(teacher, cfg.model);
      if (!b.refiner) throw ConfigError(teacher + " holds no refiner");
      Dataset d = read_split(data_root(cfg, data), s);
      generate_pseudo_labels({b.coarse, *b.refiner}, d, cfg.tiling);
      write_pseudo(data_root(cfg, data), s, d);
    } else if (*ts) {
      const RunConfig cfg = start(c, "train-student");
      const std::string root = data_root(cfg, data);
      Bundle t = load_bundle(teacher, cfg.model);
      if (!t.refiner) throw ConfigError(teacher + " holds no refiner");
      Bundle cr = load_bundle(coarse, cfg.model);
      const Dataset real = read_split(root, Split::real_train, cfg.train.epochs_dsd > 0);
      Dataset synth;
      if (cfg.train.mix) synth = read_split(root, Split::synth_train);
      RunLog log(cfg, (fs::path(c.out) / "runlog.jsonl").string());
      RefinerNet student = train_student(cfg, real, *t.refiner, cr.coarse, &log, cfg.train.mix ? &synth : nullptr);
      log.finish();
      save_bundle((fs::path(c.out) / "student.ckpt").string(), {cr.coarse, student, "student"}, cfg);
    } else if (*inf) {
      RunConfig cfg = start(c, "infer");
      if (!mode.empty()) cfg.tiling.mode = parse_tile_mode(mode);
      const Split s = parse_split(split);
      Bundle b = load_bundle(ckpt, cfg.model);
      if (!coarse_only && !b.refiner) throw ConfigError(ckpt + " holds no refiner; pass --coarse-only");
      const Dataset d = read_split(data_root(cfg, data), s);
      for (const Sample& smp : d) {
        const DepthMap p = coarse_only ? predict_coarse(b.coarse, smp.image)
                                       : predict_tiled(b.coarse, *b.refiner, smp.image, cfg.tiling);
        write_depth(sample_path(c.out, s, smp.index, "depth.pfm"), p);
      }
    } else if (*ev) {
      const RunConfig cfg = start(c, "eval");
      const Split s = parse_split(split);
      const Dataset d = read_split(data_root(cfg, data), s);
      std::vector<DepthMap> preds;
      for (const Sample& smp : d) preds.push_back(read_depth(sample_path(pred, s, smp.index, "depth.pfm")));
      const std::vector<MetricsReport> reports = evaluate_images(d, preds);
      Json j;
      j["split"] = to_string(s);
      j["images"] = d.size();
      j["per_image"] = Json::array();
      for (std::size_t i = 0; i < d.size(); ++i)
        j["per_image"].push_back({{"index", d[i].index}, {"metrics", report_json(reports[i])}});
      j["aggregate"] = report_json(aggregate(reports));
      j["config_echo"] = to_json(cfg);
      j["config_hash"] = hex64(config_hash(cfg));
      write_report(c, "eval_report.json", j);
    } else if (*gc) {
      const RunConfig cfg = start(c, "gradcheck");
      const auto rows = run_gradcheck_suite(check_seed);
      Json j = Json::array();
      bool ok = true;
      std::fprintf(stderr, "%-20s %9s %8s %8s %12s\n", "op", "instances", "checked", "skipped", "max_rel_err");
      for (const auto& r : rows) {
        std::fprintf(stderr, "%-20s %9d %8zu %8zu %12.3e %s\n", r.op.c_str(), r.instances, r.stats.checked,
                     r.stats.skipped, r.stats.max_rel_error, r.pass ? "ok" : "FAIL");
        j.push_back({{"op", r.op}, {"instances", r.instances}, {"checked", r.stats.checked},
                     {"skipped", r.stats.skipped}, {"max_rel_error", r.stats.max_rel_error}, {"pass", r.pass}});
        ok = ok && r.pass;
      }
      write_report(c, "gradcheck_report.json", j);
      if (!ok) throw AcceptanceError("gradient check failed");
    } else if (*oc) {
      const RunConfig cfg = start(c, "oracle-check");
      const auto rows = run_oracle_suite(check_seed);
      Json j = Json::array();
      bool ok = true;
      for (const auto& r : rows) {
        std::fprintf(stderr, "%-28s %6d cases %4d failures max_err %.3e %s\n", r.name.c_str(), r.cases, r.failures,
                     r.max_error, r.pass ? "ok" : "FAIL");
        j.push_back({{"name", r.name}, {"cases", r.cases}, {"failures", r.failures}, {"max_error", r.max_error},
                     {"pass", r.pass}});
        ok = ok && r.pass;
      }
      write_report(c, "oracle_report.json", j);
      if (!ok) throw AcceptanceError("oracle check failed");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << category(e.kind()) << ": " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
