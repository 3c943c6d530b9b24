// Command-line front end for the hand-object interaction denoising pipeline.
// Subcommands: gen-data, perturb, train, denoise, eval, export.
// Options may come from a JSON config file (--config) with flag overrides;
// precedence is flags > file > defaults. Exit codes: 0 success, 2 validation
// error, 3 runtime error.

#include <CLI11.hpp>

#include "geneoh/commands.hpp"

using namespace geneoh;

namespace {

json load_config_file(const std::string& path, const std::vector<std::string>& known) {
  if (path.empty()) return json::object();
  const json j = json::parse(read_file(path));
  check_known_keys(j, known);
  return j;
}

// Pull a value with flag > file > default precedence.
template <typename T>
void apply(const CLI::Option* opt, const json& file_cfg, const std::string& key, T& value) {
  if (opt->count() > 0) return;  // flag already wrote the value
  if (file_cfg.contains(key)) value = file_cfg.at(key).get<T>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GeneOH hand-object interaction denoising"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->capture_default_str();

  // ---- gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a clean synthetic corpus");
  GenDataConfig gen_cfg;
  std::string gen_out;
  auto* gen_out_opt = gen->add_option("--out", gen_out, "output directory")->required();
  auto* gen_n = gen->add_option("-n,--count", gen_cfg.count, "number of clips");
  auto* gen_k = gen->add_option("--frames", gen_cfg.frame_count, "frames per clip");
  auto* gen_kind = gen->add_option("--kind", gen_cfg.kind, "object kind or 'random'");
  auto* gen_seed = gen->add_option("--seed", gen_cfg.seed, "RNG seed");
  auto* gen_jobs = gen->add_option("--jobs", gen_cfg.jobs, "parallel clips");

  // ---- perturb
  auto* per = app.add_subcommand("perturb", "inject parameter-space noise into a corpus");
  PerturbConfig per_cfg;
  std::string per_in, per_out;
  auto* per_in_opt = per->add_option("--in", per_in, "input corpus")->required();
  auto* per_out_opt = per->add_option("--out", per_out, "output corpus")->required();
  auto* per_mode = per->add_option("--mode", per_cfg.mode, "gaussian or beta");
  std::vector<double> stds, scales;
  auto* per_stds = per->add_option("--stds", stds, "gaussian stds: trans rot pose")->expected(3);
  auto* per_scales =
      per->add_option("--scales", scales, "beta scales: trans rot pose")->expected(3);
  auto* per_seed = per->add_option("--seed", per_cfg.seed, "RNG seed");
  auto* per_jobs = per->add_option("--jobs", per_cfg.jobs, "parallel clips");

  // ---- train
  auto* train = app.add_subcommand("train", "train the three denoising models");
  TrainCmdConfig train_cfg;
  std::string train_in, train_out;
  auto* train_in_opt = train->add_option("--in", train_in, "clean corpus")->required();
  auto* train_out_opt = train->add_option("--out", train_out, "model directory")->required();
  auto* train_steps = train->add_option("--steps", train_cfg.steps, "Adam steps per model");
  auto* train_batch = train->add_option("--batch", train_cfg.batch_size, "batch size");
  auto* train_lr = train->add_option("--lr", train_cfg.learning_rate, "learning rate");
  auto* train_seed = train->add_option("--seed", train_cfg.seed, "RNG seed");
  auto* train_jobs = train->add_option("--jobs", train_cfg.jobs, "parallel clips");
  bool no_augment = false;
  auto* train_noaug =
      train->add_flag("--no-augment", no_augment, "disable rotation augmentation");
  train->add_option("--copies", train_cfg.augment_copies, "augmented copies per clip");
  train->add_option("--motion-steps", train_cfg.motion_steps,
                    "Adam steps for the trajectory model (-1: same as --steps)");
  train->add_option("--motion-batch", train_cfg.motion_batch,
                    "batch size for the trajectory model (-1: same as --batch)");
  train->add_option("--motion-copies", train_cfg.motion_copies,
                    "augmented copies for the trajectory model (-1: same as --copies)");

  // ---- denoise
  auto* den = app.add_subcommand("denoise", "run the progressive denoising cascade");
  DenoiseCmdConfig den_cfg;
  std::string den_in, den_models, den_out;
  auto* den_in_opt = den->add_option("--in", den_in, "noisy corpus")->required();
  auto* den_models_opt = den->add_option("--models", den_models, "model directory")->required();
  auto* den_out_opt = den->add_option("--out", den_out, "output directory")->required();
  auto* den_samples =
      den->add_option("--num-samples", den_cfg.num_samples, "stochastic samples per clip");
  auto* den_select = den->add_option("--select", den_cfg.select, "first or closest");
  auto* den_seed = den->add_option("--seed", den_cfg.seed, "RNG seed");
  auto* den_jobs = den->add_option("--jobs", den_cfg.jobs, "parallel clips");
  auto* den_tm = den->add_option("--t-motion", den_cfg.stage.t_motion, "MotionDiff steps");
  auto* den_ts = den->add_option("--t-spatial", den_cfg.stage.t_spatial, "SpatialDiff steps");
  auto* den_tt = den->add_option("--t-temporal", den_cfg.stage.t_temporal, "TemporalDiff steps");

  // ---- eval
  auto* ev = app.add_subcommand("eval", "evaluate a corpus against optional ground truth");
  EvalConfig ev_cfg;
  std::string ev_pred, ev_gt, ev_out;
  auto* ev_pred_opt = ev->add_option("--pred", ev_pred, "predicted corpus")->required();
  auto* ev_gt_opt = ev->add_option("--gt", ev_gt, "ground-truth corpus");
  auto* ev_out_opt = ev->add_option("--out", ev_out, "metrics JSON output")->required();
  auto* ev_seed = ev->add_option("--seed", ev_cfg.seed, "RNG seed");
  auto* ev_jobs = ev->add_option("--jobs", ev_cfg.jobs, "parallel clips");

  // ---- export
  auto* ex = app.add_subcommand("export", "export a clip as OBJ frames or flat binary");
  ExportConfig ex_cfg;
  std::string ex_in, ex_out;
  auto* ex_in_opt = ex->add_option("--in", ex_in, "clip JSON")->required();
  auto* ex_out_opt = ex->add_option("--out", ex_out, "output prefix/file")->required();
  auto* ex_format = ex->add_option("--format", ex_cfg.format, "obj or bin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const json fc = load_config_file(
          config_path, {"out", "count", "frames", "kind", "seed", "jobs"});
      apply(gen_out_opt, fc, "out", gen_out);
      apply(gen_n, fc, "count", gen_cfg.count);
      apply(gen_k, fc, "frames", gen_cfg.frame_count);
      apply(gen_kind, fc, "kind", gen_cfg.kind);
      apply(gen_seed, fc, "seed", gen_cfg.seed);
      apply(gen_jobs, fc, "jobs", gen_cfg.jobs);
      gen_cfg.out = gen_out;
      if (gen_cfg.count <= 0 || gen_cfg.frame_count < 2)
        throw InvalidInputError("gen-data: count must be > 0 and frames >= 2");
      cmd_gen_data(gen_cfg);
    } else if (*per) {
      const json fc = load_config_file(config_path,
                                       {"in", "out", "mode", "stds", "scales", "seed", "jobs"});
      apply(per_in_opt, fc, "in", per_in);
      apply(per_out_opt, fc, "out", per_out);
      apply(per_mode, fc, "mode", per_cfg.mode);
      apply(per_seed, fc, "seed", per_cfg.seed);
      apply(per_jobs, fc, "jobs", per_cfg.jobs);
      if (per_stds->count() == 0 && fc.contains("stds")) stds = fc.at("stds").get<std::vector<double>>();
      if (per_scales->count() == 0 && fc.contains("scales"))
        scales = fc.at("scales").get<std::vector<double>>();
      if (!stds.empty()) {
        per_cfg.gaussian = {stds.at(0), stds.at(1), stds.at(2)};
      }
      if (!scales.empty()) {
        per_cfg.beta = {scales.at(0), scales.at(1), scales.at(2)};
      }
      per_cfg.in = per_in;
      per_cfg.out = per_out;
      cmd_perturb(per_cfg);
    } else if (*train) {
      const json fc = load_config_file(
          config_path, {"in", "out", "steps", "batch", "lr", "seed", "jobs", "no_augment"});
      apply(train_in_opt, fc, "in", train_in);
      apply(train_out_opt, fc, "out", train_out);
      apply(train_steps, fc, "steps", train_cfg.steps);
      apply(train_batch, fc, "batch", train_cfg.batch_size);
      apply(train_lr, fc, "lr", train_cfg.learning_rate);
      apply(train_seed, fc, "seed", train_cfg.seed);
      apply(train_jobs, fc, "jobs", train_cfg.jobs);
      if (train_noaug->count() == 0 && fc.contains("no_augment"))
        no_augment = fc.at("no_augment").get<bool>();
      train_cfg.in = train_in;
      train_cfg.out = train_out;
      train_cfg.augment = !no_augment;
      if (train_cfg.steps < 0 || train_cfg.batch_size <= 0 || train_cfg.learning_rate <= 0.0)
        throw InvalidInputError("train: invalid hyperparameters");
      cmd_train(train_cfg);
    } else if (*den) {
      const json fc = load_config_file(config_path,
                                       {"in", "models", "out", "num_samples", "select", "seed",
                                        "jobs", "t_motion", "t_spatial", "t_temporal"});
      apply(den_in_opt, fc, "in", den_in);
      apply(den_models_opt, fc, "models", den_models);
      apply(den_out_opt, fc, "out", den_out);
      apply(den_samples, fc, "num_samples", den_cfg.num_samples);
      apply(den_select, fc, "select", den_cfg.select);
      apply(den_seed, fc, "seed", den_cfg.seed);
      apply(den_jobs, fc, "jobs", den_cfg.jobs);
      apply(den_tm, fc, "t_motion", den_cfg.stage.t_motion);
      apply(den_ts, fc, "t_spatial", den_cfg.stage.t_spatial);
      apply(den_tt, fc, "t_temporal", den_cfg.stage.t_temporal);
      den_cfg.in = den_in;
      den_cfg.models = den_models;
      den_cfg.out = den_out;
      if (den_cfg.num_samples <= 0) throw InvalidInputError("denoise: num_samples must be > 0");
      cmd_denoise(den_cfg);
    } else if (*ev) {
      const json fc = load_config_file(config_path, {"pred", "gt", "out", "seed", "jobs"});
      apply(ev_pred_opt, fc, "pred", ev_pred);
      apply(ev_gt_opt, fc, "gt", ev_gt);
      apply(ev_out_opt, fc, "out", ev_out);
      apply(ev_seed, fc, "seed", ev_cfg.seed);
      apply(ev_jobs, fc, "jobs", ev_cfg.jobs);
      ev_cfg.pred = ev_pred;
      ev_cfg.gt = ev_gt;
      ev_cfg.out = ev_out;
      cmd_eval(ev_cfg);
    } else if (*ex) {
      const json fc = load_config_file(config_path, {"in", "out", "format"});
      apply(ex_in_opt, fc, "in", ex_in);
      apply(ex_out_opt, fc, "out", ex_out);
      apply(ex_format, fc, "format", ex_cfg.format);
      ex_cfg.in = ex_in;
      ex_cfg.out = ex_out;
      cmd_export(ex_cfg);
    }
  } catch (const InvalidInputError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
