#pragma once

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include "geneoh/checkpoint.hpp"
#include "geneoh/io.hpp"
#include "geneoh/pipeline.hpp"
#include "geneoh/synthesis.hpp"

namespace geneoh {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("GENEOH_LOG");
    if (!env) return LogLevel::Info;
    const std::string s(env);
    if (s == "debug") return LogLevel::Debug;
    if (s == "warn") return LogLevel::Warn;
    if (s == "error") return LogLevel::Error;
    return LogLevel::Info;
  }();
  return level;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level < log_level()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << msg << "\n";
}

// Reject config keys that no command understands; typos should fail loudly.
inline void check_known_keys(const json& j, const std::vector<std::string>& known) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidInputError("unknown config key: " + key);
  }
}

// Run fn(i) for i in [0, n) across up to `jobs` threads; items are
// independent, failures are collected and rethrown.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::mutex err_mu;
  std::exception_ptr error;
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::string clip_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%04d.json", index);
  return buf;
}

// ---------------------------------------------------------------------------

struct GenDataConfig {
  std::filesystem::path out;
  int count = 10;
  int frame_count = 30;
  std::string kind = "random";  // or sphere/box/cylinder/torus
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline void cmd_gen_data(const GenDataConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  SynthesisConfig syn;
  syn.frame_count = cfg.frame_count;
  if (cfg.kind == "random") {
    syn.random_kind = true;
  } else {
    syn.kind = primitive_from_string(cfg.kind);
  }
  std::vector<std::uint64_t> seeds(cfg.count);
  parallel_for(cfg.count, cfg.jobs, [&](int i) {
    seeds[i] = child_seed(cfg.seed, i);
    const HOISequence seq = generate_synthetic_sequence(syn, seeds[i]);
    save_sequence(seq, cfg.out / clip_name(i));
    log(LogLevel::Debug, "generated " + clip_name(i));
  });
  json manifest;
  manifest["count"] = cfg.count;
  manifest["frame_count"] = cfg.frame_count;
  manifest["seed"] = cfg.seed;
  manifest["seeds"] = seeds;
  json files = json::array();
  for (int i = 0; i < cfg.count; ++i) files.push_back(clip_name(i));
  manifest["files"] = std::move(files);
  atomic_write(cfg.out / "manifest.json", manifest.dump(2));
}

inline std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  std::vector<std::filesystem::path> files;
  for (const auto& f : manifest.at("files")) files.push_back(dir / f.get<std::string>());
  return files;
}

struct PerturbConfig {
  std::filesystem::path in;
  std::filesystem::path out;
  std::string mode = "gaussian";  // or "beta"
  GaussianNoise gaussian;
  BetaNoise beta;
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline void cmd_perturb(const PerturbConfig& cfg) {
  if (cfg.mode != "gaussian" && cfg.mode != "beta")
    throw InvalidInputError("perturb: mode must be gaussian or beta");
  std::filesystem::create_directories(cfg.out);
  const auto files = corpus_files(cfg.in);
  parallel_for(static_cast<int>(files.size()), cfg.jobs, [&](int i) {
    const HOISequence seq = load_sequence(files[i]);
    const HOISequence noisy =
        cfg.mode == "gaussian" ? perturb_gaussian(seq, cfg.gaussian, child_seed(cfg.seed, i))
                               : perturb_beta(seq, cfg.beta, child_seed(cfg.seed, i));
    save_sequence(noisy, cfg.out / files[i].filename());
  });
  std::filesystem::copy_file(cfg.in / "manifest.json", cfg.out / "manifest.json",
                             std::filesystem::copy_options::overwrite_existing);
}

// ---------------------------------------------------------------------------

struct TrainCmdConfig {
  std::filesystem::path in;
  std::filesystem::path out;
  int steps = 3000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool augment = true;
  int augment_copies = 4;
  // The whole-trajectory denoiser sees one sample per clip copy, far fewer than
  // the per-point sets, so it benefits from a larger budget. -1 inherits the
  // shared setting above.
  int motion_steps = -1;
  int motion_batch = -1;
  int motion_copies = -1;
  int spatial_points_per_clip = 16;
  double r_c = 0.005;
  int n_contacts = 128;
  int jobs = 1;
};

// Corpus-level per-channel stats for the temporal representation.
inline ChannelStats compute_temporal_channel_stats(const std::vector<GeneOHRep>& reps) {
  ChannelStats st;
  st.mu = Eigen::VectorXd::Zero(kTemporalChannels);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(kTemporalChannels);
  double n = 0.0;
  for (const auto& rep : reps) {
    for (const auto& tr : rep.temporal.transitions)
      for (const auto& t : tr) {
        Eigen::VectorXd row(kTemporalChannels);
        row.segment<3>(0) = t.v_obj;
        for (int j = 0; j < kNumJoints; ++j) {
          row[3 + j * 6 + 0] = t.dist[j];
          row.segment<3>(3 + j * 6 + 1) = t.v_rel.row(j);
          row[3 + j * 6 + 4] = t.e_par[j];
          row[3 + j * 6 + 5] = t.e_perp[j];
        }
        st.mu += row;
        sq += row.cwiseProduct(row);
        n += 1.0;
      }
  }
  st.mu /= n;
  st.sigma = ((sq / n - st.mu.cwiseProduct(st.mu)).cwiseMax(0.0)).cwiseSqrt().cwiseMax(
      kSigmaFloor);
  return st;
}

struct TrainedModels {
  PipelineModels models;
  std::vector<double> motion_loss, spatial_loss, temporal_loss;
};

// Build the three training sets from a clean corpus and train the denoisers.
// Rotation augmentation adds rotated copies of each representation.
inline TrainedModels train_models(const std::vector<HOISequence>& corpus,
                                  const TrainCmdConfig& cfg, const NoiseSchedule& schedule) {
  if (corpus.empty()) throw InvalidInputError("train: empty corpus");
  std::vector<GeneOHRep> reps(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), cfg.jobs, [&](int i) {
    const ContactFrameSet frames = extract_generalized_contact_points(
        corpus[i], cfg.r_c, cfg.n_contacts, child_seed(cfg.seed, 100000 + i));
    reps[i] = compute_representation(corpus[i], frames);
  });
  const ChannelStats temporal_stats = compute_temporal_channel_stats(reps);

  const int copies = cfg.augment ? cfg.augment_copies : 1;
  const int motion_copies =
      cfg.augment ? (cfg.motion_copies > 0 ? cfg.motion_copies : copies) : 1;
  std::vector<Eigen::VectorXd> motion_set, spatial_set, temporal_set;
  Rng pick_rng(child_seed(cfg.seed, 7));
  for (size_t i = 0; i < reps.size(); ++i) {
    for (int c = 0; c < std::max(copies, motion_copies); ++c) {
      const GeneOHRep rep =
          (cfg.augment && c > 0)
              ? random_rotation_augment(reps[i], child_seed(cfg.seed, 200000 + i * 64 + c))
              : reps[i];
      const InstanceStats stats = compute_instance_stats(rep);
      if (c < motion_copies)
        motion_set.push_back(normalize_traj_vector(flatten_traj(rep.traj), stats));
      if (c >= copies) continue;
      const int N = rep.spatial.num_points();
      for (int s = 0; s < std::min(cfg.spatial_points_per_clip, N); ++s) {
        const int point = static_cast<int>(pick_rng.raw() % N);
        spatial_set.push_back(
            normalize_offset_vector(flatten_spatial_offsets(rep.spatial, point), stats, point));
        temporal_set.push_back(normalize_temporal_vector(
            flatten_temporal_point(rep.temporal, point), temporal_stats));
      }
    }
  }

  TrainConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.steps = cfg.steps;
  tc.learning_rate = cfg.learning_rate;

  TrainedModels out;
  tc.seed = child_seed(cfg.seed, 11);
  tc.steps = cfg.motion_steps > 0 ? cfg.motion_steps : cfg.steps;
  tc.batch_size = cfg.motion_batch > 0 ? cfg.motion_batch : cfg.batch_size;
  log(LogLevel::Info, "training motion denoiser on " + std::to_string(motion_set.size()) +
                          " samples");
  TrainResult motion = train_denoiser(motion_set, tc, schedule);
  tc.steps = cfg.steps;
  tc.batch_size = cfg.batch_size;
  tc.seed = child_seed(cfg.seed, 12);
  log(LogLevel::Info, "training spatial denoiser on " + std::to_string(spatial_set.size()) +
                          " samples");
  TrainResult spatial = train_denoiser(spatial_set, tc, schedule);
  tc.seed = child_seed(cfg.seed, 13);
  log(LogLevel::Info, "training temporal denoiser on " + std::to_string(temporal_set.size()) +
                          " samples");
  TrainResult temporal = train_denoiser(temporal_set, tc, schedule);

  out.models.motion = std::move(motion.model);
  out.models.spatial = std::move(spatial.model);
  out.models.temporal.model = std::move(temporal.model);
  out.models.temporal.stats = temporal_stats;
  out.motion_loss = std::move(motion.loss_curve);
  out.spatial_loss = std::move(spatial.loss_curve);
  out.temporal_loss = std::move(temporal.loss_curve);
  return out;
}

inline void save_models(TrainedModels& trained, const NoiseSchedule& schedule,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_checkpoint(pack_model(trained.models.motion, schedule), dir / "model_motion.gohd");
  save_checkpoint(pack_model(trained.models.spatial, schedule), dir / "model_spatial.gohd");
  save_checkpoint(pack_model(trained.models.temporal.model, schedule,
                             {{"norm.mu", trained.models.temporal.stats.mu},
                              {"norm.sigma", trained.models.temporal.stats.sigma}}),
                  dir / "model_temporal.gohd");
  json losses;
  losses["motion"] = trained.motion_loss;
  losses["spatial"] = trained.spatial_loss;
  losses["temporal"] = trained.temporal_loss;
  atomic_write(dir / "losses.json", losses.dump());
}

inline PipelineModels load_models(const std::filesystem::path& dir) {
  PipelineModels models;
  models.motion = unpack_model(load_checkpoint(dir / "model_motion.gohd"));
  models.spatial = unpack_model(load_checkpoint(dir / "model_spatial.gohd"));
  const Checkpoint temporal = load_checkpoint(dir / "model_temporal.gohd");
  models.temporal.model = unpack_model(temporal);
  models.temporal.stats.mu = temporal.get_vector("norm.mu");
  models.temporal.stats.sigma = temporal.get_vector("norm.sigma");
  return models;
}

inline void cmd_train(const TrainCmdConfig& cfg) {
  const auto files = corpus_files(cfg.in);
  std::vector<HOISequence> corpus(files.size());
  parallel_for(static_cast<int>(files.size()), cfg.jobs,
               [&](int i) { corpus[i] = load_sequence(files[i]); });
  const NoiseSchedule schedule = build_linear_schedule();
  TrainedModels trained = train_models(corpus, cfg, schedule);
  save_models(trained, schedule, cfg.out);
}

// ---------------------------------------------------------------------------

struct DenoiseCmdConfig {
  std::filesystem::path in;
  std::filesystem::path models;
  std::filesystem::path out;
  StageConfig stage;
  int num_samples = 1;
  std::string select = "first";  // or "closest": nearest to the noisy input
  std::uint64_t seed = 0;
  double r_c = 0.005;
  int n_contacts = 128;
  int jobs = 1;
};

inline double trajectory_mpjpe(const std::vector<JointMat>& a, const std::vector<JointMat>& b) {
  double acc = 0.0;
  for (size_t k = 0; k < a.size(); ++k)
    for (int j = 0; j < kNumJoints; ++j)
      acc += (Vec3(a[k].row(j)) - Vec3(b[k].row(j))).norm();
  return acc / (a.size() * kNumJoints) * 1000.0;
}

inline DenoiseResult denoise_with_selection(const HOISequence& noisy,
                                            const PipelineModels& models,
                                            const DenoiseCmdConfig& cfg,
                                            const NoiseSchedule& schedule,
                                            std::uint64_t clip_seed) {
  if (cfg.num_samples <= 1)
    return denoise_sequence(noisy, models, cfg.stage, schedule, clip_seed, cfg.r_c,
                            cfg.n_contacts);
  DenoiseResult best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int s = 0; s < cfg.num_samples; ++s) {
    DenoiseResult r = denoise_sequence(noisy, models, cfg.stage, schedule,
                                       child_seed(clip_seed, s), cfg.r_c, cfg.n_contacts);
    const double dist = cfg.select == "closest"
                            ? trajectory_mpjpe(r.final_keypoints, noisy.keypoints)
                            : static_cast<double>(s);
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(r);
    }
    if (cfg.select != "closest") break;
  }
  return best;
}

inline void cmd_denoise(const DenoiseCmdConfig& cfg) {
  if (cfg.select != "first" && cfg.select != "closest")
    throw InvalidInputError("denoise: select must be first or closest");
  std::filesystem::create_directories(cfg.out);
  const PipelineModels models = load_models(cfg.models);
  const NoiseSchedule schedule = build_linear_schedule();
  const auto files = corpus_files(cfg.in);
  parallel_for(static_cast<int>(files.size()), cfg.jobs, [&](int i) {
    const HOISequence noisy = load_sequence(files[i]);
    const DenoiseResult r =
        denoise_with_selection(noisy, models, cfg, schedule, child_seed(cfg.seed, i));
    save_sequence(r.to_sequence(noisy), cfg.out / files[i].filename());
    const std::string stem = files[i].stem().string();
    save_keypoints_binary(r.stage1, cfg.out / (stem + ".stage1.bin"));
    save_keypoints_binary(r.stage2, cfg.out / (stem + ".stage2.bin"));
    save_keypoints_binary(r.stage3, cfg.out / (stem + ".stage3.bin"));
    log(LogLevel::Info, "denoised " + files[i].filename().string());
  });
  std::filesystem::copy_file(cfg.in / "manifest.json", cfg.out / "manifest.json",
                             std::filesystem::copy_options::overwrite_existing);
}

// ---------------------------------------------------------------------------

struct EvalConfig {
  std::filesystem::path pred;
  std::filesystem::path gt;  // optional; empty disables reference metrics
  std::filesystem::path out;
  double r_c = 0.005;
  int n_contacts = 128;
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline json eval_corpus(const EvalConfig& cfg) {
  const auto pred_files = corpus_files(cfg.pred);
  const bool has_gt = !cfg.gt.empty();
  std::vector<json> rows(pred_files.size());
  parallel_for(static_cast<int>(pred_files.size()), cfg.jobs, [&](int i) {
    const HOISequence pred = load_sequence(pred_files[i]);
    std::optional<HOISequence> gt;
    if (has_gt) gt = load_sequence(cfg.gt / pred_files[i].filename());
    const HOISequence& contact_src = gt ? *gt : pred;
    const ContactFrameSet contacts = extract_generalized_contact_points(
        contact_src, cfg.r_c, cfg.n_contacts, child_seed(cfg.seed, i));
    const MetricsReport r = evaluate_sequence(pred, gt ? &*gt : nullptr, contacts);
    rows[i] = to_json(r);
    rows[i]["clip"] = pred_files[i].filename().string();
  });
  json out;
  out["rows"] = rows;
  json summary;
  for (const char* key : {"mpjpe", "mpvpe", "contact_iou", "intersection_volume",
                          "penetration_depth", "proximity_error", "motion_consistency"}) {
    std::vector<double> vals;
    for (const auto& row : rows)
      if (row.contains(key)) vals.push_back(row.at(key).get<double>());
    if (!vals.empty()) summary[std::string("median_") + key] = median(vals);
  }
  out["summary"] = std::move(summary);
  return out;
}

inline void cmd_eval(const EvalConfig& cfg) {
  atomic_write(cfg.out, eval_corpus(cfg).dump(2));
}

// ---------------------------------------------------------------------------

struct ExportConfig {
  std::filesystem::path in;   // one clip JSON
  std::filesystem::path out;  // prefix (obj) or file (bin)
  std::string format = "obj";
  double surface_density = 400.0;
};

inline void cmd_export(const ExportConfig& cfg) {
  const HOISequence seq = load_sequence(cfg.in);
  if (cfg.format == "obj") {
    for (int k = 0; k < seq.frame_count; ++k) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "_%04d.obj", k);
      save_obj_frame(seq, k, cfg.surface_density, cfg.out.string() + suffix);
    }
  } else if (cfg.format == "bin") {
    save_keypoints_binary(seq.keypoints, cfg.out);
  } else {
    throw InvalidInputError("export: format must be obj or bin");
  }
}

}  // namespace geneoh
