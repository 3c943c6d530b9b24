#pragma once

#include "geneoh/diffusion.hpp"
#include "geneoh/representation.hpp"
#include "geneoh/sequence.hpp"

namespace geneoh {

struct StageConfig {
  int t_motion = 400;
  int t_spatial = 200;
  int t_temporal = 100;
  // Independent reverse-chain samples averaged per stage. The mean over
  // samples estimates the posterior expectation of the clean signal; a single
  // sample carries the full generative variance of the reverse walk.
  int motion_samples = 32;
  int spatial_samples = 1;
  int temporal_samples = 1;
  double temporal_lr = 1e-2;
  int temporal_iters = 300;
  // Trust-region weight tying the temporal refinement to its initialization;
  // the denoised statistics steer local corrections instead of re-posing the
  // whole trajectory.
  double temporal_anchor = 1e4;
  double fitting_lr = 1e-2;
  int fitting_iters = 200;
  double lambda_recon = 1.0;
  double lambda_reg = 1.0;

  void validate(const NoiseSchedule& s) const {
    if (t_motion < 0 || t_motion > s.t_max || t_spatial < 0 || t_spatial > s.t_max ||
        t_temporal < 0 || t_temporal > s.t_max)
      throw InvalidInputError("StageConfig: stage steps outside schedule range");
    if (temporal_iters < 0 || fitting_iters < 0)
      throw InvalidInputError("StageConfig: iteration counts must be >= 0");
    if (motion_samples < 1 || spatial_samples < 1 || temporal_samples < 1)
      throw InvalidInputError("StageConfig: sample counts must be >= 1");
  }
};

// Temporal-channel normalization travels with the temporal model (corpus-level
// stats computed at training time).
struct TemporalModel {
  DenoiserModel model;
  ChannelStats stats;
};

// Coordinate-wise median across reverse-chain samples (matrix columns): the
// location estimate stays finite even when a few chains wander off-manifold.
inline Eigen::VectorXd columnwise_median(const Eigen::MatrixXd& samples) {
  Eigen::VectorXd out(samples.rows());
  std::vector<double> row(samples.cols());
  for (int i = 0; i < samples.rows(); ++i) {
    for (int j = 0; j < samples.cols(); ++j) row[j] = samples(i, j);
    const std::size_t mid = row.size() / 2;
    std::nth_element(row.begin(), row.begin() + mid, row.end());
    double m = row[mid];
    if (row.size() % 2 == 0) {
      const double lo = *std::max_element(row.begin(), row.begin() + mid);
      m = 0.5 * (m + lo);
    }
    out[i] = m;
  }
  return out;
}

// Refresh S and T of a representation from a new world trajectory; the contact
// frames never change (object poses are trusted).
inline void update_representation(GeneOHRep& rep, const std::vector<JointMat>& J) {
  rep.traj = canonicalize_hand_trajectory(J, rep.frames);
  rep.spatial = compute_spatial_relations(J, rep.frames);
  rep.temporal = compute_temporal_relations(J, rep.frames, rep.hyper);
}

// Stage 1, MotionDiff: denoise the canonicalized trajectory in its
// per-instance normalized space, then de-canonicalize.
inline std::vector<JointMat> run_motion_diff(GeneOHRep& rep, const DenoiserModel& model,
                                             const StageConfig& cfg, const NoiseSchedule& schedule,
                                             Rng& rng) {
  const Eigen::VectorXd flat = flatten_traj(rep.traj);
  if (model.dim != flat.size())
    throw ShapeError("run_motion_diff: model dimension disagrees with trajectory");
  const InstanceStats stats = compute_instance_stats(rep);
  const Eigen::VectorXd normalized = normalize_traj_vector(flat, stats);
  const Eigen::MatrixXd batch = normalized.replicate(1, cfg.motion_samples);
  const Eigen::VectorXd denoised = columnwise_median(denoise_via_diffusion(
      batch, cfg.t_motion, epsilon_from_model(model, schedule), schedule, rng));
  const CanonHandTraj traj = unflatten_traj(denormalize_traj_vector(denoised, stats),
                                            rep.traj.size());
  std::vector<JointMat> J = decanonicalize_hand_trajectory(traj, rep.frames);
  update_representation(rep, J);
  return J;
}

// Stage 2, SpatialDiff: denoise the per-contact-point offset trajectories
// (batched over contact points) and decode by hypothesis averaging.
inline std::vector<JointMat> run_spatial_diff(GeneOHRep& rep, const DenoiserModel& model,
                                              const StageConfig& cfg,
                                              const NoiseSchedule& schedule, Rng& rng) {
  const int N = rep.spatial.num_points();
  const int K = rep.spatial.num_frames();
  const int D = K * kNumJoints * 3;
  if (model.dim != D)
    throw ShapeError("run_spatial_diff: model dimension disagrees with spatial relations");
  const InstanceStats stats = compute_instance_stats(rep);
  const int M = cfg.spatial_samples;
  Eigen::MatrixXd batch(D, N * M);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd col =
        normalize_offset_vector(flatten_spatial_offsets(rep.spatial, i), stats, i);
    for (int m = 0; m < M; ++m) batch.col(i * M + m) = col;
  }
  const Eigen::MatrixXd denoised =
      denoise_via_diffusion(batch, cfg.t_spatial, epsilon_from_model(model, schedule), schedule, rng);
  SpatialRel out = rep.spatial;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd mid = columnwise_median(denoised.middleCols(i * M, M));
    unflatten_spatial_offsets(denormalize_offset_vector(mid, stats, i), out, i);
  }
  std::vector<JointMat> J = decode_trajectory_from_spatial(out, rep.frames);
  update_representation(rep, J);
  return J;
}

struct TemporalOptResult {
  std::vector<JointMat> trajectory;
  std::vector<double> objective_curve;
  bool plateau_warning = false;  // objective failed to decrease over 50 iterations
};

// Squared mismatch between the temporal statistics induced by a candidate
// trajectory and a target T, over d, v_rel, e_par and e_perp, with analytic
// gradients w.r.t. the keypoint coordinates.
inline double temporal_objective(const std::vector<JointMat>& J, const ContactFrameSet& frames,
                                 const TemporalRel& target, const RepHyperparams& hyper,
                                 std::vector<JointMat>* grad_out = nullptr) {
  const int K = frames.num_frames();
  const int N = frames.num_points();
  double obj = 0.0;
  std::vector<JointMat> grad;
  if (grad_out) grad.assign(K, JointMat::Zero());
  for (int k = 0; k + 1 < K; ++k) {
    const Mat3& R = frames.rotation[k];
    for (int i = 0; i < N; ++i) {
      const TemporalPoint& tgt = target.transitions[k][i];
      const Vec3& o = frames.points[k][i];
      const Vec3 vo = frames.points[k + 1][i] - o;
      const Vec3& n = frames.normals[k][i];
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 h = J[k].row(j);
        const Vec3 v = (Vec3(J[k + 1].row(j)) - h) - vo;
        const Vec3 rel = h - o;
        const double d = rel.norm();
        const double un = v.dot(n);
        const Vec3 v_par = v - un * n;
        const double vpar_norm = v_par.norm();
        const double damp = std::exp(-hyper.kappa * d);
        const double e_par = damp * hyper.k_a * vpar_norm;
        const double e_perp = damp * hyper.k_b * std::abs(un);

        const double rd = d - tgt.dist[j];
        const Vec3 rv = R.transpose() * v - Vec3(tgt.v_rel.row(j));
        const double rp = e_par - tgt.e_par[j];
        const double rq = e_perp - tgt.e_perp[j];
        obj += rd * rd + rv.squaredNorm() + rp * rp + rq * rq;
        if (!grad_out) continue;

        Vec3 g_v = 2.0 * (R * rv);  // d/dv of ||R^T v - tgt||^2
        double g_d = 2.0 * rd;
        // e_par = damp * k_a * ||v_par||
        if (vpar_norm > 1e-12) g_v += 2.0 * rp * damp * hyper.k_a * (v_par / vpar_norm);
        g_d += 2.0 * rp * (-hyper.kappa) * e_par;
        // e_perp = damp * k_b * |v . n|
        const double sgn = un >= 0.0 ? 1.0 : -1.0;
        g_v += 2.0 * rq * damp * hyper.k_b * sgn * n;
        g_d += 2.0 * rq * (-hyper.kappa) * e_perp;

        const Vec3 g_h_from_d = d > 1e-12 ? Vec3(g_d * rel / d) : Vec3::Zero();
        grad[k].row(j) += g_h_from_d - g_v;
        grad[k + 1].row(j) += g_v;
      }
    }
  }
  if (grad_out) *grad_out = std::move(grad);
  return obj;
}

// Stage 3, TemporalDiff: denoise T via diffusion, then refine the trajectory
// with Adam so its induced statistics match. Returns the best iterate, so the
// objective never increases.
inline TemporalOptResult run_temporal_diff(GeneOHRep& rep, const TemporalModel& temporal,
                                           const StageConfig& cfg, const NoiseSchedule& schedule,
                                           Rng& rng) {
  const int N = rep.temporal.num_points();
  const int M = rep.temporal.num_transitions();
  const int D = M * kTemporalChannels;
  if (temporal.model.dim != D)
    throw ShapeError("run_temporal_diff: model dimension disagrees with temporal relations");

  const int S = cfg.temporal_samples;
  Eigen::MatrixXd batch(D, N * S);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd col =
        normalize_temporal_vector(flatten_temporal_point(rep.temporal, i), temporal.stats);
    for (int m = 0; m < S; ++m) batch.col(i * S + m) = col;
  }
  const Eigen::MatrixXd denoised = denoise_via_diffusion(
      batch, cfg.t_temporal, epsilon_from_model(temporal.model, schedule), schedule, rng);
  TemporalRel target = rep.temporal;
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd mid = columnwise_median(denoised.middleCols(i * S, S));
    unflatten_temporal_point(denormalize_temporal_vector(mid, temporal.stats), target, i);
  }

  // Adam over the keypoint coordinates, starting at the stage-2 trajectory
  const int K = rep.frames.num_frames();
  std::vector<JointMat> J = decanonicalize_hand_trajectory(rep.traj, rep.frames);
  Eigen::VectorXd x(K * kNumJoints * 3);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c) x[(k * kNumJoints + j) * 3 + c] = J[k](j, c);

  auto unpack = [K](const Eigen::VectorXd& v) {
    std::vector<JointMat> out(K);
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) out[k](j, c) = v[(k * kNumJoints + j) * 3 + c];
    return out;
  };

  TemporalOptResult result;
  AdamVector adam(static_cast<int>(x.size()), cfg.temporal_lr);
  Eigen::VectorXd best_x = x;
  double best_obj = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd x_init = x;
  for (int it = 0; it <= cfg.temporal_iters; ++it) {
    std::vector<JointMat> cur = unpack(x);
    std::vector<JointMat> grad;
    double obj = temporal_objective(cur, rep.frames, target, rep.hyper, &grad);
    obj += cfg.temporal_anchor * (x - x_init).squaredNorm();
    result.objective_curve.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
    if (it == cfg.temporal_iters) break;
    Eigen::VectorXd g(x.size());
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) g[(k * kNumJoints + j) * 3 + c] = grad[k](j, c);
    g += 2.0 * cfg.temporal_anchor * (x - x_init);
    adam.step(x, g);
  }
  if (result.objective_curve.size() > 50 &&
      result.objective_curve.back() >= result.objective_curve.front() - 1e-15)
    result.plateau_warning = true;

  result.trajectory = unpack(best_x);
  update_representation(rep, result.trajectory);
  return result;
}

// ---------------------------------------------------------------------------
// Hand-parameter fitting.

struct FitResult {
  std::vector<HandParams> params;
  double recon_loss = 0.0;  // final, squared millimeters
  double reg_loss = 0.0;
  double initial_grad_norm = 0.0;
  double final_grad_norm = 0.0;
};

namespace detail {

// Rigid Kabsch alignment of the rest-pose wrist+knuckle points onto the target
// keypoints, used to initialize the root.
inline void init_root_from_rigid_fit(const HandSkeleton& skel, const JointMat& target,
                                     HandParams& p) {
  const JointMat rest = forward_kinematics(skel, HandParams{});
  std::vector<int> anchor = {0};
  for (int f = 0; f < kNumFingers; ++f) anchor.push_back(HandSkeleton::joint_index(f, 0));
  Vec3 mu_a = Vec3::Zero(), mu_b = Vec3::Zero();
  for (int j : anchor) {
    mu_a += Vec3(rest.row(j));
    mu_b += Vec3(target.row(j));
  }
  mu_a /= anchor.size();
  mu_b /= anchor.size();
  Mat3 H = Mat3::Zero();
  for (int j : anchor)
    H += (Vec3(rest.row(j)) - mu_a) * (Vec3(target.row(j)) - mu_b).transpose();
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0.0) {
    Mat3 V = svd.matrixV();
    V.col(2) *= -1.0;
    R = V * svd.matrixU().transpose();
  }
  p.root_rot = mat3_to_axis_angle(R);
  p.root_trans = mu_b - R * mu_a;
}

}  // namespace detail

// Joint Adam fit of per-frame hand parameters to a keypoint trajectory.
// Objective: per-frame keypoint MSE in squared millimeters plus the norm and
// temporal-smoothness regularizers on (beta, theta).
inline FitResult fit_hand_parameters(const std::vector<JointMat>& trajectory,
                                     const HandSkeleton& skel, const StageConfig& cfg) {
  const int K = static_cast<int>(trajectory.size());
  if (K < 1) throw InvalidInputError("fit_hand_parameters: empty trajectory");
  constexpr int P = kHandParamDim;
  Eigen::VectorXd x(K * P);
  for (int k = 0; k < K; ++k) {
    HandParams p;
    detail::init_root_from_rigid_fit(skel, trajectory[k], p);
    x.segment<P>(k * P) = p.flatten();
  }

  const double mm2 = 1e6;  // keypoint residuals weighted in millimeters
  auto evaluate = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad, double* recon_out,
                      double* reg_out) {
    double recon = 0.0, reg = 0.0;
    if (grad) grad->setZero();
    std::vector<Eigen::Matrix<double, kThetaDim, 1>> thetas(K);
    for (int k = 0; k < K; ++k) {
      const HandParams p = HandParams::unflatten(v.segment<P>(k * P));
      thetas[k] = p.theta;
      JointMat kp;
      Eigen::Matrix<double, 63, P> jac;
      if (grad) {
        jac = forward_kinematics_jacobian(skel, p, &kp);
      } else {
        kp = forward_kinematics(skel, p);
      }
      Eigen::Matrix<double, 63, 1> resid;
      for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) resid[j * 3 + c] = kp(j, c) - trajectory[k](j, c);
      recon += cfg.lambda_recon * mm2 * resid.squaredNorm() / (63.0 * K);
      if (grad)
        grad->segment<P>(k * P) +=
            cfg.lambda_recon * mm2 * 2.0 / (63.0 * K) * (jac.transpose() * resid);

      // L_reg norm terms
      const double bn = p.beta.norm();
      const double tn = p.theta.norm();
      reg += cfg.lambda_reg * (bn + tn) / K;
      if (grad) {
        if (bn > 1e-12)
          grad->segment<kNumFingers>(k * P + 6 + kThetaDim) +=
              cfg.lambda_reg / K * (p.beta / bn);
        if (tn > 1e-12)
          grad->segment<kThetaDim>(k * P + 6) += cfg.lambda_reg / K * (p.theta / tn);
      }
    }
    // temporal smoothness on theta
    for (int k = 0; k + 1 < K; ++k) {
      const Eigen::Matrix<double, kThetaDim, 1> dt = thetas[k + 1] - thetas[k];
      const double dn = dt.norm();
      reg += cfg.lambda_reg * dn / (K - 1);
      if (grad && dn > 1e-12) {
        grad->segment<kThetaDim>((k + 1) * P + 6) += cfg.lambda_reg / (K - 1) * (dt / dn);
        grad->segment<kThetaDim>(k * P + 6) -= cfg.lambda_reg / (K - 1) * (dt / dn);
      }
    }
    if (recon_out) *recon_out = recon;
    if (reg_out) *reg_out = reg;
    return recon + reg;
  };

  FitResult result;
  Eigen::VectorXd grad(x.size());
  evaluate(x, &grad, nullptr, nullptr);
  result.initial_grad_norm = grad.norm();

  AdamVector adam(static_cast<int>(x.size()), cfg.fitting_lr);
  Eigen::VectorXd best_x = x;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.fitting_iters; ++it) {
    const double obj = evaluate(x, &grad, nullptr, nullptr);
    if (!std::isfinite(obj)) throw std::runtime_error("fit_hand_parameters: loss diverged");
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
    adam.step(x, grad);
  }
  x = best_x;
  evaluate(x, &grad, &result.recon_loss, &result.reg_loss);
  result.final_grad_norm = grad.norm();
  result.params.resize(K);
  for (int k = 0; k < K; ++k) result.params[k] = HandParams::unflatten(x.segment<P>(k * P));
  return result;
}

// ---------------------------------------------------------------------------

struct PipelineModels {
  DenoiserModel motion;
  DenoiserModel spatial;
  TemporalModel temporal;
};

struct DenoiseResult {
  std::vector<JointMat> stage1;
  std::vector<JointMat> stage2;
  std::vector<JointMat> stage3;
  GeneOHRep rep_input;   // snapshot before any stage
  GeneOHRep rep_final;   // after stage 3
  std::vector<HandParams> fitted_params;
  std::vector<JointMat> final_keypoints;  // FK of the fitted parameters
  std::vector<double> temporal_objective_curve;
  FitResult fit;
  HOISequence to_sequence(const HOISequence& input) const {
    HOISequence out = input;
    out.keypoints = final_keypoints;
    out.hand_params = fitted_params;
    return out;
  }
};

// Full progressive denoising cascade over one noisy sequence.
inline DenoiseResult denoise_sequence(const HOISequence& noisy, const PipelineModels& models,
                                      const StageConfig& cfg, const NoiseSchedule& schedule,
                                      std::uint64_t seed, double r_c = 0.005, int n_contacts = 128,
                                      const RepHyperparams& hyper = {}) {
  cfg.validate(schedule);
  noisy.validate();
  const ContactFrameSet frames =
      extract_generalized_contact_points(noisy, r_c, n_contacts, child_seed(seed, 0));
  GeneOHRep rep = compute_representation(noisy, frames, hyper);

  DenoiseResult result;
  result.rep_input = rep;
  Rng rng(child_seed(seed, 1));
  result.stage1 = run_motion_diff(rep, models.motion, cfg, schedule, rng);
  result.stage2 = run_spatial_diff(rep, models.spatial, cfg, schedule, rng);
  TemporalOptResult topt = run_temporal_diff(rep, models.temporal, cfg, schedule, rng);
  result.stage3 = topt.trajectory;
  result.temporal_objective_curve = std::move(topt.objective_curve);
  result.rep_final = rep;

  result.fit = fit_hand_parameters(result.stage3, HandSkeleton::standard(), cfg);
  result.fitted_params = result.fit.params;
  const HandSkeleton skel = HandSkeleton::standard();
  result.final_keypoints.resize(result.stage3.size());
  for (size_t k = 0; k < result.stage3.size(); ++k)
    result.final_keypoints[k] = forward_kinematics(skel, result.fitted_params[k]);
  return result;
}

}  // namespace geneoh
