#pragma once

#include <vector>

#include "geneoh/contacts.hpp"

namespace geneoh {

// Canonicalized hand trajectory: per frame, J_bar = R_k^T (J - t_k).
struct CanonHandTraj {
  std::vector<JointMat> frames;  // [K] x 21 x 3
  int size() const { return static_cast<int>(frames.size()); }
};

// Per contact point, per frame: canonical position, canonical normal and the
// 21 canonical hand offsets (69 channels).
struct SpatialPoint {
  Vec3 position;
  Vec3 normal;
  JointMat offsets;  // R_k^T (h - o) per keypoint
};
struct SpatialRel {
  std::vector<std::vector<SpatialPoint>> frames;  // [K][N_o]
  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_points() const { return frames.empty() ? 0 : static_cast<int>(frames[0].size()); }
};

// Per contact point, per transition: canonical object velocity plus per
// keypoint the distance, canonical relative velocity and the two damped
// velocity magnitudes (129 channels).
struct TemporalPoint {
  Vec3 v_obj;                                  // R_k^T (o_{k+1} - o_k)
  Eigen::Matrix<double, kNumJoints, 1> dist;   // ||h_k - o_k||
  JointMat v_rel;                              // R_k^T ((h_{k+1}-h_k) - (o_{k+1}-o_k))
  Eigen::Matrix<double, kNumJoints, 1> e_par;  // exp(-kappa d) k_a ||v_par||
  Eigen::Matrix<double, kNumJoints, 1> e_perp; // exp(-kappa d) k_b ||v_perp||
};
struct TemporalRel {
  std::vector<std::vector<TemporalPoint>> transitions;  // [K-1][N_o]
  int num_transitions() const { return static_cast<int>(transitions.size()); }
  int num_points() const {
    return transitions.empty() ? 0 : static_cast<int>(transitions[0].size());
  }
};

struct RepHyperparams {
  double kappa = 100.0;  // 1/m, exponential distance constant
  double k_a = 1.0;
  double k_b = 1.0;
};

inline constexpr int kSpatialChannels = 69;
inline constexpr int kTemporalChannels = 3 + kNumJoints * 6;  // 129

struct GeneOHRep {
  CanonHandTraj traj;
  SpatialRel spatial;
  TemporalRel temporal;
  ContactFrameSet frames;
  RepHyperparams hyper;
};

// ---------------------------------------------------------------------------

inline CanonHandTraj canonicalize_hand_trajectory(const std::vector<JointMat>& J,
                                                  const ContactFrameSet& frames) {
  if (static_cast<int>(J.size()) != frames.num_frames())
    throw ShapeError("canonicalize: frame counts disagree");
  CanonHandTraj out;
  out.frames.resize(J.size());
  for (size_t k = 0; k < J.size(); ++k) {
    const Mat3 Rt = frames.rotation[k].transpose();
    for (int j = 0; j < kNumJoints; ++j)
      out.frames[k].row(j) = Rt * (Vec3(J[k].row(j)) - frames.translation[k]);
  }
  return out;
}

inline std::vector<JointMat> decanonicalize_hand_trajectory(const CanonHandTraj& traj,
                                                            const ContactFrameSet& frames) {
  if (traj.size() != frames.num_frames())
    throw ShapeError("decanonicalize: frame counts disagree");
  std::vector<JointMat> out(traj.size());
  for (int k = 0; k < traj.size(); ++k) {
    for (int j = 0; j < kNumJoints; ++j)
      out[k].row(j) = frames.rotation[k] * Vec3(traj.frames[k].row(j)) + frames.translation[k];
  }
  return out;
}

inline SpatialRel compute_spatial_relations(const std::vector<JointMat>& J,
                                            const ContactFrameSet& frames) {
  const int K = frames.num_frames();
  const int N = frames.num_points();
  if (static_cast<int>(J.size()) != K)
    throw ShapeError("compute_spatial_relations: frame counts disagree");
  SpatialRel rel;
  rel.frames.assign(K, std::vector<SpatialPoint>(N));
  for (int k = 0; k < K; ++k) {
    const Mat3 Rt = frames.rotation[k].transpose();
    for (int i = 0; i < N; ++i) {
      SpatialPoint& s = rel.frames[k][i];
      const Vec3& o = frames.points[k][i];
      s.position = Rt * (o - frames.translation[k]);
      s.normal = Rt * frames.normals[k][i];
      for (int j = 0; j < kNumJoints; ++j) s.offsets.row(j) = Rt * (Vec3(J[k].row(j)) - o);
    }
  }
  return rel;
}

inline TemporalRel compute_temporal_relations(const std::vector<JointMat>& J,
                                              const ContactFrameSet& frames,
                                              const RepHyperparams& hyper = {}) {
  const int K = frames.num_frames();
  const int N = frames.num_points();
  if (static_cast<int>(J.size()) != K)
    throw ShapeError("compute_temporal_relations: frame counts disagree");
  if (K < 2) throw InvalidInputError("compute_temporal_relations: needs at least 2 frames");
  TemporalRel rel;
  rel.transitions.assign(K - 1, std::vector<TemporalPoint>(N));
  for (int k = 0; k + 1 < K; ++k) {
    const Mat3 Rt = frames.rotation[k].transpose();
    for (int i = 0; i < N; ++i) {
      TemporalPoint& t = rel.transitions[k][i];
      const Vec3& o = frames.points[k][i];
      const Vec3 vo = frames.points[k + 1][i] - o;
      const Vec3& n = frames.normals[k][i];
      t.v_obj = Rt * vo;
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 h = J[k].row(j);
        const Vec3 vh = Vec3(J[k + 1].row(j)) - h;
        const Vec3 v = vh - vo;
        const double d = (h - o).norm();
        const double un = v.dot(n);
        const Vec3 v_perp = un * n;
        const Vec3 v_par = v - v_perp;
        const double damp = std::exp(-hyper.kappa * d);
        t.dist[j] = d;
        t.v_rel.row(j) = Rt * v;
        t.e_par[j] = damp * hyper.k_a * v_par.norm();
        t.e_perp[j] = damp * hyper.k_b * std::abs(un);
      }
    }
  }
  return rel;
}

// Average the per-contact-point hypotheses back into a world trajectory:
// J_k[j] = mean_i (R_k * offset_{k,i,j} + o_{k,i}).
inline std::vector<JointMat> decode_trajectory_from_spatial(const SpatialRel& S,
                                                            const ContactFrameSet& frames) {
  const int K = frames.num_frames();
  const int N = frames.num_points();
  if (S.num_frames() != K || S.num_points() != N)
    throw ShapeError("decode_trajectory_from_spatial: shapes disagree");
  std::vector<JointMat> out(K, JointMat::Zero());
  for (int k = 0; k < K; ++k) {
    const Mat3& R = frames.rotation[k];
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < kNumJoints; ++j)
        out[k].row(j) += R * Vec3(S.frames[k][i].offsets.row(j)) + frames.points[k][i];
    out[k] /= N;
  }
  return out;
}

// Forward Euler integration of the relative velocities: per contact point and
// keypoint, offset_{k+1} = offset_k + R_k * v_rel_{k}. Returns world offsets
// (h - o) indexed [K][N_o] as 21x3 blocks.
inline std::vector<std::vector<JointMat>> integrate_temporal_to_offsets(
    const TemporalRel& T, const ContactFrameSet& frames,
    const std::vector<JointMat>& first_frame_offsets) {
  const int K = frames.num_frames();
  const int N = frames.num_points();
  if (T.num_transitions() != K - 1 || T.num_points() != N ||
      static_cast<int>(first_frame_offsets.size()) != N)
    throw ShapeError("integrate_temporal_to_offsets: shapes disagree");
  std::vector<std::vector<JointMat>> out(K, std::vector<JointMat>(N));
  out[0] = first_frame_offsets;
  for (int k = 0; k + 1 < K; ++k) {
    const Mat3& R = frames.rotation[k];
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < kNumJoints; ++j)
        out[k + 1][i].row(j) =
            Vec3(out[k][i].row(j)) + R * Vec3(T.transitions[k][i].v_rel.row(j));
  }
  return out;
}

inline GeneOHRep compute_representation(const HOISequence& seq, const ContactFrameSet& frames,
                                        const RepHyperparams& hyper = {}) {
  GeneOHRep rep;
  rep.frames = frames;
  rep.hyper = hyper;
  rep.traj = canonicalize_hand_trajectory(seq.keypoints, frames);
  rep.spatial = compute_spatial_relations(seq.keypoints, frames);
  rep.temporal = compute_temporal_relations(seq.keypoints, frames, hyper);
  return rep;
}

// Train-time augmentation: one rotation applied to every canonical vector
// block. Scalar channels (d, e) are norms and dot products of the rotated
// vectors, so they stay untouched.
inline GeneOHRep random_rotation_augment(const GeneOHRep& rep, std::uint64_t seed) {
  Rng rng(seed);
  const Mat3 R = random_rotation(rng);
  GeneOHRep out = rep;
  for (auto& f : out.traj.frames)
    for (int j = 0; j < kNumJoints; ++j) f.row(j) = R * Vec3(f.row(j));
  for (auto& frame : out.spatial.frames)
    for (auto& s : frame) {
      s.position = R * s.position;
      s.normal = R * s.normal;
      for (int j = 0; j < kNumJoints; ++j) s.offsets.row(j) = R * Vec3(s.offsets.row(j));
    }
  for (auto& tr : out.temporal.transitions)
    for (auto& t : tr) {
      t.v_obj = R * t.v_obj;
      for (int j = 0; j < kNumJoints; ++j) t.v_rel.row(j) = R * Vec3(t.v_rel.row(j));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Per-instance normalization (J_bar), per-contact-point normalization (spatial
// offsets) and corpus-level per-channel normalization (temporal channels).

struct InstanceStats {
  Vec3 mu_traj = Vec3::Zero();
  Vec3 sigma_traj = Vec3::Ones();
  std::vector<Vec3> mu_offset;     // per contact point
  std::vector<Vec3> sigma_offset;  // per contact point
};

inline constexpr double kSigmaFloor = 1e-6;

inline InstanceStats compute_instance_stats(const GeneOHRep& rep) {
  InstanceStats st;
  const int K = rep.traj.size();
  Vec3 mean = Vec3::Zero(), sq = Vec3::Zero();
  const double n = static_cast<double>(K) * kNumJoints;
  for (const auto& f : rep.traj.frames)
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 p = f.row(j);
      mean += p;
      sq += p.cwiseProduct(p);
    }
  mean /= n;
  st.mu_traj = mean;
  st.sigma_traj =
      ((sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0)).cwiseSqrt().cwiseMax(kSigmaFloor);

  const int N = rep.spatial.num_points();
  st.mu_offset.assign(N, Vec3::Zero());
  st.sigma_offset.assign(N, Vec3::Ones());
  const double m = static_cast<double>(rep.spatial.num_frames()) * kNumJoints;
  for (int i = 0; i < N; ++i) {
    Vec3 mu = Vec3::Zero(), s2 = Vec3::Zero();
    for (const auto& frame : rep.spatial.frames)
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 o = frame[i].offsets.row(j);
        mu += o;
        s2 += o.cwiseProduct(o);
      }
    mu /= m;
    st.mu_offset[i] = mu;
    st.sigma_offset[i] =
        ((s2 / m - mu.cwiseProduct(mu)).cwiseMax(0.0)).cwiseSqrt().cwiseMax(kSigmaFloor);
  }
  return st;
}

// Flatten helpers used by the denoisers. Trajectory: frame-major, joint xyz.
inline Eigen::VectorXd flatten_traj(const CanonHandTraj& traj) {
  const int K = traj.size();
  Eigen::VectorXd v(K * kNumJoints * 3);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c) v[(k * kNumJoints + j) * 3 + c] = traj.frames[k](j, c);
  return v;
}

inline CanonHandTraj unflatten_traj(const Eigen::VectorXd& v, int K) {
  CanonHandTraj traj;
  traj.frames.resize(K);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c) traj.frames[k](j, c) = v[(k * kNumJoints + j) * 3 + c];
  return traj;
}

// Spatial offsets of one contact point across frames: [K * 63].
inline Eigen::VectorXd flatten_spatial_offsets(const SpatialRel& S, int point) {
  const int K = S.num_frames();
  Eigen::VectorXd v(K * kNumJoints * 3);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c)
        v[(k * kNumJoints + j) * 3 + c] = S.frames[k][point].offsets(j, c);
  return v;
}

inline void unflatten_spatial_offsets(const Eigen::VectorXd& v, SpatialRel& S, int point) {
  const int K = S.num_frames();
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c)
        S.frames[k][point].offsets(j, c) = v[(k * kNumJoints + j) * 3 + c];
}

// Temporal channels of one contact point across transitions: [(K-1) * 129].
// Channel order per transition: v_obj(3), then per joint d, v_rel(3), e_par,
// e_perp.
inline Eigen::VectorXd flatten_temporal_point(const TemporalRel& T, int point) {
  const int M = T.num_transitions();
  Eigen::VectorXd v(M * kTemporalChannels);
  for (int k = 0; k < M; ++k) {
    const TemporalPoint& t = T.transitions[k][point];
    double* p = v.data() + k * kTemporalChannels;
    p[0] = t.v_obj.x();
    p[1] = t.v_obj.y();
    p[2] = t.v_obj.z();
    for (int j = 0; j < kNumJoints; ++j) {
      double* q = p + 3 + j * 6;
      q[0] = t.dist[j];
      q[1] = t.v_rel(j, 0);
      q[2] = t.v_rel(j, 1);
      q[3] = t.v_rel(j, 2);
      q[4] = t.e_par[j];
      q[5] = t.e_perp[j];
    }
  }
  return v;
}

inline void unflatten_temporal_point(const Eigen::VectorXd& v, TemporalRel& T, int point) {
  const int M = T.num_transitions();
  for (int k = 0; k < M; ++k) {
    TemporalPoint& t = T.transitions[k][point];
    const double* p = v.data() + k * kTemporalChannels;
    t.v_obj = Vec3(p[0], p[1], p[2]);
    for (int j = 0; j < kNumJoints; ++j) {
      const double* q = p + 3 + j * 6;
      t.dist[j] = q[0];
      t.v_rel.row(j) = Vec3(q[1], q[2], q[3]);
      t.e_par[j] = q[4];
      t.e_perp[j] = q[5];
    }
  }
}

// Normalize / denormalize a flattened trajectory with instance stats.
inline Eigen::VectorXd normalize_traj_vector(const Eigen::VectorXd& v, const InstanceStats& st) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const int c = i % 3;
    out[i] = (v[i] - st.mu_traj[c]) / st.sigma_traj[c];
  }
  return out;
}
inline Eigen::VectorXd denormalize_traj_vector(const Eigen::VectorXd& v, const InstanceStats& st) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const int c = i % 3;
    out[i] = v[i] * st.sigma_traj[c] + st.mu_traj[c];
  }
  return out;
}

inline Eigen::VectorXd normalize_offset_vector(const Eigen::VectorXd& v, const InstanceStats& st,
                                               int point) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const int c = i % 3;
    out[i] = (v[i] - st.mu_offset[point][c]) / st.sigma_offset[point][c];
  }
  return out;
}
inline Eigen::VectorXd denormalize_offset_vector(const Eigen::VectorXd& v, const InstanceStats& st,
                                                 int point) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const int c = i % 3;
    out[i] = v[i] * st.sigma_offset[point][c] + st.mu_offset[point][c];
  }
  return out;
}

// Corpus-level per-channel stats for the 129 temporal channels.
struct ChannelStats {
  Eigen::VectorXd mu;     // [129]
  Eigen::VectorXd sigma;  // [129], floored
};

inline Eigen::VectorXd normalize_temporal_vector(const Eigen::VectorXd& v,
                                                 const ChannelStats& st) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const int c = i % kTemporalChannels;
    out[i] = (v[i] - st.mu[c]) / st.sigma[c];
  }
  return out;
}
inline Eigen::VectorXd denormalize_temporal_vector(const Eigen::VectorXd& v,
                                                   const ChannelStats& st) {
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const int c = i % kTemporalChannels;
    out[i] = v[i] * st.sigma[c] + st.mu[c];
  }
  return out;
}

}  // namespace geneoh
