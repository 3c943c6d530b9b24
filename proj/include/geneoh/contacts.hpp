#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "geneoh/sequence.hpp"

namespace geneoh {

// Generalized contact points: a fixed set of object-surface material points
// tracked through every frame by the object pose, together with the per-frame
// canonicalization pose (R_k, t_k). t_k is the centroid of the posed points,
// R_k the object rotation.
struct ContactFrameSet {
  std::vector<int> rest_indices;         // into ObjectShape::samples
  std::vector<Vec3> rest_points;
  std::vector<Vec3> rest_normals;
  std::vector<std::vector<Vec3>> points;   // [K][N_o], world frame
  std::vector<std::vector<Vec3>> normals;  // [K][N_o], world frame, unit
  std::vector<Mat3> rotation;              // [K] R_k
  std::vector<Vec3> translation;           // [K] t_k = centroid of points[k]

  int num_points() const { return static_cast<int>(rest_points.size()); }
  int num_frames() const { return static_cast<int>(points.size()); }

  // recompute world-frame points and poses from the rest set
  void pose_frames(const std::vector<ObjectPose>& poses) {
    const int K = static_cast<int>(poses.size());
    const int N = num_points();
    points.assign(K, std::vector<Vec3>(N));
    normals.assign(K, std::vector<Vec3>(N));
    rotation.resize(K);
    translation.resize(K);
    for (int k = 0; k < K; ++k) {
      Vec3 centroid = Vec3::Zero();
      for (int i = 0; i < N; ++i) {
        points[k][i] = poses[k].to_world(rest_points[i]);
        normals[k][i] = poses[k].rotation * rest_normals[i];
        centroid += points[k][i];
      }
      rotation[k] = poses[k].matrix();
      translation[k] = centroid / N;
    }
  }
};

namespace detail {

// farthest-point sampling over candidate indices, seeded start
inline std::vector<int> farthest_point_sample(const std::vector<Vec3>& pts,
                                              const std::vector<int>& candidates, int n,
                                              Rng& rng) {
  std::vector<int> chosen;
  chosen.reserve(n);
  std::vector<double> best_d(candidates.size(), std::numeric_limits<double>::infinity());
  int current = static_cast<int>(rng.raw() % candidates.size());
  chosen.push_back(candidates[current]);
  for (int step = 1; step < n; ++step) {
    const Vec3& last = pts[chosen.back()];
    int far_idx = 0;
    double far_d = -1.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
      best_d[i] = std::min(best_d[i], (pts[candidates[i]] - last).squaredNorm());
      if (best_d[i] > far_d) {
        far_d = best_d[i];
        far_idx = static_cast<int>(i);
      }
    }
    chosen.push_back(candidates[far_idx]);
  }
  return chosen;
}

}  // namespace detail

// Minimum distance of each rest-frame object sample to the hand trajectory,
// computed by transforming the hand into the object rest frame per frame.
inline std::vector<double> sample_min_distances(const HOISequence& seq) {
  const int N = static_cast<int>(seq.object.samples.size());
  std::vector<double> dmin(N, std::numeric_limits<double>::infinity());
  for (int k = 0; k < seq.frame_count; ++k) {
    std::array<Vec3, kNumJoints> hand_rest;
    for (int j = 0; j < kNumJoints; ++j)
      hand_rest[j] = seq.object_poses[k].to_rest(seq.keypoints[k].row(j));
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < kNumJoints; ++j)
        dmin[i] = std::min(dmin[i], (seq.object.samples[i] - hand_rest[j]).norm());
    }
  }
  return dmin;
}

// Select N_o generalized contact points: surface samples within r_c of the
// hand trajectory, farthest-point sampled; when fewer than N_o qualify, fall
// back to the N_o samples globally nearest to the trajectory.
inline ContactFrameSet extract_generalized_contact_points(const HOISequence& seq,
                                                          double r_c = 0.005, int n_points = 128,
                                                          std::uint64_t seed = 0) {
  seq.validate();
  const int N = static_cast<int>(seq.object.samples.size());
  if (N == 0) throw InvalidInputError("extract_generalized_contact_points: object has no samples");

  const std::vector<double> dmin = sample_min_distances(seq);
  std::vector<int> candidates;
  for (int i = 0; i < N; ++i)
    if (dmin[i] <= r_c) candidates.push_back(i);

  std::vector<int> chosen;
  if (static_cast<int>(candidates.size()) >= n_points) {
    Rng rng(seed);
    chosen = detail::farthest_point_sample(seq.object.samples, candidates, n_points, rng);
  } else {
    // adaptive-radius fallback: nearest n_points samples, ties by index
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dmin[a] < dmin[b]; });
    chosen.assign(order.begin(), order.begin() + std::min(n_points, N));
  }

  ContactFrameSet set;
  set.rest_indices = chosen;
  for (int i : chosen) {
    set.rest_points.push_back(seq.object.samples[i]);
    set.rest_normals.push_back(seq.object.sample_normals[i]);
  }
  set.pose_frames(seq.object_poses);
  return set;
}

}  // namespace geneoh
