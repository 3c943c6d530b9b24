#pragma once

#include <optional>

#include "geneoh/contacts.hpp"
#include "geneoh/sequence.hpp"

namespace geneoh {

// All seven evaluation quantities. Reference-based fields stay empty when no
// ground truth is supplied.
struct MetricsReport {
  std::optional<double> mpjpe_mm;
  std::optional<double> mpvpe_mm;
  std::optional<double> contact_iou_pct;
  double intersection_volume_cm3 = 0.0;
  double penetration_depth_mm = 0.0;
  std::optional<double> proximity_error_mm;
  double motion_consistency_mm2 = 0.0;
  bool all_frames_static = false;
};

inline std::pair<double, double> mpjpe_mpvpe(const HOISequence& pred, const HOISequence& gt,
                                             double surface_density = 400.0) {
  if (pred.frame_count != gt.frame_count)
    throw ShapeError("mpjpe_mpvpe: frame counts disagree");
  double joint_err = 0.0;
  for (int k = 0; k < pred.frame_count; ++k)
    for (int j = 0; j < kNumJoints; ++j)
      joint_err += (Vec3(pred.keypoints[k].row(j)) - Vec3(gt.keypoints[k].row(j))).norm();
  const double mpjpe = joint_err / (pred.frame_count * kNumJoints) * 1000.0;

  double vert_err = 0.0;
  std::size_t vert_count = 0;
  if (pred.hand_params && gt.hand_params) {
    const HandSkeleton skel = HandSkeleton::standard();
    for (int k = 0; k < pred.frame_count; ++k) {
      const auto pv = sample_hand_surface(skel, (*pred.hand_params)[k], surface_density);
      const auto gv = sample_hand_surface(skel, (*gt.hand_params)[k], surface_density);
      if (pv.size() != gv.size()) throw ShapeError("mpjpe_mpvpe: surface patterns disagree");
      for (size_t i = 0; i < pv.size(); ++i) vert_err += (pv[i] - gv[i]).norm();
      vert_count += pv.size();
    }
  }
  const double mpvpe = vert_count ? vert_err / vert_count * 1000.0 : mpjpe;
  return {mpjpe, mpvpe};
}

// Binary contact maps over the contact points (nearest keypoint within the
// threshold); IoU of the pred and GT maps pooled over all frames.
inline double contact_iou(const HOISequence& pred, const HOISequence& gt,
                          const ContactFrameSet& contacts, double threshold = 0.002) {
  if (pred.frame_count != gt.frame_count || contacts.num_frames() != pred.frame_count)
    throw ShapeError("contact_iou: frame counts disagree");
  long inter = 0, uni = 0;
  for (int k = 0; k < pred.frame_count; ++k) {
    for (int i = 0; i < contacts.num_points(); ++i) {
      const Vec3& o = contacts.points[k][i];
      double dp = std::numeric_limits<double>::infinity();
      double dg = std::numeric_limits<double>::infinity();
      for (int j = 0; j < kNumJoints; ++j) {
        dp = std::min(dp, (Vec3(pred.keypoints[k].row(j)) - o).norm());
        dg = std::min(dg, (Vec3(gt.keypoints[k].row(j)) - o).norm());
      }
      const bool cp = dp <= threshold, cg = dg <= threshold;
      inter += (cp && cg);
      uni += (cp || cg);
    }
  }
  return uni == 0 ? 100.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

// Volume of { a < 0 } ∩ { b < 0 } inside [lo, hi], estimated by testing both
// signed-distance functions at voxel centers. Units m^3.
template <typename SdfA, typename SdfB>
double voxel_overlap_volume(SdfA&& a, SdfB&& b, const Vec3& lo, const Vec3& hi, double voxel) {
  if (voxel <= 0.0) throw InvalidInputError("voxel_overlap_volume: voxel must be > 0");
  if ((hi - lo).minCoeff() <= 0.0) return 0.0;
  long inside = 0;
  for (double x = lo.x() + voxel / 2; x < hi.x(); x += voxel)
    for (double y = lo.y() + voxel / 2; y < hi.y(); y += voxel)
      for (double z = lo.z() + voxel / 2; z < hi.z(); z += voxel) {
        const Vec3 c(x, y, z);
        if (a(c) < 0.0 && b(c) < 0.0) ++inside;
      }
  return static_cast<double>(inside) * voxel * voxel * voxel;
}

// Solid intersection volume (cm^3, frame-averaged) and per-frame max
// penetration depth of the hand surface (mm, frame-averaged).
inline std::pair<double, double> penetration_metrics(const HOISequence& seq, double voxel = 0.002,
                                                     double surface_density = 400.0) {
  if (!seq.hand_params)
    throw InvalidInputError("penetration_metrics: sequence carries no hand parameters");
  const HandSkeleton skel = HandSkeleton::standard();
  double volume_sum = 0.0;
  double depth_sum = 0.0;
  for (int k = 0; k < seq.frame_count; ++k) {
    const JointMat& kp = seq.keypoints[k];
    const ObjectPose& pose = seq.object_poses[k];

    // penetration depth over the capsule surface pattern
    double depth = 0.0;
    for (const auto& p : sample_hand_surface(skel, (*seq.hand_params)[k], surface_density))
      depth = std::max(depth, -seq.object.rest_sdf(pose.to_rest(p)));
    depth_sum += depth;

    // voxel sweep over the intersection of the two bounding boxes
    Vec3 hand_lo = kp.colwise().minCoeff().transpose();
    Vec3 hand_hi = kp.colwise().maxCoeff().transpose();
    const double max_r = 0.010;
    hand_lo.array() -= max_r;
    hand_hi.array() += max_r;
    const double obr = seq.object.bounding_radius();
    const Vec3 obj_lo = pose.translation.array() - obr;
    const Vec3 obj_hi = pose.translation.array() + obr;
    const Vec3 lo = hand_lo.cwiseMax(obj_lo);
    const Vec3 hi = hand_hi.cwiseMin(obj_hi);
    volume_sum += voxel_overlap_volume(
        [&](const Vec3& c) { return seq.object.rest_sdf(pose.to_rest(c)); },
        [&](const Vec3& c) { return hand_capsule_sdf(skel, kp, c); }, lo, hi, voxel);
  }
  const double iv_cm3 = volume_sum / seq.frame_count * 1e6;
  const double depth_mm = depth_sum / seq.frame_count * 1000.0;
  return {iv_cm3, depth_mm};
}

// Mean absolute difference of keypoint-to-contact-point minimum distances.
inline double proximity_error(const HOISequence& pred, const HOISequence& gt,
                              const ContactFrameSet& contacts) {
  if (pred.frame_count != gt.frame_count || contacts.num_frames() != pred.frame_count)
    throw ShapeError("proximity_error: frame counts disagree");
  double acc = 0.0;
  for (int k = 0; k < pred.frame_count; ++k)
    for (int j = 0; j < kNumJoints; ++j) {
      double dp = std::numeric_limits<double>::infinity();
      double dg = std::numeric_limits<double>::infinity();
      for (int i = 0; i < contacts.num_points(); ++i) {
        dp = std::min(dp, (Vec3(pred.keypoints[k].row(j)) - contacts.points[k][i]).norm());
        dg = std::min(dg, (Vec3(gt.keypoints[k].row(j)) - contacts.points[k][i]).norm());
      }
      acc += std::abs(dp - dg);
    }
  return acc / (pred.frame_count * kNumJoints) * 1000.0;
}

// || exp(-100 d) dh - do ||^2 at the nearest hand-object pair, averaged over
// transitions where the object moves. Units mm^2. Hand points are surface
// samples when parameters are available (a touching hand then reaches d ~ 0);
// otherwise the joint keypoints are used.
inline std::pair<double, bool> motion_consistency(const HOISequence& seq,
                                                  const ContactFrameSet& contacts,
                                                  double static_eps = 1e-4,
                                                  double surface_density = 400.0) {
  if (seq.frame_count < 2) throw InvalidInputError("motion_consistency: needs K >= 2");
  if (contacts.num_frames() != seq.frame_count)
    throw ShapeError("motion_consistency: frame counts disagree");
  std::vector<std::vector<Vec3>> hand(seq.frame_count);
  if (seq.hand_params) {
    const HandSkeleton skel = HandSkeleton::standard();
    for (int k = 0; k < seq.frame_count; ++k)
      hand[k] = sample_hand_surface(skel, (*seq.hand_params)[k], surface_density);
  } else {
    for (int k = 0; k < seq.frame_count; ++k) {
      hand[k].resize(kNumJoints);
      for (int j = 0; j < kNumJoints; ++j) hand[k][j] = seq.keypoints[k].row(j);
    }
  }
  double acc = 0.0;
  int used = 0;
  for (int k = 0; k + 1 < seq.frame_count; ++k) {
    bool moving = false;
    for (int i = 0; i < contacts.num_points() && !moving; ++i)
      moving = (contacts.points[k + 1][i] - contacts.points[k][i]).norm() >= static_eps;
    if (!moving) continue;
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t bj = 0;
    int bi = 0;
    for (std::size_t j = 0; j < hand[k].size(); ++j)
      for (int i = 0; i < contacts.num_points(); ++i) {
        const double d = (hand[k][j] - contacts.points[k][i]).norm();
        if (d < best_d) {
          best_d = d;
          bj = j;
          bi = i;
        }
      }
    const Vec3 dh = hand[k + 1][bj] - hand[k][bj];
    const Vec3 dobj = contacts.points[k + 1][bi] - contacts.points[k][bi];
    acc += (std::exp(-100.0 * best_d) * dh - dobj).squaredNorm();
    ++used;
  }
  if (used == 0) return {0.0, true};
  return {acc / used * 1e6, false};
}

// Full report; pred-only metrics always present, GT metrics when gt given.
inline MetricsReport evaluate_sequence(const HOISequence& pred, const HOISequence* gt,
                                       const ContactFrameSet& contacts) {
  MetricsReport r;
  if (pred.hand_params) {
    auto [iv, depth] = penetration_metrics(pred);
    r.intersection_volume_cm3 = iv;
    r.penetration_depth_mm = depth;
  }
  auto [mc, all_static] = motion_consistency(pred, contacts);
  r.motion_consistency_mm2 = mc;
  r.all_frames_static = all_static;
  if (gt) {
    auto [mpjpe, mpvpe] = mpjpe_mpvpe(pred, *gt);
    r.mpjpe_mm = mpjpe;
    r.mpvpe_mm = mpvpe;
    r.contact_iou_pct = contact_iou(pred, *gt, contacts);
    r.proximity_error_mm = proximity_error(pred, *gt, contacts);
  }
  return r;
}

}  // namespace geneoh
