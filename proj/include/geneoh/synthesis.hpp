#pragma once

#include <algorithm>

#include "geneoh/metrics.hpp"
#include "geneoh/sequence.hpp"

namespace geneoh {

struct SynthesisConfig {
  int frame_count = 30;
  PrimitiveKind kind = PrimitiveKind::Sphere;
  bool random_kind = false;              // overrides kind per seed
  double motion_amplitude = 0.03;        // translation spline amplitude, meters
  double rotation_amplitude = 0.3;       // radians over the clip
  int object_sample_target = 2000;
  double surface_density = 400.0;        // hand-surface samples per meter
  double clearance = 5e-4;               // push-out clearance, meters
};

namespace detail {

inline ObjectShape random_object(PrimitiveKind kind, Rng& rng, int sample_target) {
  std::array<double, 3> dims{};
  switch (kind) {
    case PrimitiveKind::Sphere:
      dims[0] = rng.uniform(0.03, 0.05);
      break;
    case PrimitiveKind::Box:
      for (int i = 0; i < 3; ++i) dims[i] = rng.uniform(0.02, 0.04);
      break;
    case PrimitiveKind::Cylinder:
      dims[0] = rng.uniform(0.02, 0.035);
      dims[1] = rng.uniform(0.025, 0.045);
      break;
    case PrimitiveKind::Torus:
      dims[0] = rng.uniform(0.03, 0.04);
      dims[1] = rng.uniform(0.012, 0.02);
      break;
  }
  return make_object(kind, dims, sample_target);
}

// Finger curl: per-finger bend about the curl axis, decaying along the chain.
inline void apply_curl(HandParams& p, double curl) {
  const double along[3] = {1.0, 0.8, 0.6};
  const HandSkeleton skel = HandSkeleton::standard();
  for (int f = 0; f < kNumFingers; ++f) {
    Vec3 dir = skel.rest_bone[HandSkeleton::joint_index(f, 0)];
    dir.z() = 0.0;
    dir.normalize();
    const Vec3 axis = Vec3::UnitZ().cross(dir).normalized();
    for (int l = 0; l < 3; ++l) {
      const int ti = HandSkeleton::theta_index(HandSkeleton::joint_index(f, l));
      p.theta.segment<3>(ti) = curl * along[l] * axis;
    }
  }
}

}  // namespace detail

// Procedural clean interaction clip: the object follows a smooth sinusoidal
// pose trajectory; the hand grasps it rigidly in the object frame (with a slow
// curl variation) and is pushed out of the surface along the approach
// direction until the whole clip is penetration-free.
inline HOISequence generate_synthetic_sequence(const SynthesisConfig& cfg, std::uint64_t seed) {
  if (cfg.frame_count < 2) throw InvalidInputError("generate_synthetic_sequence: K must be >= 2");
  Rng rng(seed);
  const PrimitiveKind kind =
      cfg.random_kind ? static_cast<PrimitiveKind>(rng.raw() % 4) : cfg.kind;
  const HandSkeleton skel = HandSkeleton::standard();
  ObjectShape object = detail::random_object(kind, rng, cfg.object_sample_target);
  if (object.bounding_radius() > 0.12)
    throw GenerationError("generate_synthetic_sequence: object exceeds hand reach");

  const int K = cfg.frame_count;

  // object pose trajectory: smooth sinusoids with random phase and frequency;
  // frequencies are absolute per-frame rates so short clips do not speed up
  Vec3 trans_amp, trans_phase, trans_freq;
  for (int i = 0; i < 3; ++i) {
    trans_amp[i] = cfg.motion_amplitude * rng.uniform(0.5, 1.0);
    trans_phase[i] = rng.uniform(0.0, 2.0 * M_PI);
    trans_freq[i] = rng.uniform(0.5, 1.5) * 2.0 * M_PI / 60.0;
  }
  const Vec3 rot_axis = rng.unit_vector();
  const double rot_amp = cfg.rotation_amplitude * rng.uniform(0.5, 1.0);
  const double rot_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double rot_freq = rng.uniform(0.5, 1.5) * 2.0 * M_PI / 60.0;

  const auto build_poses = [&](double scale) {
    std::vector<ObjectPose> poses(K);
    for (int k = 0; k < K; ++k) {
      ObjectPose pose;
      for (int i = 0; i < 3; ++i)
        pose.translation[i] =
            scale * trans_amp[i] * std::sin(trans_freq[i] * k + trans_phase[i]);
      const double angle = scale * rot_amp * std::sin(rot_freq * k + rot_phase);
      pose.rotation = Quat(Eigen::AngleAxisd(angle, rot_axis));
      poses[k] = pose;
    }
    return poses;
  };
  std::vector<ObjectPose> poses = build_poses(1.0);

  // grasp template in the object rest frame: palm faces the object along the
  // approach direction u, fingers along a tangent. Snap u to the direction of
  // the closest surface sample so the ray u actually hits the surface (a ray
  // through a torus hole never does).
  Vec3 u = rng.unit_vector();
  double surf_hint = 0.0;
  {
    int target = 0;
    double best = -2.0;
    for (std::size_t i = 0; i < object.samples.size(); ++i) {
      const double n = object.samples[i].norm();
      if (n < 1e-9) continue;
      const double c = object.samples[i].dot(u) / n;
      if (c > best) {
        best = c;
        target = static_cast<int>(i);
      }
    }
    u = object.samples[target].normalized();
    surf_hint = object.samples[target].norm();
  }
  Vec3 tangent = u.cross(rng.unit_vector());
  while (tangent.norm() < 1e-6) tangent = u.cross(rng.unit_vector());
  tangent.normalize();
  Mat3 grasp_rot;
  grasp_rot.col(0) = tangent;  // local +x: finger direction
  grasp_rot.col(2) = u;        // fingers curl toward local -z, i.e. toward the object
  grasp_rot.col(1) = grasp_rot.col(2).cross(grasp_rot.col(0));

  // u points exactly at a surface sample, so that sample's radius is the
  // surface crossing; the push-out below enforces actual clearance
  const double surf = surf_hint;

  const double base_curl = rng.uniform(0.5, 0.9);
  const double curl_amp = rng.uniform(0.0, 0.08);
  const double curl_freq = rng.uniform(0.5, 1.5) * 2.0 * M_PI / 60.0;
  const double curl_phase = rng.uniform(0.0, 2.0 * M_PI);

  // palm-center offset so the grasp closes around the surface point
  const Vec3 palm_center = Vec3(0.06, 0.0, 0.0);

  // worst signed distance of the whole clip's hand surface at a standoff
  const auto worst_at = [&](double standoff) {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      HandParams p;
      const Vec3 wrist_rest = (surf + standoff) * u - grasp_rot * palm_center;
      p.root_rot = mat3_to_axis_angle(grasp_rot);
      p.root_trans = wrist_rest;
      detail::apply_curl(p, base_curl + curl_amp * std::sin(curl_freq * k + curl_phase));
      for (const auto& q : sample_hand_surface(skel, p, cfg.surface_density))
        worst = std::min(worst, object.rest_sdf(q));
    }
    return worst;
  };

  // push out along u until every frame is clear of the object; the worst
  // point can graze almost tangentially, so bracket the clearance crossing
  // by doubling and then bisect (robust regardless of the local slope)
  double standoff = 0.025;
  if (worst_at(standoff) < cfg.clearance) {
    double lo = standoff, hi = standoff, step = 0.005;
    for (;;) {
      hi = lo + step;
      if (hi > 1.0) throw GenerationError("generate_synthetic_sequence: push-out did not converge");
      if (worst_at(hi) >= cfg.clearance) break;
      lo = hi;
      step *= 2.0;
    }
    while (hi - lo > 1e-5) {
      const double mid = 0.5 * (lo + hi);
      (worst_at(mid) >= cfg.clearance ? hi : lo) = mid;
    }
    standoff = hi;
  }

  const auto build_sequence = [&](const std::vector<ObjectPose>& frame_poses) {
    HOISequence seq;
    seq.frame_count = K;
    seq.object = object;
    seq.object_poses = frame_poses;
    seq.keypoints.resize(K);
    std::vector<HandParams> params(K);
    for (int k = 0; k < K; ++k) {
      const Mat3 R_obj = frame_poses[k].matrix();
      const Vec3 wrist_rest = (surf + standoff) * u - grasp_rot * palm_center;
      HandParams p;
      p.root_rot = mat3_to_axis_angle(R_obj * grasp_rot);
      p.root_trans = R_obj * wrist_rest + frame_poses[k].translation;
      detail::apply_curl(p, base_curl + curl_amp * std::sin(curl_freq * k + curl_phase));
      seq.keypoints[k] = forward_kinematics(skel, p);
      params[k] = p;
    }
    seq.hand_params = std::move(params);
    return seq;
  };

  // the hand is rigid in the object frame, so penetration clearance holds for
  // any pose trajectory; motion consistency does not, because the touch
  // region can sit farther than the contact capture radius from any keypoint.
  // Shrink the pose motion until the clip meets the clean-sequence bound.
  HOISequence seq = build_sequence(poses);
  double scale = 1.0;
  for (int shrink = 0; shrink < 10; ++shrink) {
    const ContactFrameSet contacts =
        extract_generalized_contact_points(seq, 0.005, 128, child_seed(seed, 997));
    if (motion_consistency(seq, contacts).first <= 3.5) break;
    scale *= 0.6;
    seq = build_sequence(build_poses(scale));
  }
  return seq;
}

struct GaussianNoise {
  double trans_std = 0.01;
  double rot_std = 0.1;
  double pose_std = 0.5;
};

struct BetaNoise {
  double trans_scale = 0.01;
  double rot_scale = 0.05;
  double pose_scale = 0.3;
};

namespace detail {

template <typename NoiseFn>
HOISequence perturb_params(const HOISequence& seq, NoiseFn&& noise) {
  if (!seq.hand_params)
    throw InvalidInputError("perturb: sequence carries no hand parameters");
  const HandSkeleton skel = HandSkeleton::standard();
  HOISequence out = seq;
  auto& params = *out.hand_params;
  for (int k = 0; k < seq.frame_count; ++k) {
    noise(params[k]);
    out.keypoints[k] = forward_kinematics(skel, params[k]);
  }
  return out;
}

}  // namespace detail

// i.i.d. Gaussian noise on the per-frame hand parameters; keypoints recomputed.
inline HOISequence perturb_gaussian(const HOISequence& seq, const GaussianNoise& stds,
                                    std::uint64_t seed) {
  Rng rng(seed);
  return detail::perturb_params(seq, [&](HandParams& p) {
    p.root_trans += stds.trans_std * rng.normal3();
    p.root_rot += stds.rot_std * rng.normal3();
    for (int i = 0; i < kThetaDim; ++i) p.theta[i] += stds.pose_std * rng.normal();
  });
}

// Beta(8,2)-distributed noise scaled per parameter block (biased, mean 0.8).
inline HOISequence perturb_beta(const HOISequence& seq, const BetaNoise& scales,
                                std::uint64_t seed) {
  Rng rng(seed);
  return detail::perturb_params(seq, [&](HandParams& p) {
    for (int i = 0; i < 3; ++i) p.root_trans[i] += scales.trans_scale * rng.beta(8, 2);
    for (int i = 0; i < 3; ++i) p.root_rot[i] += scales.rot_scale * rng.beta(8, 2);
    for (int i = 0; i < kThetaDim; ++i) p.theta[i] += scales.pose_scale * rng.beta(8, 2);
  });
}

}  // namespace geneoh
