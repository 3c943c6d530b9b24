#pragma once

#include <vector>

#include "geneoh/math.hpp"

namespace geneoh {

inline constexpr int kNumFingers = 5;
inline constexpr int kLinksPerFinger = 4;
inline constexpr int kNumThetaJoints = 15;   // wrist excluded, fingertips carry no DoF
inline constexpr int kThetaDim = kNumThetaJoints * 3;
inline constexpr int kHandParamDim = 3 + 3 + kThetaDim + kNumFingers;  // 56

// 21-keypoint kinematic hand: wrist + 5 fingers x 4 links. Joint j of finger f,
// link l is 1 + f*4 + l; link 0 hangs off the wrist, the rest chain along the
// finger. Only the first three links of each finger articulate.
struct HandSkeleton {
  std::array<int, kNumJoints> parent;
  std::array<Vec3, kNumJoints> rest_bone;   // offset from parent, at beta = 1
  std::array<double, kNumJoints> radius;    // capsule radius of the bone ending at j

  static int joint_index(int finger, int link) { return 1 + finger * kLinksPerFinger + link; }
  static int finger_of(int joint) { return (joint - 1) / kLinksPerFinger; }
  static int link_of(int joint) { return (joint - 1) % kLinksPerFinger; }
  // theta block for the articulated joint j, or -1 for wrist/fingertips
  static int theta_index(int joint) {
    if (joint == 0) return -1;
    const int link = link_of(joint);
    if (link >= 3) return -1;
    return (finger_of(joint) * 3 + link) * 3;
  }

  static HandSkeleton standard() {
    HandSkeleton s;
    s.parent[0] = -1;
    s.rest_bone[0] = Vec3::Zero();
    s.radius[0] = 0.010;
    // knuckle offsets from the wrist and segment lengths per finger, meters
    const Vec3 knuckle[kNumFingers] = {
        {0.025, 0.035, 0.0},   // thumb
        {0.095, 0.025, 0.0},   // index
        {0.100, 0.000, 0.0},   // middle
        {0.095, -0.022, 0.0},  // ring
        {0.085, -0.045, 0.0},  // pinky
    };
    const double seg[kNumFingers][3] = {
        {0.045, 0.035, 0.028},
        {0.040, 0.025, 0.022},
        {0.045, 0.028, 0.024},
        {0.040, 0.026, 0.023},
        {0.032, 0.022, 0.020},
    };
    const double seg_radius[3] = {0.007, 0.006, 0.005};
    for (int f = 0; f < kNumFingers; ++f) {
      Vec3 dir = knuckle[f];
      dir.z() = 0.0;
      dir.normalize();
      for (int l = 0; l < kLinksPerFinger; ++l) {
        const int j = joint_index(f, l);
        s.parent[j] = (l == 0) ? 0 : j - 1;
        s.rest_bone[j] = (l == 0) ? knuckle[f] : Vec3(seg[f][l - 1] * dir);
        s.radius[j] = (l == 0) ? 0.009 : seg_radius[l - 1];
      }
    }
    return s;
  }
};

struct HandParams {
  Vec3 root_rot = Vec3::Zero();     // axis-angle, radians
  Vec3 root_trans = Vec3::Zero();   // meters
  Eigen::Matrix<double, kThetaDim, 1> theta =
      Eigen::Matrix<double, kThetaDim, 1>::Zero();  // axis-angle per articulated joint
  Eigen::Matrix<double, kNumFingers, 1> beta =
      Eigen::Matrix<double, kNumFingers, 1>::Ones();  // per-finger bone-length scale

  bool finite() const {
    return root_rot.allFinite() && root_trans.allFinite() && theta.allFinite() &&
           beta.allFinite();
  }

  Eigen::Matrix<double, kHandParamDim, 1> flatten() const {
    Eigen::Matrix<double, kHandParamDim, 1> v;
    v.segment<3>(0) = root_rot;
    v.segment<3>(3) = root_trans;
    v.segment<kThetaDim>(6) = theta;
    v.segment<kNumFingers>(6 + kThetaDim) = beta;
    return v;
  }
  static HandParams unflatten(const Eigen::Matrix<double, kHandParamDim, 1>& v) {
    HandParams p;
    p.root_rot = v.segment<3>(0);
    p.root_trans = v.segment<3>(3);
    p.theta = v.segment<kThetaDim>(6);
    p.beta = v.segment<kNumFingers>(6 + kThetaDim);
    return p;
  }
};

namespace detail {

// Chain evaluation on a generic scalar; params laid out as in HandParams::flatten.
template <typename T>
std::array<V3<T>, kNumJoints> forward_kinematics_t(const HandSkeleton& skel, const T* params) {
  const V3<T> root_rot{params[0], params[1], params[2]};
  const V3<T> root_trans{params[3], params[4], params[5]};

  std::array<V3<T>, kNumJoints> pos;
  std::array<M3<T>, kNumJoints> orient;
  pos[0] = root_trans;
  orient[0] = axis_angle_to_matrix(root_rot);

  for (int j = 1; j < kNumJoints; ++j) {
    const int p = skel.parent[j];
    const T scale = params[6 + kThetaDim + HandSkeleton::finger_of(j)];
    const Vec3& b = skel.rest_bone[j];
    const V3<T> bone{scale * T(b.x()), scale * T(b.y()), scale * T(b.z())};
    pos[j] = pos[p] + orient[p] * bone;
    const int ti = HandSkeleton::theta_index(j);
    if (ti >= 0) {
      const V3<T> w{params[6 + ti], params[6 + ti + 1], params[6 + ti + 2]};
      orient[j] = orient[p] * axis_angle_to_matrix(w);
    } else {
      orient[j] = orient[p];
    }
  }
  return pos;
}

}  // namespace detail

inline JointMat forward_kinematics(const HandSkeleton& skel, const HandParams& params) {
  if (!params.finite()) throw InvalidInputError("forward_kinematics: non-finite params");
  const auto v = params.flatten();
  const auto pos = detail::forward_kinematics_t<double>(skel, v.data());
  JointMat out;
  for (int j = 0; j < kNumJoints; ++j) out.row(j) = Vec3(pos[j].x, pos[j].y, pos[j].z);
  return out;
}

// Exact Jacobian of all 63 keypoint coordinates w.r.t. the 56 parameters,
// propagated in forward mode. Row order: joint-major, xyz within a joint.
inline Eigen::Matrix<double, 63, kHandParamDim> forward_kinematics_jacobian(
    const HandSkeleton& skel, const HandParams& params, JointMat* keypoints = nullptr) {
  if (!params.finite()) throw InvalidInputError("forward_kinematics_jacobian: non-finite params");
  using D = Dual<kHandParamDim>;
  const auto v = params.flatten();
  std::array<D, kHandParamDim> dual_params;
  for (int i = 0; i < kHandParamDim; ++i) dual_params[i] = D::seeded(v[i], i);
  const auto pos = detail::forward_kinematics_t<D>(skel, dual_params.data());

  Eigen::Matrix<double, 63, kHandParamDim> jac;
  for (int j = 0; j < kNumJoints; ++j) {
    const D* coords[3] = {&pos[j].x, &pos[j].y, &pos[j].z};
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < kHandParamDim; ++i) jac(j * 3 + c, i) = coords[c]->d[i];
    if (keypoints) keypoints->row(j) = Vec3(pos[j].x.v, pos[j].y.v, pos[j].z.v);
  }
  return jac;
}

// Deterministic point pattern on the capsules around each bone. Axial sample
// count scales with density (samples per meter); each axial station carries a
// fixed 8-point ring plus the segment endpoints.
inline std::vector<Vec3> sample_hand_surface(const HandSkeleton& skel, const HandParams& params,
                                             double density) {
  if (density <= 0.0) throw InvalidInputError("sample_hand_surface: density must be > 0");
  const JointMat kp = forward_kinematics(skel, params);
  std::vector<Vec3> pts;
  constexpr int kRing = 8;
  for (int j = 1; j < kNumJoints; ++j) {
    const Vec3 a = kp.row(skel.parent[j]);
    const Vec3 b = kp.row(j);
    const double r = skel.radius[j];
    const Vec3 ab = b - a;
    const double len = ab.norm();
    if (len < 1e-12) continue;
    const Vec3 axis = ab / len;
    // orthonormal frame around the bone axis
    Vec3 u = axis.cross(Vec3::UnitZ());
    if (u.norm() < 1e-6) u = axis.cross(Vec3::UnitY());
    u.normalize();
    const Vec3 w = axis.cross(u);
    // pattern size comes from the rest bone length so that two parameter
    // sets always yield point-to-point correspondence
    const double rest_len = skel.rest_bone[j].norm();
    const int n_axial = std::max(2, static_cast<int>(std::ceil(rest_len * density)));
    for (int i = 0; i < n_axial; ++i) {
      const Vec3 c = a + (static_cast<double>(i) / (n_axial - 1)) * ab;
      for (int k = 0; k < kRing; ++k) {
        const double phi = 2.0 * M_PI * k / kRing;
        pts.push_back(c + r * (std::cos(phi) * u + std::sin(phi) * w));
      }
    }
    pts.push_back(a - r * axis);  // caps
    pts.push_back(b + r * axis);
  }
  return pts;
}

// Distance from p to the capsule hull of the hand (min over bones of distance
// to segment minus radius). Negative inside.
inline double hand_capsule_sdf(const HandSkeleton& skel, const JointMat& kp, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 1; j < kNumJoints; ++j) {
    const Vec3 a = kp.row(skel.parent[j]);
    const Vec3 b = kp.row(j);
    const Vec3 ab = b - a;
    const double t = std::clamp(ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0,
                                0.0, 1.0);
    best = std::min(best, (p - (a + t * ab)).norm() - skel.radius[j]);
  }
  return best;
}

}  // namespace geneoh
