#pragma once

#include <string>
#include <vector>

#include "geneoh/math.hpp"

namespace geneoh {

enum class PrimitiveKind { Sphere, Box, Cylinder, Torus };

inline std::string to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Sphere: return "sphere";
    case PrimitiveKind::Box: return "box";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Torus: return "torus";
  }
  return "?";
}

inline PrimitiveKind primitive_from_string(const std::string& s) {
  if (s == "sphere") return PrimitiveKind::Sphere;
  if (s == "box") return PrimitiveKind::Box;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "torus") return PrimitiveKind::Torus;
  throw InvalidInputError("unknown primitive kind: " + s);
}

struct ObjectPose {
  Quat rotation = Quat::Identity();  // unit quaternion
  Vec3 translation = Vec3::Zero();

  Mat3 matrix() const { return rotation.toRotationMatrix(); }
  Vec3 to_world(const Vec3& rest) const { return rotation * rest + translation; }
  Vec3 to_rest(const Vec3& world) const { return rotation.conjugate() * (world - translation); }
};

// Analytic primitive with exact SDF in its rest frame. Dimensions:
//   sphere:   dims[0] = radius
//   box:      dims[0..2] = half extents
//   cylinder: dims[0] = radius, dims[1] = half height (axis z)
//   torus:    dims[0] = major radius, dims[1] = tube radius (plane xy)
struct ObjectShape {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  std::array<double, 3> dims{0.05, 0.0, 0.0};
  std::vector<Vec3> samples;         // rest-frame surface samples, on the zero level set
  std::vector<Vec3> sample_normals;  // unit outward normals at the samples

  double rest_sdf(const Vec3& p) const {
    switch (kind) {
      case PrimitiveKind::Sphere:
        return p.norm() - dims[0];
      case PrimitiveKind::Box: {
        const Vec3 q = p.cwiseAbs() - Vec3(dims[0], dims[1], dims[2]);
        const Vec3 qp = q.cwiseMax(0.0);
        return qp.norm() + std::min(q.maxCoeff(), 0.0);
      }
      case PrimitiveKind::Cylinder: {
        const double dr = std::hypot(p.x(), p.y()) - dims[0];
        const double dz = std::abs(p.z()) - dims[1];
        const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
        return outside + std::min(std::max(dr, dz), 0.0);
      }
      case PrimitiveKind::Torus: {
        const double q = std::hypot(p.x(), p.y()) - dims[0];
        return std::hypot(q, p.z()) - dims[1];
      }
    }
    return 0.0;
  }

  Vec3 rest_gradient(const Vec3& p) const {
    switch (kind) {
      case PrimitiveKind::Sphere: {
        const double n = p.norm();
        return n > 1e-12 ? Vec3(p / n) : Vec3::UnitZ();
      }
      case PrimitiveKind::Box: {
        const Vec3 h(dims[0], dims[1], dims[2]);
        const Vec3 q = p.cwiseAbs() - h;
        const Vec3 sgn(p.x() >= 0 ? 1.0 : -1.0, p.y() >= 0 ? 1.0 : -1.0, p.z() >= 0 ? 1.0 : -1.0);
        if (q.maxCoeff() > 0.0) {
          Vec3 qp = q.cwiseMax(0.0);
          const double n = qp.norm();
          return sgn.cwiseProduct(qp / n);
        }
        // inside: gradient of the largest (closest-to-zero) face distance
        int axis = 0;
        q.maxCoeff(&axis);
        Vec3 g = Vec3::Zero();
        g[axis] = sgn[axis];
        return g;
      }
      case PrimitiveKind::Cylinder: {
        const double rho = std::hypot(p.x(), p.y());
        const double dr = rho - dims[0];
        const double dz = std::abs(p.z()) - dims[1];
        const Vec3 grad_r = rho > 1e-12 ? Vec3(p.x() / rho, p.y() / rho, 0.0) : Vec3::UnitX();
        const Vec3 grad_z(0.0, 0.0, p.z() >= 0 ? 1.0 : -1.0);
        if (dr > 0.0 && dz > 0.0) {
          const double n = std::hypot(dr, dz);
          return (dr / n) * grad_r + (dz / n) * grad_z;
        }
        return dr > dz ? grad_r : grad_z;
      }
      case PrimitiveKind::Torus: {
        const double rho = std::hypot(p.x(), p.y());
        const double q = rho - dims[0];
        const double n = std::hypot(q, p.z());
        if (n < 1e-12 || rho < 1e-12) return Vec3::UnitZ();
        const Vec3 grad_q(p.x() / rho, p.y() / rho, 0.0);
        return (q / n) * grad_q + Vec3(0.0, 0.0, p.z() / n);
      }
    }
    return Vec3::UnitZ();
  }

  // Loose bounding radius of the rest-frame shape.
  double bounding_radius() const {
    switch (kind) {
      case PrimitiveKind::Sphere: return dims[0];
      case PrimitiveKind::Box: return Vec3(dims[0], dims[1], dims[2]).norm();
      case PrimitiveKind::Cylinder: return std::hypot(dims[0], dims[1]);
      case PrimitiveKind::Torus: return dims[0] + dims[1];
    }
    return 0.0;
  }
};

// World-frame signed distance and unit outward normal under a pose.
inline std::pair<double, Vec3> object_sdf(const ObjectShape& shape, const ObjectPose& pose,
                                          const Vec3& p) {
  if (!p.allFinite()) throw InvalidInputError("object_sdf: non-finite query point");
  const Vec3 rest = pose.to_rest(p);
  const double d = shape.rest_sdf(rest);
  const Vec3 n = (pose.rotation * shape.rest_gradient(rest)).normalized();
  return {d, n};
}

namespace detail {

inline void push_sample(ObjectShape& s, const Vec3& p) {
  s.samples.push_back(p);
  s.sample_normals.push_back(s.rest_gradient(p).normalized());
}

}  // namespace detail

// Deterministic surface sample sets; target is an approximate point count.
inline void build_surface_samples(ObjectShape& s, int target = 2000) {
  s.samples.clear();
  s.sample_normals.clear();
  switch (s.kind) {
    case PrimitiveKind::Sphere: {
      // Fibonacci sphere
      const double phi = M_PI * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < target; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / target;
        const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double th = phi * i;
        detail::push_sample(s, s.dims[0] * Vec3(r * std::cos(th), y, r * std::sin(th)));
      }
      break;
    }
    case PrimitiveKind::Box: {
      const Vec3 h(s.dims[0], s.dims[1], s.dims[2]);
      const double area = 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
      const double pitch = std::sqrt(area / target);
      for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        const int nu = std::max(2, static_cast<int>(std::round(2.0 * h[u] / pitch)));
        const int nv = std::max(2, static_cast<int>(std::round(2.0 * h[v] / pitch)));
        for (int side = -1; side <= 1; side += 2)
          for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j) {
              Vec3 p;
              p[axis] = side * h[axis];
              p[u] = -h[u] + 2.0 * h[u] * (i + 0.5) / nu;
              p[v] = -h[v] + 2.0 * h[v] * (j + 0.5) / nv;
              detail::push_sample(s, p);
            }
      }
      break;
    }
    case PrimitiveKind::Cylinder: {
      const double r = s.dims[0], hh = s.dims[1];
      const double area = 2.0 * M_PI * r * 2.0 * hh + 2.0 * M_PI * r * r;
      const double pitch = std::sqrt(area / target);
      const int ntheta = std::max(8, static_cast<int>(std::round(2.0 * M_PI * r / pitch)));
      const int nz = std::max(2, static_cast<int>(std::round(2.0 * hh / pitch)));
      for (int i = 0; i < ntheta; ++i) {
        const double th = 2.0 * M_PI * i / ntheta;
        for (int j = 0; j < nz; ++j) {
          const double z = -hh + 2.0 * hh * (j + 0.5) / nz;
          detail::push_sample(s, Vec3(r * std::cos(th), r * std::sin(th), z));
        }
      }
      const int nr = std::max(1, static_cast<int>(std::round(r / pitch)));
      for (int side = -1; side <= 1; side += 2)
        for (int i = 0; i < nr; ++i) {
          const double rr = r * (i + 0.5) / nr;
          const int nth = std::max(6, static_cast<int>(std::round(2.0 * M_PI * rr / pitch)));
          for (int j = 0; j < nth; ++j) {
            const double th = 2.0 * M_PI * j / nth;
            detail::push_sample(s, Vec3(rr * std::cos(th), rr * std::sin(th), side * hh));
          }
        }
      break;
    }
    case PrimitiveKind::Torus: {
      const double R = s.dims[0], r = s.dims[1];
      const int nmajor = std::max(8, static_cast<int>(std::round(std::sqrt(
                                      target * R / r))));
      const int nminor = std::max(6, target / nmajor);
      for (int i = 0; i < nmajor; ++i) {
        const double u = 2.0 * M_PI * i / nmajor;
        for (int j = 0; j < nminor; ++j) {
          const double v = 2.0 * M_PI * j / nminor;
          const double rho = R + r * std::cos(v);
          detail::push_sample(s, Vec3(rho * std::cos(u), rho * std::sin(u), r * std::sin(v)));
        }
      }
      break;
    }
  }
}

inline ObjectShape make_object(PrimitiveKind kind, const std::array<double, 3>& dims,
                               int sample_target = 2000) {
  ObjectShape s;
  s.kind = kind;
  s.dims = dims;
  build_surface_samples(s, sample_target);
  return s;
}

}  // namespace geneoh
