#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace geneoh {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using JointMat = Eigen::Matrix<double, 21, 3>;  // one row per hand keypoint

inline constexpr int kNumJoints = 21;

// Seeded random stream. Gaussian and Beta variates are generated from the
// uniform stream directly so sequences are stable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // in (0, 1); never returns 0 so logs are safe
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec3 normal3() { return Vec3(normal(), normal(), normal()); }

  Vec3 unit_vector() {
    Vec3 v;
    do {
      v = normal3();
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

  // Gamma(n, 1) for integer shape n, as a sum of exponentials.
  double gamma_int(int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc -= std::log(uniform());
    return acc;
  }

  // Beta(a, b) for integer shapes.
  double beta(int a, int b) {
    const double x = gamma_int(a);
    const double y = gamma_int(b);
    return x / (x + y);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Derive a child seed for an independent per-item stream.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + index * 0xbf58476d1ce4e5b9ULL);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// ---------------------------------------------------------------------------
// Forward-mode dual numbers, fixed derivative width. Used for exact Jacobians
// of the kinematic chain.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constant lift
  static Dual seeded(double value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Dual operator-() const {
    Dual r(-v);
    for (int i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }
  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    const double inv = 1.0 / b.v;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }
  friend Dual sin(const Dual& a) {
    Dual r(std::sin(a.v));
    const double c = std::cos(a.v);
    for (int i = 0; i < N; ++i) r.d[i] = c * a.d[i];
    return r;
  }
  friend Dual cos(const Dual& a) {
    Dual r(std::cos(a.v));
    const double s = -std::sin(a.v);
    for (int i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
  }
  friend Dual sqrt(const Dual& a) {
    Dual r(std::sqrt(a.v));
    const double g = 0.5 / r.v;
    for (int i = 0; i < N; ++i) r.d[i] = g * a.d[i];
    return r;
  }
  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator<(const Dual& a, double b) { return a.v < b; }
};

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual<N>& x) {
  return x.v;
}

// Minimal templated 3-vector / 3x3 matrix so the kinematic chain can run on
// either double or Dual scalars.
template <typename T>
struct V3 {
  T x{}, y{}, z{};
  V3() = default;
  V3(T a, T b, T c) : x(a), y(b), z(c) {}
  friend V3 operator+(const V3& a, const V3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend V3 operator-(const V3& a, const V3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend V3 operator*(const T& s, const V3& a) { return {s * a.x, s * a.y, s * a.z}; }
  T dot(const V3& o) const { return x * o.x + y * o.y + z * o.z; }
  V3 cross(const V3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
};

template <typename T>
struct M3 {
  // row-major entries
  T m[3][3]{};
  static M3 identity() {
    M3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = T(1.0);
    return r;
  }
  V3<T> operator*(const V3<T>& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  M3 operator*(const M3& o) const {
    M3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    return r;
  }
};

// Rodrigues rotation from an axis-angle vector. The sin/cos coefficients are
// expanded in theta^2 near zero so the map stays smooth for dual scalars.
template <typename T>
M3<T> axis_angle_to_matrix(const V3<T>& w) {
  const T t2 = w.dot(w);
  T a, b;  // a = sin(t)/t, b = (1-cos(t))/t^2
  if (value_of(t2) < 1e-8) {
    a = T(1.0) - t2 * T(1.0 / 6.0);
    b = T(0.5) - t2 * T(1.0 / 24.0);
  } else {
    const T t = sqrt(t2);
    a = sin(t) / t;
    b = (T(1.0) - cos(t)) / t2;
  }
  M3<T> r = M3<T>::identity();
  // I + a*[w]x + b*[w]x^2
  const T wx = w.x, wy = w.y, wz = w.z;
  r.m[0][0] += b * (-wy * wy - wz * wz);
  r.m[0][1] += -a * wz + b * wx * wy;
  r.m[0][2] += a * wy + b * wx * wz;
  r.m[1][0] += a * wz + b * wx * wy;
  r.m[1][1] += b * (-wx * wx - wz * wz);
  r.m[1][2] += -a * wx + b * wy * wz;
  r.m[2][0] += -a * wy + b * wx * wz;
  r.m[2][1] += a * wx + b * wy * wz;
  r.m[2][2] += b * (-wx * wx - wy * wy);
  return r;
}

inline Mat3 axis_angle_to_mat3(const Vec3& w) {
  const M3<double> r = axis_angle_to_matrix(V3<double>{w.x(), w.y(), w.z()});
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = r.m[i][j];
  return out;
}

inline Vec3 mat3_to_axis_angle(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

// Uniform random rotation (axis from the sphere, angle in [0, pi]).
inline Mat3 random_rotation(Rng& rng) {
  const Vec3 axis = rng.unit_vector();
  const double angle = rng.uniform(0.0, M_PI);
  return axis_angle_to_mat3(angle * axis);
}

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace geneoh
