#include "seqloc/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "seqloc/errors.hpp"

namespace seqloc {

namespace {
constexpr double kZeroNorm = 1e-12;
constexpr double kRadToDeg = 57.295779513082320876798154814105;
}  // namespace

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

double norm(const Quaternion& q) {
  return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

Quaternion conjugate(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

Quaternion multiply(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion normalize(const Quaternion& q) {
  const double n = norm(q);
  if (n <= kZeroNorm) throw ZeroQuaternionError("cannot normalize near-zero quaternion");
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Vec3 rotate(const Quaternion& q, const Vec3& v) {
  const Quaternion p{0.0, v.x, v.y, v.z};
  const Quaternion r = multiply(multiply(q, p), conjugate(q));
  return {r.x, r.y, r.z};
}

double angular_error_deg(const Quaternion& q_pred, const Quaternion& q_true) {
  const Quaternion a = normalize(q_pred);
  const Quaternion b = normalize(q_true);
  // |dot| folds the double cover; clamp guards floating-point overshoot.
  const double d = std::min(1.0, std::abs(dot(a, b)));
  return 2.0 * std::acos(d) * kRadToDeg;
}

double position_error_m(const Vec3& p_pred, const Vec3& p_true) {
  return norm(p_pred - p_true);
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyListError("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace seqloc
