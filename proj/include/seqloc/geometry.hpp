#pragma once

#include <vector>

namespace seqloc {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& v);

// Scalar convention (w, x, y, z), right-handed rotations.
struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

double norm(const Quaternion& q);
double dot(const Quaternion& a, const Quaternion& b);
Quaternion conjugate(const Quaternion& q);
Quaternion multiply(const Quaternion& a, const Quaternion& b);

// Throws ZeroQuaternionError when the norm is at or below 1e-12.
Quaternion normalize(const Quaternion& q);

// Rotates v by unit quaternion q (sandwich product q v q*).
Vec3 rotate(const Quaternion& q, const Vec3& v);

// Ground-truth pose; orientation is expected to be unit.
struct Pose {
  Vec3 position;
  Quaternion orientation;
};

// Network output; raw_orientation carries whatever magnitude the regressor
// produced and is normalized only at evaluation time.
struct PosePrediction {
  Vec3 position;
  Quaternion raw_orientation;
};

// Geodesic angle between the rotations, in degrees; sign flips of either
// argument do not change the result. Range [0, 180].
double angular_error_deg(const Quaternion& q_pred, const Quaternion& q_true);

double position_error_m(const Vec3& p_pred, const Vec3& p_true);

// Middle element for odd length, midpoint average for even length.
// Throws EmptyListError on an empty input.
double median(std::vector<double> values);

}  // namespace seqloc
