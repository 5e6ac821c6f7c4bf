#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "trajadapt/errors.hpp"

namespace trajadapt {

struct DecisionVector;  // trajectory.hpp

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double x) {
  const double two_pi = 2.0 * M_PI;
  double y = std::fmod(x + M_PI, two_pi);
  if (y <= 0.0) y += two_pi;
  return y - M_PI;
}

// Shortest-arc difference a - b, wrapped to (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

enum class DHConvention { classic, modified };

// One joint of the chain. For the classic convention the row holds the
// link's own (a_i, alpha_i); for the modified (Craig) convention it holds
// the preceding link's (a_{i-1}, alpha_{i-1}) as usual.
struct DHRow {
  double a = 0.0;             // meters
  double d = 0.0;             // meters
  double alpha = 0.0;         // rad
  double theta_offset = 0.0;  // rad, added to the joint variable
};

struct RobotModel {
  std::string name;
  DHConvention convention = DHConvention::classic;
  std::vector<DHRow> joints;
  Eigen::VectorXd lower_limits;  // rad, length n
  Eigen::VectorXd upper_limits;  // rad, length n
  Eigen::Matrix4d base_transform = Eigen::Matrix4d::Identity();

  int dof() const { return static_cast<int>(joints.size()); }

  // Crude reachable-radius proxy: sum of |a| + |d| over all rows. Used to
  // express perturbation magnitudes as workspace fractions.
  double reach() const {
    double r = 0.0;
    for (const auto& j : joints) r += std::abs(j.a) + std::abs(j.d);
    return r;
  }

  bool within_limits(const Eigen::VectorXd& q, double tol = 0.0) const {
    for (int i = 0; i < dof(); ++i)
      if (q(i) < lower_limits(i) - tol || q(i) > upper_limits(i) + tol) return false;
    return true;
  }
};

// End-effector pose. Orientation is intrinsic Z-Y-X Euler angles stored as
// (roll, pitch, yaw), each wrapped to (-pi, pi]. `degenerate` marks gimbal
// lock (|pitch| within 1e-9 of pi/2); there yaw is tie-broken to 0.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  bool degenerate = false;

  double roll() const { return rpy(0); }
  double pitch() const { return rpy(1); }
  double yaw() const { return rpy(2); }
};

// ---------------------------------------------------------------------------
// Templated FK core, shared by the plain-double path and the Dual2 path used
// for cost derivatives. Kept as a minimal fixed 4x4 product so it works for
// any scalar with +,-,*, sin, cos.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct TMat4 {
  std::array<Scalar, 16> m;

  Scalar& operator()(int r, int c) { return m[4 * r + c]; }
  const Scalar& operator()(int r, int c) const { return m[4 * r + c]; }

  static TMat4 identity(const Scalar& zero, const Scalar& one) {
    TMat4 t;
    for (int i = 0; i < 16; ++i) t.m[i] = zero;
    for (int i = 0; i < 4; ++i) t(i, i) = one;
    return t;
  }
};

template <typename Scalar>
TMat4<Scalar> mat4_mul(const TMat4<Scalar>& a, const TMat4<Scalar>& b) {
  TMat4<Scalar> r;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Scalar acc = a(i, 0) * b(0, j);
      for (int k = 1; k < 4; ++k) acc += a(i, k) * b(k, j);
      r(i, j) = acc;
    }
  }
  return r;
}

// Per-joint homogeneous transform.
//   classic:  T = Rz(theta) Tz(d) Tx(a) Rx(alpha)
//   modified: T = Rx(alpha) Tx(a) Rz(theta) Tz(d)
template <typename Scalar>
TMat4<Scalar> dh_transform(const DHRow& row, DHConvention conv, const Scalar& theta,
                           const Scalar& zero, const Scalar& one) {
  using std::cos;
  using std::sin;
  const Scalar ct = cos(theta);
  const Scalar st = sin(theta);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);

  TMat4<Scalar> t = TMat4<Scalar>::identity(zero, one);
  if (conv == DHConvention::classic) {
    t(0, 0) = ct;
    t(0, 1) = st * (-ca);
    t(0, 2) = st * sa;
    t(0, 3) = ct * row.a;
    t(1, 0) = st;
    t(1, 1) = ct * ca;
    t(1, 2) = ct * (-sa);
    t(1, 3) = st * row.a;
    t(2, 1) = one * sa;
    t(2, 2) = one * ca;
    t(2, 3) = one * row.d;
  } else {
    t(0, 0) = ct;
    t(0, 1) = -st;
    t(0, 3) = one * row.a;
    t(1, 0) = st * ca;
    t(1, 1) = ct * ca;
    t(1, 2) = one * (-sa);
    t(1, 3) = one * (-sa * row.d);
    t(2, 0) = st * sa;
    t(2, 1) = ct * sa;
    t(2, 2) = one * ca;
    t(2, 3) = one * (ca * row.d);
  }
  return t;
}

// Base-to-end-effector transform for joint values q (offsets applied here).
template <typename Scalar>
TMat4<Scalar> chain_transform(const RobotModel& model, const std::vector<Scalar>& q,
                              const Scalar& zero, const Scalar& one) {
  TMat4<Scalar> t;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) t(r, c) = one * model.base_transform(r, c);
  for (int i = 0; i < model.dof(); ++i) {
    const Scalar theta = q[static_cast<size_t>(i)] + model.joints[static_cast<size_t>(i)].theta_offset;
    t = mat4_mul(t, dh_transform(model.joints[static_cast<size_t>(i)], model.convention, theta, zero, one));
  }
  return t;
}

// Z-Y-X Euler extraction (regular branch only; no gimbal handling). Returns
// (roll, pitch, yaw). The double path wraps this with degeneracy handling.
template <typename Scalar>
std::array<Scalar, 3> euler_zyx(const TMat4<Scalar>& t) {
  using std::atan2;
  using std::sqrt;
  const Scalar hyp = sqrt(t(0, 0) * t(0, 0) + t(1, 0) * t(1, 0));
  const Scalar pitch = atan2(-t(2, 0), hyp);
  const Scalar roll = atan2(t(2, 1), t(2, 2));
  const Scalar yaw = atan2(t(1, 0), t(0, 0));
  return {roll, pitch, yaw};
}

// ---------------------------------------------------------------------------
// Double-precision public API
// ---------------------------------------------------------------------------

// Parse and validate a robot-model JSON file (schema documented in README).
RobotModel load_robot_model(const std::string& path);

// Parse a model from JSON text; `origin` names the source in error messages.
RobotModel parse_robot_model(const std::string& json_text, const std::string& origin);

Eigen::Matrix4d fk_transform(const RobotModel& model, const Eigen::VectorXd& q);

Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q);

// Pose of each waypoint of a flattened trajectory, in waypoint order.
std::vector<Pose> fk_along_trajectory(const RobotModel& model, const DecisionVector& xi);

// Euler extraction with the gimbal-lock tie-break (yaw := 0) and flag.
std::pair<Eigen::Vector3d, bool> euler_from_matrix(const Eigen::Matrix3d& r);

// Rebuild the rotation matrix from (roll, pitch, yaw): R = Rz(yaw) Ry(pitch) Rx(roll).
Eigen::Matrix3d matrix_from_euler(const Eigen::Vector3d& rpy);

}  // namespace trajadapt
