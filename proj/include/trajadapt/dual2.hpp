#pragma once

#include <Eigen/Core>
#include <cmath>

namespace trajadapt {

// Second-order forward-mode scalar: carries a value together with its
// gradient and Hessian with respect to k seed variables. Running a scalar
// computation on Dual2 inputs yields exact first and second derivatives of
// the output, which is how the cost terms obtain per-waypoint derivative
// blocks through the forward-kinematics chain.
class Dual2 {
 public:
  double v = 0.0;
  Eigen::VectorXd g;  // k
  Eigen::MatrixXd h;  // k x k, symmetric

  Dual2() = default;

  // Constant with respect to all seed variables.
  Dual2(double value, int k)
      : v(value), g(Eigen::VectorXd::Zero(k)), h(Eigen::MatrixXd::Zero(k, k)) {}

  // The idx-th seed variable.
  static Dual2 variable(double value, int k, int idx) {
    Dual2 d(value, k);
    d.g(idx) = 1.0;
    return d;
  }

  int dim() const { return static_cast<int>(g.size()); }

  Dual2 operator-() const {
    Dual2 r(*this);
    r.v = -r.v;
    r.g = -r.g;
    r.h = -r.h;
    return r;
  }

  Dual2& operator+=(const Dual2& o) {
    v += o.v;
    g += o.g;
    h += o.h;
    return *this;
  }
  Dual2& operator-=(const Dual2& o) {
    v -= o.v;
    g -= o.g;
    h -= o.h;
    return *this;
  }

  friend Dual2 operator+(Dual2 a, const Dual2& b) { return a += b; }
  friend Dual2 operator-(Dual2 a, const Dual2& b) { return a -= b; }

  friend Dual2 operator+(Dual2 a, double c) {
    a.v += c;
    return a;
  }
  friend Dual2 operator+(double c, Dual2 a) {
    a.v += c;
    return a;
  }
  friend Dual2 operator-(Dual2 a, double c) {
    a.v -= c;
    return a;
  }
  friend Dual2 operator-(double c, const Dual2& a) { return -a + c; }

  friend Dual2 operator*(const Dual2& a, const Dual2& b) {
    Dual2 r(0.0, a.dim());
    r.v = a.v * b.v;
    r.g = a.g * b.v + b.g * a.v;
    r.h = a.h * b.v + b.h * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
  }
  friend Dual2 operator*(Dual2 a, double c) {
    a.v *= c;
    a.g *= c;
    a.h *= c;
    return a;
  }
  friend Dual2 operator*(double c, Dual2 a) { return std::move(a) * c; }

  friend Dual2 operator/(const Dual2& a, const Dual2& b) { return a * inverse(b); }
  friend Dual2 operator/(Dual2 a, double c) { return std::move(a) * (1.0 / c); }
  friend Dual2 operator/(double c, const Dual2& b) { return inverse(b) * c; }

  // Unary chain rule: w = f(u) with first/second derivatives fp, fpp.
  static Dual2 chain(const Dual2& u, double f, double fp, double fpp) {
    Dual2 r(0.0, u.dim());
    r.v = f;
    r.g = fp * u.g;
    r.h = fp * u.h + fpp * (u.g * u.g.transpose());
    return r;
  }

  friend Dual2 inverse(const Dual2& u) {
    const double iv = 1.0 / u.v;
    return chain(u, iv, -iv * iv, 2.0 * iv * iv * iv);
  }
  friend Dual2 sin(const Dual2& u) {
    const double s = std::sin(u.v), c = std::cos(u.v);
    return chain(u, s, c, -s);
  }
  friend Dual2 cos(const Dual2& u) {
    const double s = std::sin(u.v), c = std::cos(u.v);
    return chain(u, c, -s, -c);
  }
  friend Dual2 sqrt(const Dual2& u) {
    const double s = std::sqrt(u.v);
    return chain(u, s, 0.5 / s, -0.25 / (s * s * s));
  }
  friend Dual2 square(const Dual2& u) { return chain(u, u.v * u.v, 2.0 * u.v, 2.0); }

  // atan2(y, x) via the full binary chain rule.
  friend Dual2 atan2(const Dual2& y, const Dual2& x) {
    const double r2 = x.v * x.v + y.v * y.v;
    const double fy = x.v / r2;           // d/dy
    const double fx = -y.v / r2;          // d/dx
    const double r4 = r2 * r2;
    const double fyy = -2.0 * x.v * y.v / r4;
    const double fxx = 2.0 * x.v * y.v / r4;
    const double fxy = (y.v * y.v - x.v * x.v) / r4;
    Dual2 r(0.0, y.dim());
    r.v = std::atan2(y.v, x.v);
    r.g = fy * y.g + fx * x.g;
    r.h = fy * y.h + fx * x.h + fyy * (y.g * y.g.transpose()) +
          fxx * (x.g * x.g.transpose()) +
          fxy * (y.g * x.g.transpose() + x.g * y.g.transpose());
    return r;
  }

  bool all_finite() const { return std::isfinite(v) && g.allFinite() && h.allFinite(); }
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual2& x) { return x.v; }

}  // namespace trajadapt
