#include <doctest.h>

#include <random>

#include "trajadapt/dual2.hpp"

using trajadapt::Dual2;

namespace {

// Central finite differences of a scalar function of k variables.
template <typename F>
void check_against_fd(F f, const Eigen::VectorXd& x, double tol_g, double tol_h) {
  const int k = static_cast<int>(x.size());
  std::vector<Dual2> vars;
  for (int i = 0; i < k; ++i) vars.push_back(Dual2::variable(x(i), k, i));
  const Dual2 out = f(vars);

  const double h = 1e-5;
  auto eval = [&](const Eigen::VectorXd& y) {
    std::vector<Dual2> v;
    for (int i = 0; i < k; ++i) v.push_back(Dual2(y(i), k));
    return f(v).v;
  };
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi(i) += h;
    lo(i) -= h;
    const double fd = (eval(hi) - eval(lo)) / (2.0 * h);
    CHECK(out.g(i) == doctest::Approx(fd).epsilon(tol_g));
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      const double fd = (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * h * h);
      CHECK(out.h(i, j) == doctest::Approx(fd).epsilon(tol_h).scale(1.0));
    }
}

}  // namespace

TEST_CASE("dual2 arithmetic matches finite differences") {
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> dist(-1.2, 1.2);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x(i) = dist(eng);
    check_against_fd(
        [](const std::vector<Dual2>& v) {
          return sin(v[0]) * cos(v[1]) + v[2] * v[2] * v[0] - v[1] / (2.0 + cos(v[2]));
        },
        x, 1e-6, 1e-4);
  }
}

TEST_CASE("dual2 atan2 and sqrt derivatives") {
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> dist(0.3, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(2);
    x(0) = dist(eng);
    x(1) = dist(eng);
    check_against_fd(
        [](const std::vector<Dual2>& v) { return atan2(v[0], sqrt(v[1] * v[1] + 0.5)); }, x,
        1e-6, 1e-4);
  }
}

TEST_CASE("dual2 hessian is symmetric") {
  const int k = 4;
  std::vector<Dual2> v;
  for (int i = 0; i < k; ++i) v.push_back(Dual2::variable(0.3 * (i + 1), k, i));
  const Dual2 out = sin(v[0] * v[1]) + v[2] / (1.0 + square(v[3])) + atan2(v[1], v[2]);
  CHECK((out.h - out.h.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("dual2 square equals self-product") {
  Dual2 x = Dual2::variable(1.7, 2, 0);
  Dual2 y = Dual2::variable(-0.4, 2, 1);
  const Dual2 a = square(x + 2.0 * y);
  const Dual2 b = (x + 2.0 * y) * (x + 2.0 * y);
  CHECK(a.v == doctest::Approx(b.v));
  CHECK((a.g - b.g).norm() == doctest::Approx(0.0));
  CHECK((a.h - b.h).norm() == doctest::Approx(0.0));
}
