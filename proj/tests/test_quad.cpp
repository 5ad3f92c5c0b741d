#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hardy/params.hpp"
#include "hardy/quad.hpp"

using namespace hardy;

namespace {
PiecewiseFn ones(const GradedMesh& m) { return PiecewiseFn(m, std::vector<double>(m.nodes().size(), 1.0)); }
}  // namespace

TEST_CASE("integrate_weighted examples") {
  const double tm = 1e-3;
  const GradedMesh m = make_mesh(256, 2, tm);
  CHECK(integrate_weighted(ones(m), 1, 0, WeightSpec::power(1)).value ==
        doctest::Approx((1 - tm * tm) / 2).epsilon(1e-14));

  const double R = std::exp(2.0);
  double prev = 0;
  for (double t0 : {1e-2, 1e-4, 1e-6}) {
    const GradedMesh fine = make_mesh(4096, 3, t0);
    const double v = integrate_weighted(ones(fine), 1, 0, WeightSpec::power_log(-1, 2, R)).value;
    CHECK(v == doctest::Approx(0.5 - 1 / std::log(R / t0)).epsilon(1e-10));
    CHECK(v > prev);
    CHECK(v < 0.5);
    prev = v;
  }

  const GradedMesh lin = make_mesh(64, 1, 1e-9);
  std::vector<double> u;
  for (double t : lin.nodes()) u.push_back(t);
  CHECK(integrate_weighted(PiecewiseFn(lin, u), 0, 2, WeightSpec::power(1)).value ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(integrate_weighted(ones(m), -1, 0, WeightSpec::power(0)), std::invalid_argument);
}

TEST_CASE("closed_form_oracle examples") {
  CHECK(closed_form_oracle(WeightSpec::power(1), 0, 1) == doctest::Approx(0.5));
  CHECK(closed_form_oracle(WeightSpec::power_log(-1, 2, std::exp(2.0)), 0, 1) == doctest::Approx(0.5));
  CHECK(closed_form_oracle(WeightSpec::power_loglog(-1, 1, 2, e_to_the_e()), 0, 1) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(closed_form_oracle(WeightSpec::power(-1), 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(closed_form_oracle(WeightSpec::power(-2), 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(closed_form_oracle(WeightSpec::power_log(-1, 0.5, 10), 0, 1), std::invalid_argument);
}

TEST_CASE("boundary_trace_1d") {
  const GradedMesh m({0.5, 1.0});
  CHECK(boundary_trace_1d(PiecewiseFn(m, {0, 1}), 2) == 1.0);
  CHECK(boundary_trace_1d(PiecewiseFn(m, {1, 0}), 3.3) == 0.0);
  CHECK(boundary_trace_1d(PiecewiseFn(m, {0, 0.5}), 3) == doctest::Approx(0.125));
}

TEST_CASE("gauss8 integrates polynomials up to degree 15 exactly") {
  const auto& g = gauss8();
  double wsum = 0;
  for (double w : g.w) wsum += w;
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-15));
  for (int d = 0; d <= 15; ++d) {
    double s = 0;
    for (int k = 0; k < 8; ++k) s += g.w[k] * std::pow(g.x[k], d);
    const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-14));
  }
}

TEST_CASE("random catalogue weights against the oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0, 1);
  const double tm = 1e-4;
  const GradedMesh m = make_mesh(4096, 3, tm);
  const PiecewiseFn one = ones(m);
  for (int i = 0; i < 50; ++i) {
    WeightSpec w;
    switch (i % 3) {
      case 0: {
        double s = -3 + 6 * U(rng);
        if (std::abs(s + 1) < 0.05) s += 0.1;
        w = WeightSpec::power(s);
        break;
      }
      case 1: {
        double k = -2 + 6 * U(rng);
        if (std::abs(k - 1) < 0.05) k += 0.1;
        w = WeightSpec::power_log(-1, k, std::numbers::e * (1 + 30 * U(rng)));
        break;
      }
      default: {
        double mm = -2 + 6 * U(rng);
        if (std::abs(mm - 1) < 0.05) mm += 0.1;
        w = WeightSpec::power_loglog(-1, 1, mm, e_to_the_e() * (1 + 5 * U(rng)));
      }
    }
    const double oracle = closed_form_oracle(w, tm, 1);
    const auto r = integrate_weighted(one, 0, 0, w);
    CHECK(std::abs(r.value - oracle) <= 1e-10 * std::abs(oracle));
    CHECK_FALSE(r.divergence_warning);
  }
}

TEST_CASE("mesh refinement reduces the error") {
  const auto w = WeightSpec::power_log(-1, 2, 10);
  const double tm = 1e-3, oracle = closed_form_oracle(w, tm, 1);
  auto err = [&](std::size_t n) {
    return std::abs(integrate_weighted(ones(make_mesh(n, 3, tm)), 0, 0, w).value - oracle);
  };
  CHECK(err(8) < err(4));
  CHECK(err(16) < err(8));
  CHECK(err(256) < 1e-10 * oracle);
}

TEST_CASE("homogeneity in the integrand scale") {
  const GradedMesh m = make_mesh(128, 2, 1e-3);
  std::vector<double> v, v3;
  for (double t : m.nodes()) {
    v.push_back(std::sin(3 * t) + t);
    v3.push_back(-3 * (std::sin(3 * t) + t));
  }
  const auto w = WeightSpec::power(0.5);
  const double a = integrate_weighted(PiecewiseFn(m, v), 1.5, 2, w).value;
  const double b = integrate_weighted(PiecewiseFn(m, v3), 1.5, 2, w).value;
  CHECK(b == doctest::Approx(std::pow(3.0, 3.5) * a).epsilon(1e-13));
}

TEST_CASE("divergence warning for the borderline exponent") {
  const GradedMesh m = make_mesh(256, 3, 1e-12);
  std::vector<double> v(m.nodes().size(), 1.0);
  const auto r = integrate_weighted(PiecewiseFn(m, v), 1, 0, WeightSpec::power(-1.5));
  CHECK(r.divergence_warning);
  const auto ok = integrate_weighted(PiecewiseFn(m, v), 1, 0, WeightSpec::power(0.5));
  CHECK_FALSE(ok.divergence_warning);
}

TEST_CASE("KahanSum is order-deterministic") {
  KahanSum a, b;
  for (int i = 0; i < 1000; ++i) {
    a.add(1e-16);
    b.add(1e-16);
  }
  a.add(1.0);
  CHECK(a.value() == doctest::Approx(1.0 + 1e-13).epsilon(1e-15));
  CHECK(b.value() == doctest::Approx(1e-13));
}
