#include <cmath>

#include "doctest.h"
#include "gclab/bounds.hpp"
#include "gclab/util.hpp"

using namespace gclab;

TEST_CASE("pinsker and exponential TV bounds") {
  CHECK(pinsker_tv(0.0).value == 0.0);
  CHECK(pinsker_tv(0.125).value == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pinsker_tv(10.0).value == 1.0);
  CHECK(pinsker_tv(10.0).clamped);
  CHECK_FALSE(pinsker_tv(0.125).clamped);

  CHECK(tv_exp_bound(0.0).value == 0.5);
  CHECK(tv_exp_bound(std::log(2.0)).value == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(tv_exp_bound(100.0).value == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(pinsker_tv(-1.0), std::invalid_argument);
}

TEST_CASE("measure lower bound") {
  CHECK(measure_lower_bound(1.0, 0.0, 2.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(measure_lower_bound(1.0, 0.0, 8.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(measure_lower_bound(0.0, 1.0, 4.0) == 0.0);
  CHECK_THROWS_AS(measure_lower_bound(0.5, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("kl from girsanov cost") {
  CHECK(kl_girsanov(0.0) == 0.0);
  CHECK(kl_girsanov(1.0) == 0.5);
  // constant drift beta on [0,T]: bound cost/2 coincides with the exact
  // Gaussian shift KL beta^2 T / 2
  const double beta = 0.5, T = 4.0;
  CHECK(kl_girsanov(beta * beta * T) == doctest::Approx(beta * beta * T / 2.0));
}

TEST_CASE("delta-moment TV bounds") {
  CHECK(tv_delta_upper(0.0, 0.5).value == 0.0);
  CHECK(tv_delta_upper(0.1, 0.5).value == doctest::Approx(0.2714).epsilon(1e-3));
  CHECK(tv_delta_upper(1.0, 0.5).value == 1.0);
  CHECK(tv_delta_upper(1.0, 0.5).clamped);
  CHECK_THROWS_AS(tv_delta_upper(0.1, 1.0), std::invalid_argument);

  CHECK(tv_delta_floor(0.0, 0.9) == doctest::Approx(47.0 / 48.0).epsilon(1e-15));
  CHECK(tv_delta_floor(1e9, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tv_delta_floor(1e9, 0.5) < 1.0);
  // (2^{1.5} * 0.25)^2 ~ 0.5, exp(-0.5) > 1/8, so the min picks 1/8
  CHECK(tv_delta_floor(0.25, 0.5) == doctest::Approx(1.0 - 1.0 / 48.0).epsilon(1e-15));
  CHECK_THROWS_AS(tv_delta_floor(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("wiener measure lower bound") {
  CHECK(wiener_lower_bound(1.0, 0.0, 0.5, 8.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(wiener_lower_bound(0.0, 0.5, 0.5, 8.0) == 0.0);
  const double huge_n = wiener_lower_bound(1.0, 0.1, 0.5, 1e9);
  CHECK(huge_n > 0.0);
  CHECK(huge_n < 1e-8);
  CHECK_THROWS_AS(wiener_lower_bound(0.5, 0.1, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("bound monotonicity") {
  double prev = -1.0;
  for (double kl : {0.0, 0.1, 0.4, 1.0, 3.0}) {
    const double v = pinsker_tv(kl).value;
    CHECK(v >= prev);
    prev = v;
  }
  prev = -1.0;
  for (double m : {0.0, 0.05, 0.2, 0.8}) {
    const double v = tv_delta_upper(m, 0.4).value;
    CHECK(v >= prev);
    prev = v;
  }
  prev = 2.0;
  for (double kl : {0.0, 0.2, 0.5, 2.0}) {
    const double v = measure_lower_bound(0.9, kl, 8.0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("pinsker dominates the exact Gaussian marginal TV") {
  // constant drift m on [0,1]: exact endpoint TV vs pinsker_tv(m^2/2)
  for (double m : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}) {
    const double exact = gaussian_tv(0.0, m, 1.0);
    CHECK(exact <= pinsker_tv(m * m / 2.0).value + 1e-15);
  }
}

TEST_CASE("h_phi closed forms and round trip") {
  const PhiSpec lin = PhiSpec::linear(1.0);
  CHECK(h_phi(std::exp(1.0), lin) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h_phi_inverse(1.0, lin) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(h_phi(1.0, lin) == 0.0);

  const PhiSpec sqrt_phi = PhiSpec::power(0.5);
  CHECK(h_phi(4.0, sqrt_phi) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(h_phi_inverse(2.0, sqrt_phi) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(h_phi(1.0, sqrt_phi) == 0.0);

  CHECK_THROWS_AS(h_phi(0.5, lin), std::invalid_argument);

  for (const PhiSpec& phi : {PhiSpec::linear(0.7), PhiSpec::power(0.3), PhiSpec::power(0.8)}) {
    for (int i = 0; i <= 60; ++i) {
      const double x = std::pow(10.0, static_cast<double>(i) / 10.0);
      const double back = h_phi_inverse(h_phi(x, phi), phi);
      CHECK(std::abs(back - x) <= 1e-12 * x);
    }
  }
}

TEST_CASE("rate curve: endpoints, asymptotics, linearity in C1") {
  const PhiSpec lin = PhiSpec::linear(1.0);
  const double v0 = rate_curve(3.0, 0.5, 2.0, 1.0, 0.0, lin);
  CHECK(v0 == doctest::Approx(2.0 * (1.0 + std::pow(3.0, 0.5))).epsilon(1e-14));

  const PhiSpec sq = PhiSpec::power(0.5);
  for (double delta : {0.3, 0.5, 0.9}) {
    const double r2 = rate_curve(1.0, delta, 1.0, 1.0, 1e2, sq);
    const double r4 = rate_curve(1.0, delta, 1.0, 1.0, 1e4, sq);
    const double slope = (std::log(r4) - std::log(r2)) / (std::log(1e4) - std::log(1e2));
    CHECK(std::abs(slope + delta) < 0.02);
  }

  const double a = rate_curve(2.0, 0.4, 1.0, 0.5, 3.0, lin);
  const double b = rate_curve(2.0, 0.4, 2.0, 0.5, 3.0, lin);
  CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-14));
}
