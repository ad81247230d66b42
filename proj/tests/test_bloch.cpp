#include <stdexcept>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tpmr/bloch.hpp"
#include "tpmr/log.hpp"

using namespace tpmr;

TEST_CASE("closed-form absorption") {
  CHECK(steady_state_absorption(0.3, 0.0, 6000, 1) == 0.0);
  // w1 T2 = 1 and w1^2 T1 T2 = 1 on resonance
  const double rabi = 1.0 / kTwoPi;
  CHECK(steady_state_absorption(0.0, rabi, 1.0, 1.0) == doctest::Approx(-0.5).epsilon(1e-15));
  const auto ref = oracle::bloch_cramer(0.3, 0.09, 6000, 1);
  CHECK(oracle::rel_err(steady_state_absorption(0.3, 0.09, 6000, 1), ref[1]) < 1e-9);
}

TEST_CASE("steady-state oracle agrees with the closed form") {
  const auto s = bloch_steady_state_oracle(0.3, 0.09, 6000, 1);
  CHECK(s.integrated.sigma[1] == doctest::Approx(steady_state_absorption(0.3, 0.09, 6000, 1)).epsilon(1e-9));
  const auto relaxed = bloch_steady_state_oracle(1.7, 0.0, 10, 1);
  CHECK(std::abs(relaxed.linear_solve.sigma[0]) < 1e-15);
  CHECK(std::abs(relaxed.linear_solve.sigma[1]) < 1e-15);
  CHECK(relaxed.linear_solve.sigma[2] == doctest::Approx(-1.0));
}

TEST_CASE("property: closed form against Cramer's rule over random draws") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> off(-5.0, 5.0), lr(-3.0, 1.0), lt2(-1.0, 1.0), lratio(0.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double rabi = std::pow(10.0, lr(rng));
    const double t2 = std::pow(10.0, lt2(rng));
    const double t1 = t2 * std::pow(10.0, lratio(rng));
    const double o = off(rng);
    const auto ref = oracle::bloch_cramer(o, rabi, t1, t2);
    const double y = steady_state_absorption(o, rabi, t1, t2);
    CHECK(oracle::rel_err(y, ref[1]) < 1e-9);
    CHECK(y <= 0.0);
    CHECK(y >= -0.5 - 1e-12);
    const double norm = std::sqrt(ref[0] * ref[0] + ref[1] * ref[1] + ref[2] * ref[2]);
    CHECK(norm <= 1.0 + 1e-9);
  }
}

TEST_CASE("property: saturation peaks at w1^2 T1 T2 = 1") {
  const double t1 = 50.0, t2 = 2.0;
  const double peak = 1.0 / (kTwoPi * std::sqrt(t1 * t2));
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double rabi = peak * i / 100.0;
    const double v = std::abs(steady_state_absorption(0.0, rabi, t1, t2));
    CHECK(v > prev);
    prev = v;
  }
  for (int i = 101; i <= 300; ++i) {
    const double rabi = peak * i / 100.0;
    const double v = std::abs(steady_state_absorption(0.0, rabi, t1, t2));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("multiphoton sum reduces to the single-photon form") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> off(-8.0, 8.0), rf(1.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const DriveTone probe = DriveTone::probe(0.09, 2828.0);
    const DriveTone pump = DriveTone::pump(0.0, rf(rng));
    const double o = off(rng);
    for (int k_max : {0, 1, 3})
      CHECK(multiphoton_absorption(o, probe, pump, 6000, 1, k_max) ==
            doctest::Approx(-steady_state_absorption(o, 0.09, 6000, 1)).epsilon(1e-14));
    // k_max = 0 with J0 forced to one
    const std::vector<OrderWeight> w{{0, 1.0}};
    CHECK(lorentzian_sum(o, 0.09, pump.freq, 6000, 1, w) ==
          doctest::Approx(-steady_state_absorption(o, 0.09, 6000, 1)).epsilon(1e-14));
  }
}

TEST_CASE("sideband to carrier peak ratio") {
  const DriveTone probe = DriveTone::probe(0.09, 2828.0);
  for (double w2 : {0.3, 1.0, 1.5}) {
    const DriveTone pump = DriveTone::pump(w2, 5.3);
    const double z = 2 * w2 / 5.3;
    const double j0 = bessel_j(0, z), j1 = bessel_j(1, z);
    const double s = std::pow(kTwoPi * 0.09, 2) * 6000 * 1;
    const double expected = j1 * j1 * (1 + s * j0 * j0) / (j0 * j0 * (1 + s * j1 * j1));
    const double ratio = multiphoton_term(1, 5.3, probe, pump, 6000, 1) / multiphoton_term(0, 0.0, probe, pump, 6000, 1);
    CHECK(ratio == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("sideband centres sit at +-w_rf") {
  const DriveTone probe = DriveTone::probe(0.09, 2828.0);
  const DriveTone pump = DriveTone::pump(1.0, 5.3);
  for (int k : {-1, 1}) {
    const double centre = k * 5.3;
    const double v = multiphoton_term(k, centre, probe, pump, 6000, 1);
    CHECK(v > multiphoton_term(k, centre + 0.01, probe, pump, 6000, 1));
    CHECK(v > multiphoton_term(k, centre - 0.01, probe, pump, 6000, 1));
  }
}

TEST_CASE("intensity curve") {
  std::vector<std::string> warnings;
  auto prev = log::set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const DriveTone probe = DriveTone::probe(0.09, 2828.0);
  const std::vector<double> rf{1.0, 2.0, 3.0, 4.0, 5.0, 40.0, 400.0};
  const auto curve = tpmr_intensity_curve(probe, 1.0, rf, 6000, 1);
  log::set_warning_sink(prev);
  REQUIRE(curve.size() == rf.size());
  CHECK_FALSE(curve[0].valid);
  CHECK_FALSE(curve[1].valid);
  CHECK(curve[2].valid);
  CHECK(warnings.size() == 1);
  CHECK(curve[2].intensity > curve[3].intensity);
  CHECK(curve[3].intensity > curve[4].intensity);
  CHECK(curve[6].intensity < 0.05 * curve[2].intensity);
  const std::vector<double> bad{2.0, 1.0};
  CHECK_THROWS_AS(tpmr_intensity_curve(probe, 1.0, bad, 6000, 1), std::invalid_argument);
}
