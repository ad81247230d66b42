#include <stdexcept>
#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "oracles.hpp"
#include "tpmr/dynamics.hpp"
#include "tpmr/spin_model.hpp"

using namespace tpmr;

TEST_CASE("energy levels at the default field") {
  NvParams p;
  CHECK(energy_level(p, {0, 0}) == 0.0);
  CHECK(energy_level(p, {-1, 1}) == doctest::Approx(2830.75).epsilon(1e-14));
  CHECK(energy_level(p, {1, 0}) == doctest::Approx(2912.0).epsilon(1e-14));
  CHECK_THROWS_AS(SpinLabel::make(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(SpinLabel::make(0, -2), std::invalid_argument);
}

TEST_CASE("esr triplet") {
  NvParams p;
  auto f = esr_frequencies(p);
  CHECK(f[0] == doctest::Approx(2825.8));
  CHECK(f[1] == doctest::Approx(2828.0));
  CHECK(f[2] == doctest::Approx(2830.2));

  NvParams zero;
  zero.zeeman = 0;
  zero.a_hf = 0;
  for (double v : esr_frequencies(zero)) CHECK(v == 2870.0);

  // each line is an energy difference within one nuclear manifold
  std::vector<double> diffs;
  for (int mi : {-1, 0, 1}) diffs.push_back(energy_level(p, {-1, mi}) - energy_level(p, {0, mi}));
  std::sort(diffs.begin(), diffs.end());
  for (int i = 0; i < 3; ++i) CHECK(diffs[i] == doctest::Approx(f[i]).epsilon(1e-15));
}

TEST_CASE("nmr lines") {
  NvParams p;
  auto n = nmr_lines(p);
  CHECK(n[0] == doctest::Approx(2820.85));
  CHECK(n[1] == doctest::Approx(2825.25));
  CHECK(n[2] == doctest::Approx(2832.95));
  CHECK(n[3] == doctest::Approx(2832.95));
  p.q_quad = 0;
  p.a_hf = 0;
  for (double v : nmr_lines(p)) CHECK(v == doctest::Approx(center_frequency(p)));
}

TEST_CASE("selection rules") {
  CHECK(transition_allowed({0, 0}, {-1, 0}, TransitionKind::esr));
  CHECK_FALSE(transition_allowed({0, 0}, {-1, 1}, TransitionKind::esr));
  CHECK(transition_allowed({0, 1}, {0, 0}, TransitionKind::nmr));
  CHECK_FALSE(transition_allowed({1, 0}, {-1, 0}, TransitionKind::esr));
  CHECK_FALSE(transition_allowed({0, 1}, {0, -1}, TransitionKind::nmr));
  CHECK_FALSE(transition_allowed({0, 0}, {-1, 0}, TransitionKind::nmr));
}

TEST_CASE("two-photon line positions") {
  NvParams p;
  auto t = tpmr_positions(p, 5.3);
  const double expected[] = {2820.5, 2822.7, 2824.9, 2831.1, 2833.3, 2835.5};
  for (int i = 0; i < 6; ++i) CHECK(t[i] == doctest::Approx(expected[i]));
  auto z = tpmr_positions(p, 0.0);
  auto f = esr_frequencies(p);
  for (int i = 0; i < 3; ++i) {
    CHECK(z[2 * i] == f[i]);
    CHECK(z[2 * i + 1] == f[i]);
  }
  CHECK_THROWS_AS(tpmr_positions(p, -1.0), std::invalid_argument);
}

TEST_CASE("parameter validation names the field") {
  NvParams p;
  p.t1 = 0.5;
  p.t2 = 1.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("t1"), std::invalid_argument);
  p = NvParams{};
  p.zeeman = 3000;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("zeeman"), std::invalid_argument);
  p = NvParams{};
  p.t2_star = 0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("t2_star"), std::invalid_argument);
}

TEST_CASE("property: levels are eigenvalues of the drive-free Hamiltonian") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const NvParams p = oracle::random_params(rng);
    const Matrix9cd h = lab_hamiltonian(p, DriveTone::probe(0.0, 2870.0), DriveTone::pump(0.0, 5.0), 0.37) /
                        kTwoPi;
    Eigen::SelfAdjointEigenSolver<Matrix9cd> eig(h);
    std::vector<double> levels;
    for (int ms : {1, 0, -1})
      for (int mi : {1, 0, -1}) levels.push_back(energy_level(p, {ms, mi}));
    std::sort(levels.begin(), levels.end());
    const double scale = std::max(1.0, std::abs(levels.back()));
    for (int i = 0; i < 9; ++i) CHECK(std::abs(eig.eigenvalues()[i] - levels[i]) <= 1e-12 * scale);
  }
}

TEST_CASE("property: line identities over random parameters") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pump(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const NvParams p = oracle::random_params(rng);
    const auto n = nmr_lines(p);
    CHECK(n[2] == doctest::Approx(n[3]).epsilon(1e-14));
    const double fp = pump(rng);
    const auto t = tpmr_positions(p, fp);
    CHECK(std::is_sorted(t.begin(), t.end()));
    // symmetric about each carrier
    for (double c : esr_frequencies(p)) {
      const bool lo = std::any_of(t.begin(), t.end(), [&](double x) { return std::abs(x - (c - fp)) < 1e-9; });
      const bool hi = std::any_of(t.begin(), t.end(), [&](double x) { return std::abs(x - (c + fp)) < 1e-9; });
      CHECK((lo && hi));
    }
  }
}
