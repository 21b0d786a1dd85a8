#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "embmarker/stats.hpp"
#include "test_support.hpp"

namespace em = embmarker;
using em::ErrorCode;
using em::testing::expect_error;

namespace {

double brute_force_d(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  std::vector<double> points = a;
  points.insert(points.end(), b.begin(), b.end());
  for (double x : points) {
    const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [x](double v) { return v <= x; })) /
                      static_cast<double>(a.size());
    const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [x](double v) { return v <= x; })) /
                      static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// Share of all splits of the pooled sample whose D is at least the observed one.
double exact_permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double observed = brute_force_d(a, b);
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t total = pooled.size();
  std::vector<bool> pick(total, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(a.size()), true);
  std::size_t hits = 0, splits = 0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < total; ++i) (pick[i] ? x : y).push_back(pooled[i]);
    ++splits;
    if (brute_force_d(x, y) >= observed - 1e-12) ++hits;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hits) / static_cast<double>(splits);
}

std::vector<double> draw(std::size_t n, em::Rng& rng, bool ties) {
  std::vector<double> v(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> small(0, 4);
  for (auto& x : v) x = ties ? static_cast<double>(small(rng)) : gauss(rng);
  return v;
}

}  // namespace

TEST(KsStatistic, MatchesBruteForceScan) {
  em::Rng rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  for (int trial = 0; trial < 500; ++trial) {
    const bool ties = trial % 2 == 0;
    auto a = draw(size(rng), rng, ties);
    auto b = draw(size(rng), rng, ties);
    if (!ties) {
      std::normal_distribution<double> shift(0.0, 1.0);
      const double s = shift(rng);
      for (auto& x : b) x += s;
    }
    EXPECT_EQ(em::ks_statistic(a, b), brute_force_d(a, b)) << "trial " << trial;
  }
}

TEST(KsStatistic, SymmetricAndInvariantUnderMonotoneMaps) {
  em::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = draw(15, rng, false);
    auto b = draw(9, rng, false);
    for (auto& x : b) x += 0.5;
    const auto r = em::ks_two_sample(a, b);
    const auto swapped = em::ks_two_sample(b, a);
    EXPECT_EQ(r.statistic, swapped.statistic);
    EXPECT_EQ(r.p_value, swapped.p_value);
    auto cube = [](std::vector<double> v) {
      for (auto& x : v) x = x * x * x + x;
      return v;
    };
    const auto mapped = em::ks_two_sample(cube(a), cube(b));
    EXPECT_EQ(mapped.statistic, r.statistic);
    EXPECT_EQ(mapped.p_value, r.p_value);
  }
}

TEST(KsPValue, IdenticalSamplesGiveOne) {
  const std::vector<double> a{0.1, 0.4, 0.4, 0.9};
  const auto r = em::ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_GE(r.p_value, 0.999);
}

TEST(KsPValue, WithinFactorThreeOfExactPermutationTest) {
  em::Rng rng(3);
  double worst = 1.0;
  for (std::size_t n = 1; n <= 11; ++n) {
    for (std::size_t m = 1; n + m <= 12; ++m) {
      for (int trial = 0; trial < 6; ++trial) {
        auto a = draw(n, rng, false);
        auto b = draw(m, rng, false);
        for (auto& x : b) x += 0.4 * trial;
        const double exact = exact_permutation_p(a, b);
        const double asym = em::ks_two_sample(a, b).p_value;
        const double ratio = std::max(asym / exact, exact / asym);
        worst = std::max(worst, ratio);
        EXPECT_LE(ratio, 3.0) << "n=" << n << " m=" << m << " exact " << exact << " asymptotic " << asym;
      }
    }
  }
  RecordProperty("worst_ratio", std::to_string(worst));
}

TEST(KolmogorovSurvival, ReferenceValues) {
  EXPECT_NEAR(em::kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(em::kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(em::kolmogorov_survival(1.358), 0.05002679733444698, 1e-12);
  EXPECT_NEAR(em::kolmogorov_survival(2.0), 6.709252557796953e-4, 1e-15);
  EXPECT_EQ(em::kolmogorov_survival(0.0), 1.0);
  EXPECT_EQ(em::kolmogorov_survival(1e-9), 1.0);
}

TEST(KolmogorovSurvival, ContinuousAcrossTheSeriesSwitchAndDecreasing) {
  EXPECT_NEAR(em::kolmogorov_survival(1.18 - 1e-12), em::kolmogorov_survival(1.18), 1e-10);
  double prev = 1.0;
  for (double l = 0.01; l < 4.0; l += 0.01) {
    const double q = em::kolmogorov_survival(l);
    EXPECT_LE(q, prev + 1e-15) << l;
    prev = q;
  }
}

TEST(KsStatistic, EmptyInputs) {
  const std::vector<double> some{1.0}, none;
  expect_error(ErrorCode::kEmptySampleSet, [&] { em::ks_statistic(some, none); });
  expect_error(ErrorCode::kEmptySampleSet, [&] { em::ks_statistic(none, some); });
  expect_error(ErrorCode::kEmptySampleSet, [&] { em::mean(none); });
}
