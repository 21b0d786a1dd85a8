#include <algorithm>

#include <gtest/gtest.h>

#include "embmarker/classifier.hpp"
#include "test_support.hpp"

namespace em = embmarker;
using em::ErrorCode;
using em::testing::expect_error;

namespace {

struct Dataset {
  std::vector<Eigen::VectorXd> x;
  std::vector<int> y;
};

// Gaussian blobs around well separated unit-norm class centers.
Dataset blobs(int classes, int per_class, double noise, std::uint64_t seed) {
  em::Rng rng(seed);
  std::vector<Eigen::VectorXd> centers;
  for (int c = 0; c < classes; ++c) centers.push_back(em::testing::random_unit(16, rng));
  Dataset d;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < classes; ++c) {
      Eigen::VectorXd v = centers[static_cast<std::size_t>(c)] + noise * em::testing::random_vector(16, rng);
      d.x.push_back(v / v.norm());
      d.y.push_back(c);
    }
  }
  return d;
}

}  // namespace

TEST(Classifier, SeparableDataIsLearned) {
  const auto d = blobs(4, 150, 0.05, 1);
  const auto r = em::train_classifier(d.x, d.y, 2);
  EXPECT_GE(r.accuracy, 0.9);
  EXPECT_EQ(r.train_size + r.test_size, d.x.size());
  EXPECT_EQ(r.test_size, 120u);
}

TEST(Classifier, ShuffledLabelsStayNearChance) {
  auto d = blobs(4, 150, 0.05, 3);
  em::Rng rng(4);
  std::shuffle(d.y.begin(), d.y.end(), rng);
  const double acc = em::train_downstream_classifier(d.x, d.y, 5);
  EXPECT_NEAR(acc, 0.25, 0.1);
}

TEST(Classifier, DeterministicGivenSeed) {
  const auto d = blobs(3, 60, 0.5, 6);
  EXPECT_EQ(em::train_downstream_classifier(d.x, d.y, 7), em::train_downstream_classifier(d.x, d.y, 7));
}

TEST(Classifier, DegenerateLabels) {
  auto d = blobs(2, 10, 0.1, 8);
  std::vector<int> one_class(d.y.size(), 0);
  expect_error(ErrorCode::kDegenerateLabels, [&] { em::train_classifier(d.x, one_class, 1); });
  std::vector<int> lonely = d.y;
  std::replace(lonely.begin(), lonely.end(), 1, 0);
  lonely.back() = 1;
  expect_error(ErrorCode::kDegenerateLabels, [&] { em::train_classifier(d.x, lonely, 1); });
  std::vector<int> short_labels(d.y.begin(), d.y.end() - 1);
  expect_error(ErrorCode::kInvalidArgument, [&] { em::train_classifier(d.x, short_labels, 1); });
}
