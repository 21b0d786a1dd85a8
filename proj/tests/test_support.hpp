#pragma once

#include <functional>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "embmarker/error.hpp"
#include "embmarker/random.hpp"

namespace embmarker::testing {

inline Eigen::VectorXd random_unit(int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v / v.norm();
}

inline Eigen::VectorXd random_vector(int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

// Fails unless fn throws embmarker::Error with `code`.
inline void expect_error(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code) << ", nothing thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace embmarker::testing
