// SPDX-License-Identifier: Apache-2.0
// Hand-enumerated bins with their expected feature values, shared by the
// unit tests and the acceptance runner.
#pragma once

#include <string>
#include <vector>

#include "bgp_ingest.hpp"
#include "features.hpp"

namespace oracle {

struct FeatureExpectation {
  std::size_t row;
  std::size_t feature;  // 1-based feature number
  double value;
};

struct HandExample {
  std::string name;
  std::vector<bgpad::ingest::UpdateRecord> records;
  bgpad::features::FeatureConfig config;
  std::vector<FeatureExpectation> expect;
};

std::vector<HandExample> feature_hand_examples();

/// Empty string when every expectation holds exactly.
std::string check_hand_example(const HandExample& ex);

}  // namespace oracle
