#pragma once

#include <cstdint>

#include "daml/data/dataset.hpp"

namespace daml::data {

struct SyntheticConfig {
  int n_ids = 20;
  int per_id = 8;
  int n_cameras = 4;
  // Strength of the target-only appearance change (contrast loss plus a
  // smooth colour field); 0 makes the two domains statistically identical.
  double domain_shift = 0.6;
  std::uint64_t seed = 0;
  ImageSize image_size{32, 16};
  // Block grid encoding an identity.
  int grid_rows = 4;
  int grid_cols = 2;
  double pixel_noise = 0.04;
};

struct SyntheticDomains {
  Dataset source;
  // Person ids are hidden ground truth; training code only reads them
  // through evaluation and cluster-quality oracles.
  Dataset target;
};

// Source ids are 0..n_ids-1, target ids n_ids..2*n_ids-1. Camera of the j-th
// image of an identity is 1 + j % n_cameras.
SyntheticDomains generate_synthetic_domains(const SyntheticConfig& config);

}  // namespace daml::data
