#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "daml/data/dataset.hpp"
#include "daml/types.hpp"

namespace daml::data {

struct PkBatch {
  std::vector<std::size_t> indices;
  std::vector<int> labels;  // label of each index, same order
};

// Draws P distinct classes, then K samples of each. Classes smaller than K
// are sampled with replacement. Negative labels are never drawn.
PkBatch pk_sample(std::span<const int> labels, int num_classes_per_batch, int instances_per_class, Rng& rng);

PkBatch pk_sample(const Dataset& dataset, int num_classes_per_batch, int instances_per_class,
                  std::span<const int> labels, Rng& rng);

}  // namespace daml::data
