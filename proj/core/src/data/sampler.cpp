#include "daml/data/sampler.hpp"

#include <map>
#include <string>

#include "daml/error.hpp"

namespace daml::data {

PkBatch pk_sample(std::span<const int> labels, int num_classes_per_batch, int instances_per_class, Rng& rng) {
  require(num_classes_per_batch >= 1 && instances_per_class >= 1, ErrorKind::InvalidConfig,
          "P and K must be positive");

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) members[labels[i]].push_back(i);

  if (members.size() < static_cast<std::size_t>(num_classes_per_batch))
    raise(ErrorKind::InsufficientClasses, std::to_string(members.size()) + " labeled classes, batch needs " +
                                              std::to_string(num_classes_per_batch));

  std::vector<int> classes;
  classes.reserve(members.size());
  for (const auto& [label, idx] : members) classes.push_back(label);

  // Partial Fisher-Yates over the class list.
  for (int p = 0; p < num_classes_per_batch; ++p) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(p), classes.size() - 1);
    std::swap(classes[static_cast<std::size_t>(p)], classes[pick(rng)]);
  }

  PkBatch batch;
  const auto total = static_cast<std::size_t>(num_classes_per_batch * instances_per_class);
  batch.indices.reserve(total);
  batch.labels.reserve(total);
  for (int p = 0; p < num_classes_per_batch; ++p) {
    const int label = classes[static_cast<std::size_t>(p)];
    std::vector<std::size_t> pool = members[label];
    const auto k = static_cast<std::size_t>(instances_per_class);
    if (pool.size() >= k) {
      for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
        batch.indices.push_back(pool[j]);
        batch.labels.push_back(label);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t j = 0; j < k; ++j) {
        batch.indices.push_back(pool[pick(rng)]);
        batch.labels.push_back(label);
      }
    }
  }
  return batch;
}

PkBatch pk_sample(const Dataset& dataset, int num_classes_per_batch, int instances_per_class,
                  std::span<const int> labels, Rng& rng) {
  require(labels.size() == dataset.size(), ErrorKind::ShapeMismatch, "one label per sample required");
  return pk_sample(labels, num_classes_per_batch, instances_per_class, rng);
}

}  // namespace daml::data
