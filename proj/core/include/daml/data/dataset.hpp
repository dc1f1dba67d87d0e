#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "daml/data/image.hpp"
#include "daml/types.hpp"

namespace daml::data {

enum class Domain { Source, Target };

std::string_view to_string(Domain domain);
Domain domain_from_string(std::string_view text);

inline constexpr int kDistractorId = -1;

struct SampleMeta {
  std::size_t sample_id = 0;
  int person_id = kDistractorId;
  int camera_id = 1;
  Domain domain = Domain::Source;
  std::string path;

  bool is_distractor() const { return person_id == kDistractorId; }
  bool operator==(const SampleMeta&) const = default;
};

// Parses Market-1501 names of the form <pid>_c<cam>s<seq>_<frame>_<k>.jpg.
// Throws ErrorKind::MalformedName on anything else.
SampleMeta parse_market_filename(std::string_view name);

// Immutable collection of samples with their decoded images. Copies share
// the underlying storage.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Domain domain, std::vector<SampleMeta> samples, std::vector<Image> images);

  Domain domain() const { return domain_; }
  std::size_t size() const { return samples_->size(); }
  bool empty() const { return size() == 0; }

  const SampleMeta& sample(std::size_t i) const { return (*samples_)[i]; }
  const std::vector<SampleMeta>& samples() const { return *samples_; }
  const Image& image(std::size_t i) const { return (*images_)[i]; }
  const std::vector<Image>& images() const { return *images_; }

  // person_id -> sample indices, distractors excluded.
  const std::map<int, std::vector<std::size_t>>& identity_index() const { return *identity_index_; }
  std::size_t num_identities() const { return identity_index_->size(); }

  // Dense class ids 0..num_identities()-1 in ascending person_id order;
  // distractors map to kOutlier.
  Labels class_labels() const;
  std::vector<int> person_ids() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;

 private:
  Domain domain_ = Domain::Source;
  std::shared_ptr<const std::vector<SampleMeta>> samples_ = std::make_shared<std::vector<SampleMeta>>();
  std::shared_ptr<const std::vector<Image>> images_ = std::make_shared<std::vector<Image>>();
  std::shared_ptr<const std::map<int, std::vector<std::size_t>>> identity_index_ =
      std::make_shared<std::map<int, std::vector<std::size_t>>>();
};

// Loads every Market-named image in `dir`, sorted by filename.
Dataset load_market_dir(const std::filesystem::path& dir, Domain domain, ImageSize size);

struct RetrievalSplit {
  Dataset query;
  Dataset gallery;
};

struct MarketRoot {
  Dataset train;
  RetrievalSplit test;
};

// <root>/bounding_box_train, <root>/query, <root>/bounding_box_test.
MarketRoot load_market_root(const std::filesystem::path& root, Domain domain, ImageSize size);
bool is_market_root(const std::filesystem::path& root);

// Persisted dataset: <dir>/images/*.png plus <dir>/manifest.csv with
// columns sample_id,person_id,camera_id,domain.
void write_manifest_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_manifest_dataset(const std::filesystem::path& dir, ImageSize size);
bool is_manifest_dataset(const std::filesystem::path& dir);

// Query = first sample of each identity, gallery = everything else.
RetrievalSplit split_first_per_identity(const Dataset& dataset, bool include_distractors = false);

}  // namespace daml::data
