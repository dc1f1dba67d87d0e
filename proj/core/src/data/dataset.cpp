#include "daml/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <optional>
#include <regex>
#include <sstream>

#include "daml/error.hpp"

namespace fs = std::filesystem;

namespace daml::data {

std::string_view to_string(Domain domain) { return domain == Domain::Source ? "source" : "target"; }

Domain domain_from_string(std::string_view text) {
  if (text == "source") return Domain::Source;
  if (text == "target") return Domain::Target;
  raise(ErrorKind::IoError, "unknown domain '" + std::string(text) + "'");
}

SampleMeta parse_market_filename(std::string_view name) {
  static const std::regex pattern(R"(^(-?\d+)_c(\d+)s(\d+)_(\d+)_(\d+)\.jpg$)");
  std::match_results<std::string_view::const_iterator> match;
  if (!std::regex_match(name.begin(), name.end(), match, pattern))
    raise(ErrorKind::MalformedName, "not a Market-1501 filename: '" + std::string(name) + "'");

  SampleMeta meta;
  meta.person_id = std::stoi(match[1].str());
  meta.camera_id = std::stoi(match[2].str());
  meta.path = std::string(name);
  if (meta.person_id < kDistractorId)
    raise(ErrorKind::MalformedName, "person id below -1 in '" + std::string(name) + "'");
  if (meta.camera_id < 1) raise(ErrorKind::MalformedName, "camera id must be >= 1 in '" + std::string(name) + "'");
  return meta;
}

Dataset::Dataset(Domain domain, std::vector<SampleMeta> samples, std::vector<Image> images) : domain_(domain) {
  require(samples.size() == images.size(), ErrorKind::InvalidState, "sample and image counts differ");
  std::map<int, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i].person_id >= kDistractorId, ErrorKind::InvalidState, "person_id must be >= -1");
    samples[i].domain = domain;
    if (!samples[i].is_distractor()) index[samples[i].person_id].push_back(i);
  }
  samples_ = std::make_shared<const std::vector<SampleMeta>>(std::move(samples));
  images_ = std::make_shared<const std::vector<Image>>(std::move(images));
  identity_index_ = std::make_shared<const std::map<int, std::vector<std::size_t>>>(std::move(index));
}

Labels Dataset::class_labels() const {
  Labels labels(size(), kOutlier);
  int next = 0;
  for (const auto& [pid, members] : identity_index()) {
    for (std::size_t i : members) labels[i] = next;
    ++next;
  }
  return labels;
}

std::vector<int> Dataset::person_ids() const {
  std::vector<int> ids;
  ids.reserve(size());
  for (const auto& s : samples()) ids.push_back(s.person_id);
  return ids;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<SampleMeta> metas;
  std::vector<Image> imgs;
  metas.reserve(indices.size());
  imgs.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < size(), ErrorKind::InvalidState, "subset index out of range");
    metas.push_back(sample(i));
    imgs.push_back(image(i));
  }
  return Dataset(domain_, std::move(metas), std::move(imgs));
}

Dataset load_market_dir(const fs::path& dir, Domain domain, ImageSize size) {
  if (!fs::is_directory(dir)) raise(ErrorKind::IoError, "missing directory " + dir.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() == ".jpg") names.push_back(name);
  }
  std::sort(names.begin(), names.end());

  std::vector<SampleMeta> metas;
  std::vector<Image> imgs;
  for (const auto& name : names) {
    SampleMeta meta = parse_market_filename(name);
    meta.sample_id = metas.size();
    meta.domain = domain;
    meta.path = (dir / name).string();
    imgs.push_back(load_image(meta.path, size));
    metas.push_back(std::move(meta));
  }
  return Dataset(domain, std::move(metas), std::move(imgs));
}

bool is_market_root(const fs::path& root) {
  return fs::is_directory(root / "bounding_box_train") && fs::is_directory(root / "query") &&
         fs::is_directory(root / "bounding_box_test");
}

MarketRoot load_market_root(const fs::path& root, Domain domain, ImageSize size) {
  if (!is_market_root(root)) raise(ErrorKind::IoError, root.string() + " is not a Market-style dataset root");
  return MarketRoot{load_market_dir(root / "bounding_box_train", domain, size),
                    {load_market_dir(root / "query", domain, size),
                     load_market_dir(root / "bounding_box_test", domain, size)}};
}

namespace {

std::string image_name(std::size_t sample_id) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << sample_id << ".png";
  return os.str();
}

template <typename T>
T parse_number(const std::string& field, const fs::path& file) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    raise(ErrorKind::IoError, "bad number '" + field + "' in " + file.string());
  return value;
}

}  // namespace

void write_manifest_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "images");
  std::ofstream csv(dir / "manifest.csv");
  if (!csv) raise(ErrorKind::IoError, "cannot write " + (dir / "manifest.csv").string());
  csv << "sample_id,person_id,camera_id,domain\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SampleMeta& s = dataset.sample(i);
    save_png(dataset.image(i), dir / "images" / image_name(s.sample_id));
    csv << s.sample_id << ',' << s.person_id << ',' << s.camera_id << ',' << to_string(s.domain) << '\n';
  }
}

bool is_manifest_dataset(const fs::path& dir) { return fs::is_regular_file(dir / "manifest.csv"); }

Dataset read_manifest_dataset(const fs::path& dir, ImageSize size) {
  const fs::path file = dir / "manifest.csv";
  std::ifstream csv(file);
  if (!csv) raise(ErrorKind::IoError, "cannot read " + file.string());
  std::string line;
  std::getline(csv, line);
  if (line != "sample_id,person_id,camera_id,domain") raise(ErrorKind::IoError, "unexpected header in " + file.string());

  std::vector<SampleMeta> metas;
  std::vector<Image> imgs;
  std::optional<Domain> domain;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    if (fields.size() != 4) raise(ErrorKind::IoError, "expected 4 columns in " + file.string() + ": " + line);

    SampleMeta meta;
    meta.sample_id = parse_number<std::size_t>(fields[0], file);
    meta.person_id = parse_number<int>(fields[1], file);
    meta.camera_id = parse_number<int>(fields[2], file);
    meta.domain = domain_from_string(fields[3]);
    if (domain && *domain != meta.domain) raise(ErrorKind::IoError, "mixed domains in " + file.string());
    domain = meta.domain;
    meta.path = (dir / "images" / image_name(meta.sample_id)).string();
    imgs.push_back(load_image(meta.path, size));
    metas.push_back(std::move(meta));
  }
  return Dataset(domain.value_or(Domain::Source), std::move(metas), std::move(imgs));
}

RetrievalSplit split_first_per_identity(const Dataset& dataset, bool include_distractors) {
  std::vector<std::size_t> query;
  std::vector<std::size_t> gallery;
  std::vector<bool> is_query(dataset.size(), false);
  for (const auto& [pid, members] : dataset.identity_index()) is_query[members.front()] = true;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (is_query[i]) {
      query.push_back(i);
    } else if (!dataset.sample(i).is_distractor() || include_distractors) {
      gallery.push_back(i);
    }
  }
  return {dataset.subset(query), dataset.subset(gallery)};
}

}  // namespace daml::data
