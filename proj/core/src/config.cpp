#include "daml/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "daml/error.hpp"

namespace daml {

void HyperParams::validate() const {
  require(alpha > 0.0, ErrorKind::ConfigError, "alpha must be positive");
  require(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0, ErrorKind::ConfigError, "loss weights must be >= 0");
  require(rho > 0.0, ErrorKind::ConfigError, "rho must be positive");
  require(eps > 0.0, ErrorKind::ConfigError, "eps must be positive");
  require(min_samples >= 1, ErrorKind::ConfigError, "min_samples must be >= 1");
  require(batch_ids >= 2 && batch_instances >= 2, ErrorKind::ConfigError,
          "batches need at least 2 identities with 2 images each");
  require(kl_temperature > 0.0, ErrorKind::ConfigError, "kl_temperature must be positive");
}

void TrainConfig::validate() const {
  require(pretrain_epochs >= 0 && adapt_epochs >= 0, ErrorKind::ConfigError, "epoch counts must be >= 0");
  require(lr_teacher_pretrain > 0 && lr_student_pretrain > 0 && lr_teacher_adapt > 0 && lr_student_adapt > 0,
          ErrorKind::ConfigError, "learning rates must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::ConfigError, "momentum must lie in [0,1)");
  require(weight_decay_teacher >= 0 && weight_decay_student >= 0, ErrorKind::ConfigError, "weight decay must be >= 0");
  require(steps_per_epoch >= 0 && pretrain_steps_per_epoch >= 0 && eval_every >= 1, ErrorKind::ConfigError, "bad step/eval cadence");
  require(cluster_repeat >= 0, ErrorKind::ConfigError, "cluster_repeat must be >= 0");
  require(smooth_temperature > 0.0, ErrorKind::ConfigError, "smooth_temperature must be positive");
  train_augment.validate();
  cluster_augment.validate();
  teacher.validate();
  student.validate();
  nn::check_heterogeneous(teacher, student);
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"seed", ValueType::Integer, "0", "seed for every stochastic draw"},
      {"image_height", ValueType::Integer, "256", "network input height"},
      {"image_width", ValueType::Integer, "128", "network input width"},

      {"synth_ids", ValueType::Integer, "20", "synthetic identities per domain"},
      {"synth_per_id", ValueType::Integer, "8", "synthetic images per identity"},
      {"synth_cameras", ValueType::Integer, "4", "synthetic camera count"},
      {"synth_shift", ValueType::Real, "0.6", "synthetic target appearance shift"},

      {"teacher_dim", ValueType::Integer, "64", "teacher feature dimension c_T"},
      {"teacher_depth", ValueType::Integer, "4", "teacher conv stages"},
      {"teacher_width", ValueType::Integer, "16", "teacher base channels"},
      {"student_dim", ValueType::Integer, "48", "student feature dimension c_S"},
      {"student_depth", ValueType::Integer, "4", "student attention blocks"},
      {"student_patch", ValueType::Integer, "8", "student patch size in pixels"},
      {"student_heads", ValueType::Integer, "4", "student attention heads"},
      {"student_mlp_ratio", ValueType::Integer, "2", "student MLP expansion"},

      {"alpha", ValueType::Real, "0.5", "neighbour gate on per-subspace cosine distance"},
      {"lambda1", ValueType::Real, "0.1", "weight of teacher source identity + source triplet"},
      {"lambda2", ValueType::Real, "0.7", "weight of identity distillation"},
      {"lambda3", ValueType::Real, "1.2", "weight of domain distillation"},
      {"rho", ValueType::Real, "1.2", "triplet margin"},
      {"eps", ValueType::Real, "0.6", "DBSCAN neighbourhood radius"},
      {"min_samples", ValueType::Integer, "4", "DBSCAN core point size (2 for few images per id)"},
      {"batch_ids", ValueType::Integer, "16", "identities per batch (P)"},
      {"batch_instances", ValueType::Integer, "4", "images per identity (K)"},
      {"kl_temperature", ValueType::Real, "1", "softmax temperature of the distillation terms"},
      {"joint_prenormalize", ValueType::Boolean, "false", "unit-normalize each subspace before concatenation"},

      {"pretrain_epochs", ValueType::Integer, "15", "source-only epochs"},
      {"adapt_epochs", ValueType::Integer, "10", "adaptation epochs"},
      {"lr_teacher_pretrain", ValueType::Real, "0.01", "teacher rate, pretraining (step decay)"},
      {"lr_student_pretrain", ValueType::Real, "0.008", "student rate, pretraining (cosine)"},
      {"lr_teacher_adapt", ValueType::Real, "0.005", "teacher rate, adaptation"},
      {"lr_student_adapt", ValueType::Real, "0.004", "student rate, adaptation"},
      {"teacher_milestones", ValueType::IntegerList, "40,70", "teacher decay epochs"},
      {"lr_decay", ValueType::Real, "0.1", "teacher decay factor"},
      {"momentum", ValueType::Real, "0.9", "SGD momentum"},
      {"wd_teacher", ValueType::Real, "0.0005", "teacher weight decay"},
      {"wd_student", ValueType::Real, "0.0001", "student weight decay"},
      {"pretrain_steps_per_epoch", ValueType::Integer, "0", "pretraining steps; 0 = ceil(samples / batch size)"},
      {"steps_per_epoch", ValueType::Integer, "0", "adaptation steps; 0 = ceil(clustered samples / batch size)"},
      {"eval_every", ValueType::Integer, "1", "evaluate every N adaptation epochs"},

      {"flip_prob", ValueType::Real, "0.5", "training flip probability"},
      {"erase_prob", ValueType::Real, "0.5", "training erase probability"},
      {"crop", ValueType::Boolean, "false", "training pad-and-crop"},
      {"cluster_repeat", ValueType::Integer, "0", "augmented copies averaged into clustering features"},
      {"cluster_erase_prob", ValueType::Real, "0.5", "erase probability for clustering copies"},
      {"cluster_crop", ValueType::Boolean, "false", "pad-and-crop for clustering copies"},

      {"use_source_batches", ValueType::Boolean, "true", "draw a source batch each adaptation step"},
      {"smooth_update", ValueType::Boolean, "true", "smooth classifier update (false: re-init from centres)"},
      {"smooth_temperature", ValueType::Real, "1.0", "softmax temperature of the smooth classifier update"},
      {"normalize_init_centers", ValueType::Boolean, "true", "L2-normalize centres when seeding target classifiers"},
      {"include_distractors", ValueType::Boolean, "false", "keep person_id -1 in the evaluation gallery"},
  };
  return schema;
}

namespace {

const ConfigKey* find_key(std::string_view name) {
  const auto& schema = config_schema();
  const auto it = std::find_if(schema.begin(), schema.end(), [&](const ConfigKey& k) { return k.name == name; });
  return it == schema.end() ? nullptr : &*it;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

long long parse_int(std::string_view key, std::string_view text) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    raise(ErrorKind::ConfigError, "'" + std::string(key) + "' expects an integer, got '" + std::string(text) + "'");
  return value;
}

double parse_real(std::string_view key, std::string_view text) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    raise(ErrorKind::ConfigError, "'" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  raise(ErrorKind::ConfigError, "'" + std::string(key) + "' expects a boolean, got '" + std::string(text) + "'");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(static_cast<int>(parse_int(key, piece)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_value(const ConfigKey& key, std::string_view value) {
  switch (key.type) {
    case ValueType::Integer: parse_int(key.name, value); break;
    case ValueType::Real: parse_real(key.name, value); break;
    case ValueType::Boolean: parse_bool(key.name, value); break;
    case ValueType::IntegerList: parse_int_list(key.name, value); break;
    case ValueType::Text: break;
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& key : config_schema()) values_.emplace(std::string(key.name), std::string(key.default_value));
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  const ConfigKey* spec = find_key(key);
  if (!spec) raise(ErrorKind::ConfigError, "unknown configuration key '" + std::string(key) + "'");
  check_value(*spec, value);
  values_.find(key)->second = std::string(value);
}

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    raise(ErrorKind::ConfigError, "expected key=value, got '" + std::string(assignment) + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::merge_text(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set(line);
    } catch (const Error& e) {
      raise(ErrorKind::ConfigError, std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) raise(ErrorKind::ConfigError, "unknown configuration key '" + std::string(key) + "'");
  return it->second;
}

long long RunConfig::get_int(std::string_view key) const { return parse_int(key, get(key)); }
double RunConfig::get_real(std::string_view key) const { return parse_real(key, get(key)); }
bool RunConfig::get_bool(std::string_view key) const { return parse_bool(key, get(key)); }
std::vector<int> RunConfig::get_int_list(std::string_view key) const { return parse_int_list(key, get(key)); }

std::string RunConfig::serialize() const {
  std::ostringstream os;
  for (const auto& key : config_schema()) os << key.name << " = " << get(key.name) << '\n';
  return os.str();
}

void RunConfig::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, "cannot write " + path.string());
  out << serialize();
}

data::ImageSize RunConfig::image_size() const {
  return {static_cast<int>(get_int("image_height")), static_cast<int>(get_int("image_width"))};
}

HyperParams RunConfig::hyper_params() const {
  HyperParams hp;
  hp.alpha = get_real("alpha");
  hp.lambda1 = get_real("lambda1");
  hp.lambda2 = get_real("lambda2");
  hp.lambda3 = get_real("lambda3");
  hp.rho = get_real("rho");
  hp.eps = get_real("eps");
  hp.min_samples = static_cast<int>(get_int("min_samples"));
  hp.batch_ids = static_cast<int>(get_int("batch_ids"));
  hp.batch_instances = static_cast<int>(get_int("batch_instances"));
  hp.kl_temperature = get_real("kl_temperature");
  hp.joint_prenormalize = get_bool("joint_prenormalize");
  hp.validate();
  return hp;
}

TrainConfig RunConfig::train_config() const {
  const data::ImageSize size = image_size();
  TrainConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(get_int("seed"));
  cfg.pretrain_epochs = static_cast<int>(get_int("pretrain_epochs"));
  cfg.adapt_epochs = static_cast<int>(get_int("adapt_epochs"));
  cfg.lr_teacher_pretrain = get_real("lr_teacher_pretrain");
  cfg.lr_student_pretrain = get_real("lr_student_pretrain");
  cfg.lr_teacher_adapt = get_real("lr_teacher_adapt");
  cfg.lr_student_adapt = get_real("lr_student_adapt");
  cfg.teacher_milestones = get_int_list("teacher_milestones");
  cfg.lr_decay = get_real("lr_decay");
  cfg.momentum = get_real("momentum");
  cfg.weight_decay_teacher = get_real("wd_teacher");
  cfg.weight_decay_student = get_real("wd_student");
  cfg.pretrain_steps_per_epoch = static_cast<int>(get_int("pretrain_steps_per_epoch"));
  cfg.steps_per_epoch = static_cast<int>(get_int("steps_per_epoch"));
  cfg.eval_every = static_cast<int>(get_int("eval_every"));

  cfg.train_augment = {get_real("flip_prob"), get_real("erase_prob"), get_bool("crop"), size};
  cfg.cluster_augment = {0.0, get_real("cluster_erase_prob"), get_bool("cluster_crop"), size};
  cfg.cluster_repeat = static_cast<int>(get_int("cluster_repeat"));

  cfg.use_source_batches = get_bool("use_source_batches");
  cfg.smooth_update = get_bool("smooth_update");
  cfg.smooth_temperature = get_real("smooth_temperature");
  cfg.normalize_init_centers = get_bool("normalize_init_centers");
  cfg.include_distractors = get_bool("include_distractors");

  cfg.teacher = nn::default_teacher_config(size);
  cfg.teacher.feature_dim = static_cast<int>(get_int("teacher_dim"));
  cfg.teacher.depth = static_cast<int>(get_int("teacher_depth"));
  cfg.teacher.width = static_cast<int>(get_int("teacher_width"));
  cfg.student = nn::default_student_config(size);
  cfg.student.feature_dim = static_cast<int>(get_int("student_dim"));
  cfg.student.depth = static_cast<int>(get_int("student_depth"));
  cfg.student.patch_size = static_cast<int>(get_int("student_patch"));
  cfg.student.heads = static_cast<int>(get_int("student_heads"));
  cfg.student.mlp_ratio = static_cast<int>(get_int("student_mlp_ratio"));
  try {
    cfg.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    raise(ErrorKind::ConfigError, e.what());
  }
  return cfg;
}

data::SyntheticConfig RunConfig::synthetic_config() const {
  data::SyntheticConfig cfg;
  cfg.n_ids = static_cast<int>(get_int("synth_ids"));
  cfg.per_id = static_cast<int>(get_int("synth_per_id"));
  cfg.n_cameras = static_cast<int>(get_int("synth_cameras"));
  cfg.domain_shift = get_real("synth_shift");
  cfg.seed = static_cast<std::uint64_t>(get_int("seed"));
  cfg.image_size = image_size();
  return cfg;
}

}  // namespace daml
