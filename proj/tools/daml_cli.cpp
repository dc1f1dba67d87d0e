#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "daml/config.hpp"
#include "daml/data/synthetic.hpp"
#include "daml/error.hpp"
#include "daml/evaluation.hpp"
#include "daml/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace daml;

namespace {

constexpr const char* kOutputRootEnv = "DAML_OUTPUT_ROOT";

const char* const kPrecedence =
    "Settings resolve as: built-in defaults, then --config file, then --set key=value (later --set wins). "
    "Without --out, artifacts go to a timestamped directory under $DAML_OUTPUT_ROOT (default ./runs).";

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "override one setting, e.g. --set eps=0.5 (repeatable)");
  cmd->add_option("--out", o.out, "run directory (default: timestamped under $DAML_OUTPUT_ROOT)");
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg.merge_file(o.config);
  for (const auto& s : o.overrides) cfg.set(s);
  return cfg;
}

fs::path run_directory(const CommonOptions& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  const char* env = std::getenv(kOutputRootEnv);
  const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream name;
  name << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
  fs::path dir = root / name.str();
  for (int i = 1; fs::exists(dir); ++i) dir = root / (name.str() + "-" + std::to_string(i));
  return dir;
}

fs::path prepare_run_directory(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  cfg.write(dir / "resolved-config.cfg");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, "cannot write " + path.string());
  out << text << '\n';
}

void require_path(const std::string& path, const char* what) {
  if (path.empty()) raise(ErrorKind::IoError, std::string(what) + " path is required");
  if (!fs::exists(path)) raise(ErrorKind::IoError, std::string(what) + " path does not exist: " + path);
}

// A dataset on disk: a manifest directory, a Market-style root, or a flat
// directory of Market-style jpg files.
struct LoadedData {
  data::Dataset train;
  data::RetrievalSplit eval;
};

// Distractors (person_id -1) never enter training.
data::Dataset without_distractors(const data::Dataset& d) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!d.sample(i).is_distractor()) keep.push_back(i);
  return keep.size() == d.size() ? d : d.subset(keep);
}

LoadedData load_data(const fs::path& path, data::Domain domain, const RunConfig& cfg) {
  const data::ImageSize size = cfg.image_size();
  const bool distractors = cfg.get_bool("include_distractors");
  if (data::is_manifest_dataset(path)) {
    data::Dataset d = data::read_manifest_dataset(path, size);
    return {without_distractors(d), data::split_first_per_identity(d, distractors)};
  }
  if (data::is_market_root(path)) {
    data::MarketRoot root = data::load_market_root(path, domain, size);
    if (!distractors) root.test.gallery = without_distractors(root.test.gallery);
    return {without_distractors(root.train), root.test};
  }
  data::Dataset d = data::load_market_dir(path, domain, size);
  if (d.empty()) raise(ErrorKind::IoError, "no images found under " + path.string());
  return {without_distractors(d), data::split_first_per_identity(d, distractors)};
}

json retrieval_json(const eval::RetrievalResult& r) {
  return json{{"mAP", r.mean_ap}, {"rank1", r.rank(1)}, {"rank5", r.rank(5)}, {"rank10", r.rank(10)}};
}

int synth_data(const CommonOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const data::SyntheticDomains d = data::generate_synthetic_domains(cfg.synthetic_config());
  const fs::path dir = prepare_run_directory(run_directory(o, "synth-data"), cfg);
  data::write_manifest_dataset(d.source, dir / "source");
  data::write_manifest_dataset(d.target, dir / "target");
  std::cout << dir.string() << '\n';
  return 0;
}

int pretrain(const CommonOptions& o, const std::string& source_path, const std::string& target_path) {
  require_path(source_path, "--source");
  if (!target_path.empty()) require_path(target_path, "--target");
  const RunConfig cfg = resolve_config(o);
  const TrainConfig tc = cfg.train_config();
  const HyperParams hp = cfg.hyper_params();
  const LoadedData source = load_data(source_path, data::Domain::Source, cfg);
  std::optional<LoadedData> target;
  if (!target_path.empty()) target = load_data(target_path, data::Domain::Target, cfg);
  const fs::path dir = prepare_run_directory(run_directory(o, "pretrain"), cfg);

  train::PretrainResult pre = train::pretrain_stage(tc, hp, source.train);
  std::optional<eval::RetrievalResult> direct;
  if (target) direct = train::evaluate_student(*pre.state.student, target->eval);
  train::save_checkpoint(pre.state, tc, dir / "checkpoints" / "pretrained", direct);

  json metrics{{"teacher_source_accuracy", pre.teacher.train_accuracy},
               {"student_source_accuracy", pre.student.train_accuracy},
               {"teacher_epoch_loss", pre.teacher.epoch_loss},
               {"student_epoch_loss", pre.student.epoch_loss}};
  if (direct) metrics["direct_transfer"] = retrieval_json(*direct);
  fs::create_directories(dir / "metrics");
  write_text(dir / "metrics" / "pretrain.json", metrics.dump(2));
  std::cout << dir.string() << '\n';
  return 0;
}

int adapt(const CommonOptions& o, const std::string& source_path, const std::string& target_path,
          const std::string& checkpoint) {
  require_path(source_path, "--source");
  require_path(target_path, "--target");
  if (!checkpoint.empty()) require_path(checkpoint, "--checkpoint");
  const RunConfig cfg = resolve_config(o);
  const TrainConfig tc = cfg.train_config();
  const HyperParams hp = cfg.hyper_params();
  const LoadedData source = load_data(source_path, data::Domain::Source, cfg);
  const LoadedData target = load_data(target_path, data::Domain::Target, cfg);
  std::optional<train::RunState> resumed;
  if (!checkpoint.empty()) resumed = train::load_checkpoint(checkpoint);
  const fs::path dir = prepare_run_directory(run_directory(o, "adapt"), cfg);

  const train::RunInputs inputs{source.train, target.train, target.eval};
  const train::RunOutputs outputs{dir};
  train::RunResult result = resumed ? train::adapt(std::move(*resumed), tc, hp, inputs, &outputs)
                                    : train::run(tc, hp, inputs, &outputs);

  json summary;
  if (result.direct_transfer) summary["direct_transfer"] = retrieval_json(result.direct_transfer->result);
  json history = json::array();
  for (const auto& e : result.evaluations) {
    json entry = retrieval_json(e.result);
    entry["epoch"] = e.epoch;
    history.push_back(entry);
  }
  summary["evaluations"] = history;
  json epochs = json::array();
  for (const auto& e : result.epochs)
    epochs.push_back(
        {{"epoch", e.epoch}, {"clusters", e.num_clusters}, {"outliers", e.outliers}, {"skipped", e.skipped}});
  summary["epochs"] = epochs;
  if (!result.evaluations.empty()) summary["final"] = retrieval_json(result.evaluations.back().result);
  write_text(dir / "metrics" / "summary.json", summary.dump(2));
  std::cout << dir.string() << '\n';
  return 0;
}

int evaluate(const CommonOptions& o, const std::string& checkpoint, const std::string& data_path,
             bool per_query) {
  require_path(checkpoint, "--checkpoint");
  require_path(data_path, "--data");
  const RunConfig cfg = resolve_config(o);
  const LoadedData target = load_data(data_path, data::Domain::Target, cfg);
  const auto student = train::load_student(checkpoint);
  const fs::path dir = prepare_run_directory(run_directory(o, "eval"), cfg);

  const eval::RetrievalResult r = train::evaluate_student(*student, target.eval);
  write_text(dir / "metrics.json", retrieval_json(r).dump(2));
  if (per_query) {
    std::ofstream csv(dir / "per_query.csv");
    csv << "query,person_id,camera_id,average_precision,first_match_rank\n";
    csv.precision(10);
    for (std::size_t i = 0; i < r.average_precision.size(); ++i) {
      const auto& m = target.eval.query.sample(i);
      csv << i << ',' << m.person_id << ',' << m.camera_id << ',' << r.average_precision[i] << ','
          << r.first_match_rank[i] << '\n';
    }
  }
  std::cout << retrieval_json(r).dump() << '\n';
  return 0;
}

int cluster_stats(const CommonOptions& o, const std::string& checkpoint, const std::string& data_path) {
  require_path(checkpoint, "--checkpoint");
  require_path(data_path, "--data");
  const RunConfig cfg = resolve_config(o);
  const HyperParams hp = cfg.hyper_params();
  const LoadedData target = load_data(data_path, data::Domain::Target, cfg);
  const train::RunState state = train::load_checkpoint(checkpoint);
  const fs::path dir = prepare_run_directory(run_directory(o, "cluster-stats"), cfg);

  const Matrix ft = nn::extract_features(*state.teacher, target.train.images());
  const Matrix fs_ = nn::extract_features(*state.student, target.train.images());
  const labels::PseudoLabelState pl =
      labels::generate_pseudo_labels(ft, fs_, {hp.alpha, hp.eps, hp.min_samples, {hp.joint_prenormalize}});

  std::map<std::size_t, int> histogram;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(pl.num_clusters), 0);
  for (int l : pl.labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  for (std::size_t s : sizes) ++histogram[s];
  json hist = json::object();
  for (const auto& [size, count] : histogram) hist[std::to_string(size)] = count;

  json stats{{"num_clusters", pl.num_clusters},
             {"outliers", pl.outlier_count()},
             {"samples", pl.labels.size()},
             {"cluster_size_histogram", hist}};
  const std::vector<int> truth = target.train.person_ids();
  if (std::none_of(truth.begin(), truth.end(), [](int p) { return p < 0; })) {
    const eval::ClusterQuality q = eval::cluster_quality(pl.labels, truth);
    stats["nmi"] = q.nmi;
    stats["purity"] = q.purity;
  }
  write_text(dir / "cluster_stats.json", stats.dump(2));
  std::cout << stats.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-network domain adaptation for person re-identification.", "daml"};
  app.footer(kPrecedence);
  app.require_subcommand(1);

  CommonOptions synth_opts, pre_opts, adapt_opts, eval_opts, stats_opts;
  std::string source, target, checkpoint, data_path;
  bool per_query = false;

  auto* synth = app.add_subcommand("synth-data", "render the two-domain synthetic benchmark");
  add_common(synth, synth_opts);

  auto* pre = app.add_subcommand("pretrain", "train both encoders on labelled source data");
  add_common(pre, pre_opts);
  pre->add_option("--source", source, "source dataset (manifest dir or Market root)");
  pre->add_option("--target", target, "optional target dataset for direct-transfer metrics");

  auto* ad = app.add_subcommand("adapt", "pretrain (unless --checkpoint) and adapt to the target domain");
  add_common(ad, adapt_opts);
  ad->add_option("--source", source, "source dataset");
  ad->add_option("--target", target, "unlabelled target dataset");
  ad->add_option("--checkpoint", checkpoint, "checkpoint directory to start from");

  auto* ev = app.add_subcommand("eval", "score student features on a query/gallery split");
  add_common(ev, eval_opts);
  ev->add_option("--checkpoint", checkpoint, "checkpoint directory");
  ev->add_option("--data", data_path, "dataset to evaluate");
  ev->add_flag("--per-query", per_query, "also write per_query.csv");

  auto* cs = app.add_subcommand("cluster-stats", "cluster a dataset with a checkpoint and report statistics");
  add_common(cs, stats_opts);
  cs->add_option("--checkpoint", checkpoint, "checkpoint directory");
  cs->add_option("--data", data_path, "dataset to cluster");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return synth_data(synth_opts);
    if (pre->parsed()) return pretrain(pre_opts, source, target);
    if (ad->parsed()) return adapt(adapt_opts, source, target, checkpoint);
    if (ev->parsed()) return evaluate(eval_opts, checkpoint, data_path, per_query);
    if (cs->parsed()) return cluster_stats(stats_opts, checkpoint, data_path);
  } catch (const Error& e) {
    std::cerr << "daml: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "daml: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
