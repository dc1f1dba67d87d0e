#include "daml/training.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "daml/data/sampler.hpp"
#include "daml/error.hpp"
#include "daml/nn/checkpoint.hpp"
#include "daml/nn/optimizer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace daml::train {

TermWeights TermWeights::from_hyper_params(const HyperParams& hp) {
  TermWeights w;
  w.tri_teacher_source = hp.lambda1;
  w.teacher_source_id = hp.lambda1;
  w.distill_id = hp.lambda2;
  w.distill_dom = hp.lambda3;
  return w;
}

nn::ParamRefs teacher_parameters(nn::Encoder& teacher, cls::ClassifierState& classifiers) {
  nn::ParamRefs params = teacher.parameters();
  params.push_back(&classifiers.source_teacher);
  params.push_back(&classifiers.target_teacher);
  return params;
}

nn::ParamRefs student_parameters(nn::Encoder& student, cls::ClassifierState& classifiers) {
  nn::ParamRefs params = student.parameters();
  params.push_back(&classifiers.target_student);
  return params;
}

loss::LossReport compute_adapt_gradients(nn::Encoder& teacher, nn::Encoder& student, cls::ClassifierState& classifiers,
                                         const StepBatch& batch, const TermWeights& w, double margin,
                                         double temperature) {
  require(classifiers.has_target_blocks(), ErrorKind::InvalidState, "target classifier blocks are not initialized");
  const Eigen::Index nt = batch.target_images.rows();
  const Eigen::Index ns = batch.source_images.rows();
  const Eigen::Index num_source = classifiers.source_teacher.value.rows();
  const Eigen::Index k = classifiers.num_target_classes;

  nn::zero_grads(teacher_parameters(teacher, classifiers));
  nn::zero_grads(student_parameters(student, classifiers));

  Matrix teacher_input(nt + ns, batch.target_images.cols());
  teacher_input.topRows(nt) = batch.target_images;
  if (ns > 0) teacher_input.bottomRows(ns) = batch.source_images;
  const Matrix teacher_feats = teacher.forward(teacher_input);
  const Matrix ft = teacher_feats.topRows(nt);
  const Matrix w_full = cls::concat_blocks(classifiers.source_teacher.value, classifiers.target_teacher.value);
  const Matrix& w_student = classifiers.target_student.value;

  const Matrix st = student.forward(batch.target_images);

  loss::LossReport report;

  // Teacher on target: identity over [W_s, W_t] with labels offset into the
  // target block, plus triplet.
  const Matrix logits_tt = cls::predict(ft, w_full);
  Labels offset_labels(batch.target_labels);
  for (int& l : offset_labels) l += static_cast<int>(num_source);
  loss::LossGrad ce_tt = loss::cross_entropy(logits_tt, offset_labels);
  loss::LossGrad tri_tt = loss::triplet_loss(ft, batch.target_labels, margin);
  report.teacher_target_id = ce_tt.value;
  report.tri_teacher_target = tri_tt.value;
  Matrix g_logits_tt = w.teacher_target_id * ce_tt.grad;
  Matrix g_ft = w.tri_teacher_target * tri_tt.grad;

  // Student on target.
  const Matrix logits_st = cls::predict(st, w_student);
  loss::LossGrad ce_st = loss::cross_entropy(logits_st, batch.target_labels);
  loss::LossGrad tri_st = loss::triplet_loss(st, batch.target_labels, margin);
  report.student_target_id = ce_st.value;
  report.tri_student_target = tri_st.value;
  Matrix g_logits_st = w.student_target_id * ce_st.grad;
  Matrix g_st = w.tri_student_target * tri_st.grad;

  // Identity distillation: teacher target-block prediction is the reference.
  loss::LossGrad kl_id = loss::kl_distill_id(logits_tt.rightCols(k), logits_st, temperature);
  report.distill_id = kl_id.value;
  g_logits_st += w.distill_id * kl_id.grad;

  Matrix dw_full = g_logits_tt.transpose() * ft;
  Matrix g_teacher(nt + ns, teacher_feats.cols());
  g_teacher.topRows(nt) = g_ft + g_logits_tt * w_full;

  if (ns > 0) {
    const Matrix fs_t = teacher_feats.bottomRows(ns);
    const Matrix ss = student.infer(batch.source_images);

    const Matrix logits_ts = cls::predict(fs_t, w_full);
    loss::LossGrad ce_ts = loss::cross_entropy(logits_ts, batch.source_labels);
    loss::LossGrad tri_ts = loss::triplet_loss(fs_t, batch.source_labels, margin);
    report.teacher_source_id = ce_ts.value;
    report.tri_teacher_source = tri_ts.value;
    Matrix g_logits_ts = w.teacher_source_id * ce_ts.grad;

    // Domain distillation: student source prediction is the reference.
    loss::LossGrad kl_dom = loss::kl_distill_dom(cls::predict(ss, w_student), logits_ts.rightCols(k), temperature);
    report.distill_dom = kl_dom.value;
    g_logits_ts.rightCols(k) += w.distill_dom * kl_dom.grad;

    dw_full.noalias() += g_logits_ts.transpose() * fs_t;
    g_teacher.bottomRows(ns) = w.tri_teacher_source * tri_ts.grad + g_logits_ts * w_full;
  }

  teacher.backward(g_teacher);
  classifiers.source_teacher.grad += dw_full.topRows(num_source);
  classifiers.target_teacher.grad += dw_full.bottomRows(k);

  student.backward(g_st + g_logits_st * w_student);
  classifiers.target_student.grad.noalias() += g_logits_st.transpose() * st;

  report.total = report.tri_teacher_target * w.tri_teacher_target + report.teacher_target_id * w.teacher_target_id +
                 report.tri_student_target * w.tri_student_target + report.student_target_id * w.student_target_id +
                 report.tri_teacher_source * w.tri_teacher_source + report.teacher_source_id * w.teacher_source_id +
                 report.distill_id * w.distill_id + report.distill_dom * w.distill_dom;
  return report;
}

double scheduled_lr(double base, Schedule schedule, int epoch, int total_epochs, const std::vector<int>& milestones,
                    double decay) {
  switch (schedule) {
    case Schedule::StepDecay: return nn::step_decay_lr(base, epoch, milestones, decay);
    case Schedule::Cosine: return nn::cosine_lr(base, epoch, total_epochs);
    case Schedule::Constant: return base;
  }
  return base;
}

namespace {

int steps_for(std::size_t samples, int batch_ids, int batch_instances, int override_steps) {
  if (override_steps > 0) return override_steps;
  const auto batch = static_cast<std::size_t>(batch_ids * batch_instances);
  return static_cast<int>((samples + batch - 1) / batch);
}

Matrix augmented_batch(const data::Dataset& dataset, const std::vector<std::size_t>& indices,
                       const data::AugmentPolicy& policy, Rng& rng) {
  std::vector<data::Image> images;
  images.reserve(indices.size());
  for (std::size_t i : indices) images.push_back(data::augment(dataset.image(i), policy, rng));
  return data::to_input(images);
}

}  // namespace

PretrainReport pretrain(nn::Encoder& encoder, nn::Param& source_classifier, const data::Dataset& source,
                        const PretrainOptions& options, Rng& rng) {
  const Labels labels = source.class_labels();
  require(source_classifier.value.rows() == static_cast<Eigen::Index>(source.num_identities()) &&
              source_classifier.value.cols() == encoder.feature_dim(),
          ErrorKind::ShapeMismatch, "source classifier does not match the dataset or encoder");
  const int steps = steps_for(source.size(), options.batch_ids, options.batch_instances, options.steps_per_epoch);
  const nn::Sgd sgd(options.momentum, options.weight_decay);
  nn::ParamRefs params = encoder.parameters();
  params.push_back(&source_classifier);

  PretrainReport report;
  encoder.set_mode(nn::Mode::Train);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double lr =
        scheduled_lr(options.base_lr, options.schedule, epoch, options.epochs, options.milestones, options.decay);
    double epoch_loss = 0.0;
    for (int step = 0; step < steps; ++step) {
      const data::PkBatch batch = data::pk_sample(labels, options.batch_ids, options.batch_instances, rng);
      const Matrix images = augmented_batch(source, batch.indices, options.augment, rng);

      nn::zero_grads(params);
      const Matrix feats = encoder.forward(images);
      const Matrix logits = cls::predict(feats, source_classifier.value);
      const loss::LossGrad ce = loss::cross_entropy(logits, batch.labels);
      const loss::LossGrad tri = loss::triplet_loss(feats, batch.labels, options.margin);
      encoder.backward(tri.grad + ce.grad * source_classifier.value);
      source_classifier.grad.noalias() += ce.grad.transpose() * feats;
      sgd.step(params, lr);
      epoch_loss += ce.value + tri.value;
    }
    report.epoch_loss.push_back(steps > 0 ? epoch_loss / steps : 0.0);
  }
  encoder.set_mode(nn::Mode::Eval);
  report.train_accuracy = source_accuracy(encoder, source_classifier, source);
  return report;
}

double source_accuracy(const nn::Encoder& encoder, const nn::Param& source_classifier, const data::Dataset& source) {
  const Labels labels = source.class_labels();
  const Matrix logits = cls::predict(nn::extract_features(encoder, source.images()), source_classifier.value);
  std::size_t correct = 0;
  std::size_t counted = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0) continue;
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    ++counted;
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return counted ? static_cast<double>(correct) / static_cast<double>(counted) : 0.0;
}

RunState RunState::clone() const {
  RunState copy;
  copy.epoch = epoch;
  copy.teacher = teacher ? teacher->clone() : nullptr;
  copy.student = student ? student->clone() : nullptr;
  copy.classifiers = classifiers;
  copy.pseudo_labels = pseudo_labels;
  copy.rng = rng;
  return copy;
}

namespace {

// Independent generator streams derived from the run seed.
enum SeedStream : std::uint64_t { kTeacherInit = 1, kStudentInit = 2, kClassifierInit = 3, kTeacherPretrain = 4,
                                  kStudentPretrain = 5, kAdapt = 6 };

std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

RunState make_initial_state(const TrainConfig& config, int num_source_classes) {
  config.validate();
  RunState state;
  state.teacher = nn::make_encoder(config.teacher, stream_seed(config.seed, kTeacherInit));
  state.student = nn::make_encoder(config.student, stream_seed(config.seed, kStudentInit));
  Rng init(stream_seed(config.seed, kClassifierInit));
  state.classifiers =
      cls::make_classifier_state(num_source_classes, config.teacher.feature_dim, config.student.feature_dim, init);
  state.rng.seed(stream_seed(config.seed, kAdapt));
  return state;
}

PretrainOptions teacher_pretrain_options(const TrainConfig& config, const HyperParams& hp) {
  PretrainOptions o;
  o.epochs = config.pretrain_epochs;
  o.base_lr = config.lr_teacher_pretrain;
  o.schedule = Schedule::StepDecay;
  o.milestones = config.teacher_milestones;
  o.decay = config.lr_decay;
  o.momentum = config.momentum;
  o.weight_decay = config.weight_decay_teacher;
  o.steps_per_epoch = config.pretrain_steps_per_epoch;
  o.batch_ids = hp.batch_ids;
  o.batch_instances = hp.batch_instances;
  o.margin = hp.rho;
  o.augment = config.train_augment;
  return o;
}

PretrainOptions student_pretrain_options(const TrainConfig& config, const HyperParams& hp) {
  PretrainOptions o = teacher_pretrain_options(config, hp);
  o.base_lr = config.lr_student_pretrain;
  o.schedule = Schedule::Cosine;
  o.weight_decay = config.weight_decay_student;
  return o;
}

PretrainResult pretrain_stage(const TrainConfig& config, const HyperParams& hp, const data::Dataset& source) {
  PretrainResult result;
  result.state = make_initial_state(config, static_cast<int>(source.num_identities()));
  RunState& state = result.state;

  Rng teacher_rng(stream_seed(config.seed, kTeacherPretrain));
  result.teacher =
      pretrain(*state.teacher, state.classifiers.source_teacher, source, teacher_pretrain_options(config, hp), teacher_rng);

  // The student's source classifier exists only for pretraining.
  Rng student_rng(stream_seed(config.seed, kStudentPretrain));
  Rng head_init(stream_seed(config.seed, kClassifierInit) + 1);
  std::normal_distribution<double> dist(0.0, 0.001);
  Matrix head(static_cast<Eigen::Index>(source.num_identities()), config.student.feature_dim);
  for (Eigen::Index i = 0; i < head.size(); ++i) head.data()[i] = dist(head_init);
  nn::Param student_head("pretrain.student_source", head);
  result.student = pretrain(*state.student, student_head, source, student_pretrain_options(config, hp), student_rng);
  return result;
}

EpochReport adapt_epoch(RunState& state, const data::Dataset& source, const data::Dataset& target,
                        const TrainConfig& config, const HyperParams& hp, const StepObserver& observer) {
  EpochReport report;
  report.epoch = state.epoch;

  // (1) clustering features and (2) joint-subspace pseudo labels.
  state.teacher->set_mode(nn::Mode::Eval);
  state.student->set_mode(nn::Mode::Eval);
  const Matrix feats_t =
      labels::clustering_features(*state.teacher, target, config.cluster_augment, config.cluster_repeat, state.rng);
  const Matrix feats_s =
      labels::clustering_features(*state.student, target, config.cluster_augment, config.cluster_repeat, state.rng);
  labels::PseudoLabelParams params{hp.alpha, hp.eps, hp.min_samples, {hp.joint_prenormalize}};
  state.pseudo_labels = labels::generate_pseudo_labels(feats_t, feats_s, params);
  report.num_clusters = state.pseudo_labels.num_clusters;
  report.outliers = state.pseudo_labels.outlier_count();

  if (state.pseudo_labels.num_clusters < hp.batch_ids) {
    ++state.epoch;
    raise(ErrorKind::EpochSkipped, std::to_string(state.pseudo_labels.num_clusters) + " clusters, a batch needs " +
                                       std::to_string(hp.batch_ids));
  }

  // (3) classifier update.
  if (config.smooth_update && state.classifiers.has_target_blocks()) {
    cls::smooth_update_target_blocks(state.classifiers, state.pseudo_labels.centers_teacher,
                                     state.pseudo_labels.centers_student, config.smooth_temperature);
  } else {
    cls::initialize_target_blocks(state.classifiers, state.pseudo_labels.centers_teacher,
                                  state.pseudo_labels.centers_student, config.normalize_init_centers);
  }

  // (4) optimization.
  const Labels source_labels = source.class_labels();
  const std::size_t clustered = target.size() - report.outliers;
  report.steps = steps_for(clustered, hp.batch_ids, hp.batch_instances, config.steps_per_epoch);
  const TermWeights weights = TermWeights::from_hyper_params(hp);
  const nn::Sgd teacher_sgd(config.momentum, config.weight_decay_teacher);
  const nn::Sgd student_sgd(config.momentum, config.weight_decay_student);
  const nn::ParamRefs teacher_params = teacher_parameters(*state.teacher, state.classifiers);
  const nn::ParamRefs student_params = student_parameters(*state.student, state.classifiers);

  state.teacher->set_mode(nn::Mode::Train);
  state.student->set_mode(nn::Mode::Train);
  for (int step = 0; step < report.steps; ++step) {
    StepBatch batch;
    const data::PkBatch tb = data::pk_sample(state.pseudo_labels.labels, hp.batch_ids, hp.batch_instances, state.rng);
    batch.target_images = augmented_batch(target, tb.indices, config.train_augment, state.rng);
    batch.target_labels = tb.labels;
    if (config.use_source_batches) {
      const data::PkBatch sb = data::pk_sample(source_labels, hp.batch_ids, hp.batch_instances, state.rng);
      batch.source_images = augmented_batch(source, sb.indices, config.train_augment, state.rng);
      batch.source_labels = sb.labels;
    }
    const loss::LossReport losses = compute_adapt_gradients(*state.teacher, *state.student, state.classifiers, batch,
                                                            weights, hp.rho, hp.kl_temperature);
    teacher_sgd.step(teacher_params, config.lr_teacher_adapt);
    student_sgd.step(student_params, config.lr_student_adapt);

    auto& m = report.mean_losses;
    m.tri_teacher_target += losses.tri_teacher_target;
    m.tri_student_target += losses.tri_student_target;
    m.tri_teacher_source += losses.tri_teacher_source;
    m.teacher_target_id += losses.teacher_target_id;
    m.student_target_id += losses.student_target_id;
    m.teacher_source_id += losses.teacher_source_id;
    m.distill_id += losses.distill_id;
    m.distill_dom += losses.distill_dom;
    m.total += losses.total;
    if (observer) observer(state.epoch, step, losses);
  }
  if (report.steps > 0) {
    auto& m = report.mean_losses;
    const double n = report.steps;
    for (double* v : {&m.tri_teacher_target, &m.tri_student_target, &m.tri_teacher_source, &m.teacher_target_id,
                      &m.student_target_id, &m.teacher_source_id, &m.distill_id, &m.distill_dom, &m.total})
      *v /= n;
  }
  state.teacher->set_mode(nn::Mode::Eval);
  state.student->set_mode(nn::Mode::Eval);
  ++state.epoch;
  return report;
}

eval::RetrievalResult evaluate_student(const nn::Encoder& student, const data::RetrievalSplit& split,
                                       eval::DistanceMetric metric) {
  const Matrix q = nn::extract_features(student, split.query.images());
  const Matrix g = nn::extract_features(student, split.gallery.images());
  return eval::cmc_map(q, g, split.query.samples(), split.gallery.samples(), metric);
}

namespace {

json metrics_to_json(const eval::RetrievalResult& r, int epoch) {
  return json{{"epoch", epoch},   {"mAP", r.mean_ap},    {"rank1", r.rank(1)},
              {"rank5", r.rank(5)}, {"rank10", r.rank(10)}};
}

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != m.size()) raise(ErrorKind::IoError, "matrix payload size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json param_to_json(const nn::Param& p) {
  return json{{"name", p.name}, {"value", matrix_to_json(p.value)}, {"momentum", matrix_to_json(p.momentum)}};
}

nn::Param param_from_json(const json& j) {
  nn::Param p(j.at("name").get<std::string>(), matrix_from_json(j.at("value")));
  p.momentum = matrix_from_json(j.at("momentum"));
  return p;
}

json encoder_config_to_json(const nn::EncoderConfig& c) {
  return json{{"kind", std::string(nn::to_string(c.kind))},
              {"feature_dim", c.feature_dim},
              {"depth", c.depth},
              {"patch_size", c.patch_size},
              {"width", c.width},
              {"heads", c.heads},
              {"mlp_ratio", c.mlp_ratio},
              {"image_height", c.image_size.height},
              {"image_width", c.image_size.width}};
}

nn::EncoderConfig encoder_config_from_json(const json& j) {
  nn::EncoderConfig c;
  c.kind = nn::encoder_kind_from_string(j.at("kind").get<std::string>());
  c.feature_dim = j.at("feature_dim").get<int>();
  c.depth = j.at("depth").get<int>();
  c.patch_size = j.at("patch_size").get<int>();
  c.width = j.at("width").get<int>();
  c.heads = j.at("heads").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<int>();
  c.image_size = {j.at("image_height").get<int>(), j.at("image_width").get<int>()};
  return c;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorKind::IoError, path.string() + ": " + e.what());
  }
}

std::unique_ptr<nn::Encoder> load_encoder(const fs::path& dir, const std::string& role, json* sidecar_out) {
  const json sidecar = read_json(dir / (role + ".json"));
  // Weights are overwritten from the blob; the init seed is irrelevant.
  auto encoder = nn::make_encoder(encoder_config_from_json(sidecar.at("config")), 0);
  nn::read_param_blob(encoder->parameters(), dir / (role + ".bin"));
  if (sidecar_out) *sidecar_out = sidecar;
  return encoder;
}

}  // namespace

std::string metrics_json(const eval::RetrievalResult& result, int epoch) {
  return metrics_to_json(result, epoch).dump(2);
}

void save_checkpoint(const RunState& state, const TrainConfig& config, const fs::path& dir,
                     const std::optional<eval::RetrievalResult>& metrics) {
  fs::create_directories(dir);
  const json metric_snapshot = metrics ? metrics_to_json(*metrics, state.epoch) : json(nullptr);
  const json classifier_counts{{"K", state.classifiers.num_target_classes},
                               {"K_hat", state.classifiers.previous_target_classes}};

  nn::write_param_blob(state.teacher->parameters(), dir / "teacher.bin");
  write_json(json{{"role", "teacher"},
                  {"config", encoder_config_to_json(state.teacher->config())},
                  {"epoch", state.epoch},
                  {"schedule", {{"stage", "adapt"}, {"epoch", state.epoch}, {"lr", config.lr_teacher_adapt}}},
                  {"metrics", metric_snapshot},
                  {"classifier",
                   {{"counts", classifier_counts},
                    {"source", param_to_json(state.classifiers.source_teacher)},
                    {"target", param_to_json(state.classifiers.target_teacher)}}}},
             dir / "teacher.json");

  nn::write_param_blob(state.student->parameters(), dir / "student.bin");
  write_json(json{{"role", "student"},
                  {"config", encoder_config_to_json(state.student->config())},
                  {"epoch", state.epoch},
                  {"schedule", {{"stage", "adapt"}, {"epoch", state.epoch}, {"lr", config.lr_student_adapt}}},
                  {"metrics", metric_snapshot},
                  {"classifier",
                   {{"counts", classifier_counts}, {"target", param_to_json(state.classifiers.target_student)}}}},
             dir / "student.json");

  std::ostringstream rng_state;
  rng_state << state.rng;
  write_json(json{{"epoch", state.epoch}, {"rng", rng_state.str()}}, dir / "state.json");
}

RunState load_checkpoint(const fs::path& dir) {
  RunState state;
  json teacher_side;
  json student_side;
  state.teacher = load_encoder(dir, "teacher", &teacher_side);
  state.student = load_encoder(dir, "student", &student_side);
  const json& tc = teacher_side.at("classifier");
  state.classifiers.source_teacher = param_from_json(tc.at("source"));
  state.classifiers.target_teacher = param_from_json(tc.at("target"));
  state.classifiers.target_student = param_from_json(student_side.at("classifier").at("target"));
  state.classifiers.num_target_classes = tc.at("counts").at("K").get<int>();
  state.classifiers.previous_target_classes = tc.at("counts").at("K_hat").get<int>();

  const json run_state = read_json(dir / "state.json");
  state.epoch = run_state.at("epoch").get<int>();
  std::istringstream rng_state(run_state.at("rng").get<std::string>());
  rng_state >> state.rng;
  if (!rng_state) raise(ErrorKind::IoError, "corrupt generator state in " + (dir / "state.json").string());
  return state;
}

std::unique_ptr<nn::Encoder> load_student(const fs::path& dir) { return load_encoder(dir, "student", nullptr); }

namespace {

void write_log_header(std::ofstream& log) {
  log << "step,epoch,L_tri_T,L_tri_S,L_tri_sT,L_Ttid,L_Stid,L_Tsid,L_id,L_dom,L_total\n";
}

void write_log_row(std::ofstream& log, long long step, int epoch, const loss::LossReport& r) {
  log << step << ',' << epoch << ',' << r.tri_teacher_target << ',' << r.tri_student_target << ','
      << r.tri_teacher_source << ',' << r.teacher_target_id << ',' << r.student_target_id << ','
      << r.teacher_source_id << ',' << r.distill_id << ',' << r.distill_dom << ',' << r.total << '\n';
}

}  // namespace

RunResult adapt(RunState state, const TrainConfig& config, const HyperParams& hp, const RunInputs& inputs,
                const RunOutputs* outputs) {
  RunResult result;
  std::ofstream log;
  long long global_step = 0;
  if (outputs) {
    fs::create_directories(outputs->dir / "metrics");
    fs::create_directories(outputs->dir / "checkpoints");
    const fs::path log_path = outputs->dir / "train_log.csv";
    const bool fresh = !fs::exists(log_path);
    log.open(log_path, std::ios::app);
    if (!log) raise(ErrorKind::IoError, "cannot write " + log_path.string());
    log.precision(10);
    if (fresh) write_log_header(log);
  }
  auto record = [&](int epoch) {
    Evaluation e{epoch, evaluate_student(*state.student, inputs.target_eval)};
    if (outputs) {
      std::ofstream out(outputs->dir / "metrics" / ("epoch_" + std::to_string(epoch) + ".json"));
      out << metrics_json(e.result, epoch) << '\n';
    }
    result.evaluations.push_back(e);
    return e.result;
  };

  const StepObserver observer = [&](int epoch, int, const loss::LossReport& r) {
    if (log.is_open()) write_log_row(log, global_step, epoch, r);
    ++global_step;
  };

  while (state.epoch < config.adapt_epochs) {
    try {
      result.epochs.push_back(adapt_epoch(state, inputs.source, inputs.target, config, hp, observer));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EpochSkipped) throw;
      std::cerr << "warning: epoch " << state.epoch - 1 << " skipped: " << e.what() << '\n';
      EpochReport skipped;
      skipped.epoch = state.epoch - 1;
      skipped.skipped = true;
      skipped.num_clusters = state.pseudo_labels.num_clusters;
      skipped.outliers = state.pseudo_labels.outlier_count();
      result.epochs.push_back(skipped);
    }
    std::optional<eval::RetrievalResult> metrics;
    if (state.epoch % config.eval_every == 0 || state.epoch == config.adapt_epochs) metrics = record(state.epoch);
    if (outputs) {
      save_checkpoint(state, config, outputs->dir / "checkpoints" / ("epoch_" + std::to_string(state.epoch)), metrics);
      save_checkpoint(state, config, outputs->dir / "checkpoints" / "latest", metrics);
    }
  }
  if (result.evaluations.empty() || result.evaluations.back().epoch != state.epoch) record(state.epoch);
  result.state = std::move(state);
  return result;
}

RunResult run(const TrainConfig& config, const HyperParams& hp, const RunInputs& inputs, const RunOutputs* outputs) {
  PretrainResult pre = pretrain_stage(config, hp, inputs.source);
  const eval::RetrievalResult direct = evaluate_student(*pre.state.student, inputs.target_eval);
  if (outputs) {
    fs::create_directories(outputs->dir / "metrics");
    std::ofstream(outputs->dir / "metrics" / "direct_transfer.json") << metrics_json(direct, 0) << '\n';
    save_checkpoint(pre.state, config, outputs->dir / "checkpoints" / "pretrained", direct);
  }
  RunResult result = adapt(std::move(pre.state), config, hp, inputs, outputs);
  result.direct_transfer = Evaluation{0, direct};
  result.teacher_pretrain = pre.teacher;
  result.student_pretrain = pre.student;
  return result;
}

}  // namespace daml::train
