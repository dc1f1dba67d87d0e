#include <benchmark/benchmark.h>

#include <random>

#include "daml/classifiers.hpp"
#include "daml/data/dataset.hpp"
#include "daml/evaluation.hpp"
#include "daml/losses.hpp"
#include "daml/nn/encoder.hpp"
#include "daml/pseudo_labels.hpp"

using namespace daml;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Features drawn around `clusters` prototypes, as a trained encoder would give.
Matrix clustered(Eigen::Index n, Eigen::Index dim, int clusters, std::uint64_t seed) {
  const Matrix protos = gaussian(clusters, dim, seed);
  Matrix f = 0.1 * gaussian(n, dim, seed + 1);
  for (Eigen::Index i = 0; i < n; ++i) f.row(i) += protos.row(i % clusters);
  return f;
}

void encoder_forward(benchmark::State& state, nn::EncoderConfig cfg) {
  auto enc = nn::make_encoder(cfg, 0);
  const Matrix x = gaussian(state.range(0), cfg.input_width(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(enc->infer(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void encoder_train_step(benchmark::State& state, nn::EncoderConfig cfg) {
  auto enc = nn::make_encoder(cfg, 0);
  enc->set_mode(nn::Mode::Train);
  const Matrix x = gaussian(state.range(0), cfg.input_width(), 1);
  const Matrix g = gaussian(state.range(0), cfg.feature_dim, 2);
  for (auto _ : state) {
    enc->forward(x);
    enc->backward(g);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TeacherForward(benchmark::State& s) { encoder_forward(s, nn::default_teacher_config({32, 16})); }
void BM_StudentForward(benchmark::State& s) { encoder_forward(s, nn::default_student_config({32, 16})); }
void BM_TeacherTrainStep(benchmark::State& s) { encoder_train_step(s, nn::default_teacher_config({32, 16})); }
void BM_StudentTrainStep(benchmark::State& s) { encoder_train_step(s, nn::default_student_config({32, 16})); }
BENCHMARK(BM_TeacherForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudentForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TeacherTrainStep)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudentTrainStep)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_PseudoLabels(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix ft = clustered(n, 64, 20, 3);
  const Matrix fs = clustered(n, 48, 20, 5);
  for (auto _ : state) benchmark::DoNotOptimize(labels::generate_pseudo_labels(ft, fs, {0.5, 0.2, 4, {}}));
}
BENCHMARK(BM_PseudoLabels)->Arg(160)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_Dbscan(benchmark::State& state) {
  const Matrix d = labels::cosine_distance_matrix(clustered(state.range(0), 32, 20, 7));
  for (auto _ : state) benchmark::DoNotOptimize(labels::cluster(d, 0.2, 4));
}
BENCHMARK(BM_Dbscan)->Arg(160)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_CmcMap(benchmark::State& state) {
  const Eigen::Index nq = state.range(0);
  const Eigen::Index ng = state.range(1);
  const Matrix q = gaussian(nq, 48, 9);
  const Matrix g = gaussian(ng, 48, 10);
  std::vector<data::SampleMeta> qm(static_cast<std::size_t>(nq)), gm(static_cast<std::size_t>(ng));
  for (std::size_t i = 0; i < qm.size(); ++i) qm[i].person_id = static_cast<int>(i % 50), qm[i].camera_id = 1;
  for (std::size_t j = 0; j < gm.size(); ++j) gm[j].person_id = static_cast<int>(j % 50), gm[j].camera_id = 2;
  for (auto _ : state) benchmark::DoNotOptimize(eval::cmc_map(q, g, qm, gm));
}
BENCHMARK(BM_CmcMap)->Args({20, 140})->Args({200, 2000})->Unit(benchmark::kMillisecond);

void BM_TripletLoss(benchmark::State& state) {
  const Matrix f = gaussian(64, 64, 11);
  Labels l;
  for (int i = 0; i < 64; ++i) l.push_back(i / 4);
  for (auto _ : state) benchmark::DoNotOptimize(loss::triplet_loss(f, l, 1.2));
}
BENCHMARK(BM_TripletLoss);

void BM_SmoothUpdate(benchmark::State& state) {
  const Matrix old = gaussian(state.range(0), 64, 12);
  const Matrix centers = gaussian(state.range(0), 64, 13);
  const Matrix momentum = Matrix::Zero(old.rows(), old.cols());
  for (auto _ : state) benchmark::DoNotOptimize(cls::smooth_update(old, momentum, centers));
}
BENCHMARK(BM_SmoothUpdate)->Arg(20)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
