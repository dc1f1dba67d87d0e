// Acceptance suite: one PASS/FAIL line per criterion on stdout, details on
// stderr. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <string>

#include "daml/classifiers.hpp"
#include "daml/config.hpp"
#include "daml/data/synthetic.hpp"
#include "daml/evaluation.hpp"
#include "daml/losses.hpp"
#include "daml/pseudo_labels.hpp"
#include "daml/training.hpp"
#include "oracles.hpp"
#include "toy_step.hpp"

using namespace daml;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Verdict& v) {
  std::printf("[%s] %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Labels pk_labels(int p, int k) {
  Labels l;
  for (int c = 0; c < p; ++c)
    for (int i = 0; i < k; ++i) l.push_back(c);
  return l;
}

Verdict loss_gradients() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  auto track = [&](const Matrix& analytic, const Matrix& numeric) {
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  };
  for (int t = 0; t < 5; ++t) {
    const Labels l = pk_labels(3, 3);
    const Matrix f = oracle::random_matrix(9, 5, rng);
    track(loss::triplet_loss(f, l, 1.2).grad,
          oracle::numeric_gradient([&](const Matrix& x) { return loss::triplet_loss(x, l, 1.2).value; }, f));

    const Labels y{0, 2, 4, 1, 3};
    const Matrix z = oracle::random_matrix(5, 5, rng, 2.0);
    track(loss::cross_entropy(z, y).grad,
          oracle::numeric_gradient([&](const Matrix& x) { return loss::cross_entropy(x, y).value; }, z));

    const Matrix ref = oracle::random_matrix(4, 6, rng, 2.0);
    const Matrix learner = oracle::random_matrix(4, 6, rng, 2.0);
    track(loss::kl_distill_id(ref, learner).grad,
          oracle::numeric_gradient([&](const Matrix& x) { return loss::kl_distill_id(ref, x).value; }, learner));
    track(loss::kl_distill_dom(ref, learner).grad,
          oracle::numeric_gradient([&](const Matrix& x) { return loss::kl_distill_dom(ref, x).value; }, learner));
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 60.0,
          fmt("max relative error %.2e (limit 1e-4) over 5 instances x 4 losses, %.2f s", worst, elapsed)};
}

Verdict stop_gradient() {
  using testing::only;
  using train::TermWeights;
  double teacher_from_id = 0.0;
  double student_from_dom = 0.0;
  auto max_grad = [](const nn::ParamRefs& params) {
    double m = 0.0;
    for (const nn::Param* p : params) m = std::max(m, p->grad.cwiseAbs().maxCoeff());
    return m;
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    testing::Toy toy = testing::make_toy(seed);
    train::compute_adapt_gradients(*toy.teacher, *toy.student, toy.classifiers, toy.batch,
                                   only(&TermWeights::distill_id), 1.2, 1.0);
    teacher_from_id = std::max(teacher_from_id, max_grad(train::teacher_parameters(*toy.teacher, toy.classifiers)));
    train::compute_adapt_gradients(*toy.teacher, *toy.student, toy.classifiers, toy.batch,
                                   only(&TermWeights::distill_dom), 1.2, 1.0);
    student_from_dom = std::max(student_from_dom, max_grad(train::student_parameters(*toy.student, toy.classifiers)));
  }
  return {teacher_from_id < 1e-10 && student_from_dom < 1e-10,
          fmt("max |dL_id/d teacher| = %.1e, max |dL_dom/d student| = %.1e (limit 1e-10)", teacher_from_id,
              student_from_dom)};
}

Verdict smooth_update() {
  Rng rng(303);
  double convex_err = 0.0;
  bool permutation_exact = true;
  bool single_exact = true;
  for (int t = 0; t < 20; ++t) {
    const Matrix old = oracle::random_matrix(4, 8, rng);
    const Matrix mom = oracle::random_matrix(4, 8, rng);
    const Matrix centers = oracle::random_matrix(6, 8, rng, 2.0);
    const cls::SmoothUpdate u = cls::smooth_update(old, mom, centers);
    for (Eigen::Index i = 0; i < 6; ++i) {
      const Vector a = old.transpose().colPivHouseholderQr().solve(u.weights.row(i).transpose());
      convex_err = std::max({convex_err, std::abs(a.sum() - 1.0), std::max(0.0, -a.minCoeff())});
    }
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix permuted(6, 8);
    for (int i = 0; i < 6; ++i) permuted.row(i) = centers.row(perm[static_cast<std::size_t>(i)]);
    const cls::SmoothUpdate p = cls::smooth_update(old, mom, permuted);
    for (int i = 0; i < 6; ++i)
      permutation_exact = permutation_exact && p.weights.row(i) == u.weights.row(perm[static_cast<std::size_t>(i)]) &&
                          p.momentum.row(i) == u.momentum.row(perm[static_cast<std::size_t>(i)]);

    const Matrix one = oracle::random_matrix(1, 8, rng);
    const cls::SmoothUpdate s = cls::smooth_update(one, one, centers);
    for (Eigen::Index i = 0; i < 6; ++i) single_exact = single_exact && s.weights.row(i) == one.row(0);
  }
  Matrix c(1, 2);
  c << std::log(3.0), 0.0;
  const cls::SmoothUpdate w = cls::smooth_update(Matrix::Identity(2, 2), Matrix::Zero(2, 2), c);
  const double example_err = std::max(std::abs(w.weights(0, 0) - 0.75), std::abs(w.weights(0, 1) - 0.25));
  return {convex_err < 1e-6 && permutation_exact && single_exact && example_err < 1e-9,
          fmt("convexity err %.1e (limit 1e-6), permutation %s, single-row %s, worked example err %.1e (limit 1e-9)",
              convex_err, permutation_exact ? "exact" : "INEXACT", single_exact ? "exact" : "INEXACT", example_err)};
}

Verdict pseudo_labels() {
  Rng rng(404);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> min_samples(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        d(i, j) = d(j, i) = unit(rng) < 0.2 ? labels::kUnreachable : unit(rng);
    const double eps = 0.2 + 0.4 * unit(rng);
    const int m = min_samples(rng);
    if (labels::cluster(d, eps, m).labels != oracle::dbscan(d, eps, m)) ++mismatches;
  }

  long long checked = 0;
  long long violations = 0;
  std::uniform_int_distribution<int> count(2, 200);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = trial == 0 ? 200 : count(rng);
    const Matrix t = oracle::random_matrix(n, 4, rng);
    const Matrix s = oracle::random_matrix(n, 3, rng);
    const double alpha = 0.1 + unit(rng);
    const Matrix d = labels::joint_distance(t, s, labels::neighbor_graph(t, s, alpha));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        ++checked;
        const double dt = oracle::cosine_distance(t.row(i), t.row(j));
        const double ds = oracle::cosine_distance(s.row(i), s.row(j));
        const bool gated = std::isinf(d(i, j));
        const bool ok = gated ? (dt >= alpha - 1e-12 || ds >= alpha - 1e-12) : (dt < alpha + 1e-12 && ds < alpha + 1e-12);
        if (!ok) ++violations;
      }
  }
  return {mismatches == 0 && violations == 0,
          fmt("DBSCAN oracle mismatches %d/100; gate violations %lld over %lld pairs (N <= 200)", mismatches,
              violations, checked)};
}

Verdict retrieval() {
  Rng rng(505);
  std::uniform_int_distribution<int> nq(1, 10), ng(2, 20), pid(0, 4), cam(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<data::SampleMeta> qm, gm;
    const int g = ng(rng);
    for (int j = 0; j < g; ++j) {
      data::SampleMeta m;
      m.person_id = pid(rng);
      m.camera_id = cam(rng);
      gm.push_back(m);
    }
    std::uniform_int_distribution<int> pick(0, g - 1);
    const int q = nq(rng);
    for (int i = 0; i < q; ++i) {
      data::SampleMeta m = gm[static_cast<std::size_t>(pick(rng))];
      m.camera_id = m.camera_id % 3 + 1;
      qm.push_back(m);
    }
    const Matrix qf = oracle::random_matrix(q, 4, rng);
    const Matrix gf = oracle::random_matrix(g, 4, rng);
    const eval::RetrievalResult r = eval::cmc_map(qf, gf, qm, gm);
    const oracle::Retrieval o = oracle::retrieval(qf, gf, qm, gm);
    worst = std::max(worst, std::abs(r.mean_ap - o.mean_ap));
    for (std::size_t k = 0; k < o.cmc.size(); ++k) worst = std::max(worst, std::abs(r.cmc[k] - o.cmc[k]));
  }
  Matrix q(1, 2), g(3, 2);
  q << 1, 0;
  g << 1, 0.1, 1, 0.5, 1, 2;
  std::vector<data::SampleMeta> qm(1), gm(3);
  qm[0].person_id = 1;
  qm[0].camera_id = 1;
  gm[0].person_id = 1, gm[0].camera_id = 2;
  gm[1].person_id = 2, gm[1].camera_id = 2;
  gm[2].person_id = 1, gm[2].camera_id = 3;
  const double ap = eval::cmc_map(q, g, qm, gm).mean_ap;
  const double ap_err = std::abs(ap - 5.0 / 6.0);
  return {worst <= 1e-12 && ap_err <= 1e-9,
          fmt("max deviation from brute force %.1e over 100 instances (limit 1e-12); worked AP %.10f", worst, ap)};
}

struct Arm {
  const char* name;
  std::function<void(RunConfig&)> apply;
};

struct SyntheticOutcome {
  Verdict end_to_end;
  Verdict ablation;
};

SyntheticOutcome synthetic(const std::string& config_path) {
  const std::vector<Arm> arms = {
      {"full", [](RunConfig&) {}},
      {"w/o L_Tsid", [](RunConfig& c) { c.set("lambda1=0"); c.set("lambda3=0"); c.set("use_source_batches=false"); }},
      {"w/o L_id", [](RunConfig& c) { c.set("lambda2=0"); }},
      {"w/o L_dom", [](RunConfig& c) { c.set("lambda3=0"); }},
      {"w/o SCU", [](RunConfig& c) { c.set("smooth_update=false"); }},
  };
  const std::vector<int> seeds{0, 1, 2};
  std::vector<double> arm_map(arms.size(), 0.0);
  double direct_map = 0.0;
  double end_to_end_seconds = 0.0;

  for (int seed : seeds) {
    RunConfig base;
    base.merge_file(config_path);
    base.set("seed", std::to_string(seed));
    const auto start = Clock::now();
    const auto domains = data::generate_synthetic_domains(base.synthetic_config());
    const train::RunInputs inputs{domains.source, domains.target, data::split_first_per_identity(domains.target)};
    train::PretrainResult pre = train::pretrain_stage(base.train_config(), base.hyper_params(), domains.source);
    const double direct = train::evaluate_student(*pre.state.student, inputs.target_eval).mean_ap;
    direct_map += direct / static_cast<double>(seeds.size());
    const double pretrain_seconds = seconds_since(start);
    std::cerr << fmt("seed %d: pretrain %.1f s, teacher acc %.3f, student acc %.3f, direct transfer mAP %.4f\n", seed,
                     pretrain_seconds, pre.teacher.train_accuracy, pre.student.train_accuracy, direct);

    for (std::size_t a = 0; a < arms.size(); ++a) {
      RunConfig cfg = base;
      arms[a].apply(cfg);
      const auto arm_start = Clock::now();
      const train::RunResult r = train::adapt(pre.state.clone(), cfg.train_config(), cfg.hyper_params(), inputs);
      const double m = r.evaluations.back().result.mean_ap;
      arm_map[a] += m / static_cast<double>(seeds.size());
      if (a == 0) end_to_end_seconds += pretrain_seconds + seconds_since(arm_start);
      std::cerr << fmt("seed %d: %-11s mAP %.4f (%.1f s)\n", seed, arms[a].name, m, seconds_since(arm_start));
    }
  }

  SyntheticOutcome out;
  const double gain = 100.0 * (arm_map[0] - direct_map);
  out.end_to_end = {gain >= 10.0 && end_to_end_seconds < 600.0,
                    fmt("student target mAP %.1f -> %.1f, gain %.1f points (need >= 10), %.0f s for 3 seeds (limit 600)",
                        100 * direct_map, 100 * arm_map[0], gain, end_to_end_seconds)};
  bool ordered = true;
  std::string detail = fmt("full %.1f", 100 * arm_map[0]);
  for (std::size_t a = 1; a < arms.size(); ++a) {
    ordered = ordered && arm_map[0] >= arm_map[a] - 0.01;
    detail += fmt(", %s %.1f", arms[a].name, 100 * arm_map[a]);
  }
  out.ablation = {ordered, detail + " (full must be >= each arm - 1.0)"};
  return out;
}

Verdict common_neighbors() {
  Rng rng(808);
  const Matrix f = oracle::random_matrix(40, 6, rng);
  bool upbound = true;
  for (int k : {1, 5, 10, 39}) upbound = upbound && eval::common_neighbors(f, f, k) == static_cast<double>(k);

  const int n = 20;
  const int k = 5;
  const int trials = 1000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t)
    sum += eval::common_neighbors(oracle::random_matrix(n, 6, rng), oracle::random_matrix(n, 6, rng), k);
  const double mean = sum / trials;
  const double expected = static_cast<double>(k * k) / (n - 1);
  const double var = expected * (1.0 - static_cast<double>(k) / (n - 1)) * (n - 1 - k) / (n - 2);
  const double sigma = std::sqrt(var / trials);
  return {upbound && std::abs(mean - expected) <= 3 * sigma,
          fmt("identical sets %s; random mean overlap %.4f vs k^2/(N-1) = %.4f (3 sigma = %.4f)",
              upbound ? "reach k" : "MISS k", mean, expected, 3 * sigma)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: daml_acceptance <synthetic benchmark config>\n";
    return 2;
  }
  report(1, "loss gradients", loss_gradients());
  report(2, "stop-gradient asymmetry", stop_gradient());
  report(3, "smooth classifier update", smooth_update());
  report(4, "pseudo-label oracle", pseudo_labels());
  report(5, "retrieval oracle", retrieval());
  const SyntheticOutcome synth = synthetic(argv[1]);
  report(6, "synthetic end-to-end", synth.end_to_end);
  report(7, "ablation ordering", synth.ablation);
  report(8, "common-neighbor diagnostic", common_neighbors());
  return failures == 0 ? 0 : 1;
}
