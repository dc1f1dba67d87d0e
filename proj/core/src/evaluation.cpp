#include "daml/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "daml/error.hpp"

namespace daml::eval {
namespace {

std::vector<std::size_t> ranked(const Matrix& dist, Eigen::Index row, std::size_t count) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist(row, static_cast<Eigen::Index>(a)) < dist(row, static_cast<Eigen::Index>(b));
  });
  return order;
}

double entropy(const std::map<int, std::size_t>& counts, double total) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double RetrievalResult::rank(int k) const {
  if (cmc.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(std::clamp(k, 1, static_cast<int>(cmc.size())) - 1);
  return cmc[idx];
}

Matrix pairwise_distances(const Matrix& query, const Matrix& gallery, DistanceMetric metric) {
  require(query.cols() == gallery.cols(), ErrorKind::ShapeMismatch, "query and gallery widths differ");
  if (metric == DistanceMetric::Cosine) {
    const Vector qn = query.rowwise().norm();
    const Vector gn = gallery.rowwise().norm();
    require((qn.array() > 0.0).all() && (gn.array() > 0.0).all(), ErrorKind::ZeroVector, "zero feature in retrieval");
    return (1.0 - (qn.cwiseInverse().asDiagonal() * query * gallery.transpose() * gn.cwiseInverse().asDiagonal()).array())
        .matrix();
  }
  Matrix d(query.rows(), gallery.rows());
  for (Eigen::Index i = 0; i < query.rows(); ++i)
    for (Eigen::Index j = 0; j < gallery.rows(); ++j) d(i, j) = (query.row(i) - gallery.row(j)).norm();
  return d;
}

RetrievalResult cmc_map(const Matrix& query_feats, const Matrix& gallery_feats,
                        std::span<const data::SampleMeta> query_meta, std::span<const data::SampleMeta> gallery_meta,
                        DistanceMetric metric) {
  require(static_cast<std::size_t>(query_feats.rows()) == query_meta.size() &&
              static_cast<std::size_t>(gallery_feats.rows()) == gallery_meta.size(),
          ErrorKind::ShapeMismatch, "metadata does not match feature rows");
  const Matrix dist = pairwise_distances(query_feats, gallery_feats, metric);

  RetrievalResult result;
  result.cmc.assign(gallery_meta.size(), 0.0);
  for (std::size_t q = 0; q < query_meta.size(); ++q) {
    const auto& qm = query_meta[q];
    double hits = 0.0;
    double precision_sum = 0.0;
    int position = 0;
    int first = 0;
    for (std::size_t g : ranked(dist, static_cast<Eigen::Index>(q), gallery_meta.size())) {
      const auto& gm = gallery_meta[g];
      const bool same_id = gm.person_id == qm.person_id && !qm.is_distractor();
      if (same_id && gm.camera_id == qm.camera_id) continue;
      ++position;
      if (!same_id) continue;
      hits += 1.0;
      precision_sum += hits / position;
      if (first == 0) first = position;
    }
    if (first == 0)
      raise(ErrorKind::NoValidGallery, "query " + std::to_string(q) + " has no valid positive in the gallery");
    result.average_precision.push_back(precision_sum / hits);
    result.first_match_rank.push_back(first);
    for (std::size_t k = static_cast<std::size_t>(first) - 1; k < result.cmc.size(); ++k) result.cmc[k] += 1.0;
  }
  const double nq = static_cast<double>(query_meta.size());
  if (nq > 0) {
    for (double& c : result.cmc) c /= nq;
    result.mean_ap = std::accumulate(result.average_precision.begin(), result.average_precision.end(), 0.0) / nq;
  }
  return result;
}

double common_neighbors(const Matrix& feats_a, const Matrix& feats_b, int k, DistanceMetric metric) {
  const Eigen::Index n = feats_a.rows();
  require(feats_b.rows() == n, ErrorKind::ShapeMismatch, "feature sets must cover the same samples");
  require(k >= 1 && k < n, ErrorKind::InvalidConfig, "k must satisfy 1 <= k < N");
  const Matrix da = pairwise_distances(feats_a, feats_a, metric);
  const Matrix db = pairwise_distances(feats_b, feats_b, metric);

  auto top_k = [&](const Matrix& d, Eigen::Index i) {
    std::vector<std::size_t> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (std::size_t j : ranked(d, i, static_cast<std::size_t>(n)))
      if (static_cast<Eigen::Index>(j) != i) order.push_back(j);
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    return order;
  };

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = top_k(da, i);
    const auto b = top_k(db, i);
    std::vector<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    total += static_cast<double>(both.size());
  }
  return total / static_cast<double>(n);
}

ClusterQuality cluster_quality(std::span<const int> predicted, std::span<const int> truth) {
  require(predicted.size() == truth.size(), ErrorKind::ShapeMismatch, "label vectors differ in length");
  ClusterQuality q;
  std::map<int, std::size_t> pred_counts;
  std::map<int, std::size_t> truth_counts;
  std::map<std::pair<int, int>, std::size_t> joint;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0) continue;
    ++kept;
    ++pred_counts[predicted[i]];
    ++truth_counts[truth[i]];
    ++joint[{predicted[i], truth[i]}];
  }
  q.num_clusters = static_cast<int>(pred_counts.size());
  q.outlier_rate = predicted.empty() ? 0.0 : 1.0 - static_cast<double>(kept) / static_cast<double>(predicted.size());
  if (kept == 0) return q;

  const double n = static_cast<double>(kept);
  std::map<int, std::size_t> majority;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pij = static_cast<double>(c) / n;
    const double pi = static_cast<double>(pred_counts[key.first]) / n;
    const double pj = static_cast<double>(truth_counts[key.second]) / n;
    mi += pij * std::log(pij / (pi * pj));
    majority[key.first] = std::max(majority[key.first], c);
  }
  std::size_t correct = 0;
  for (const auto& [label, c] : majority) correct += c;
  q.purity = static_cast<double>(correct) / n;

  const double hp = entropy(pred_counts, n);
  const double ht = entropy(truth_counts, n);
  if (hp == 0.0 && ht == 0.0) {
    q.nmi = 1.0;
  } else {
    q.nmi = std::max(0.0, mi / (0.5 * (hp + ht)));
  }
  return q;
}

}  // namespace daml::eval
