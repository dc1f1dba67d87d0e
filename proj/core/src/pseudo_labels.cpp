#include "daml/pseudo_labels.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "daml/error.hpp"

namespace daml::labels {
namespace {

Matrix normalize_rows(const Matrix& features) {
  const Vector norms = features.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    require(norms(i) > 0.0, ErrorKind::ZeroVector, "feature row " + std::to_string(i) + " has zero norm");
  return norms.cwiseInverse().asDiagonal() * features;
}

}  // namespace

Matrix cosine_distance_matrix(const Matrix& features) {
  const Matrix unit = normalize_rows(features);
  const Matrix sim = unit * unit.transpose();
  const Eigen::Index n = features.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::clamp(1.0 - sim(i, j), 0.0, 2.0);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

NeighborGraph neighbor_graph(const Matrix& feats_teacher, const Matrix& feats_student, double alpha) {
  require(feats_teacher.rows() == feats_student.rows(), ErrorKind::ShapeMismatch,
          "teacher and student features must cover the same samples");
  const Matrix dt = cosine_distance_matrix(feats_teacher);
  const Matrix ds = cosine_distance_matrix(feats_student);
  NeighborGraph graph;
  graph.adjacency = (dt.array() < alpha) && (ds.array() < alpha);
  for (Eigen::Index i = 0; i < graph.adjacency.rows(); ++i) graph.adjacency(i, i) = true;
  return graph;
}

Matrix joint_distance(const Matrix& feats_teacher, const Matrix& feats_student, const NeighborGraph& graph,
                      JointDistanceOptions options) {
  const Eigen::Index n = feats_teacher.rows();
  require(feats_student.rows() == n, ErrorKind::ShapeMismatch, "teacher and student features must cover the same samples");
  require(graph.adjacency.rows() == n && graph.adjacency.cols() == n, ErrorKind::ShapeMismatch,
          "neighbour graph does not match the feature count");

  Matrix joint(n, feats_teacher.cols() + feats_student.cols());
  if (options.prenormalize) {
    joint << normalize_rows(feats_teacher), normalize_rows(feats_student);
  } else {
    joint << feats_teacher, feats_student;
  }
  Matrix d = cosine_distance_matrix(joint);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && !graph.mutual(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) d(i, j) = kUnreachable;
  return d;
}

std::size_t Clustering::outlier_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kOutlier));
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters), 0);
  for (int l : labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

Clustering cluster(const Matrix& distances, double eps, int min_samples) {
  const Eigen::Index n = distances.rows();
  require(distances.cols() == n, ErrorKind::ShapeMismatch, "distance matrix must be square");

  std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (distances(i, j) <= eps) neighbours[static_cast<std::size_t>(i)].push_back(j);
  auto is_core = [&](Eigen::Index i) {
    return neighbours[static_cast<std::size_t>(i)].size() >= static_cast<std::size_t>(min_samples);
  };

  Labels raw(static_cast<std::size_t>(n), kOutlier);
  int next = 0;
  for (Eigen::Index seed = 0; seed < n; ++seed) {
    if (raw[static_cast<std::size_t>(seed)] != kOutlier || !is_core(seed)) continue;
    const int id = next++;
    raw[static_cast<std::size_t>(seed)] = id;
    std::deque<Eigen::Index> frontier{seed};
    while (!frontier.empty()) {
      const Eigen::Index p = frontier.front();
      frontier.pop_front();
      if (!is_core(p)) continue;
      for (Eigen::Index q : neighbours[static_cast<std::size_t>(p)]) {
        if (raw[static_cast<std::size_t>(q)] != kOutlier) continue;
        raw[static_cast<std::size_t>(q)] = id;
        frontier.push_back(q);
      }
    }
  }

  // Renumber by first appearance.
  std::vector<int> remap(static_cast<std::size_t>(next), kOutlier);
  Clustering result;
  result.labels.assign(static_cast<std::size_t>(n), kOutlier);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == kOutlier) continue;
    int& target = remap[static_cast<std::size_t>(raw[i])];
    if (target == kOutlier) target = result.num_clusters++;
    result.labels[i] = target;
  }
  return result;
}

Matrix cluster_centers(const Matrix& features, const Labels& labels, int num_clusters) {
  require(labels.size() == static_cast<std::size_t>(features.rows()), ErrorKind::ShapeMismatch,
          "one label per feature row required");
  Matrix centers = Matrix::Zero(num_clusters, features.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_clusters), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0) continue;
    require(l < num_clusters, ErrorKind::LabelOutOfRange, "cluster id out of range");
    centers.row(l) += features.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int k = 0; k < num_clusters; ++k) {
    require(counts[static_cast<std::size_t>(k)] > 0, ErrorKind::EmptyCluster, "cluster " + std::to_string(k) + " is empty");
    centers.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
  }
  return centers;
}

std::size_t PseudoLabelState::outlier_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kOutlier));
}

PseudoLabelState compute_centers(const Matrix& feats_teacher, const Matrix& feats_student,
                                 const Clustering& clustering) {
  PseudoLabelState state;
  state.labels = clustering.labels;
  state.num_clusters = clustering.num_clusters;
  state.centers_teacher = cluster_centers(feats_teacher, clustering.labels, clustering.num_clusters);
  state.centers_student = cluster_centers(feats_student, clustering.labels, clustering.num_clusters);
  return state;
}

PseudoLabelState generate_pseudo_labels(const Matrix& feats_teacher, const Matrix& feats_student,
                                        const PseudoLabelParams& params) {
  const NeighborGraph graph = neighbor_graph(feats_teacher, feats_student, params.alpha);
  const Matrix d = joint_distance(feats_teacher, feats_student, graph, params.joint);
  return compute_centers(feats_teacher, feats_student, cluster(d, params.eps, params.min_samples));
}

Matrix clustering_features(const nn::Encoder& encoder, const data::Dataset& dataset,
                           const data::AugmentPolicy& policy, int repeat, Rng& rng) {
  require(repeat >= 0, ErrorKind::InvalidConfig, "repeat must be >= 0");
  Matrix sum = nn::extract_features(encoder, dataset.images());
  std::vector<data::Image> augmented(dataset.size());
  for (int r = 0; r < repeat; ++r) {
    for (std::size_t i = 0; i < dataset.size(); ++i) augmented[i] = data::augment(dataset.image(i), policy, rng);
    sum += nn::extract_features(encoder, augmented);
  }
  if (repeat == 0) return sum;
  return sum / static_cast<double>(repeat + 1);
}

}  // namespace daml::labels
