#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "daml/data/augment.hpp"
#include "daml/data/dataset.hpp"
#include "daml/nn/encoder.hpp"
#include "daml/types.hpp"

namespace daml::labels {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// adjacency(i, j): j lies within cosine distance alpha of i in *both*
// subspaces. The diagonal is always set.
struct NeighborGraph {
  BoolMatrix adjacency;

  std::size_t size() const { return static_cast<std::size_t>(adjacency.rows()); }
  bool mutual(std::size_t i, std::size_t j) const {
    return adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) &&
           adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  }
};

// Pairwise 1 - cos(x_i, x_j), symmetric with exact zeros on the diagonal.
// Throws ZeroVector when a row has zero norm.
Matrix cosine_distance_matrix(const Matrix& features);

NeighborGraph neighbor_graph(const Matrix& feats_teacher, const Matrix& feats_student, double alpha);

struct JointDistanceOptions {
  // Scale each subspace to unit norm before concatenating. Off means the raw
  // features are concatenated and only the concatenation is normalized.
  bool prenormalize = false;
};

// Cosine distance of concatenated [teacher, student] features for mutually
// adjacent pairs, kUnreachable otherwise; zero diagonal.
Matrix joint_distance(const Matrix& feats_teacher, const Matrix& feats_student, const NeighborGraph& graph,
                      JointDistanceOptions options = {});

struct Clustering {
  Labels labels;  // cluster id in [0, num_clusters) or kOutlier
  int num_clusters = 0;

  std::size_t outlier_count() const;
  std::vector<std::size_t> cluster_sizes() const;
};

// DBSCAN over a precomputed distance matrix. Neighbourhoods are d <= eps and
// include the point itself; cluster ids follow the order of each cluster's
// first member.
Clustering cluster(const Matrix& distances, double eps, int min_samples);

// Per-cluster arithmetic mean; row k is the centre of cluster k.
Matrix cluster_centers(const Matrix& features, const Labels& labels, int num_clusters);

struct PseudoLabelState {
  Labels labels;
  int num_clusters = 0;
  Matrix centers_teacher;
  Matrix centers_student;

  std::size_t outlier_count() const;
};

PseudoLabelState compute_centers(const Matrix& feats_teacher, const Matrix& feats_student,
                                 const Clustering& clustering);

struct PseudoLabelParams {
  double alpha = 0.5;
  double eps = 0.6;
  int min_samples = 4;
  JointDistanceOptions joint;
};

// neighbor_graph -> joint_distance -> cluster -> compute_centers.
PseudoLabelState generate_pseudo_labels(const Matrix& feats_teacher, const Matrix& feats_student,
                                        const PseudoLabelParams& params);

// Eval-mode features averaged over the original image and `repeat`
// augmented copies drawn from `policy`.
Matrix clustering_features(const nn::Encoder& encoder, const data::Dataset& dataset,
                           const data::AugmentPolicy& policy, int repeat, Rng& rng);

}  // namespace daml::labels
