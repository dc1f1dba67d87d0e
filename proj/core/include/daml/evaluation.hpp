#pragma once

#include <span>
#include <vector>

#include "daml/data/dataset.hpp"
#include "daml/types.hpp"

namespace daml::eval {

enum class DistanceMetric { Cosine, Euclidean };

struct RetrievalResult {
  double mean_ap = 0.0;
  std::vector<double> cmc;        // cmc[k-1] = rank-k accuracy, k = 1..gallery size
  std::vector<double> average_precision;  // per query
  std::vector<int> first_match_rank;      // 1-based, per query

  double rank(int k) const;  // rank-k accuracy; clamps k to the curve length
};

// Pairwise query-to-gallery distances.
Matrix pairwise_distances(const Matrix& query, const Matrix& gallery, DistanceMetric metric);

// Single-query protocol: gallery entries sharing both person id and camera
// with the query are dropped; ties are broken by gallery index. Throws
// NoValidGallery if a query keeps no positive.
RetrievalResult cmc_map(const Matrix& query_feats, const Matrix& gallery_feats,
                        std::span<const data::SampleMeta> query_meta, std::span<const data::SampleMeta> gallery_meta,
                        DistanceMetric metric = DistanceMetric::Cosine);

// Mean over instances of |kNN_A(i) ∩ kNN_B(i)|, self excluded. Requires k < N.
double common_neighbors(const Matrix& feats_a, const Matrix& feats_b, int k,
                        DistanceMetric metric = DistanceMetric::Cosine);

struct ClusterQuality {
  double nmi = 0.0;     // arithmetic-mean normalization
  double purity = 0.0;
  int num_clusters = 0;
  double outlier_rate = 0.0;
};

// Outliers (negative predicted labels) are left out of NMI and purity.
ClusterQuality cluster_quality(std::span<const int> predicted, std::span<const int> truth);

}  // namespace daml::eval
