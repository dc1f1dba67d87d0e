#include <gtest/gtest.h>

#include <cmath>

#include "daml/error.hpp"
#include "daml/evaluation.hpp"
#include "oracles.hpp"

using namespace daml;
using namespace daml::eval;
using data::SampleMeta;

namespace {

SampleMeta meta(int pid, int cam) {
  SampleMeta m;
  m.person_id = pid;
  m.camera_id = cam;
  return m;
}

struct Instance {
  Matrix q, g;
  std::vector<SampleMeta> qm, gm;
};

Instance random_instance(Rng& rng) {
  std::uniform_int_distribution<int> nq(1, 10), ng(2, 20), pid(0, 4), cam(1, 3);
  Instance in;
  const int g = ng(rng);
  for (int j = 0; j < g; ++j) in.gm.push_back(meta(pid(rng), cam(rng)));
  const int q = nq(rng);
  std::uniform_int_distribution<int> pick(0, g - 1);
  for (int i = 0; i < q; ++i) {
    const SampleMeta& anchor = in.gm[static_cast<std::size_t>(pick(rng))];
    in.qm.push_back(meta(anchor.person_id, anchor.camera_id % 3 + 1));  // different camera guarantees a positive
  }
  in.q = oracle::random_matrix(q, 4, rng);
  in.g = oracle::random_matrix(g, 4, rng);
  return in;
}

}  // namespace

TEST(Retrieval, PositivesAtRanksOneAndThree) {
  Matrix q(1, 2), g(3, 2);
  q << 1, 0;
  g << 1, 0.1, 1, 0.5, 1, 2;
  const RetrievalResult r = cmc_map(q, g, std::vector{meta(1, 1)}, std::vector{meta(1, 2), meta(2, 2), meta(1, 3)});
  EXPECT_NEAR(r.mean_ap, (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.mean_ap, 0.8333, 1e-4);
  EXPECT_EQ(r.first_match_rank[0], 1);
}

TEST(Retrieval, PerfectOneHotFeatures) {
  const Matrix g = Matrix::Identity(3, 3);
  std::vector<SampleMeta> qm{meta(0, 1), meta(1, 1), meta(2, 1)}, gm{meta(0, 2), meta(1, 2), meta(2, 2)};
  const RetrievalResult r = cmc_map(g, g, qm, gm);
  EXPECT_DOUBLE_EQ(r.mean_ap, 1.0);
  EXPECT_DOUBLE_EQ(r.rank(1), 1.0);
}

TEST(Retrieval, SinglePositiveAtRankR) {
  for (int rank = 1; rank <= 5; ++rank) {
    Matrix q(1, 2), g(5, 2);
    q << 1, 0;
    std::vector<SampleMeta> gm;
    for (int j = 0; j < 5; ++j) {
      g.row(j) << 1, 0.2 * (j + 1);
      gm.push_back(meta(j + 1 == rank ? 7 : 100 + j, 2));
    }
    const RetrievalResult r = cmc_map(q, g, std::vector{meta(7, 1)}, gm);
    EXPECT_NEAR(r.mean_ap, 1.0 / rank, 1e-12);
    for (int k = 1; k <= 5; ++k) EXPECT_EQ(r.rank(k), k >= rank ? 1.0 : 0.0);
  }
}

TEST(Retrieval, SameCameraSameIdIsIgnored) {
  Matrix q(1, 2), g(2, 2);
  q << 1, 0;
  g << 1, 0, 1, 1;
  const RetrievalResult r = cmc_map(q, g, std::vector{meta(3, 1)}, std::vector{meta(3, 1), meta(3, 2)});
  EXPECT_DOUBLE_EQ(r.mean_ap, 1.0);
}

TEST(Retrieval, NoValidGalleryRaises) {
  try {
    cmc_map(Matrix::Ones(1, 2), Matrix::Ones(1, 2), std::vector{meta(3, 1)}, std::vector{meta(3, 1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoValidGallery);
  }
}

TEST(Retrieval, MatchesBruteForce) {
  Rng rng(0);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng);
    const RetrievalResult r = cmc_map(in.q, in.g, in.qm, in.gm);
    const oracle::Retrieval o = oracle::retrieval(in.q, in.g, in.qm, in.gm);
    ASSERT_NEAR(r.mean_ap, o.mean_ap, 1e-12);
    ASSERT_EQ(r.cmc.size(), o.cmc.size());
    for (std::size_t k = 0; k < o.cmc.size(); ++k) ASSERT_NEAR(r.cmc[k], o.cmc[k], 1e-12);
    for (std::size_t k = 1; k < r.cmc.size(); ++k) ASSERT_GE(r.cmc[k], r.cmc[k - 1]);
    ASSERT_DOUBLE_EQ(r.cmc.back(), 1.0);
  }
}

TEST(Retrieval, PositiveScaleInvariance) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng);
    const RetrievalResult a = cmc_map(in.q, in.g, in.qm, in.gm);
    const RetrievalResult b = cmc_map(3.7 * in.q, 0.2 * in.g, in.qm, in.gm);
    EXPECT_EQ(a.first_match_rank, b.first_match_rank);
    EXPECT_NEAR(a.mean_ap, b.mean_ap, 1e-12);
  }
}

TEST(CommonNeighbors, IdenticalSetsGiveK) {
  Rng rng(2);
  const Matrix f = oracle::random_matrix(30, 5, rng);
  for (int k : {1, 5, 29}) EXPECT_DOUBLE_EQ(common_neighbors(f, f, k), k);
}

TEST(CommonNeighbors, SharedMutualNearestNeighbor) {
  // Pairs (0,1), (2,3), ... are each other's nearest neighbour in both sets.
  Rng rng(3);
  Matrix a(8, 3), b(8, 4);
  const Matrix pa = oracle::random_matrix(4, 3, rng, 5.0);
  const Matrix pb = oracle::random_matrix(4, 4, rng, 5.0);
  for (int i = 0; i < 8; ++i) {
    a.row(i) = pa.row(i / 2) + 0.001 * oracle::random_matrix(1, 3, rng);
    b.row(i) = pb.row(i / 2) + 0.001 * oracle::random_matrix(1, 4, rng);
  }
  EXPECT_DOUBLE_EQ(common_neighbors(a, b, 1, DistanceMetric::Euclidean), 1.0);
}

TEST(CommonNeighbors, RandomEmbeddingsMatchHypergeometricMean) {
  Rng rng(4);
  const int n = 20;
  const int k = 5;
  const int trials = 1000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t)
    sum += common_neighbors(oracle::random_matrix(n, 6, rng), oracle::random_matrix(n, 6, rng), k);
  const double expected = static_cast<double>(k * k) / (n - 1);
  // Per-instance overlap variance is at most the hypergeometric variance.
  const double var = expected * (1.0 - static_cast<double>(k) / (n - 1)) * (n - 1 - k) / (n - 2);
  EXPECT_NEAR(sum / trials, expected, 3.0 * std::sqrt(var / trials));
}

TEST(CommonNeighbors, KMustBeBelowN) {
  const Matrix f = Matrix::Identity(4, 4);
  EXPECT_THROW(common_neighbors(f, f, 4), Error);
  EXPECT_THROW(common_neighbors(f, f, 0), Error);
}

TEST(ClusterQuality, IdentityAndSingleCluster) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  const ClusterQuality same = cluster_quality(truth, truth);
  EXPECT_DOUBLE_EQ(same.nmi, 1.0);
  EXPECT_DOUBLE_EQ(same.purity, 1.0);
  const ClusterQuality one = cluster_quality(std::vector<int>(6, 0), truth);
  EXPECT_DOUBLE_EQ(one.nmi, 0.0);
  EXPECT_EQ(one.num_clusters, 1);
}

TEST(ClusterQuality, SplitClusterArithmeticNormalization) {
  const ClusterQuality q = cluster_quality(std::vector<int>{0, 0, 1, 2}, std::vector<int>{7, 7, 8, 8});
  EXPECT_DOUBLE_EQ(q.purity, 1.0);
  // I = ln 2, H(pred) = 1.5 ln 2, H(truth) = ln 2: I / mean(H) = 0.8.
  EXPECT_NEAR(q.nmi, 0.8, 1e-12);
}

TEST(ClusterQuality, OutliersExcluded) {
  const ClusterQuality q = cluster_quality(std::vector<int>{0, 0, -1, 1}, std::vector<int>{1, 1, 2, 2});
  EXPECT_DOUBLE_EQ(q.outlier_rate, 0.25);
  EXPECT_DOUBLE_EQ(q.nmi, 1.0);
}
