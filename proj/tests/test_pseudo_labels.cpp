#include <gtest/gtest.h>

#include <cmath>

#include "daml/data/synthetic.hpp"
#include "daml/error.hpp"
#include "daml/nn/encoder.hpp"
#include "daml/pseudo_labels.hpp"
#include "oracles.hpp"

using namespace daml;
using namespace daml::labels;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(CosineDistance, SymmetricClampedAndRejectsZero) {
  Rng rng(0);
  const Matrix f = oracle::random_matrix(7, 4, rng);
  const Matrix d = cosine_distance_matrix(f);
  for (Eigen::Index i = 0; i < 7; ++i) {
    EXPECT_NEAR(d(i, i), 0.0, 1e-12);
    for (Eigen::Index j = 0; j < 7; ++j) {
      EXPECT_EQ(d(i, j), d(j, i));
      EXPECT_GE(d(i, j), 0.0);
      EXPECT_LE(d(i, j), 2.0);
      EXPECT_NEAR(d(i, j), oracle::cosine_distance(f.row(i), f.row(j)), 1e-12);
    }
  }
  Matrix z = f;
  z.row(3).setZero();
  try {
    cosine_distance_matrix(z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVector);
  }
}

TEST(NeighborGraph, IdenticalRowsAreNeighbors) {
  const Matrix t = rows({{1, 2}, {1, 2}});
  const Matrix s = rows({{0, 1, 3}, {0, 1, 3}});
  EXPECT_TRUE(neighbor_graph(t, s, 0.5).mutual(0, 1));
}

TEST(NeighborGraph, StudentSubspaceVetoes) {
  const double r = std::sqrt(0.5);
  const Matrix t = rows({{1, 0}, {r, r}});  // 45 degrees: 0.2929
  const Matrix s = rows({{1, 0}, {0, 1}});  // orthogonal: 1
  EXPECT_NEAR(cosine_distance_matrix(t)(0, 1), 1 - r, 1e-12);
  EXPECT_FALSE(neighbor_graph(t, s, 0.5).mutual(0, 1));
  EXPECT_TRUE(neighbor_graph(t, t, 0.5).mutual(0, 1));
}

TEST(NeighborGraph, DiagonalAlwaysSet) {
  Rng rng(1);
  const auto g = neighbor_graph(oracle::random_matrix(5, 3, rng), oracle::random_matrix(5, 2, rng), 0.0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_TRUE(g.mutual(i, i));
}

TEST(JointDistance, ConcatenatedCosine) {
  const Matrix t = rows({{1, 0}, {1, 0}});
  const Matrix s = rows({{1, 0}, {0, 1}});
  // Student pair is 1 apart, so the gate needs alpha above 1 to admit it.
  const Matrix d = joint_distance(t, s, neighbor_graph(t, s, 1.5));
  EXPECT_NEAR(d(0, 1), 0.5, 1e-12);
  EXPECT_EQ(d(0, 0), 0.0);
  const Matrix gated = joint_distance(t, s, neighbor_graph(t, s, 0.5));
  EXPECT_EQ(gated(0, 1), kUnreachable);
  EXPECT_EQ(gated(1, 0), kUnreachable);
}

TEST(JointDistance, IdenticalConcatenationIsZero) {
  const Matrix t = rows({{3, 1}, {3, 1}});
  const Matrix s = rows({{2, 2, 1}, {2, 2, 1}});
  EXPECT_NEAR(joint_distance(t, s, neighbor_graph(t, s, 0.5))(0, 1), 0.0, 1e-12);
}

TEST(JointDistance, GateSoundnessExhaustive) {
  Rng rng(2);
  std::uniform_int_distribution<int> size(2, 200);
  std::uniform_real_distribution<double> alpha(0.1, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = trial < 2 ? 200 : size(rng);
    const Matrix t = oracle::random_matrix(n, 4, rng);
    const Matrix s = oracle::random_matrix(n, 3, rng);
    const double a = alpha(rng);
    const Matrix d = joint_distance(t, s, neighbor_graph(t, s, a));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double dt = oracle::cosine_distance(t.row(i), t.row(j));
        const double ds = oracle::cosine_distance(s.row(i), s.row(j));
        if (std::isinf(d(i, j))) {
          ASSERT_TRUE(dt >= a - 1e-12 || ds >= a - 1e-12);
        } else {
          ASSERT_TRUE(dt < a + 1e-12 && ds < a + 1e-12);
        }
      }
  }
}

TEST(Cluster, TwoSeparatedGroups) {
  Matrix d = Matrix::Constant(4, 4, kInf);
  d.block(0, 0, 2, 2).setZero();
  d.block(2, 2, 2, 2).setZero();
  const Clustering c = cluster(d, 0.6, 2);
  EXPECT_EQ(c.num_clusters, 2);
  EXPECT_EQ(c.labels, (Labels{0, 0, 1, 1}));
}

TEST(Cluster, IsolatedPointIsOutlier) {
  Matrix d = Matrix::Constant(3, 3, kInf);
  d.diagonal().setZero();
  d(0, 1) = d(1, 0) = 0.1;
  const Clustering c = cluster(d, 0.6, 2);
  EXPECT_EQ(c.labels, (Labels{0, 0, kOutlier}));
  EXPECT_EQ(c.outlier_count(), 1u);
}

TEST(Cluster, ChainReachesThroughMiddle) {
  Matrix d(3, 3);
  d << 0, 0.5, 1.5, 0.5, 0, 0.5, 1.5, 0.5, 0;
  const Clustering c = cluster(d, 0.6, 2);
  EXPECT_EQ(c.num_clusters, 1);
  EXPECT_EQ(c.labels, (Labels{0, 0, 0}));
}

TEST(Cluster, MatchesBruteForceOnSmallInstances) {
  Rng rng(3);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> min_samples(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = size(rng);
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = unit(rng) < 0.2 ? kInf : unit(rng);
    const double eps = 0.2 + 0.4 * unit(rng);
    const int m = min_samples(rng);
    ASSERT_EQ(cluster(d, eps, m).labels, oracle::dbscan(d, eps, m)) << "trial " << trial;
  }
}

TEST(Cluster, InfinityEdgesNeverLink) {
  // Two dense groups joined only through an unreachable edge.
  Matrix d = Matrix::Constant(6, 6, kInf);
  d.block(0, 0, 3, 3).setConstant(0.1);
  d.block(3, 3, 3, 3).setConstant(0.1);
  d.diagonal().setZero();
  const Clustering c = cluster(d, 1e9, 2);
  EXPECT_NE(c.labels[0], c.labels[3]);
}

TEST(Centers, MeansPerCluster) {
  const Matrix f = rows({{1, 0}, {0, 1}, {5, 5}, {9, 9}});
  const Matrix c = cluster_centers(f, {0, 0, 1, kOutlier}, 2);
  EXPECT_EQ(c.row(0), (RowVector(2) << 0.5, 0.5).finished());
  EXPECT_EQ(c.row(1), f.row(2));
  try {
    cluster_centers(f, {0, 0, 2, kOutlier}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCluster);
  }
}

TEST(Centers, OrderFree) {
  Rng rng(4);
  const Matrix f = oracle::random_matrix(6, 3, rng);
  const Labels l{0, 1, 0, 1, 1, 0};
  const std::vector<int> perm{5, 3, 1, 0, 2, 4};
  Matrix pf(6, 3);
  Labels pl(6);
  for (int i = 0; i < 6; ++i) {
    pf.row(i) = f.row(perm[static_cast<std::size_t>(i)]);
    pl[static_cast<std::size_t>(i)] = l[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  EXPECT_LT((cluster_centers(f, l, 2) - cluster_centers(pf, pl, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PseudoLabels, DeterministicPipeline) {
  Rng rng(5);
  Matrix t = oracle::random_matrix(3, 4, rng);
  Matrix s = oracle::random_matrix(3, 3, rng);
  // Five tight copies around each of three prototypes.
  Matrix ft(15, 4), fs(15, 3);
  for (int i = 0; i < 15; ++i) {
    ft.row(i) = t.row(i % 3) + 0.01 * oracle::random_matrix(1, 4, rng);
    fs.row(i) = s.row(i % 3) + 0.01 * oracle::random_matrix(1, 3, rng);
  }
  const PseudoLabelParams p{0.5, 0.1, 4, {}};
  const PseudoLabelState a = generate_pseudo_labels(ft, fs, p);
  const PseudoLabelState b = generate_pseudo_labels(ft, fs, p);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.num_clusters, 3);
  EXPECT_EQ(a.centers_teacher.rows(), 3);
  EXPECT_EQ(a.centers_student.cols(), 3);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(a.labels[static_cast<std::size_t>(i)], i % 3);
}

TEST(ClusteringFeatures, RepeatSemantics) {
  data::SyntheticConfig sc;
  sc.n_ids = 2;
  sc.per_id = 3;
  const auto d = data::generate_synthetic_domains(sc);
  auto enc = nn::make_encoder(nn::default_teacher_config(sc.image_size), 0);
  const Matrix plain = nn::extract_features(*enc, d.target.images());
  Rng rng(0);
  const auto identity = data::AugmentPolicy::identity(sc.image_size);
  EXPECT_LT((clustering_features(*enc, d.target, identity, 0, rng) - plain).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((clustering_features(*enc, d.target, identity, 1, rng) - plain).cwiseAbs().maxCoeff(), 1e-12);

  data::AugmentPolicy erase = identity;
  erase.erase_prob = 1.0;
  Rng r1(9), r2(9);
  const Matrix a = clustering_features(*enc, d.target, erase, 2, r1);
  EXPECT_EQ(a, clustering_features(*enc, d.target, erase, 2, r2));
  EXPECT_GT((a - plain).cwiseAbs().maxCoeff(), 0.0);
}
