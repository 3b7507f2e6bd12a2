#include <gtest/gtest.h>

#include "common.hpp"
#include "rkd/errors.hpp"
#include "rkd/kernel.hpp"

using namespace rkd;
using namespace rkd::testing;

TEST(KernelMatrix, GraphRevealingTwoVertex) {
  Eigen::MatrixXd w(2, 2);
  w << 0, 0.5, 0.5, 0;
  const KernelMatrix k = kernel_matrix(GraphRevealingKernel{}, PopulationGraph(w, {0, 1}, 2));
  EXPECT_NEAR(k.values(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(k.bound, 2.0, 1e-15);
}

TEST(KernelMatrix, ShiftedCosineExtremes) {
  TeacherEmbedding e;
  e.features.resize(3, 2);
  e.features << 1, 2, 2, 4, -1, -2;
  const PopulationGraph g = disconnected_blocks({3});
  const KernelMatrix k = kernel_matrix(ShiftedCosineKernel{e}, g);
  EXPECT_NEAR(k.values(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(k.values(0, 2), 0.0, 1e-15);
  EXPECT_EQ(k.values, k.values.transpose());
}

TEST(KernelMatrix, ShiftedCosineRejectsZeroVector) {
  TeacherEmbedding e;
  e.features = Eigen::MatrixXd::Zero(2, 2);
  e.features(0, 0) = 1.0;
  EXPECT_THROW(kernel_matrix(ShiftedCosineKernel{e}, disconnected_blocks({2})), DomainError);
}

TEST(KernelMatrix, RbfOnIdenticalPointsIsOne) {
  TeacherEmbedding e;
  e.features = Eigen::MatrixXd::Constant(4, 3, 0.7);
  const KernelMatrix k = kernel_matrix(RbfKernel{e, 0.5}, disconnected_blocks({4}));
  EXPECT_LT((k.values.array() - 1.0).abs().maxCoeff(), 1e-15);
}

TEST(KernelMatrix, EntriesMatchKernelValue) {
  const PopulationGraph g = random_graph(6, 2, 4, true);
  const KernelMatrix k = kernel_matrix(GraphRevealingKernel{}, g);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(k.values(i, j), kernel_value(GraphRevealingKernel{}, g, i, j));
  EXPECT_DOUBLE_EQ(k.bound, k.values.maxCoeff());
}

TEST(GraphRevealingIdentity, HoldsOnRandomGraphs) {
  for (int s = 0; s < 20; ++s) EXPECT_LT(verify_graph_revealing_identity(random_graph(3 + s % 8, 2, s, s % 2)), 1e-10);
}

TEST(GraphRevealingIdentity, SelfLoopsOnlyGraph) {
  Eigen::MatrixXd w = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const PopulationGraph g(w, {0, 1, 2}, 3);
  const KernelMatrix k = kernel_matrix(GraphRevealingKernel{}, g);
  EXPECT_LT((k.values - g.degrees().cwiseInverse().asDiagonal().toDenseMatrix()).norm(), 1e-12);
  EXPECT_LT(verify_graph_revealing_identity(g), 1e-10);
}

TEST(GraphRevealingIdentity, MismatchedCosineKernelHasResidual) {
  const PopulationGraph g = random_graph(6, 2, 8);
  TeacherEmbedding e;
  e.features = Eigen::MatrixXd::Random(6, 3);
  EXPECT_GT(kernel_identity_residual(kernel_matrix(ShiftedCosineKernel{e}, g).values, g), 1e-3);
}

TEST(GraphRevealingKernel, PsdExactlyWhenNormalizedAdjacencyIs) {
  for (int s = 0; s < 10; ++s) {
    const PopulationGraph g = rbf_graph(8, 2, s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel_matrix(GraphRevealingKernel{}, g).values);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(SpectralTeacher, InnerProductsReproduceRankKKernel) {
  const PopulationGraph g = rbf_graph(10, 2, 3);
  const int n = g.size();
  const TeacherEmbedding e = spectral_teacher_embedding(g, n);
  const Eigen::MatrixXd full = kernel_matrix(GraphRevealingKernel{}, g).values;
  EXPECT_LT((e.features * e.features.transpose() - full).norm(), 1e-8);
}
