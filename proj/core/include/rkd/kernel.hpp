#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "rkd/graph.hpp"

namespace rkd {

// Per-vertex teacher features psi(x), one row per vertex.
struct TeacherEmbedding {
  Eigen::MatrixXd features;
  int dim() const { return static_cast<int>(features.cols()); }
};

// k(x, x') = w_xx' / (w_x w_x') of the graph the kernel is evaluated on.
struct GraphRevealingKernel {};
// k(x, x') = 1 + cos(psi(x), psi(x')), in [0, 2].
struct ShiftedCosineKernel {
  TeacherEmbedding embedding;
};
// k(x, x') = exp(-|psi(x) - psi(x')|^2 / (2 h^2)).
struct RbfKernel {
  TeacherEmbedding embedding;
  double bandwidth = 1.0;
};

using KernelSpec = std::variant<GraphRevealingKernel, ShiftedCosineKernel, RbfKernel>;

struct KernelMatrix {
  Eigen::MatrixXd values;
  double bound = 0.0;  // B_k, the largest entry
};

KernelMatrix kernel_matrix(const KernelSpec& spec, const PopulationGraph& g);
double kernel_value(const KernelSpec& spec, const PopulationGraph& g, int i, int j);

// Frobenius norm of D^{1/2} K D^{1/2} - normalized adjacency.
double kernel_identity_residual(const Eigen::MatrixXd& kernel, const PopulationGraph& g);
double verify_graph_revealing_identity(const PopulationGraph& g);

// Rows of D^{-1/2} V diag(sqrt(max(1 - lambda, 0))) over the first `dim`
// eigenpairs of the teacher graph; inner products of these features
// reproduce the rank-`dim` part of the graph-revealing kernel.
TeacherEmbedding spectral_teacher_embedding(const PopulationGraph& teacher_graph, int dim);

PointKernel rbf_point_kernel(double bandwidth);
PointKernel shifted_cosine_point_kernel();

Json embedding_to_json(const TeacherEmbedding& e);
TeacherEmbedding embedding_from_json(const Json& j);
TeacherEmbedding load_embedding(const std::string& path, int expected_rows);

}  // namespace rkd
