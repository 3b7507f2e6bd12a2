#include "rkd/kernel.hpp"

#include <cmath>

#include "rkd/errors.hpp"

namespace rkd {
namespace {

void check_embedding(const TeacherEmbedding& e, const PopulationGraph& g, bool no_zero_rows) {
  if (e.features.rows() != g.size())
    throw DomainError("embedding has " + std::to_string(e.features.rows()) + " rows, graph has " +
                      std::to_string(g.size()) + " vertices");
  if (!e.features.allFinite()) throw DomainError("embedding contains non-finite values");
  if (no_zero_rows)
    for (Eigen::Index i = 0; i < e.features.rows(); ++i)
      if (e.features.row(i).norm() == 0.0)
        throw DomainError("zero embedding vector at vertex " + std::to_string(i));
}

double cosine_shifted(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return 1.0 + std::clamp(c, -1.0, 1.0);
}

}  // namespace

double kernel_value(const KernelSpec& spec, const PopulationGraph& g, int i, int j) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GraphRevealingKernel>) {
          return g.weights()(i, j) / (g.degrees()(i) * g.degrees()(j));
        } else if constexpr (std::is_same_v<T, ShiftedCosineKernel>) {
          return cosine_shifted(k.embedding.features.row(i).transpose(),
                                k.embedding.features.row(j).transpose());
        } else {
          const double d2 = (k.embedding.features.row(i) - k.embedding.features.row(j)).squaredNorm();
          return std::exp(-d2 / (2.0 * k.bandwidth * k.bandwidth));
        }
      },
      spec);
}

KernelMatrix kernel_matrix(const KernelSpec& spec, const PopulationGraph& g) {
  if (const auto* c = std::get_if<ShiftedCosineKernel>(&spec)) check_embedding(c->embedding, g, true);
  if (const auto* r = std::get_if<RbfKernel>(&spec)) {
    check_embedding(r->embedding, g, false);
    if (!(r->bandwidth > 0.0)) throw DomainError("RBF bandwidth must be positive");
  }
  const int n = g.size();
  KernelMatrix out{Eigen::MatrixXd(n, n), 0.0};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.values(i, j) = out.values(j, i) = kernel_value(spec, g, i, j);
  out.bound = out.values.maxCoeff();
  return out;
}

double kernel_identity_residual(const Eigen::MatrixXd& kernel, const PopulationGraph& g) {
  const Eigen::VectorXd s = g.degrees().cwiseSqrt();
  return (s.asDiagonal() * kernel * s.asDiagonal() - normalized_adjacency(g)).norm();
}

double verify_graph_revealing_identity(const PopulationGraph& g) {
  return kernel_identity_residual(kernel_matrix(GraphRevealingKernel{}, g).values, g);
}

TeacherEmbedding spectral_teacher_embedding(const PopulationGraph& teacher_graph, int dim) {
  if (dim < 1 || dim > teacher_graph.size()) throw InvalidConfig("embedding dim out of range");
  const auto spec = spectral_decompose(teacher_graph);
  Eigen::VectorXd scale(dim);
  for (int i = 0; i < dim; ++i) scale(i) = std::sqrt(std::max(1.0 - spec.eigenvalues(i), 0.0));
  TeacherEmbedding e;
  e.features = teacher_graph.degrees().cwiseSqrt().cwiseInverse().asDiagonal() *
               spec.eigenvectors.leftCols(dim) * scale.asDiagonal();
  return e;
}

PointKernel rbf_point_kernel(double bandwidth) {
  if (!(bandwidth > 0.0)) throw DomainError("RBF bandwidth must be positive");
  return [bandwidth](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
  };
}

PointKernel shifted_cosine_point_kernel() {
  return [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.norm() == 0.0 || b.norm() == 0.0) throw DomainError("zero vector in cosine kernel");
    return cosine_shifted(a, b);
  };
}

Json embedding_to_json(const TeacherEmbedding& e) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < e.features.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < e.features.cols(); ++j) row.push_back(e.features(i, j));
    rows.push_back(std::move(row));
  }
  Json j;
  j["dim"] = e.dim();
  j["features"] = std::move(rows);
  return j;
}

TeacherEmbedding embedding_from_json(const Json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto& rows = j.at("features");
    if (dim < 1) throw InvalidConfig("embedding dim must be positive");
    TeacherEmbedding e;
    e.features.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != dim) throw InvalidConfig("embedding row has wrong length");
      for (int c = 0; c < dim; ++c) e.features(static_cast<Eigen::Index>(i), c) = json_to_double(rows[i][c]);
    }
    return e;
  } catch (const Json::exception& ex) {
    throw InvalidConfig(std::string("malformed embedding JSON: ") + ex.what());
  }
}

TeacherEmbedding load_embedding(const std::string& path, int expected_rows) {
  auto e = embedding_from_json(read_json_file(path));
  if (e.features.rows() != expected_rows) throw InvalidConfig("embedding is not aligned with the graph");
  return e;
}

}  // namespace rkd
