#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/json_io.hpp"

namespace rkd {

// A finite population with a symmetric similarity graph. Weights are
// normalized to total mass 1 at construction, so the degree of a vertex is
// its sampling probability.
class PopulationGraph {
 public:
  // Validates and normalizes `raw` (symmetric, nonnegative, no zero-degree
  // vertex, every class present). `raw` is kept verbatim for serialization.
  PopulationGraph(Eigen::MatrixXd raw, std::vector<int> labels, int num_classes,
                  std::vector<std::int64_t> vertices = {});

  int size() const { return static_cast<int>(labels_.size()); }
  int num_classes() const { return num_classes_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::int64_t>& vertices() const { return vertices_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::MatrixXd& raw_weights() const { return raw_; }
  const Eigen::VectorXd& degrees() const { return degrees_; }

  // Vertex indices per class, in vertex order.
  std::vector<std::vector<int>> class_members() const;
  // P(X_k) for each class.
  Eigen::VectorXd class_masses() const;
  // |X| x K one-hot encoding of the ground-truth labels.
  Eigen::MatrixXd one_hot() const;

 private:
  std::vector<std::int64_t> vertices_;
  std::vector<int> labels_;
  int num_classes_;
  Eigen::MatrixXd raw_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd degrees_;
};

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalues(i)
};

// Stochastic block model with unit edge weights and no self-loops. A draw
// that leaves some vertex isolated is redrawn with the next sub-seed.
PopulationGraph build_sbm(int num_classes, const std::vector<int>& sizes, double p_in,
                          double p_out, std::uint64_t seed);

// Similarity between two points; must be nonnegative.
using PointKernel = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Rows of `points` are the population. The diagonal is kept.
PopulationGraph build_from_kernel(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                  int num_classes, const PointKernel& kernel);

// Same, with the similarity given on vertex indices.
PopulationGraph build_from_pair_weights(int n, const std::vector<int>& labels, int num_classes,
                                        const std::function<double(int, int)>& weight);

Eigen::MatrixXd normalized_adjacency(const PopulationGraph& g);
Eigen::MatrixXd laplacian(const PopulationGraph& g);

// Eigenvalues ascending. Within a numerically repeated eigenvalue the basis
// is canonicalized (pivoted Gram-Schmidt on the columns of the eigenspace
// projector), and every vector has its first nonzero entry positive.
SpectralDecomposition spectral_decompose(const PopulationGraph& g);
SpectralDecomposition spectral_decompose_matrix(const Eigen::MatrixXd& symmetric);

double inter_class_fraction(const PopulationGraph& g);

// sum_k y_k^T L y_k with Y = D^{1/2} onehot(labels). This is the full
// ordered cross-class weight, i.e. twice inter_class_fraction.
double laplacian_label_energy(const PopulationGraph& g);

double conductance(const PopulationGraph& g, const std::vector<int>& subset);

struct PartitionResult {
  std::vector<int> assignment;  // block id per vertex
  double value = 0.0;           // max conductance over blocks
};

inline constexpr int kMaxPartitionVertices = 14;

// Exhaustive search over set partitions into exactly k nonempty blocks.
PartitionResult sparsest_k_partition(const PopulationGraph& g, int k);

Json graph_to_json(const PopulationGraph& g);
PopulationGraph graph_from_json(const Json& j);
void save_graph(const PopulationGraph& g, const std::string& path);
PopulationGraph load_graph(const std::string& path);

}  // namespace rkd
