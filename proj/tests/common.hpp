#pragma once

// Fixture generators and brute-force oracles shared by the unit tests and
// the acceptance runner. Oracles here are written against the definitions
// directly and never call the library routine they check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rkd/graph.hpp"

namespace rkd::testing {

// Symmetric random weights in [0, 1) with optional self-loops, random
// balanced-ish labels (every class present).
inline PopulationGraph random_graph(int n, int k, std::uint64_t seed, bool self_loops = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (i == j && !self_loops) continue;
      w(i, j) = w(j, i) = u(rng);
    }
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % k;
  std::shuffle(labels.begin(), labels.end(), rng);
  return PopulationGraph(w, labels, k);
}

// Gaussian clusters in the plane with an RBF similarity (diagonal kept), so
// the weight matrix is positive semi-definite.
inline PopulationGraph rbf_graph(int n, int k, std::uint64_t seed, double spread = 0.7, double bandwidth = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd w(n, n);
  Eigen::MatrixXd pts(n, 2);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % k;
    const double angle = 2.0 * M_PI * labels[i] / k;
    pts(i, 0) = 2.0 * std::cos(angle) + spread * gauss(rng);
    pts(i, 1) = 2.0 * std::sin(angle) + spread * gauss(rng);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      w(i, j) = std::exp(-(pts.row(i) - pts.row(j)).squaredNorm() / (2.0 * bandwidth * bandwidth));
  return PopulationGraph(w, labels, k);
}

// Complete graphs on each class (no self-loops) with no cross edges.
inline PopulationGraph disconnected_blocks(const std::vector<int>& sizes) {
  int n = 0;
  for (int s : sizes) n += s;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> labels;
  for (size_t c = 0; c < sizes.size(); ++c)
    for (int i = 0; i < sizes[c]; ++i) labels.push_back(static_cast<int>(c));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && labels[i] == labels[j]) w(i, j) = 1.0;
  return PopulationGraph(w, labels, static_cast<int>(sizes.size()));
}

// W-bar computed from raw weights, independently of the library.
inline Eigen::MatrixXd oracle_normalized_adjacency(const PopulationGraph& g) {
  const Eigen::MatrixXd w = g.raw_weights() / g.raw_weights().sum();
  const Eigen::VectorXd d = w.rowwise().sum();
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) out(i, j) = w(i, j) / std::sqrt(d(i) * d(j));
  return out;
}

// Ascending Laplacian eigenvalues from Eigen's dense symmetric solver.
inline Eigen::VectorXd oracle_laplacian_eigenvalues(const PopulationGraph& g) {
  const Eigen::MatrixXd wbar = oracle_normalized_adjacency(g);
  const Eigen::MatrixXd l = Eigen::MatrixXd::Identity(wbar.rows(), wbar.cols()) - wbar;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (l + l.transpose()));
  return es.eigenvalues();
}

// E_{(a,b) ~ w_a w_b} (f_a . f_b - w_ab / (w_a w_b))^2 by a double loop.
inline double oracle_pair_expectation(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  const Eigen::MatrixXd w = g.raw_weights() / g.raw_weights().sum();
  const Eigen::VectorXd d = w.rowwise().sum();
  double total = 0.0;
  for (int a = 0; a < w.rows(); ++a)
    for (int b = 0; b < w.rows(); ++b) {
      const double r = scores.row(a).dot(scores.row(b)) - w(a, b) / (d(a) * d(b));
      total += d(a) * d(b) * r * r;
    }
  return total;
}

// Inter-class fraction straight from the definition: half the ordered
// cross-class weight over the total weight.
inline double oracle_alpha(const PopulationGraph& g) {
  const Eigen::MatrixXd& w = g.raw_weights();
  double cross = 0.0;
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j)
      if (g.labels()[i] != g.labels()[j]) cross += w(i, j);
  return cross / (2.0 * w.sum());
}

// Minority mass by brute force: majority class per predicted cluster with
// ties to the smallest class, then the mass of disagreeing vertices.
inline double oracle_minority_mass(const std::vector<int>& pred, const PopulationGraph& g) {
  const Eigen::VectorXd d = g.raw_weights().rowwise().sum() / g.raw_weights().sum();
  int clusters = 0;
  for (int p : pred) clusters = std::max(clusters, p + 1);
  std::vector<std::vector<double>> mass(clusters, std::vector<double>(g.num_classes(), 0.0));
  for (int x = 0; x < g.size(); ++x) mass[pred[x]][g.labels()[x]] += d(x);
  double minority = 0.0;
  for (int x = 0; x < g.size(); ++x) {
    const auto& m = mass[pred[x]];
    int best = 0;
    for (int c = 1; c < g.num_classes(); ++c)
      if (m[c] > m[best] + 1e-15) best = c;
    if (best != g.labels()[x]) minority += d(x);
  }
  return minority;
}

}  // namespace rkd::testing
