#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/clustering.hpp"
#include "rkd/graph.hpp"
#include "rkd/student.hpp"

namespace rkd {

// Per-vertex augmentation sets A(x). A conforming map has x in A(x),
// at least one other member, and stays inside the class of x.
class AugmentationMap {
 public:
  // Validates against `g`; with `strict` false, only the range and
  // class-invariance checks run and the map is marked non-conforming.
  AugmentationMap(std::vector<std::vector<int>> sets, const PopulationGraph& g, bool strict = true);

  const std::vector<std::vector<int>>& sets() const { return sets_; }
  int size() const { return static_cast<int>(sets_.size()); }
  bool conforming() const { return conforming_; }

 private:
  std::vector<std::vector<int>> sets_;
  bool conforming_ = true;
};

// NB(x) = {x' : A(x) ∩ A(x') nonempty}, sorted.
std::vector<std::vector<int>> neighborhoods(const AugmentationMap& aug);
// NB(S) as a sorted vertex list.
std::vector<int> neighborhood_of_set(const std::vector<std::vector<int>>& nb, const std::vector<int>& subset);

inline constexpr int kMaxExhaustiveVertices = 18;
inline constexpr int kMaxSampledVertices = 64;
inline constexpr double kExpansionSentinel = 1e6;

struct ExpansionReport {
  // inf over qualifying (S, k) of P(NB(S) ∩ X_k) / P(S ∩ X_k): c-expansion
  // holds for every c below it.
  double c_hat = kExpansionSentinel;
  // The same infimum over pairs where NB(S) does not already cover X_k,
  // capped at the sentinel.
  double c_hat_unsaturated = kExpansionSentinel;
  std::uint64_t checked_subsets = 0;
  bool exhaustive = false;
  std::vector<int> witness;  // a subset attaining c_hat
};

ExpansionReport estimate_c_expansion(const AugmentationMap& aug, const PopulationGraph& g,
                                     std::uint64_t samples = 200000, std::uint64_t seed = 0);

double dac_error(const std::vector<int>& predicted, const AugmentationMap& aug, const PopulationGraph& g);

struct Theorem5Result {
  double mu = 0.0;
  double nu = 0.0;
  double c_hat = 0.0;
  double bound = 0.0;
  int audited = 0;
  std::vector<std::string> skipped;
  Verdict verdict;
};

// Family members whose minority set exceeds half of some class are
// skipped: the expansion argument is only available for such sets.
Theorem5Result theorem5_check(const std::vector<std::vector<int>>& family, const AugmentationMap& aug,
                              const PopulationGraph& g, const ExpansionReport& expansion);

struct ConstantExpansionResult {
  bool holds = true;
  std::vector<int> violating_subset;
  std::uint64_t checked_subsets = 0;
};

ConstantExpansionResult constant_expansion_check(const AugmentationMap& aug, const PopulationGraph& g, double q,
                                                 double xi);

struct ExpansionProbe {
  double xi = 0.0;
  double q = 0.0;
  bool holds = false;
};

// For xi in {0.05, 0.1, 0.2}: c-expansion at c_hat should give
// (xi / (c_hat - 1), xi)-constant expansion. Empty when c_hat <= 1.
std::vector<ExpansionProbe> constant_expansion_probes(const AugmentationMap& aug, const PopulationGraph& g,
                                                      double c_hat);

struct MarginSolverConfig {
  int restarts = 4;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

struct MarginResult {
  double value = 0.0;
  bool exact = false;      // closed form (linear model)
  bool certified = false;  // delta below flips the prediction
  std::vector<Eigen::VectorXd> delta;  // one block per perturbed layer
};

// Smallest layerwise perturbation (each layer's perturbation scaled by the
// norm of that layer's input) that moves the argmax away from `y`.
MarginResult all_layer_margin(const StudentModel& model, const Eigen::VectorXd& x, int y,
                              const MarginSolverConfig& solver = {});
// Forward pass with the perturbation applied.
Eigen::VectorXd perturbed_forward(const StudentModel& model, const Eigen::VectorXd& x,
                                  const std::vector<Eigen::VectorXd>& delta);

// min over x' in A(x) of the margin at x' with respect to y_f(x).
double robust_margin(const StudentModel& model, const Eigen::MatrixXd& inputs, int vertex, const AugmentationMap& aug,
                     const MarginSolverConfig& solver = {});

// Two-term scale indicator with unit constants; not a certified bound.
double prop1_bound(const std::vector<double>& weight_frobenius, int width, double tau, int n, double delta,
                   int depth);

Json augmentation_to_json(const AugmentationMap& aug);
AugmentationMap augmentation_from_json(const Json& j, const PopulationGraph& g, bool strict = true);

}  // namespace rkd
