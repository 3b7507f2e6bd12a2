#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/graph.hpp"
#include "rkd/json_io.hpp"

namespace rkd {

struct LabeledPair {
  int vertex = 0;
  int label = 0;
};

struct LabeledSet {
  std::vector<LabeledPair> pairs;
  std::string strategy;
  std::uint64_t seed = 0;
};

// Labels come from a noiseless oracle: the ground truth of the graph.
LabeledSet label_vertices(const std::vector<int>& vertices, const PopulationGraph& g, std::string strategy,
                          std::uint64_t seed);

LabeledSet iid_sample(const PopulationGraph& g, int n, std::uint64_t seed);
// n_per_class distinct vertices per class, uniformly without replacement.
LabeledSet uniform_per_class(const PopulationGraph& g, int n_per_class, std::uint64_t seed);

struct NonDegeneracy {
  bool ok = false;
  bool surjective = false;
  int m0 = 0;       // smallest majority cluster
  double c0 = 0.0;  // min_k P(X_k^f) / P(M ∩ X_k^f), +inf when no minority
};

NonDegeneracy check_non_degenerate(const std::vector<int>& predicted, const PopulationGraph& g);

// ceil(log_{c0}(2K / delta)), or 1 when c0 is infinite.
int cluster_wise_draws(double c0, int k, double delta);
// Smallest admissible delta, 2K / c0^{m0}.
double cluster_wise_min_delta(double c0, int k, int m0);

// m draws per majority cluster X_k^f, each from P restricted to the cluster.
LabeledSet cluster_wise_sample(const std::vector<int>& predicted, const PopulationGraph& g, double delta,
                               std::uint64_t seed);

double facility_location_value(const std::vector<int>& selected, const Eigen::MatrixXd& kernel);
// Marginal-gain greedy over the full ground set; ties go to the smaller index.
std::vector<int> full_greedy(const Eigen::MatrixXd& kernel, int n);
// Same result as full_greedy, with lazy gain re-evaluation.
std::vector<int> lazy_greedy(const Eigen::MatrixXd& kernel, int n);
// Each step evaluates a uniform sample of ceil((|X|/n) log(1/eps)) candidates.
std::vector<int> stochastic_greedy(const Eigen::MatrixXd& kernel, int n, double epsilon, std::uint64_t seed);
int stochastic_greedy_sample_size(int ground, int n, double epsilon);

struct ErmResult {
  int index = 0;
  double empirical_risk = 0.0;
  std::vector<int> tied;  // other members with the same risk
};

// Zero-one ERM over a family of label predictions.
ErmResult erm_zero_one(const std::vector<std::vector<int>>& family, const LabeledSet& labeled);

double population_zero_one(const std::vector<int>& predicted, const PopulationGraph& g);

struct Theorem3Report {
  int n = 0;
  int trials = 0;
  double delta = 0.0;
  double mu = 0.0;
  double bound = 0.0;
  bool vacuous = false;  // bound > 1
  int failures = 0;
  long rejections = 0;   // draws discarded for missing a class
  double failure_rate = 0.0;
  double allowed_rate = 0.0;  // delta/2 + 3 standard errors
  double mean_excess = 0.0;
  bool pass = false;
};

double theorem3_bound(int k, int n, double mu, double delta);

Theorem3Report theorem3_check(const std::vector<std::vector<int>>& family, const PopulationGraph& g, int n,
                              int trials, double delta, std::uint64_t seed);

struct CoverageReport {
  int trials = 0;
  int covered = 0;
  double rate = 0.0;
  double standard_error = 0.0;
  int draws_per_cluster = 0;
};

// Monte Carlo coverage of the cluster-wise strategy.
CoverageReport cluster_wise_coverage(const std::vector<int>& predicted, const PopulationGraph& g, double delta,
                                     int trials, std::uint64_t seed);

// Mean number of i.i.d. draws from P until every class is seen.
double coupon_collector_mean(const PopulationGraph& g, int trials, std::uint64_t seed);

std::string labeled_set_csv(const LabeledSet& s, const PopulationGraph& g);
Json theorem3_to_json(const Theorem3Report& r);

}  // namespace rkd
