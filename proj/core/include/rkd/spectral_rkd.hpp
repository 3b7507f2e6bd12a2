#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/graph.hpp"
#include "rkd/student.hpp"

namespace rkd {

// Scores are |X| x K matrices whose row x is f(x).

struct VertexPair {
  int a = 0;
  int b = 0;
  double weight = 1.0;
};

// ||W_bar - D^{1/2} F F^T D^{1/2}||_F^2.
double population_rkd_loss(const Eigen::MatrixXd& scores, const PopulationGraph& g);
// The same quantity written as E_{x,x' ~ P}[(k(x,x') - f(x)^T f(x'))^2] with
// the graph-revealing kernel.
double population_rkd_loss_expectation(const Eigen::MatrixXd& scores, const PopulationGraph& g);

// Weighted mean of (f(a)^T f(b) - k(a,b))^2 over the pairs. With unit
// weights this is the plain empirical loss.
double empirical_rkd_loss(const Eigen::MatrixXd& scores, const std::vector<VertexPair>& pairs,
                          const Eigen::MatrixXd& kernel);
// dLoss/dScores for the loss above.
Eigen::MatrixXd empirical_rkd_gradient(const Eigen::MatrixXd& scores, const std::vector<VertexPair>& pairs,
                                       const Eigen::MatrixXd& kernel);

// Draws N points i.i.d. from P and pairs them as (x1,x2), (x3,x4), ...
std::vector<int> sample_population(const PopulationGraph& g, int count, std::mt19937_64& rng);
std::vector<VertexPair> consecutive_pairs(const std::vector<int>& sample);
std::vector<VertexPair> sample_pairs(const PopulationGraph& g, int count, std::mt19937_64& rng);
// Every ordered pair weighted by w_a w_b: the exact expectation of the
// empirical loss.
std::vector<VertexPair> exhaustive_weighted_pairs(const PopulationGraph& g);

// Smallest achievable population loss with K-dimensional outputs, from
// the spectrum alone.
double eckart_young_optimum(const Eigen::VectorXd& eigenvalues, int k);

// F = D^{-1/2} V_K diag(sqrt(1 - lambda_i)) Q.
Eigen::MatrixXd exact_population_minimizer(const PopulationGraph& g, int k, const Eigen::MatrixXd& rotation);
Eigen::MatrixXd exact_population_minimizer(const PopulationGraph& g, const SpectralDecomposition& spec, int k,
                                           const Eigen::MatrixXd& rotation);

// Haar-distributed orthogonal matrix (reflections included).
Eigen::MatrixXd random_orthogonal(int k, std::mt19937_64& rng);

enum class PairMode { kSampled, kExhaustive };

struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
  PairMode pair_mode = PairMode::kSampled;
  int samples_per_step = 64;        // N, even
  bool resample_each_step = true;   // otherwise one fixed draw
  std::optional<double> output_bound;  // B_f, enforced by projection
  int log_every = 0;                // 0: first and last iteration only
  double divergence_threshold = 1e6;
};

struct LossTracePoint {
  int iteration = 0;
  double empirical_loss = 0.0;
  double population_loss = 0.0;
};

struct RkdLossReport {
  double population_loss = 0.0;
  double empirical_loss = 0.0;
  double delta = 0.0;  // population loss minus the Eckart-Young optimum
  double output_bound = 0.0;
  double kernel_bound = 0.0;
  double gradient_check_error = 0.0;
};

struct TrainResult {
  StudentModel model;
  RkdLossReport report;
  std::vector<LossTracePoint> trace;
};

// Largest relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-5)
// over `coords` sampled parameter coordinates, central differences with
// step h.
double gradient_check(const StudentModel& model, const Eigen::MatrixXd& inputs,
                      const std::vector<VertexPair>& pairs, const Eigen::MatrixXd& kernel, int coords,
                      std::uint64_t seed, double h = 1e-5);

TrainResult train_student(const StudentModel& model, const Eigen::MatrixXd& inputs, const PopulationGraph& g,
                          const Eigen::MatrixXd& kernel, const OptimizerConfig& opt);

struct RademacherEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  int trials = 0;
};

RademacherEstimate estimate_rademacher(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g,
                                       int n, int trials, std::uint64_t seed);
// Exact value by enumerating every sample in X^N and every sign matrix.
// Only for tiny |X|, N and K.
double exact_rademacher(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g, int n);

double dnn_rademacher_bound(int depth, int k, double input_bound, double weight_bound, int n);
double theorem2_gap_bound(double output_bound, double kernel_bound, double rademacher, int n, double delta);

std::string loss_trace_csv(const std::vector<LossTracePoint>& trace);

}  // namespace rkd
