#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/clustering.hpp"
#include "rkd/dac.hpp"
#include "rkd/graph.hpp"
#include "rkd/json_io.hpp"
#include "rkd/kernel.hpp"
#include "rkd/labels.hpp"
#include "rkd/spectral_rkd.hpp"
#include "rkd/student.hpp"

namespace rkd {

struct GraphConfig {
  std::string kind = "two_blob";  // two_blob | sbm | file
  int num_classes = 2;
  // sbm
  std::vector<int> sizes;
  double p_in = 0.9;
  double p_out = 0.05;
  // two_blob: anisotropic Gaussian blobs, RBF similarity graph
  int points_per_class = 30;
  double separation = 3.0;
  double spread_x = 1.0;
  double spread_y = 1.0;
  double bandwidth = 1.0;
  // file
  std::string path;
  std::uint64_t seed = 0;
};

struct AugmentationConfig {
  std::string kind = "knn";  // knn (same-class nearest neighbours) | file
  int neighbors = 3;
  std::string path;
};

struct KernelConfig {
  std::string kind = "shifted_cosine";  // shifted_cosine | rbf | graph_revealing
  int teacher_dim = 3;                  // spectral teacher embedding size
  double bandwidth = 1.0;
  std::string embedding_path;           // optional precomputed teacher features
};

struct StudentConfig {
  std::string architecture = "mlp";
  int hidden = 16;
  double init_scale = 1.0;
};

struct LabelConfig {
  std::string strategy = "uniform_per_class";  // uniform_per_class | iid | coreset
  int budget = 8;
  double epsilon = 0.1;
};

struct ExperimentConfig {
  GraphConfig graph;
  AugmentationConfig augmentation;
  KernelConfig kernel;
  StudentConfig student;
  LabelConfig labels;
  double lambda_dac = 1.0;
  double lambda_rkd = 0.001;
  double tau_dac = 0.95;
  double temperature = 1.0;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int iterations = 500;
  int unlabeled_samples = 64;
  bool recycle_labeled = true;
  std::uint64_t seed = 0;
  double gradient_tolerance = 1e-4;
  std::string output_dir;
};

Json config_to_json(const ExperimentConfig& cfg);
// Validates ranges and that every referenced file exists.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);
std::string config_hash(const ExperimentConfig& cfg);

struct CombinedLossWeights {
  double lambda_dac = 1.0;
  double lambda_rkd = 0.0;
  double tau_dac = 0.95;
  double temperature = 1.0;
};

struct CombinedLoss {
  double total = 0.0;
  double ce = 0.0;
  double dac = 0.0;
  double rkd = 0.0;
  int retained = 0;  // unlabeled points whose weak view cleared the threshold
  Eigen::MatrixXd grad_scores;  // d total / d scores
};

// CE over the labeled pairs + lambda_dac * confidence-filtered
// pseudo-label CE on strong views + lambda_rkd * empirical RKD loss.
// `strong[i]` is the strong view of weak view `unlabeled[i]`.
CombinedLoss combined_loss(const Eigen::MatrixXd& scores, const LabeledSet& labeled,
                           const std::vector<int>& unlabeled, const std::vector<int>& strong,
                           const std::vector<VertexPair>& pairs, const Eigen::MatrixXd& kernel,
                           const CombinedLossWeights& w);

struct Fixture {
  PopulationGraph graph;
  Eigen::MatrixXd inputs;
  AugmentationMap augmentation;
  Eigen::MatrixXd kernel;
  double kernel_bound = 0.0;
};

Fixture build_fixture(const ExperimentConfig& cfg);

struct SslTracePoint {
  int iteration = 0;
  double total = 0.0;
  double population_loss = 0.0;
  double ce = 0.0;
  double dac = 0.0;
  double rkd = 0.0;
  int retained = 0;
};

struct RunResult {
  std::vector<SslTracePoint> trace;
  double accuracy = 0.0;
  int evaluated = 0;
  LabeledSet labeled;
  AuditReport theorem1;
  AuditReport theorem4;
  Theorem5Result theorem5;
  ExpansionReport expansion;
  double label_energy = 0.0;  // sum_k y_k^T L y_k
  double alpha = 0.0;
  double wall_clock_seconds = 0.0;     // excluded from the JSON report
  std::string config_hash;
  StudentModel model;
  bool failed = false;
  std::string failure;
};

RunResult run_experiment(const ExperimentConfig& cfg);

Json run_result_to_json(const RunResult& r, const ExperimentConfig& cfg);
Json run_audit_to_json(const RunResult& r);
std::string ssl_trace_csv(const std::vector<SslTracePoint>& trace);

// Writes run_result.json, audit_report.json, losses.csv, labels.csv and
// checkpoint.json into `dir` (created if needed), plus timing.json.
void write_run_outputs(const RunResult& r, const ExperimentConfig& cfg, const std::string& dir);

struct AuditSuite {
  std::map<std::string, Verdict> verdicts;  // every suite entry, pass/fail/not_applicable
  Json report;
};

// Audits the configured fixture without the semi-supervised loop: Thm 1 on exact minimizers, Thm 4 and LP duality
// on an RKD-trained table student, Thm 5 and constant-expansion probes
// on the augmentation map.
AuditSuite run_audit_suite(const ExperimentConfig& cfg);

// Independent runs, one per seed, on `threads` workers. Results come back
// in seed order.
std::vector<RunResult> run_sweep(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, int threads);

}  // namespace rkd
