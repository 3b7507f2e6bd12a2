#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/graph.hpp"
#include "rkd/json_io.hpp"
#include "rkd/lp.hpp"

namespace rkd {

// y_f: index of the first maximal score per row.
std::vector<int> predict_labels(const Eigen::MatrixXd& scores);
// y_f with scores within `tol` of the row maximum treated as tied and one
// of them chosen uniformly at random.
std::vector<int> predict_labels_random_ties(const Eigen::MatrixXd& scores, std::mt19937_64& rng, double tol = 1e-9);

struct MajorityLabeling {
  std::vector<int> predicted;   // y_f
  std::vector<int> label;       // majority class of the vertex's cluster
  std::vector<char> minority;   // label != ground truth
  double minority_mass = 0.0;   // P(M(f))
  std::vector<int> tied_clusters;  // clusters whose majority needed the tie rule
};

MajorityLabeling majority_label(const std::vector<int>& predicted, const PopulationGraph& g);
MajorityLabeling majority_label(const Eigen::MatrixXd& scores, const PopulationGraph& g);

// P(M(f) ∩ X_k) <= P(X_k) / 2 for every class k.
bool minority_at_most_half(const MajorityLabeling& m, const PopulationGraph& g);

struct SkeletonReport {
  bool applicable = false;  // minority-at-most-half precondition
  std::vector<int> skeleton;  // s_k
  bool skeleton_ok = false;   // y_f(s_k) = k for every k
  bool rank_ok = false;
  double beta = 0.0;          // sigma_1(f(S))
  double sigma_min = 0.0;     // sigma_K(f(S))
  std::vector<double> gammas;  // +inf when the competitor set is empty
  double gamma = 0.0;

  // Skeleton boundedness with a positive margin.
  bool satisfied() const { return applicable && skeleton_ok && rank_ok && gamma > 0.0; }
  // max(beta^2 / gamma^2, 1)
  double margin_factor() const;
};

SkeletonReport skeleton_and_margin(const Eigen::MatrixXd& scores, const MajorityLabeling& m,
                                   const PopulationGraph& g);
SkeletonReport skeleton_and_margin(const Eigen::MatrixXd& scores, const PopulationGraph& g);

enum class VerdictStatus { kPass, kFail, kNotApplicable };
std::string status_name(VerdictStatus s);

struct Verdict {
  VerdictStatus status = VerdictStatus::kNotApplicable;
  double measured = 0.0;
  double bound = 0.0;
  std::string note;
};

struct AuditReport {
  double mu = 0.0;
  double alpha = 0.0;
  std::vector<double> lambdas;
  int num_classes = 0;
  double beta = 0.0;
  double gamma = 0.0;
  double bound_thm1 = 0.0;
  double bound_thm4 = 0.0;
  double delta = 0.0;
  int k0 = 0;
  double c_k0 = 0.0;
  std::optional<LpBoundResult> lp;
  double subspace_residual = 0.0;  // ||P_F^perp D^{1/2} onehot||_F^2 of the audited predictor
  int family_size = 0;
  int audited = 0;  // members meeting the assumption
  std::vector<std::string> skipped;
  std::map<std::string, Verdict> verdicts;
};

// Audits the clustering bound for a finite family of population
// minimizers (e.g. exact minimizers under sampled rotations).
AuditReport theorem1_check(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g);
AuditReport theorem1_check(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g,
                           const SpectralDecomposition& spec);

// Audits the bound for a predictor whose population loss is within Delta
// of the optimum, using K0 in the spectral-gap term.
AuditReport theorem4_check(const Eigen::MatrixXd& scores, const PopulationGraph& g, double delta, int k0);

struct LemmaC1Result {
  bool applicable = false;
  double lhs = 0.0;  // P(M(f))
  double rhs = 0.0;  // 2 max(beta^2/gamma^2, 1) min_Z ||Y - F Z||_F^2
  double residual = 0.0;  // min_Z ||Y - F Z||_F^2
  bool rank_deficient = false;
  bool holds = false;
};

// Right-multiplies the scores by the orthogonal Q minimising
// ||D^{1/2}(F Q - Y)||_F. The RKD loss depends on F only through F F^T,
// so the aligned scores have the same loss.
Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& scores, const PopulationGraph& g);

LemmaC1Result lemma_c1_check(const Eigen::MatrixXd& scores, const PopulationGraph& g);

// Lower bound on the margin of a two-class rotated minimizer whose
// cross-entropy loss is `ce_loss`.
double example_c1_margin_bound(double beta, double ce_loss);

Json audit_to_json(const AuditReport& r);

}  // namespace rkd
