#include "rkd/clustering.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rkd/errors.hpp"
#include "rkd/spectral_rkd.hpp"

namespace rkd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kVerdictSlack = 1e-9;

Verdict compare(double measured, double bound, std::string note = {}) {
  Verdict v;
  v.measured = measured;
  v.bound = bound;
  v.note = std::move(note);
  v.status = measured <= bound + kVerdictSlack ? VerdictStatus::kPass : VerdictStatus::kFail;
  return v;
}

Verdict not_applicable(std::string why, double measured = 0.0) {
  Verdict v;
  v.status = VerdictStatus::kNotApplicable;
  v.measured = measured;
  v.bound = std::nan("");
  v.note = std::move(why);
  return v;
}

}  // namespace

std::vector<int> predict_labels(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;
    out[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict_labels_random_ties(const Eigen::MatrixXd& scores, std::mt19937_64& rng, double tol) {
  std::vector<int> out(static_cast<size_t>(scores.rows()));
  std::vector<int> tied;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    const double cut = top - tol * std::max(1.0, std::abs(top));
    tied.clear();
    for (Eigen::Index k = 0; k < scores.cols(); ++k)
      if (scores(i, k) >= cut) tied.push_back(static_cast<int>(k));
    std::uniform_int_distribution<size_t> pick(0, tied.size() - 1);
    out[static_cast<size_t>(i)] = tied.size() == 1 ? tied[0] : tied[pick(rng)];
  }
  return out;
}

MajorityLabeling majority_label(const std::vector<int>& predicted, const PopulationGraph& g) {
  if (static_cast<int>(predicted.size()) != g.size()) throw DomainError("need one prediction per vertex");
  int clusters = 0;
  for (int c : predicted) {
    if (c < 0) throw DomainError("negative cluster id");
    clusters = std::max(clusters, c + 1);
  }
  const int k = g.num_classes();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(clusters, k);
  for (int i = 0; i < g.size(); ++i) mass(predicted[i], g.labels()[i]) += g.degrees()(i);

  MajorityLabeling m;
  m.predicted = predicted;
  std::vector<int> cluster_label(static_cast<size_t>(clusters), 0);
  for (int c = 0; c < clusters; ++c) {
    int best = 0;
    for (int y = 1; y < k; ++y)
      if (mass(c, y) > mass(c, best)) best = y;
    cluster_label[c] = best;
    for (int y = 0; y < k; ++y)
      if (y != best && mass(c, best) > 0 && std::abs(mass(c, y) - mass(c, best)) <= 1e-15 * mass(c, best)) {
        m.tied_clusters.push_back(c);
        break;
      }
  }
  m.label.resize(predicted.size());
  m.minority.assign(predicted.size(), 0);
  for (int i = 0; i < g.size(); ++i) {
    m.label[i] = cluster_label[predicted[i]];
    if (m.label[i] != g.labels()[i]) {
      m.minority[i] = 1;
      m.minority_mass += g.degrees()(i);
    }
  }
  return m;
}

MajorityLabeling majority_label(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  return majority_label(predict_labels(scores), g);
}

bool minority_at_most_half(const MajorityLabeling& m, const PopulationGraph& g) {
  const Eigen::VectorXd total = g.class_masses();
  Eigen::VectorXd minority = Eigen::VectorXd::Zero(g.num_classes());
  for (int i = 0; i < g.size(); ++i)
    if (m.minority[i]) minority(g.labels()[i]) += g.degrees()(i);
  for (int k = 0; k < g.num_classes(); ++k)
    if (minority(k) > total(k) / 2 + 1e-15) return false;
  return true;
}

double SkeletonReport::margin_factor() const {
  if (std::isinf(gamma)) return 1.0;
  return std::max(beta * beta / (gamma * gamma), 1.0);
}

SkeletonReport skeleton_and_margin(const Eigen::MatrixXd& scores, const MajorityLabeling& m,
                                   const PopulationGraph& g) {
  const int k = g.num_classes();
  if (scores.cols() != k) throw DomainError("skeleton analysis needs K score columns");
  SkeletonReport r;
  r.applicable = minority_at_most_half(m, g);
  if (!r.applicable) return r;

  r.skeleton.assign(static_cast<size_t>(k), -1);
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < g.size(); ++i)
      if (!m.minority[i] && (r.skeleton[c] < 0 || scores(i, c) > scores(r.skeleton[c], c))) r.skeleton[c] = i;

  r.skeleton_ok = true;
  Eigen::MatrixXd fs(k, k);
  for (int c = 0; c < k; ++c) {
    r.skeleton_ok = r.skeleton_ok && m.predicted[r.skeleton[c]] == c;
    fs.row(c) = scores.row(r.skeleton[c]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fs);
  r.beta = svd.singularValues()(0);
  r.sigma_min = svd.singularValues()(k - 1);
  r.rank_ok = r.sigma_min > 1e-10 * std::max(1.0, r.beta);

  r.gammas.assign(static_cast<size_t>(k), kInf);
  for (int c = 0; c < k; ++c) {
    double competitor = -kInf;
    for (int i = 0; i < g.size(); ++i)
      if (m.minority[i] && m.predicted[i] != c) competitor = std::max(competitor, scores(i, c));
    if (competitor > -kInf) r.gammas[c] = scores(r.skeleton[c], c) - competitor;
  }
  r.gamma = *std::min_element(r.gammas.begin(), r.gammas.end());
  return r;
}

SkeletonReport skeleton_and_margin(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  return skeleton_and_margin(scores, majority_label(scores, g), g);
}

std::string status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::kPass: return "pass";
    case VerdictStatus::kFail: return "fail";
    case VerdictStatus::kNotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

namespace {

std::string skeleton_failure(const SkeletonReport& s) {
  if (!s.applicable) return "minority mass exceeds half of some class";
  if (!s.skeleton_ok) return "skeleton vertex predicted outside its class";
  if (!s.rank_ok) return "skeleton predictions are rank deficient";
  return "non-positive margin";
}

AuditReport base_report(const PopulationGraph& g, const SpectralDecomposition& spec) {
  AuditReport r;
  r.alpha = inter_class_fraction(g);
  r.num_classes = g.num_classes();
  r.lambdas.assign(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
  return r;
}

double label_residual(const Eigen::MatrixXd& scores, const PopulationGraph& g, bool* rank_deficient) {
  const Eigen::VectorXd s = g.degrees().cwiseSqrt();
  const Eigen::MatrixXd f = s.asDiagonal() * scores;
  const Eigen::MatrixXd y = s.asDiagonal() * g.one_hot();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(f);
  cod.setThreshold(1e-12);
  if (rank_deficient) *rank_deficient = cod.rank() < f.cols();
  return (y - f * cod.solve(y)).squaredNorm();
}

}  // namespace

AuditReport theorem1_check(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g,
                           const SpectralDecomposition& spec) {
  AuditReport r = base_report(g, spec);
  const int k = g.num_classes();
  r.family_size = static_cast<int>(family.size());
  double beta = 0.0, gamma = kInf;
  for (size_t idx = 0; idx < family.size(); ++idx) {
    const auto m = majority_label(family[idx], g);
    const auto s = skeleton_and_margin(family[idx], m, g);
    if (!s.satisfied()) {
      r.skipped.push_back("member " + std::to_string(idx) + ": " + skeleton_failure(s));
      continue;
    }
    ++r.audited;
    r.mu = std::max(r.mu, m.minority_mass);
    beta = std::max(beta, s.beta);
    gamma = std::min(gamma, s.gamma);
  }
  r.beta = beta;
  r.gamma = gamma;
  if (k >= g.size()) {
    r.verdicts["theorem1"] = not_applicable("K must be smaller than |X|", r.mu);
    return r;
  }
  const double gap = spec.eigenvalues(k);
  if (!(gap > 1e-12)) {
    r.bound_thm1 = std::nan("");
    r.verdicts["theorem1"] = not_applicable("bound undefined: lambda_{K+1} <= 1e-12", r.mu);
    return r;
  }
  if (r.audited == 0) {
    r.bound_thm1 = std::nan("");
    r.verdicts["theorem1"] = not_applicable("no family member satisfies the skeleton/margin assumption");
    return r;
  }
  const double factor = std::isinf(gamma) ? 1.0 : std::max(beta * beta / (gamma * gamma), 1.0);
  r.bound_thm1 = 2.0 * factor * r.alpha / gap;
  r.verdicts["theorem1"] = compare(r.mu, r.bound_thm1, "finite family of " + std::to_string(r.family_size) +
                                                           " predictors, " + std::to_string(r.audited) + " audited");
  return r;
}

AuditReport theorem1_check(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g) {
  return theorem1_check(family, g, spectral_decompose(g));
}

AuditReport theorem4_check(const Eigen::MatrixXd& scores, const PopulationGraph& g, double delta, int k0) {
  const auto spec = spectral_decompose(g);
  AuditReport r = base_report(g, spec);
  const int k = g.num_classes();
  r.family_size = 1;
  r.delta = delta;
  r.k0 = k0;
  if (k >= g.size()) {
    r.verdicts["theorem4"] = not_applicable("K must be smaller than |X|");
    return r;
  }
  const auto m = majority_label(scores, g);
  const auto s = skeleton_and_margin(scores, m, g);
  r.mu = m.minority_mass;
  r.beta = s.beta;
  r.gamma = s.gamma;
  r.subspace_residual = label_residual(scores, g, nullptr);

  const auto sq = [&](int i) { return (1.0 - spec.eigenvalues(i - 1)) * (1.0 - spec.eigenvalues(i - 1)); };
  const double gap = k0 >= 1 && k0 <= k ? sq(k0) - sq(k) : 0.0;
  r.c_k0 = delta > 0 ? gap / delta : (gap > 0 ? kInf : 0.0);

  std::string why;
  const auto dual = spectral_lp_closed_form_dual(spec.eigenvalues, k, k0, delta, &why);
  if (!dual) {
    r.bound_thm4 = std::nan("");
    r.verdicts["theorem4"] = not_applicable("bound undefined: " + why, r.mu);
    return r;
  }
  if (!(spec.eigenvalues(k) > 1e-12)) {
    r.bound_thm4 = std::nan("");
    r.verdicts["theorem4"] = not_applicable("bound undefined: lambda_{K+1} <= 1e-12", r.mu);
    return r;
  }
  if (g.size() <= kMaxLpEigenvalues) {
    r.lp = lp_bound_oracle(spec.eigenvalues, k, k0, delta);
    r.verdicts["lp_weak_duality"] = compare(r.lp->primal, r.lp->dual, r.lp->solvers_agree ? "solvers agree" : "solvers disagree");
    if (!r.lp->solvers_agree) r.verdicts["lp_weak_duality"].status = VerdictStatus::kFail;
  }
  if (!s.satisfied()) {
    r.bound_thm4 = std::nan("");
    r.verdicts["theorem4"] = not_applicable(skeleton_failure(s), r.mu);
    return r;
  }
  r.bound_thm4 = 2.0 * s.margin_factor() * (r.alpha / spec.eigenvalues(k) + dual->closed_form);
  r.audited = 1;
  r.verdicts["theorem4"] = compare(r.mu, r.bound_thm4);
  return r;
}

Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  if (scores.rows() != g.size() || scores.cols() != g.num_classes())
    throw DomainError("scores must be |X| x K for alignment");
  const Eigen::VectorXd w = g.degrees();
  const Eigen::MatrixXd cross = scores.transpose() * w.asDiagonal() * g.one_hot();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return scores * (svd.matrixU() * svd.matrixV().transpose());
}

LemmaC1Result lemma_c1_check(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  LemmaC1Result out;
  const auto m = majority_label(scores, g);
  const auto s = skeleton_and_margin(scores, m, g);
  out.lhs = m.minority_mass;
  out.residual = label_residual(scores, g, &out.rank_deficient);
  if (!s.satisfied()) return out;
  out.applicable = true;
  out.rhs = 2.0 * s.margin_factor() * out.residual;
  out.holds = out.lhs <= out.rhs + kVerdictSlack;
  return out;
}

double example_c1_margin_bound(double beta, double ce_loss) {
  if (!(beta > 0)) throw DomainError("beta must be positive");
  const long double b = beta;
  const long double lo = std::log1p(std::exp(-std::sqrt(2.0L) * b));
  const long double hi = std::log1p(std::exp(-b));
  const long double l = ce_loss;
  if (l < lo * (1 - 1e-15L) || l >= hi) throw DomainError("cross-entropy loss outside the admissible range");
  const long double a = -std::log(std::expm1(l));
  long double inner = 2 * b * b - a * a;
  // At the lower end of the range the two terms cancel; anything within
  // rounding of zero is the boundary itself.
  if (inner < 64 * std::numeric_limits<double>::epsilon() * 2 * b * b) inner = 0;
  return static_cast<double>(a - std::sqrt(inner));
}

Json audit_to_json(const AuditReport& r) {
  Json j;
  j["mu"] = double_to_json(r.mu);
  j["alpha"] = double_to_json(r.alpha);
  j["num_classes"] = r.num_classes;
  j["lambdas"] = r.lambdas;
  j["beta"] = double_to_json(r.beta);
  j["gamma"] = double_to_json(r.gamma);
  j["bound_thm1"] = double_to_json(r.bound_thm1);
  j["bound_thm4"] = double_to_json(r.bound_thm4);
  j["delta"] = double_to_json(r.delta);
  j["k0"] = r.k0;
  j["c_k0"] = double_to_json(r.c_k0);
  if (r.lp) {
    Json lp;
    lp["primal"] = r.lp->primal;
    lp["primal_check"] = r.lp->primal_check;
    lp["primal_enumerated"] = r.lp->primal_enumerated ? Json(*r.lp->primal_enumerated) : Json(nullptr);
    lp["dual"] = r.lp->dual;
    lp["dual_point_violation"] = r.lp->dual_point_violation;
    lp["solvers_agree"] = r.lp->solvers_agree;
    lp["weak_duality"] = r.lp->weak_duality;
    j["lp"] = std::move(lp);
  }
  j["subspace_residual"] = double_to_json(r.subspace_residual);
  j["family_size"] = r.family_size;
  j["audited"] = r.audited;
  j["skipped"] = r.skipped;
  Json verdicts = Json::object();
  for (const auto& [name, v] : r.verdicts) {
    Json e;
    e["status"] = status_name(v.status);
    e["measured"] = double_to_json(v.measured);
    e["bound"] = double_to_json(v.bound);
    e["note"] = v.note;
    verdicts[name] = std::move(e);
  }
  j["verdicts"] = std::move(verdicts);
  return j;
}

}  // namespace rkd
