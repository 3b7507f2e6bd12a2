#include "rkd/spectral_rkd.hpp"

#include <cmath>
#include <sstream>

#include "rkd/errors.hpp"

namespace rkd {
namespace {

void check_scores(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  if (scores.rows() != g.size()) throw DomainError("scores must have one row per vertex");
  if (!scores.allFinite()) throw DomainError("scores contain non-finite values");
}

}  // namespace

double population_rkd_loss(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  check_scores(scores, g);
  const Eigen::MatrixXd f = g.degrees().cwiseSqrt().asDiagonal() * scores;
  return (normalized_adjacency(g) - f * f.transpose()).squaredNorm();
}

double population_rkd_loss_expectation(const Eigen::MatrixXd& scores, const PopulationGraph& g) {
  check_scores(scores, g);
  const auto& w = g.weights();
  const auto& d = g.degrees();
  double total = 0.0;
  for (int a = 0; a < g.size(); ++a)
    for (int b = 0; b < g.size(); ++b) {
      const double k = w(a, b) / (d(a) * d(b));
      const double r = k - scores.row(a).dot(scores.row(b));
      total += d(a) * d(b) * r * r;
    }
  return total;
}

double empirical_rkd_loss(const Eigen::MatrixXd& scores, const std::vector<VertexPair>& pairs,
                          const Eigen::MatrixXd& kernel) {
  if (pairs.empty()) throw DomainError("empirical RKD loss needs at least one pair");
  double total = 0.0, mass = 0.0;
  for (const auto& p : pairs) {
    const double r = scores.row(p.a).dot(scores.row(p.b)) - kernel(p.a, p.b);
    total += p.weight * r * r;
    mass += p.weight;
  }
  return total / mass;
}

Eigen::MatrixXd empirical_rkd_gradient(const Eigen::MatrixXd& scores, const std::vector<VertexPair>& pairs,
                                       const Eigen::MatrixXd& kernel) {
  if (pairs.empty()) throw DomainError("empirical RKD loss needs at least one pair");
  double mass = 0.0;
  for (const auto& p : pairs) mass += p.weight;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
  for (const auto& p : pairs) {
    const double r = scores.row(p.a).dot(scores.row(p.b)) - kernel(p.a, p.b);
    const double c = 2.0 * p.weight * r / mass;
    grad.row(p.a) += c * scores.row(p.b);
    grad.row(p.b) += c * scores.row(p.a);
  }
  return grad;
}

std::vector<int> sample_population(const PopulationGraph& g, int count, std::mt19937_64& rng) {
  const auto& d = g.degrees();
  std::discrete_distribution<int> pick(d.data(), d.data() + d.size());
  std::vector<int> out(static_cast<size_t>(count));
  for (auto& v : out) v = pick(rng);
  return out;
}

std::vector<VertexPair> consecutive_pairs(const std::vector<int>& sample) {
  if (sample.size() < 2 || sample.size() % 2 != 0)
    throw DomainError("consecutive pairing needs a positive even sample size");
  std::vector<VertexPair> pairs;
  pairs.reserve(sample.size() / 2);
  for (size_t i = 0; i + 1 < sample.size(); i += 2) pairs.push_back({sample[i], sample[i + 1], 1.0});
  return pairs;
}

std::vector<VertexPair> sample_pairs(const PopulationGraph& g, int count, std::mt19937_64& rng) {
  return consecutive_pairs(sample_population(g, count, rng));
}

std::vector<VertexPair> exhaustive_weighted_pairs(const PopulationGraph& g) {
  std::vector<VertexPair> pairs;
  pairs.reserve(static_cast<size_t>(g.size()) * g.size());
  for (int a = 0; a < g.size(); ++a)
    for (int b = 0; b < g.size(); ++b) pairs.push_back({a, b, g.degrees()(a) * g.degrees()(b)});
  return pairs;
}

double eckart_young_optimum(const Eigen::VectorXd& eigenvalues, int k) {
  // Eigenvalues of W_bar are 1 - lambda, largest first. The best PSD rank-k
  // approximation keeps the positive part of the top k of them.
  double total = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double mu = 1.0 - eigenvalues(i);
    total += mu * mu;
    if (i < k && mu > 0.0) total -= mu * mu;
  }
  return total;
}

Eigen::MatrixXd exact_population_minimizer(const PopulationGraph& g, const SpectralDecomposition& spec, int k,
                                           const Eigen::MatrixXd& rotation) {
  if (k < 1 || k > g.size()) throw DomainError("need 1 <= K <= |X|");
  if (rotation.rows() != k || rotation.cols() != k) throw DomainError("rotation must be K x K");
  if ((rotation.transpose() * rotation - Eigen::MatrixXd::Identity(k, k)).norm() > 1e-8)
    throw DomainError("rotation is not orthogonal");
  Eigen::VectorXd scale(k);
  for (int i = 0; i < k; ++i) {
    const double mu = 1.0 - spec.eigenvalues(i);
    if (mu < -1e-10) {
      std::ostringstream msg;
      msg << "normalized adjacency is not PSD on the top-" << k << " eigenspace (1 - lambda_" << i + 1
          << " = " << mu << ")";
      throw NotPsd(msg.str());
    }
    scale(i) = std::sqrt(std::max(mu, 0.0));
  }
  return g.degrees().cwiseSqrt().cwiseInverse().asDiagonal() * spec.eigenvectors.leftCols(k) *
         scale.asDiagonal() * rotation;
}

Eigen::MatrixXd exact_population_minimizer(const PopulationGraph& g, int k, const Eigen::MatrixXd& rotation) {
  return exact_population_minimizer(g, spectral_decompose(g), k, rotation);
}

Eigen::MatrixXd random_orthogonal(int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

namespace {

double model_loss(const StudentModel& m, const Eigen::MatrixXd& inputs, const std::vector<VertexPair>& pairs,
                  const Eigen::MatrixXd& kernel) {
  return empirical_rkd_loss(forward(m, inputs), pairs, kernel);
}

Eigen::VectorXd model_gradient(const StudentModel& m, const Eigen::MatrixXd& inputs,
                               const std::vector<VertexPair>& pairs, const Eigen::MatrixXd& kernel) {
  return backward(m, inputs, empirical_rkd_gradient(forward(m, inputs), pairs, kernel));
}

}  // namespace

double gradient_check(const StudentModel& model, const Eigen::MatrixXd& inputs,
                      const std::vector<VertexPair>& pairs, const Eigen::MatrixXd& kernel, int coords,
                      std::uint64_t seed, double h) {
  const Eigen::VectorXd analytic = model_gradient(model, inputs, pairs, kernel);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, model.parameters.size() - 1);
  double worst = 0.0;
  StudentModel probe = model;
  for (int c = 0; c < coords; ++c) {
    const Eigen::Index i = pick(rng);
    const double orig = probe.parameters(i);
    probe.parameters(i) = orig + h;
    const double up = model_loss(probe, inputs, pairs, kernel);
    probe.parameters(i) = orig - h;
    const double down = model_loss(probe, inputs, pairs, kernel);
    probe.parameters(i) = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-5});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
  }
  return worst;
}

TrainResult train_student(const StudentModel& model, const Eigen::MatrixXd& inputs, const PopulationGraph& g,
                          const Eigen::MatrixXd& kernel, const OptimizerConfig& opt) {
  if (!(opt.learning_rate > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (opt.iterations < 0) throw InvalidConfig("iteration cap must be nonnegative");
  if (opt.momentum < 0.0 || opt.momentum >= 1.0) throw InvalidConfig("momentum must lie in [0, 1)");
  if (kernel.rows() != g.size() || kernel.cols() != g.size()) throw DomainError("kernel shape mismatch");

  std::mt19937_64 rng(opt.seed);
  const auto draw_pairs = [&] {
    return opt.pair_mode == PairMode::kExhaustive ? exhaustive_weighted_pairs(g)
                                                  : sample_pairs(g, opt.samples_per_step, rng);
  };

  TrainResult out{model, {}, {}};
  auto pairs = draw_pairs();
  out.report.gradient_check_error = gradient_check(model, inputs, pairs, kernel, 10, opt.seed ^ 0x9e3779b97f4a7c15ULL);
  if (!(out.report.gradient_check_error < 1e-4)) {
    std::ostringstream msg;
    msg << "analytic gradient disagrees with finite differences (relative error "
        << out.report.gradient_check_error << ")";
    throw NumericError(msg.str());
  }

  const auto record = [&](int it, double emp) {
    out.trace.push_back({it, emp, population_rkd_loss(forward(out.model, inputs), g)});
  };

  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(model.parameters.size());
  double emp = model_loss(out.model, inputs, pairs, kernel);
  record(0, emp);
  for (int it = 1; it <= opt.iterations; ++it) {
    if (it > 1 && opt.pair_mode == PairMode::kSampled && opt.resample_each_step) pairs = draw_pairs();
    const Eigen::VectorXd grad = model_gradient(out.model, inputs, pairs, kernel);
    velocity = opt.momentum * velocity - opt.learning_rate * grad;
    out.model.parameters += velocity;
    if (opt.output_bound) project_output_norm(out.model, inputs, *opt.output_bound);
    emp = model_loss(out.model, inputs, pairs, kernel);
    if (!std::isfinite(emp) || emp > opt.divergence_threshold) {
      record(it, emp);
      std::ostringstream msg;
      msg << "training diverged at iteration " << it << "; loss trace:";
      for (const auto& p : out.trace) msg << " " << p.iteration << ":" << p.empirical_loss;
      throw TrainingDiverged(msg.str());
    }
    if ((opt.log_every > 0 && it % opt.log_every == 0) || it == opt.iterations) record(it, emp);
  }

  const Eigen::MatrixXd scores = forward(out.model, inputs);
  const auto spec = spectral_decompose(g);
  out.report.population_loss = population_rkd_loss(scores, g);
  out.report.empirical_loss = emp;
  out.report.delta = out.report.population_loss - eckart_young_optimum(spec.eigenvalues, model.output_dim());
  out.report.output_bound = opt.output_bound ? *opt.output_bound : scores.rowwise().squaredNorm().maxCoeff();
  out.report.kernel_bound = kernel.maxCoeff();
  return out;
}

namespace {

double signed_sup(const std::vector<Eigen::MatrixXd>& family, const std::vector<int>& sample,
                  const Eigen::MatrixXd& signs) {
  double best = -HUGE_VAL;
  const double n = static_cast<double>(sample.size());
  for (const auto& f : family) {
    double s = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) s += signs.row(static_cast<Eigen::Index>(i)).dot(f.row(sample[i]));
    best = std::max(best, s / n);
  }
  return best;
}

void check_family(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g) {
  if (family.empty()) throw DomainError("function family is empty");
  for (const auto& f : family) {
    check_scores(f, g);
    if (f.cols() != family.front().cols()) throw DomainError("family members disagree on K");
  }
}

}  // namespace

RademacherEstimate estimate_rademacher(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g,
                                       int n, int trials, std::uint64_t seed) {
  check_family(family, g);
  if (trials < 1 || n < 1) throw DomainError("need N >= 1 and trials >= 1");
  const int k = static_cast<int>(family.front().cols());
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  double sum = 0.0, sum_sq = 0.0;
  Eigen::MatrixXd signs(n, k);
  for (int t = 0; t < trials; ++t) {
    const auto sample = sample_population(g, n, rng);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) signs(i, c) = coin(rng) ? 1.0 : -1.0;
    const double v = signed_sup(family, sample, signs);
    sum += v;
    sum_sq += v * v;
  }
  RademacherEstimate est;
  est.trials = trials;
  est.value = sum / trials;
  if (trials > 1) {
    const double var = std::max(0.0, (sum_sq - trials * est.value * est.value) / (trials - 1));
    est.standard_error = std::sqrt(var / trials);
  }
  return est;
}

double exact_rademacher(const std::vector<Eigen::MatrixXd>& family, const PopulationGraph& g, int n) {
  check_family(family, g);
  const int k = static_cast<int>(family.front().cols());
  const int size = g.size();
  const int sign_bits = n * k;
  if (n < 1 || sign_bits > 20 || std::pow(size, n) > 1e6) throw SizeLimit("exact Rademacher enumeration too large");
  std::vector<int> sample(static_cast<size_t>(n), 0);
  Eigen::MatrixXd signs(n, k);
  double total = 0.0;
  while (true) {
    double prob = 1.0;
    for (int v : sample) prob *= g.degrees()(v);
    double inner = 0.0;
    for (long mask = 0; mask < (1L << sign_bits); ++mask) {
      for (int b = 0; b < sign_bits; ++b) signs(b / k, b % k) = (mask >> b) & 1 ? 1.0 : -1.0;
      inner += signed_sup(family, sample, signs);
    }
    total += prob * inner / static_cast<double>(1L << sign_bits);
    int pos = 0;
    while (pos < n && ++sample[pos] == size) sample[pos++] = 0;
    if (pos == n) break;
  }
  return total;
}

double dnn_rademacher_bound(int depth, int k, double input_bound, double weight_bound, int n) {
  if (depth <= 0 || k <= 0 || !(input_bound > 0) || !(weight_bound > 0) || n <= 0)
    throw DomainError("all inputs to the network Rademacher bound must be positive");
  return (2.0 * std::sqrt(depth * std::log(2.0)) + std::sqrt(2.0)) * k * input_bound * weight_bound /
         std::sqrt(static_cast<double>(n));
}

double theorem2_gap_bound(double output_bound, double kernel_bound, double rademacher, int n, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (output_bound < 0 || kernel_bound < 0 || rademacher < 0 || n <= 0)
    throw DomainError("bounds must be nonnegative and N positive");
  const double s = output_bound + kernel_bound;
  return 16.0 * std::sqrt(2.0 * output_bound) * s * rademacher +
         2.0 * s * s * std::sqrt(std::log(4.0 / delta) / n);
}

std::string loss_trace_csv(const std::vector<LossTracePoint>& trace) {
  std::string out = "iteration,empirical_loss,population_loss\n";
  char buf[128];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", p.iteration, p.empirical_loss, p.population_loss);
    out += buf;
  }
  return out;
}

}  // namespace rkd
