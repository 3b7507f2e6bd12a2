#include "rkd/labels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "rkd/clustering.hpp"
#include "rkd/errors.hpp"

namespace rkd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

std::discrete_distribution<int> population_sampler(const PopulationGraph& g) {
  return std::discrete_distribution<int>(g.degrees().data(), g.degrees().data() + g.size());
}

bool covers_all_classes(const LabeledSet& s, int k) {
  std::vector<char> seen(static_cast<size_t>(k), 0);
  for (const auto& p : s.pairs) seen[p.label] = 1;
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

// Majority clusters X_k^f: vertices whose majority label is k.
std::vector<std::vector<int>> majority_clusters(const std::vector<int>& predicted, const PopulationGraph& g) {
  const auto m = majority_label(predicted, g);
  std::vector<std::vector<int>> out(static_cast<size_t>(g.num_classes()));
  for (int i = 0; i < g.size(); ++i) out[m.label[i]].push_back(i);
  return out;
}

}  // namespace

LabeledSet label_vertices(const std::vector<int>& vertices, const PopulationGraph& g, std::string strategy,
                          std::uint64_t seed) {
  LabeledSet s{{}, std::move(strategy), seed};
  for (int v : vertices) {
    if (v < 0 || v >= g.size()) throw DomainError("labeled vertex out of range");
    s.pairs.push_back({v, g.labels()[v]});
  }
  return s;
}

LabeledSet iid_sample(const PopulationGraph& g, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("label budget must be positive");
  std::mt19937_64 rng(seed);
  auto pick = population_sampler(g);
  std::vector<int> v(static_cast<size_t>(n));
  for (auto& x : v) x = pick(rng);
  return label_vertices(v, g, "iid", seed);
}

LabeledSet uniform_per_class(const PopulationGraph& g, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw InvalidConfig("per-class budget must be positive");
  std::mt19937_64 rng(seed);
  std::vector<int> chosen;
  for (auto members : g.class_members()) {
    if (static_cast<int>(members.size()) < n_per_class)
      throw InvalidConfig("a class has fewer vertices than the per-class budget");
    std::shuffle(members.begin(), members.end(), rng);
    std::vector<int> take(members.begin(), members.begin() + n_per_class);
    std::sort(take.begin(), take.end());
    chosen.insert(chosen.end(), take.begin(), take.end());
  }
  return label_vertices(chosen, g, "uniform_per_class", seed);
}

NonDegeneracy check_non_degenerate(const std::vector<int>& predicted, const PopulationGraph& g) {
  NonDegeneracy r;
  const int k = g.num_classes();
  std::vector<char> hit(static_cast<size_t>(k), 0);
  for (int c : predicted)
    if (c >= 0 && c < k) hit[c] = 1;
  r.surjective = std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });

  const auto m = majority_label(predicted, g);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(k), minority = Eigen::VectorXd::Zero(k);
  std::vector<int> size(static_cast<size_t>(k), 0);
  for (int i = 0; i < g.size(); ++i) {
    total(m.label[i]) += g.degrees()(i);
    ++size[m.label[i]];
    if (m.minority[i]) minority(m.label[i]) += g.degrees()(i);
  }
  r.m0 = *std::min_element(size.begin(), size.end());
  r.c0 = kInf;
  for (int c = 0; c < k; ++c)
    if (minority(c) > 0) r.c0 = std::min(r.c0, total(c) / minority(c));
  r.ok = r.surjective && r.m0 >= 1 && r.c0 >= 2.0;
  return r;
}

int cluster_wise_draws(double c0, int k, double delta) {
  if (std::isinf(c0)) return 1;
  const double x = std::log(2.0 * k / delta) / std::log(c0);
  // Guard against log-ratio rounding just above an integer.
  return std::max(1, static_cast<int>(std::ceil(x - 1e-9)));
}

double cluster_wise_min_delta(double c0, int k, int m0) {
  if (std::isinf(c0)) return 0.0;
  return 2.0 * k / std::pow(c0, m0);
}

LabeledSet cluster_wise_sample(const std::vector<int>& predicted, const PopulationGraph& g, double delta,
                               std::uint64_t seed) {
  const auto nd = check_non_degenerate(predicted, g);
  if (!nd.ok) throw DomainError("cluster-wise sampling needs a non-degenerate predictor (c0 >= 2, surjective)");
  const int k = g.num_classes();
  const double delta_min = cluster_wise_min_delta(nd.c0, k, nd.m0);
  if (!(delta > delta_min && delta < 1.0))
    throw DomainError("delta must lie in (delta_min, 1) with delta_min = 2K/c0^m0 = " + std::to_string(delta_min));
  const int m = cluster_wise_draws(nd.c0, k, delta);
  std::mt19937_64 rng(seed);
  std::vector<int> chosen;
  for (const auto& cluster : majority_clusters(predicted, g)) {
    std::vector<double> w;
    for (int v : cluster) w.push_back(g.degrees()(v));
    std::discrete_distribution<size_t> pick(w.begin(), w.end());
    for (int t = 0; t < m; ++t) chosen.push_back(cluster[pick(rng)]);
  }
  return label_vertices(chosen, g, "cluster_wise", seed);
}

double facility_location_value(const std::vector<int>& selected, const Eigen::MatrixXd& kernel) {
  if (selected.empty()) throw DomainError("facility location needs a nonempty selection");
  double total = 0.0;
  for (Eigen::Index x = 0; x < kernel.cols(); ++x) {
    double best = -kInf;
    for (int s : selected) best = std::max(best, kernel(s, x));
    total += best;
  }
  return total;
}

namespace {

// Coverage state: cur(x') = max over selected of k(s, x'), 0 when empty.
double marginal_gain(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& cur, int v) {
  double gain = 0.0;
  for (Eigen::Index x = 0; x < kernel.cols(); ++x) gain += std::max(0.0, kernel(v, x) - cur(x));
  return gain;
}

void check_greedy_args(const Eigen::MatrixXd& kernel, int n) {
  if (kernel.rows() != kernel.cols()) throw DomainError("kernel must be square");
  if (n < 1 || n > kernel.rows()) throw DomainError("need 1 <= n <= |X|");
  if ((kernel.array() < 0).any()) throw DomainError("facility location needs a nonnegative kernel");
}

}  // namespace

std::vector<int> full_greedy(const Eigen::MatrixXd& kernel, int n) {
  check_greedy_args(kernel, n);
  const int size = static_cast<int>(kernel.rows());
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(size);
  std::vector<char> taken(static_cast<size_t>(size), 0);
  std::vector<int> out;
  for (int step = 0; step < n; ++step) {
    int best = -1;
    double best_gain = -1.0;
    for (int v = 0; v < size; ++v) {
      if (taken[v]) continue;
      const double g = marginal_gain(kernel, cur, v);
      if (g > best_gain) {
        best_gain = g;
        best = v;
      }
    }
    taken[best] = 1;
    out.push_back(best);
    cur = cur.cwiseMax(kernel.row(best).transpose());
  }
  return out;
}

std::vector<int> lazy_greedy(const Eigen::MatrixXd& kernel, int n) {
  check_greedy_args(kernel, n);
  const int size = static_cast<int>(kernel.rows());
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(size);
  // (gain upper bound, -index): larger gain first, then smaller index.
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry> heap;
  for (int v = 0; v < size; ++v) heap.push({marginal_gain(kernel, cur, v), -v});
  std::vector<int> out;
  while (static_cast<int>(out.size()) < n) {
    const Entry top = heap.top();
    heap.pop();
    const int v = -top.second;
    const Entry fresh{marginal_gain(kernel, cur, v), top.second};
    if (heap.empty() || !(fresh < heap.top())) {
      out.push_back(v);
      cur = cur.cwiseMax(kernel.row(v).transpose());
    } else {
      heap.push(fresh);
    }
  }
  return out;
}

int stochastic_greedy_sample_size(int ground, int n, double epsilon) {
  const double s = std::ceil(static_cast<double>(ground) / n * std::log(1.0 / epsilon));
  if (!(s < ground)) return ground;
  return std::max(1, static_cast<int>(s));
}

std::vector<int> stochastic_greedy(const Eigen::MatrixXd& kernel, int n, double epsilon, std::uint64_t seed) {
  check_greedy_args(kernel, n);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  const int size = static_cast<int>(kernel.rows());
  const int sample = stochastic_greedy_sample_size(size, n, epsilon);
  std::mt19937_64 rng(seed);
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(size);
  std::vector<int> remaining(static_cast<size_t>(size));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> out;
  std::vector<int> candidates;
  for (int step = 0; step < n; ++step) {
    candidates.clear();
    if (sample >= static_cast<int>(remaining.size())) {
      candidates = remaining;
    } else {
      // std::sample keeps the ascending order of `remaining`.
      std::sample(remaining.begin(), remaining.end(), std::back_inserter(candidates), sample, rng);
    }
    int best = -1;
    double best_gain = -1.0;
    for (int v : candidates) {
      const double g = marginal_gain(kernel, cur, v);
      if (g > best_gain) {
        best_gain = g;
        best = v;
      }
    }
    out.push_back(best);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
    cur = cur.cwiseMax(kernel.row(best).transpose());
  }
  return out;
}

ErmResult erm_zero_one(const std::vector<std::vector<int>>& family, const LabeledSet& labeled) {
  if (family.empty()) throw DomainError("ERM needs a nonempty family");
  if (labeled.pairs.empty()) throw DomainError("ERM needs at least one labeled pair");
  ErmResult r;
  r.empirical_risk = kInf;
  std::vector<double> risks;
  for (size_t i = 0; i < family.size(); ++i) {
    int wrong = 0;
    for (const auto& p : labeled.pairs) wrong += family[i].at(p.vertex) != p.label;
    const double risk = static_cast<double>(wrong) / labeled.pairs.size();
    risks.push_back(risk);
    if (risk < r.empirical_risk) {
      r.empirical_risk = risk;
      r.index = static_cast<int>(i);
    }
  }
  for (size_t i = 0; i < family.size(); ++i)
    if (static_cast<int>(i) != r.index && risks[i] == r.empirical_risk) r.tied.push_back(static_cast<int>(i));
  return r;
}

double population_zero_one(const std::vector<int>& predicted, const PopulationGraph& g) {
  double e = 0.0;
  for (int i = 0; i < g.size(); ++i)
    if (predicted.at(i) != g.labels()[i]) e += g.degrees()(i);
  return e;
}

double theorem3_bound(int k, int n, double mu, double delta) {
  if (n < k) throw InvalidConfig("label budget below the number of classes");
  if (!(delta > 0 && delta < 1)) throw DomainError("delta must lie in (0, 1)");
  return 4.0 * std::sqrt(2.0 * k * std::log(2.0 * n) / n + 2.0 * mu) + std::sqrt(2.0 * std::log(4.0 / delta) / n);
}

Theorem3Report theorem3_check(const std::vector<std::vector<int>>& family, const PopulationGraph& g, int n,
                              int trials, double delta, std::uint64_t seed) {
  if (family.empty()) throw DomainError("family is empty");
  if (trials < 1) throw InvalidConfig("need at least one trial");
  const int k = g.num_classes();
  Theorem3Report r;
  r.n = n;
  r.trials = trials;
  r.delta = delta;
  for (const auto& f : family) r.mu = std::max(r.mu, majority_label(f, g).minority_mass);
  r.bound = theorem3_bound(k, n, r.mu, delta);
  r.vacuous = r.bound > 1.0;

  std::vector<double> risk;
  for (const auto& f : family) risk.push_back(population_zero_one(f, g));
  const double best = *std::min_element(risk.begin(), risk.end());

  auto pick = population_sampler(g);
  double excess_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
    LabeledSet s;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000) throw NumericError("could not draw a labeled set covering every class");
      std::vector<int> v(static_cast<size_t>(n));
      for (auto& x : v) x = pick(rng);
      s = label_vertices(v, g, "iid", seed);
      if (covers_all_classes(s, k)) break;
      ++r.rejections;
    }
    const double excess = risk[erm_zero_one(family, s).index] - best;
    excess_sum += excess;
    if (excess > r.bound + 1e-12) ++r.failures;
  }
  r.failure_rate = static_cast<double>(r.failures) / trials;
  const double p = delta / 2;
  r.allowed_rate = p + 3.0 * std::sqrt(p * (1 - p) / trials);
  r.mean_excess = excess_sum / trials;
  r.pass = r.failure_rate <= r.allowed_rate;
  return r;
}

CoverageReport cluster_wise_coverage(const std::vector<int>& predicted, const PopulationGraph& g, double delta,
                                     int trials, std::uint64_t seed) {
  CoverageReport r;
  r.trials = trials;
  const auto nd = check_non_degenerate(predicted, g);
  r.draws_per_cluster = nd.ok ? cluster_wise_draws(nd.c0, g.num_classes(), delta) : 0;
  for (int t = 0; t < trials; ++t) {
    const auto s = cluster_wise_sample(predicted, g, delta, seed * 1000003ULL + static_cast<std::uint64_t>(t));
    r.covered += covers_all_classes(s, g.num_classes());
  }
  r.rate = static_cast<double>(r.covered) / trials;
  r.standard_error = std::sqrt(std::max(r.rate * (1 - r.rate), 1e-12) / trials);
  return r;
}

double coupon_collector_mean(const PopulationGraph& g, int trials, std::uint64_t seed) {
  auto pick = population_sampler(g);
  const int k = g.num_classes();
  long total = 0;
  for (int t = 0; t < trials; ++t) {
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
    std::vector<char> seen(static_cast<size_t>(k), 0);
    int distinct = 0;
    while (distinct < k) {
      ++total;
      const int y = g.labels()[pick(rng)];
      if (!seen[y]) {
        seen[y] = 1;
        ++distinct;
      }
    }
  }
  return static_cast<double>(total) / trials;
}

std::string labeled_set_csv(const LabeledSet& s, const PopulationGraph& g) {
  std::string out = "vertex_id,class,strategy,seed\n";
  for (const auto& p : s.pairs)
    out += std::to_string(g.vertices()[p.vertex]) + "," + std::to_string(p.label) + "," + s.strategy + "," +
           std::to_string(s.seed) + "\n";
  return out;
}

Json theorem3_to_json(const Theorem3Report& r) {
  Json j;
  j["n"] = r.n;
  j["trials"] = r.trials;
  j["delta"] = r.delta;
  j["mu"] = r.mu;
  j["bound"] = r.bound;
  j["vacuous"] = r.vacuous;
  j["failures"] = r.failures;
  j["rejections"] = r.rejections;
  j["failure_rate"] = r.failure_rate;
  j["allowed_rate"] = r.allowed_rate;
  j["mean_excess"] = r.mean_excess;
  j["pass"] = r.pass;
  return j;
}

}  // namespace rkd
