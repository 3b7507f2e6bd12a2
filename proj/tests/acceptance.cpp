// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and runtime limits follow the project's
// acceptance list.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "rkd/clustering.hpp"
#include "rkd/dac.hpp"
#include "rkd/errors.hpp"
#include "rkd/graph.hpp"
#include "rkd/kernel.hpp"
#include "rkd/labels.hpp"
#include "rkd/lp.hpp"
#include "rkd/spectral_rkd.hpp"
#include "rkd/ssl.hpp"
#include "rkd/student.hpp"

#ifndef RKD_FIXTURE_DIR
#define RKD_FIXTURE_DIR "fixtures"
#endif

using namespace rkd;
using namespace rkd::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  double worst = 0.0;
  for (int f = 0; f < 20; ++f) {
    const int n = 3 + f % 8;  // 3..10
    const int k = 1 + f % 3;
    const PopulationGraph g = f % 2 ? random_graph(n, std::min(k, n), 100 + f, f % 4 == 1)
                                    : build_sbm(2, {n / 2, n - n / 2}, 0.8, 0.3, 100 + f);
    std::mt19937_64 rng(f);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd scores(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) scores(i, j) = gauss(rng);
    const double population = population_rkd_loss(scores, g);
    const double oracle = oracle_pair_expectation(scores, g);
    const double weighted =
        empirical_rkd_loss(scores, exhaustive_weighted_pairs(g), kernel_matrix(GraphRevealingKernel{}, g).values);
    worst = std::max({worst, std::abs(population - oracle), std::abs(weighted - oracle)});
  }
  return {worst <= 1e-9, "20 fixtures, max |E[pair loss] - population loss| = " + num(worst)};
}

Outcome criterion2() {
  double worst = 0.0;
  int better = 0, fixtures = 0;
  for (int f = 0; f < 20; ++f) {
    const int n = 5 + f % 8;
    const int k = 2 + f % 2;
    const PopulationGraph g = rbf_graph(n, k, 200 + f);
    const Eigen::VectorXd lam = oracle_laplacian_eigenvalues(g);
    if ((1.0 - lam.array()).minCoeff() < -1e-10) continue;  // not PSD
    ++fixtures;
    double tail = 0.0;
    for (int i = k; i < n; ++i) tail += (1.0 - lam(i)) * (1.0 - lam(i));
    const Eigen::MatrixXd f0 = exact_population_minimizer(g, k, Eigen::MatrixXd::Identity(k, k));
    const double at_min = population_rkd_loss(f0, g);
    worst = std::max(worst, std::abs(at_min - tail));
    std::mt19937_64 rng(f);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < 1000; ++c) {
      Eigen::MatrixXd cand(n, k);
      const double scale = c % 2 ? 1e-2 * (1 + c % 7) : 1.0 + c % 5;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) cand(i, j) = gauss(rng) * (c % 2 ? scale : scale / std::sqrt(g.degrees()(i)) / n);
      if (c % 2) cand += f0;  // local perturbations around the minimizer
      if (population_rkd_loss(cand, g) < tail - 1e-10) ++better;
    }
  }
  return {fixtures > 0 && worst <= 1e-8 && better == 0,
          std::to_string(fixtures) + " PSD fixtures, max |loss - tail| = " + num(worst) + ", " +
              std::to_string(better) + " random candidates beat the optimum"};
}

Outcome criterion3() {
  double worst_literal = 0.0, worst_doubled = 0.0;
  int fixtures = 0;
  for (int f = 0; f < 60; ++f) {
    const int n = 4 + f % 9;
    const int k = 2 + f % 3;
    const PopulationGraph g = f % 3 == 0   ? random_graph(n, std::min(k, n), 300 + f, true)
                              : f % 3 == 1 ? build_sbm(2, {n / 2, n - n / 2}, 0.9, 0.2, 300 + f)
                                           : rbf_graph(n, std::min(k, n), 300 + f);
    ++fixtures;
    const double energy = laplacian_label_energy(g);
    const double alpha = oracle_alpha(g);
    worst_literal = std::max(worst_literal, std::abs(energy - alpha));
    worst_doubled = std::max(worst_doubled, std::abs(energy - 2.0 * alpha));
  }
  return {worst_literal <= 1e-10,
          std::to_string(fixtures) + " fixtures, max |sum y^T L y - alpha| = " + num(worst_literal) +
              " (as stated); max |sum y^T L y - 2 alpha| = " + num(worst_doubled)};
}

Outcome criterion4() {
  int met = 0, passed = 0, tried = 0;
  std::string first_failure;
  for (std::uint64_t seed = 0; met < 100 && tried < 1000; ++seed, ++tried) {
    std::mt19937_64 rng(seed * 7919 + 1);
    const int k = 2 + static_cast<int>(seed % 2);
    std::vector<int> sizes;
    for (int c = 0; c < k; ++c) sizes.push_back(4 + static_cast<int>(rng() % 5));
    const double p_in = 0.75 + 0.2 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double p_out = 0.02 + 0.1 * std::uniform_real_distribution<double>(0, 1)(rng);
    const PopulationGraph g = build_sbm(k, sizes, p_in, p_out, seed);
    const auto spec = spectral_decompose(g);
    std::vector<Eigen::MatrixXd> family;
    try {
      family.push_back(exact_population_minimizer(g, spec, k, Eigen::MatrixXd::Identity(k, k)));
      for (int r = 0; r < 6; ++r) family.push_back(exact_population_minimizer(g, spec, k, random_orthogonal(k, rng)));
      family.push_back(procrustes_align(family.front(), g));
    } catch (const NotPsd&) {
      continue;
    }
    const AuditReport a = theorem1_check(family, g, spec);
    const Verdict& v = a.verdicts.at("theorem1");
    if (v.status == VerdictStatus::kNotApplicable) continue;
    ++met;
    if (v.status == VerdictStatus::kPass) ++passed;
    else if (first_failure.empty())
      first_failure = ", first failure seed " + std::to_string(seed) + ": mu=" + num(v.measured) + " bound=" + num(v.bound);
  }
  return {met == 100 && passed == 100,
          std::to_string(passed) + "/" + std::to_string(met) + " fixtures meeting preconditions pass (" +
              std::to_string(tried) + " drawn)" + first_failure};
}

Outcome criterion5() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int spectra = 0, agree = 0, dual_ok = 0, enumerated = 0, draws = 0;
  double worst_gap = 0.0;
  while (spectra < 500 && draws < 20000) {
    ++draws;
    const int n = 3 + static_cast<int>(rng() % 10);  // <= 12: vertex enumeration joins in
    const int k = 1 + static_cast<int>(rng() % (n - 1));
    const int k0 = 1 + static_cast<int>(rng() % k);
    Eigen::VectorXd lam(n);
    lam(0) = 0.0;
    for (int i = 1; i < n; ++i) lam(i) = u(rng);  // PSD normalized adjacency
    std::sort(lam.data(), lam.data() + n);
    const double delta = 0.5 * u(rng) * u(rng);
    LpBoundResult r;
    try {
      r = lp_bound_oracle(lam, k, k0, delta);
    } catch (const DomainError&) {
      continue;  // precondition of the closed-form dual not met
    }
    ++spectra;
    bool solvers = std::abs(r.primal - r.primal_check) <= 1e-9;
    if (r.primal_enumerated) {
      ++enumerated;
      solvers = solvers && std::abs(r.primal - *r.primal_enumerated) <= 1e-9;
    }
    agree += solvers;
    dual_ok += r.primal <= r.dual + 1e-9;
    worst_gap = std::max(worst_gap, r.primal - r.dual);
  }

  int trained = 0, held = 0, attempts = 0;
  std::string failure;
  for (std::uint64_t seed = 0; trained < 20 && attempts < 200; ++seed, ++attempts) {
    const int k = 2 + static_cast<int>(seed % 2);
    std::vector<int> sizes(k, 5 + static_cast<int>(seed % 3));
    const PopulationGraph g = build_sbm(k, sizes, 0.9, 0.05, 900 + seed);
    const int n = g.size();
    const auto spec = spectral_decompose(g);
    OptimizerConfig opt;
    opt.learning_rate = 1.0;
    opt.momentum = 0.9;
    opt.iterations = 150 + 50 * static_cast<int>(seed % 4);
    opt.seed = seed;
    opt.pair_mode = PairMode::kExhaustive;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    TrainResult t;
    try {
      t = train_student(init_student(Architecture::kTable, {n, k}, seed), eye, g,
                        kernel_matrix(GraphRevealingKernel{}, g).values, opt);
    } catch (const Error&) {
      continue;
    }
    const Eigen::MatrixXd aligned = procrustes_align(forward(t.model, eye), g);
    const double delta = std::max(0.0, population_rkd_loss(aligned, g) - eckart_young_optimum(spec.eigenvalues, k));
    const AuditReport a = theorem4_check(aligned, g, delta, k);
    const Verdict& v = a.verdicts.at("theorem4");
    if (v.status == VerdictStatus::kNotApplicable) continue;
    ++trained;
    if (v.status == VerdictStatus::kPass) ++held;
    else if (failure.empty()) failure = ", first failure mu=" + num(v.measured) + " bound=" + num(v.bound);
  }
  const bool pass = spectra == 500 && agree == 500 && dual_ok == 500 && trained == 20 && held == 20;
  return {pass, std::to_string(spectra) + " spectra: solvers agree on " + std::to_string(agree) + " (" +
                    std::to_string(enumerated) + " with vertex enumeration), primal <= dual on " +
                    std::to_string(dual_ok) + " (max primal - dual " + num(worst_gap) + "); Thm 4 holds on " +
                    std::to_string(held) + "/" + std::to_string(trained) + " trained students" + failure};
}

Outcome criterion6() {
  const PopulationGraph g = disconnected_blocks({4, 4});
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd q(2, 2);
  q << s, s, -s, s;
  const Eigen::MatrixXd f = exact_population_minimizer(g, 2, q);
  double total = 0.0;
  const int seeds = 10000;
  for (int t = 0; t < seeds; ++t) {
    std::mt19937_64 rng(t);
    total += oracle_minority_mass(predict_labels_random_ties(f, rng), g);
  }
  const double mean = total / seeds;
  double worst = 0.0;
  for (double beta : {0.25, 0.5, 1.0, 2.0, 3.0, 5.0}) {
    const double l = std::log1p(std::exp(-std::sqrt(2.0) * beta));
    worst = std::max(worst, std::abs(example_c1_margin_bound(beta, l) - std::sqrt(2.0) * beta));
  }
  return {mean >= 0.25 - 0.02 && worst <= 1e-9,
          "mean minority mass " + num(mean) + " over 10^4 seeds; max |margin - sqrt(2) beta| = " + num(worst)};
}

// Thm 5 fixtures -------------------------------------------------------------

struct DacFixture {
  std::string name;
  PopulationGraph graph;
  std::vector<std::vector<int>> sets;
};

// Each class laid out as a path; A(x) = x and its path neighbours.
DacFixture path_fixture(int per_class, int k) {
  const int n = per_class * k;
  std::vector<int> sizes(k, per_class);
  DacFixture f{"path", disconnected_blocks(sizes), {}};
  f.sets.resize(n);
  for (int x = 0; x < n; ++x) {
    const int pos = x % per_class;
    f.sets[x].push_back(x);
    if (pos > 0) f.sets[x].push_back(x - 1);
    if (pos + 1 < per_class) f.sets[x].push_back(x + 1);
  }
  return f;
}

DacFixture random_fixture(int n, int k, int extra, std::uint64_t seed) {
  DacFixture f{"random", random_graph(n, k, seed), {}};
  const auto members = f.graph.class_members();
  std::mt19937_64 rng(seed);
  f.sets.resize(n);
  for (int x = 0; x < n; ++x) {
    std::vector<int> same;
    for (int y : members[f.graph.labels()[x]])
      if (y != x) same.push_back(y);
    std::shuffle(same.begin(), same.end(), rng);
    f.sets[x].push_back(x);
    for (int i = 0; i < std::min<int>(extra, static_cast<int>(same.size())); ++i) f.sets[x].push_back(same[i]);
  }
  return f;
}

std::vector<std::vector<int>> dac_family(const PopulationGraph& g, std::uint64_t seed, bool segments) {
  std::vector<std::vector<int>> fam;
  const auto members = g.class_members();
  const int k = g.num_classes();
  std::mt19937_64 rng(seed);
  fam.push_back(g.labels());
  for (int t = 0; t < 150; ++t) {
    std::vector<int> p = g.labels();
    const int c = static_cast<int>(rng() % k);
    const int to = (c + 1 + static_cast<int>(rng() % (k - 1))) % k;
    const auto& m = members[c];
    const int size = 1 + static_cast<int>(rng() % m.size());
    if (segments) {
      const int start = static_cast<int>(rng() % (m.size() - size + 1));
      for (int i = start; i < start + size; ++i) p[m[i]] = to;
    } else {
      std::vector<int> pick = m;
      std::shuffle(pick.begin(), pick.end(), rng);
      for (int i = 0; i < size; ++i) p[pick[i]] = to;
    }
    if (t % 3 == 0) {  // a second, independent disagreement in another class
      const int c2 = (c + 1) % k;
      const auto& m2 = members[c2];
      p[m2[rng() % m2.size()]] = c;
    }
    fam.push_back(p);
  }
  return fam;
}

Outcome criterion7() {
  std::vector<DacFixture> fixtures;
  fixtures.push_back(path_fixture(9, 2));  // designed near-tight
  fixtures.push_back(path_fixture(6, 3));
  fixtures.push_back(path_fixture(8, 2));
  for (int i = 0; i < 8; ++i)
    fixtures.push_back(random_fixture(10 + i, 2 + i % 2, 1 + i % 3, 700 + i));
  int exhaustive = 0, members = 0, violations = 0, probe_runs = 0, probe_fail = 0;
  double tight = 0.0;
  std::string first;
  for (size_t fi = 0; fi < fixtures.size(); ++fi) {
    const auto& fx = fixtures[fi];
    const AugmentationMap aug(fx.sets, fx.graph);
    const ExpansionReport e = estimate_c_expansion(aug, fx.graph);
    if (!e.exhaustive) continue;
    ++exhaustive;
    for (const auto& p : dac_family(fx.graph, 40 + fi, fx.name == "path")) {
      const Theorem5Result r = theorem5_check({p}, aug, fx.graph, e);
      if (r.verdict.status == VerdictStatus::kNotApplicable) continue;
      ++members;
      if (r.verdict.status == VerdictStatus::kFail) {
        ++violations;
        if (first.empty()) first = ", first violation on " + fx.name + " mu=" + num(r.mu) + " bound=" + num(r.bound);
      }
      if (fi == 0 && r.bound > 0) tight = std::max(tight, r.mu / r.bound);
    }
    for (const auto& probe : constant_expansion_probes(aug, fx.graph, e.c_hat)) {
      ++probe_runs;
      probe_fail += !probe.holds;
    }
  }
  return {exhaustive >= 10 && violations == 0 && probe_fail == 0 && probe_runs > 0,
          std::to_string(exhaustive) + " exhaustive fixtures, " + std::to_string(members) + " predictors, " +
              std::to_string(violations) + " violations; near-tight fixture reaches mu/bound = " + num(tight) +
              "; Lemma E.2 probes " + std::to_string(probe_runs - probe_fail) + "/" + std::to_string(probe_runs) +
              first};
}

Outcome criterion8() {
  const double delta = 0.1;
  int ok = 0;
  std::string detail;
  for (int f = 0; f < 5; ++f) {
    const int k = 2 + f % 2;
    const int per = 20 + 4 * f;
    std::vector<int> sizes(k, per);
    const PopulationGraph g = disconnected_blocks(sizes);
    // Each predicted cluster keeps its class but absorbs a few vertices of
    // the next class: c0 = cluster mass / minority mass.
    std::vector<int> pred = g.labels();
    const auto members = g.class_members();
    const int moved = 2 + f;
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < moved; ++i) pred[members[(c + 1) % k][i]] = c;
    const CoverageReport r = cluster_wise_coverage(pred, g, delta, 10000, 31 + f);
    const bool pass = r.rate >= 1.0 - delta - 3.0 * r.standard_error;
    ok += pass;
    detail += (f ? ", " : "") + num(r.rate) + "(m=" + std::to_string(r.draws_per_cluster) + ")";
  }
  double worst_rel = 0.0;
  for (int k : {2, 3, 5}) {
    const PopulationGraph g = disconnected_blocks(std::vector<int>(k, 6));
    double hk = 0.0;
    for (int i = 1; i <= k; ++i) hk += 1.0 / i;
    const double mean = coupon_collector_mean(g, 10000, 17 + k);
    worst_rel = std::max(worst_rel, std::abs(mean - k * hk) / (k * hk));
  }
  return {ok == 5 && worst_rel <= 0.10,
          "coverage at delta=0.1: " + detail + "; coupon-collector max relative error " + num(worst_rel)};
}

Outcome criterion9() {
  const double delta = 0.1;
  int passed = 0, informative = 0;
  std::string detail;
  // Perturbation modes: random relabelling of ~20% of vertices, or a single
  // flipped vertex per member (small mu, so a large n gives a non-vacuous
  // bound).
  struct Spec {
    int k, per_class, n;
    double flip;
    bool single;
  };
  const Spec specs[] = {{3, 10, 50, 0.0, false}, {2, 15, 200, 0.1, false}, {2, 100, 10000, 0.0, true}};
  for (int s = 0; s < 3; ++s) {
    const auto& sp = specs[s];
    const PopulationGraph g = random_graph(sp.k * sp.per_class, sp.k, 1200 + s);
    std::mt19937_64 rng(s);
    std::vector<std::vector<int>> fam;
    std::vector<int> base = g.labels();
    for (int x = 0; x < g.size(); ++x)
      if (std::uniform_real_distribution<double>(0, 1)(rng) < sp.flip) base[x] = (base[x] + 1) % sp.k;
    std::vector<int> perm(sp.k);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<int> p(g.size());
      for (int x = 0; x < g.size(); ++x) p[x] = perm[base[x]];
      fam.push_back(p);
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int t = 0; t < 10; ++t) {
      std::vector<int> p = fam.front();
      if (sp.single) {
        const int x = static_cast<int>(rng() % g.size());
        p[x] = (p[x] + 1) % sp.k;
      } else {
        for (int x = 0; x < g.size(); ++x)
          if (rng() % 5 == 0) p[x] = static_cast<int>(rng() % sp.k);
      }
      fam.push_back(p);
    }
    const Theorem3Report r = theorem3_check(fam, g, sp.n, 2000, delta, 77 + s);
    passed += r.pass;
    informative += !r.vacuous;
    detail += std::string(s ? "; " : "") + "n=" + std::to_string(sp.n) + " mu=" + num(r.mu) + " failures " +
              num(r.failure_rate) + " <= " + num(r.allowed_rate) + " (bound " + num(r.bound) +
              (r.vacuous ? ", vacuous)" : ")");
  }
  return {passed == 3 && informative >= 1, detail};
}

Outcome criterion10() {
  int fixtures = 0, below = 0, mismatch = 0;
  double worst_ratio = 1.0;
  for (int f = 0; f < 30; ++f) {
    const int n_points = 6 + f % 7;  // <= 12
    const PopulationGraph g = rbf_graph(n_points, 2, 1500 + f, 1.0, 1.0 + 0.3 * (f % 3));
    const Eigen::MatrixXd kern =
        kernel_matrix(ShiftedCosineKernel{spectral_teacher_embedding(g, 3)}, g).values;
    for (int n = 1; n <= 3; ++n) {
      ++fixtures;
      double opt = 0.0;
      std::vector<int> sel(n);
      std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
          double v = 0.0;
          for (int y = 0; y < n_points; ++y) {
            double best = -1e300;
            for (int x : sel) best = std::max(best, kern(x, y));
            v += best;
          }
          opt = std::max(opt, v);
          return;
        }
        for (int i = start; i < n_points; ++i) {
          sel[depth] = i;
          rec(i + 1, depth + 1);
        }
      };
      rec(0, 0);
      const double eps = 0.1;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const double v = facility_location_value(stochastic_greedy(kern, n, eps, seed), kern);
        worst_ratio = std::min(worst_ratio, v / opt);
        below += v < (1.0 - 1.0 / std::exp(1.0) - eps) * opt - 1e-12;
      }
      mismatch += stochastic_greedy(kern, n, 1e-12, 3) != full_greedy(kern, n);
    }
  }
  return {below == 0 && mismatch == 0,
          std::to_string(fixtures) + " (fixture, n) cases, worst value/OPT " + num(worst_ratio) + ", " +
              std::to_string(below) + " below (1-1/e-eps)OPT, " + std::to_string(mismatch) +
              " eps->0 mismatches with full greedy"};
}

// Central differences of a test-side loss against the library's analytic
// gradient.
Outcome criterion11() {
  double worst = 0.0;
  for (int f = 0; f < 5; ++f) {
    const int n = 8 + f;
    const int k = 2 + f % 2;
    const PopulationGraph g = rbf_graph(n, k, 1700 + f);
    const Eigen::MatrixXd kern = kernel_matrix(GraphRevealingKernel{}, g).values;
    std::mt19937_64 rng(f);
    const auto pairs = sample_pairs(g, 16, rng);
    Eigen::MatrixXd inputs(n, 3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i) inputs.row(i) << gauss(rng), gauss(rng), 1.0;
    const Architecture arch = f % 3 == 0 ? Architecture::kTable : f % 3 == 1 ? Architecture::kLinear : Architecture::kMlp;
    const std::vector<int> widths = arch == Architecture::kTable    ? std::vector<int>{n, k}
                                    : arch == Architecture::kLinear ? std::vector<int>{3, k}
                                                                    : std::vector<int>{3, 5, k};
    const StudentModel m = init_student(arch, widths, 50 + f);
    const auto loss = [&](const StudentModel& model) {
      const Eigen::MatrixXd s = forward(model, inputs);
      double total = 0.0, mass = 0.0;
      for (const auto& p : pairs) {
        const double r = s.row(p.a).dot(s.row(p.b)) - kern(p.a, p.b);
        total += p.weight * r * r;
        mass += p.weight;
      }
      return total / mass;
    };
    const Eigen::VectorXd grad =
        backward(m, inputs, empirical_rkd_gradient(forward(m, inputs), pairs, kern));
    std::uniform_int_distribution<Eigen::Index> pick(0, m.parameters.size() - 1);
    for (int c = 0; c < 10; ++c) {
      const Eigen::Index i = pick(rng);
      StudentModel plus = m, minus = m;
      plus.parameters(i) += 1e-5;
      minus.parameters(i) -= 1e-5;
      const double numeric = (loss(plus) - loss(minus)) / 2e-5;
      worst = std::max(worst, std::abs(numeric - grad(i)) / std::max({std::abs(numeric), std::abs(grad(i)), 1e-5}));
    }
  }
  return {worst < 1e-4, "10 coordinates x 5 fixtures (table/linear/mlp), max relative error " + num(worst)};
}

Outcome criterion12() {
  ExperimentConfig cfg = load_config(std::string(RKD_FIXTURE_DIR) + "/two_blob_ssl.json");
  const int k = cfg.graph.num_classes;
  if (cfg.labels.budget != 4 * k || cfg.labels.strategy != "uniform_per_class")
    return {false, "canonical fixture is not the n = 4K uniform-per-class regime"};
  double on = 0.0, off = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.seed = seed;
    cfg.lambda_rkd = 0.001;
    on += run_experiment(cfg).accuracy / 3.0;
    cfg.lambda_rkd = 0.0;
    off += run_experiment(cfg).accuracy / 3.0;
  }
  return {on >= off, "mean accuracy with lambda_RKD=0.001: " + num(on) + ", with lambda_RKD=0: " + num(off)};
}

Outcome criterion13() {
  ExperimentConfig cfg = load_config(std::string(RKD_FIXTURE_DIR) + "/two_blob_ssl.json");
  cfg.seed = 5;
  cfg.iterations = 100;
  const RunResult a = run_experiment(cfg), b = run_experiment(cfg);
  const bool runs = dump_json(run_result_to_json(a, cfg)) == dump_json(run_result_to_json(b, cfg)) &&
                    dump_json(run_audit_to_json(a)) == dump_json(run_audit_to_json(b)) &&
                    ssl_trace_csv(a.trace) == ssl_trace_csv(b.trace);
  ExperimentConfig audit_cfg = load_config(std::string(RKD_FIXTURE_DIR) + "/sbm2.json");
  const bool audits = dump_json(run_audit_suite(audit_cfg).report) == dump_json(run_audit_suite(audit_cfg).report);
  const auto sweep1 = run_sweep(cfg, {1, 2, 3}, 3), sweep2 = run_sweep(cfg, {1, 2, 3}, 1);
  bool sweeps = sweep1.size() == sweep2.size();
  for (size_t i = 0; sweeps && i < sweep1.size(); ++i) {
    ExperimentConfig c = cfg;
    c.seed = i + 1;
    sweeps = dump_json(run_result_to_json(sweep1[i], c)) == dump_json(run_result_to_json(sweep2[i], c));
  }
  return {runs && audits && sweeps, std::string("ssl reports ") + (runs ? "identical" : "differ") + ", audit reports " +
                                        (audits ? "identical" : "differ") + ", 3-thread vs 1-thread sweep " +
                                        (sweeps ? "identical" : "differ")};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, 1, criterion1},   {2, 10, criterion2},  {3, 1, criterion3},    {4, 30, criterion4},   {5, 60, criterion5},
      {6, 5, criterion6},   {7, 120, criterion7}, {8, 30, criterion8},   {9, 60, criterion9},   {10, 10, criterion10},
      {11, 5, criterion11}, {12, 300, criterion12}, {13, 60, criterion13},
  };
  int failed = 0;
  for (const auto& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < e.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d: %s [%.2fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", e.id, o.detail.c_str(), secs,
                e.limit_seconds, in_time ? "" : ", over limit");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
