#include "rkd/dac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rkd/errors.hpp"

namespace rkd {
namespace {

constexpr double kMassTol = 1e-12;

using Mask = std::uint64_t;

struct MaskedPopulation {
  int n = 0;
  int k = 0;
  std::vector<Mask> nb;
  std::vector<Mask> class_mask;
  std::vector<double> mass;
  std::vector<int> label;
  Eigen::VectorXd class_mass;

  MaskedPopulation(const AugmentationMap& aug, const PopulationGraph& g)
      : n(g.size()), k(g.num_classes()), nb(n, 0), class_mask(k, 0), mass(n), label(g.labels()),
        class_mass(g.class_masses()) {
    if (n > kMaxSampledVertices) throw SizeLimit("expansion checks are capped at 64 vertices");
    const auto neighbors = neighborhoods(aug);
    for (int i = 0; i < n; ++i) {
      for (int j : neighbors[i]) nb[i] |= Mask{1} << j;
      class_mask[label[i]] |= Mask{1} << i;
      mass[i] = g.degrees()(i);
    }
  }

  double mass_of(Mask s) const {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
      if (s >> i & 1) m += mass[i];
    return m;
  }

  Mask closure(Mask s) const {
    Mask out = 0;
    for (int i = 0; i < n; ++i)
      if (s >> i & 1) out |= nb[i];
    return out;
  }

  // P(S ∩ X_k) <= P(X_k) / 2 for every class.
  bool qualifies(Mask s) const {
    for (int c = 0; c < k; ++c)
      if (mass_of(s & class_mask[c]) > class_mass(c) / 2 + kMassTol) return false;
    return true;
  }

  std::vector<int> members(Mask s) const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
      if (s >> i & 1) out.push_back(i);
    return out;
  }
};

void visit_expansion(const MaskedPopulation& p, Mask s, ExpansionReport& r) {
  if (!p.qualifies(s)) return;
  ++r.checked_subsets;
  const Mask grown = p.closure(s);
  for (int c = 0; c < p.k; ++c) {
    const double inside = p.mass_of(s & p.class_mask[c]);
    if (!(inside > 0)) continue;
    const double ratio = p.mass_of(grown & p.class_mask[c]) / inside;
    if (ratio < r.c_hat) {
      r.c_hat = ratio;
      r.witness = p.members(s);
    }
    if ((grown & p.class_mask[c]) != p.class_mask[c]) r.c_hat_unsaturated = std::min(r.c_hat_unsaturated, ratio);
  }
}

template <typename Visit>
std::uint64_t for_each_subset(int n, Visit&& visit) {
  if (n > kMaxExhaustiveVertices) throw SizeLimit("exhaustive subset enumeration is capped at 18 vertices");
  const Mask end = Mask{1} << n;
  for (Mask s = 1; s < end; ++s) visit(s);
  return end - 1;
}

}  // namespace

AugmentationMap::AugmentationMap(std::vector<std::vector<int>> sets, const PopulationGraph& g, bool strict)
    : sets_(std::move(sets)), conforming_(strict) {
  if (static_cast<int>(sets_.size()) != g.size()) throw InvalidConfig("need one augmentation set per vertex");
  for (int x = 0; x < g.size(); ++x) {
    auto& a = sets_[x];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    for (int v : a) {
      if (v < 0 || v >= g.size()) throw InvalidConfig("augmentation refers to an unknown vertex");
      if (g.labels()[v] != g.labels()[x])
        throw InvalidConfig("augmentation of vertex " + std::to_string(x) + " leaves its class");
    }
    if (strict) {
      if (!std::binary_search(a.begin(), a.end(), x))
        throw InvalidConfig("vertex " + std::to_string(x) + " is missing from its own augmentation set");
      if (a.size() < 2) throw InvalidConfig("augmentation set of vertex " + std::to_string(x) + " is a singleton");
    }
  }
}

std::vector<std::vector<int>> neighborhoods(const AugmentationMap& aug) {
  const int n = aug.size();
  // Vertices grouped by the augmentation sets that contain them.
  std::vector<std::vector<int>> holders(n);
  for (int x = 0; x < n; ++x)
    for (int v : aug.sets()[x]) holders[v].push_back(x);
  std::vector<std::vector<int>> nb(n);
  for (int x = 0; x < n; ++x) {
    std::vector<char> seen(n, 0);
    for (int v : aug.sets()[x])
      for (int y : holders[v]) seen[y] = 1;
    for (int y = 0; y < n; ++y)
      if (seen[y]) nb[x].push_back(y);
  }
  return nb;
}

std::vector<int> neighborhood_of_set(const std::vector<std::vector<int>>& nb, const std::vector<int>& subset) {
  std::vector<char> seen(nb.size(), 0);
  for (int x : subset)
    for (int y : nb.at(x)) seen[y] = 1;
  std::vector<int> out;
  for (size_t y = 0; y < nb.size(); ++y)
    if (seen[y]) out.push_back(static_cast<int>(y));
  return out;
}

ExpansionReport estimate_c_expansion(const AugmentationMap& aug, const PopulationGraph& g, std::uint64_t samples,
                                     std::uint64_t seed) {
  const MaskedPopulation p(aug, g);
  ExpansionReport r;
  if (p.n <= kMaxExhaustiveVertices) {
    r.exhaustive = true;
    for_each_subset(p.n, [&](Mask s) { visit_expansion(p, s, r); });
    return r;
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < p.n; ++i) visit_expansion(p, Mask{1} << i, r);
  std::uniform_int_distribution<int> size_pick(1, p.n / 2);
  std::vector<int> order(p.n);
  for (int i = 0; i < p.n; ++i) order[i] = i;
  for (std::uint64_t t = 0; t < samples; ++t) {
    std::shuffle(order.begin(), order.end(), rng);
    const int size = size_pick(rng);
    Mask s = 0;
    for (int i = 0; i < size; ++i) s |= Mask{1} << order[i];
    visit_expansion(p, s, r);
  }
  return r;
}

double dac_error(const std::vector<int>& predicted, const AugmentationMap& aug, const PopulationGraph& g) {
  if (static_cast<int>(predicted.size()) != g.size() || aug.size() != g.size())
    throw DomainError("predictions and augmentations must cover the population");
  double nu = 0.0;
  for (int x = 0; x < g.size(); ++x)
    for (int v : aug.sets()[x])
      if (predicted[v] != predicted[x]) {
        nu += g.degrees()(x);
        break;
      }
  return nu;
}

Theorem5Result theorem5_check(const std::vector<std::vector<int>>& family, const AugmentationMap& aug,
                              const PopulationGraph& g, const ExpansionReport& expansion) {
  Theorem5Result r;
  r.c_hat = expansion.c_hat;
  for (size_t i = 0; i < family.size(); ++i) {
    const auto m = majority_label(family[i], g);
    if (!minority_at_most_half(m, g)) {
      r.skipped.push_back("member " + std::to_string(i) + ": minority mass exceeds half of some class");
      continue;
    }
    ++r.audited;
    r.mu = std::max(r.mu, m.minority_mass);
    r.nu = std::max(r.nu, dac_error(family[i], aug, g));
  }
  r.verdict.measured = r.mu;
  if (!expansion.exhaustive) {
    r.bound = std::nan("");
    r.verdict.note = "expansion constant from sampled subsets; bound not certified";
    return r;
  }
  if (!(r.c_hat > 1.0)) {
    r.bound = std::nan("");
    r.verdict.note = "bound undefined: c_hat <= 1";
    return r;
  }
  if (r.audited == 0) {
    r.bound = std::nan("");
    r.verdict.note = "no family member meets the minority-at-most-half condition";
    return r;
  }
  r.bound = std::max(2.0 / (r.c_hat - 1.0), 2.0) * r.nu;
  r.verdict.bound = r.bound;
  r.verdict.status = r.mu <= r.bound + 1e-9 ? VerdictStatus::kPass : VerdictStatus::kFail;
  return r;
}

ConstantExpansionResult constant_expansion_check(const AugmentationMap& aug, const PopulationGraph& g, double q,
                                                 double xi) {
  const MaskedPopulation p(aug, g);
  ConstantExpansionResult r;
  for_each_subset(p.n, [&](Mask s) {
    if (!r.holds) return;
    const double ps = p.mass_of(s);
    if (ps < q - kMassTol || !p.qualifies(s)) return;
    ++r.checked_subsets;
    const double grown = p.mass_of(p.closure(s));
    if (!(grown > std::min(ps, xi) + ps + kMassTol)) {
      r.holds = false;
      r.violating_subset = p.members(s);
    }
  });
  return r;
}

std::vector<ExpansionProbe> constant_expansion_probes(const AugmentationMap& aug, const PopulationGraph& g,
                                                      double c_hat) {
  std::vector<ExpansionProbe> out;
  if (!(c_hat > 1.0)) return out;
  for (double xi : {0.05, 0.1, 0.2}) {
    ExpansionProbe probe{xi, xi / (c_hat - 1.0), false};
    probe.holds = constant_expansion_check(aug, g, probe.q, xi).holds;
    out.push_back(probe);
  }
  return out;
}

Eigen::VectorXd perturbed_forward(const StudentModel& model, const Eigen::VectorXd& x,
                                  const std::vector<Eigen::VectorXd>& delta) {
  const auto add = [&](size_t layer, const Eigen::VectorXd& out, double scale) -> Eigen::VectorXd {
    if (layer < delta.size() && delta[layer].size() > 0) return out + delta[layer] * scale;
    return out;
  };
  switch (model.architecture) {
    case Architecture::kLinear:
      return add(0, model.weight(0) * x, x.norm());
    case Architecture::kMlp: {
      const Eigen::VectorXd z1 = add(0, model.weight(0) * x, x.norm());
      const Eigen::VectorXd h = add(1, Eigen::VectorXd(z1.array().tanh()), z1.norm());
      return add(2, model.weight(1) * h, h.norm());
    }
    case Architecture::kTable:
      break;
  }
  throw DomainError("all-layer margin needs a linear or one-hidden-layer model");
}

namespace {

int first_argmax(const Eigen::VectorXd& z) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < z.size(); ++i)
    if (z(i) > z(best)) best = i;
  return static_cast<int>(best);
}

std::vector<Eigen::VectorXd> unflatten(const Eigen::VectorXd& flat, const std::vector<int>& sizes) {
  std::vector<Eigen::VectorXd> out;
  Eigen::Index off = 0;
  for (int s : sizes) {
    out.push_back(flat.segment(off, s));
    off += s;
  }
  return out;
}

}  // namespace

MarginResult all_layer_margin(const StudentModel& model, const Eigen::VectorXd& x, int y,
                              const MarginSolverConfig& solver) {
  const int k = model.output_dim();
  if (y < 0 || y >= k) throw DomainError("class out of range");
  if (solver.restarts < 4) throw InvalidConfig("margin solver needs at least 4 restarts");
  const Eigen::VectorXd z = perturbed_forward(model, x, {});
  MarginResult r;

  const double zy = z(y);
  double competitor = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j)
    if (j != y) competitor = std::max(competitor, z(j));
  if (competitor >= zy) {
    r.exact = true;
    r.certified = true;
    return r;  // already not uniquely y
  }

  if (model.architecture == Architecture::kLinear) {
    // Raising z_j and lowering z_y by g/2 each closes a gap g at cost g/sqrt(2).
    const double xn = x.norm();
    if (xn == 0.0) {
      r.value = std::numeric_limits<double>::infinity();
      r.exact = true;
      return r;
    }
    int target = -1;
    for (int j = 0; j < k; ++j)
      if (j != y && (target < 0 || z(j) > z(target))) target = j;
    const double gap = (zy - z(target)) / xn;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(k);
    d(target) = gap / 2;
    d(y) = -gap / 2;
    r.value = gap / std::sqrt(2.0);
    r.exact = true;
    // At exactly the boundary the tie may resolve either way; the certificate
    // nudges just past it.
    Eigen::VectorXd nudged = d * (1 + 1e-9);
    r.certified = first_argmax(perturbed_forward(model, x, {nudged})) != y;
    r.delta = {nudged};
    return r;
  }

  const std::vector<int> sizes = {model.widths[1], model.widths[1], k};
  const int dim = model.widths[1] * 2 + k;
  const auto margin_at = [&](const Eigen::VectorXd& flat) {
    const Eigen::VectorXd out = perturbed_forward(model, x, unflatten(flat, sizes));
    double comp = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j)
      if (j != y) comp = std::max(comp, out(j));
    return out(y) - comp;
  };
  const auto flips = [&](const Eigen::VectorXd& flat) {
    return first_argmax(perturbed_forward(model, x, unflatten(flat, sizes))) != y;
  };

  std::mt19937_64 rng(solver.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  r.value = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < solver.restarts; ++restart) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    if (restart > 0)
      for (int i = 0; i < dim; ++i) d(i) = 0.05 * normal(rng);
    bool flipped = false;
    // Linearize the margin and jump to its zero, slightly overshooting.
    for (int it = 0; it < solver.max_iterations && !flipped; ++it) {
      const double m = margin_at(d);
      Eigen::VectorXd grad(dim);
      const double h = 1e-6;
      for (int i = 0; i < dim; ++i) {
        Eigen::VectorXd e = d;
        e(i) += h;
        const double up = margin_at(e);
        e(i) -= 2 * h;
        grad(i) = (up - margin_at(e)) / (2 * h);
      }
      const double gn = grad.squaredNorm();
      if (gn < 1e-300) break;
      d -= (m + 1e-9) / gn * grad * 1.02;
      flipped = flips(d);
    }
    if (!flipped) continue;
    // Shrink along the found direction to the flipping boundary.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (flips(d * mid) ? hi : lo) = mid;
    }
    const Eigen::VectorXd best = d * hi;
    if (best.norm() < r.value) {
      r.value = best.norm();
      r.delta = unflatten(best, sizes);
      r.certified = true;
    }
  }
  return r;
}

double robust_margin(const StudentModel& model, const Eigen::MatrixXd& inputs, int vertex, const AugmentationMap& aug,
                     const MarginSolverConfig& solver) {
  const int y = first_argmax(perturbed_forward(model, inputs.row(vertex).transpose(), {}));
  double best = std::numeric_limits<double>::infinity();
  for (int v : aug.sets().at(vertex))
    best = std::min(best, all_layer_margin(model, inputs.row(v).transpose(), y, solver).value);
  return best;
}

double prop1_bound(const std::vector<double>& weight_frobenius, int width, double tau, int n, double delta,
                   int depth) {
  if (!(tau > 0) || n < 1 || width < 1 || depth < 1 || !(delta > 0 && delta < 1))
    throw DomainError("invalid input to the margin generalization indicator");
  double first = 0.0;
  for (double f : weight_frobenius) {
    if (f < 0) throw DomainError("Frobenius norms must be nonnegative");
    first += std::sqrt(static_cast<double>(width)) * f;
  }
  first /= tau * std::sqrt(static_cast<double>(n));
  return first + std::sqrt((std::log(1.0 / delta) + depth * std::log(static_cast<double>(n))) / n);
}

Json augmentation_to_json(const AugmentationMap& aug) {
  Json j;
  j["sets"] = aug.sets();
  return j;
}

AugmentationMap augmentation_from_json(const Json& j, const PopulationGraph& g, bool strict) {
  try {
    return AugmentationMap(j.at("sets").get<std::vector<std::vector<int>>>(), g, strict);
  } catch (const Json::exception& e) {
    throw InvalidConfig(std::string("malformed augmentation JSON: ") + e.what());
  }
}

}  // namespace rkd
