#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "rkd/dac.hpp"
#include "rkd/errors.hpp"
#include "rkd/student.hpp"

using namespace rkd;
using namespace rkd::testing;

namespace {

// Each class laid out as a path with A(x) = {x, next on the path}.
std::vector<std::vector<int>> chain_sets(const PopulationGraph& g) {
  std::vector<std::vector<int>> sets(g.size());
  for (const auto& members : g.class_members())
    for (size_t i = 0; i < members.size(); ++i)
      sets[members[i]] = {members[i], members[(i + 1) % members.size()]};
  return sets;
}

std::vector<std::vector<int>> whole_class_sets(const PopulationGraph& g) {
  std::vector<std::vector<int>> sets(g.size());
  const auto members = g.class_members();
  for (int x = 0; x < g.size(); ++x) sets[x] = members[g.labels()[x]];
  return sets;
}

}  // namespace

TEST(Augmentation, ValidationRejectsCrossClassAndSingletons) {
  const PopulationGraph g = disconnected_blocks({2, 2});
  EXPECT_THROW(AugmentationMap({{0, 2}, {1, 0}, {2, 3}, {3, 2}}, g), Error);
  EXPECT_THROW(AugmentationMap({{0}, {1, 0}, {2, 3}, {3, 2}}, g), Error);
  const AugmentationMap loose({{0}, {1, 0}, {2, 3}, {3, 2}}, g, false);
  EXPECT_FALSE(loose.conforming());
}

TEST(Neighborhoods, FourCycle) {
  const PopulationGraph g = disconnected_blocks({4});
  const auto nb = neighborhoods(AugmentationMap(chain_sets(g), g));
  EXPECT_EQ(nb[1], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(nb[0], (std::vector<int>{0, 1, 3}));
}

TEST(Neighborhoods, SymmetricReflexiveAndClassClosed) {
  for (int s = 0; s < 5; ++s) {
    const PopulationGraph g = random_graph(10, 2, s);
    const AugmentationMap aug(chain_sets(g), g);
    const auto nb = neighborhoods(aug);
    for (int x = 0; x < 10; ++x) {
      EXPECT_TRUE(std::binary_search(nb[x].begin(), nb[x].end(), x));
      for (int y : nb[x]) {
        EXPECT_TRUE(std::binary_search(nb[y].begin(), nb[y].end(), x));
        EXPECT_EQ(g.labels()[y], g.labels()[x]);
      }
    }
    const auto cls = g.class_members()[0];
    for (int y : neighborhood_of_set(nb, cls)) EXPECT_EQ(g.labels()[y], 0);
  }
}

TEST(Neighborhoods, DisjointSetsAreNotNeighbours) {
  const PopulationGraph g = disconnected_blocks({4});
  const auto nb = neighborhoods(AugmentationMap({{0, 1}, {1, 0}, {2, 3}, {3, 2}}, g));
  EXPECT_FALSE(std::binary_search(nb[0].begin(), nb[0].end(), 2));
}

TEST(Expansion, ChainGrowsEverySubset) {
  const PopulationGraph g = disconnected_blocks({6, 6});
  const ExpansionReport e = estimate_c_expansion(AugmentationMap(chain_sets(g), g), g);
  EXPECT_TRUE(e.exhaustive);
  EXPECT_GT(e.c_hat, 1.0);
}

TEST(Expansion, WholeClassAugmentationIsSaturated) {
  const PopulationGraph g = disconnected_blocks({4, 4});
  const ExpansionReport e = estimate_c_expansion(AugmentationMap(whole_class_sets(g), g), g);
  EXPECT_TRUE(e.exhaustive);
  // NB(S) covers the class, so the literal infimum is P(X_k) / max P(S ∩ X_k) = 2
  // and no qualifying set is left unsaturated.
  EXPECT_NEAR(e.c_hat, 2.0, 1e-12);
  EXPECT_EQ(e.c_hat_unsaturated, kExpansionSentinel);
}

TEST(Expansion, IsolatedSubCliquesFail) {
  const PopulationGraph g = disconnected_blocks({8});
  // Two sub-cliques {0..3} and {4..7} with augmentations inside each.
  std::vector<std::vector<int>> sets(8);
  for (int x = 0; x < 8; ++x) sets[x] = {x, x < 4 ? (x + 1) % 4 : 4 + (x - 3) % 4};
  const ExpansionReport e = estimate_c_expansion(AugmentationMap(sets, g), g);
  EXPECT_LE(e.c_hat, 1.0);
  EXPECT_FALSE(constant_expansion_check(AugmentationMap(sets, g), g, 0.05, 0.1).holds);
}

TEST(Expansion, MonotoneUnderEnlargedAugmentations) {
  const PopulationGraph g = random_graph(12, 2, 4);
  auto small = chain_sets(g);
  auto large = small;
  const auto members = g.class_members();
  for (int x = 0; x < 12; ++x) {
    const auto& m = members[g.labels()[x]];
    const int pos = static_cast<int>(std::find(m.begin(), m.end(), x) - m.begin());
    large[x].push_back(m[(pos + 2) % m.size()]);
  }
  const double a = estimate_c_expansion(AugmentationMap(small, g), g).c_hat;
  const double b = estimate_c_expansion(AugmentationMap(large, g), g).c_hat;
  EXPECT_GE(b, a - 1e-12);
}

TEST(Expansion, LargeGraphsAreSampled) {
  const PopulationGraph g = random_graph(24, 2, 1);
  const ExpansionReport e = estimate_c_expansion(AugmentationMap(chain_sets(g), g), g, 2000, 3);
  EXPECT_FALSE(e.exhaustive);
}

TEST(DacError, ConstantOnComponentsIsZero) {
  const PopulationGraph g = disconnected_blocks({3, 3});
  EXPECT_EQ(dac_error(g.labels(), AugmentationMap(chain_sets(g), g), g), 0.0);
}

TEST(DacError, CrossingVertexMass) {
  // Vertex 0 has mass 0.2; its augmentation set spans a predicted boundary.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 0) = 0.2;
  w(1, 1) = 0.4;
  w(2, 2) = 0.4;
  const PopulationGraph g(w, {0, 0, 0}, 1);
  const AugmentationMap aug({{0, 1}, {1, 2}, {2, 1}}, g);
  EXPECT_NEAR(dac_error({0, 1, 1}, aug, g), 0.2, 1e-15);
}

TEST(Theorem5, ConsistentFamilyHasZeroError) {
  const PopulationGraph g = disconnected_blocks({6, 6});
  const AugmentationMap aug(chain_sets(g), g);
  const ExpansionReport e = estimate_c_expansion(aug, g);
  const Theorem5Result r = theorem5_check({g.labels()}, aug, g, e);
  EXPECT_EQ(r.nu, 0.0);
  EXPECT_EQ(r.mu, 0.0);
  EXPECT_EQ(r.verdict.status, VerdictStatus::kPass);
}

TEST(Theorem5, OneInconsistentVertex) {
  const PopulationGraph g = disconnected_blocks({6, 6});
  const AugmentationMap aug(chain_sets(g), g);
  const ExpansionReport e = estimate_c_expansion(aug, g);
  std::vector<int> pred = g.labels();
  pred[2] = 1;
  const Theorem5Result r = theorem5_check({pred}, aug, g, e);
  EXPECT_GT(r.nu, 0.0);
  EXPECT_EQ(r.verdict.status, VerdictStatus::kPass);
  EXPECT_LE(r.mu, r.bound + 1e-9);
}

TEST(Theorem5, RandomThresholdedPredictors) {
  const PopulationGraph g = random_graph(14, 2, 9);
  const AugmentationMap aug(chain_sets(g), g);
  const ExpansionReport e = estimate_c_expansion(aug, g);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss(0, 1);
  std::vector<std::vector<int>> fam;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd w(3);
    w << gauss(rng), gauss(rng), gauss(rng);
    std::vector<int> p(14);
    for (int x = 0; x < 14; ++x) p[x] = w(0) * g.labels()[x] + w(1) * std::sin(x) + w(2) > 0;
    fam.push_back(p);
  }
  for (const auto& p : fam) EXPECT_NE(theorem5_check({p}, aug, g, e).verdict.status, VerdictStatus::kFail);
}

TEST(Theorem5, NoExpansionIsUndefined) {
  const PopulationGraph g = disconnected_blocks({8});
  std::vector<std::vector<int>> sets(8);
  for (int x = 0; x < 8; ++x) sets[x] = {x, x < 4 ? (x + 1) % 4 : 4 + (x - 3) % 4};
  const AugmentationMap aug(sets, g);
  const Theorem5Result r = theorem5_check({g.labels()}, aug, g, estimate_c_expansion(aug, g));
  EXPECT_EQ(r.verdict.status, VerdictStatus::kNotApplicable);
}

TEST(ConstantExpansion, FullClassAugmentationsHold) {
  const PopulationGraph g = disconnected_blocks({5, 5});
  const AugmentationMap aug(whole_class_sets(g), g);
  EXPECT_TRUE(constant_expansion_check(aug, g, 0.1, 0.2).holds);
}

TEST(ConstantExpansion, LemmaE2Probes) {
  const PopulationGraph g = disconnected_blocks({7, 7});
  const AugmentationMap aug(chain_sets(g), g);
  const auto probes = constant_expansion_probes(aug, g, estimate_c_expansion(aug, g).c_hat);
  EXPECT_EQ(probes.size(), 3u);
  for (const auto& p : probes) EXPECT_TRUE(p.holds) << "xi " << p.xi;
}

TEST(AllLayerMargin, MisclassifiedIsZero) {
  StudentModel m = init_student(Architecture::kLinear, {2, 2}, 0);
  m.parameters << 1, 0, 0, 1;
  EXPECT_EQ(all_layer_margin(m, Eigen::Vector2d(0.0, 1.0), 0).value, 0.0);
}

TEST(AllLayerMargin, LinearMatchesGridSearch) {
  StudentModel m = init_student(Architecture::kLinear, {2, 2}, 0);
  m.parameters << 2, 0.5, -1, 1;
  const Eigen::Vector2d x(1.0, 0.3);
  const MarginResult r = all_layer_margin(m, x, 0);
  ASSERT_TRUE(r.exact);
  // Brute force over output-space perturbation directions: the smallest
  // radius (in units of |x|) that ties the two logits.
  const Eigen::Vector2d logits = forward(m, x.transpose()).row(0);
  double best = 1e300;
  for (int t = 0; t < 20000; ++t) {
    const double a = 2 * M_PI * t / 20000;
    const double drift = std::cos(a) - std::sin(a);  // change of logit0 - logit1 per unit step
    if (drift >= 0) continue;
    best = std::min(best, (logits(0) - logits(1)) / -drift);
  }
  EXPECT_NEAR(r.value, best / x.norm(), 1e-4);
  EXPECT_TRUE(r.certified);
}

TEST(AllLayerMargin, LargerGapLargerMargin) {
  StudentModel m = init_student(Architecture::kLinear, {2, 2}, 0);
  m.parameters << 1, 0, 0, 0.5;
  StudentModel wide = m;
  wide.parameters << 2, 0, 0, 0.5;
  const Eigen::Vector2d x(1.0, 1.0);
  EXPECT_GT(all_layer_margin(wide, x, 0).value, all_layer_margin(m, x, 0).value);
}

TEST(AllLayerMargin, MlpPerturbationFlipsPrediction) {
  const StudentModel m = init_student(Architecture::kMlp, {3, 5, 2}, 4);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd xi = x.row(i).transpose();
    const Eigen::VectorXd logits = perturbed_forward(m, xi, {});
    int y = 0;
    logits.maxCoeff(&y);
    const MarginResult r = all_layer_margin(m, xi, y);
    EXPECT_FALSE(r.exact);
    if (r.certified) {
      const Eigen::VectorXd moved = perturbed_forward(m, xi, r.delta);
      EXPECT_GE(moved(1 - y), moved(y) - 1e-6);
    }
  }
}

TEST(RobustMargin, MinimumOverAugmentations) {
  StudentModel m = init_student(Architecture::kLinear, {2, 2}, 0);
  m.parameters << 1, 0, 0, 1;
  const PopulationGraph g = disconnected_blocks({3});
  Eigen::MatrixXd x(3, 2);
  x << 2, 0, 1.5, 0.5, 0.2, 1.0;  // the last point is predicted as class 1
  const AugmentationMap with_bad({{0, 1}, {1, 0}, {0, 2}}, g);
  EXPECT_EQ(robust_margin(m, x, 2, with_bad), 0.0);
  const AugmentationMap good({{0, 1}, {1, 0}, {2, 0}}, g);
  const double a = all_layer_margin(m, x.row(0).transpose(), 0).value;
  const double b = all_layer_margin(m, x.row(1).transpose(), 0).value;
  EXPECT_NEAR(robust_margin(m, x, 0, good), std::min(a, b), 1e-12);
}

TEST(Prop1, ScalingAndSubstitution) {
  const double base = prop1_bound({1, 1}, 4, 0.5, 100, 0.1, 2);
  const double first = 2 * 2.0 / (0.5 * 10);
  const double second = std::sqrt((std::log(10.0) + 2 * std::log(100.0)) / 100);
  EXPECT_NEAR(base, first + second, 1e-12);
  EXPECT_NEAR(prop1_bound({1, 1}, 4, 1.0, 100, 0.1, 2), first / 2 + second, 1e-12);
  EXPECT_THROW(prop1_bound({1}, 4, 0.0, 10, 0.1, 1), DomainError);
}
