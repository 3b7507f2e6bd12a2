#include "rkd/ssl.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "rkd/errors.hpp"
#include "rkd/spectral_rkd.hpp"

namespace rkd {
namespace {

// Independent random streams derived from the run seed.
enum Stream : std::uint64_t { kGraphStream = 1, kInitStream, kUnlabeledStream, kStrongStream, kAuditStream, kCheckStream };

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void reject_unknown(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidConfig(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw InvalidConfig("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      out = json_to_double(j.at(key));
    } else {
      out = j.at(key).get<T>();
    }
  } catch (const Json::exception& e) {
    throw InvalidConfig(std::string("bad value for '") + key + "': " + e.what());
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw InvalidConfig(what + " path is empty");
  if (!std::filesystem::exists(path)) throw InvalidConfig(what + " file does not exist: " + path);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

double log_softmax_at(const Eigen::VectorXd& z, int y) {
  const double m = z.maxCoeff();
  return z(y) - m - std::log((z.array() - m).exp().sum());
}

struct BlobData {
  Eigen::MatrixXd points;
  std::vector<int> labels;
};

// Class c sits at angle 2*pi*c/K on a circle of radius separation/2
// (for K = 2: at (0, -s/2) and (0, +s/2)), stretched along x.
BlobData two_blob_points(const GraphConfig& gc) {
  BlobData d;
  const int k = gc.num_classes;
  const int n = k * gc.points_per_class;
  d.points.resize(n, 2);
  d.labels.resize(n);
  std::mt19937_64 rng = stream_rng(gc.seed, kGraphStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < k; ++c) {
    const double angle = -M_PI / 2 + 2.0 * M_PI * c / k;
    const double cx = 0.5 * gc.separation * std::cos(angle);
    const double cy = 0.5 * gc.separation * std::sin(angle);
    for (int i = 0; i < gc.points_per_class; ++i) {
      const int v = c * gc.points_per_class + i;
      d.points(v, 0) = cx + gc.spread_x * gauss(rng);
      d.points(v, 1) = cy + gc.spread_y * gauss(rng);
      d.labels[v] = c;
    }
  }
  return d;
}

// A(x) = {x} plus its `k` nearest same-class vertices. Distances come from
// the points when there are any, otherwise from descending raw weight.
AugmentationMap knn_augmentation(const PopulationGraph& g, const Eigen::MatrixXd& points, int k) {
  const int n = g.size();
  std::vector<std::vector<int>> sets(n);
  const auto members = g.class_members();
  for (int x = 0; x < n; ++x) {
    std::vector<std::pair<double, int>> cand;
    for (int y : members[g.labels()[x]]) {
      if (y == x) continue;
      const double key = points.size() > 0 ? (points.row(x) - points.row(y)).squaredNorm() : -g.raw_weights()(x, y);
      cand.emplace_back(key, y);
    }
    std::sort(cand.begin(), cand.end());
    sets[x].push_back(x);
    for (int i = 0; i < std::min<int>(k, static_cast<int>(cand.size())); ++i) sets[x].push_back(cand[i].second);
  }
  return AugmentationMap(std::move(sets), g);
}

Eigen::MatrixXd with_constant_column(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd out(points.rows(), points.cols() + 1);
  out.leftCols(points.cols()) = points;
  out.col(points.cols()).setOnes();
  return out;
}

StudentModel initial_model(const ExperimentConfig& cfg, const Fixture& fx) {
  const Architecture a = parse_architecture(cfg.student.architecture);
  const int k = fx.graph.num_classes();
  std::vector<int> widths;
  switch (a) {
    case Architecture::kTable:
      widths = {fx.graph.size(), k};
      break;
    case Architecture::kLinear:
      widths = {static_cast<int>(fx.inputs.cols()), k};
      break;
    case Architecture::kMlp:
      widths = {static_cast<int>(fx.inputs.cols()), cfg.student.hidden, k};
      break;
  }
  std::mt19937_64 rng = stream_rng(cfg.seed, kInitStream);
  return init_student(a, widths, rng(), cfg.student.init_scale);
}

LabeledSet choose_labels(const ExperimentConfig& cfg, const Fixture& fx) {
  const auto& lc = cfg.labels;
  const int k = fx.graph.num_classes();
  if (lc.strategy == "uniform_per_class") return uniform_per_class(fx.graph, lc.budget / k, cfg.seed);
  if (lc.strategy == "iid") return iid_sample(fx.graph, lc.budget, cfg.seed);
  // coreset
  return label_vertices(stochastic_greedy(fx.kernel, lc.budget, lc.epsilon, cfg.seed), fx.graph, "coreset", cfg.seed);
}

std::vector<int> draw_unlabeled(const ExperimentConfig& cfg, const PopulationGraph& g, const LabeledSet& labeled) {
  std::mt19937_64 rng = stream_rng(cfg.seed, kUnlabeledStream);
  if (cfg.recycle_labeled) return sample_population(g, cfg.unlabeled_samples, rng);
  std::vector<double> mass(g.degrees().data(), g.degrees().data() + g.size());
  for (const auto& p : labeled.pairs) mass[p.vertex] = 0.0;
  if (std::accumulate(mass.begin(), mass.end(), 0.0) <= 0.0)
    throw DomainError("no unlabeled vertices left once labeled ones are excluded");
  std::discrete_distribution<int> pick(mass.begin(), mass.end());
  std::vector<int> out(cfg.unlabeled_samples);
  for (int& v : out) v = pick(rng);
  return out;
}

std::vector<int> draw_strong(const std::vector<int>& weak, const AugmentationMap& aug, std::mt19937_64& rng) {
  std::vector<int> strong(weak.size());
  for (size_t i = 0; i < weak.size(); ++i) {
    const auto& set = aug.sets()[weak[i]];
    std::vector<int> others;
    for (int v : set)
      if (v != weak[i]) others.push_back(v);
    if (others.empty()) {
      strong[i] = weak[i];
      continue;
    }
    std::uniform_int_distribution<size_t> pick(0, others.size() - 1);
    strong[i] = others[pick(rng)];
  }
  return strong;
}

CombinedLossWeights loss_weights(const ExperimentConfig& cfg) {
  return {cfg.lambda_dac, cfg.lambda_rkd, cfg.tau_dac, cfg.temperature};
}

double combined_gradient_check(const StudentModel& model, const Eigen::MatrixXd& inputs, const LabeledSet& labeled,
                               const std::vector<int>& weak, const std::vector<int>& strong,
                               const std::vector<VertexPair>& pairs, const Eigen::MatrixXd& kernel,
                               const CombinedLossWeights& w, std::uint64_t seed) {
  const auto eval = [&](const StudentModel& m) {
    return combined_loss(forward(m, inputs), labeled, weak, strong, pairs, kernel, w);
  };
  const auto base = eval(model);
  const Eigen::VectorXd grad = backward(model, inputs, base.grad_scores);
  std::mt19937_64 rng = stream_rng(seed, kCheckStream);
  std::uniform_int_distribution<Eigen::Index> pick(0, model.parameters.size() - 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Eigen::Index i = pick(rng);
    StudentModel plus = model, minus = model;
    plus.parameters(i) += h;
    minus.parameters(i) -= h;
    const double numeric = (eval(plus).total - eval(minus).total) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad(i)), 1e-5});
    worst = std::max(worst, std::abs(numeric - grad(i)) / denom);
  }
  return worst;
}

Verdict na(const std::string& why) {
  Verdict v;
  v.status = VerdictStatus::kNotApplicable;
  v.bound = std::nan("");
  v.note = why;
  return v;
}

void run_audits(const ExperimentConfig& cfg, const Fixture& fx, RunResult& r) {
  const PopulationGraph& g = fx.graph;
  const int k = g.num_classes();
  const Eigen::MatrixXd scores = forward(r.model, fx.inputs);
  r.label_energy = laplacian_label_energy(g);
  r.alpha = inter_class_fraction(g);

  SpectralDecomposition spec;
  try {
    spec = spectral_decompose(g);
  } catch (const Error& e) {
    r.theorem1.verdicts["theorem1"] = na(std::string("spectrum unavailable: ") + e.what());
    r.theorem4.verdicts["theorem4"] = na(std::string("spectrum unavailable: ") + e.what());
  }

  if (spec.eigenvalues.size() > 0) {
    try {
      std::mt19937_64 rng = stream_rng(cfg.seed, kAuditStream);
      std::vector<Eigen::MatrixXd> family;
      family.push_back(exact_population_minimizer(g, spec, k, Eigen::MatrixXd::Identity(k, k)));
      for (int i = 0; i < 4; ++i) family.push_back(exact_population_minimizer(g, spec, k, random_orthogonal(k, rng)));
      r.theorem1 = theorem1_check(family, g, spec);
    } catch (const Error& e) {
      r.theorem1.verdicts["theorem1"] = na(std::string("exact minimizer family unavailable: ") + e.what());
    }
    try {
      const double optimum = eckart_young_optimum(spec.eigenvalues, k);
      const double delta = std::max(0.0, population_rkd_loss(scores, g) - optimum);
      r.theorem4 = theorem4_check(scores, g, delta, k);
    } catch (const Error& e) {
      r.theorem4.verdicts["theorem4"] = na(e.what());
    }
  }

  if (g.size() <= kMaxSampledVertices) {
    r.expansion = estimate_c_expansion(fx.augmentation, g, 20000, cfg.seed);
    r.theorem5 = theorem5_check({predict_labels(scores)}, fx.augmentation, g, r.expansion);
  } else {
    r.theorem5.verdict = na("population too large for subset enumeration");
    r.theorem5.c_hat = std::nan("");
    r.theorem5.bound = std::nan("");
  }
}

Json verdict_json(const Verdict& v) {
  Json j = Json::object();
  j["status"] = status_name(v.status);
  j["measured"] = double_to_json(v.measured);
  j["bound"] = double_to_json(v.bound);
  j["note"] = v.note;
  return j;
}

Json theorem5_json(const Theorem5Result& t, const ExpansionReport& e) {
  Json j = Json::object();
  j["mu"] = double_to_json(t.mu);
  j["nu"] = double_to_json(t.nu);
  j["c_hat"] = double_to_json(t.c_hat);
  j["c_hat_unsaturated"] = double_to_json(e.c_hat_unsaturated);
  j["expansion_exhaustive"] = e.exhaustive;
  j["checked_subsets"] = e.checked_subsets;
  j["bound"] = double_to_json(t.bound);
  j["audited"] = t.audited;
  j["skipped"] = t.skipped;
  j["verdict"] = verdict_json(t.verdict);
  return j;
}

}  // namespace

Json config_to_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  const auto& gc = cfg.graph;
  Json graph = Json::object();
  graph["kind"] = gc.kind;
  graph["num_classes"] = gc.num_classes;
  graph["sizes"] = gc.sizes;
  graph["p_in"] = double_to_json(gc.p_in);
  graph["p_out"] = double_to_json(gc.p_out);
  graph["points_per_class"] = gc.points_per_class;
  graph["separation"] = double_to_json(gc.separation);
  graph["spread_x"] = double_to_json(gc.spread_x);
  graph["spread_y"] = double_to_json(gc.spread_y);
  graph["bandwidth"] = double_to_json(gc.bandwidth);
  graph["path"] = gc.path;
  graph["seed"] = gc.seed;
  j["graph"] = graph;

  j["augmentation"] = Json{{"kind", cfg.augmentation.kind},
                           {"neighbors", cfg.augmentation.neighbors},
                           {"path", cfg.augmentation.path}};
  j["kernel"] = Json{{"kind", cfg.kernel.kind},
                     {"teacher_dim", cfg.kernel.teacher_dim},
                     {"bandwidth", double_to_json(cfg.kernel.bandwidth)},
                     {"embedding_path", cfg.kernel.embedding_path}};
  j["student"] = Json{{"architecture", cfg.student.architecture},
                      {"hidden", cfg.student.hidden},
                      {"init_scale", double_to_json(cfg.student.init_scale)}};
  j["labels"] = Json{{"strategy", cfg.labels.strategy},
                     {"budget", cfg.labels.budget},
                     {"epsilon", double_to_json(cfg.labels.epsilon)}};
  j["loss"] = Json{{"lambda_dac", double_to_json(cfg.lambda_dac)},
                   {"lambda_rkd", double_to_json(cfg.lambda_rkd)},
                   {"tau_dac", double_to_json(cfg.tau_dac)},
                   {"temperature", double_to_json(cfg.temperature)}};
  j["optimizer"] = Json{{"learning_rate", double_to_json(cfg.learning_rate)},
                        {"momentum", double_to_json(cfg.momentum)},
                        {"iterations", cfg.iterations},
                        {"unlabeled_samples", cfg.unlabeled_samples},
                        {"recycle_labeled", cfg.recycle_labeled}};
  j["seed"] = cfg.seed;
  j["tolerances"] = Json{{"gradient", double_to_json(cfg.gradient_tolerance)}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  reject_unknown(j, "config",
                 {"graph", "augmentation", "kernel", "student", "labels", "loss", "optimizer", "seed", "tolerances",
                  "output_dir"});
  if (j.contains("graph")) {
    const Json& g = j["graph"];
    reject_unknown(g, "graph",
                   {"kind", "num_classes", "sizes", "p_in", "p_out", "points_per_class", "separation", "spread_x",
                    "spread_y", "bandwidth", "path", "seed"});
    auto& gc = cfg.graph;
    read_field(g, "kind", gc.kind);
    read_field(g, "num_classes", gc.num_classes);
    read_field(g, "sizes", gc.sizes);
    read_field(g, "p_in", gc.p_in);
    read_field(g, "p_out", gc.p_out);
    read_field(g, "points_per_class", gc.points_per_class);
    read_field(g, "separation", gc.separation);
    read_field(g, "spread_x", gc.spread_x);
    read_field(g, "spread_y", gc.spread_y);
    read_field(g, "bandwidth", gc.bandwidth);
    read_field(g, "path", gc.path);
    read_field(g, "seed", gc.seed);
  }
  if (j.contains("augmentation")) {
    const Json& a = j["augmentation"];
    reject_unknown(a, "augmentation", {"kind", "neighbors", "path"});
    read_field(a, "kind", cfg.augmentation.kind);
    read_field(a, "neighbors", cfg.augmentation.neighbors);
    read_field(a, "path", cfg.augmentation.path);
  }
  if (j.contains("kernel")) {
    const Json& k = j["kernel"];
    reject_unknown(k, "kernel", {"kind", "teacher_dim", "bandwidth", "embedding_path"});
    read_field(k, "kind", cfg.kernel.kind);
    read_field(k, "teacher_dim", cfg.kernel.teacher_dim);
    read_field(k, "bandwidth", cfg.kernel.bandwidth);
    read_field(k, "embedding_path", cfg.kernel.embedding_path);
  }
  if (j.contains("student")) {
    const Json& s = j["student"];
    reject_unknown(s, "student", {"architecture", "hidden", "init_scale"});
    read_field(s, "architecture", cfg.student.architecture);
    read_field(s, "hidden", cfg.student.hidden);
    read_field(s, "init_scale", cfg.student.init_scale);
  }
  if (j.contains("labels")) {
    const Json& l = j["labels"];
    reject_unknown(l, "labels", {"strategy", "budget", "epsilon"});
    read_field(l, "strategy", cfg.labels.strategy);
    read_field(l, "budget", cfg.labels.budget);
    read_field(l, "epsilon", cfg.labels.epsilon);
  }
  if (j.contains("loss")) {
    const Json& l = j["loss"];
    reject_unknown(l, "loss", {"lambda_dac", "lambda_rkd", "tau_dac", "temperature"});
    read_field(l, "lambda_dac", cfg.lambda_dac);
    read_field(l, "lambda_rkd", cfg.lambda_rkd);
    read_field(l, "tau_dac", cfg.tau_dac);
    read_field(l, "temperature", cfg.temperature);
  }
  if (j.contains("optimizer")) {
    const Json& o = j["optimizer"];
    reject_unknown(o, "optimizer",
                   {"learning_rate", "momentum", "iterations", "unlabeled_samples", "recycle_labeled"});
    read_field(o, "learning_rate", cfg.learning_rate);
    read_field(o, "momentum", cfg.momentum);
    read_field(o, "iterations", cfg.iterations);
    read_field(o, "unlabeled_samples", cfg.unlabeled_samples);
    read_field(o, "recycle_labeled", cfg.recycle_labeled);
  }
  if (j.contains("tolerances")) {
    reject_unknown(j["tolerances"], "tolerances", {"gradient"});
    read_field(j["tolerances"], "gradient", cfg.gradient_tolerance);
  }
  read_field(j, "seed", cfg.seed);
  read_field(j, "output_dir", cfg.output_dir);

  const auto& gc = cfg.graph;
  if (gc.num_classes < 2) throw InvalidConfig("graph.num_classes must be at least 2");
  if (gc.kind == "two_blob") {
    if (gc.points_per_class < 2) throw InvalidConfig("graph.points_per_class must be at least 2");
    if (!(gc.spread_x > 0) || !(gc.spread_y > 0) || !(gc.bandwidth > 0))
      throw InvalidConfig("graph spreads and bandwidth must be positive");
  } else if (gc.kind == "sbm") {
    if (static_cast<int>(gc.sizes.size()) != gc.num_classes)
      throw InvalidConfig("graph.sizes must list one size per class");
  } else if (gc.kind == "file") {
    require_file(gc.path, "graph");
  } else {
    throw InvalidConfig("graph.kind must be two_blob, sbm or file");
  }
  if (cfg.augmentation.kind == "knn") {
    if (cfg.augmentation.neighbors < 1) throw InvalidConfig("augmentation.neighbors must be at least 1");
  } else if (cfg.augmentation.kind == "file") {
    require_file(cfg.augmentation.path, "augmentation");
  } else {
    throw InvalidConfig("augmentation.kind must be knn or file");
  }
  const auto& kc = cfg.kernel;
  if (kc.kind != "shifted_cosine" && kc.kind != "rbf" && kc.kind != "graph_revealing")
    throw InvalidConfig("kernel.kind must be shifted_cosine, rbf or graph_revealing");
  if (kc.teacher_dim < 1) throw InvalidConfig("kernel.teacher_dim must be positive");
  if (!(kc.bandwidth > 0)) throw InvalidConfig("kernel.bandwidth must be positive");
  if (!kc.embedding_path.empty()) require_file(kc.embedding_path, "teacher embedding");
  parse_architecture(cfg.student.architecture);
  if (cfg.student.hidden < 1) throw InvalidConfig("student.hidden must be positive");
  if (!(cfg.student.init_scale > 0)) throw InvalidConfig("student.init_scale must be positive");
  const auto& lc = cfg.labels;
  if (lc.strategy != "uniform_per_class" && lc.strategy != "iid" && lc.strategy != "coreset")
    throw InvalidConfig("labels.strategy must be uniform_per_class, iid or coreset");
  if (lc.budget < 1) throw InvalidConfig("labels.budget must be positive");
  if (lc.strategy == "uniform_per_class" && lc.budget % gc.num_classes != 0)
    throw InvalidConfig("labels.budget must be a multiple of the class count for uniform_per_class");
  if (!(lc.epsilon > 0 && lc.epsilon < 1)) throw InvalidConfig("labels.epsilon must lie in (0, 1)");
  if (!(cfg.lambda_dac >= 0) || !(cfg.lambda_rkd >= 0)) throw InvalidConfig("loss weights must be nonnegative");
  if (!(cfg.tau_dac > 0 && cfg.tau_dac <= 1)) throw InvalidConfig("tau_dac must lie in (0, 1]");
  if (!(cfg.temperature > 0)) throw InvalidConfig("temperature must be positive");
  if (!(cfg.learning_rate > 0)) throw InvalidConfig("learning_rate must be positive");
  if (!(cfg.momentum >= 0 && cfg.momentum < 1)) throw InvalidConfig("momentum must lie in [0, 1)");
  if (cfg.iterations < 0) throw InvalidConfig("iterations must be nonnegative");
  if (cfg.unlabeled_samples < 2 || cfg.unlabeled_samples % 2 != 0)
    throw InvalidConfig("unlabeled_samples must be a positive even number");
  if (!(cfg.gradient_tolerance > 0)) throw InvalidConfig("tolerances.gradient must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

std::string config_hash(const ExperimentConfig& cfg) { return content_hash(dump_json(config_to_json(cfg))); }

CombinedLoss combined_loss(const Eigen::MatrixXd& scores, const LabeledSet& labeled,
                           const std::vector<int>& unlabeled, const std::vector<int>& strong,
                           const std::vector<VertexPair>& pairs, const Eigen::MatrixXd& kernel,
                           const CombinedLossWeights& w) {
  if (unlabeled.size() != strong.size()) throw DomainError("each unlabeled point needs one strong view");
  if (!(w.temperature > 0) || !(w.tau_dac > 0 && w.tau_dac <= 1) || w.lambda_dac < 0 || w.lambda_rkd < 0)
    throw InvalidConfig("combined loss weights out of range");
  CombinedLoss out;
  out.grad_scores = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());

  if (!labeled.pairs.empty()) {
    const double inv = 1.0 / static_cast<double>(labeled.pairs.size());
    for (const auto& p : labeled.pairs) {
      const Eigen::VectorXd z = scores.row(p.vertex).transpose();
      out.ce -= inv * log_softmax_at(z, p.label);
      Eigen::VectorXd g = softmax(z);
      g(p.label) -= 1.0;
      out.grad_scores.row(p.vertex) += inv * g.transpose();
    }
  }

  if (w.lambda_dac > 0 && !unlabeled.empty()) {
    std::vector<std::pair<int, int>> kept;  // (strong view, pseudo-label)
    for (size_t i = 0; i < unlabeled.size(); ++i) {
      const Eigen::VectorXd p = softmax(scores.row(unlabeled[i]).transpose() / w.temperature);
      Eigen::Index arg = 0;
      const double conf = p.maxCoeff(&arg);
      if (conf >= w.tau_dac) kept.emplace_back(strong[i], static_cast<int>(arg));
    }
    out.retained = static_cast<int>(kept.size());
    if (!kept.empty()) {
      const double inv = 1.0 / static_cast<double>(kept.size());
      for (const auto& [s, y] : kept) {
        const Eigen::VectorXd z = scores.row(s).transpose();
        out.dac -= inv * log_softmax_at(z, y);
        Eigen::VectorXd g = softmax(z);
        g(y) -= 1.0;
        out.grad_scores.row(s) += w.lambda_dac * inv * g.transpose();
      }
    }
  }

  if (w.lambda_rkd > 0 && !pairs.empty()) {
    out.rkd = empirical_rkd_loss(scores, pairs, kernel);
    out.grad_scores += w.lambda_rkd * empirical_rkd_gradient(scores, pairs, kernel);
  }
  out.total = out.ce + w.lambda_dac * out.dac + w.lambda_rkd * out.rkd;
  return out;
}

Fixture build_fixture(const ExperimentConfig& cfg) {
  const auto& gc = cfg.graph;
  Eigen::MatrixXd points;
  std::optional<PopulationGraph> g;
  if (gc.kind == "two_blob") {
    const BlobData d = two_blob_points(gc);
    points = d.points;
    g.emplace(build_from_kernel(d.points, d.labels, gc.num_classes, rbf_point_kernel(gc.bandwidth)));
  } else if (gc.kind == "sbm") {
    g.emplace(build_sbm(gc.num_classes, gc.sizes, gc.p_in, gc.p_out, gc.seed));
  } else {
    g.emplace(load_graph(gc.path));
    if (g->num_classes() != gc.num_classes) throw InvalidConfig("graph file class count disagrees with config");
  }

  Eigen::MatrixXd inputs = points.size() > 0 ? with_constant_column(points)
                                             : Eigen::MatrixXd::Identity(g->size(), g->size()).eval();

  AugmentationMap aug = cfg.augmentation.kind == "knn"
                            ? knn_augmentation(*g, points, cfg.augmentation.neighbors)
                            : augmentation_from_json(read_json_file(cfg.augmentation.path), *g);

  KernelSpec spec;
  if (cfg.kernel.kind == "graph_revealing") {
    spec = GraphRevealingKernel{};
  } else {
    TeacherEmbedding teacher = cfg.kernel.embedding_path.empty()
                                   ? spectral_teacher_embedding(*g, std::min(cfg.kernel.teacher_dim, g->size()))
                                   : load_embedding(cfg.kernel.embedding_path, g->size());
    if (cfg.kernel.kind == "shifted_cosine")
      spec = ShiftedCosineKernel{std::move(teacher)};
    else
      spec = RbfKernel{std::move(teacher), cfg.kernel.bandwidth};
  }
  KernelMatrix km = kernel_matrix(spec, *g);
  return Fixture{std::move(*g), std::move(inputs), std::move(aug), std::move(km.values), km.bound};
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Fixture fx = build_fixture(cfg);
  const PopulationGraph& g = fx.graph;

  RunResult r;
  r.config_hash = config_hash(cfg);
  r.labeled = choose_labels(cfg, fx);
  r.model = initial_model(cfg, fx);

  const std::vector<int> weak = draw_unlabeled(cfg, g, r.labeled);
  const std::vector<VertexPair> pairs = consecutive_pairs(weak);
  const CombinedLossWeights w = loss_weights(cfg);
  std::mt19937_64 strong_rng = stream_rng(cfg.seed, kStrongStream);

  {
    std::mt19937_64 check_rng = stream_rng(cfg.seed, kCheckStream);
    const auto strong = draw_strong(weak, fx.augmentation, check_rng);
    const double err =
        combined_gradient_check(r.model, fx.inputs, r.labeled, weak, strong, pairs, fx.kernel, w, cfg.seed);
    if (err >= cfg.gradient_tolerance) {
      std::ostringstream msg;
      msg << "gradient check failed: relative error " << err;
      throw NumericError(msg.str());
    }
  }

  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(r.model.parameters.size());
  bool warned_empty = false;
  for (int it = 0; it <= cfg.iterations; ++it) {
    const Eigen::MatrixXd scores = forward(r.model, fx.inputs);
    const auto strong = draw_strong(weak, fx.augmentation, strong_rng);
    const CombinedLoss loss = combined_loss(scores, r.labeled, weak, strong, pairs, fx.kernel, w);
    if (loss.retained == 0 && cfg.lambda_dac > 0 && !warned_empty) {
      std::clog << "ssl: no unlabeled point cleared tau_dac at iteration " << it << "; DAC term set to 0\n";
      warned_empty = true;
    }
    r.trace.push_back({it, loss.total, population_rkd_loss(scores, g), loss.ce, loss.dac, loss.rkd, loss.retained});
    if (!std::isfinite(loss.total) || loss.total > 1e6) {
      r.failed = true;
      r.failure = "training diverged at iteration " + std::to_string(it);
      break;
    }
    if (it == cfg.iterations) break;
    velocity = cfg.momentum * velocity - cfg.learning_rate * backward(r.model, fx.inputs, loss.grad_scores);
    r.model.parameters += velocity;
  }

  const std::vector<int> pred = predict_labels(forward(r.model, fx.inputs));
  std::vector<char> is_labeled(g.size(), 0);
  for (const auto& p : r.labeled.pairs) is_labeled[p.vertex] = 1;
  int correct = 0;
  for (int v = 0; v < g.size(); ++v) {
    if (is_labeled[v]) continue;
    ++r.evaluated;
    correct += pred[v] == g.labels()[v];
  }
  r.accuracy = r.evaluated > 0 ? static_cast<double>(correct) / r.evaluated : 0.0;

  if (r.failed) {
    r.theorem1.verdicts["theorem1"] = na("training failed");
    r.theorem4.verdicts["theorem4"] = na("training failed");
    r.theorem5.verdict = na("training failed");
  } else {
    run_audits(cfg, fx, r);
  }
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Json run_result_to_json(const RunResult& r, const ExperimentConfig& cfg) {
  Json j = Json::object();
  j["config"] = config_to_json(cfg);
  j["config_hash"] = r.config_hash;
  j["failed"] = r.failed;
  j["failure"] = r.failure;
  j["accuracy"] = double_to_json(r.accuracy);
  j["evaluated_vertices"] = r.evaluated;
  j["labeled_vertices"] = static_cast<int>(r.labeled.pairs.size());
  j["iterations_run"] = r.trace.empty() ? 0 : r.trace.back().iteration;
  if (!r.trace.empty()) {
    const auto& last = r.trace.back();
    j["final_loss"] = Json{{"total", double_to_json(last.total)},
                           {"ce", double_to_json(last.ce)},
                           {"dac", double_to_json(last.dac)},
                           {"rkd", double_to_json(last.rkd)},
                           {"population_rkd", double_to_json(last.population_loss)},
                           {"retained", last.retained}};
  }
  j["audits"] = run_audit_to_json(r);
  j["model"] = model_to_json(r.model);
  return j;
}

Json run_audit_to_json(const RunResult& r) {
  Json j = Json::object();
  Json verdicts = Json::object();
  const auto pick = [](const AuditReport& a, const std::string& key) {
    const auto it = a.verdicts.find(key);
    return it != a.verdicts.end() ? it->second : na("not evaluated");
  };
  verdicts["theorem1"] = verdict_json(pick(r.theorem1, "theorem1"));
  verdicts["theorem4"] = verdict_json(pick(r.theorem4, "theorem4"));
  verdicts["theorem5"] = verdict_json(r.theorem5.verdict);
  j["verdicts"] = verdicts;
  j["theorem1"] = audit_to_json(r.theorem1);
  j["theorem4"] = audit_to_json(r.theorem4);
  j["theorem5"] = theorem5_json(r.theorem5, r.expansion);
  j["label_energy"] = double_to_json(r.label_energy);
  j["alpha"] = double_to_json(r.alpha);
  return j;
}

std::string ssl_trace_csv(const std::vector<SslTracePoint>& trace) {
  std::string out = "iteration,empirical_loss,population_loss,ce,dac,rkd,retained\n";
  for (const auto& t : trace) {
    out += std::to_string(t.iteration) + "," + shortest_repr(t.total) + "," + shortest_repr(t.population_loss) + "," +
           shortest_repr(t.ce) + "," + shortest_repr(t.dac) + "," + shortest_repr(t.rkd) + "," +
           std::to_string(t.retained) + "\n";
  }
  return out;
}

void write_run_outputs(const RunResult& r, const ExperimentConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_json_file((base / "run_result.json").string(), run_result_to_json(r, cfg));
  write_json_file((base / "audit_report.json").string(), run_audit_to_json(r));
  write_text_file((base / "losses.csv").string(), ssl_trace_csv(r.trace));
  // Labels are written against the fixture's vertex ids.
  const Fixture fx = build_fixture(cfg);
  write_text_file((base / "labels.csv").string(), labeled_set_csv(r.labeled, fx.graph));
  Json timing = Json::object();
  timing["wall_clock_seconds"] = r.wall_clock_seconds;
  write_json_file((base / "timing.json").string(), timing);
}

AuditSuite run_audit_suite(const ExperimentConfig& cfg) {
  const Fixture fx = build_fixture(cfg);
  const PopulationGraph& g = fx.graph;
  const int k = g.num_classes();
  const SpectralDecomposition spec = spectral_decompose(g);
  AuditSuite out;
  out.report = Json::object();

  const double energy = laplacian_label_energy(g), alpha = inter_class_fraction(g);

  std::mt19937_64 rng = stream_rng(cfg.seed, kAuditStream);
  std::vector<Eigen::MatrixXd> family;
  AuditReport t1;
  try {
    family.push_back(exact_population_minimizer(g, spec, k, Eigen::MatrixXd::Identity(k, k)));
    for (int i = 0; i < 8; ++i) family.push_back(exact_population_minimizer(g, spec, k, random_orthogonal(k, rng)));
    t1 = theorem1_check(family, g, spec);
  } catch (const Error& e) {
    t1.verdicts["theorem1"] = na(std::string("exact minimizer family unavailable: ") + e.what());
  }
  out.verdicts["theorem1"] = t1.verdicts.at("theorem1");
  out.report["theorem1"] = audit_to_json(t1);

  OptimizerConfig opt;
  opt.learning_rate = cfg.learning_rate;
  opt.momentum = cfg.momentum;
  opt.iterations = cfg.iterations;
  opt.seed = cfg.seed;
  opt.pair_mode = PairMode::kExhaustive;
  const StudentModel init = init_student(Architecture::kTable, {g.size(), k}, stream_rng(cfg.seed, kInitStream)(),
                                         cfg.student.init_scale);
  const TrainResult trained = train_student(init, Eigen::MatrixXd::Identity(g.size(), g.size()), g, fx.kernel, opt);
  const Eigen::MatrixXd aligned = procrustes_align(forward(trained.model, Eigen::MatrixXd::Identity(g.size(), g.size())), g);
  const double delta = std::max(0.0, population_rkd_loss(aligned, g) - eckart_young_optimum(spec.eigenvalues, k));
  const AuditReport t4 = theorem4_check(aligned, g, delta, k);
  for (const char* key : {"theorem4", "lp_weak_duality"}) {
    const auto it = t4.verdicts.find(key);
    out.verdicts[key] = it != t4.verdicts.end() ? it->second : na("not evaluated: LP too large");
  }
  out.report["theorem4"] = audit_to_json(t4);
  out.report["trained_student"] = Json{{"population_loss", double_to_json(trained.report.population_loss)},
                                       {"delta", double_to_json(delta)},
                                       {"iterations", cfg.iterations}};

  if (g.size() <= kMaxExhaustiveVertices) {
    const ExpansionReport e = estimate_c_expansion(fx.augmentation, g);
    std::vector<std::vector<int>> preds;
    for (const auto& f : family) preds.push_back(predict_labels(f));
    preds.push_back(predict_labels(aligned));
    const Theorem5Result t5 = theorem5_check(preds, fx.augmentation, g, e);
    out.verdicts["theorem5"] = t5.verdict;
    out.report["theorem5"] = theorem5_json(t5, e);
    const auto probes = constant_expansion_probes(fx.augmentation, g, e.c_hat);
    Verdict v;
    Json pj = Json::array();
    bool all = !probes.empty();
    for (const auto& p : probes) {
      all = all && p.holds;
      pj.push_back(Json{{"xi", double_to_json(p.xi)}, {"q", double_to_json(p.q)}, {"holds", p.holds}});
    }
    v.status = probes.empty() ? VerdictStatus::kNotApplicable : (all ? VerdictStatus::kPass : VerdictStatus::kFail);
    v.measured = static_cast<double>(std::count_if(probes.begin(), probes.end(), [](auto& p) { return p.holds; }));
    v.bound = static_cast<double>(probes.size());
    v.note = probes.empty() ? "c_hat <= 1" : "probes holding / probes run";
    out.verdicts["lemma_e2"] = v;
    out.report["lemma_e2"] = pj;
  } else {
    out.verdicts["theorem5"] = na("population too large for exhaustive expansion");
    out.verdicts["lemma_e2"] = na("population too large for exhaustive expansion");
  }

  Json verdicts = Json::object();
  for (const auto& [key, v] : out.verdicts) verdicts[key] = verdict_json(v);
  Json full = Json::object();
  full["config_hash"] = config_hash(cfg);
  full["seed"] = cfg.seed;
  full["num_vertices"] = g.size();
  full["num_classes"] = k;
  full["alpha"] = double_to_json(alpha);
  // Reported, not judged: with alpha defined through the half-weighted
  // cross sum, the energy comes out as exactly 2 * alpha.
  full["label_energy"] = double_to_json(energy);
  full["label_energy_over_alpha"] = double_to_json(alpha > 0 ? energy / alpha : std::nan(""));
  std::vector<double> lambdas(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
  Json lj = Json::array();
  for (double l : lambdas) lj.push_back(double_to_json(l));
  full["lambdas"] = lj;
  full["verdicts"] = verdicts;
  for (const auto& [key, value] : out.report.items()) full[key] = value;
  out.report = full;
  return out;
}

std::vector<RunResult> run_sweep(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, int threads) {
  std::vector<RunResult> results(seeds.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < seeds.size(); i = next++) {
        ExperimentConfig c = cfg;
        c.seed = seeds[i];
        try {
          results[i] = run_experiment(c);
        } catch (const std::exception& e) {
          results[i].failed = true;
          results[i].failure = e.what();
          results[i].config_hash = config_hash(c);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  return results;
}

}  // namespace rkd
