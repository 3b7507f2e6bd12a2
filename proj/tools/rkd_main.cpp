// rkd: command-line front end for the spectral RKD toolkit.
//
// Exit codes: 0 success, 1 validation/runtime failure (or a failed audit
// verdict / failed run), 2 usage error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rkd/clustering.hpp"
#include "rkd/dac.hpp"
#include "rkd/errors.hpp"
#include "rkd/graph.hpp"
#include "rkd/json_io.hpp"
#include "rkd/kernel.hpp"
#include "rkd/labels.hpp"
#include "rkd/spectral_rkd.hpp"
#include "rkd/ssl.hpp"
#include "rkd/student.hpp"

namespace fs = std::filesystem;
using namespace rkd;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string in;
  std::uint64_t seed = 0;
  // graph --gen sbm
  std::string gen;
  int k = 2;
  std::vector<int> sizes;
  double p_in = 0.0;
  double p_out = 0.0;
  std::string graph_path;
  // labels
  double delta = 0.1;
  int trials = 2000;
  // ssl
  std::vector<std::uint64_t> sweep;
  int threads = 1;
  bool exhaustive_pairs = false;
};

ExperimentConfig config_with_seed(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  cfg.seed = o.seed;
  return cfg;
}

std::string path_in(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

std::string fmt(double v) { return shortest_repr(v); }

int cmd_graph(const Options& o) {
  std::optional<PopulationGraph> g;
  if (o.gen == "sbm") {
    if (o.sizes.empty()) throw InvalidConfig("--sizes is required with --gen sbm");
    g.emplace(build_sbm(o.k, o.sizes, o.p_in, o.p_out, o.seed));
  } else if (!o.config.empty()) {
    g.emplace(build_fixture(config_with_seed(o)).graph);
  } else {
    throw InvalidConfig("graph needs --gen sbm or --config");
  }
  const std::string path = path_in(o.out.empty() ? "." : o.out, "graph.json");
  save_graph(*g, path);
  std::cout << "graph: wrote " << path << " (|X|=" << g->size() << ", K=" << g->num_classes()
            << ", alpha=" << fmt(inter_class_fraction(*g)) << ")\n";
  return 0;
}

int cmd_spectra(const Options& o) {
  const PopulationGraph g = !o.graph_path.empty() ? load_graph(o.graph_path) : build_fixture(config_with_seed(o)).graph;
  const auto spec = spectral_decompose(g);
  Json j = Json::object();
  Json lambdas = Json::array();
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) lambdas.push_back(double_to_json(spec.eigenvalues(i)));
  j["lambdas"] = lambdas;
  const double alpha = inter_class_fraction(g);
  const double energy = laplacian_label_energy(g);
  j["alpha"] = double_to_json(alpha);
  j["label_energy"] = double_to_json(energy);
  j["label_energy_residual"] = double_to_json(std::abs(alpha - energy));
  Json cond = Json::array();
  for (const auto& members : g.class_members()) cond.push_back(double_to_json(conductance(g, members)));
  j["class_conductance"] = cond;
  if (g.size() <= kMaxPartitionVertices) {
    const auto part = sparsest_k_partition(g, g.num_classes());
    j["sparsest_partition"] = Json{{"value", double_to_json(part.value)}, {"assignment", part.assignment}};
  }
  const std::string path = path_in(o.out, "spectra.json");
  write_json_file(path, j);
  std::cout << "spectra: |X|=" << g.size() << " lambda_2=" << fmt(g.size() > 1 ? spec.eigenvalues(1) : 0.0)
            << " alpha=" << fmt(alpha) << " -> " << path << "\n";
  return 0;
}

int cmd_rkd(const Options& o) {
  const ExperimentConfig cfg = config_with_seed(o);
  const Fixture fx = build_fixture(cfg);
  const PopulationGraph& g = fx.graph;
  const Architecture a = parse_architecture(cfg.student.architecture);
  std::vector<int> widths;
  if (a == Architecture::kTable) widths = {g.size(), g.num_classes()};
  else if (a == Architecture::kLinear) widths = {static_cast<int>(fx.inputs.cols()), g.num_classes()};
  else widths = {static_cast<int>(fx.inputs.cols()), cfg.student.hidden, g.num_classes()};
  const StudentModel init = init_student(a, widths, cfg.seed, cfg.student.init_scale);

  OptimizerConfig opt;
  opt.learning_rate = cfg.learning_rate;
  opt.momentum = cfg.momentum;
  opt.iterations = cfg.iterations;
  opt.seed = cfg.seed;
  opt.samples_per_step = cfg.unlabeled_samples;
  opt.log_every = std::max(1, cfg.iterations / 100);
  if (o.exhaustive_pairs) opt.pair_mode = PairMode::kExhaustive;
  const TrainResult r = train_student(init, fx.inputs, g, fx.kernel, opt);

  write_json_file(path_in(o.out, "checkpoint.json"), model_to_json(r.model));
  write_text_file(path_in(o.out, "losses.csv"), loss_trace_csv(r.trace));
  Json j = Json::object();
  j["config_hash"] = config_hash(cfg);
  j["population_loss"] = double_to_json(r.report.population_loss);
  j["empirical_loss"] = double_to_json(r.report.empirical_loss);
  j["delta"] = double_to_json(r.report.delta);
  j["output_bound"] = double_to_json(r.report.output_bound);
  j["kernel_bound"] = double_to_json(r.report.kernel_bound);
  j["gradient_check_error"] = double_to_json(r.report.gradient_check_error);
  write_json_file(path_in(o.out, "rkd_report.json"), j);
  std::cout << "rkd: population_loss=" << fmt(r.report.population_loss) << " delta=" << fmt(r.report.delta)
            << " -> " << o.out << "\n";
  return 0;
}

int cmd_audit(const Options& o) {
  const AuditSuite suite = run_audit_suite(config_with_seed(o));
  write_json_file(path_in(o.out, "audit_report.json"), suite.report);
  int failures = 0;
  std::cout << "audit:";
  for (const auto& [key, v] : suite.verdicts) {
    std::cout << " " << key << "=" << status_name(v.status);
    failures += v.status == VerdictStatus::kFail;
  }
  std::cout << " -> " << o.out << "\n";
  return failures > 0 ? 1 : 0;
}

int cmd_dac(const Options& o) {
  const ExperimentConfig cfg = config_with_seed(o);
  const Fixture fx = build_fixture(cfg);
  const PopulationGraph& g = fx.graph;
  if (g.size() > kMaxSampledVertices)
    throw SizeLimit("dac needs |X| <= " + std::to_string(kMaxSampledVertices));
  const ExpansionReport e = estimate_c_expansion(fx.augmentation, g, 200000, cfg.seed);
  const Eigen::MatrixXd f =
      exact_population_minimizer(g, g.num_classes(), Eigen::MatrixXd::Identity(g.num_classes(), g.num_classes()));
  const std::vector<int> pred = predict_labels(f);
  const Theorem5Result t5 = theorem5_check({pred}, fx.augmentation, g, e);

  Json j = Json::object();
  j["c_hat"] = double_to_json(e.c_hat);
  j["c_hat_unsaturated"] = double_to_json(e.c_hat_unsaturated);
  j["exhaustive"] = e.exhaustive;
  j["checked_subsets"] = e.checked_subsets;
  j["witness"] = e.witness;
  j["conforming"] = fx.augmentation.conforming();
  j["dac_error"] = double_to_json(t5.nu);
  j["minority_mass"] = double_to_json(t5.mu);
  j["theorem5_bound"] = double_to_json(t5.bound);
  j["theorem5"] = status_name(t5.verdict.status);
  j["theorem5_note"] = t5.verdict.note;
  Json probes = Json::array();
  if (e.exhaustive)
    for (const auto& p : constant_expansion_probes(fx.augmentation, g, e.c_hat))
      probes.push_back(Json{{"xi", double_to_json(p.xi)}, {"q", double_to_json(p.q)}, {"holds", p.holds}});
  j["constant_expansion_probes"] = probes;
  write_json_file(path_in(o.out, "dac_report.json"), j);
  std::cout << "dac: c_hat=" << fmt(e.c_hat) << (e.exhaustive ? " (exhaustive)" : " (sampled)")
            << " nu=" << fmt(t5.nu) << " theorem5=" << status_name(t5.verdict.status) << " -> " << o.out << "\n";
  return t5.verdict.status == VerdictStatus::kFail ? 1 : 0;
}

int cmd_labels(const Options& o) {
  const ExperimentConfig cfg = config_with_seed(o);
  const Fixture fx = build_fixture(cfg);
  const PopulationGraph& g = fx.graph;
  LabeledSet s;
  const auto& lc = cfg.labels;
  if (lc.strategy == "uniform_per_class") s = uniform_per_class(g, lc.budget / g.num_classes(), cfg.seed);
  else if (lc.strategy == "iid") s = iid_sample(g, lc.budget, cfg.seed);
  else s = label_vertices(stochastic_greedy(fx.kernel, lc.budget, lc.epsilon, cfg.seed), g, "coreset", cfg.seed);
  write_text_file(path_in(o.out, "labels.csv"), labeled_set_csv(s, g));

  const CoverageReport cov = cluster_wise_coverage(g.labels(), g, o.delta, o.trials, cfg.seed);
  Json j = Json::object();
  j["strategy"] = s.strategy;
  j["labeled"] = static_cast<int>(s.pairs.size());
  j["coverage"] = Json{{"delta", double_to_json(o.delta)},
                       {"trials", cov.trials},
                       {"covered", cov.covered},
                       {"rate", double_to_json(cov.rate)},
                       {"standard_error", double_to_json(cov.standard_error)},
                       {"draws_per_cluster", cov.draws_per_cluster}};
  double harmonic = 0.0;
  for (int i = 1; i <= g.num_classes(); ++i) harmonic += 1.0 / i;
  j["coupon_collector_mean"] = double_to_json(coupon_collector_mean(g, o.trials, cfg.seed));
  j["coupon_collector_reference"] = double_to_json(g.num_classes() * harmonic);
  write_json_file(path_in(o.out, "labels_report.json"), j);
  std::cout << "labels: " << s.pairs.size() << " labeled (" << s.strategy << "), cluster-wise coverage "
            << fmt(cov.rate) << " at delta=" << fmt(o.delta) << " -> " << o.out << "\n";
  return 0;
}

std::string verdict_line(const RunResult& r) {
  const auto get = [](const AuditReport& a, const char* key) {
    const auto it = a.verdicts.find(key);
    return it == a.verdicts.end() ? std::string("not_applicable") : status_name(it->second.status);
  };
  return "theorem1=" + get(r.theorem1, "theorem1") + " theorem4=" + get(r.theorem4, "theorem4") +
         " theorem5=" + status_name(r.theorem5.verdict.status);
}

int cmd_ssl(const Options& o) {
  const ExperimentConfig cfg = config_with_seed(o);
  if (o.sweep.empty()) {
    const RunResult r = run_experiment(cfg);
    write_run_outputs(r, cfg, o.out);
    std::cout << "ssl: accuracy=" << fmt(r.accuracy) << " " << verdict_line(r)
              << (r.failed ? " FAILED: " + r.failure : "") << " -> " << o.out << "\n";
    return r.failed ? 1 : 0;
  }
  const auto results = run_sweep(cfg, o.sweep, o.threads);
  Json runs = Json::array();
  double total = 0.0;
  int failed = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    ExperimentConfig c = cfg;
    c.seed = o.sweep[i];
    const std::string dir = (fs::path(o.out) / ("seed_" + std::to_string(c.seed))).string();
    write_run_outputs(results[i], c, dir);
    total += results[i].accuracy;
    failed += results[i].failed;
    runs.push_back(Json{{"seed", c.seed},
                        {"accuracy", double_to_json(results[i].accuracy)},
                        {"failed", results[i].failed},
                        {"config_hash", results[i].config_hash}});
  }
  Json j = Json::object();
  j["runs"] = runs;
  j["mean_accuracy"] = double_to_json(total / static_cast<double>(results.size()));
  write_json_file(path_in(o.out, "sweep.json"), j);
  std::cout << "ssl: sweep of " << results.size() << " runs, mean accuracy " << fmt(total / results.size())
            << ", " << failed << " failed -> " << o.out << "\n";
  return failed > 0 ? 1 : 0;
}

int cmd_report(const Options& o) {
  std::vector<fs::path> found;
  if (fs::exists(fs::path(o.in) / "run_result.json")) found.push_back(fs::path(o.in));
  if (fs::is_directory(o.in))
    for (const auto& entry : fs::directory_iterator(o.in))
      if (entry.is_directory() && fs::exists(entry.path() / "run_result.json")) found.push_back(entry.path());
  if (found.empty()) throw InvalidConfig("no run_result.json under " + o.in);
  std::sort(found.begin(), found.end());
  Json runs = Json::array();
  double total = 0.0;
  for (const auto& dir : found) {
    const Json r = read_json_file((dir / "run_result.json").string());
    total += json_to_double(r.at("accuracy"));
    runs.push_back(Json{{"run", dir.filename().string()},
                        {"accuracy", r.at("accuracy")},
                        {"failed", r.at("failed")},
                        {"config_hash", r.at("config_hash")},
                        {"verdicts", r.at("audits").at("verdicts")}});
  }
  Json j = Json::object();
  j["runs"] = runs;
  j["mean_accuracy"] = double_to_json(total / static_cast<double>(found.size()));
  const std::string out = o.out.empty() ? o.in : o.out;
  write_json_file(path_in(out, "report.json"), j);
  std::cout << "report: " << found.size() << " run(s), mean accuracy " << fmt(total / found.size()) << " -> "
            << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral relational knowledge distillation toolkit", "rkd"};
  app.require_subcommand(1);
  Options o;

  auto* graph = app.add_subcommand("graph", "Generate or export a population graph");
  graph->add_option("--gen", o.gen, "Generator")->check(CLI::IsMember({"sbm"}));
  graph->add_option("--k", o.k, "Number of classes");
  graph->add_option("--sizes", o.sizes, "Class sizes")->delimiter(',');
  graph->add_option("--p-in", o.p_in, "Within-class edge probability");
  graph->add_option("--p-out", o.p_out, "Between-class edge probability");
  graph->add_option("--config", o.config, "Experiment config whose fixture graph is exported")->check(CLI::ExistingFile);
  graph->add_option("--seed", o.seed, "Seed")->required();
  graph->add_option("--out", o.out, "Output directory (default: current directory)");

  auto* spectra = app.add_subcommand("spectra", "Spectrum, alpha and conductance of a graph");
  auto* spectra_src = spectra->add_option_group("source");
  spectra_src->add_option("--config", o.config, "Experiment config")->check(CLI::ExistingFile);
  spectra_src->add_option("--graph", o.graph_path, "Graph file")->check(CLI::ExistingFile);
  spectra_src->require_option(1);
  spectra->add_option("--seed", o.seed, "Seed");
  spectra->add_option("--out", o.out, "Output directory")->required();

  const auto standard = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed")->required();
    sub->add_option("--out", o.out, "Output directory")->required();
  };
  auto* rkd_cmd = app.add_subcommand("rkd", "Train a student on the RKD loss alone");
  standard(rkd_cmd);
  rkd_cmd->add_flag("--exhaustive-pairs", o.exhaustive_pairs, "Use every weighted pair instead of sampled pairs");
  auto* audit = app.add_subcommand("audit", "Run the theorem audit suite on a fixture");
  standard(audit);
  auto* dac = app.add_subcommand("dac", "Expansion constant, DAC error and expansion bound on a fixture");
  standard(dac);
  auto* labels = app.add_subcommand("labels", "Select labels and report cluster-wise coverage");
  standard(labels);
  labels->add_option("--delta", o.delta, "Failure probability for cluster-wise draws")->check(CLI::Range(1e-12, 1.0));
  labels->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  auto* ssl = app.add_subcommand("ssl", "Run the semi-supervised experiment");
  standard(ssl);
  ssl->add_option("--sweep", o.sweep, "Seeds to sweep (overrides --seed)")->delimiter(',');
  ssl->add_option("--threads", o.threads, "Worker threads for --sweep")->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "Summarise run directories");
  report->add_option("--in", o.in, "Run or sweep directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", o.out, "Output directory (defaults to --in)");

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*graph) return cmd_graph(o);
    if (*spectra) return cmd_spectra(o);
    if (*rkd_cmd) return cmd_rkd(o);
    if (*audit) return cmd_audit(o);
    if (*dac) return cmd_dac(o);
    if (*labels) return cmd_labels(o);
    if (*ssl) return cmd_ssl(o);
    if (*report) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "rkd: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "rkd: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
