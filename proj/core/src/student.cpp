#include "rkd/student.hpp"

#include <cmath>
#include <random>

#include "rkd/errors.hpp"

namespace rkd {

std::string architecture_name(Architecture a) {
  switch (a) {
    case Architecture::kTable: return "table";
    case Architecture::kLinear: return "linear";
    case Architecture::kMlp: return "mlp";
  }
  return "table";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "table") return Architecture::kTable;
  if (name == "linear") return Architecture::kLinear;
  if (name == "mlp") return Architecture::kMlp;
  throw InvalidConfig("unknown architecture '" + name + "'");
}

std::size_t parameter_count(Architecture a, const std::vector<int>& widths) {
  const std::size_t expected_widths = a == Architecture::kMlp ? 3 : 2;
  if (widths.size() != expected_widths)
    throw InvalidConfig(architecture_name(a) + " needs " + std::to_string(expected_widths) + " widths");
  std::size_t count = 0;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] < 1 || widths[i + 1] < 1) throw InvalidConfig("widths must be positive");
    count += static_cast<std::size_t>(widths[i]) * static_cast<std::size_t>(widths[i + 1]);
  }
  return count;
}

int StudentModel::depth() const { return static_cast<int>(widths.size()) - 1; }

namespace {

// Offset of weight matrix `layer` in the flat vector. Table rows are
// vertices (|X| x K); parametric layers are out x in.
std::size_t layer_offset(const StudentModel& m, int layer) {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) off += static_cast<std::size_t>(m.widths[l]) * m.widths[l + 1];
  return off;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> layer_view(const StudentModel& m, int layer) {
  const int rows = m.architecture == Architecture::kTable ? m.widths[0] : m.widths[layer + 1];
  const int cols = m.architecture == Architecture::kTable ? m.widths[1] : m.widths[layer];
  return {m.parameters.data() + layer_offset(m, layer), rows, cols};
}

Eigen::Map<RowMajor> layer_view(StudentModel& m, int layer) {
  const int rows = m.architecture == Architecture::kTable ? m.widths[0] : m.widths[layer + 1];
  const int cols = m.architecture == Architecture::kTable ? m.widths[1] : m.widths[layer];
  return {m.parameters.data() + layer_offset(m, layer), rows, cols};
}

void check_model(const StudentModel& m) {
  if (static_cast<std::size_t>(m.parameters.size()) != parameter_count(m.architecture, m.widths))
    throw InvalidConfig("parameter count does not match the architecture");
}

void check_inputs(const StudentModel& m, const Eigen::MatrixXd& inputs) {
  if (m.architecture == Architecture::kTable) {
    if (inputs.rows() != m.widths[0]) throw DomainError("table student size does not match the population");
  } else if (inputs.cols() != m.widths[0]) {
    throw DomainError("input dimension does not match the student");
  }
}

}  // namespace

Eigen::MatrixXd StudentModel::weight(int layer) const { return layer_view(*this, layer); }

StudentModel init_student(Architecture a, std::vector<int> widths, std::uint64_t seed, double scale) {
  StudentModel m{a, std::move(widths), {}, seed};
  m.parameters.resize(static_cast<Eigen::Index>(parameter_count(a, m.widths)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < m.depth(); ++l) {
    const double std_dev = a == Architecture::kTable ? scale : scale / std::sqrt(m.widths[l]);
    auto w = layer_view(m, l);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = std_dev * normal(rng);
  }
  return m;
}

StudentModel table_student(const Eigen::MatrixXd& scores) {
  StudentModel m{Architecture::kTable,
                 {static_cast<int>(scores.rows()), static_cast<int>(scores.cols())},
                 Eigen::VectorXd(scores.size()),
                 0};
  layer_view(m, 0) = scores;
  return m;
}

Eigen::MatrixXd forward(const StudentModel& m, const Eigen::MatrixXd& inputs) {
  check_model(m);
  check_inputs(m, inputs);
  switch (m.architecture) {
    case Architecture::kTable:
      return layer_view(m, 0);
    case Architecture::kLinear:
      return inputs * layer_view(m, 0).transpose();
    case Architecture::kMlp: {
      const Eigen::MatrixXd hidden = (inputs * layer_view(m, 0).transpose()).array().tanh();
      return hidden * layer_view(m, 1).transpose();
    }
  }
  return {};
}

Eigen::VectorXd backward(const StudentModel& m, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& grad_scores) {
  check_model(m);
  check_inputs(m, inputs);
  StudentModel g = m;
  switch (m.architecture) {
    case Architecture::kTable:
      layer_view(g, 0) = grad_scores;
      break;
    case Architecture::kLinear:
      layer_view(g, 0) = grad_scores.transpose() * inputs;
      break;
    case Architecture::kMlp: {
      const Eigen::MatrixXd hidden = (inputs * layer_view(m, 0).transpose()).array().tanh();
      layer_view(g, 1) = grad_scores.transpose() * hidden;
      const Eigen::MatrixXd grad_hidden = grad_scores * layer_view(m, 1);
      const Eigen::MatrixXd grad_pre = grad_hidden.array() * (1.0 - hidden.array().square());
      layer_view(g, 0) = grad_pre.transpose() * inputs;
      break;
    }
  }
  return g.parameters;
}

void project_output_norm(StudentModel& m, const Eigen::MatrixXd& inputs, double bound) {
  if (!(bound > 0.0)) throw DomainError("output bound must be positive");
  const double limit = std::sqrt(bound);
  if (m.architecture == Architecture::kTable) {
    auto t = layer_view(m, 0);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double n = t.row(i).norm();
      if (n > limit) t.row(i) *= limit / n;
    }
    return;
  }
  const double worst = forward(m, inputs).rowwise().norm().maxCoeff();
  if (worst > limit) layer_view(m, m.depth() - 1) *= limit / worst;
}

Json model_to_json(const StudentModel& m) {
  Json j;
  j["architecture"] = architecture_name(m.architecture);
  j["widths"] = m.widths;
  Json params = Json::array();
  for (Eigen::Index i = 0; i < m.parameters.size(); ++i) params.push_back(m.parameters(i));
  j["parameters"] = std::move(params);
  j["seed"] = m.seed;
  return j;
}

StudentModel model_from_json(const Json& j) {
  try {
    StudentModel m;
    m.architecture = parse_architecture(j.at("architecture").get<std::string>());
    m.widths = j.at("widths").get<std::vector<int>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("parameters");
    m.parameters.resize(static_cast<Eigen::Index>(p.size()));
    for (size_t i = 0; i < p.size(); ++i) m.parameters(static_cast<Eigen::Index>(i)) = json_to_double(p[i]);
    check_model(m);
    return m;
  } catch (const Json::exception& e) {
    throw InvalidConfig(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace rkd
