#include "rkd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rkd/errors.hpp"

namespace rkd {

PopulationGraph::PopulationGraph(Eigen::MatrixXd raw, std::vector<int> labels, int num_classes,
                                 std::vector<std::int64_t> vertices)
    : vertices_(std::move(vertices)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      raw_(std::move(raw)) {
  const int n = static_cast<int>(labels_.size());
  if (n < 2) throw InvalidConfig("a population needs at least 2 vertices");
  if (raw_.rows() != n || raw_.cols() != n)
    throw InvalidConfig("weight matrix shape does not match the label count");
  if (num_classes_ < 1) throw InvalidConfig("num_classes must be positive");
  if (vertices_.empty()) {
    vertices_.resize(n);
    for (int i = 0; i < n; ++i) vertices_[i] = i;
  }
  if (static_cast<int>(vertices_.size()) != n)
    throw InvalidConfig("vertex list length does not match the label count");

  std::vector<int> count(num_classes_, 0);
  for (int y : labels_) {
    if (y < 0 || y >= num_classes_) throw InvalidConfig("label out of range");
    ++count[y];
  }
  for (int k = 0; k < num_classes_; ++k)
    if (count[k] == 0) throw InvalidConfig("class " + std::to_string(k) + " is empty");

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double w = raw_(i, j);
      if (!std::isfinite(w) || w < 0.0) throw DomainError("weights must be finite and nonnegative");
      if (w != raw_(j, i)) throw DomainError("weight matrix is not symmetric");
    }

  const double total = raw_.sum();
  if (!(total > 0.0)) throw DegenerateGraph("graph has no edge weight");
  weights_ = raw_ / total;
  degrees_ = weights_.rowwise().sum();
  for (int i = 0; i < n; ++i)
    if (!(degrees_(i) > 0.0))
      throw DegenerateGraph("vertex " + std::to_string(i) + " has zero degree");
}

std::vector<std::vector<int>> PopulationGraph::class_members() const {
  std::vector<std::vector<int>> out(num_classes_);
  for (int i = 0; i < size(); ++i) out[labels_[i]].push_back(i);
  return out;
}

Eigen::VectorXd PopulationGraph::class_masses() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(num_classes_);
  for (int i = 0; i < size(); ++i) m(labels_[i]) += degrees_(i);
  return m;
}

Eigen::MatrixXd PopulationGraph::one_hot() const {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(size(), num_classes_);
  for (int i = 0; i < size(); ++i) y(i, labels_[i]) = 1.0;
  return y;
}

PopulationGraph build_sbm(int num_classes, const std::vector<int>& sizes, double p_in,
                          double p_out, std::uint64_t seed) {
  if (num_classes < 1 || static_cast<int>(sizes.size()) != num_classes)
    throw InvalidConfig("sizes must list one block size per class");
  for (int s : sizes)
    if (s < 1) throw InvalidConfig("every block needs at least one vertex");
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
    throw InvalidConfig("need 0 <= p_out <= p_in <= 1");

  std::vector<int> labels;
  for (int k = 0; k < num_classes; ++k) labels.insert(labels.end(), sizes[k], k);
  const int n = static_cast<int>(labels.size());

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double p = labels[i] == labels[j] ? p_in : p_out;
        if (unif(rng) < p) w(i, j) = w(j, i) = 1.0;
      }
    if ((w.rowwise().sum().array() > 0.0).all()) return PopulationGraph(w, labels, num_classes);
  }
  throw DegenerateGraph("SBM draw left an isolated vertex after 100 attempts");
}

PopulationGraph build_from_pair_weights(int n, const std::vector<int>& labels, int num_classes,
                                        const std::function<double(int, int)>& weight) {
  if (static_cast<int>(labels.size()) != n) throw InvalidConfig("need one label per point");
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = weight(i, j);
      if (!(v >= 0.0)) throw DomainError("kernel value must be nonnegative");
      w(i, j) = w(j, i) = v;
    }
  for (int i = 0; i < n; ++i)
    if (!(w.row(i).sum() > 0.0)) throw DegenerateGraph("kernel row " + std::to_string(i) + " is all zero");
  return PopulationGraph(w, labels, num_classes);
}

PopulationGraph build_from_kernel(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                  int num_classes, const PointKernel& kernel) {
  return build_from_pair_weights(static_cast<int>(points.rows()), labels, num_classes,
                                 [&](int i, int j) {
                                   return kernel(points.row(i).transpose(), points.row(j).transpose());
                                 });
}

Eigen::MatrixXd normalized_adjacency(const PopulationGraph& g) {
  const Eigen::VectorXd s = g.degrees().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd wbar = s.asDiagonal() * g.weights() * s.asDiagonal();
  // Exact symmetry, independent of rounding order.
  return (0.5 * (wbar + wbar.transpose())).eval();
}

Eigen::MatrixXd laplacian(const PopulationGraph& g) {
  return Eigen::MatrixXd::Identity(g.size(), g.size()) - normalized_adjacency(g);
}

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

// Canonical orthonormal basis for span(block): Gram-Schmidt over the
// columns of the projector, taking the first columns that add a new
// direction.
Eigen::MatrixXd canonical_basis(const Eigen::MatrixXd& block) {
  const Eigen::Index n = block.rows(), m = block.cols();
  const Eigen::MatrixXd proj = block * block.transpose();
  Eigen::MatrixXd out(n, m);
  Eigen::Index found = 0;
  for (Eigen::Index c = 0; c < n && found < m; ++c) {
    Eigen::VectorXd v = proj.col(c);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index f = 0; f < found; ++f) v -= out.col(f).dot(v) * out.col(f);
    const double norm = v.norm();
    if (norm > 1e-8) out.col(found++) = v / norm;
  }
  if (found < m) return block;  // projector too ill-conditioned; keep solver basis
  return out;
}

}  // namespace

SpectralDecomposition spectral_decompose_matrix(const Eigen::MatrixXd& lap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lap);
    const auto& sv = svd.singularValues();
    msg << "eigensolver did not converge; condition estimate "
        << sv(0) / std::max(sv(sv.size() - 1), 1e-300);
    throw NumericError(msg.str());
  }
  SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  const Eigen::Index n = out.eigenvalues.size();
  constexpr double kTieTol = 1e-9;
  for (Eigen::Index start = 0; start < n;) {
    Eigen::Index end = start + 1;
    while (end < n && out.eigenvalues(end) - out.eigenvalues(end - 1) < kTieTol) ++end;
    if (end - start > 1)
      out.eigenvectors.middleCols(start, end - start) =
          canonical_basis(out.eigenvectors.middleCols(start, end - start));
    start = end;
  }
  for (Eigen::Index i = 0; i < n; ++i) fix_sign(out.eigenvectors.col(i));
  return out;
}

SpectralDecomposition spectral_decompose(const PopulationGraph& g) {
  return spectral_decompose_matrix(laplacian(g));
}

double inter_class_fraction(const PopulationGraph& g) {
  const auto& w = g.weights();
  const auto& y = g.labels();
  double cross = 0.0;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j)
      if (y[i] != y[j]) cross += w(i, j);
  return cross / (2.0 * w.sum());
}

double laplacian_label_energy(const PopulationGraph& g) {
  const Eigen::MatrixXd y = g.degrees().cwiseSqrt().asDiagonal() * g.one_hot();
  return (y.transpose() * laplacian(g) * y).trace();
}

double conductance(const PopulationGraph& g, const std::vector<int>& subset) {
  const int n = g.size();
  std::vector<char> in(n, 0);
  for (int v : subset) {
    if (v < 0 || v >= n) throw DomainError("subset vertex out of range");
    in[v] = 1;
  }
  const int count = static_cast<int>(std::count(in.begin(), in.end(), 1));
  if (count == 0 || count == n) throw DomainError("conductance needs a nonempty proper subset");
  double cut = 0.0, vol = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!in[i]) continue;
    vol += g.degrees()(i);
    for (int j = 0; j < n; ++j)
      if (!in[j]) cut += g.weights()(i, j);
  }
  return cut / vol;
}

namespace {

struct PartitionSearch {
  const Eigen::MatrixXd& w;
  const Eigen::VectorXd& deg;
  int n, k;
  std::vector<int> block;
  std::vector<double> vol, internal;
  PartitionResult best;

  void visit(int v, int used) {
    if (v == n) {
      if (used != k) return;
      double worst = 0.0;
      for (int b = 0; b < k; ++b) worst = std::max(worst, (vol[b] - internal[b]) / vol[b]);
      if (worst < best.value) {
        best.value = worst;
        best.assignment = block;
      }
      return;
    }
    // Not enough vertices left to open the remaining blocks.
    if (n - v < k - used) return;
    const int limit = std::min(used + 1, k);
    for (int b = 0; b < limit; ++b) {
      double add = w(v, v);
      for (int u = 0; u < v; ++u)
        if (block[u] == b) add += 2.0 * w(u, v);
      block[v] = b;
      vol[b] += deg(v);
      internal[b] += add;
      visit(v + 1, b == used ? used + 1 : used);
      vol[b] -= deg(v);
      internal[b] -= add;
    }
  }
};

}  // namespace

PartitionResult sparsest_k_partition(const PopulationGraph& g, int k) {
  if (g.size() > kMaxPartitionVertices)
    throw SizeLimit("sparsest partition enumeration is capped at " +
                    std::to_string(kMaxPartitionVertices) + " vertices");
  if (k < 2 || k > g.size()) throw DomainError("need 2 <= k <= |X|");
  PartitionSearch s{g.weights(), g.degrees(), g.size(), k, std::vector<int>(g.size(), 0),
                    std::vector<double>(k, 0.0), std::vector<double>(k, 0.0),
                    PartitionResult{{}, HUGE_VAL}};
  s.visit(0, 0);
  return s.best;
}

Json graph_to_json(const PopulationGraph& g) {
  Json edges = Json::array();
  const auto& raw = g.raw_weights();
  for (int i = 0; i < g.size(); ++i)
    for (int j = i; j < g.size(); ++j)
      if (raw(i, j) != 0.0) edges.push_back(Json::array({i, j, raw(i, j)}));
  Json j;
  j["vertices"] = g.vertices();
  j["num_classes"] = g.num_classes();
  j["labels"] = g.labels();
  j["edges"] = std::move(edges);
  return j;
}

PopulationGraph graph_from_json(const Json& j) {
  try {
    auto vertices = j.at("vertices").get<std::vector<std::int64_t>>();
    auto labels = j.at("labels").get<std::vector<int>>();
    const int k = j.at("num_classes").get<int>();
    const int n = static_cast<int>(vertices.size());
    if (static_cast<int>(labels.size()) != n) throw InvalidConfig("labels and vertices differ in length");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, n);
    for (const auto& e : j.at("edges")) {
      const int a = e.at(0).get<int>(), b = e.at(1).get<int>();
      const double v = json_to_double(e.at(2));
      if (a < 0 || b >= n || a > b) throw InvalidConfig("edge endpoints must satisfy 0 <= i <= j < |X|");
      if (seen(a, b)) throw InvalidConfig("duplicate edge");
      seen(a, b) = 1;
      w(a, b) = w(b, a) = v;
    }
    return PopulationGraph(w, labels, k, vertices);
  } catch (const Json::exception& e) {
    throw InvalidConfig(std::string("malformed graph JSON: ") + e.what());
  }
}

void save_graph(const PopulationGraph& g, const std::string& path) {
  write_json_file(path, graph_to_json(g));
}

PopulationGraph load_graph(const std::string& path) { return graph_from_json(read_json_file(path)); }

}  // namespace rkd
