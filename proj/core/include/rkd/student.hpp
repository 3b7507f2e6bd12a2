#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkd/json_io.hpp"

namespace rkd {

enum class Architecture { kTable, kLinear, kMlp };

std::string architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name);

// A student f mapping inputs to K scores. Parameters are stored flat,
// row-major per weight matrix:
//   table:  widths = {|X|, K}, one K-vector per vertex
//   linear: widths = {d, K},   f(x) = A x
//   mlp:    widths = {d, h, K}, f(x) = A2 tanh(A1 x)
// There are no bias terms; append a constant feature when one is needed.
struct StudentModel {
  Architecture architecture = Architecture::kTable;
  std::vector<int> widths;
  Eigen::VectorXd parameters;
  std::uint64_t seed = 0;

  int output_dim() const { return widths.back(); }
  // Number of weight matrices.
  int depth() const;
  // Weight matrix `layer`, copied out of the flat vector.
  Eigen::MatrixXd weight(int layer) const;
};

std::size_t parameter_count(Architecture a, const std::vector<int>& widths);

// Gaussian initialization with the given standard deviation per entry
// (scaled by 1/sqrt(fan_in) for parametric layers).
StudentModel init_student(Architecture a, std::vector<int> widths, std::uint64_t seed, double scale = 1.0);
StudentModel table_student(const Eigen::MatrixXd& scores);

// Scores for every input row. For a table model `inputs` only fixes the
// number of rows, which must equal the table size.
Eigen::MatrixXd forward(const StudentModel& m, const Eigen::MatrixXd& inputs);

// Gradient with respect to the parameters given dLoss/dScores.
Eigen::VectorXd backward(const StudentModel& m, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& grad_scores);

// Rescales the last layer (or table rows) so every output row has squared
// norm at most `bound` on the given inputs.
void project_output_norm(StudentModel& m, const Eigen::MatrixXd& inputs, double bound);

Json model_to_json(const StudentModel& m);
StudentModel model_from_json(const Json& j);

}  // namespace rkd
