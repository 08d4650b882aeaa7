#pragma once

#include <Eigen/Dense>

namespace kinbridge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Grid functions: rows are x nodes, columns are v nodes; flat index i * nv + j.
using Field = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Exec { Serial, Parallel };

inline Eigen::Map<const Vector> flat(const Field& f) { return {f.data(), f.size()}; }
inline Eigen::Map<Vector> flat(Field& f) { return {f.data(), f.size()}; }

// Log-sum-exp of a range, -inf for empty or all -inf input.
double log_sum_exp(const double* values, std::ptrdiff_t n);
inline double log_sum_exp(const Vector& v) { return log_sum_exp(v.data(), v.size()); }

} // namespace kinbridge
