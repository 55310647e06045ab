#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairrank {

using Point = Eigen::VectorXd;

struct PointPair {
  Point first;
  Point second;
};

inline PointPair swap(const PointPair& p) { return {p.second, p.first}; }

// A ranking rule or any other function on X^2.
using PairFunction = std::function<double(const Point&, const Point&)>;

// Monte Carlo value with standard error; std_error is 0 for exact values.
struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n_terms = 0;
};

// Bad arguments, malformed files, unsupported combinations. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Dense storage would exceed the configured memory cap.
class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Quadrature grid too coarse for the kernel width.
class ResolutionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Singular systems, non-finite values, failed convergence. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Eigen::MatrixXd x;  // n x d, one point per row
  Eigen::VectorXd y;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  Point point(int i) const { return x.row(i).transpose(); }
};

void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace pairrank
