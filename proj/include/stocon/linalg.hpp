#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace stocon {

using Vec = std::vector<double>;

/// Thrown when a map or field produces NaN/Inf; message carries run diagnostics.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a matrix inversion meets a singular or badly conditioned input.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

/// Small dense row-major matrix. System dimensions here stay below ~10, so
/// everything is direct: no views, no expression templates.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Mat: negative dimension");
  }
  static Mat identity(int n);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return a_.empty(); }
  bool square() const { return rows_ == cols_; }

  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, const Vec& x);
Mat operator+(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);
Mat scaled(const Mat& a, double s);
Mat transpose(const Mat& a);

/// Inverse of a square matrix: adjugate for n <= 3, LU with partial pivoting
/// beyond that. Rejects inputs whose inf-norm condition estimate exceeds 1e12.
Mat inverse(const Mat& a);

double norm_inf(const Mat& a);
double max_abs(const Mat& a);
bool is_finite(const Mat& a);

bool is_finite(const Vec& x);
double norm(const Vec& x);
double dot(const Vec& x, const Vec& y);
Vec operator+(const Vec& x, const Vec& y);
Vec operator-(const Vec& x, const Vec& y);
Vec scaled(const Vec& x, double s);
/// y + s*x
Vec add_scaled(const Vec& y, double s, const Vec& x);

}  // namespace stocon
