#include "stocon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stocon {

namespace {
constexpr double kMaxCondition = 1e12;

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}
}  // namespace

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Mat m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw std::invalid_argument("Mat::from_rows: ragged rows");
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("Mat multiply: inner dimension mismatch");
  Mat out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Vec operator*(const Mat& a, const Vec& x) {
  if (a.cols() != static_cast<int>(x.size()))
    throw std::invalid_argument("Mat*Vec: dimension mismatch");
  Vec out(static_cast<size_t>(a.rows()), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

Mat operator+(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "Mat add");
  Mat out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Mat operator-(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "Mat subtract");
  Mat out = a;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Mat scaled(const Mat& a, double s) {
  Mat out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double norm_inf(const Mat& a) {
  double best = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

double max_abs(const Mat& a) {
  double best = 0.0;
  for (double v : a.data()) best = std::max(best, std::abs(v));
  return best;
}

bool is_finite(const Mat& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

bool is_finite(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

double norm(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

Vec operator+(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("Vec add: dimension mismatch");
  Vec out = x;
  for (size_t i = 0; i < y.size(); ++i) out[i] += y[i];
  return out;
}

Vec operator-(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("Vec subtract: dimension mismatch");
  Vec out = x;
  for (size_t i = 0; i < y.size(); ++i) out[i] -= y[i];
  return out;
}

Vec scaled(const Vec& x, double s) {
  Vec out = x;
  for (double& v : out) v *= s;
  return out;
}

Vec add_scaled(const Vec& y, double s, const Vec& x) {
  if (x.size() != y.size()) throw std::invalid_argument("add_scaled: dimension mismatch");
  Vec out = y;
  for (size_t i = 0; i < x.size(); ++i) out[i] += s * x[i];
  return out;
}

namespace {

Mat inverse_adjugate(const Mat& a) {
  const int n = a.rows();
  Mat inv(n, n);
  double det = 0.0;
  if (n == 1) {
    det = a(0, 0);
    if (det == 0.0) throw SingularMatrixError("inverse: singular 1x1 matrix");
    inv(0, 0) = 1.0 / det;
  } else if (n == 2) {
    det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (det == 0.0) throw SingularMatrixError("inverse: singular 2x2 matrix");
    inv(0, 0) = a(1, 1) / det;
    inv(0, 1) = -a(0, 1) / det;
    inv(1, 0) = -a(1, 0) / det;
    inv(1, 1) = a(0, 0) / det;
  } else {
    auto cof = [&](int i, int j) {
      const int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
      const int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
      return a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    };
    det = a(0, 0) * cof(0, 0) + a(0, 1) * cof(0, 1) + a(0, 2) * cof(0, 2);
    if (det == 0.0) throw SingularMatrixError("inverse: singular 3x3 matrix");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) inv(i, j) = cof(j, i) / det;
  }
  return inv;
}

Mat inverse_lu(const Mat& a) {
  const int n = a.rows();
  Mat lu = a;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;

  for (int k = 0; k < n; ++k) {
    int pivot = k;
    double best = std::abs(lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(lu(i, k));
      if (v > best) {
        best = v;
        pivot = i;
      }
    }
    if (best == 0.0) throw SingularMatrixError("inverse: zero pivot in LU factorization");
    if (pivot != k) {
      for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(pivot, j));
      std::swap(perm[k], perm[pivot]);
    }
    for (int i = k + 1; i < n; ++i) {
      lu(i, k) /= lu(k, k);
      const double m = lu(i, k);
      for (int j = k + 1; j < n; ++j) lu(i, j) -= m * lu(k, j);
    }
  }

  Mat inv(n, n);
  Vec col(static_cast<size_t>(n));
  for (int rhs = 0; rhs < n; ++rhs) {
    for (int i = 0; i < n; ++i) col[i] = perm[i] == rhs ? 1.0 : 0.0;
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) col[i] -= lu(i, j) * col[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) col[i] -= lu(i, j) * col[j];
      col[i] /= lu(i, i);
    }
    for (int i = 0; i < n; ++i) inv(i, rhs) = col[i];
  }
  return inv;
}

}  // namespace

Mat inverse(const Mat& a) {
  if (!a.square() || a.rows() == 0) throw std::invalid_argument("inverse: matrix must be square");
  if (!is_finite(a)) throw NonFiniteError("inverse: non-finite entries");
  const Mat inv = a.rows() <= 3 ? inverse_adjugate(a) : inverse_lu(a);
  if (!is_finite(inv)) throw SingularMatrixError("inverse: result overflowed (singular input)");
  const double cond = norm_inf(a) * norm_inf(inv);
  if (!(cond <= kMaxCondition))
    throw SingularMatrixError("inverse: condition estimate " + std::to_string(cond) + " exceeds 1e12");
  return inv;
}

}  // namespace stocon
