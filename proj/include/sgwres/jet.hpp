#pragma once

// Truncated multivariate Taylor data with complex matrix values.
//
// A Jet of order K in `dim` variables stores, for every multi-index |alpha| <= K,
// the d x d matrix (1/alpha!) * (d^alpha f)(basepoint). Coefficients are kept in
// graded order, so truncating to a lower order is a prefix of the storage.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sgwres {

using Complex = std::complex<double>;
using Point = std::vector<double>;
using MultiIndex = std::vector<int>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr int kMaxJetOrder = 4;

/// Graded multi-index enumeration and the product/derivative tables for one
/// (dim, order) pair. Tables are built once and shared; they are immutable.
class MultiIndexTable {
 public:
  struct Product {
    std::int32_t lhs;
    std::int32_t rhs;
    std::int32_t out;
  };

  static const MultiIndexTable& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(degrees_.size()); }
  /// Number of multi-indices with |alpha| <= k.
  int count_up_to(int k) const { return offsets_[k + 1]; }
  std::span<const std::int8_t> index(int pos) const;
  int degree(int pos) const { return degrees_[pos]; }
  /// Position of alpha, or -1 if |alpha| > order.
  int find(std::span<const int> alpha) const;
  /// Pairs (i, j) with |alpha_i| + |alpha_j| <= order, sorted by output position.
  const std::vector<Product>& products() const { return products_; }
  /// Position of alpha_pos + e_var, or -1 when that exceeds the order.
  int raise(int pos, int var) const { return raise_[pos * dim_ + var]; }

 private:
  MultiIndexTable(int dim, int order);

  int dim_;
  int order_;
  std::vector<std::int8_t> indices_;  // size() * dim_
  std::vector<int> degrees_;
  std::vector<int> offsets_;
  std::vector<Product> products_;
  std::vector<int> raise_;
};

class Jet {
 public:
  Jet() = default;
  /// Zero jet.
  Jet(int dim, int order, int d, Point basepoint);

  static Jet constant(const CMatrix& value, int dim, int order, Point basepoint);
  static Jet constant(Complex value, int dim, int order, Point basepoint);
  /// Jet of the coordinate function x_i (scalar, d = 1).
  static Jet variable(int i, std::span<const double> basepoint, int order);
  /// Identity-matrix valued constant jet.
  static Jet identity(int d, int dim, int order, Point basepoint);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int size() const { return d_; }
  bool empty() const { return d_ == 0; }
  const Point& basepoint() const { return basepoint_; }
  int coefficient_count() const { return count_; }

  /// Taylor-normalized coefficient at alpha. Throws if |alpha| > order.
  CMatrix coeff(std::span<const int> alpha) const;
  Complex coeff_scalar(std::span<const int> alpha) const;
  void set_coeff(std::span<const int> alpha, const CMatrix& value);
  void set_coeff(std::span<const int> alpha, Complex value);

  CMatrix value() const;
  Complex scalar_value() const;

  /// Raw graded storage access: coefficient at position pos, entry (r, c).
  Complex& at(int pos, int r, int c) { return data_[(pos * d_ + r) * d_ + c]; }
  const Complex& at(int pos, int r, int c) const {
    return data_[(pos * d_ + r) * d_ + c];
  }
  std::span<const Complex> data() const { return data_; }

  /// Scalar jet of matrix entry (r, c).
  Jet entry(int r, int c) const;

  Jet truncated(int order) const;

  Jet& operator+=(const Jet& rhs);
  Jet& operator-=(const Jet& rhs);
  Jet& operator*=(Complex s);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, Complex s) { return a *= s; }
  friend Jet operator*(Complex s, Jet a) { return a *= s; }
  friend Jet operator*(Jet a, double s) { return a *= Complex(s); }
  friend Jet operator*(double s, Jet a) { return a *= Complex(s); }
  /// Truncated Cauchy product. A scalar (d = 1) operand scales the other.
  friend Jet operator*(const Jet& a, const Jet& b);

  /// Constant matrix applied on the left / right of every coefficient.
  friend Jet operator*(const CMatrix& m, const Jet& a);
  friend Jet operator*(const Jet& a, const CMatrix& m);

  /// Scalar jet times constant matrix.
  Jet tensor(const CMatrix& m) const;

 private:
  void check_compatible(const Jet& rhs, const char* op) const;

  int dim_ = 0;
  int order_ = 0;
  int d_ = 0;
  int count_ = 0;
  Point basepoint_;
  std::vector<Complex> data_;
};

Jet jet_variable(int i, double value, int dim, int order);
Jet jet_add(const Jet& a, const Jet& b);
Jet jet_mul(const Jet& a, const Jet& b);
/// Neumann-series inverse; throws std::domain_error on a singular leading coefficient.
Jet jet_inv(const Jet& a);
/// alpha! * coeff(alpha), i.e. (d^alpha f)(basepoint).
CMatrix extract_partial(const Jet& a, std::span<const int> alpha);

/// d/dx_var; the result has order one less.
Jet derivative(const Jet& a, int var);
/// d^alpha; the result has order reduced by |alpha|.
Jet derivative(const Jet& a, std::span<const int> alpha);

/// Composition f(a) for scalar a, given the Taylor coefficients f^(k)(a0)/k!, k <= order.
Jet compose_univariate(const Jet& a, std::span<const Complex> taylor);
Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, double p);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet reciprocal(const Jet& a);

/// Re-express a jet in a larger variable set: variable i of `a` becomes
/// variable offset + i of a jet in `total_dim` variables at `basepoint`.
Jet embed(const Jet& a, int offset, int total_dim, Point basepoint);

/// Matrix-of-scalar-jets helpers.
using JetGrid = std::vector<std::vector<Jet>>;
JetGrid to_grid(const Jet& a);
Jet from_grid(const JetGrid& grid);

/// Multi-indices of length dim with |alpha| == degree, graded-lex order.
std::vector<MultiIndex> multi_indices_of_degree(int dim, int degree);
double factorial(std::span<const int> alpha);

}  // namespace sgwres
