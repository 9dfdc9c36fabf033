#include "sgwres/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace sgwres {

namespace {

std::uint64_t pack(std::span<const int> alpha) {
  std::uint64_t key = 0;
  for (int a : alpha) key = (key << 4) | static_cast<std::uint64_t>(a);
  return key;
}

void enumerate_degree(int dim, int degree, int var, MultiIndex& current,
                      std::vector<MultiIndex>& out) {
  if (var == dim - 1) {
    current[var] = degree;
    out.push_back(current);
    return;
  }
  for (int a = degree; a >= 0; --a) {
    current[var] = a;
    enumerate_degree(dim, degree - a, var + 1, current, out);
  }
  current[var] = 0;
}

struct TableKeyLess {
  bool operator()(const std::pair<int, int>& a,
                  const std::pair<int, int>& b) const {
    return a < b;
  }
};

}  // namespace

std::vector<MultiIndex> multi_indices_of_degree(int dim, int degree) {
  std::vector<MultiIndex> out;
  if (dim == 0) {
    if (degree == 0) out.emplace_back();
    return out;
  }
  MultiIndex current(dim, 0);
  enumerate_degree(dim, degree, 0, current, out);
  return out;
}

double factorial(std::span<const int> alpha) {
  double f = 1.0;
  for (int a : alpha)
    for (int k = 2; k <= a; ++k) f *= k;
  return f;
}

// ---------------------------------------------------------------------------
// MultiIndexTable
// ---------------------------------------------------------------------------

MultiIndexTable::MultiIndexTable(int dim, int order) : dim_(dim), order_(order) {
  std::unordered_map<std::uint64_t, int> lookup;
  offsets_.push_back(0);
  for (int k = 0; k <= order; ++k) {
    for (const auto& alpha : multi_indices_of_degree(dim, k)) {
      lookup.emplace(pack(alpha), static_cast<int>(degrees_.size()));
      for (int a : alpha) indices_.push_back(static_cast<std::int8_t>(a));
      degrees_.push_back(k);
    }
    offsets_.push_back(static_cast<int>(degrees_.size()));
  }

  const int n = size();
  MultiIndex sum(dim);
  for (int i = 0; i < n; ++i) {
    const int limit = count_up_to(order - degrees_[i]);
    for (int j = 0; j < limit; ++j) {
      for (int v = 0; v < dim; ++v)
        sum[v] = indices_[i * dim + v] + indices_[j * dim + v];
      products_.push_back({i, j, lookup.at(pack(sum))});
    }
  }
  std::stable_sort(products_.begin(), products_.end(),
                   [](const Product& a, const Product& b) { return a.out < b.out; });

  raise_.assign(static_cast<std::size_t>(n) * dim, -1);
  for (int i = 0; i < n; ++i) {
    if (degrees_[i] == order) continue;
    for (int v = 0; v < dim; ++v) {
      for (int w = 0; w < dim; ++w) sum[w] = indices_[i * dim + w];
      ++sum[v];
      raise_[i * dim + v] = lookup.at(pack(sum));
    }
  }
}

const MultiIndexTable& MultiIndexTable::get(int dim, int order) {
  if (dim < 0 || dim > 16) throw std::invalid_argument("jet dimension must be in [0, 16]");
  if (order < 0 || order > kMaxJetOrder)
    throw std::invalid_argument("jet order must be in [0, " +
                                std::to_string(kMaxJetOrder) + "]");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<MultiIndexTable>, TableKeyLess>
      tables;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = tables[{dim, order}];
  if (!slot) slot.reset(new MultiIndexTable(dim, order));
  return *slot;
}

std::span<const std::int8_t> MultiIndexTable::index(int pos) const {
  return {indices_.data() + static_cast<std::size_t>(pos) * dim_,
          static_cast<std::size_t>(dim_)};
}

int MultiIndexTable::find(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != dim_)
    throw std::invalid_argument("multi-index length does not match jet dimension");
  int deg = 0;
  for (int a : alpha) {
    if (a < 0) throw std::invalid_argument("negative multi-index entry");
    deg += a;
  }
  if (deg > order_) return -1;
  for (int pos = offsets_[deg]; pos < offsets_[deg + 1]; ++pos) {
    bool match = true;
    for (int v = 0; v < dim_ && match; ++v) match = indices_[pos * dim_ + v] == alpha[v];
    if (match) return pos;
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Jet
// ---------------------------------------------------------------------------

Jet::Jet(int dim, int order, int d, Point basepoint)
    : dim_(dim), order_(order), d_(d), basepoint_(std::move(basepoint)) {
  if (d <= 0) throw std::invalid_argument("jet matrix size must be positive");
  if (static_cast<int>(basepoint_.size()) != dim)
    throw std::invalid_argument("basepoint length does not match jet dimension");
  count_ = MultiIndexTable::get(dim, order).size();
  data_.assign(static_cast<std::size_t>(count_) * d * d, Complex(0.0));
}

Jet Jet::constant(const CMatrix& value, int dim, int order, Point basepoint) {
  if (value.rows() != value.cols()) throw std::invalid_argument("jet values must be square");
  Jet j(dim, order, static_cast<int>(value.rows()), std::move(basepoint));
  for (int r = 0; r < j.d_; ++r)
    for (int c = 0; c < j.d_; ++c) j.at(0, r, c) = value(r, c);
  return j;
}

Jet Jet::constant(Complex value, int dim, int order, Point basepoint) {
  Jet j(dim, order, 1, std::move(basepoint));
  j.data_[0] = value;
  return j;
}

Jet Jet::variable(int i, std::span<const double> basepoint, int order) {
  const int dim = static_cast<int>(basepoint.size());
  if (i < 0 || i >= dim) throw std::out_of_range("jet variable index out of range");
  Jet j(dim, order, 1, Point(basepoint.begin(), basepoint.end()));
  j.data_[0] = basepoint[i];
  if (order >= 1) j.data_[1 + i] = 1.0;  // degree-1 block is e_0, e_1, ... in order
  return j;
}

Jet Jet::identity(int d, int dim, int order, Point basepoint) {
  Jet j(dim, order, d, std::move(basepoint));
  for (int r = 0; r < d; ++r) j.at(0, r, r) = 1.0;
  return j;
}

CMatrix Jet::coeff(std::span<const int> alpha) const {
  const int pos = MultiIndexTable::get(dim_, order_).find(alpha);
  if (pos < 0) throw std::out_of_range("multi-index exceeds jet order");
  CMatrix m(d_, d_);
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) m(r, c) = at(pos, r, c);
  return m;
}

Complex Jet::coeff_scalar(std::span<const int> alpha) const {
  if (d_ != 1) throw std::invalid_argument("coeff_scalar on a matrix-valued jet");
  const int pos = MultiIndexTable::get(dim_, order_).find(alpha);
  if (pos < 0) throw std::out_of_range("multi-index exceeds jet order");
  return data_[pos];
}

void Jet::set_coeff(std::span<const int> alpha, const CMatrix& value) {
  const int pos = MultiIndexTable::get(dim_, order_).find(alpha);
  if (pos < 0) throw std::out_of_range("multi-index exceeds jet order");
  if (value.rows() != d_ || value.cols() != d_)
    throw std::invalid_argument("coefficient matrix has the wrong size");
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) at(pos, r, c) = value(r, c);
}

void Jet::set_coeff(std::span<const int> alpha, Complex value) {
  if (d_ != 1) throw std::invalid_argument("scalar set_coeff on a matrix-valued jet");
  const int pos = MultiIndexTable::get(dim_, order_).find(alpha);
  if (pos < 0) throw std::out_of_range("multi-index exceeds jet order");
  data_[pos] = value;
}

CMatrix Jet::value() const {
  CMatrix m(d_, d_);
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) m(r, c) = at(0, r, c);
  return m;
}

Complex Jet::scalar_value() const {
  if (d_ != 1) throw std::invalid_argument("scalar_value on a matrix-valued jet");
  return data_[0];
}

Jet Jet::entry(int r, int c) const {
  if (r < 0 || r >= d_ || c < 0 || c >= d_) throw std::out_of_range("jet entry out of range");
  Jet out(dim_, order_, 1, basepoint_);
  for (int pos = 0; pos < count_; ++pos) out.data_[pos] = at(pos, r, c);
  return out;
}

Jet Jet::truncated(int order) const {
  if (order > order_) throw std::invalid_argument("cannot truncate a jet to a higher order");
  if (order == order_) return *this;
  Jet out(dim_, order, d_, basepoint_);
  std::copy_n(data_.begin(), out.data_.size(), out.data_.begin());
  return out;
}

void Jet::check_compatible(const Jet& rhs, const char* op) const {
  if (empty() || rhs.empty()) throw std::invalid_argument(std::string(op) + ": empty jet");
  if (dim_ != rhs.dim_) throw std::invalid_argument(std::string(op) + ": dimension mismatch");
  if (basepoint_ != rhs.basepoint_)
    throw std::invalid_argument(std::string(op) + ": basepoint mismatch");
}

Jet& Jet::operator+=(const Jet& rhs) {
  check_compatible(rhs, "jet_add");
  if (d_ != rhs.d_) throw std::invalid_argument("jet_add: matrix size mismatch");
  if (rhs.order_ < order_) *this = truncated(rhs.order_);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& rhs) {
  check_compatible(rhs, "jet_sub");
  if (d_ != rhs.d_) throw std::invalid_argument("jet_sub: matrix size mismatch");
  if (rhs.order_ < order_) *this = truncated(rhs.order_);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

Jet& Jet::operator*=(Complex s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  a.check_compatible(b, "jet_mul");
  const int order = std::min(a.order_, b.order_);
  const auto& table = MultiIndexTable::get(a.dim_, order);

  if (a.d_ == 1 || b.d_ == 1) {
    const Jet& s = a.d_ == 1 ? a : b;
    const Jet& m = a.d_ == 1 ? b : a;
    const int d = m.d_;
    const int dd = d * d;
    Jet out(a.dim_, order, d, a.basepoint_);
    for (const auto& p : table.products()) {
      const int is = a.d_ == 1 ? p.lhs : p.rhs;
      const int im = a.d_ == 1 ? p.rhs : p.lhs;
      const Complex c = s.data_[is];
      if (c == Complex(0.0)) continue;
      const Complex* src = m.data_.data() + static_cast<std::size_t>(im) * dd;
      Complex* dst = out.data_.data() + static_cast<std::size_t>(p.out) * dd;
      for (int k = 0; k < dd; ++k) dst[k] += c * src[k];
    }
    return out;
  }

  if (a.d_ != b.d_) throw std::invalid_argument("jet_mul: matrix size mismatch");
  const int d = a.d_;
  const int dd = d * d;
  Jet out(a.dim_, order, d, a.basepoint_);
  // Skip zero coefficients; many symbol jets are sparse in the multi-index.
  std::vector<char> a_zero(a.count_), b_zero(b.count_);
  for (int i = 0; i < a.count_; ++i)
    a_zero[i] = std::all_of(a.data_.begin() + i * dd, a.data_.begin() + (i + 1) * dd,
                            [](const Complex& z) { return z == Complex(0.0); });
  for (int i = 0; i < b.count_; ++i)
    b_zero[i] = std::all_of(b.data_.begin() + i * dd, b.data_.begin() + (i + 1) * dd,
                            [](const Complex& z) { return z == Complex(0.0); });
  for (const auto& p : table.products()) {
    if (a_zero[p.lhs] || b_zero[p.rhs]) continue;
    const Complex* x = a.data_.data() + static_cast<std::size_t>(p.lhs) * dd;
    const Complex* y = b.data_.data() + static_cast<std::size_t>(p.rhs) * dd;
    Complex* z = out.data_.data() + static_cast<std::size_t>(p.out) * dd;
    for (int r = 0; r < d; ++r) {
      for (int k = 0; k < d; ++k) {
        const Complex xv = x[r * d + k];
        if (xv == Complex(0.0)) continue;
        const Complex* yrow = y + k * d;
        Complex* zrow = z + r * d;
        for (int c = 0; c < d; ++c) zrow[c] += xv * yrow[c];
      }
    }
  }
  return out;
}

Jet operator*(const CMatrix& m, const Jet& a) {
  if (m.rows() != a.d_ || m.cols() != a.d_)
    throw std::invalid_argument("matrix-jet product: size mismatch");
  Jet out(a.dim_, a.order_, a.d_, a.basepoint_);
  const int d = a.d_;
  for (int pos = 0; pos < a.count_; ++pos)
    for (int r = 0; r < d; ++r)
      for (int k = 0; k < d; ++k) {
        const Complex mv = m(r, k);
        if (mv == Complex(0.0)) continue;
        for (int c = 0; c < d; ++c) out.at(pos, r, c) += mv * a.at(pos, k, c);
      }
  return out;
}

Jet operator*(const Jet& a, const CMatrix& m) {
  if (m.rows() != a.d_ || m.cols() != a.d_)
    throw std::invalid_argument("jet-matrix product: size mismatch");
  Jet out(a.dim_, a.order_, a.d_, a.basepoint_);
  const int d = a.d_;
  for (int pos = 0; pos < a.count_; ++pos)
    for (int r = 0; r < d; ++r)
      for (int k = 0; k < d; ++k) {
        const Complex av = a.at(pos, r, k);
        if (av == Complex(0.0)) continue;
        for (int c = 0; c < d; ++c) out.at(pos, r, c) += av * m(k, c);
      }
  return out;
}

Jet Jet::tensor(const CMatrix& m) const {
  if (d_ != 1) throw std::invalid_argument("tensor requires a scalar jet");
  if (m.rows() != m.cols()) throw std::invalid_argument("tensor requires a square matrix");
  const int d = static_cast<int>(m.rows());
  Jet out(dim_, order_, d, basepoint_);
  for (int pos = 0; pos < count_; ++pos) {
    const Complex s = data_[pos];
    if (s == Complex(0.0)) continue;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) out.at(pos, r, c) = s * m(r, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

Jet jet_variable(int i, double value, int dim, int order) {
  if (i < 0 || i >= dim) throw std::out_of_range("jet variable index out of range");
  Point base(dim, 0.0);
  base[i] = value;
  return Jet::variable(i, base, order);
}

Jet jet_add(const Jet& a, const Jet& b) { return a + b; }

Jet jet_mul(const Jet& a, const Jet& b) { return a * b; }

Jet jet_inv(const Jet& a) {
  if (a.empty()) throw std::invalid_argument("jet_inv: empty jet");
  const CMatrix lead = a.value();
  Eigen::FullPivLU<CMatrix> lu(lead);
  if (!lu.isInvertible() || lu.rcond() < 1e-14)
    throw std::domain_error("jet_inv: singular leading coefficient");
  const CMatrix lead_inv = lu.inverse();

  // a = A0 (I + X) with X nilpotent; a^{-1} = (I - X + X^2 - ...) A0^{-1}.
  Jet x = lead_inv * a;
  for (int r = 0; r < a.size(); ++r)
    for (int c = 0; c < a.size(); ++c) x.at(0, r, c) = 0.0;

  Jet series = Jet::identity(a.size(), a.dim(), a.order(), a.basepoint());
  const Jet one = series;
  for (int k = 0; k < a.order(); ++k) series = one - x * series;
  return series * lead_inv;
}

CMatrix extract_partial(const Jet& a, std::span<const int> alpha) {
  int deg = 0;
  for (int v : alpha) deg += v;
  if (deg > a.order()) throw std::out_of_range("extract_partial: |alpha| exceeds jet order");
  return a.coeff(alpha) * factorial(alpha);
}

Jet derivative(const Jet& a, int var) {
  if (var < 0 || var >= a.dim()) throw std::out_of_range("derivative: variable out of range");
  if (a.order() == 0) throw std::invalid_argument("derivative: jet order exhausted");
  const auto& table = MultiIndexTable::get(a.dim(), a.order());
  Jet out(a.dim(), a.order() - 1, a.size(), a.basepoint());
  const int d = a.size();
  for (int pos = 0; pos < out.coefficient_count(); ++pos) {
    const int up = table.raise(pos, var);
    const double factor = table.index(pos)[var] + 1;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) out.at(pos, r, c) = factor * a.at(up, r, c);
  }
  return out;
}

Jet derivative(const Jet& a, std::span<const int> alpha) {
  if (static_cast<int>(alpha.size()) != a.dim())
    throw std::invalid_argument("derivative: multi-index length mismatch");
  Jet out = a;
  for (int v = 0; v < a.dim(); ++v)
    for (int k = 0; k < alpha[v]; ++k) out = derivative(out, v);
  return out;
}

Jet compose_univariate(const Jet& a, std::span<const Complex> taylor) {
  if (a.size() != 1) throw std::invalid_argument("compose_univariate requires a scalar jet");
  if (static_cast<int>(taylor.size()) < a.order() + 1)
    throw std::invalid_argument("compose_univariate: not enough Taylor coefficients");
  Jet h = a;
  h.at(0, 0, 0) = 0.0;
  // Horner in the nilpotent part h.
  Jet result = Jet::constant(taylor[a.order()], a.dim(), a.order(), a.basepoint());
  for (int k = a.order() - 1; k >= 0; --k) {
    result = result * h;
    result.at(0, 0, 0) += taylor[k];
  }
  return result;
}

Jet exp(const Jet& a) {
  const Complex e = std::exp(a.scalar_value());
  std::vector<Complex> t(a.order() + 1);
  double fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) fact *= k;
    t[k] = e / fact;
  }
  return compose_univariate(a, t);
}

Jet log(const Jet& a) {
  const Complex a0 = a.scalar_value();
  if (a0 == Complex(0.0)) throw std::domain_error("log of a jet with zero value");
  std::vector<Complex> t(a.order() + 1);
  t[0] = std::log(a0);
  for (int k = 1; k <= a.order(); ++k)
    t[k] = (k % 2 == 1 ? 1.0 : -1.0) / (static_cast<double>(k) * std::pow(a0, k));
  return compose_univariate(a, t);
}

Jet pow(const Jet& a, double p) {
  const Complex a0 = a.scalar_value();
  if (a0 == Complex(0.0)) throw std::domain_error("pow of a jet with zero value");
  std::vector<Complex> t(a.order() + 1);
  Complex binom = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    t[k] = binom * std::pow(a0, p - k);
    binom *= (p - k) / (k + 1.0);
  }
  return compose_univariate(a, t);
}

Jet sqrt(const Jet& a) { return pow(a, 0.5); }

Jet reciprocal(const Jet& a) { return pow(a, -1.0); }

Jet sin(const Jet& a) {
  const Complex a0 = a.scalar_value();
  const Complex cycle[4] = {std::sin(a0), std::cos(a0), -std::sin(a0), -std::cos(a0)};
  std::vector<Complex> t(a.order() + 1);
  double fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) fact *= k;
    t[k] = cycle[k % 4] / fact;
  }
  return compose_univariate(a, t);
}

Jet cos(const Jet& a) {
  const Complex a0 = a.scalar_value();
  const Complex cycle[4] = {std::cos(a0), -std::sin(a0), -std::cos(a0), std::sin(a0)};
  std::vector<Complex> t(a.order() + 1);
  double fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    if (k > 0) fact *= k;
    t[k] = cycle[k % 4] / fact;
  }
  return compose_univariate(a, t);
}

Jet embed(const Jet& a, int offset, int total_dim, Point basepoint) {
  if (offset < 0 || offset + a.dim() > total_dim)
    throw std::invalid_argument("embed: variable range out of bounds");
  if (static_cast<int>(basepoint.size()) != total_dim)
    throw std::invalid_argument("embed: basepoint length mismatch");
  for (int v = 0; v < a.dim(); ++v)
    if (basepoint[offset + v] != a.basepoint()[v])
      throw std::invalid_argument("embed: basepoint mismatch");
  const auto& src = MultiIndexTable::get(a.dim(), a.order());
  const auto& dst = MultiIndexTable::get(total_dim, a.order());
  Jet out(total_dim, a.order(), a.size(), std::move(basepoint));
  MultiIndex alpha(total_dim, 0);
  const int d = a.size();
  for (int pos = 0; pos < a.coefficient_count(); ++pos) {
    std::fill(alpha.begin(), alpha.end(), 0);
    const auto idx = src.index(pos);
    for (int v = 0; v < a.dim(); ++v) alpha[offset + v] = idx[v];
    const int target = dst.find(alpha);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) out.at(target, r, c) = a.at(pos, r, c);
  }
  return out;
}

JetGrid to_grid(const Jet& a) {
  JetGrid grid(a.size());
  for (int r = 0; r < a.size(); ++r)
    for (int c = 0; c < a.size(); ++c) grid[r].push_back(a.entry(r, c));
  return grid;
}

Jet from_grid(const JetGrid& grid) {
  const int d = static_cast<int>(grid.size());
  if (d == 0) throw std::invalid_argument("from_grid: empty grid");
  const Jet& ref = grid[0][0];
  int order = ref.order();
  for (const auto& row : grid)
    for (const auto& e : row) order = std::min(order, e.order());
  Jet out(ref.dim(), order, d, ref.basepoint());
  for (int r = 0; r < d; ++r) {
    if (static_cast<int>(grid[r].size()) != d) throw std::invalid_argument("from_grid: ragged grid");
    for (int c = 0; c < d; ++c) {
      const Jet& e = grid[r][c];
      if (e.size() != 1) throw std::invalid_argument("from_grid: entries must be scalar jets");
      if (e.basepoint() != ref.basepoint()) throw std::invalid_argument("from_grid: basepoint mismatch");
      for (int pos = 0; pos < out.coefficient_count(); ++pos) out.at(pos, r, c) = e.at(pos, 0, 0);
    }
  }
  return out;
}

}  // namespace sgwres
