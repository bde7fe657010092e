#pragma once

// Multipartite pure states and product-operator algebra.
//
// A state lives on a tensor product of local spaces with dimensions `Dims`.
// Amplitudes are stored either densely (row-major, subsystem 0 most
// significant, so |1 2> on dims (3,3) sits at index 0*3 + 1) or as a sum of
// product terms, each a coefficient times one local vector per subsystem.
// Both representations have identical semantics; the factorized one keeps
// states such as (|1>+|2>)^{(x)N} + |3>^{(x)N} at O(N) memory.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wtrace/error.hpp"

namespace wtrace {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Complex = std::complex<double>;

/// Largest dense amplitude count `to_dense` accepts by default (256 MiB of
/// complex<double>).
inline constexpr std::size_t kDefaultDenseBudget = std::size_t{1} << 24;

/// Relative tolerance used to detect exactly proportional product terms.
inline constexpr double kCollinearityTol = 1e-12;

class Dims {
 public:
  explicit Dims(std::vector<int> local) : local_(std::move(local)) {
    if (local_.empty()) throw DimensionError("Dims: at least one subsystem required");
    for (int d : local_)
      if (d < 2) throw DimensionError("Dims: local dimension " + std::to_string(d) + " < 2");
  }
  Dims(std::initializer_list<int> local) : Dims(std::vector<int>(local)) {}

  static Dims uniform(std::size_t subsystems, int d) {
    return Dims(std::vector<int>(subsystems, d));
  }

  std::size_t size() const noexcept { return local_.size(); }
  int operator[](std::size_t i) const { return local_.at(i); }
  const std::vector<int>& local() const noexcept { return local_; }

  /// Product of local dimensions, or nullopt when it overflows size_t.
  std::optional<std::size_t> total() const noexcept {
    std::size_t t = 1;
    for (int d : local_) {
      auto ud = static_cast<std::size_t>(d);
      if (t > std::numeric_limits<std::size_t>::max() / ud) return std::nullopt;
      t *= ud;
    }
    return t;
  }

  /// Row-major strides; requires a representable total.
  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(local_.size(), 1);
    for (std::size_t i = local_.size() - 1; i > 0; --i)
      s[i - 1] = s[i] * static_cast<std::size_t>(local_[i]);
    return s;
  }

  bool operator==(const Dims&) const = default;

 private:
  std::vector<int> local_;
};

template <typename Scalar>
struct ProductTerm {
  Scalar coefficient{1};
  std::vector<Vector<Scalar>> factors;
};

template <typename Scalar>
class PureState {
 public:
  using RealScalar = typename Eigen::NumTraits<Scalar>::Real;
  using Term = ProductTerm<Scalar>;

  static PureState dense(Dims dims, Vector<Scalar> amplitudes) {
    auto total = dims.total();
    if (!total || static_cast<std::size_t>(amplitudes.size()) != *total)
      throw DimensionError("dense state: amplitude count does not match total dimension");
    if (!amplitudes.allFinite()) throw Error("dense state: non-finite amplitude");
    return PureState(std::move(dims), std::move(amplitudes));
  }

  static PureState product_sum(Dims dims, std::vector<Term> terms) {
    for (const auto& term : terms) {
      if (term.factors.size() != dims.size())
        throw DimensionError("product term: expected " + std::to_string(dims.size()) +
                             " local vectors, got " + std::to_string(term.factors.size()));
      for (std::size_t j = 0; j < dims.size(); ++j)
        if (term.factors[j].size() != dims[j])
          throw DimensionError("product term: local vector " + std::to_string(j) +
                               " has wrong dimension");
      bool finite = std::isfinite(std::abs(term.coefficient));
      for (const auto& f : term.factors) finite = finite && f.allFinite();
      if (!finite) throw Error("product term: non-finite entry");
    }
    return PureState(std::move(dims), std::move(terms));
  }

  const Dims& dims() const noexcept { return dims_; }
  bool is_dense() const noexcept { return std::holds_alternative<Vector<Scalar>>(rep_); }

  const Vector<Scalar>& amplitudes() const {
    if (!is_dense()) throw Error("state is not dense; call to_dense first");
    return std::get<Vector<Scalar>>(rep_);
  }
  const std::vector<Term>& terms() const {
    if (is_dense()) throw Error("state is dense; it has no product terms");
    return std::get<std::vector<Term>>(rep_);
  }

 private:
  PureState(Dims dims, Vector<Scalar> amplitudes) : dims_(std::move(dims)), rep_(std::move(amplitudes)) {}
  PureState(Dims dims, std::vector<Term> terms) : dims_(std::move(dims)), rep_(std::move(terms)) {}

  Dims dims_;
  std::variant<Vector<Scalar>, std::vector<Term>> rep_;
};

/// A d x d matrix acting on one subsystem.
template <typename Scalar>
struct LocalOperator {
  std::size_t subsystem;
  Matrix<Scalar> matrix;
};

/// Tensor product of local operators; identity on subsystems without a factor.
template <typename Scalar>
class ProductOperator {
 public:
  ProductOperator() = default;
  ProductOperator(std::initializer_list<LocalOperator<Scalar>> locals) {
    for (const auto& l : locals) set(l.subsystem, l.matrix);
  }

  ProductOperator& set(std::size_t subsystem, Matrix<Scalar> m) {
    if (m.rows() != m.cols()) throw DimensionError("local operator must be square");
    if (!factors_.emplace(subsystem, std::move(m)).second)
      throw DimensionError("product operator: two factors on subsystem " + std::to_string(subsystem));
    return *this;
  }

  const std::map<std::size_t, Matrix<Scalar>>& factors() const noexcept { return factors_; }
  bool is_identity() const noexcept { return factors_.empty(); }

  void validate(const Dims& dims) const {
    for (const auto& [j, m] : factors_) {
      if (j >= dims.size())
        throw DimensionError("operator factor on subsystem " + std::to_string(j) + " out of range");
      if (m.rows() != dims[j])
        throw DimensionError("operator factor on subsystem " + std::to_string(j) +
                             " has wrong local dimension");
    }
  }

  ProductOperator adjoint() const {
    ProductOperator out;
    for (const auto& [j, m] : factors_) out.factors_.emplace(j, m.adjoint());
    return out;
  }

 private:
  std::map<std::size_t, Matrix<Scalar>> factors_;
};

/// Linear combination of product operators.
template <typename Scalar>
class OperatorSum {
 public:
  using Entry = std::pair<Scalar, ProductOperator<Scalar>>;

  OperatorSum() = default;
  explicit OperatorSum(std::vector<Entry> terms) : terms_(std::move(terms)) {}
  OperatorSum(ProductOperator<Scalar> op) { terms_.emplace_back(Scalar{1}, std::move(op)); }  // NOLINT

  static OperatorSum identity() { return OperatorSum(ProductOperator<Scalar>{}); }

  OperatorSum& add(Scalar coefficient, ProductOperator<Scalar> op) {
    terms_.emplace_back(coefficient, std::move(op));
    return *this;
  }

  const std::vector<Entry>& terms() const noexcept { return terms_; }

  void validate(const Dims& dims) const {
    for (const auto& [c, op] : terms_) op.validate(dims);
  }

  OperatorSum adjoint() const {
    OperatorSum out;
    for (const auto& [c, op] : terms_) out.add(std::conj(c), op.adjoint());
    return out;
  }

  friend OperatorSum operator+(OperatorSum a, const OperatorSum& b) {
    a.terms_.insert(a.terms_.end(), b.terms_.begin(), b.terms_.end());
    return a;
  }
  friend OperatorSum operator*(Scalar alpha, OperatorSum a) {
    for (auto& [c, op] : a.terms_) c *= alpha;
    return a;
  }

 private:
  std::vector<Entry> terms_;
};

using State = PureState<Complex>;

// ---------------------------------------------------------------------------
// Construction helpers

template <typename Scalar>
Vector<Scalar> basis_vector(int dim, int index) {
  if (index < 0 || index >= dim) throw DimensionError("basis index out of range");
  Vector<Scalar> v = Vector<Scalar>::Zero(dim);
  v(index) = Scalar{1};
  return v;
}

template <typename Scalar>
Matrix<Scalar> basis_projector(int dim, int index) {
  if (index < 0 || index >= dim) throw DimensionError("basis index out of range");
  Matrix<Scalar> p = Matrix<Scalar>::Zero(dim, dim);
  p(index, index) = Scalar{1};
  return p;
}

/// Single product term with coefficient 1.
template <typename Scalar>
PureState<Scalar> tensor_product(const Dims& dims, std::vector<Vector<Scalar>> locals) {
  return PureState<Scalar>::product_sum(dims, {ProductTerm<Scalar>{Scalar{1}, std::move(locals)}});
}

namespace detail {

// v ~ lambda * u for some lambda; returns lambda when collinear.
template <typename Scalar>
std::optional<Scalar> collinear_ratio(const Vector<Scalar>& u, const Vector<Scalar>& v, double tol) {
  const auto uu = u.squaredNorm();
  const auto vv = v.squaredNorm();
  if (uu == 0 || vv == 0) return std::nullopt;
  const Scalar lambda = u.dot(v) / uu;
  if ((v - lambda * u).norm() > tol * std::sqrt(vv)) return std::nullopt;
  return lambda;
}

}  // namespace detail

/// Merge product terms whose factors are pairwise collinear; drop zero terms.
template <typename Scalar>
std::vector<ProductTerm<Scalar>> merge_proportional_terms(std::vector<ProductTerm<Scalar>> terms,
                                                          double tol = kCollinearityTol) {
  std::vector<ProductTerm<Scalar>> out;
  out.reserve(terms.size());
  for (auto& term : terms) {
    if (term.coefficient == Scalar{0}) continue;
    bool zero_factor = false;
    for (const auto& f : term.factors) zero_factor = zero_factor || f.squaredNorm() == 0;
    if (zero_factor) continue;

    bool merged = false;
    for (auto& kept : out) {
      Scalar scale{1};
      bool collinear = true;
      for (std::size_t j = 0; j < term.factors.size() && collinear; ++j) {
        auto ratio = detail::collinear_ratio(kept.factors[j], term.factors[j], tol);
        if (ratio) scale *= *ratio;
        else collinear = false;
      }
      if (collinear) {
        kept.coefficient += term.coefficient * scale;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(std::move(term));
  }
  std::erase_if(out, [](const auto& t) { return t.coefficient == Scalar{0}; });
  return out;
}

// ---------------------------------------------------------------------------
// Dense conversion

template <typename Scalar>
Vector<Scalar> kron(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  Vector<Scalar> out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

template <typename Scalar>
PureState<Scalar> to_dense(const PureState<Scalar>& s, std::size_t budget = kDefaultDenseBudget) {
  if (s.is_dense()) return s;
  const auto total = s.dims().total();
  if (!total || *total > budget)
    throw BudgetError("dense expansion exceeds amplitude budget of " + std::to_string(budget));
  Vector<Scalar> out = Vector<Scalar>::Zero(static_cast<Eigen::Index>(*total));
  for (const auto& term : s.terms()) {
    Vector<Scalar> acc = term.factors.front();
    for (std::size_t j = 1; j < term.factors.size(); ++j) acc = kron(acc, term.factors[j]);
    out += term.coefficient * acc;
  }
  return PureState<Scalar>::dense(s.dims(), std::move(out));
}

/// Dense amplitudes as one product term per non-zero basis amplitude.
template <typename Scalar>
PureState<Scalar> to_product_sum(const PureState<Scalar>& s) {
  if (!s.is_dense()) return s;
  const auto& dims = s.dims();
  const auto& amps = s.amplitudes();
  std::vector<ProductTerm<Scalar>> terms;
  std::vector<int> digits(dims.size(), 0);
  for (Eigen::Index idx = 0; idx < amps.size(); ++idx) {
    if (amps(idx) != Scalar{0}) {
      ProductTerm<Scalar> t{amps(idx), {}};
      for (std::size_t j = 0; j < dims.size(); ++j) t.factors.push_back(basis_vector<Scalar>(dims[j], digits[j]));
      terms.push_back(std::move(t));
    }
    for (std::size_t j = dims.size(); j-- > 0;) {
      if (++digits[j] < dims[j]) break;
      digits[j] = 0;
    }
  }
  return PureState<Scalar>::product_sum(dims, std::move(terms));
}

// ---------------------------------------------------------------------------
// Inner product

/// Sesquilinear <bra|ket>, conjugate-linear in the bra.
template <typename Scalar>
Scalar inner(const PureState<Scalar>& bra, const PureState<Scalar>& ket) {
  if (bra.dims() != ket.dims()) throw DimensionError("inner: dims mismatch");
  if (!bra.is_dense() && !ket.is_dense()) {
    Scalar sum{0};
    for (const auto& b : bra.terms())
      for (const auto& k : ket.terms()) {
        Scalar prod = std::conj(b.coefficient) * k.coefficient;
        for (std::size_t j = 0; j < b.factors.size() && prod != Scalar{0}; ++j)
          prod *= b.factors[j].dot(k.factors[j]);
        sum += prod;
      }
    return sum;
  }
  if (bra.is_dense() && ket.is_dense()) return bra.amplitudes().dot(ket.amplitudes());
  return to_dense(bra).amplitudes().dot(to_dense(ket).amplitudes());
}

template <typename Scalar>
typename PureState<Scalar>::RealScalar norm(const PureState<Scalar>& s) {
  if (s.is_dense()) return s.amplitudes().norm();
  return std::sqrt(std::max(std::real(inner(s, s)), typename PureState<Scalar>::RealScalar{0}));
}

template <typename Scalar>
PureState<Scalar> scaled(const PureState<Scalar>& s, Scalar alpha) {
  if (s.is_dense()) return PureState<Scalar>::dense(s.dims(), alpha * s.amplitudes());
  auto terms = s.terms();
  for (auto& t : terms) t.coefficient *= alpha;
  return PureState<Scalar>::product_sum(s.dims(), merge_proportional_terms(std::move(terms)));
}

template <typename Scalar>
PureState<Scalar> normalize(const PureState<Scalar>& s) {
  const auto n = norm(s);
  if (!(n > 0)) throw ZeroStateError("cannot normalize the zero state");
  return scaled(s, Scalar{1} / Scalar(n));
}

/// Sum of two states; stays factorized when both operands are.
template <typename Scalar>
PureState<Scalar> operator+(const PureState<Scalar>& a, const PureState<Scalar>& b) {
  if (a.dims() != b.dims()) throw DimensionError("state sum: dims mismatch");
  if (!a.is_dense() && !b.is_dense()) {
    auto terms = a.terms();
    terms.insert(terms.end(), b.terms().begin(), b.terms().end());
    return PureState<Scalar>::product_sum(a.dims(), merge_proportional_terms(std::move(terms)));
  }
  return PureState<Scalar>::dense(a.dims(), to_dense(a).amplitudes() + to_dense(b).amplitudes());
}

template <typename Scalar>
PureState<Scalar> operator*(Scalar alpha, const PureState<Scalar>& s) {
  return scaled(s, alpha);
}

// ---------------------------------------------------------------------------
// Operator application

namespace detail {

// Applies `m` to subsystem `j` of a dense row-major amplitude vector in place.
template <typename Scalar>
void apply_local_dense(Vector<Scalar>& amps, const Dims& dims, std::size_t j, const Matrix<Scalar>& m) {
  const auto d = static_cast<Eigen::Index>(dims[j]);
  Eigen::Index inner_stride = 1;
  for (std::size_t i = j + 1; i < dims.size(); ++i) inner_stride *= dims[i];
  const Eigen::Index outer = amps.size() / (d * inner_stride);
  const Matrix<Scalar> mt = m.transpose();
  Matrix<Scalar> block(inner_stride, d);
  for (Eigen::Index o = 0; o < outer; ++o) {
    Eigen::Map<Matrix<Scalar>> view(amps.data() + o * d * inner_stride, inner_stride, d);
    block.noalias() = view * mt;
    view = block;
  }
}

}  // namespace detail

template <typename Scalar>
PureState<Scalar> apply(const ProductOperator<Scalar>& op, const PureState<Scalar>& s) {
  op.validate(s.dims());
  if (s.is_dense()) {
    Vector<Scalar> amps = s.amplitudes();
    for (const auto& [j, m] : op.factors()) detail::apply_local_dense(amps, s.dims(), j, m);
    return PureState<Scalar>::dense(s.dims(), std::move(amps));
  }
  auto terms = s.terms();
  for (auto& t : terms)
    for (const auto& [j, m] : op.factors()) t.factors[j] = m * t.factors[j];
  return PureState<Scalar>::product_sum(s.dims(), merge_proportional_terms(std::move(terms)));
}

template <typename Scalar>
PureState<Scalar> apply(const OperatorSum<Scalar>& op, const PureState<Scalar>& s) {
  op.validate(s.dims());
  if (s.is_dense()) {
    Vector<Scalar> out = Vector<Scalar>::Zero(s.amplitudes().size());
    for (const auto& [c, product] : op.terms()) {
      if (c == Scalar{0}) continue;
      out += c * wtrace::apply(product, s).amplitudes();
    }
    return PureState<Scalar>::dense(s.dims(), std::move(out));
  }
  std::vector<ProductTerm<Scalar>> terms;
  for (const auto& [c, product] : op.terms()) {
    if (c == Scalar{0}) continue;
    for (auto t : s.terms()) {
      t.coefficient *= c;
      for (const auto& [j, m] : product.factors()) t.factors[j] = m * t.factors[j];
      terms.push_back(std::move(t));
    }
  }
  return PureState<Scalar>::product_sum(s.dims(), merge_proportional_terms(std::move(terms)));
}

/// Full matrix of a product operator; intended for small systems and checks.
template <typename Scalar>
Matrix<Scalar> dense_matrix(const ProductOperator<Scalar>& op, const Dims& dims,
                            std::size_t budget = std::size_t{1} << 12) {
  op.validate(dims);
  const auto total = dims.total();
  if (!total || *total > budget) throw BudgetError("dense operator matrix exceeds budget");
  Matrix<Scalar> out = Matrix<Scalar>::Ones(1, 1);
  for (std::size_t j = 0; j < dims.size(); ++j) {
    auto it = op.factors().find(j);
    const Matrix<Scalar> local =
        it == op.factors().end() ? Matrix<Scalar>::Identity(dims[j], dims[j]) : it->second;
    Matrix<Scalar> next(out.rows() * local.rows(), out.cols() * local.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c)
        next.block(r * local.rows(), c * local.cols(), local.rows(), local.cols()) = out(r, c) * local;
    out = std::move(next);
  }
  return out;
}

}  // namespace wtrace
