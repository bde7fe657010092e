#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace wtrace;
using oracle::cd;
using oracle::Vec;
using support::distance;
using support::to_vec;

namespace {

Vector<Complex> local(std::initializer_list<Complex> v) {
  Vector<Complex> out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto z : v) out(i++) = z;
  return out;
}

// Random product-sum state with a few terms and its dense reference.
State random_sop(const std::vector<int>& dims, int terms, std::mt19937_64& rng) {
  std::vector<ProductTerm<Complex>> ts;
  for (int t = 0; t < terms; ++t) {
    ProductTerm<Complex> term;
    term.coefficient = oracle::random_vector(1, rng)(0);
    for (int d : dims) term.factors.push_back(oracle::random_vector(d, rng));
    ts.push_back(term);
  }
  return State::product_sum(Dims(dims), ts);
}

std::vector<int> random_dims(std::mt19937_64& rng, int max_n) {
  std::uniform_int_distribution<int> n(1, max_n), d(2, 3);
  std::vector<int> dims(n(rng));
  for (auto& x : dims) x = d(rng);
  return dims;
}

}  // namespace

TEST_SUITE("qstate") {
  TEST_CASE("dims validation") {
    CHECK_THROWS_AS(Dims(std::vector<int>{}), DimensionError);
    CHECK_THROWS_AS(Dims({2, 1}), DimensionError);
    const Dims d{3, 2, 3};
    CHECK(d.total().value() == 18);
    CHECK(d.strides() == std::vector<std::size_t>{6, 3, 1});
    CHECK_FALSE(Dims::uniform(80, 3).total().has_value());
  }

  TEST_CASE("tensor product of basis vectors") {
    const auto s = tensor_product<Complex>(Dims{3, 3}, {basis_vector<Complex>(3, 0), basis_vector<Complex>(3, 0)});
    CHECK_FALSE(s.is_dense());
    REQUIRE(s.terms().size() == 1);
    CHECK(s.terms()[0].coefficient == Complex(1.0));
    const Vec v = to_vec(s);
    CHECK(v(0) == cd(1.0));
    CHECK(v.cwiseAbs().sum() == doctest::Approx(1.0));

    const auto t = tensor_product<Complex>(Dims{2, 2, 2}, {local({0, 1}), local({0, 1}), local({0, 1})});
    const Vec w = to_vec(t);
    for (int i = 0; i < 8; ++i) CHECK(w(i) == cd(i == 7 ? 1.0 : 0.0));

    CHECK_THROWS_AS(tensor_product<Complex>(Dims{3, 3}, {local({1, 0})}), DimensionError);
    CHECK_THROWS_AS(tensor_product<Complex>(Dims{3, 3}, {local({1, 0}), local({1, 0, 0})}), DimensionError);
  }

  TEST_CASE("hardy preselection built from product terms") {
    const double a = 1.0 / std::sqrt(3.0);
    const auto o = basis_vector<Complex>(2, 0), no = basis_vector<Complex>(2, 1);
    const Dims dims{2, 2};
    const auto s = scaled(tensor_product<Complex>(dims, {o, no}), Complex(a)) +
                   scaled(tensor_product<Complex>(dims, {no, o}), Complex(a)) +
                   scaled(tensor_product<Complex>(dims, {no, no}), Complex(a));
    Vec expected(4);
    expected << 0, a, a, a;
    CHECK(distance(to_vec(s), expected) < 1e-15);
    CHECK(norm(s) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("nparticle product-sum densifies to the expected pattern") {
    const Dims dims = Dims::uniform(3, 3);
    const auto s = tensor_product<Complex>(dims, {local({1, 1, 0}), local({1, 1, 0}), local({1, 1, 0})}) +
                   tensor_product<Complex>(dims, {local({0, 0, 1}), local({0, 0, 1}), local({0, 0, 1})});
    const Vec v = to_vec(s);
    int ones = 0;
    for (std::size_t i = 0; i < 27; ++i) {
      const auto dg = oracle::digits(i, {3, 3, 3});
      const bool boxes12 = dg[0] < 2 && dg[1] < 2 && dg[2] < 2;
      const bool all3 = dg[0] == 2 && dg[1] == 2 && dg[2] == 2;
      CHECK(v(i) == cd(boxes12 || all3 ? 1.0 : 0.0));
      ones += boxes12 || all3;
    }
    CHECK(ones == 9);

    const auto two = tensor_product<Complex>(Dims{3, 3}, {local({1, 1, 0}), local({1, 1, 0})}) +
                     tensor_product<Complex>(Dims{3, 3}, {local({0, 0, 1}), local({0, 0, 1})});
    CHECK(norm(two) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  }

  TEST_CASE("two-box overlaps and projections") {
    const double a = 1.0 / std::sqrt(3.0);
    Vec psi(4), phi(4);
    psi << a, -a, 0, a;
    phi << a, a, 0, a;
    const auto ps = support::to_state({2, 2}, psi), ph = support::to_state({2, 2}, phi);
    CHECK(std::abs(inner(ps, ps) - Complex(1.0)) < 1e-15);
    CHECK(std::abs(inner(ph, ps) - Complex(1.0 / 3.0)) < 1e-15);
    CHECK(std::abs(inner(to_product_sum(ph), to_product_sum(ps)) - Complex(1.0 / 3.0)) < 1e-15);

    const auto p11 = ProductOperator<Complex>{{0, basis_projector<Complex>(2, 0)}, {1, basis_projector<Complex>(2, 0)}};
    Vec e11 = Vec::Zero(4);
    e11(0) = a;
    CHECK(distance(to_vec(wtrace::apply(p11, ps)), e11) < 1e-15);
    CHECK(distance(to_vec(wtrace::apply(p11, to_product_sum(ps))), e11) < 1e-15);

    const auto p1 = ProductOperator<Complex>{{0, basis_projector<Complex>(2, 0)}};
    Vec e1(4);
    e1 << a, -a, 0, 0;
    CHECK(distance(to_vec(wtrace::apply(p1, ps)), e1) < 1e-15);

    CHECK(distance(to_vec(wtrace::apply(OperatorSum<Complex>::identity(), ps)), psi) < 1e-15);
  }

  TEST_CASE("hardy overlap") {
    const double a = 1.0 / std::sqrt(3.0);
    Vec psi(4), phi(4);
    psi << 0, a, a, a;
    phi << 0.5, -0.5, -0.5, 0.5;
    const auto v = inner(support::to_state({2, 2}, phi), support::to_state({2, 2}, psi));
    CHECK(std::abs(v - Complex(-1.0 / (2.0 * std::sqrt(3.0)))) < 1e-15);
  }

  TEST_CASE("zero state and budget errors") {
    const auto z = State::dense(Dims{2, 3}, Vector<Complex>::Zero(6));
    CHECK_THROWS_AS(normalize(z), ZeroStateError);
    const auto big = tensor_product<Complex>(Dims::uniform(30, 3), std::vector<Vector<Complex>>(30, local({1, 0, 0})));
    CHECK_THROWS_AS(to_dense(big), BudgetError);
    CHECK_THROWS_AS(State::dense(Dims{2, 2}, Vector<Complex>::Zero(3)), DimensionError);
    CHECK_THROWS_AS(inner(z, State::dense(Dims{3, 2}, Vector<Complex>::Zero(6))), DimensionError);
  }

  TEST_CASE("proportional terms merge") {
    const Dims dims{2, 2};
    const auto s = tensor_product<Complex>(dims, {local({1, 1}), local({0, 1})}) +
                   scaled(tensor_product<Complex>(dims, {local({2, 2}), local({0, 3})}), Complex(0.0, 1.0));
    CHECK(s.terms().size() == 1);
    Vec expected(4);
    expected << 0, cd(1, 6), 0, cd(1, 6);
    CHECK(distance(to_vec(s), expected) < 1e-14);
  }

  TEST_CASE("operator validation") {
    ProductOperator<Complex> op;
    op.set(0, basis_projector<Complex>(2, 0));
    CHECK_THROWS_AS(op.set(0, basis_projector<Complex>(2, 1)), DimensionError);
    CHECK_THROWS_AS(op.validate(Dims{3, 2}), DimensionError);
    ProductOperator<Complex> far;
    far.set(4, basis_projector<Complex>(2, 0));
    CHECK_THROWS_AS(far.validate(Dims{2, 2}), DimensionError);
  }

  TEST_CASE("random: dense and product-sum paths agree with the reference") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
      const auto dims = random_dims(rng, 6);
      const auto a = random_sop(dims, 3, rng), b = random_sop(dims, 2, rng);
      const Vec va = to_vec(a), vb = to_vec(b);
      const auto da = to_dense(a), db = to_dense(b);

      // inner
      const Complex ref = va.dot(vb);
      const double scale = va.norm() * vb.norm();
      CHECK(std::abs(inner(a, b) - ref) < 1e-12 * scale);
      CHECK(std::abs(inner(da, db) - ref) < 1e-12 * scale);
      CHECK(std::abs(inner(a, db) - ref) < 1e-12 * scale);
      CHECK(std::abs(inner(b, a) - std::conj(inner(a, b))) < 1e-12 * scale);

      // apply a random local product operator, compared with embedded dense matrices
      std::uniform_int_distribution<std::size_t> pick(0, dims.size() - 1);
      const std::size_t j = pick(rng), k = pick(rng);
      ProductOperator<Complex> op;
      oracle::Mat full = oracle::Mat::Identity(va.size(), va.size());
      for (std::size_t s : {j, k}) {
        if (op.factors().count(s)) continue;
        const oracle::Mat m = oracle::random_hermitian(dims[s], rng);
        op.set(s, m);
        full = oracle::embed(dims, s, m) * full;
      }
      const Vec expected = full * va;
      CHECK(distance(to_vec(wtrace::apply(op, a)), expected) < 1e-12 * expected.norm());
      CHECK(distance(to_vec(wtrace::apply(op, da)), expected) < 1e-12 * expected.norm());
      CHECK((dense_matrix(op, Dims(dims)) - full).cwiseAbs().maxCoeff() < 1e-13);

      // norm preserved by densification; round trip through basis terms
      CHECK(norm(da) == doctest::Approx(norm(a)).epsilon(1e-12));
      CHECK(distance(to_vec(to_product_sum(da)), va) < 1e-14 * va.norm());

      // linearity of apply
      const Complex alpha(0.3, -1.2), beta(-0.7, 0.4);
      const auto lhs = wtrace::apply(op, alpha * a + beta * b);
      const auto rhs = alpha * wtrace::apply(op, a) + beta * wtrace::apply(op, b);
      CHECK(distance(to_vec(lhs), to_vec(rhs)) < 1e-12 * (va.norm() + vb.norm()) * 4);
    }
  }

  TEST_CASE("operator sums on both representations") {
    std::mt19937_64 rng(5);
    const std::vector<int> dims{3, 2, 3};
    const auto a = random_sop(dims, 2, rng);
    OperatorSum<Complex> op;
    op.add({0.5, 0.0}, ProductOperator<Complex>{{0, oracle::random_hermitian(3, rng)}});
    op.add({0.0, 2.0}, ProductOperator<Complex>{{1, oracle::random_hermitian(2, rng)}, {2, oracle::random_hermitian(3, rng)}});
    op.add({1.0, 0.0}, ProductOperator<Complex>{});
    oracle::Mat full = oracle::Mat::Zero(18, 18);
    for (const auto& [c, p] : op.terms()) {
      oracle::Mat m = oracle::Mat::Identity(18, 18);
      for (const auto& [j, f] : p.factors()) m = oracle::embed(dims, j, f) * m;
      full += c * m;
    }
    const Vec expected = full * to_vec(a);
    CHECK(distance(to_vec(wtrace::apply(op, a)), expected) < 1e-12 * expected.norm());
    CHECK(distance(to_vec(wtrace::apply(op, to_dense(a))), expected) < 1e-12 * expected.norm());
  }
}
