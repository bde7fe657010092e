#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wtrace/pointer.hpp"

using namespace wtrace;
using oracle::cd;
using oracle::Mat;
using oracle::Vec;
using support::query;

namespace {

TimeSlice builtin_slice(const std::string& name) {
  const auto doc = builtin(name);
  return slice(build_two_state_vector(doc), doc.times.values().front());
}

// Dense slice vectors for the reference computations.
struct DenseSlice {
  std::vector<int> dims;
  Vec ket;  // forward
  Vec bra;  // backward ket
};

DenseSlice dense(const TimeSlice& s) {
  return {s.forward.dims().local(), support::to_vec(s.forward), support::to_vec(s.backward)};
}

PointerConfig config_for(double g, double sigma = 1.0, int points = 4096) {
  return {PointerGrid(8.0 * sigma + g, points), sigma};
}

// Exact <x1 x2> for two pointers coupled to P_a and P_b (commuting, disjoint).
double sequential_cross(const DenseSlice& d, const std::vector<int>& qa, const std::vector<int>& qb, double g,
                        double sigma) {
  const Mat pa = oracle::projector(d.dims, qa), pb = oracle::projector(d.dims, qb);
  const Mat id = Mat::Identity(pa.rows(), pa.cols());
  cd b[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) b[i][j] = d.bra.dot((i ? pa : id - pa) * (j ? pb : id - pb) * d.ket);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const cd w = std::conj(b[i][j]) * b[k][l];
          num += std::real(w * oracle::gauss_position(i * g, k * g, sigma) * oracle::gauss_position(j * g, l * g, sigma));
          den += std::real(w * oracle::gauss_overlap(i * g, k * g, sigma) * oracle::gauss_overlap(j * g, l * g, sigma));
        }
  return num / den;
}

}  // namespace

TEST_SUITE("pointer") {
  TEST_CASE("grid and gaussian preparation") {
    CHECK_THROWS_AS(PointerGrid(8.0, 32), Error);
    CHECK_THROWS_AS(PointerGrid(-1.0, 128), Error);
    const PointerGrid grid(10.0, 1024);
    const auto p = prepare_gaussian(grid, 1.0);
    CHECK(std::abs(pointer_norm(p) - 1.0) < 1e-10);
    CHECK(std::abs(mean_position(p)) < 1e-12);

    // second moment by direct quadrature of the constructed amplitudes
    double m2 = 0.0;
    const double dx = grid.spacing();
    for (int i = 0; i < grid.points; ++i) {
      const double w = (i == 0 || i == grid.points - 1) ? 0.5 : 1.0;
      m2 += w * dx * grid.x(i) * grid.x(i) * std::norm(p.amplitudes(i));
    }
    CHECK(position_variance(p) == doctest::Approx(m2).epsilon(1e-3));
    CHECK(position_variance(p) == doctest::Approx(1.0).epsilon(1e-3));

    CHECK_THROWS_AS(prepare_gaussian(grid, 2.0), Error);         // L < 8 sigma
    CHECK_THROWS_AS(prepare_gaussian(PointerGrid(8.0, 64), 0.4), Error);  // sigma < 2 dx
  }

  TEST_CASE("translation: grid shift and analytic evaluation agree") {
    const PointerGrid grid(9.0, 4096);
    const double g = 17 * grid.spacing();
    CHECK(grid_aligned(grid, g));
    CHECK_FALSE(grid_aligned(grid, 1e-3));
    const auto shifted = shift_by_steps(prepare_gaussian(grid, 1.0), 17);
    const auto analytic = displaced_gaussian(grid, 1.0, g);
    // The shift zero-fills the first 17 points, where the analytic tail is ~1e-9.
    const auto n = shifted.amplitudes.size() - 17;
    CHECK((shifted.amplitudes.tail(n) - analytic.amplitudes.tail(n)).cwiseAbs().maxCoeff() < 1e-12);
    const auto moved = translated_pointer(grid, 1.0, 1e-3);
    CHECK(mean_position(moved) == doctest::Approx(1e-3).epsilon(1e-9));
  }

  TEST_CASE("g = 0 leaves the pointer unchanged") {
    const auto s = builtin_slice("two-box");
    const auto out = couple_and_postselect(s, {query({0, 0}), 0.0, CouplingScheme::Direct}, config_for(0));
    CHECK(std::abs(out.estimate.mean_shifts.front()) < 1e-14);
    CHECK(out.estimate.postselection_probability == doctest::Approx(std::norm(s.overlap)).epsilon(1e-12));
    const auto rest = prepare_gaussian(config_for(0).grid, 1.0);
    CHECK((out.pointers.front().amplitudes - rest.amplitudes).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("direct coupling matches the exact two-branch mean") {
    for (const char* name : {"two-box", "dynamic", "hardy"}) {
      const auto s = builtin_slice(name);
      const auto d = dense(s);
      for (const auto& choices : std::vector<std::vector<int>>{{0, 0}, {0, 1}, {1, -1}})
        for (double g : {1e-3, 0.037, 0.5, 3.0}) {
          const Mat p = oracle::projector(d.dims, choices);
          const cd moved = d.bra.dot(p * d.ket), rest = d.bra.dot(d.ket) - moved;
          if (std::norm(moved) + std::norm(rest) < 1e-20) continue;
          const auto out = couple_and_postselect(s, {query(choices), g, CouplingScheme::Direct}, config_for(g));
          CHECK(out.estimate.mean_shifts.front() ==
                doctest::Approx(oracle::direct_mean_shift(rest, moved, g, 1.0)).epsilon(1e-9));
          CHECK(std::abs(out.estimate.joint_norm - 1.0) < 1e-10);
          CHECK(std::abs(pointer_norm(out.pointers.front()) - 1.0) < 1e-10);
        }
    }
  }

  TEST_CASE("weak limit: shift over g approaches the weak value") {
    const auto s = builtin_slice("two-box");
    const double g = 0.01;
    const auto out = couple_and_postselect(s, {query({0, 0}), g, CouplingScheme::Direct}, config_for(g));
    CHECK(std::abs(out.estimate.mean_shifts.front() / g - 1.0) < 0.01);

    // P12 carries a g^2 correction; halving g should quarter the error and a
    // Richardson step should remove most of it.
    const double wv = weak_value(s, query({0, 1})).value.real();
    auto ratio = [&](double gg) {
      return couple_and_postselect(s, {query({0, 1}), gg, CouplingScheme::Direct}, config_for(gg))
                 .estimate.mean_shifts.front() / gg;
    };
    const double r1 = ratio(0.01), r2 = ratio(0.005);
    CHECK(std::abs(r1 - wv) > 1e-6);
    CHECK(std::abs(r2 - wv) == doctest::Approx(std::abs(r1 - wv) / 4).epsilon(0.01));
    CHECK(std::abs((4 * r2 - r1) / 3 - wv) < 1e-3 * std::abs(r2 - wv));
  }

  TEST_CASE("strong regime reproduces the ABL probability") {
    const auto s = builtin_slice("two-box");
    const double g = 20.0;
    const auto out = couple_and_postselect(s, {query({0, 1}), g, CouplingScheme::Direct}, config_for(g));
    const double abl = abl_probability(s, query({0, 1})).probability_of_1;
    CHECK(mass_beyond(out.pointers.front(), g / 2) == doctest::Approx(abl).epsilon(0.01));
    CHECK(abl == doctest::Approx(0.2).epsilon(1e-12));
  }

  TEST_CASE("sequential coupling matches the exact four-branch moments") {
    for (const char* name : {"two-box", "dynamic"}) {
      const auto s = builtin_slice(name);
      const auto d = dense(s);
      for (double g : {1e-3, 0.05, 1.0}) {
        const auto out = couple_and_postselect(s, {query({0, 0}), g, CouplingScheme::Sequential}, config_for(g));
        REQUIRE(out.estimate.cross_correlation.has_value());
        const double ref = sequential_cross(d, {0, -1}, {-1, 0}, g, 1.0);
        CHECK(*out.estimate.cross_correlation == doctest::Approx(ref).epsilon(1e-9).scale(g * g));
        CHECK(out.estimate.mean_shifts.size() == 2);
        CHECK(out.branch_amplitudes.size() == 4);
        CHECK(std::abs(out.estimate.joint_norm - 1.0) < 1e-10);
      }
    }
    CHECK_THROWS_AS(couple_and_postselect(builtin_slice("two-box"), {query({0, -1}), 0.1, CouplingScheme::Sequential},
                                          config_for(0.1)),
                    Error);
  }

  TEST_CASE("coupling preconditions") {
    const auto s = builtin_slice("two-box");
    CHECK_THROWS_AS(couple_and_postselect(s, {query({0, 0}), -0.1, CouplingScheme::Direct}, config_for(0.1)), Error);
    // grid too small for the displaced pointer
    CHECK_THROWS_AS(couple_and_postselect(s, {query({0, 0}), 3.0, CouplingScheme::Direct}, config_for(0.0)), Error);
  }

  TEST_CASE("order estimates") {
    const auto s = builtin_slice("two-box");
    const auto gs = log_spaced(1e-3, 1e-1, 7);
    const PointerConfig cfg = config_for(0.1);
    const auto direct = order_estimate(s, query({0, 0}), CouplingScheme::Direct, gs, cfg);
    REQUIRE(direct.exponent.has_value());
    CHECK(*direct.exponent == doctest::Approx(1.0).epsilon(0.1));
    const auto seq = order_estimate(s, query({0, 0}), CouplingScheme::Sequential, gs, cfg);
    REQUIRE(seq.exponent.has_value());
    CHECK(*seq.exponent == doctest::Approx(2.0).epsilon(0.05));

    const auto zero = order_estimate(s, query({1, 0}), CouplingScheme::Direct, gs, cfg);
    CHECK(zero.below_noise_floor);
    CHECK_FALSE(zero.exponent.has_value());

    CHECK_THROWS_AS(order_estimate(s, query({0, 0}), CouplingScheme::Direct, {1e-3, 2e-3, 3e-3, 4e-3}, cfg), Error);
    CHECK_THROWS_AS(order_estimate(s, query({0, 0}), CouplingScheme::Direct, log_spaced(1e-3, 5e-3, 5), cfg), Error);
    CHECK_THROWS_AS(order_estimate(s, query({0, 0}), CouplingScheme::Direct, log_spaced(1e-2, 1.0, 5), cfg), Error);
  }

  TEST_CASE("log-log fit recovers exact power laws") {
    const std::vector<double> x{0.1, 0.2, 0.5, 1.0, 3.0};
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * std::pow(v, 1.7));
    const auto fit = fit_log_log(x, y);
    CHECK(fit.exponent == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(std::exp(fit.log_prefactor) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_THROWS_AS(fit_log_log({1.0, 2.0}, {1.0, 0.0}), Error);
  }
}
