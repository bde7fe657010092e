#pragma once

// Random scenario documents (N <= 4 subsystems, local dims 2 or 3, local and
// occasional two-body generators) together with a dense reference built
// independently from the same random numbers.

#include <random>

#include "oracle.hpp"
#include "wtrace/report.hpp"

namespace randscen {

struct Reference {
  std::vector<int> dims;
  oracle::Vec pre;   // normalized
  oracle::Vec post;  // normalized
  struct Piece {
    double t_start, t_end;
    oracle::Mat h;  // full Hamiltonian on the whole space
  };
  std::vector<Piece> pieces;

  double t_initial() const { return pieces.front().t_start; }
  double t_final() const { return pieces.back().t_end; }

  oracle::Mat evolve(double ta, double tb) const {
    const auto n = static_cast<Eigen::Index>(oracle::total(dims));
    oracle::Mat u = oracle::Mat::Identity(n, n);
    for (const auto& p : pieces) {
      const double lo = std::max(ta, p.t_start), hi = std::min(tb, p.t_end);
      if (hi > lo) u = oracle::expm_minus_i(p.h, hi - lo) * u;
    }
    return u;
  }
  oracle::Vec forward(double t) const { return evolve(t_initial(), t) * pre; }
  oracle::Vec backward(double t) const { return evolve(t, t_final()).adjoint() * post; }
};

struct Case {
  wtrace::ScenarioDoc doc;
  Reference ref;
};

inline wtrace::ComplexRows rows_of(const oracle::Mat& m) {
  wtrace::ComplexRows out(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r].push_back(m(r, c));
  return out;
}

inline std::vector<wtrace::TermSpec> random_terms(const std::vector<int>& dims, std::mt19937_64& rng,
                                                  oracle::Vec& dense) {
  std::uniform_int_distribution<int> n_terms(1, 3), coin(0, 2);
  std::vector<wtrace::TermSpec> terms;
  dense = oracle::Vec::Zero(oracle::total(dims));
  const int nt = n_terms(rng);
  for (int t = 0; t < nt; ++t) {
    wtrace::TermSpec term;
    term.coefficient = oracle::random_vector(1, rng)(0);
    std::vector<oracle::Vec> locals;
    for (int d : dims) {
      if (coin(rng) == 0) {
        const int label = std::uniform_int_distribution<int>(0, d - 1)(rng);
        term.factors.emplace_back(std::to_string(label + 1));
        oracle::Vec v = oracle::Vec::Zero(d);
        v(label) = 1.0;
        locals.push_back(v);
      } else {
        const oracle::Vec v = oracle::random_vector(d, rng);
        term.factors.emplace_back(std::vector<wtrace::Complex>(v.data(), v.data() + d));
        locals.push_back(v);
      }
    }
    dense += term.coefficient * oracle::product(locals, dims);
    terms.push_back(std::move(term));
  }
  return terms;
}

// Draws until the end-to-end overlap is comfortably away from zero, so that
// weak values stay O(1) and absolute tolerances are meaningful.
inline Case random_case(std::mt19937_64& rng, double min_overlap = 0.05) {
  for (;;) {
    Case c;
    std::uniform_int_distribution<int> n_sub(1, 4), dim(2, 3), n_seg(1, 3);
    std::uniform_real_distribution<double> len(0.2, 1.5), eps(0.2, 2.0);
    std::vector<int> dims(n_sub(rng));
    for (auto& d : dims) d = dim(rng);
    c.ref.dims = dims;

    auto& doc = c.doc;
    doc.name = "random";
    doc.dims = dims;
    doc.pre = random_terms(dims, rng, c.ref.pre);
    doc.post = random_terms(dims, rng, c.ref.post);
    if (c.ref.pre.norm() < 1e-6 || c.ref.post.norm() < 1e-6) continue;
    c.ref.pre.normalize();
    c.ref.post.normalize();

    double t = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const int segs = n_seg(rng);
    const auto n = static_cast<Eigen::Index>(oracle::total(dims));
    for (int s = 0; s < segs; ++s) {
      wtrace::SegmentSpec seg{t, t + len(rng), {}};
      oracle::Mat h = oracle::Mat::Zero(n, n);
      for (std::size_t j = 0; j < dims.size(); ++j) {
        if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) continue;
        const oracle::Mat m = oracle::random_hermitian(dims[j], rng);
        const double e = eps(rng);
        seg.generators.push_back({{{j, "", rows_of(m)}}, e});
        h += e * oracle::embed(dims, j, m);
      }
      // now and then a two-body term, which forces dense evolution
      if (dims.size() > 1 && std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, dims.size() - 2)(rng);
        const auto k = std::uniform_int_distribution<std::size_t>(j + 1, dims.size() - 1)(rng);
        const oracle::Mat a = oracle::random_hermitian(dims[j], rng), b = oracle::random_hermitian(dims[k], rng);
        const double e = eps(rng);
        seg.generators.push_back({{{j, "", rows_of(a)}, {k, "", rows_of(b)}}, e});
        h += e * oracle::embed(dims, j, a) * oracle::embed(dims, k, b);
      }
      c.ref.pieces.push_back({seg.t_start, seg.t_end, h});
      doc.schedule.push_back(std::move(seg));
      t = doc.schedule.back().t_end;
    }

    // queries: every single-subsystem box, plus a few random multi-box ones
    for (std::size_t j = 0; j < dims.size(); ++j)
      for (int b = 0; b < dims[j]; ++b) {
        std::vector<int> q(dims.size(), wtrace::ProjectorQuery::kAny);
        q[j] = b;
        doc.queries.push_back({wtrace::ProjectorQuery(q).to_string(), {}});
      }
    for (int k = 0; k < 3 && dims.size() > 1; ++k) {
      std::vector<int> q(dims.size());
      for (std::size_t j = 0; j < dims.size(); ++j) q[j] = std::uniform_int_distribution<int>(-1, dims[j] - 1)(rng);
      if (wtrace::ProjectorQuery(q).order() == 0) q[0] = 0;
      doc.queries.push_back({wtrace::ProjectorQuery(q).to_string(), {}});
    }
    doc.times.range = wtrace::TimeSpec::Range{c.ref.t_initial(), c.ref.t_final(), 4};
    doc.abl = true;

    const std::complex<double> ov = c.ref.post.dot(c.ref.evolve(c.ref.t_initial(), c.ref.t_final()) * c.ref.pre);
    if (std::abs(ov) < min_overlap) continue;
    return c;
  }
}

}  // namespace randscen
