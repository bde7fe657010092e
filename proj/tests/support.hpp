#pragma once

// Conversions between library states and the dense reference model.

#include "oracle.hpp"
#include "wtrace/report.hpp"

namespace support {

inline wtrace::State to_state(const std::vector<int>& dims, const oracle::Vec& v) {
  return wtrace::State::dense(wtrace::Dims(dims), v);
}

inline oracle::Vec to_vec(const wtrace::State& s) { return wtrace::to_dense(s).amplitudes(); }

inline double distance(const oracle::Vec& a, const oracle::Vec& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline wtrace::ProjectorQuery query(std::vector<int> choices) { return wtrace::ProjectorQuery(std::move(choices)); }

}  // namespace support
