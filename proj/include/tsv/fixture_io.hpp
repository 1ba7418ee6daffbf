#pragma once

// JSON literal format shared by fixtures and the CLI:
//   complex  -> [re, im]
//   vector   -> [[re, im], ...]
//   matrix   -> [[[re, im], ...], ...]   (row-major: outer array is rows)
// nlohmann::json prints doubles in shortest round-trip form, so values
// survive a write/read cycle exactly.

#include <string>

#include <nlohmann/json.hpp>

#include "tsv/qcore.hpp"

namespace tsv::io {

using nlohmann::json;

inline json toJson(Complex c) { return json::array({c.real(), c.imag()}); }

inline Complex complexFromJson(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError("expected a complex literal [re, im], got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json toJson(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(toJson(v(i)));
  return out;
}

inline CVector vectorFromJson(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty vector literal, got " + j.dump());
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complexFromJson(j[i]);
  return v;
}

inline json toJson(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(toJson(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline CMatrix matrixFromJson(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a matrix literal, got " + j.dump());
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  if (cols == 0) throw ConfigError("matrix literal has empty rows");
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError("matrix literal rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complexFromJson(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

inline json toJson(const StateVector& s) { return toJson(s.amplitudes()); }
inline json toJson(const DensityMatrix& r) { return toJson(r.matrix()); }
inline json toJson(const HermitianOperator& h) { return toJson(h.matrix()); }

/// Parses and normalizes a state literal.
inline StateVector stateFromJson(const json& j) { return StateVector::normalize(vectorFromJson(j)); }

inline DensityMatrix densityFromJson(const json& j) { return DensityMatrix::fromMatrix(matrixFromJson(j)); }

inline HermitianOperator hermitianFromJson(const json& j) {
  return HermitianOperator::fromMatrix(matrixFromJson(j));
}

}  // namespace tsv::io
