#pragma once

#include "genestim/core.hpp"
#include "genestim/information.hpp"
#include "genestim/interval_result.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace genestim::io {

using nlohmann::json;

// 17 significant digits; non-finite values spelled inf, -inf, nan.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }
inline std::string fmt(const std::string& v) { return v; }
inline std::string fmt(const char* v) { return v; }

// JSON has no infinities; they become strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

inline json to_json(const ParamPoint& p) { return {{"theta", to_json(p.theta)}, {"nuisance", to_json(p.nuisance)}}; }

inline json to_json(const IntervalResult& r) {
  return {{"lower", num(r.lower)},
          {"upper", num(r.upper)},
          {"closed_lower", r.closed_lower},
          {"closed_upper", r.closed_upper},
          {"z", num(r.z)},
          {"side", to_string(r.side)},
          {"lower_at_boundary", r.lower_at_boundary},
          {"upper_at_boundary", r.upper_at_boundary},
          {"whole_domain", r.whole_domain},
          {"empty", r.empty},
          {"boundary_note", r.boundary_note}};
}

inline json to_json(const InformationReport& r) {
  json j{{"label", r.label},
         {"param", to_json(r.param)},
         {"lambda", to_json(r.lambda)},
         {"lambda_scalar", num(r.lambda_scalar)},
         {"fisher_bound", to_json(r.fisher_bound)},
         {"efficiency", to_json(r.efficiency)},
         {"correlation", to_json(r.correlation)},
         {"route_discrepancy", num(r.route_discrepancy)},
         {"score_equation_ok", r.score_equation_ok},
         {"monte_carlo", r.monte_carlo}};
  j["lambda_direct"] = r.lambda_direct ? to_json(*r.lambda_direct) : json(nullptr);
  if (r.monte_carlo) j["lambda_se"] = to_json(r.lambda_se);
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << body;
  if (!out) fail(ErrorKind::InvalidArgument, "write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// First line is '#' plus the compact manifest, then the header and rows.
class CsvWriter {
 public:
  CsvWriter(const json& manifest, std::vector<std::string> columns) {
    body_ = "#" + manifest.dump() + "\n";
    line(columns);
  }

  template <class... Ts>
  void row(const Ts&... values) {
    std::vector<std::string> cells{fmt(values)...};
    line(cells);
  }

  void save(const std::filesystem::path& path) const { write_text(path, body_); }
  const std::string& body() const { return body_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
  }
  std::string body_;
};

}  // namespace genestim::io
