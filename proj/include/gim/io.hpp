#pragma once

// CSV and JSON forms of series, graphs, model parameters, fit results,
// selection reports and spectral grids. Numbers are written with shortest
// round-trip precision.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gim/core.hpp"
#include "gim/errors.hpp"
#include "gim/fit.hpp"
#include "gim/select.hpp"
#include "gim/spectral.hpp"
#include "gim/whittle.hpp"

namespace gim::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// --- series CSV ---------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Header row of names, then one numeric row per time point. No missing values.
inline TimeSeries parse_series_csv(std::istream& in) {
  std::string line;
  long lineno = 0;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) {
      labels = detail::split_csv_line(line);
      break;
    }
  }
  if (labels.empty()) throw ParseError("CSV is empty (expected a header row)", lineno, 0);
  for (std::size_t c = 0; c < labels.size(); ++c)
    if (labels[c].empty())
      throw ParseError("empty column name in header", lineno, static_cast<long>(c) + 1);

  const auto d = static_cast<long>(labels.size());
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<long>(cells.size()) != d)
      throw ParseError("row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                           " fields, expected " + std::to_string(d),
                       lineno, 0);
    for (long c = 0; c < d; ++c) {
      const std::string& cell = cells[static_cast<std::size_t>(c)];
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
        throw ParseError("row " + std::to_string(lineno) + ", column " + std::to_string(c + 1) +
                             " (" + labels[static_cast<std::size_t>(c)] + "): '" + cell +
                             "' is not a finite number (missing values are not supported)",
                         lineno, c + 1);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows < 2) throw ParseError("CSV needs at least two data rows", lineno, 0);
  Matrix data(rows, d);
  for (long t = 0; t < rows; ++t)
    for (long c = 0; c < d; ++c) data(t, c) = values[static_cast<std::size_t>(t * d + c)];
  return TimeSeries(std::move(data), std::move(labels));
}

inline TimeSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_series_csv(in);
}

inline void write_series_csv(std::ostream& out, const TimeSeries& x) {
  for (std::size_t c = 0; c < x.labels.size(); ++c) out << (c ? "," : "") << x.labels[c];
  out << '\n';
  for (Eigen::Index t = 0; t < x.data.rows(); ++t) {
    for (Eigen::Index c = 0; c < x.data.cols(); ++c)
      out << (c ? "," : "") << format_double(x.data(t, c));
    out << '\n';
  }
}

// --- JSON: matrices, graphs, parameters -------------------------------------

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw DataError(what + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw DataError(what + ": row " + std::to_string(r) + " must have " +
                      std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw DataError(what + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

inline json graph_to_json(const UndirectedGraph& g) {
  json edges = json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});
  return {{"d", g.dim()}, {"edges", edges}};
}

inline UndirectedGraph graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("d") || !j.contains("edges"))
    throw DataError("graph JSON needs fields \"d\" and \"edges\"");
  const int d = j.at("d").get<int>();
  std::vector<UndirectedGraph::Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw DataError("graph edge must be a pair [a, b]");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return UndirectedGraph(d, edges);
}

/// Parses "0-1,1-2" (also accepts ':' or ' ' as the pair separator).
inline UndirectedGraph graph_from_edge_list(int d, const std::string& spec) {
  std::vector<UndirectedGraph::Edge> edges;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto sep = item.find_first_of("-: ");
    if (sep == std::string::npos) throw ArgumentError("bad edge '" + item + "', expected a-b");
    try {
      edges.emplace_back(std::stoi(item.substr(0, sep)), std::stoi(item.substr(sep + 1)));
    } catch (const std::logic_error&) {
      throw ArgumentError("bad edge '" + item + "', expected a-b");
    }
  }
  return UndirectedGraph(d, edges);
}

inline json var_to_json(const VarParams& v) {
  json a = json::array();
  for (const auto& m : v.a) a.push_back(matrix_to_json(m));
  return {{"d", v.d}, {"p", v.p}, {"a", a}, {"sigma", matrix_to_json(v.sigma)}};
}

inline VarParams var_from_json(const json& j) {
  if (!j.is_object()) throw DataError("VAR parameters must be a JSON object");
  VarParams v;
  v.d = j.at("d").get<int>();
  v.p = j.value("p", static_cast<int>(j.value("a", json::array()).size()));
  if (v.d < 1 || v.p < 0) throw DataError("VAR parameters need d >= 1, p >= 0");
  const json a = j.value("a", json::array());
  if (static_cast<int>(a.size()) != v.p) throw DataError("\"a\" must hold p matrices");
  for (int u = 0; u < v.p; ++u)
    v.a.push_back(matrix_from_json(a[static_cast<std::size_t>(u)], v.d, v.d,
                                   "a(" + std::to_string(u + 1) + ")"));
  v.sigma = matrix_from_json(j.at("sigma"), v.d, v.d, "sigma");
  if (!(v.sigma - v.sigma.transpose()).isZero(1e-12 * std::max(1.0, v.sigma.norm())))
    throw DataError("sigma must be symmetric");
  return v;
}

inline json taper_to_json(const TaperSpec& t) {
  return {{"kind", t.name()}, {"fraction", t.kind == TaperSpec::Kind::None ? 0.0 : t.fraction}};
}

inline TaperSpec taper_from_json(const json& j) {
  const std::string kind = j.value("kind", "cosine-bell");
  if (kind == "none") return TaperSpec::none();
  if (kind != "cosine-bell") throw DataError("unknown taper kind '" + kind + "'");
  return TaperSpec::cosine_bell(j.value("fraction", 0.1));
}

inline json theta_legend(const std::vector<ThetaIndex>& layout) {
  json legend = json::array();
  for (const auto& t : layout) legend.push_back({t.a, t.b, t.u});
  return legend;
}

// --- fit results ------------------------------------------------------------

/// FitResult JSON. `lambda` (optional) is exported over the full theta layout.
inline json fit_to_json(const FitResult& r, const std::vector<std::string>& labels,
                        const AsymptoticCovariance* lambda = nullptr) {
  json gamma_inv = json::array();
  for (const auto& m : r.gi.gamma_inv) gamma_inv.push_back(matrix_to_json(m));
  json j = {
      {"spec", {{"p", r.spec.p}, {"graph", graph_to_json(r.spec.graph)}}},
      {"labels", labels},
      {"var", var_to_json(r.var)},
      {"gamma_inv", gamma_inv},
      {"loglik", r.loglik},
      {"residuals",
       {{"moment", r.residuals.moment_residual}, {"constraint", r.residuals.constraint_residual}}},
      {"cycles", r.cycles},
      {"converged", r.converged},
      {"N", r.grid_size},
      {"data_grid", r.data_grid_size},
      {"T", r.T},
      {"taper", taper_to_json(r.taper)},
      {"loglik_trace", r.loglik_trace},
  };
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  if (lambda)
    j["asymptotic_covariance"] = {{"index", theta_legend(lambda->pattern.layout)},
                                  {"matrix", matrix_to_json(lambda->lambda)},
                                  {"N", lambda->N}};
  return j;
}

/// The parts of a FitResult JSON needed to evaluate the fitted model.
struct FittedModel {
  ModelSpec spec{0, UndirectedGraph(1)};
  GIParams gi;
  VarParams var;
  int N = 0;
  std::vector<std::string> labels;
};

inline FittedModel fitted_model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("spec") || !j.contains("gamma_inv"))
    throw DataError("fit JSON needs \"spec\" and \"gamma_inv\"");
  FittedModel m;
  const int p = j.at("spec").at("p").get<int>();
  m.spec = ModelSpec(p, graph_from_json(j.at("spec").at("graph")));
  const int d = m.spec.graph.dim();
  const json& gij = j.at("gamma_inv");
  if (!gij.is_array() || static_cast<int>(gij.size()) != p + 1)
    throw DataError("\"gamma_inv\" must hold p + 1 matrices");
  m.gi = GIParams::zeros(d, p);
  for (int u = 0; u <= p; ++u)
    m.gi.gamma_inv[u] = matrix_from_json(gij[static_cast<std::size_t>(u)], d, d,
                                         "gamma_inv(" + std::to_string(u) + ")");
  if (j.contains("var")) m.var = var_from_json(j.at("var"));
  m.N = j.value("N", model_grid_size(p));
  if (m.N < 2 || m.N % 2 != 0) throw DataError("\"N\" must be even and >= 2");
  if (j.contains("labels")) m.labels = j.at("labels").get<std::vector<std::string>>();
  if (m.labels.empty())
    for (int a = 0; a < d; ++a) m.labels.push_back("x" + std::to_string(a));
  return m;
}

// --- selection reports ------------------------------------------------------

inline json selection_to_json(const SelectionReport& rep, std::size_t top = 0) {
  json rows = json::array();
  const std::size_t n = top ? std::min(top, rep.rows.size()) : rep.rows.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = rep.rows[k];
    json row = {{"rank", k + 1},
                {"p", r.p},
                {"graph", graph_to_json(r.graph)},
                {"bic", r.converged ? json(r.bic) : json(nullptr)},
                {"q", r.q},
                {"loglik", std::isfinite(r.loglik) ? json(r.loglik) : json(nullptr)},
                {"converged", r.converged},
                {"cycles", r.cycles}};
    if (!r.diagnostic.empty()) row["diagnostic"] = r.diagnostic;
    rows.push_back(std::move(row));
  }
  json within = json::array();
  for (auto k : rep.within_two) within.push_back(k + 1);
  return {{"data", {{"T", rep.T}, {"d", rep.d}, {"labels", rep.labels}}},
          {"bic_formula", rep.formula == BicFormula::LogDet ? "T*logdet(Sigma)+log(T)*q"
                                                            : "T*det(Sigma)+log(T)*q"},
          {"best_rank", 1},
          {"within_2_bic_ranks", within},
          {"rows", rows}};
}

inline std::string edges_string(const UndirectedGraph& g) {
  std::string s;
  for (auto [a, b] : g.edges()) s += (s.empty() ? "" : " ") + std::to_string(a) + "-" + std::to_string(b);
  return s;
}

/// rank,p,edges,bic,q,loglik,converged,cycles (edges as space-separated a-b pairs).
inline void write_selection_csv(std::ostream& out, const SelectionReport& rep,
                                std::size_t top = 0) {
  out << "rank,p,edges,bic,q,loglik,converged,cycles\n";
  const std::size_t n = top ? std::min(top, rep.rows.size()) : rep.rows.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = rep.rows[k];
    out << k + 1 << ',' << r.p << ",\"" << edges_string(r.graph) << "\","
        << (r.converged ? format_double(r.bic) : "") << ',' << r.q << ','
        << (std::isfinite(r.loglik) ? format_double(r.loglik) : "") << ','
        << (r.converged ? "true" : "false") << ',' << r.cycles << '\n';
  }
}

// --- spectral grids ------------------------------------------------------------

/// freq_index,lambda,a,b,re,im[,abs] for j = 0..N/2 and a <= b (a < b if off_diagonal_only).
inline void write_grid_csv(std::ostream& out, const SpectralGrid& g, bool with_abs = false,
                           bool off_diagonal_only = false) {
  out << "freq_index,lambda,a,b,re,im" << (with_abs ? ",abs" : "") << '\n';
  for (int j = 0; j <= g.N / 2; ++j)
    for (int a = 0; a < g.d; ++a)
      for (int b = off_diagonal_only ? a + 1 : a; b < g.d; ++b) {
        const Complex v = g[j](a, b);
        out << j << ',' << format_double(g.lambda(j)) << ',' << a << ',' << b << ','
            << format_double(v.real()) << ',' << format_double(v.imag());
        if (with_abs) out << ',' << format_double(std::abs(v));
        out << '\n';
      }
}

inline json grid_sidecar(const SpectralGrid& g, const TaperSpec& taper) {
  return {{"d", g.d}, {"N", g.N}, {"taper", taper_to_json(taper)}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

}  // namespace gim::io
