#pragma once

// Exhaustive (order, graph) search ranked by BIC.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "gim/core.hpp"
#include "gim/errors.hpp"
#include "gim/fit.hpp"

namespace gim {

enum class BicFormula {
  LogDet,   // T log det Sigma + log(T) q
  Literal,  // T det Sigma + log(T) q
};

inline double bic(const FitResult& fit, int T, BicFormula formula = BicFormula::LogDet) {
  if (!fit.converged) throw ArgumentError("BIC requested for a non-converged fit");
  if (T < 2) throw ArgumentError("BIC needs T >= 2");
  const Matrix& s = fit.var.sigma;
  const Eigen::LLT<Matrix> llt(0.5 * (s + s.transpose()));
  if (llt.info() != Eigen::Success)
    throw DegeneracyError("innovation covariance is not positive definite");
  double logdet = 0.0;
  for (Eigen::Index a = 0; a < s.rows(); ++a) logdet += 2.0 * std::log(llt.matrixL()(a, a));
  const double q = static_cast<double>(param_count(fit.spec.p, fit.spec.graph));
  const double fit_term = formula == BicFormula::LogDet ? T * logdet : T * std::exp(logdet);
  return fit_term + std::log(static_cast<double>(T)) * q;
}

struct SelectionRow {
  UndirectedGraph graph{1};
  int p = 0;
  std::size_t graph_index = 0;  // position in the requested graph list
  double bic = std::numeric_limits<double>::quiet_NaN();
  long q = 0;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int cycles = 0;
  std::string diagnostic;
};

struct SelectionReport {
  int T = 0;
  int d = 0;
  std::vector<std::string> labels;
  BicFormula formula = BicFormula::LogDet;
  std::vector<SelectionRow> rows;  // ranked
  std::vector<std::size_t> within_two;  // row indices with bic <= best + 2

  const SelectionRow& best() const { return rows.front(); }
};

struct SelectOptions {
  int p_min = 1;
  int p_max = 1;
  std::optional<std::vector<UndirectedGraph>> graphs;  // default: all graphs on d vertices
  FitOptions fit;
  BicFormula formula = BicFormula::LogDet;
  int jobs = 1;
  int max_dim = kDefaultEnumerationMaxDim;
};

/// Row order: converged rows by (bic, q, p, graph index), then the rest by (p, graph index).
inline bool row_before(const SelectionRow& x, const SelectionRow& y) {
  if (x.converged != y.converged) return x.converged;
  if (x.converged) {
    if (x.bic != y.bic) return x.bic < y.bic;
    if (x.q != y.q) return x.q < y.q;
  }
  return std::tie(x.p, x.graph_index) < std::tie(y.p, y.graph_index);
}

inline SelectionReport select_models(const TimeSeries& x, const SelectOptions& opts) {
  if (opts.p_min < 0 || opts.p_max < opts.p_min) throw ArgumentError("empty order range");
  if (opts.jobs < 1) throw ArgumentError("jobs must be >= 1");
  x.validate();
  const int d = x.dim();
  const std::vector<UndirectedGraph> graphs =
      opts.graphs ? *opts.graphs : enumerate_graphs(d, opts.max_dim);
  if (graphs.empty()) throw ArgumentError("no graphs to fit");
  for (const auto& g : graphs)
    if (g.dim() != d) throw ArgumentError("graph dimension does not match the series");

  const EmpiricalStats stats = empirical_stats(x, opts.p_max, opts.fit);
  const int T = stats.length();

  const std::size_t n_p = static_cast<std::size_t>(opts.p_max - opts.p_min + 1);
  const std::size_t total = n_p * graphs.size();
  std::vector<SelectionRow> rows(total);

  auto run = [&](std::size_t k) {
    SelectionRow& row = rows[k];
    row.p = opts.p_min + static_cast<int>(k / graphs.size());
    row.graph_index = k % graphs.size();
    row.graph = graphs[row.graph_index];
    row.q = param_count(row.p, row.graph);
    try {
      const FitResult fit = fit_gi(stats, ModelSpec(row.p, row.graph), opts.fit);
      row.loglik = fit.loglik;
      row.cycles = fit.cycles;
      row.converged = fit.converged;
      row.diagnostic = fit.diagnostic;
      if (fit.converged) row.bic = bic(fit, T, opts.formula);
    } catch (const Error& e) {
      row.converged = false;
      row.diagnostic = e.what();
    }
  };

  const int workers = static_cast<int>(std::min<std::size_t>(opts.jobs, total));
  if (workers <= 1) {
    for (std::size_t k = 0; k < total; ++k) run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < total; k = next++) run(k);
      });
    for (auto& t : pool) t.join();
  }

  std::stable_sort(rows.begin(), rows.end(), row_before);
  if (!rows.front().converged) {
    std::string msg = "no candidate model converged";
    for (const auto& r : rows)
      if (!r.diagnostic.empty()) {
        msg += "; first failure (p=" + std::to_string(r.p) + "): " + r.diagnostic;
        break;
      }
    throw SelectionError(msg);
  }

  SelectionReport rep;
  rep.T = T;
  rep.d = d;
  rep.labels = x.labels;
  rep.formula = opts.formula;
  rep.rows = std::move(rows);
  const double best = rep.rows.front().bic;
  for (std::size_t k = 0; k < rep.rows.size(); ++k)
    if (rep.rows[k].converged && rep.rows[k].bic <= best + 2.0) rep.within_two.push_back(k);
  return rep;
}

}  // namespace gim
