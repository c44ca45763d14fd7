// gimts: fit and select graphical interaction models for multivariate time series.
//
// Exit codes: 0 ok, 2 input error, 3 numerical error, 4 non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gim/gim.hpp"
#include "gim/io.hpp"

namespace {

namespace fs = std::filesystem;
using gim::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNoConvergence = 4;

struct TaperArgs {
  std::string kind = "cosine-bell";
  double fraction = 0.1;

  gim::TaperSpec spec() const {
    if (kind == "none") return gim::TaperSpec::none();
    if (kind == "cosine-bell" || kind == "cosine") {
      auto t = gim::TaperSpec::cosine_bell(fraction);
      t.validate();
      return t;
    }
    throw gim::ArgumentError("unknown taper '" + kind + "' (use none or cosine-bell)");
  }
};

void add_taper_flags(CLI::App* cmd, TaperArgs& t) {
  cmd->add_option("--taper", t.kind, "Data taper: none | cosine-bell")->capture_default_str();
  cmd->add_option("--taper-fraction", t.fraction, "Tapered portion of each end, in [0,1]")
      ->capture_default_str();
}

/// foo.json -> foo_<suffix>.csv
std::string companion(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  const std::string stem = p.has_extension() ? p.replace_extension().string() : path;
  return stem + "_" + suffix + ".csv";
}

std::string write_to_string(const auto& writer) {
  std::ostringstream ss;
  writer(ss);
  return ss.str();
}

// --- fit ----------------------------------------------------------------------

struct FitArgs {
  std::string csv;
  int p = 1;
  std::string edges;
  std::string graph_json;
  bool empty_graph = false;
  TaperArgs taper;
  double tol = 1e-6;
  int max_cycles = 1000;
  int grid = 0;
  int data_grid = 0;
  bool no_demean = false;
  std::string out = "fit.json";
};

gim::FitOptions fit_options(const TaperArgs& taper, double tol, int max_cycles, int grid,
                            int data_grid, bool no_demean) {
  gim::FitOptions o;
  o.taper = taper.spec();
  o.tolerance = tol;
  o.max_cycles = max_cycles;
  o.grid = grid;
  o.data_grid = data_grid;
  o.demean = !no_demean;
  o.validate();
  return o;
}

int cmd_fit(const FitArgs& args) {
  const gim::TimeSeries x = gim::io::read_series_csv(args.csv);
  const int d = x.dim();
  std::optional<gim::UndirectedGraph> graph;
  if (!args.graph_json.empty()) graph = gim::io::graph_from_json(gim::io::read_json_file(args.graph_json));
  if (!args.edges.empty()) {
    if (graph) throw gim::ArgumentError("give either --edges or --graph-json, not both");
    graph = gim::io::graph_from_edge_list(d, args.edges);
  }
  if (args.empty_graph) {
    if (graph) throw gim::ArgumentError("--empty conflicts with an explicit graph");
    graph = gim::UndirectedGraph(d);
  }
  if (!graph) graph = gim::UndirectedGraph::complete(d);
  if (graph->dim() != d)
    throw gim::ArgumentError("graph has d=" + std::to_string(graph->dim()) + " but the CSV has " +
                             std::to_string(d) + " columns");

  const auto opts = fit_options(args.taper, args.tol, args.max_cycles, args.grid, args.data_grid,
                                args.no_demean);
  const gim::FitResult fit = gim::fit_gi(x, gim::ModelSpec(args.p, *graph), opts);

  std::optional<gim::AsymptoticCovariance> lambda;
  try {
    lambda = gim::asymptotic_covariance(fit.gi, *graph);
  } catch (const gim::NumericalError& e) {
    std::cerr << "warning: asymptotic covariance unavailable: " << e.what() << '\n';
  }

  gim::io::write_text_file(args.out,
                           gim::io::fit_to_json(fit, x.labels, lambda ? &*lambda : nullptr).dump(2) + "\n");
  const gim::SpectralGrid f = gim::gi_spectrum(fit.gi, fit.grid_size);
  gim::io::write_text_file(companion(args.out, "spectrum"), write_to_string([&](std::ostream& o) {
                             gim::io::write_grid_csv(o, f);
                           }));
  gim::io::write_text_file(companion(args.out, "pcoh"), write_to_string([&](std::ostream& o) {
                             gim::io::write_grid_csv(o, gim::partial_coherence(f), true, true);
                           }));

  std::cout << "fit GI(" << args.p << ", {" << gim::io::edges_string(*graph) << "}) on T=" << x.length()
            << ", d=" << d << ": " << (fit.converged ? "converged" : "NOT converged") << " after "
            << fit.cycles << " cycle(s); whittle loglik " << gim::io::format_double(fit.loglik)
            << "; residuals moment " << fit.residuals.moment_residual << ", constraint "
            << fit.residuals.constraint_residual << '\n';
  if (!fit.converged) {
    std::cerr << "error: " << fit.diagnostic << '\n';
    return kExitNoConvergence;
  }
  return kExitOk;
}

// --- select -------------------------------------------------------------------

struct SelectArgs {
  std::string csv;
  int p_min = 1;
  int p_max = 1;
  bool all_graphs = false;
  std::string graphs_file;
  std::size_t top = 0;
  bool bic_literal = false;
  int jobs = 1;
  int max_dim = gim::kDefaultEnumerationMaxDim;
  TaperArgs taper;
  double tol = 1e-6;
  int max_cycles = 1000;
  bool no_demean = false;
  std::string out = "selection";
};

int cmd_select(const SelectArgs& args) {
  const gim::TimeSeries x = gim::io::read_series_csv(args.csv);
  gim::SelectOptions opts;
  opts.p_min = args.p_min;
  opts.p_max = args.p_max;
  opts.jobs = args.jobs;
  opts.max_dim = args.max_dim;
  opts.formula = args.bic_literal ? gim::BicFormula::Literal : gim::BicFormula::LogDet;
  opts.fit = fit_options(args.taper, args.tol, args.max_cycles, 0, 0, args.no_demean);
  if (!args.graphs_file.empty()) {
    const json j = gim::io::read_json_file(args.graphs_file);
    if (!j.is_array()) throw gim::DataError("graphs file must hold a JSON array of graphs");
    std::vector<gim::UndirectedGraph> graphs;
    for (const auto& g : j) graphs.push_back(gim::io::graph_from_json(g));
    opts.graphs = std::move(graphs);
  } else if (!args.all_graphs) {
    throw gim::ArgumentError("choose --all-graphs or --graphs-file");
  }

  const gim::SelectionReport rep = gim::select_models(x, opts);
  gim::io::write_text_file(args.out + ".json", gim::io::selection_to_json(rep, args.top).dump(2) + "\n");
  gim::io::write_text_file(args.out + ".csv", write_to_string([&](std::ostream& o) {
                             gim::io::write_selection_csv(o, rep, args.top);
                           }));

  for (const auto& r : rep.rows)
    if (!r.diagnostic.empty())
      std::cerr << "note: p=" << r.p << " {" << gim::io::edges_string(r.graph) << "}: " << r.diagnostic
                << '\n';
  const auto& best = rep.best();
  std::cout << "best model: p=" << best.p << ", edges {" << gim::io::edges_string(best.graph)
            << "}, BIC " << gim::io::format_double(best.bic) << " (q=" << best.q << ")\n";
  std::cout << "within 2 BIC of the best:\n";
  for (auto k : rep.within_two) {
    const auto& r = rep.rows[k];
    std::cout << "  p=" << r.p << ", edges {" << gim::io::edges_string(r.graph) << "}, BIC "
              << gim::io::format_double(r.bic) << '\n';
  }
  return kExitOk;
}

// --- spectra ------------------------------------------------------------------

struct SpectraArgs {
  std::string csv;
  int bandwidth = 11;
  TaperArgs taper;
  int grid = 0;
  bool no_demean = false;
  std::string out = "spectra";
};

int cmd_spectra(const SpectraArgs& args) {
  gim::TimeSeries x = gim::io::read_series_csv(args.csv);
  x = args.no_demean ? x : gim::demean(x);
  x.demeaned = true;
  const gim::TaperSpec taper = args.taper.spec();
  const int N = args.grid > 0 ? args.grid : gim::data_grid_size(x.length());
  if (args.bandwidth >= N)
    throw gim::ArgumentError("bandwidth " + std::to_string(args.bandwidth) +
                             " must be smaller than the grid size " + std::to_string(N));
  const gim::SpectralGrid f = gim::smooth_periodogram(gim::periodogram(x, taper, N), args.bandwidth);

  json sidecar = gim::io::grid_sidecar(f, taper);
  sidecar["bandwidth"] = args.bandwidth;
  sidecar["labels"] = x.labels;
  sidecar["files"] = {{"spectrum", args.out + "_spectrum.csv"},
                      {"coherence", args.out + "_coherence.csv"}};

  gim::io::write_text_file(args.out + "_spectrum.csv", write_to_string([&](std::ostream& o) {
                             gim::io::write_grid_csv(o, f);
                           }));
  gim::io::write_text_file(args.out + "_coherence.csv", write_to_string([&](std::ostream& o) {
                             gim::io::write_grid_csv(o, gim::coherence(f), true, true);
                           }));

  std::optional<gim::SpectralGrid> pcoh;
  if (args.bandwidth < x.dim()) {
    std::cerr << "warning: bandwidth " << args.bandwidth << " < d=" << x.dim()
              << ": smoothed spectral matrices are rank deficient; partial coherence suppressed\n";
  } else {
    try {
      pcoh = gim::partial_coherence(f);
    } catch (const gim::SingularityError& e) {
      std::cerr << "warning: partial coherence suppressed (rank deficient spectrum): " << e.what()
                << '\n';
    }
  }
  if (pcoh) {
    sidecar["files"]["partial_coherence"] = args.out + "_pcoh.csv";
    gim::io::write_text_file(args.out + "_pcoh.csv", write_to_string([&](std::ostream& o) {
                               gim::io::write_grid_csv(o, *pcoh, true, true);
                             }));
  } else {
    sidecar["files"]["partial_coherence"] = nullptr;
  }
  gim::io::write_text_file(args.out + ".json", sidecar.dump(2) + "\n");
  std::cout << "wrote spectra for d=" << f.d << " on N=" << f.N << " frequencies to " << args.out
            << "_*.csv\n";
  return kExitOk;
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string params;
  int T = 1000;
  int burnin = -1;
  std::uint64_t seed = 1;
  std::string out = "series.csv";
};

int cmd_simulate(const SimulateArgs& args) {
  const json j = gim::io::read_json_file(args.params);
  const json& vj = j.contains("var") ? j.at("var") : j;
  gim::VarParams v;
  try {
    v = gim::io::var_from_json(vj);
  } catch (const json::exception& e) {
    throw gim::DataError(std::string("bad VAR parameters: ") + e.what());
  }
  gim::TimeSeries x = gim::simulate_var(v, args.T, args.burnin, args.seed);
  if (j.contains("labels")) {
    auto labels = j.at("labels").get<std::vector<std::string>>();
    if (static_cast<int>(labels.size()) != v.d) throw gim::DataError("labels must have d entries");
    x.labels = std::move(labels);
  }
  gim::io::write_text_file(args.out, write_to_string([&](std::ostream& o) {
                             gim::io::write_series_csv(o, x);
                           }));
  return kExitOk;
}

// --- pcoh ---------------------------------------------------------------------

struct PcohArgs {
  std::string fit_json;
  std::string out = "pcoh.csv";
};

int cmd_pcoh(const PcohArgs& args) {
  gim::io::FittedModel m;
  try {
    m = gim::io::fitted_model_from_json(gim::io::read_json_file(args.fit_json));
  } catch (const json::exception& e) {
    throw gim::DataError(std::string("malformed fit JSON: ") + e.what());
  }
  // Partial coherence straight from the inverse spectrum; missing edges are zero exactly.
  const gim::SpectralGrid g = gim::gi_inverse_spectrum(m.gi, m.N);
  gim::SpectralGrid r(g.d, g.N);
  for (int j = 0; j < g.N; ++j)
    for (int a = 0; a < g.d; ++a) {
      r[j](a, a) = 1.0;
      for (int b = a + 1; b < g.d; ++b) {
        if (!m.spec.graph.has_edge(a, b)) continue;
        const double ga = g[j](a, a).real();
        const double gb = g[j](b, b).real();
        if (!(ga > 0.0 && gb > 0.0))
          throw gim::SingularityError("fitted inverse spectrum not positive at frequency index " +
                                          std::to_string(j),
                                      j);
        r[j](a, b) = -g[j](a, b) / std::sqrt(ga * gb);
        r[j](b, a) = std::conj(r[j](a, b));
      }
    }
  gim::io::write_text_file(args.out, write_to_string([&](std::ostream& o) {
                             gim::io::write_grid_csv(o, r, true, true);
                           }));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graphical interaction models for multivariate time series"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a GI(p, G) model to a CSV series");
  fit_cmd->add_option("csv", fit.csv, "Input CSV (header row of names)")->required();
  fit_cmd->add_option("--p", fit.p, "Model order")->capture_default_str();
  fit_cmd->add_option("--edges", fit.edges, "Edges as a-b pairs, e.g. 0-1,1-2 (default: complete)");
  fit_cmd->add_option("--graph-json", fit.graph_json, "Graph JSON {\"d\":..,\"edges\":[[a,b],..]}");
  fit_cmd->add_flag("--empty", fit.empty_graph, "Use the graph without edges");
  add_taper_flags(fit_cmd, fit.taper);
  fit_cmd->add_option("--tol", fit.tol, "Convergence tolerance (scaled residuals)")->capture_default_str();
  fit_cmd->add_option("--max-cycles", fit.max_cycles, "Maximum projection cycles")->capture_default_str();
  fit_cmd->add_option("--grid", fit.grid, "Iteration grid size (0 = default)")->capture_default_str();
  fit_cmd->add_option("--data-grid", fit.data_grid, "Periodogram grid size (0 = default)")
      ->capture_default_str();
  fit_cmd->add_flag("--no-demean", fit.no_demean, "Skip demeaning (data already centred)");
  fit_cmd->add_option("--out", fit.out, "FitResult JSON path; spectra go to <stem>_*.csv")
      ->capture_default_str();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Rank (order, graph) models by BIC");
  sel_cmd->add_option("csv", sel.csv, "Input CSV (header row of names)")->required();
  sel_cmd->add_option("--p-min", sel.p_min, "Smallest order")->capture_default_str();
  sel_cmd->add_option("--p-max", sel.p_max, "Largest order")->capture_default_str();
  auto* all = sel_cmd->add_flag("--all-graphs", sel.all_graphs, "Search every graph on d vertices");
  sel_cmd->add_option("--graphs-file", sel.graphs_file, "JSON array of graphs to search")
      ->excludes(all);
  sel_cmd->add_option("--top", sel.top, "Keep only the best k rows in the report (0 = all)");
  sel_cmd->add_flag("--bic-literal", sel.bic_literal, "Score with T det(Sigma) instead of T log det(Sigma)");
  sel_cmd->add_option("--jobs", sel.jobs, "Concurrent model fits")->capture_default_str();
  sel_cmd->add_option("--max-dim", sel.max_dim, "Largest d allowed for --all-graphs")
      ->capture_default_str();
  add_taper_flags(sel_cmd, sel.taper);
  sel_cmd->add_option("--tol", sel.tol, "Convergence tolerance")->capture_default_str();
  sel_cmd->add_option("--max-cycles", sel.max_cycles, "Maximum projection cycles")->capture_default_str();
  sel_cmd->add_flag("--no-demean", sel.no_demean, "Skip demeaning");
  sel_cmd->add_option("--out", sel.out, "Output prefix for <out>.json and <out>.csv")
      ->capture_default_str();

  SpectraArgs spec;
  auto* spec_cmd = app.add_subcommand("spectra", "Nonparametric spectra, coherence, partial coherence");
  spec_cmd->add_option("csv", spec.csv, "Input CSV (header row of names)")->required();
  spec_cmd->add_option("--bandwidth", spec.bandwidth, "Odd smoothing span in frequencies")
      ->capture_default_str();
  add_taper_flags(spec_cmd, spec.taper);
  spec_cmd->add_option("--grid", spec.grid, "Grid size (0 = default)")->capture_default_str();
  spec_cmd->add_flag("--no-demean", spec.no_demean, "Skip demeaning");
  spec_cmd->add_option("--out", spec.out, "Output prefix")->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a Gaussian VAR from parameter JSON");
  sim_cmd->add_option("params", sim.params, "VarParams JSON (or a FitResult JSON)")->required();
  sim_cmd->add_option("--T", sim.T, "Number of rows to write")->capture_default_str();
  sim_cmd->add_option("--burnin", sim.burnin, "Discarded initial samples (-1 = 10p+100)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output CSV")->capture_default_str();

  PcohArgs pc;
  auto* pc_cmd = app.add_subcommand("pcoh", "Partial coherence of a fitted model");
  pc_cmd->add_option("fit_json", pc.fit_json, "FitResult JSON")->required();
  pc_cmd->add_option("--out", pc.out, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit);
    if (*sel_cmd) return cmd_select(sel);
    if (*spec_cmd) return cmd_spectra(spec);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*pc_cmd) return cmd_pcoh(pc);
  } catch (const gim::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const gim::SelectionError& e) {
    std::cerr << "selection failed: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const gim::Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
