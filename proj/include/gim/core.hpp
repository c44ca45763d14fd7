#pragma once

// Graphs, model specifications, parameter containers and the zero pattern
// that a graph imposes on the inverse-covariance parameter vector.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gim/errors.hpp"

namespace gim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Position of the unordered pair {a,b}, a < b, in lexicographic pair order.
inline int pair_index(int d, int a, int b) {
  if (a > b) std::swap(a, b);
  // pairs (0,1..d-1), (1,2..d-1), ...
  return a * (2 * d - a - 1) / 2 + (b - a - 1);
}

inline int pair_count(int d) { return d * (d - 1) / 2; }

/// Undirected simple graph on vertices 0..d-1.
class UndirectedGraph {
 public:
  using Edge = std::pair<int, int>;

  explicit UndirectedGraph(int d) : d_(d), adj_(static_cast<std::size_t>(d) * d, 0) {
    if (d < 1) throw ArgumentError("graph needs at least one vertex");
  }

  UndirectedGraph(int d, const std::vector<Edge>& edges) : UndirectedGraph(d) {
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= d || b >= d)
        throw ArgumentError("edge {" + std::to_string(a) + "," + std::to_string(b) +
                            "} out of range for d=" + std::to_string(d));
      if (a == b) throw ArgumentError("self-loop on vertex " + std::to_string(a));
      adj_[idx(a, b)] = adj_[idx(b, a)] = 1;
    }
  }

  static UndirectedGraph complete(int d) {
    UndirectedGraph g(d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        if (a != b) g.adj_[g.idx(a, b)] = 1;
    return g;
  }

  /// Graph whose edges are the set bits of `mask` over lexicographic pairs.
  static UndirectedGraph from_mask(int d, std::uint64_t mask) {
    UndirectedGraph g(d);
    if (pair_count(d) < 64 && (mask >> pair_count(d)) != 0)
      throw ArgumentError("edge mask has bits beyond the pair count");
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        if ((mask >> pair_index(d, a, b)) & 1u) g.adj_[g.idx(a, b)] = g.adj_[g.idx(b, a)] = 1;
    return g;
  }

  int dim() const noexcept { return d_; }

  bool has_edge(int a, int b) const {
    if (a < 0 || b < 0 || a >= d_ || b >= d_) throw ArgumentError("vertex out of range");
    return a != b && adj_[idx(a, b)] != 0;
  }

  /// True when a == b or {a,b} is an edge.
  bool adjacent_or_equal(int a, int b) const { return a == b || has_edge(a, b); }

  std::size_t edge_count() const {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1)) / 2;
  }

  /// Edges as (a,b) with a < b in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (int a = 0; a < d_; ++a)
      for (int b = a + 1; b < d_; ++b)
        if (adj_[idx(a, b)]) out.emplace_back(a, b);
    return out;
  }

  /// Non-adjacent distinct pairs (a,b), a < b, in lexicographic order.
  std::vector<Edge> missing_edges() const {
    std::vector<Edge> out;
    for (int a = 0; a < d_; ++a)
      for (int b = a + 1; b < d_; ++b)
        if (!adj_[idx(a, b)]) out.emplace_back(a, b);
    return out;
  }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (auto [a, b] : edges()) m |= std::uint64_t{1} << pair_index(d_, a, b);
    return m;
  }

  std::vector<int> neighbours(int v) const {
    std::vector<int> out;
    for (int w = 0; w < d_; ++w)
      if (w != v && adj_[idx(v, w)]) out.push_back(w);
    return out;
  }

  /// Graph on permuted labels: vertex v becomes perm[v].
  UndirectedGraph relabelled(const std::vector<int>& perm) const {
    std::vector<Edge> e;
    for (auto [a, b] : edges()) e.emplace_back(perm.at(a), perm.at(b));
    return UndirectedGraph(d_, e);
  }

  friend bool operator==(const UndirectedGraph& x, const UndirectedGraph& y) {
    return x.d_ == y.d_ && x.adj_ == y.adj_;
  }

 private:
  std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * d_ + b; }

  int d_;
  std::vector<char> adj_;
};

struct ModelSpec {
  int p = 0;
  UndirectedGraph graph{1};

  ModelSpec(int order, UndirectedGraph g) : p(order), graph(std::move(g)) {
    if (p < 0) throw ArgumentError("model order must be non-negative");
  }
};

/// Inverse covariances Gamma_i(0..p). Gamma_i(-u) is Gamma_i(u)'.
struct GIParams {
  int d = 0;
  int p = 0;
  std::vector<Matrix> gamma_inv;

  static GIParams zeros(int d, int p) {
    GIParams g;
    g.d = d;
    g.p = p;
    g.gamma_inv.assign(static_cast<std::size_t>(p) + 1, Matrix::Zero(d, d));
    return g;
  }

  /// Gamma_i(u) for any |u| <= p, zero beyond.
  Matrix lag(int u) const {
    if (u > p || u < -p) return Matrix::Zero(d, d);
    return u >= 0 ? gamma_inv[u] : Matrix(gamma_inv[-u].transpose());
  }
};

/// X(t) = sum_v a(v) X(t-v) + eps(t), Cov(eps) = sigma. a[0] holds a(1).
struct VarParams {
  int d = 0;
  int p = 0;
  std::vector<Matrix> a;
  Matrix sigma;

  static VarParams white_noise(const Matrix& sigma) {
    VarParams v;
    v.d = static_cast<int>(sigma.rows());
    v.p = 0;
    v.sigma = sigma;
    return v;
  }
};

/// One coordinate of theta: Gamma_i(u)_{ab}.
struct ThetaIndex {
  int a = 0;
  int b = 0;
  int u = 0;

  friend bool operator==(const ThetaIndex&, const ThetaIndex&) = default;
};

/// theta = (vech Gamma_i(0); vec Gamma_i(1); ...; vec Gamma_i(p)).
/// vech takes the lower triangle column by column, vec stacks full columns.
inline std::vector<ThetaIndex> theta_layout(int d, int p) {
  std::vector<ThetaIndex> out;
  out.reserve(static_cast<std::size_t>(d * (d + 1) / 2 + p * d * d));
  for (int b = 0; b < d; ++b)
    for (int a = b; a < d; ++a) out.push_back({a, b, 0});
  for (int u = 1; u <= p; ++u)
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) out.push_back({a, b, u});
  return out;
}

struct ZeroPattern {
  std::vector<ThetaIndex> layout;
  std::vector<bool> free;

  std::size_t free_count() const {
    return static_cast<std::size_t>(std::count(free.begin(), free.end(), true));
  }

  /// Positions of free coordinates within the layout.
  std::vector<int> free_positions() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < free.size(); ++k)
      if (free[k]) out.push_back(static_cast<int>(k));
    return out;
  }
};

inline ZeroPattern make_zero_pattern(int p, const UndirectedGraph& g) {
  if (p < 0) throw ArgumentError("model order must be non-negative");
  ZeroPattern z;
  z.layout = theta_layout(g.dim(), p);
  z.free.reserve(z.layout.size());
  for (const auto& t : z.layout) z.free.push_back(g.adjacent_or_equal(t.a, t.b));
  return z;
}

/// Number of free parameters of GI(p, G): d + |E| + p (d + 2|E|).
inline long param_count(int p, const UndirectedGraph& g) {
  if (p < 0) throw ArgumentError("model order must be non-negative");
  const long d = g.dim();
  const long e = static_cast<long>(g.edge_count());
  return d + e + p * (d + 2 * e);
}

inline Vector to_theta(const GIParams& gi) {
  const auto layout = theta_layout(gi.d, gi.p);
  Vector th(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& t = layout[k];
    th(static_cast<Eigen::Index>(k)) = gi.gamma_inv[t.u](t.a, t.b);
  }
  return th;
}

/// Inverse of to_theta; the lag-0 block is filled symmetrically.
inline GIParams from_theta(const Vector& theta, int d, int p) {
  const auto layout = theta_layout(d, p);
  if (static_cast<std::size_t>(theta.size()) != layout.size())
    throw ArgumentError("theta length does not match (d, p)");
  GIParams gi = GIParams::zeros(d, p);
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& t = layout[k];
    const double v = theta(static_cast<Eigen::Index>(k));
    gi.gamma_inv[t.u](t.a, t.b) = v;
    if (t.u == 0) gi.gamma_inv[0](t.b, t.a) = v;
  }
  return gi;
}

inline GIParams apply_zero_pattern(const GIParams& theta, const UndirectedGraph& g) {
  if (theta.d != g.dim())
    throw ArgumentError("GI parameters have d=" + std::to_string(theta.d) +
                        " but graph has d=" + std::to_string(g.dim()));
  GIParams out = theta;
  for (auto [a, b] : g.missing_edges())
    for (auto& m : out.gamma_inv) m(a, b) = m(b, a) = 0.0;
  return out;
}

/// True iff every path in `g` from A to B meets S.
inline bool separates(const UndirectedGraph& g, const std::vector<int>& A,
                      const std::vector<int>& B, const std::vector<int>& S) {
  const int d = g.dim();
  if (A.empty() || B.empty()) throw ArgumentError("separation sets A and B must be nonempty");
  std::vector<int> owner(static_cast<std::size_t>(d), -1);
  auto claim = [&](const std::vector<int>& set, int tag) {
    for (int v : set) {
      if (v < 0 || v >= d) throw ArgumentError("vertex " + std::to_string(v) + " out of range");
      if (owner[v] != -1 && owner[v] != tag)
        throw ArgumentError("vertex " + std::to_string(v) + " appears in two of A, B, S");
      owner[v] = tag;
    }
  };
  claim(A, 0);
  claim(B, 1);
  claim(S, 2);

  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  std::deque<int> queue(A.begin(), A.end());
  for (int v : A) seen[v] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (owner[v] == 1) return false;
    for (int w : g.neighbours(v)) {
      if (seen[w] || owner[w] == 2) continue;
      seen[w] = 1;
      queue.push_back(w);
    }
  }
  return true;
}

inline constexpr int kDefaultEnumerationMaxDim = 5;

inline unsigned long long graph_count(int d) {
  const int pairs = pair_count(d);
  if (pairs >= 64) return ~0ull;
  return 1ull << pairs;
}

/// All graphs on d vertices in edge-bitmask order. Refuses d > max_dim.
inline std::vector<UndirectedGraph> enumerate_graphs(int d,
                                                     int max_dim = kDefaultEnumerationMaxDim) {
  if (d < 1) throw ArgumentError("enumerate_graphs needs d >= 1");
  const auto count = graph_count(d);
  if (d > max_dim)
    throw RefusalError("refusing to enumerate " + std::to_string(count) + " graphs on d=" +
                           std::to_string(d) + " vertices (limit d <= " +
                           std::to_string(max_dim) + ")",
                       count);
  if (pair_count(d) >= 40) throw RefusalError("graph count too large to enumerate", count);
  std::vector<UndirectedGraph> out;
  out.reserve(count);
  for (std::uint64_t m = 0; m < count; ++m) out.push_back(UndirectedGraph::from_mask(d, m));
  return out;
}

}  // namespace gim
