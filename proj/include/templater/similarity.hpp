#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/mapping.hpp"
#include "templater/text.hpp"

namespace templater {

struct ScoringWeights {
  double alpha = 0.5;
  double beta = 0.25;
  double gamma = 0.25;
  bool operator==(const ScoringWeights&) const = default;
};

/// Rescales the weights to sum to one. Returns false (and leaves the input
/// alone) when no rescaling was needed.
inline bool normalize(ScoringWeights& w) {
  if (w.alpha < 0 || w.beta < 0 || w.gamma < 0 || !std::isfinite(w.alpha) || !std::isfinite(w.beta) ||
      !std::isfinite(w.gamma)) {
    fail(ErrorKind::InvalidConfig, "scoring weights must be finite and non-negative");
  }
  const double sum = w.alpha + w.beta + w.gamma;
  if (sum <= 0) fail(ErrorKind::InvalidConfig, "scoring weights must not all be zero");
  if (std::abs(sum - 1.0) <= 1e-12) return false;
  w.alpha /= sum;
  w.beta /= sum;
  w.gamma /= sum;
  return true;
}

inline constexpr double kHydrogenMass = 1.008;

inline bool hydrogen_like(const AtomNode& n, double tolerance = 0.01) noexcept {
  return std::abs(n.mass - kHydrogenMass) <= tolerance;
}

namespace detail {

/// Size of the intersection of two multisets.
template <typename T>
std::size_t multiset_overlap(std::vector<T> a, std::vector<T> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace detail

struct ScoreDetail {
  double score = 0.0;
  int depth = 0;
};

/// Depth-shell similarity between a reactant and a product node. Shells are
/// the nodes at exact hop distance k inside each node's own molecule; the
/// neighborhood terms are multiset overlaps of shell types and masses.
inline ScoreDetail similarity_detail(NodeIndex vr, NodeIndex vp, const UnifiedGraph& reac, const UnifiedGraph& prod,
                                     const ScoringWeights& w) {
  const int d = std::max(1, std::min(eccentricity_within_component(reac, vr), eccentricity_within_component(prod, vp)));
  const auto shells_r = distance_shells(reac, vr, d);
  const auto shells_p = distance_shells(prod, vp, d);
  const auto& a = reac.node(vr);
  const auto& b = prod.node(vp);
  const double delta_t = a.type == b.type ? 1.0 : 0.0;
  const double delta_m = same_mass(a.mass, b.mass) ? 1.0 : 0.0;

  double sum = 0.0;
  std::size_t visited_r = 0, visited_p = 0;
  for (int k = 1; k <= d; ++k) {
    std::vector<int> types_r, types_p;
    std::vector<long long> masses_r, masses_p;
    for (const auto u : shells_r[static_cast<std::size_t>(k)]) {
      types_r.push_back(reac.node(u).type);
      masses_r.push_back(mass_key(reac.node(u).mass));
    }
    for (const auto u : shells_p[static_cast<std::size_t>(k)]) {
      types_p.push_back(prod.node(u).type);
      masses_p.push_back(mass_key(prod.node(u).mass));
    }
    visited_r += types_r.size();
    visited_p += types_p.size();
    const auto np = static_cast<double>(detail::multiset_overlap(types_r, types_p));
    const auto nm = static_cast<double>(detail::multiset_overlap(masses_r, masses_p));
    sum += w.alpha * delta_t + w.beta * delta_m + w.gamma * (np + nm);
  }
  const auto visited = static_cast<double>(std::max<std::size_t>({visited_r, visited_p, 1}));
  return {sum / visited, d};
}

inline double similarity_score(NodeIndex vr, NodeIndex vp, const UnifiedGraph& reac, const UnifiedGraph& prod,
                               const ScoringWeights& w = {}) {
  return similarity_detail(vr, vp, reac, prod, w).score;
}

using Matrix = std::vector<std::vector<double>>;

struct SimilarityMatrix {
  std::vector<NodeIndex> rows;
  std::vector<NodeIndex> cols;
  Matrix scores;
  std::vector<std::vector<int>> depths;
};

/// Scores every unmapped reactant node against every unmapped product node.
inline SimilarityMatrix build_similarity_matrix(const AtomMapping& m, const UnifiedGraph& reac,
                                                const UnifiedGraph& prod, const ScoringWeights& w = {}) {
  SimilarityMatrix s;
  s.rows = m.unmapped_reactants();
  s.cols = m.unmapped_products();
  s.scores.assign(s.rows.size(), std::vector<double>(s.cols.size(), 0.0));
  s.depths.assign(s.rows.size(), std::vector<int>(s.cols.size(), 0));
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    for (std::size_t j = 0; j < s.cols.size(); ++j) {
      const auto detail = similarity_detail(s.rows[i], s.cols[j], reac, prod, w);
      s.scores[i][j] = detail.score;
      s.depths[i][j] = detail.depth;
    }
  }
  return s;
}

struct CostMatrix {
  Matrix entries;
  /// How the negated scores were mapped onto [0, 1].
  std::string method = "min-max";
  double offset = 0.0;
  double scale = 1.0;
};

/// C = -S, then min-max normalized; a constant matrix becomes all zeros.
inline CostMatrix build_cost_matrix(const Matrix& scores) {
  CostMatrix c;
  c.entries = scores;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto& row : c.entries) {
    for (auto& x : row) {
      x = -x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(hi > lo)) {
    for (auto& row : c.entries) std::fill(row.begin(), row.end(), 0.0);
    c.offset = std::isfinite(lo) ? lo : 0.0;
    c.scale = 0.0;
    return c;
  }
  for (auto& row : c.entries) {
    for (auto& x : row) x = (x - lo) / (hi - lo);
  }
  c.offset = lo;
  c.scale = hi - lo;
  return c;
}

inline CostMatrix build_cost_matrix(const SimilarityMatrix& s) { return build_cost_matrix(s.scores); }

struct Assignment {
  /// (row, col), ascending by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
  double cost = 0.0;
};

namespace detail {

/// Shortest augmenting path assignment for n <= m (rows <= cols). Returns the
/// column assigned to each row and the total cost.
inline std::pair<std::vector<std::size_t>, double> augmenting_path_lsap(const Matrix& a) {
  const std::size_t n = a.size();
  if (n == 0) return {{}, 0.0};
  const std::size_t m = a[0].size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0, potentials u (rows) and v (cols).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of(n, 0);
  double cost = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) {
      col_of[p[j] - 1] = j - 1;
      cost += a[p[j] - 1][j - 1];
    }
  }
  return {col_of, cost};
}

inline Matrix transpose(const Matrix& a) {
  if (a.empty()) return {};
  Matrix t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  }
  return t;
}

/// Optimal cost of matching min(|rows|, |cols|) pairs within a submatrix.
inline double optimal_cost(const Matrix& a, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  Matrix sub(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) sub[i][j] = a[rows[i]][cols[j]];
  }
  if (sub.size() > sub[0].size()) sub = transpose(sub);
  return augmenting_path_lsap(sub).second;
}

}  // namespace detail

/// Minimum-cost matching of min(rows, cols) pairs. Among optimal matchings
/// the one with the lexicographically smallest (row, col) list is returned.
inline Assignment solve_assignment(const Matrix& cost) {
  Assignment out;
  const std::size_t n = cost.size();
  const std::size_t m = n == 0 ? 0 : cost[0].size();
  for (const auto& row : cost) {
    if (row.size() != m) fail(ErrorKind::InvalidConfig, "cost matrix rows differ in length");
    for (const double x : row) {
      if (!std::isfinite(x)) fail(ErrorKind::NumericalFailure, "cost matrix has a non-finite entry");
    }
  }
  if (n == 0 || m == 0) {
    for (std::size_t i = 0; i < n; ++i) out.unmatched_rows.push_back(i);
    for (std::size_t j = 0; j < m; ++j) out.unmatched_cols.push_back(j);
    return out;
  }

  std::vector<std::size_t> rows(n), cols(m);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  for (std::size_t j = 0; j < m; ++j) cols[j] = j;
  const double optimum = detail::optimal_cost(cost, rows, cols);
  const double tolerance = 1e-9 * std::max(1.0, std::abs(optimum));

  // Commit rows in order to their smallest column that keeps the optimum.
  double committed = 0.0;
  std::vector<std::size_t> free_cols = cols;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> rest_rows(rows.begin() + static_cast<std::ptrdiff_t>(i) + 1, rows.end());
    bool placed = false;
    if (!free_cols.empty()) {
      for (std::size_t k = 0; k < free_cols.size(); ++k) {
        const std::size_t j = free_cols[k];
        auto rest_cols = free_cols;
        rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(k));
        // Every pair must still be formed: min(rows, cols) pairs overall.
        if (out.pairs.size() + 1 + std::min(rest_rows.size(), rest_cols.size()) != std::min(n, m)) continue;
        const double total = committed + cost[i][j] + detail::optimal_cost(cost, rest_rows, rest_cols);
        if (total <= optimum + tolerance) {
          out.pairs.emplace_back(i, j);
          committed += cost[i][j];
          free_cols = std::move(rest_cols);
          placed = true;
          break;
        }
      }
    }
    if (!placed) out.unmatched_rows.push_back(i);
  }
  out.unmatched_cols = free_cols;
  out.cost = committed;
  return out;
}

inline Assignment solve_assignment(const CostMatrix& c) { return solve_assignment(c.entries); }

/// Solves the assignment over the unmapped nodes and records the matched
/// pairs with similarity provenance.
inline Assignment assign_by_similarity(AtomMapping& m, const SimilarityMatrix& s) {
  const auto assignment = solve_assignment(build_cost_matrix(s));
  for (const auto& [i, j] : assignment.pairs) m.map(s.rows[i], s.cols[j], Provenance::Similarity);
  return assignment;
}

namespace detail {

/// Mapped neighbors of v whose images are bonded to p.
inline int preserved_around(const AtomMapping& m, const UnifiedGraph& reac, const UnifiedGraph& prod, NodeIndex v,
                            NodeIndex p, std::optional<NodeIndex> skip = std::nullopt) {
  int n = 0;
  for (const auto u : reac.neighbors(v)) {
    if (skip && u == *skip) continue;
    if (const auto fu = m.image(u); fu && prod.adjacent(*fu, p)) ++n;
  }
  return n;
}

/// Score cache for S(v, p); recomputing shells dominates otherwise.
class ScoreCache {
 public:
  ScoreCache(const UnifiedGraph& reac, const UnifiedGraph& prod, const ScoringWeights& w)
      : reac_(reac), prod_(prod), w_(w) {}

  double operator()(NodeIndex v, NodeIndex p) {
    const auto key = std::pair(v, p);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double s = similarity_score(v, p, reac_, prod_, w_);
    cache_.emplace(key, s);
    return s;
  }

 private:
  const UnifiedGraph& reac_;
  const UnifiedGraph& prod_;
  ScoringWeights w_;
  std::map<std::pair<NodeIndex, NodeIndex>, double> cache_;
};

}  // namespace detail

struct RefineStats {
  std::size_t moves = 0;
};

/// Re-pairs hydrogen-like atoms around each mapped pair (v, p) so that the
/// hydrogens bonded to v land on hydrogens bonded to p. A hydrogen h of v
/// whose image is not bonded to p trades images with the preimage of a
/// hydrogen of p that is not bonded to v, or moves onto that hydrogen if it
/// has no preimage. A trade is kept only if it increases the number of
/// preserved bonds. Conserved pairs are never touched.
inline RefineStats swap_hydrogens(AtomMapping& m, const UnifiedGraph& reac, const UnifiedGraph& prod,
                                  double tolerance = 0.01) {
  RefineStats stats;
  const auto free_h = [&](NodeIndex h) { return hydrogen_like(reac.node(h), tolerance) && !m.is_conserved(h); };
  const auto local_preserved = [&](NodeIndex x) {
    const auto fx = m.image(x);
    return fx ? detail::preserved_around(m, reac, prod, x, *fx) : 0;
  };

  bool improved = true;
  while (improved) {
    improved = false;
    for (const auto& pair : m.pairs()) {
      const NodeIndex v = pair.reactant;
      const NodeIndex p = pair.product;
      if (reac.degree(v) == prod.degree(p) && detail::preserved_around(m, reac, prod, v, p) ==
                                                  static_cast<int>(reac.degree(v))) {
        continue;
      }
      for (const auto h : reac.neighbors(v)) {
        if (!free_h(h)) continue;
        const auto fh = m.image(h);
        if (!fh || prod.adjacent(*fh, p)) continue;
        for (const auto hp : prod.neighbors(p)) {
          if (!hydrogen_like(prod.node(hp), tolerance)) continue;
          const auto g = m.preimage(hp);
          if (g && (reac.adjacent(*g, v) || m.is_conserved(*g))) continue;
          const int before = local_preserved(h) + (g ? local_preserved(*g) : 0);
          const auto ph = m.provenance(h);
          const auto pg = g ? m.provenance(*g) : std::nullopt;
          m.unmap(h);
          if (g) m.unmap(*g);
          m.map(h, hp, Provenance::HydrogenSwapped);
          if (g) m.map(*g, *fh, Provenance::HydrogenSwapped);
          const int after = local_preserved(h) + (g ? local_preserved(*g) : 0);
          if (after > before) {
            ++stats.moves;
            improved = true;
            break;
          }
          m.unmap(h);
          if (g) m.unmap(*g);
          m.map(h, *fh, *ph);
          if (g) m.map(*g, hp, *pg);
        }
        if (improved) break;
      }
      if (improved) break;
    }
  }
  return stats;
}

/// Local search over the non-conserved part of the mapping. A move either
/// swaps the images of two reactant atoms, sends one atom to a free product
/// atom, or hands an image over to a free reactant atom; every pair a move
/// creates must agree on mass (same element). After each move the
/// hydrogens around the moved atoms are re-seated, and the move is kept if
/// it raises the objective: S summed over non-conserved pairs, plus one per
/// preserved bond, plus one per non-conserved pair of the same element.
/// Conserved pairs are never touched and cardinality is unchanged.
inline RefineStats refine_symmetric_paths(AtomMapping& m, const UnifiedGraph& reac, const UnifiedGraph& prod,
                                          const ScoringWeights& w = {}, double hydrogen_tolerance = 0.01) {
  RefineStats stats;
  detail::ScoreCache score(reac, prod, w);
  const auto objective = [&](const AtomMapping& x) {
    double total = static_cast<double>(preserved_edge_count(x, reac, prod));
    for (const auto& pair : x.pairs()) {
      if (pair.provenance == Provenance::Conserved) continue;
      total += score(pair.reactant, pair.product);
      if (same_mass(reac.node(pair.reactant).mass, prod.node(pair.product).mass)) total += 1.0;
    }
    return total;
  };
  const auto movable = [&](NodeIndex v) { return m.image(v) && !m.is_conserved(v); };
  const auto element = [&](NodeIndex v, NodeIndex p) { return same_mass(reac.node(v).mass, prod.node(p).mass); };
  constexpr double eps = 1e-9;

  double current = objective(m);
  // Applies `move` to a copy, re-seats hydrogens and keeps it if better.
  const auto attempt = [&](auto&& move) {
    AtomMapping trial = m;
    move(trial);
    swap_hydrogens(trial, reac, prod, hydrogen_tolerance);
    const double value = objective(trial);
    if (value > current + eps) {
      m = std::move(trial);
      current = value;
      ++stats.moves;
      return true;
    }
    return false;
  };

  bool improved = true;
  while (improved) {
    improved = false;
    for (NodeIndex a = 0; a < reac.size() && !improved; ++a) {
      if (!movable(a)) continue;
      const NodeIndex fa = *m.image(a);

      for (NodeIndex b = a + 1; b < reac.size() && !improved; ++b) {
        if (!movable(b)) continue;
        const NodeIndex fb = *m.image(b);
        if (!element(a, fb) || !element(b, fa)) continue;
        improved = attempt([&](AtomMapping& x) {
          x.unmap(a);
          x.unmap(b);
          x.map(a, fb, Provenance::PathRefined);
          x.map(b, fa, Provenance::PathRefined);
        });
      }

      for (NodeIndex q = 0; q < prod.size() && !improved; ++q) {
        if (m.preimage(q) || !element(a, q)) continue;
        improved = attempt([&](AtomMapping& x) {
          x.unmap(a);
          x.map(a, q, Provenance::PathRefined);
        });
      }

      for (NodeIndex b = 0; b < reac.size() && !improved; ++b) {
        if (m.image(b) || !element(b, fa)) continue;
        improved = attempt([&](AtomMapping& x) {
          x.unmap(a);
          x.map(b, fa, Provenance::PathRefined);
        });
      }
    }
  }
  return stats;
}

/// CSV of a similarity matrix; headers are "<molecule>:<source id>".
inline std::string similarity_csv(const SimilarityMatrix& s, const UnifiedGraph& reac, const UnifiedGraph& prod) {
  const auto label = [](const AtomNode& n) {
    return std::to_string(n.component) + ":" + std::to_string(n.source_id);
  };
  std::string out = "reactant\\product";
  for (const auto c : s.cols) out += "," + label(prod.node(c));
  out += '\n';
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    out += label(reac.node(s.rows[i]));
    for (std::size_t j = 0; j < s.cols.size(); ++j) out += "," + text::fixed6(s.scores[i][j]);
    out += '\n';
  }
  return out;
}

}  // namespace templater
