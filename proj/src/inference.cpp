#include "relgraph/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>

#include <fmt/format.h>

#include "relgraph/error.hpp"
#include "relgraph/random.hpp"

namespace relgraph {

SolverKind parse_solver(const std::string& name) {
  if (name == "exact") return SolverKind::Exact;
  if (name == "approx") return SolverKind::Approx;
  throw Error(ErrorKind::UsageError,
              fmt::format("unknown solver '{}' (expected exact or approx)", name));
}

std::string to_string(SolverKind kind) { return kind == SolverKind::Exact ? "exact" : "approx"; }

std::vector<double> potential_values(const GroundRule& rule, std::span<const std::uint8_t> y) {
  std::vector<double> out(rule.num_labels());
  for (std::size_t l = 0; l < out.size(); ++l) {
    out[l] = rule.clause_for_label(l).satisfied(y) ? 1.0 : 0.0;
  }
  return out;
}

double objective(const FactorGraph& graph, const ScoreTables& scores,
                 std::span<const std::uint8_t> y) {
  double total = 0.0;
  for (std::size_t r = 0; r < graph.potentials.size(); ++r) {
    const auto psi = potential_values(graph.potentials[r], y);
    for (std::size_t l = 0; l < psi.size(); ++l) total += scores[r][l] * psi[l];
  }
  return total;
}

std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::AlignmentError,
                fmt::format("assignments of length {} and {}", a.size(), b.size()));
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != 0) != (b[i] != 0);
  return d;
}

std::vector<int> linearized_z(int s, int n) {
  std::vector<int> out;
  for (int z = 0; z <= 1; ++z) {
    if (z <= s && s <= n * z) out.push_back(z);
  }
  return out;
}

namespace {

constexpr double kEps = 1e-9;

struct WeightedClause {
  std::vector<VarId> pos;
  std::vector<VarId> neg;
  double weight = 0.0;
};

struct IntConstraint {
  std::vector<std::pair<VarId, std::int64_t>> coeffs;
  Comparator comparator = Comparator::GreaterEq;
  std::int64_t rhs = 0;
};

// The objective is Σ_t w_t min{s_t, 1} + Σ_i unary_i y_i + constant, where the
// unary part is integral (Hamming) and is added after the term sum so that
// plain problems reproduce objective() bit for bit.
// A potential's label clauses share the body; bounding them together is
// tighter than bounding each clause alone.
struct Group {
  std::vector<VarId> body_pos;
  std::vector<VarId> body_neg;
  std::vector<VarId> heads;
  bool multiclass = false;
  std::vector<double> weights;
};

struct Problem {
  std::size_t n = 0;
  std::vector<WeightedClause> terms;
  std::vector<Group> groups;
  std::vector<std::int64_t> unary;
  std::int64_t constant = 0;
  std::vector<IntConstraint> constraints;
};

IntConstraint to_int(const LinearConstraint& c) {
  std::int64_t lcm = c.rhs.den();
  for (const auto& [v, a] : c.coeffs) lcm = std::lcm(lcm, a.den());
  IntConstraint out;
  out.comparator = c.comparator;
  for (const auto& [v, a] : c.coeffs) out.coeffs.emplace_back(v, a.num() * (lcm / a.den()));
  out.rhs = c.rhs.num() * (lcm / c.rhs.den());
  return out;
}

Problem make_problem(const FactorGraph& graph, const ScoreTables& scores) {
  if (scores.size() != graph.potentials.size()) {
    throw Error(ErrorKind::AlignmentError,
                fmt::format("{} score tables for {} potentials in {}", scores.size(),
                            graph.potentials.size(), graph.instance_id));
  }
  Problem p;
  p.n = graph.size();
  p.unary.assign(p.n, 0);
  for (std::size_t r = 0; r < graph.potentials.size(); ++r) {
    const GroundRule& rule = graph.potentials[r];
    if (scores[r].size() != rule.num_labels()) {
      throw Error(ErrorKind::AlignmentError,
                  fmt::format("potential {} of {} has {} labels but {} scores", r,
                              graph.instance_id, rule.num_labels(), scores[r].size()));
    }
    for (std::size_t l = 0; l < scores[r].size(); ++l) {
      if (!std::isfinite(scores[r][l])) {
        throw Error(ErrorKind::AlignmentError,
                    fmt::format("non-finite score for potential {} of {}", r, graph.instance_id));
      }
      Clause c = rule.clause_for_label(l);
      p.terms.push_back({std::move(c.pos), std::move(c.neg), scores[r][l]});
    }
    p.groups.push_back({rule.body_pos, rule.body_neg, rule.head_vars, rule.multiclass(),
                        scores[r]});
  }
  for (const auto& c : graph.constraints) p.constraints.push_back(to_int(c));
  return p;
}

void add_hamming(Problem& p, std::span<const std::uint8_t> gold) {
  if (gold.size() != p.n) {
    throw Error(ErrorKind::AlignmentError,
                fmt::format("gold has {} values for {} variables", gold.size(), p.n));
  }
  for (std::size_t i = 0; i < p.n; ++i) {
    if (gold[i]) {
      p.unary[i] -= 1;
      p.constant += 1;
    } else {
      p.unary[i] += 1;
    }
  }
}

double evaluate(const Problem& p, std::span<const std::uint8_t> y) {
  double total = 0.0;
  for (const WeightedClause& t : p.terms) {
    bool sat = false;
    for (VarId v : t.pos) sat = sat || y[v];
    for (VarId v : t.neg) sat = sat || !y[v];
    total += t.weight * (sat ? 1.0 : 0.0);
  }
  std::int64_t extra = p.constant;
  for (std::size_t i = 0; i < p.n; ++i) extra += p.unary[i] * y[i];
  return total + static_cast<double>(extra);
}

bool feasible(const Problem& p, std::span<const std::uint8_t> y) {
  for (const auto& c : p.constraints) {
    std::int64_t lhs = 0;
    for (const auto& [v, a] : c.coeffs) lhs += a * y[v];
    if (c.comparator != Comparator::LessEq && lhs < c.rhs) return false;
    if (c.comparator != Comparator::GreaterEq && lhs > c.rhs) return false;
  }
  return true;
}

using Partial = std::vector<std::int8_t>;  // -1 free, else 0/1

// Fixes variables implied by the constraints; false on conflict.
bool propagate(const Problem& p, Partial& v) {
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& c : p.constraints) {
      std::int64_t fixed = 0, lo = 0, hi = 0;
      for (const auto& [i, a] : c.coeffs) {
        if (v[i] >= 0) {
          fixed += a * v[i];
        } else if (a > 0) {
          hi += a;
        } else {
          lo += a;
        }
      }
      const std::int64_t min_lhs = fixed + lo;
      const std::int64_t max_lhs = fixed + hi;
      const bool ge = c.comparator != Comparator::LessEq;
      const bool le = c.comparator != Comparator::GreaterEq;
      if (ge && max_lhs < c.rhs) return false;
      if (le && min_lhs > c.rhs) return false;
      for (const auto& [i, a] : c.coeffs) {
        if (v[i] >= 0 || a == 0) continue;
        const std::int64_t mag = a > 0 ? a : -a;
        if (ge && max_lhs - mag < c.rhs) {
          v[i] = a > 0 ? 1 : 0;
          changed = true;
        } else if (le && min_lhs + mag > c.rhs) {
          v[i] = a > 0 ? 0 : 1;
          changed = true;
        }
      }
    }
  }
  return true;
}

// Variables that touch nothing and carry no unary weight are set to 0, the
// lexicographically preferred value.
void fix_isolated(const Problem& p, Partial& v) {
  std::vector<bool> used(p.n, false);
  for (const WeightedClause& t : p.terms) {
    if (t.weight == 0.0) continue;
    for (VarId x : t.pos) used[x] = true;
    for (VarId x : t.neg) used[x] = true;
  }
  for (const auto& c : p.constraints) {
    for (const auto& [x, a] : c.coeffs) used[x] = true;
  }
  for (std::size_t i = 0; i < p.n; ++i) {
    if (!used[i] && p.unary[i] == 0 && v[i] < 0) v[i] = 0;
  }
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const Problem& p) : p_(p) {}

  std::optional<Assignment> run(const Partial& root) {
    search(root);
    if (!found_) return std::nullopt;
    return Assignment{best_values_, best_};
  }

 private:
  const Problem& p_;
  bool found_ = false;
  double best_ = 0.0;
  std::vector<std::uint8_t> best_values_;

  double bound(const Partial& v) const {
    double b = 0.0;
    for (const Group& g : p_.groups) {
      bool sat = false, open = false;
      for (VarId x : g.body_pos) {
        sat = sat || v[x] == 1;
        open = open || v[x] < 0;
      }
      for (VarId x : g.body_neg) {
        sat = sat || v[x] == 0;
        open = open || v[x] < 0;
      }
      double all = 0.0;
      for (double w : g.weights) all += w;
      if (sat) {
        b += all;
        continue;
      }
      // Best value with the body clause false, from the head variables alone.
      double unsat = 0.0;
      if (g.multiclass) {
        for (std::size_t l = 0; l < g.heads.size(); ++l) {
          const auto h = v[g.heads[l]];
          unsat += h < 0 ? std::max(g.weights[l], 0.0) : g.weights[l] * h;
        }
      } else {
        const auto h = v[g.heads[0]];
        unsat = h < 0 ? std::max(g.weights[0], g.weights[1]) : g.weights[h];
      }
      b += open ? std::max(all, unsat) : unsat;
    }
    std::int64_t extra = p_.constant;
    for (std::size_t i = 0; i < p_.n; ++i) {
      extra += v[i] < 0 ? std::max<std::int64_t>(p_.unary[i], 0) : p_.unary[i] * v[i];
    }
    return b + static_cast<double>(extra);
  }

  // Lexicographically compares positions [0, i] of a partial assignment with
  // the incumbent.
  int compare_prefix(const Partial& v, std::size_t i) const {
    for (std::size_t k = 0; k <= i; ++k) {
      if (v[k] != best_values_[k]) return v[k] < best_values_[k] ? -1 : 1;
    }
    return 0;
  }

  // Children are explored best-bound first; ties with the incumbent resolve to
  // the lexicographically smaller assignment.
  void search(const Partial& v) {
    const auto free = std::find(v.begin(), v.end(), -1);
    if (free == v.end()) {
      std::vector<std::uint8_t> y(v.begin(), v.end());
      const double s = evaluate(p_, y);
      if (!found_ || s > best_ + kEps || (s >= best_ - kEps && y < best_values_)) {
        found_ = true;
        best_ = s;
        best_values_ = std::move(y);
      }
      return;
    }
    const std::size_t i = static_cast<std::size_t>(free - v.begin());
    Partial child[2] = {v, v};
    double bounds[2] = {0.0, 0.0};
    bool ok[2];
    for (int value = 0; value < 2; ++value) {
      child[value][i] = static_cast<std::int8_t>(value);
      ok[value] = propagate(p_, child[value]);
      if (ok[value]) bounds[value] = bound(child[value]);
    }
    const int first = ok[1] && (!ok[0] || bounds[1] > bounds[0] + kEps) ? 1 : 0;
    for (int value : {first, 1 - first}) {
      if (!ok[value]) continue;
      if (found_) {
        if (bounds[value] < best_ - kEps) continue;
        if (bounds[value] <= best_ + kEps && compare_prefix(child[value], i) > 0) continue;
      }
      search(child[value]);
    }
  }
};

Assignment exact(const Problem& p, const SolveOptions& options, const std::string& instance,
                 Partial root) {
  if (!propagate(p, root)) {
    throw Error(ErrorKind::Infeasible, fmt::format("{}: hard constraints conflict", instance));
  }
  fix_isolated(p, root);
  const auto free = static_cast<std::size_t>(std::count(root.begin(), root.end(), -1));
  if (free > options.max_free_variables) {
    throw Error(ErrorKind::TooLarge,
                fmt::format("{}: {} free variables after propagation exceed the exact "
                            "solver cap of {}",
                            instance, free, options.max_free_variables));
  }
  auto result = BranchAndBound(p).run(root);
  if (!result) {
    throw Error(ErrorKind::Infeasible,
                fmt::format("{}: no assignment satisfies the hard constraints", instance));
  }
  return *result;
}

class LocalSearch {
 public:
  LocalSearch(const Problem& p, const Partial& fixed) : p_(p), fixed_(fixed) {
    term_occ_.resize(p.n);
    cons_occ_.resize(p.n);
    for (std::size_t t = 0; t < p.terms.size(); ++t) {
      for (VarId x : p.terms[t].pos) term_occ_[x].emplace_back(t, 1);
      for (VarId x : p.terms[t].neg) term_occ_[x].emplace_back(t, -1);
    }
    partners_.resize(p.n);
    for (std::size_t c = 0; c < p.constraints.size(); ++c) {
      for (const auto& [x, a] : p.constraints[c].coeffs) {
        cons_occ_[x].emplace_back(c, a);
        if (fixed_[x] >= 0) continue;
        for (const auto& [z, b] : p.constraints[c].coeffs) {
          if (z > x && fixed_[z] < 0) partners_[x].push_back(z);
        }
      }
    }
    for (auto& v : partners_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    for (std::size_t i = 0; i < p.n; ++i) {
      if (fixed_[i] < 0) free_.push_back(static_cast<VarId>(i));
    }
  }

  std::optional<std::vector<std::uint8_t>> run(std::vector<std::uint8_t> start, Rng& rng) {
    reset(std::move(start));
    if (!repair(rng)) return std::nullopt;
    climb();
    return y_;
  }

 private:
  const Problem& p_;
  const Partial& fixed_;
  std::vector<std::vector<std::pair<std::size_t, int>>> term_occ_;
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> cons_occ_;
  std::vector<std::vector<VarId>> partners_;
  std::vector<VarId> free_;

  std::vector<std::uint8_t> y_;
  std::vector<int> count_;          // satisfied literals per term
  std::vector<std::int64_t> lhs_;   // per constraint
  std::int64_t violation_ = 0;

  std::int64_t violation_of(std::size_t c, std::int64_t lhs) const {
    const auto& k = p_.constraints[c];
    switch (k.comparator) {
      case Comparator::GreaterEq: return std::max<std::int64_t>(k.rhs - lhs, 0);
      case Comparator::LessEq: return std::max<std::int64_t>(lhs - k.rhs, 0);
      case Comparator::Equal: return lhs > k.rhs ? lhs - k.rhs : k.rhs - lhs;
    }
    return 0;
  }

  void reset(std::vector<std::uint8_t> start) {
    y_ = std::move(start);
    count_.assign(p_.terms.size(), 0);
    for (std::size_t t = 0; t < p_.terms.size(); ++t) {
      for (VarId x : p_.terms[t].pos) count_[t] += y_[x];
      for (VarId x : p_.terms[t].neg) count_[t] += 1 - y_[x];
    }
    lhs_.assign(p_.constraints.size(), 0);
    violation_ = 0;
    for (std::size_t c = 0; c < p_.constraints.size(); ++c) {
      for (const auto& [x, a] : p_.constraints[c].coeffs) lhs_[c] += a * y_[x];
      violation_ += violation_of(c, lhs_[c]);
    }
  }

  double score_delta(VarId i) const {
    const int dir = y_[i] ? -1 : 1;
    double d = static_cast<double>(p_.unary[i] * dir);
    for (const auto& [t, sign] : term_occ_[i]) {
      const int before = count_[t];
      const int after = before + sign * dir;
      d += p_.terms[t].weight * (std::min(after, 1) - std::min(before, 1));
    }
    return d;
  }

  std::int64_t violation_delta(VarId i) const {
    const int dir = y_[i] ? -1 : 1;
    std::int64_t d = 0;
    for (const auto& [c, a] : cons_occ_[i]) {
      d += violation_of(c, lhs_[c] + a * dir) - violation_of(c, lhs_[c]);
    }
    return d;
  }

  void flip(VarId i) {
    const int dir = y_[i] ? -1 : 1;
    for (const auto& [t, sign] : term_occ_[i]) count_[t] += sign * dir;
    for (const auto& [c, a] : cons_occ_[i]) {
      violation_ -= violation_of(c, lhs_[c]);
      lhs_[c] += a * dir;
      violation_ += violation_of(c, lhs_[c]);
    }
    y_[i] = static_cast<std::uint8_t>(1 - y_[i]);
  }

  bool repair(Rng& rng) {
    const std::size_t limit = 20 * free_.size() + 100;
    for (std::size_t step = 0; violation_ > 0 && step < limit; ++step) {
      std::vector<VarId> candidates;
      for (std::size_t c = 0; c < p_.constraints.size(); ++c) {
        if (violation_of(c, lhs_[c]) == 0) continue;
        for (const auto& [x, a] : p_.constraints[c].coeffs) {
          if (fixed_[x] < 0) candidates.push_back(x);
        }
      }
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      if (candidates.empty()) return false;
      VarId pick = candidates.front();
      std::int64_t best_v = violation_delta(pick);
      double best_s = score_delta(pick);
      for (VarId x : candidates) {
        const std::int64_t dv = violation_delta(x);
        const double ds = score_delta(x);
        if (dv < best_v || (dv == best_v && ds > best_s + kEps)) {
          pick = x;
          best_v = dv;
          best_s = ds;
        }
      }
      if (best_v >= 0) {
        std::uniform_int_distribution<std::size_t> u(0, candidates.size() - 1);
        pick = candidates[u(rng)];
      }
      flip(pick);
    }
    return violation_ == 0;
  }

  void climb() {
    const std::size_t limit = 100 * (free_.size() + 1);
    for (std::size_t step = 0; step < limit; ++step) {
      double best = kEps;
      std::optional<VarId> a, b;
      for (VarId i : free_) {
        if (violation_delta(i) != 0) continue;
        const double d = score_delta(i);
        if (d > best) {
          best = d;
          a = i;
          b.reset();
        }
      }
      if (!a) {
        for (VarId i : free_) {
          if (partners_[i].empty()) continue;
          const double di = score_delta(i);
          flip(i);
          for (VarId j : partners_[i]) {
            const double d = di + score_delta(j);
            if (d > best && violation_ + violation_delta(j) == 0) {
              best = d;
              a = i;
              b = j;
            }
          }
          flip(i);
        }
      }
      if (!a) return;
      flip(*a);
      if (b) flip(*b);
    }
  }
};

Assignment approx(const Problem& p, const SolveOptions& options, const std::string& instance,
                  Partial root) {
  if (!propagate(p, root)) {
    throw Error(ErrorKind::Infeasible, fmt::format("{}: hard constraints conflict", instance));
  }
  LocalSearch search(p, root);
  Rng rng = make_stream(options.seed, "restarts");
  std::optional<Assignment> best;
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<std::uint8_t> start(p.n, 0);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < p.n; ++i) {
      if (root[i] >= 0) {
        start[i] = static_cast<std::uint8_t>(root[i]);
      } else if (r > 0) {
        start[i] = coin(rng) ? 1 : 0;
      }
    }
    auto y = search.run(std::move(start), rng);
    if (!y || !feasible(p, *y)) continue;
    const double s = evaluate(p, *y);
    if (!best || s > best->score + kEps || (s >= best->score - kEps && *y < best->values)) {
      best = Assignment{std::move(*y), s};
    }
  }
  if (!best) {
    throw Error(ErrorKind::Infeasible,
                fmt::format("{}: local search found no feasible assignment", instance));
  }
  return *best;
}

/// `fixed` pins variables before propagation; -1 leaves them free.
Assignment dispatch(const Problem& p, const SolveOptions& options, const std::string& instance,
                    Partial fixed = {}) {
  if (fixed.empty()) fixed.assign(p.n, -1);
  return options.solver == SolverKind::Exact ? exact(p, options, instance, std::move(fixed))
                                             : approx(p, options, instance, std::move(fixed));
}

}  // namespace

Assignment solve_exact(const FactorGraph& graph, const ScoreTables& scores,
                       const SolveOptions& options) {
  const Problem p = make_problem(graph, scores);
  return exact(p, options, graph.instance_id, Partial(p.n, -1));
}

Assignment solve_approx(const FactorGraph& graph, const ScoreTables& scores,
                        const SolveOptions& options) {
  const Problem p = make_problem(graph, scores);
  return approx(p, options, graph.instance_id, Partial(p.n, -1));
}

Assignment solve(const FactorGraph& graph, const ScoreTables& scores,
                 const SolveOptions& options) {
  return dispatch(make_problem(graph, scores), options, graph.instance_id);
}

Assignment solve_loss_augmented(const FactorGraph& graph, const ScoreTables& scores,
                                std::span<const std::uint8_t> gold,
                                const SolveOptions& options) {
  Problem p = make_problem(graph, scores);
  add_hamming(p, gold);
  return dispatch(p, options, graph.instance_id);
}

SolutionPool k_best(const FactorGraph& graph, const ScoreTables& scores, std::size_t k,
                    const SolveOptions& options) {
  if (k == 0) throw Error(ErrorKind::UsageError, "pool size must be at least 1");
  const Problem p = make_problem(graph, scores);
  // Lawler's partitioning: each queued entry is the best assignment of a
  // subspace given by pinned variables. Popping one splits the rest of its
  // subspace into disjoint children, one per unpinned variable.
  struct Entry {
    Assignment best;
    Partial pinned;
  };
  auto before = [](const Assignment& a, const Assignment& b) {
    return a.score > b.score || (a.score == b.score && a.values < b.values);
  };
  auto cmp = [&](const Entry& a, const Entry& b) { return before(b.best, a.best); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
  queue.push({dispatch(p, options, graph.instance_id), Partial(p.n, -1)});
  SolutionPool pool;
  while (!queue.empty() && pool.size() < k) {
    Entry e = queue.top();
    queue.pop();
    Partial child = e.pinned;
    for (std::size_t i = 0; i < p.n && pool.size() + 1 < k; ++i) {
      if (e.pinned[i] >= 0) continue;
      child[i] = static_cast<std::int8_t>(1 - e.best.values[i]);
      try {
        queue.push({dispatch(p, options, graph.instance_id, child), child});
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::Infeasible) throw;
      }
      child[i] = static_cast<std::int8_t>(e.best.values[i]);
    }
    pool.push_back(std::move(e.best));
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Assignment& a, const Assignment& b) { return a.score > b.score; });
  return pool;
}

std::string dump_lp(const FactorGraph& graph, const ScoreTables& scores) {
  const Problem p = make_problem(graph, scores);
  std::string out = fmt::format("\\ instance {}\nMaximize\n obj:", graph.instance_id);
  for (std::size_t t = 0; t < p.terms.size(); ++t) {
    out += fmt::format(" {:+.17g} z{}", p.terms[t].weight, t);
  }
  out += "\nSubject To\n";
  for (std::size_t c = 0; c < graph.constraints.size(); ++c) {
    std::string line;
    for (const auto& [v, a] : p.constraints[c].coeffs) line += fmt::format(" {:+d} y{}", a, v);
    const char* cmp = p.constraints[c].comparator == Comparator::LessEq      ? "<="
                      : p.constraints[c].comparator == Comparator::GreaterEq ? ">="
                                                                             : "=";
    out += fmt::format(" k{}:{} {} {}\n", c, line, cmp, p.constraints[c].rhs);
  }
  for (std::size_t t = 0; t < p.terms.size(); ++t) {
    const WeightedClause& term = p.terms[t];
    const auto n = static_cast<long>(term.pos.size() + term.neg.size());
    const auto negs = static_cast<long>(term.neg.size());
    std::string s_minus, s_plus;
    for (VarId v : term.pos) {
      s_minus += fmt::format(" -1 y{}", v);
      s_plus += fmt::format(" +1 y{}", v);
    }
    for (VarId v : term.neg) {
      s_minus += fmt::format(" +1 y{}", v);
      s_plus += fmt::format(" -1 y{}", v);
    }
    // z <= s and s <= n z, with s = Σ_pos y + Σ_neg (1 - y)
    out += fmt::format(" z{}_le_s: +1 z{}{} <= {}\n", t, t, s_minus, negs);
    out += fmt::format(" z{}_ge_s:{} {:+d} z{} <= {}\n", t, s_plus, -n, t, -negs);
  }
  out += "Binary\n";
  for (std::size_t i = 0; i < p.n; ++i) out += fmt::format(" y{}", i);
  for (std::size_t t = 0; t < p.terms.size(); ++t) out += fmt::format(" z{}", t);
  out += "\nEnd\n";
  return out;
}

}  // namespace relgraph
