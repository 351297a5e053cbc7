#pragma once

// MAP inference over a scored factor graph. A potential's score table holds
// one weight per head label; the objective is Σ_r Σ_l w_rl · min{s_rl, 1},
// where s_rl counts satisfied literals of the rule's clause for label l.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relgraph/factor_graph.hpp"

namespace relgraph {

/// Per-potential weights, aligned with FactorGraph::potentials and with each
/// rule's head labels.
using ScoreTables = std::vector<std::vector<double>>;

struct Assignment {
  std::vector<std::uint8_t> values;
  double score = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Distinct feasible assignments in non-increasing score order.
using SolutionPool = std::vector<Assignment>;

enum class SolverKind { Exact, Approx };
SolverKind parse_solver(const std::string& name);
std::string to_string(SolverKind kind);

struct SolveOptions {
  SolverKind solver = SolverKind::Exact;
  /// Exact solver: maximum free variables left after unit propagation.
  std::size_t max_free_variables = 40;
  /// Approximate solver: number of local-search starts.
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
};

/// min{s, 1} for each head label of `rule` under `y`.
std::vector<double> potential_values(const GroundRule& rule, std::span<const std::uint8_t> y);

/// Σ_r Σ_l w_rl ψ_rl(y), summed in potential then label order.
double objective(const FactorGraph& graph, const ScoreTables& scores,
                 std::span<const std::uint8_t> y);

std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// z values allowed by z <= s and s <= n·z for a clause of n literals with s
/// satisfied; always exactly {min(s, 1)}.
std::vector<int> linearized_z(int s, int n);

/// Provably optimal feasible assignment; among optima, the lexicographically
/// smallest bit vector. Raises Infeasible or TooLarge.
Assignment solve_exact(const FactorGraph& graph, const ScoreTables& scores,
                       const SolveOptions& options = {});

/// Seeded local search with constraint repair. The result is feasible and no
/// single flip (or flip pair sharing a constraint) improves it.
Assignment solve_approx(const FactorGraph& graph, const ScoreTables& scores,
                        const SolveOptions& options = {});

/// Dispatches on options.solver.
Assignment solve(const FactorGraph& graph, const ScoreTables& scores,
                 const SolveOptions& options = {});

/// MAP of objective + Hamming distance to `gold`. The returned score is the
/// augmented objective.
Assignment solve_loss_augmented(const FactorGraph& graph, const ScoreTables& scores,
                                std::span<const std::uint8_t> gold,
                                const SolveOptions& options = {});

/// Up to k best feasible assignments, found by partitioning the solution space
/// around each solution in turn.
/// Exact when options.solver is Exact.
SolutionPool k_best(const FactorGraph& graph, const ScoreTables& scores, std::size_t k,
                    const SolveOptions& options = {});

/// The linearized program in an LP-format-like text.
std::string dump_lp(const FactorGraph& graph, const ScoreTables& scores);

}  // namespace relgraph
