#pragma once

#include <string>
#include <vector>

#include "relgraph/checked_program.hpp"
#include "relgraph/datastore.hpp"
#include "relgraph/factor_graph.hpp"

namespace relgraph {

struct GroundOptions {
  std::size_t max_variables = 1'000'000;
  unsigned jobs = 1;
};

/// Global numbering of every candidate open ground atom: open predicates in
/// name order, rows in lexicographic order.
class AtomIndex {
 public:
  AtomIndex(const CheckedProgram& program, const Datastore& data);

  std::optional<VarId> find(const std::string& predicate, const Row& args) const;
  std::size_t size() const { return atoms_.size(); }
  const GroundAtom& atom(VarId id) const { return atoms_[id]; }
  std::optional<int> gold(VarId id) const { return gold_[id]; }

 private:
  const Datastore* data_;
  std::map<std::string, VarId> offset_;
  std::vector<GroundAtom> atoms_;
  std::vector<std::optional<int>> gold_;
};

/// Expands one arithmetic constraint into linear constraints over global
/// variable ids: one per binding of its non-sum variables.
std::vector<LinearConstraint> expand_summation(const Constraint& constraint,
                                               const CheckedProgram& program,
                                               const Datastore& data,
                                               const AtomIndex& atoms);

/// Instantiates all templates and constraints and splits the result into
/// connected components, one FactorGraph each.
std::vector<FactorGraph> ground(const CheckedProgram& program,
                                const Datastore& data,
                                const GroundOptions& options = {});

/// Deterministic text rendering used for golden files.
std::string dump(const FactorGraph& graph, const CheckedProgram& program,
                 const Datastore& data);

struct GroundStats {
  std::size_t variables = 0;
  std::size_t potentials = 0;
  std::size_t constraints = 0;
};
GroundStats stats(const FactorGraph& graph);

}  // namespace relgraph
