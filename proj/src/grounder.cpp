#include "relgraph/grounder.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "relgraph/parallel.hpp"

namespace relgraph {

namespace {

using Slots = std::vector<std::optional<SymbolId>>;

struct CompiledTerm {
  int slot = -1;                    // variable slot, or -1 for a constant
  std::optional<SymbolId> constant;  // nullopt constant = unknown symbol
};

struct CompiledAtom {
  std::string predicate;
  std::vector<CompiledTerm> terms;
  bool open = false;
  bool negated = false;

  bool bound(const Slots& s) const {
    for (const auto& t : terms) {
      if (t.slot >= 0 && !s[t.slot]) return false;
    }
    return true;
  }
  // Ground row, or nullopt if a constant is unknown to the datastore.
  std::optional<Row> ground(const Slots& s) const {
    Row row;
    row.reserve(terms.size());
    for (const auto& t : terms) {
      if (t.slot >= 0) {
        row.push_back(*s[t.slot]);
      } else if (t.constant) {
        row.push_back(*t.constant);
      } else {
        return std::nullopt;
      }
    }
    return row;
  }
};

struct CompiledGuard {
  CompiledTerm lhs;
  CompiledTerm rhs;
  bool equal = true;
};

// Enumerates the variable bindings of a rule body against the datastore.
// Positive literals (and negated open literals whose variables nothing else
// binds) generate candidate rows; negated closed literals and guards filter.
class BodyEnumerator {
 public:
  BodyEnumerator(const RuleTemplate& rule,
                 const std::map<std::string, std::string>& var_types,
                 const CheckedProgram& program, const Datastore& data)
      : data_(data) {
    int next = 0;
    for (const auto& [name, type] : var_types) slot_of_[name] = next++;
    slot_count_ = static_cast<std::size_t>(next);

    std::set<std::string> positively_bound;
    for (const auto& lit : rule.body) {
      if (lit.negated) continue;
      for (const auto& t : lit.atom.args) {
        if (t.is_variable()) positively_bound.insert(t.text);
      }
    }
    for (const auto& lit : rule.body) {
      body_.push_back(compile(lit, program));
      const CompiledAtom& a = body_.back();
      bool generator = !lit.negated;
      if (lit.negated && a.open) {
        for (const auto& t : lit.atom.args) {
          if (t.is_variable() && !positively_bound.contains(t.text)) generator = true;
        }
      }
      if (generator) {
        generators_.push_back(body_.size() - 1);
      } else if (!a.open) {
        closed_filters_.push_back(body_.size() - 1);
      }
    }
    for (const auto& g : rule.guards) {
      guards_.push_back({compile_term(g.lhs), compile_term(g.rhs), g.equal});
    }
    head_ = compile(rule.head, program);
  }

  const std::vector<CompiledAtom>& body() const { return body_; }
  const CompiledAtom& head() const { return head_; }
  std::size_t slot_count() const { return slot_count_; }
  int slot(const std::string& var) const { return slot_of_.at(var); }

  void run(const std::function<void(const Slots&)>& emit) const {
    Slots slots(slot_count_);
    std::vector<bool> used(generators_.size(), false);
    recurse(slots, used, generators_.size(), emit);
  }

 private:
  const Datastore& data_;
  std::map<std::string, int> slot_of_;
  std::size_t slot_count_ = 0;
  std::vector<CompiledAtom> body_;
  CompiledAtom head_;
  std::vector<std::size_t> generators_;
  std::vector<std::size_t> closed_filters_;
  std::vector<CompiledGuard> guards_;

  CompiledTerm compile_term(const Term& t) const {
    CompiledTerm ct;
    if (t.is_constant()) {
      ct.constant = data_.symbol(t.text);
    } else {
      ct.slot = slot_of_.at(t.text);
    }
    return ct;
  }

  CompiledAtom compile(const Literal& lit, const CheckedProgram& program) const {
    CompiledAtom a;
    a.predicate = lit.atom.predicate;
    a.open = program.predicate(a.predicate).is_open();
    a.negated = lit.negated;
    for (const auto& t : lit.atom.args) a.terms.push_back(compile_term(t));
    return a;
  }

  static std::optional<SymbolId> value(const CompiledTerm& t, const Slots& s) {
    return t.slot >= 0 ? s[t.slot] : t.constant;
  }

  bool filters_pass(const Slots& s) const {
    for (const auto& g : guards_) {
      if (g.lhs.slot >= 0 && !s[g.lhs.slot]) continue;
      if (g.rhs.slot >= 0 && !s[g.rhs.slot]) continue;
      const auto l = value(g.lhs, s);
      const auto r = value(g.rhs, s);
      const bool eq = l && r && *l == *r;
      if (eq != g.equal) return false;
    }
    for (std::size_t i : closed_filters_) {
      const CompiledAtom& a = body_[i];
      if (!a.bound(s)) continue;
      auto row = a.ground(s);
      if (row && data_.table(a.predicate).contains(*row)) return false;
    }
    return true;
  }

  void recurse(Slots& slots, std::vector<bool>& used, std::size_t remaining,
               const std::function<void(const Slots&)>& emit) const {
    if (!filters_pass(slots)) return;
    if (remaining == 0) {
      emit(slots);
      return;
    }
    // Most-bound generator next; ties go to source order.
    std::size_t pick = generators_.size();
    int best_bound = -1;
    for (std::size_t g = 0; g < generators_.size(); ++g) {
      if (used[g]) continue;
      int bound = 0;
      for (const auto& t : body_[generators_[g]].terms) {
        if (t.slot < 0 || slots[t.slot]) ++bound;
      }
      if (bound > best_bound) {
        best_bound = bound;
        pick = g;
      }
    }
    const CompiledAtom& atom = body_[generators_[pick]];
    std::vector<std::optional<SymbolId>> key(atom.terms.size());
    for (std::size_t i = 0; i < atom.terms.size(); ++i) {
      const auto& t = atom.terms[i];
      if (t.slot >= 0) {
        key[i] = slots[t.slot];
      } else if (!t.constant) {
        return;  // unknown constant never matches
      } else {
        key[i] = t.constant;
      }
    }
    const GroundAtomTable& table = data_.table(atom.predicate);
    used[pick] = true;
    for (std::size_t r : table.match(key)) {
      const Row& row = table.rows()[r];
      Slots next = slots;
      bool ok = true;
      for (std::size_t i = 0; i < atom.terms.size() && ok; ++i) {
        const auto& t = atom.terms[i];
        if (t.slot < 0) continue;
        if (next[t.slot]) {
          ok = *next[t.slot] == row[i];
        } else {
          next[t.slot] = row[i];
        }
      }
      if (ok) recurse(next, used, remaining - 1, emit);
    }
    used[pick] = false;
  }
};

Row slots_to_row(const Slots& s) {
  Row r;
  r.reserve(s.size());
  for (const auto& v : s) r.push_back(v.value_or(0));
  return r;
}

void sort_unique(std::vector<VarId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

bool intersects(const std::vector<VarId>& a, const std::vector<VarId>& b) {
  for (VarId x : a) {
    if (std::binary_search(b.begin(), b.end(), x)) return true;
  }
  return false;
}

// Ground body state after resolving open atoms: nullopt if the body is false
// (so the grounding is vacuous).
struct GroundBody {
  std::vector<VarId> pos;  // negated open literals
  std::vector<VarId> neg;  // positive open literals
  std::vector<Row> args;
};

std::optional<GroundBody> resolve_body(const BodyEnumerator& en,
                                       const Slots& slots,
                                       const AtomIndex& atoms) {
  GroundBody out;
  for (const auto& a : en.body()) {
    auto row = a.ground(slots);
    if (a.open) {
      std::optional<VarId> v;
      if (row) v = atoms.find(a.predicate, *row);
      if (!v) {
        // Non-candidate open atoms are false.
        if (!a.negated) return std::nullopt;
      } else if (a.negated) {
        out.pos.push_back(*v);
      } else {
        out.neg.push_back(*v);
      }
    }
    out.args.push_back(row.value_or(Row{}));
  }
  sort_unique(out.pos);
  sort_unique(out.neg);
  return out;
}

std::vector<GroundRule> ground_template(const CheckedProgram& program,
                                        std::size_t index, const Datastore& data,
                                        const AtomIndex& atoms) {
  const Template& t = program.templates()[index];
  BodyEnumerator en(t.rule, t.var_types, program, data);
  const int label_slot =
      t.label_position ? en.slot(t.rule.head.atom.args[*t.label_position].text) : -1;
  const std::string label_type =
      t.label_position
          ? program.predicate(t.rule.head.atom.predicate).arg_types[*t.label_position]
          : std::string();

  struct Item {
    Row key;
    GroundRule rule;
    std::size_t label = 0;
  };
  std::vector<Item> items;
  en.run([&](const Slots& slots) {
    auto body = resolve_body(en, slots, atoms);
    if (!body) return;
    auto head_row = en.head().ground(slots);
    if (!head_row) return;
    auto head = atoms.find(en.head().predicate, *head_row);
    if (!head) return;
    // Head repeated in the body makes the clause a tautology for some label.
    if (std::binary_search(body->pos.begin(), body->pos.end(), *head) ||
        std::binary_search(body->neg.begin(), body->neg.end(), *head) ||
        intersects(body->pos, body->neg)) {
      return;
    }
    Item item;
    item.rule.template_index = index;
    item.rule.body_pos = std::move(body->pos);
    item.rule.body_neg = std::move(body->neg);
    item.rule.head_vars = {*head};
    item.rule.body_args = std::move(body->args);
    item.rule.head_args = *head_row;
    Slots key = slots;
    if (label_slot >= 0) {
      auto idx = data.vocab_index(label_type, *slots[label_slot]);
      if (!idx) return;
      item.label = *idx;
      key[label_slot] = std::nullopt;
    }
    item.key = slots_to_row(key);
    item.rule.binding = item.key;
    items.push_back(std::move(item));
  });
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.key != b.key ? a.key < b.key : a.label < b.label;
  });

  std::vector<GroundRule> out;
  if (label_slot < 0) {
    for (auto& it : items) out.push_back(std::move(it.rule));
    return out;
  }
  // Multiclass: alternatives that differ only in the label merge into one rule.
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    GroundRule merged = items[i].rule;
    merged.head_vars.clear();
    while (j < items.size() && items[j].key == items[i].key) {
      if (merged.label_ids.empty() || merged.label_ids.back() != items[j].label) {
        merged.head_vars.push_back(items[j].rule.head_var());
        merged.label_ids.push_back(items[j].label);
      }
      ++j;
    }
    out.push_back(std::move(merged));
    i = j;
  }
  return out;
}

std::vector<LinearConstraint> ground_clause_constraint(const CheckedProgram& program,
                                                       const Constraint& c,
                                                       const Datastore& data,
                                                       const AtomIndex& atoms) {
  BodyEnumerator en(*c.clause, c.var_types, program, data);
  std::vector<std::pair<Row, LinearConstraint>> found;
  en.run([&](const Slots& slots) {
    auto body = resolve_body(en, slots, atoms);
    if (!body) return;
    Clause clause{std::move(body->pos), std::move(body->neg)};
    auto head_row = en.head().ground(slots);
    std::optional<VarId> head;
    if (head_row) head = atoms.find(en.head().predicate, *head_row);
    if (head) {
      (en.head().negated ? clause.neg : clause.pos).push_back(*head);
    } else if (en.head().negated) {
      return;  // head atom is false, so its negation holds
    }
    sort_unique(clause.pos);
    sort_unique(clause.neg);
    if (intersects(clause.pos, clause.neg)) return;
    if (clause.size() == 0) {
      throw Error(ErrorKind::InfeasibleConstant,
                  fmt::format("constraint {} is violated by the observed data", c.id),
                  c.clause->span);
    }
    found.emplace_back(slots_to_row(slots), rule_to_inequality(clause, c.id));
  });
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<LinearConstraint> out;
  std::set<std::pair<std::vector<std::pair<VarId, Rational>>, Rational>> seen;
  for (auto& [key, lc] : found) {
    if (seen.emplace(lc.coeffs, lc.rhs).second) out.push_back(std::move(lc));
  }
  return out;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

AtomIndex::AtomIndex(const CheckedProgram& program, const Datastore& data)
    : data_(&data) {
  for (const auto& [name, decl] : program.predicates()) {
    if (!decl.is_open()) continue;
    offset_[name] = static_cast<VarId>(atoms_.size());
    const GroundAtomTable& t = data.table(name);
    for (std::size_t r = 0; r < t.size(); ++r) {
      atoms_.push_back({name, t.rows()[r]});
      gold_.push_back(t.gold()[r]);
    }
  }
}

std::optional<VarId> AtomIndex::find(const std::string& predicate,
                                     const Row& args) const {
  auto it = offset_.find(predicate);
  if (it == offset_.end()) return std::nullopt;
  auto r = data_->table(predicate).find(args);
  if (!r) return std::nullopt;
  return it->second + static_cast<VarId>(*r);
}

std::vector<LinearConstraint> expand_summation(const Constraint& constraint,
                                               const CheckedProgram& program,
                                               const Datastore& data,
                                               const AtomIndex& atoms) {
  const ArithmeticConstraint& ac = *constraint.arith;
  // Slots for the shared (non-sum) variables.
  std::set<std::string> shared;
  for (const auto& term : ac.terms) {
    for (const auto& arg : term.atom.args) {
      if (arg.is_variable()) shared.insert(arg.text);
    }
  }
  std::map<std::string, int> slot_of;
  for (const auto& name : shared) {
    slot_of.emplace(name, static_cast<int>(slot_of.size()));
  }
  const std::size_t nslots = slot_of.size();

  struct TermRows {
    std::vector<std::size_t> rows;  // rows matching the term's constants
  };
  std::vector<TermRows> term_rows;
  for (const auto& term : ac.terms) {
    const GroundAtomTable& table = data.table(term.atom.predicate);
    std::vector<std::optional<SymbolId>> key(term.atom.args.size());
    bool impossible = false;
    for (std::size_t i = 0; i < term.atom.args.size(); ++i) {
      if (term.atom.args[i].is_constant()) {
        auto id = data.symbol(term.atom.args[i].text);
        if (!id) impossible = true;
        key[i] = id;
      }
    }
    TermRows tr;
    if (!impossible) tr.rows = table.match(key);
    term_rows.push_back(std::move(tr));
  }

  auto project = [&](std::size_t term, std::size_t row) -> std::optional<Row> {
    const Atom& atom = ac.terms[term].atom;
    const Row& values = data.table(atom.predicate).rows()[row];
    Slots s(nslots);
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (!atom.args[i].is_variable()) continue;
      auto& slot = s[slot_of.at(atom.args[i].text)];
      if (slot && *slot != values[i]) return std::nullopt;
      slot = values[i];
    }
    return slots_to_row(s);
  };

  // Bindings of the shared variables: union of the projections of every
  // term's rows. Terms not mentioning a variable match any value of it.
  std::set<Row> bindings;
  std::vector<std::vector<std::pair<Row, std::size_t>>> projected(ac.terms.size());
  for (std::size_t t = 0; t < ac.terms.size(); ++t) {
    for (std::size_t r : term_rows[t].rows) {
      if (auto p = project(t, r)) projected[t].emplace_back(*p, r);
    }
  }
  std::vector<std::vector<bool>> mentions(ac.terms.size(), std::vector<bool>(nslots, false));
  for (std::size_t t = 0; t < ac.terms.size(); ++t) {
    for (const auto& arg : ac.terms[t].atom.args) {
      if (arg.is_variable()) mentions[t][slot_of.at(arg.text)] = true;
    }
  }
  bool any_covers = nslots == 0;
  for (std::size_t t = 0; t < ac.terms.size(); ++t) {
    bool covers_all = true;
    for (std::size_t s = 0; s < nslots; ++s) covers_all = covers_all && mentions[t][s];
    if (!covers_all) continue;
    any_covers = true;
    for (const auto& [p, r] : projected[t]) bindings.insert(p);
  }
  if (!any_covers) {
    throw Error(ErrorKind::InvalidConstraint,
                fmt::format("constraint {}: no term binds every shared variable",
                            constraint.id),
                ac.span);
  }
  if (nslots == 0) bindings.insert(Row{});

  std::vector<LinearConstraint> out;
  for (const Row& b : bindings) {
    std::map<VarId, Rational> coeffs;
    Rational constant;
    for (std::size_t t = 0; t < ac.terms.size(); ++t) {
      const bool open = program.predicate(ac.terms[t].atom.predicate).is_open();
      for (const auto& [p, r] : projected[t]) {
        bool match = true;
        for (std::size_t s = 0; s < nslots && match; ++s) {
          if (mentions[t][s]) match = p[s] == b[s];
        }
        if (!match) continue;
        if (open) {
          const Row& values = data.table(ac.terms[t].atom.predicate).rows()[r];
          coeffs[*atoms.find(ac.terms[t].atom.predicate, values)] +=
              ac.terms[t].coefficient;
        } else {
          constant += ac.terms[t].coefficient;
        }
      }
    }
    LinearConstraint lc;
    lc.comparator = ac.comparator;
    lc.rhs = ac.rhs - constant;
    lc.origin = constraint.id;
    for (const auto& [v, a] : coeffs) {
      if (!a.is_zero()) lc.coeffs.emplace_back(v, a);
    }
    if (lc.coeffs.empty()) {
      const std::vector<std::uint8_t> none;
      if (!lc.satisfied(none)) {
        throw Error(ErrorKind::InfeasibleConstant,
                    fmt::format("constraint {} reduces to 0 {} {}", constraint.id,
                                to_string(lc.comparator), lc.rhs.str()),
                    ac.span);
      }
      continue;
    }
    out.push_back(std::move(lc));
  }
  return out;
}

std::vector<FactorGraph> ground(const CheckedProgram& program,
                                const Datastore& data,
                                const GroundOptions& options) {
  const AtomIndex atoms(program, data);
  if (atoms.size() > options.max_variables) {
    throw Error(ErrorKind::GroundingExplosion,
                fmt::format("{} variables exceed the cap of {}", atoms.size(),
                            options.max_variables));
  }
  if (atoms.size() == 0) return {};

  const std::size_t nt = program.templates().size();
  const std::size_t nc = program.constraints().size();
  std::vector<std::vector<GroundRule>> rules(nt);
  std::vector<std::vector<LinearConstraint>> cons(nc);
  parallel_for(nt + nc, options.jobs, [&](std::size_t i) {
    if (i < nt) {
      rules[i] = ground_template(program, i, data, atoms);
    } else {
      const Constraint& c = program.constraints()[i - nt];
      cons[i - nt] = c.is_arith() ? expand_summation(c, program, data, atoms)
                                  : ground_clause_constraint(program, c, data, atoms);
    }
  });

  UnionFind uf(atoms.size());
  auto rule_vars = [](const GroundRule& r) {
    std::vector<VarId> vs = r.body_pos;
    vs.insert(vs.end(), r.body_neg.begin(), r.body_neg.end());
    vs.insert(vs.end(), r.head_vars.begin(), r.head_vars.end());
    return vs;
  };
  for (const auto& list : rules) {
    for (const auto& r : list) {
      auto vs = rule_vars(r);
      for (VarId v : vs) uf.unite(vs.front(), v);
    }
  }
  for (const auto& list : cons) {
    for (const auto& c : list) {
      for (const auto& [v, a] : c.coeffs) uf.unite(c.coeffs.front().first, v);
    }
  }

  // Components ordered by their smallest variable.
  std::map<std::size_t, std::size_t> component_of_root;
  std::vector<std::size_t> component(atoms.size());
  std::vector<VarId> local(atoms.size());
  std::vector<FactorGraph> graphs;
  for (VarId v = 0; v < atoms.size(); ++v) {
    const std::size_t root = uf.find(v);
    auto [it, inserted] = component_of_root.emplace(root, graphs.size());
    if (inserted) {
      graphs.emplace_back();
      graphs.back().instance_id = fmt::format("g{}", graphs.size() - 1);
    }
    FactorGraph& g = graphs[it->second];
    component[v] = it->second;
    local[v] = static_cast<VarId>(g.variables.size());
    g.variables.push_back({local[v], atoms.atom(v), atoms.gold(v)});
  }
  auto remap = [&](std::vector<VarId>& vs) {
    for (auto& v : vs) v = local[v];
  };
  for (auto& list : rules) {
    for (auto& r : list) {
      FactorGraph& g = graphs[component[r.head_var()]];
      remap(r.body_pos);
      remap(r.body_neg);
      remap(r.head_vars);
      std::sort(r.body_pos.begin(), r.body_pos.end());
      std::sort(r.body_neg.begin(), r.body_neg.end());
      g.potentials.push_back(std::move(r));
    }
  }
  for (auto& list : cons) {
    for (auto& c : list) {
      FactorGraph& g = graphs[component[c.coeffs.front().first]];
      for (auto& [v, a] : c.coeffs) v = local[v];
      g.constraints.push_back(std::move(c));
    }
  }
  return graphs;
}

GroundStats stats(const FactorGraph& graph) {
  return {graph.variables.size(), graph.potentials.size(), graph.constraints.size()};
}

std::string dump(const FactorGraph& graph, const CheckedProgram& program,
                 const Datastore& data) {
  std::string out = fmt::format("instance {}\n", graph.instance_id);
  out += fmt::format("variables {}\n", graph.variables.size());
  for (const auto& v : graph.variables) {
    out += fmt::format("  y{} {} gold={}\n", v.id, to_string(v.atom, data),
                       v.gold ? std::to_string(*v.gold) : "?");
  }
  out += fmt::format("potentials {}\n", graph.potentials.size());
  for (std::size_t i = 0; i < graph.potentials.size(); ++i) {
    const GroundRule& r = graph.potentials[i];
    out += fmt::format("  p{} {} I+={{{}}} I-={{{}}}", i,
                       program.templates()[r.template_index].id,
                       fmt::join(r.pos_vars(), ","), fmt::join(r.neg_vars(), ","));
    if (r.multiclass()) {
      out += fmt::format(" labels={{{}}}\n", fmt::join(r.head_vars, ","));
    } else {
      out += fmt::format(" head={}\n", r.head_var());
    }
  }
  out += fmt::format("constraints {}\n", graph.constraints.size());
  for (std::size_t i = 0; i < graph.constraints.size(); ++i) {
    const LinearConstraint& c = graph.constraints[i];
    out += fmt::format("  k{} {}: {}\n", i, c.origin, to_string(c));
  }
  return out;
}

}  // namespace relgraph
