#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include "relgraph/grounder.hpp"
#include "support.hpp"

using namespace relgraph;
using testing::row;

namespace {

struct Small {
  CheckedProgram program;
  Datastore data;
};

Small build(const std::string& text, const RawData& raw) {
  auto p = testing::compile(text);
  auto d = Datastore::build(p, raw);
  return {std::move(p), std::move(d)};
}

std::size_t total(const std::vector<FactorGraph>& gs, std::size_t GroundStats::*field) {
  std::size_t n = 0;
  for (const auto& g : gs) n += stats(g).*field;
  return n;
}

std::string render(const std::vector<FactorGraph>& gs, const Small& s) {
  std::string out;
  for (const auto& g : gs) out += dump(g, s.program, s.data);
  return out;
}

const char* kVotes = R"(
entity User
entity Claim
predicate Agree(User, Claim)?
predicate VoteFor(User, User)?
rule: Agree(X, C) & VoteFor(Y, X) => Agree(Y, C)
)";

RawData votes_raw() {
  RawData raw;
  raw.tables["Agree"] = {row({"u1", "k"}), row({"u2", "k"})};
  raw.tables["VoteFor"] = {row({"u1", "u1"}), row({"u1", "u2"}), row({"u2", "u1"}),
                           row({"u2", "u2"})};
  return raw;
}

}  // namespace

TEST_CASE("vote propagation template grounds once per ordered pair of distinct users") {
  const auto s = build(kVotes, votes_raw());
  const auto graphs = ground(s.program, s.data);
  // Self-votes appear in no potential and become singleton components.
  REQUIRE(graphs.size() == 3);
  CHECK(graphs[1].size() == 1);
  CHECK(graphs[2].size() == 1);
  const auto& g = graphs[0];
  // Agree(u1,k)=0, Agree(u2,k)=1, VoteFor(u1,u2)=2, VoteFor(u2,u1)=3.
  REQUIRE(g.variables.size() == 4);
  CHECK(to_string(g.variables[3].atom, s.data) == "VoteFor(\"u2\",\"u1\")");
  REQUIRE(g.potentials.size() == 2);
  // X=u1, Y=u2: body Agree(u1,k), VoteFor(u2,u1); head Agree(u2,k).
  CHECK(g.potentials[0].body_neg == std::vector<VarId>{0, 3});
  CHECK(g.potentials[0].head_var() == 1);
  CHECK(g.potentials[1].body_neg == std::vector<VarId>{1, 2});
  CHECK(g.potentials[1].head_var() == 0);
  for (const auto& r : g.potentials) {
    CHECK(r.body_pos.empty());
    CHECK(r.pos_vars() == std::vector<VarId>{r.head_var()});
  }
}

TEST_CASE("rule_to_inequality") {
  auto lc = rule_to_inequality(Clause{{2}, {0, 1}});
  CHECK(to_string(lc) == "-1*y0 -1*y1 +1*y2 >= -1");
  CHECK(to_string(rule_to_inequality(Clause{{0}, {}})) == "+1*y0 >= 1");
  CHECK(to_string(rule_to_inequality(Clause{{}, {0}})) == "-1*y0 >= 0");
}

TEST_CASE("clause satisfaction matches the linear inequality") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    Clause c;
    for (VarId v = 0; v < n; ++v) (rng() % 2 ? c.pos : c.neg).push_back(v);
    const auto lc = rule_to_inequality(c);
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      std::vector<std::uint8_t> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = (bits >> i) & 1u;
      CHECK(c.satisfied(y) == lc.satisfied(y));
    }
  }
}

TEST_CASE("expand_summation") {
  SUBCASE("one-hot over ideologies") {
    RawData raw;
    raw.tables["Ideology"] = {row({"u1", "lib"}), row({"u1", "con"})};
    const auto s = build(
        "entity User\nentity Label\npredicate Ideology(User, Label)?\n"
        "arith: Ideology(X, +I) = 1\n",
        raw);
    const AtomIndex atoms(s.program, s.data);
    const auto out = expand_summation(s.program.constraints()[0], s.program, s.data, atoms);
    REQUIRE(out.size() == 1);
    CHECK(to_string(out[0]) == "+1*y0 +1*y1 = 1");
    CHECK(to_string(atoms.atom(0), s.data) == "Ideology(\"u1\",\"con\")");
  }
  SUBCASE("at most one outgoing link") {
    RawData raw;
    raw.tables["Link"] = {row({"a", "b"}), row({"a", "c"}), row({"a", "d"}),
                          row({"b", "c"})};
    const auto s = build(
        "entity C\npredicate Link(C, C)?\narith: Link(C1, +C2) <= 1\n", raw);
    const AtomIndex atoms(s.program, s.data);
    const auto out = expand_summation(s.program.constraints()[0], s.program, s.data, atoms);
    REQUIRE(out.size() == 2);
    CHECK(to_string(out[0]) == "+1*y0 +1*y1 +1*y2 <= 1");
    CHECK(to_string(out[1]) == "+1*y3 <= 1");
  }
  SUBCASE("empty sums") {
    RawData raw;
    raw.tables["Link"] = {row({"a", "b"})};
    const auto s = build(
        "entity C\npredicate Link(C, C)?\n"
        "arith: Link(\"b\", +X) <= 1\n"
        "arith: Link(\"b\", +X) >= 1\n",
        raw);
    const AtomIndex atoms(s.program, s.data);
    CHECK(expand_summation(s.program.constraints()[0], s.program, s.data, atoms).empty());
    try {
      expand_summation(s.program.constraints()[1], s.program, s.data, atoms);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleConstant);
    }
  }
  SUBCASE("closed terms move to the right-hand side") {
    RawData raw;
    raw.tables["Pick"] = {row({"a", "x"}), row({"a", "y"})};
    raw.tables["Fixed"] = {row({"a", "z"})};
    const auto s = build(
        "entity E\nentity O\npredicate Pick(E, O)?\npredicate Fixed(E, O)\n"
        "arith: Pick(X, +O) + 2 * Fixed(X, +P) <= 3\n",
        raw);
    const AtomIndex atoms(s.program, s.data);
    const auto out = expand_summation(s.program.constraints()[0], s.program, s.data, atoms);
    REQUIRE(out.size() == 1);
    CHECK(to_string(out[0]) == "+1*y0 +1*y1 <= 1");
  }
}

TEST_CASE("grounding edge cases") {
  SUBCASE("no open atoms") {
    RawData raw;
    raw.tables["In"] = {row({"a"})};
    const auto s = build("entity E\npredicate In(E)\npredicate P(E)?\nrule: In(X) => P(X)\n",
                         raw);
    CHECK(ground(s.program, s.data).empty());
  }
  SUBCASE("variable cap") {
    const auto s = build(kVotes, votes_raw());
    GroundOptions opts;
    opts.max_variables = 5;
    try {
      ground(s.program, s.data, opts);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GroundingExplosion);
    }
  }
  SUBCASE("closed literals gate groundings") {
    RawData raw;
    raw.tables["In"] = {row({"a"}), row({"b"}), row({"c"})};
    raw.tables["Banned"] = {row({"b"})};
    raw.tables["P"] = {row({"a"}), row({"b"}), row({"c"})};
    const auto s = build(
        "entity E\npredicate In(E)\npredicate Banned(E)\npredicate P(E)?\n"
        "rule: In(X) & ~Banned(X) => P(X)\n",
        raw);
    const auto graphs = ground(s.program, s.data);
    CHECK(graphs.size() == 3);
    CHECK(total(graphs, &GroundStats::potentials) == 2);
  }
  SUBCASE("a hard clause with nothing left to decide is infeasible") {
    RawData raw;
    raw.tables["In"] = {row({"a"}), row({"b"})};
    raw.tables["P"] = {row({"a"})};
    const auto s = build("entity E\npredicate In(E)\npredicate P(E)?\n"
                         "hardconstraint: In(X) => P(X)?\n",
                         raw);
    try {
      ground(s.program, s.data);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleConstant);
    }
  }
  SUBCASE("negated non-candidate head is already satisfied") {
    RawData raw;
    raw.tables["In"] = {row({"a"}), row({"b"})};
    raw.tables["P"] = {row({"a"})};
    const auto s = build("entity E\npredicate In(E)\npredicate P(E)?\n"
                         "hardconstraint: In(X) => ~P(X)?\n",
                         raw);
    const auto graphs = ground(s.program, s.data);
    REQUIRE(graphs.size() == 1);
    REQUIRE(graphs[0].constraints.size() == 1);
    CHECK(to_string(graphs[0].constraints[0]) == "-1*y0 >= 0");
  }
}

TEST_CASE("variables are exactly the candidate open atoms") {
  for (const char* name : {"open_domain", "issue_stance", "arg_mining"}) {
    CAPTURE(name);
    const auto f = testing::load_fixture(name);
    std::size_t candidates = 0;
    for (const auto& [pred, decl] : f.program.predicates()) {
      if (decl.is_open()) candidates += f.data.table(pred).size();
    }
    const auto graphs = ground(f.program, f.data);
    CHECK(total(graphs, &GroundStats::variables) == candidates);
    std::set<GroundAtom> seen;
    for (const auto& g : graphs) {
      for (std::size_t i = 0; i < g.variables.size(); ++i) {
        CHECK(g.variables[i].id == i);
        CHECK(seen.insert(g.variables[i].atom).second);
      }
      for (const auto& r : g.potentials) {
        for (VarId v : r.pos_vars()) CHECK(v < g.size());
        for (VarId v : r.neg_vars()) CHECK(v < g.size());
        std::vector<VarId> both;
        const auto pos = r.pos_vars();
        const auto neg = r.neg_vars();
        std::set_intersection(pos.begin(), pos.end(), neg.begin(), neg.end(),
                              std::back_inserter(both));
        CHECK(both.empty());
      }
      for (const auto& c : g.constraints) {
        CHECK_FALSE(c.coeffs.empty());
        for (const auto& [v, a] : c.coeffs) CHECK(v < g.size());
      }
    }
  }
}

TEST_CASE("gold labels of the fixtures satisfy every hard constraint") {
  for (const char* name : {"open_domain", "issue_stance", "arg_mining"}) {
    CAPTURE(name);
    const auto f = testing::load_fixture(name);
    for (const auto& g : ground(f.program, f.data)) {
      const auto gold = g.gold_assignment();
      REQUIRE(gold.has_value());
      CHECK(g.feasible(*gold));
    }
  }
}

TEST_CASE("fixture grounding counts") {
  // Hand-counted from the fixture data.
  struct Expect {
    const char* name;
    std::size_t graphs, variables, potentials, constraints;
  };
  for (const Expect& e : {Expect{"open_domain", 6, 26, 24, 18},
                          Expect{"issue_stance", 2, 8, 8, 16},
                          Expect{"arg_mining", 1, 42, 27, 57}}) {
    CAPTURE(e.name);
    const auto f = testing::load_fixture(e.name);
    const auto graphs = ground(f.program, f.data);
    CHECK(graphs.size() == e.graphs);
    CHECK(total(graphs, &GroundStats::variables) == e.variables);
    CHECK(total(graphs, &GroundStats::potentials) == e.potentials);
    CHECK(total(graphs, &GroundStats::constraints) == e.constraints);
  }
}

TEST_CASE("argument-mining multiclass and tree constraints") {
  const auto f = testing::load_fixture("arg_mining");
  const auto graphs = ground(f.program, f.data);
  REQUIRE(graphs.size() == 1);
  const auto& g = graphs[0];
  std::size_t multiclass = 0;
  for (const auto& r : g.potentials) {
    if (r.multiclass()) {
      ++multiclass;
      CHECK(r.num_labels() == 3);
      CHECK(r.label_ids == std::vector<std::size_t>{0, 1, 2});
    }
  }
  CHECK(multiclass == 3);
  std::size_t one_hot = 0;
  std::size_t tree = 0;
  for (const auto& c : g.constraints) {
    if (c.origin == "c5") {
      ++one_hot;
      CHECK(c.coeffs.size() == 3);
      CHECK(c.comparator == Comparator::Equal);
      CHECK(c.rhs == Rational(1));
    }
    if (c.origin == "c6") {
      ++tree;
      CHECK(c.coeffs.size() == 2);
      CHECK(c.comparator == Comparator::LessEq);
    }
  }
  CHECK(one_hot == 3);
  CHECK(tree == 3);
}

TEST_CASE("grounding is deterministic across runs and thread counts") {
  for (const char* name : {"open_domain", "issue_stance", "arg_mining"}) {
    CAPTURE(name);
    const auto f = testing::load_fixture(name);
    const Small s{f.program, f.data};
    const auto reference = render(ground(f.program, f.data), s);
    for (unsigned jobs : {1u, 2u, 8u}) {
      GroundOptions opts;
      opts.jobs = jobs;
      CHECK(render(ground(f.program, f.data, opts), s) == reference);
    }
  }
}

TEST_CASE("golden grounding dumps") {
  for (const char* name : {"open_domain", "issue_stance", "arg_mining"}) {
    CAPTURE(name);
    const auto f = testing::load_fixture(name);
    const Small s{f.program, f.data};
    const auto text = render(ground(f.program, f.data), s);
    const auto golden = testing::fixture(name) / "ground.golden";
    if (std::getenv("RELGRAPH_UPDATE_GOLDEN")) std::ofstream(golden) << text;
    CHECK(text == testing::read_file(golden));
  }
}
