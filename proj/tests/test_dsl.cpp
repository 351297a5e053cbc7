#include <doctest.h>

#include <algorithm>
#include <random>

#include "relgraph/checked_program.hpp"
#include "relgraph/program.hpp"
#include "support.hpp"

using namespace relgraph;

namespace {

const char* kVotes = R"(
entity User features=2
entity Claim
predicate Agree(User, Claim)?
predicate VoteFor(User, User)
)";

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("parse: weighted template") {
  auto p = parse_program("rule: Agree(X, C) & VoteFor(Y, X) => Agree(Y, C)");
  REQUIRE(p.rules.size() == 1);
  const RuleTemplate& r = p.rules[0];
  CHECK(r.weighted);
  REQUIRE(r.body.size() == 2);
  CHECK(r.body[0].atom.predicate == "Agree");
  CHECK(r.body[1].atom.predicate == "VoteFor");
  CHECK(r.head.atom.predicate == "Agree");
  CHECK(r.head.atom.args[0] == Term::variable("Y"));
  CHECK(r.head.atom.args[1] == Term::variable("C"));
}

TEST_CASE("parse: empty input") {
  CHECK(parse_program("").empty());
  CHECK(parse_program("  // only a comment\n\n").empty());
}

TEST_CASE("parse: summation constraint") {
  auto p = parse_program("arith: Ideology(X, +I) = 1");
  REQUIRE(p.arith.size() == 1);
  const auto& a = p.arith[0];
  REQUIRE(a.terms.size() == 1);
  CHECK(a.terms[0].coefficient == Rational(1));
  CHECK(a.terms[0].atom.args[1] == Term::sum("I"));
  CHECK(a.comparator == Comparator::Equal);
  CHECK(a.rhs == Rational(1));
}

TEST_CASE("parse: arithmetic coefficients") {
  auto p = parse_program("arith: 2 * A(X) - 1/2 B(X, +Y) + C(\"k\") >= -3/4");
  const auto& a = p.arith.at(0);
  REQUIRE(a.terms.size() == 3);
  CHECK(a.terms[0].coefficient == Rational(2));
  CHECK(a.terms[1].coefficient == Rational(-1, 2));
  CHECK(a.terms[2].coefficient == Rational(1));
  CHECK(a.terms[2].atom.args[0] == Term::constant("k"));
  CHECK(a.comparator == Comparator::GreaterEq);
  CHECK(a.rhs == Rational(-3, 4));
}

TEST_CASE("parse: syntax errors carry position and expected set") {
  try {
    parse_program("entity A\nrule: A(X) => \n");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SyntaxError);
    CHECK(e.span().line == 3);
    CHECK(std::string(e.what()).find("expected") != std::string::npos);
  }
  CHECK(kind_of([] { parse_program("rule: 0.5 A(X) => B(X)"); }) ==
        ErrorKind::SyntaxError);
  CHECK(kind_of([] { parse_program("rule: A(x) => B(x)"); }) ==
        ErrorKind::SyntaxError);
  CHECK(kind_of([] { parse_program("rule: A(+X) => B(X)"); }) ==
        ErrorKind::SyntaxError);
  CHECK(kind_of([] { parse_program("predicate P(A"); }) == ErrorKind::SyntaxError);
}

TEST_CASE("validate: rejects closed heads and unbound head variables") {
  const std::string decls = "entity E\npredicate A(E)\npredicate B(E, E)?\n";
  CHECK(kind_of([&] { testing::compile(decls + "rule: B(X, Y) => A(X)"); }) ==
        ErrorKind::ClosedHeadRelation);
  CHECK(kind_of([&] { testing::compile(decls + "rule: A(X) => B(X, Y)"); }) ==
        ErrorKind::UnboundHeadVariable);
  CHECK(kind_of([&] { testing::compile(decls + "rule: C(X) => B(X, X)"); }) ==
        ErrorKind::UndeclaredPredicate);
  CHECK(kind_of([&] { testing::compile(decls + "rule: A(X, X) => B(X, X)"); }) ==
        ErrorKind::TypeMismatch);
  CHECK(kind_of([&] { testing::compile(decls + "rule: A(X) => ~B(X, X)"); }) ==
        ErrorKind::NegatedWeightedHead);
  CHECK(kind_of([&] { testing::compile(decls + "rule: A(X)? => B(X, X)"); }) ==
        ErrorKind::OpennessConflict);
  CHECK(kind_of([&] {
          testing::compile(decls + "rule: A(X) => B(X, X)\nrule: A(Y) => B(Y, Y)");
        }) == ErrorKind::DuplicateTemplate);
  CHECK(kind_of([] { testing::compile("predicate P(Missing)?"); }) ==
        ErrorKind::UndeclaredEntity);
  CHECK(kind_of([] { testing::compile("entity E\nentity E"); }) ==
        ErrorKind::DuplicateDeclaration);
  CHECK(kind_of([] {
          testing::compile("entity E\nentity F\npredicate P(E, F)?\n"
                           "predicate Q(E, E)\nrule: Q(X, Y) => P(X, Y)");
        }) == ErrorKind::TypeMismatch);
}

TEST_CASE("validate: error spans point at the offending statement") {
  try {
    testing::compile("entity E\npredicate A(E)\n\nrule: A(X) => A(X)");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ClosedHeadRelation);
    CHECK(e.span().line == 4);
  }
}

TEST_CASE("validate: template ids are stable") {
  auto p = testing::compile(std::string(kVotes) +
                            "rule: Agree(X, C) & VoteFor(Y, X) => Agree(Y, C)\n"
                            "hardconstraint: Agree(X, C)? & VoteFor(X, Y) => Agree(Y, C)?\n"
                            "rule named: VoteFor(Y, X) & Agree(X, C) => Agree(Y, C)\n");
  REQUIRE(p.templates().size() == 2);
  CHECK(p.templates()[0].id == "rule0");
  CHECK(p.templates()[1].id == "named");
  REQUIRE(p.constraints().size() == 1);
  CHECK(p.constraints()[0].id == "c0");
}

TEST_CASE("validate: declaration order does not matter") {
  const std::vector<std::string> lines = {
      "entity User features=2", "entity Claim", "predicate Agree(User, Claim)?",
      "predicate VoteFor(User, User)", "predicate Likes(User, Claim)"};
  const std::string rules =
      "rule: Agree(X, C) & VoteFor(Y, X) => Agree(Y, C)\n"
      "rule: Likes(X, C) => Agree(X, C)\n";
  auto join = [&](const std::vector<std::string>& ls) {
    std::string s;
    for (const auto& l : ls) s += l + "\n";
    return s + rules;
  };
  const auto reference = testing::compile(join(lines));
  auto perm = lines;
  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto p = testing::compile(join(perm));
    CHECK(p.entities() == reference.entities());
    CHECK(p.predicates() == reference.predicates());
    REQUIRE(p.templates().size() == reference.templates().size());
    for (std::size_t t = 0; t < p.templates().size(); ++t) {
      CHECK(p.templates()[t].id == reference.templates()[t].id);
      CHECK(p.templates()[t].var_types == reference.templates()[t].var_types);
    }
  }
}

TEST_CASE("to_disjunctive_form") {
  auto p = parse_program("rule: Agree(X, C) & VoteFor(Y, X) => Agree(Y, C)\n"
                         "hardconstraint: => A(X)\n"
                         "hardconstraint: ~A(X) => ~B(X)\n");
  auto d0 = to_disjunctive_form(p.rules[0]);
  REQUIRE(d0.size() == 3);
  CHECK(to_string(d0[0]) == "~Agree(X, C)");
  CHECK(to_string(d0[1]) == "~VoteFor(Y, X)");
  CHECK(to_string(d0[2]) == "Agree(Y, C)");
  auto d1 = to_disjunctive_form(p.rules[1]);
  REQUIRE(d1.size() == 1);
  CHECK(to_string(d1[0]) == "A(X)");
  auto d2 = to_disjunctive_form(p.rules[2]);
  REQUIRE(d2.size() == 2);
  CHECK(to_string(d2[0]) == "A(X)");
  CHECK(to_string(d2[1]) == "~B(X)");
}

TEST_CASE("to_disjunctive_form agrees with the implication on every assignment") {
  // Literals over distinct propositions; body size 0..5 plus head.
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    RuleTemplate rule;
    std::vector<bool> negated(n);
    for (int i = 0; i < n; ++i) {
      Literal lit{Atom{"P" + std::to_string(i), {}, false, {}}, rng() % 2 == 0};
      negated[i] = lit.negated;
      if (i + 1 < n) {
        rule.body.push_back(lit);
      } else {
        rule.head = lit;
      }
    }
    const auto clause = to_disjunctive_form(rule);
    REQUIRE(clause.size() == static_cast<std::size_t>(n));
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      auto holds = [&](const Literal& l) {
        const int i = std::stoi(l.atom.predicate.substr(1));
        return static_cast<bool>((bits >> i) & 1u) != l.negated;
      };
      bool body = true;
      for (const auto& l : rule.body) body = body && holds(l);
      const bool implication = !body || holds(rule.head);
      bool disjunction = false;
      for (const auto& l : clause) disjunction = disjunction || holds(l);
      CHECK(implication == disjunction);
    }
  }
}

TEST_CASE("pretty_print round-trips every fixture program") {
  for (const char* name : {"open_domain", "issue_stance", "arg_mining"}) {
    CAPTURE(name);
    const auto source = testing::read_file(testing::fixture(name) / "program.dr");
    const auto parsed = parse_program(source);
    const auto printed = pretty_print(parsed);
    CHECK(parse_program(printed) == parsed);
    CHECK(pretty_print(parse_program(printed)) == printed);
  }
}

TEST_CASE("fixture programs validate with the expected shape") {
  struct Expect {
    const char* name;
    std::size_t templates;
    std::size_t constraints;
  };
  for (const Expect& e : {Expect{"open_domain", 8, 8}, Expect{"issue_stance", 2, 6},
                          Expect{"arg_mining", 5, 10}}) {
    CAPTURE(e.name);
    const auto p = testing::compile(
        testing::read_file(testing::fixture(e.name) / "program.dr"));
    CHECK(p.templates().size() == e.templates);
    CHECK(p.constraints().size() == e.constraints);
  }
}

TEST_CASE("one-hot summation over a symbolic head argument makes a multiclass template") {
  const auto p = testing::compile(
      testing::read_file(testing::fixture("arg_mining") / "program.dr"));
  CHECK(p.template_by_id("r0").label_position == std::optional<std::size_t>(1));
  CHECK_FALSE(p.template_by_id("r1").label_position.has_value());
  CHECK(p.constraints()[5].is_arith());
  CHECK(p.constraints()[5].id == "c5");
}

TEST_CASE("guards") {
  auto p = testing::compile(
      "entity E\npredicate In(E)\npredicate L(E, E)?\n"
      "hardconstraint: In(A) & In(B) & (A = B) => ~L(A, B)?\n"
      "hardconstraint: In(A) & In(B) & A != B => L(A, B)?\n");
  REQUIRE(p.constraints().size() == 2);
  REQUIRE(p.constraints()[0].clause->guards.size() == 1);
  CHECK(p.constraints()[0].clause->guards[0].equal);
  CHECK_FALSE(p.constraints()[1].clause->guards[0].equal);
  CHECK(kind_of([] {
          testing::compile("entity E\nentity F\npredicate In(E)\npredicate G(F)\n"
                           "predicate L(E, E)?\n"
                           "hardconstraint: In(A) & G(B) & (A = B) => L(A, A)?");
        }) == ErrorKind::TypeMismatch);
}
