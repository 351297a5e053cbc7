#include <cctype>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "relgraph/program.hpp"

namespace relgraph {

namespace {

enum class Tok {
  End,
  Ident,
  String,
  Number,
  LParen,
  RParen,
  Comma,
  Question,
  Amp,
  Tilde,
  Arrow,   // =>
  Eq,      // =
  NotEq,   // !=
  LessEq,  // <=
  GreaterEq,
  Colon,
  Plus,
  Minus,
  Star,
};

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::String: return "quoted constant";
    case Tok::Number: return "number";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Question: return "'?'";
    case Tok::Amp: return "'&'";
    case Tok::Tilde: return "'~'";
    case Tok::Arrow: return "'=>'";
    case Tok::Eq: return "'='";
    case Tok::NotEq: return "'!='";
    case Tok::LessEq: return "'<='";
    case Tok::GreaterEq: return "'>='";
    case Tok::Colon: return "':'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
  }
  return "?";
}

struct Token {
  Tok type = Tok::End;
  std::string text;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.span = {line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_')) {
          bump();
        }
        t.type = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          bump();
        }
        if (pos_ + 1 < src_.size() && (src_[pos_] == '.' || src_[pos_] == '/') &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
          bump();
          while (pos_ < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            bump();
          }
        }
        t.type = Tok::Number;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (c == '"') {
        bump();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
          bump();
        }
        if (pos_ >= src_.size() || src_[pos_] != '"') {
          throw Error(ErrorKind::SyntaxError, "unterminated string constant",
                      t.span);
        }
        t.type = Tok::String;
        t.text = std::string(src_.substr(start, pos_ - start));
        bump();
      } else {
        t.type = punct(t.span);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool next_is(char c) const {
    return pos_ + 1 < src_.size() && src_[pos_ + 1] == c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        bump();
      } else if (src_[pos_] == '/' && next_is('/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else {
        break;
      }
    }
  }

  Tok punct(SourceSpan span) {
    const char c = src_[pos_];
    auto two = [&](Tok t) {
      bump();
      bump();
      return t;
    };
    auto one = [&](Tok t) {
      bump();
      return t;
    };
    switch (c) {
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case ',': return one(Tok::Comma);
      case '?': return one(Tok::Question);
      case '&': return one(Tok::Amp);
      case '~': return one(Tok::Tilde);
      case ':': return one(Tok::Colon);
      case '+': return one(Tok::Plus);
      case '-': return one(Tok::Minus);
      case '*': return one(Tok::Star);
      case '=': return next_is('>') ? two(Tok::Arrow) : one(Tok::Eq);
      case '<':
        if (next_is('=')) return two(Tok::LessEq);
        break;
      case '>':
        if (next_is('=')) return two(Tok::GreaterEq);
        break;
      case '!':
        if (next_is('=')) return two(Tok::NotEq);
        break;
      default:
        break;
    }
    throw Error(ErrorKind::SyntaxError,
                fmt::format("unexpected character '{}'", c), span);
  }
};

bool is_keyword(const Token& t) {
  return t.type == Tok::Ident &&
         (t.text == "entity" || t.text == "predicate" || t.text == "rule" ||
          t.text == "hardconstraint" || t.text == "arith");
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  AbstractProgram parse() {
    AbstractProgram prog;
    while (peek().type != Tok::End) {
      const Token& kw = peek();
      if (kw.type != Tok::Ident) fail({"statement keyword"});
      if (kw.text == "entity") {
        prog.entities.push_back(parse_entity());
      } else if (kw.text == "predicate") {
        prog.predicates.push_back(parse_predicate());
      } else if (kw.text == "rule" || kw.text == "hardconstraint") {
        prog.rules.push_back(parse_rule());
        prog.rules.back().ordinal = ordinal_++;
      } else if (kw.text == "arith") {
        prog.arith.push_back(parse_arith());
        prog.arith.back().ordinal = ordinal_++;
      } else {
        fail({"'entity'", "'predicate'", "'rule'", "'hardconstraint'",
              "'arith'"});
      }
    }
    return prog;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t ordinal_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  Token take() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool accept(Tok t) {
    if (peek().type != t) return false;
    take();
    return true;
  }

  [[noreturn]] void fail(std::set<std::string> expected) const {
    const Token& t = peek();
    const std::string found =
        t.type == Tok::End ? std::string(describe(t.type))
        : t.text.empty()   ? std::string(describe(t.type))
                           : fmt::format("'{}'", t.text);
    throw Error(ErrorKind::SyntaxError,
                fmt::format("expected {{{}}}, found {}",
                            fmt::join(expected, ", "), found),
                t.span);
  }

  Token expect(Tok t) {
    if (peek().type != t) fail({std::string(describe(t))});
    return take();
  }

  std::string expect_keyword_value(std::string_view kw) {
    Token t = expect(Tok::Ident);
    if (t.text != kw) {
      --pos_;
      fail({fmt::format("'{}'", kw)});
    }
    return t.text;
  }

  EntityDecl parse_entity() {
    EntityDecl e;
    e.span = take().span;
    e.name = expect(Tok::Ident).text;
    const Token& t = peek();
    if (t.type == Tok::Ident && t.text == "features") {
      take();
      expect(Tok::Eq);
      Token n = expect(Tok::Number);
      if (n.text.find_first_not_of("0123456789") != std::string::npos) {
        --pos_;
        fail({"integer feature count"});
      }
      e.kind = EntityKind::Attributed;
      e.feature_dim = std::stoul(n.text);
    } else if (t.type == Tok::Ident && t.text == "vocab") {
      take();
      e.vocab = true;
    }
    return e;
  }

  PredicateDecl parse_predicate() {
    PredicateDecl p;
    p.span = take().span;
    p.name = expect(Tok::Ident).text;
    expect(Tok::LParen);
    p.arg_types.push_back(expect(Tok::Ident).text);
    while (accept(Tok::Comma)) p.arg_types.push_back(expect(Tok::Ident).text);
    expect(Tok::RParen);
    if (accept(Tok::Question)) p.openness = Openness::Open;
    return p;
  }

  std::string parse_label() {
    std::string label;
    if (peek().type == Tok::Ident && !is_keyword(peek())) {
      label = take().text;
    }
    expect(Tok::Colon);
    return label;
  }

  static bool upper_initial(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
  }

  Term parse_term(bool allow_sum) {
    const Token& t = peek();
    if (t.type == Tok::String) return Term::constant(take().text);
    if (t.type == Tok::Plus && allow_sum) {
      take();
      Token v = expect(Tok::Ident);
      if (!upper_initial(v.text)) {
        --pos_;
        fail({"sum variable name (uppercase-initial)"});
      }
      return Term::sum(v.text);
    }
    if (t.type == Tok::Ident && upper_initial(t.text)) {
      return Term::variable(take().text);
    }
    if (t.type == Tok::Ident) {
      fail({"variable (uppercase-initial)", "quoted constant"});
    }
    if (allow_sum) fail({"variable", "quoted constant", "'+'"});
    fail({"variable", "quoted constant"});
  }

  Atom parse_atom(bool allow_sum) {
    Atom a;
    Token name = expect(Tok::Ident);
    a.predicate = name.text;
    a.span = name.span;
    expect(Tok::LParen);
    a.args.push_back(parse_term(allow_sum));
    while (accept(Tok::Comma)) a.args.push_back(parse_term(allow_sum));
    expect(Tok::RParen);
    if (accept(Tok::Question)) a.open_marker = true;
    return a;
  }

  Literal parse_literal() {
    Literal l;
    if (accept(Tok::Tilde)) l.negated = true;
    if (peek().type != Tok::Ident) fail({"atom"});
    l.atom = parse_atom(false);
    return l;
  }

  Guard parse_guard_inner() {
    Guard g;
    g.span = peek().span;
    g.lhs = parse_term(false);
    if (accept(Tok::Eq)) {
      g.equal = true;
    } else if (accept(Tok::NotEq)) {
      g.equal = false;
    } else {
      fail({"'='", "'!='"});
    }
    g.rhs = parse_term(false);
    return g;
  }

  RuleTemplate parse_rule() {
    RuleTemplate r;
    Token kw = take();
    r.span = kw.span;
    r.weighted = kw.text == "rule";
    r.label = parse_label();
    if (peek().type != Tok::Arrow) {
      for (;;) {
        parse_body_item(r);
        if (!accept(Tok::Amp)) break;
      }
    }
    expect(Tok::Arrow);
    if (peek().type != Tok::Tilde && peek().type != Tok::Ident) {
      fail({"head literal"});
    }
    r.head = parse_literal();
    return r;
  }

  void parse_body_item(RuleTemplate& r) {
    const Token& t = peek();
    if (t.type == Tok::LParen) {
      take();
      r.guards.push_back(parse_guard_inner());
      expect(Tok::RParen);
      return;
    }
    if (t.type == Tok::Tilde) {
      r.body.push_back(parse_literal());
      return;
    }
    if (t.type == Tok::Ident && peek(1).type == Tok::LParen) {
      r.body.push_back(parse_literal());
      return;
    }
    if (t.type == Tok::Ident || t.type == Tok::String) {
      r.guards.push_back(parse_guard_inner());
      return;
    }
    fail({"literal", "'~'", "guard", "'=>'"});
  }

  Rational parse_number() {
    Token n = expect(Tok::Number);
    return Rational::parse(n.text);
  }

  ArithTerm parse_arith_term(bool negative) {
    ArithTerm term;
    Rational coef{1};
    if (peek().type == Tok::Number) {
      coef = parse_number();
      accept(Tok::Star);
    }
    if (peek().type != Tok::Ident) fail({"atom", "number"});
    term.atom = parse_atom(true);
    term.coefficient = negative ? -coef : coef;
    return term;
  }

  ArithmeticConstraint parse_arith() {
    ArithmeticConstraint c;
    c.span = take().span;
    c.label = parse_label();
    bool negative = accept(Tok::Minus);
    if (!negative) accept(Tok::Plus);
    c.terms.push_back(parse_arith_term(negative));
    for (;;) {
      if (accept(Tok::Plus)) {
        c.terms.push_back(parse_arith_term(false));
      } else if (accept(Tok::Minus)) {
        c.terms.push_back(parse_arith_term(true));
      } else {
        break;
      }
    }
    if (accept(Tok::LessEq)) {
      c.comparator = Comparator::LessEq;
    } else if (accept(Tok::GreaterEq)) {
      c.comparator = Comparator::GreaterEq;
    } else if (accept(Tok::Eq)) {
      c.comparator = Comparator::Equal;
    } else {
      fail({"'+'", "'-'", "'<='", "'>='", "'='"});
    }
    const bool neg_rhs = accept(Tok::Minus);
    c.rhs = parse_number();
    if (neg_rhs) c.rhs = -c.rhs;
    return c;
  }
};

}  // namespace

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::LessEq: return "<=";
    case Comparator::GreaterEq: return ">=";
    case Comparator::Equal: return "=";
  }
  return "?";
}

AbstractProgram parse_program(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.parse();
}

std::vector<Literal> to_disjunctive_form(const RuleTemplate& rule) {
  std::vector<Literal> clause;
  clause.reserve(rule.body.size() + 1);
  for (const auto& lit : rule.body) clause.push_back(lit.negate());
  clause.push_back(rule.head);
  return clause;
}

}  // namespace relgraph
