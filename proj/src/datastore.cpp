#include "relgraph/datastore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "relgraph/random.hpp"

namespace relgraph {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, bool tabs) {
  std::vector<std::string> out;
  if (tabs) {
    std::size_t start = 0;
    for (;;) {
      auto pos = line.find('\t', start);
      out.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  } else {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
  }
  return out;
}

// Non-comment, non-blank lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> data_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.emplace_back(no, std::move(line));
  }
  return lines;
}

double parse_double(const std::string& text, const fs::path& path,
                    std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::FormatError,
                fmt::format("{}:{}: '{}' is not a number", path.string(), line,
                            text));
  }
  return v;
}

}  // namespace

std::optional<std::size_t> GroundAtomTable::find(const Row& row) const {
  auto it = std::lower_bound(rows_.begin(), rows_.end(), row);
  if (it == rows_.end() || *it != row) return std::nullopt;
  return static_cast<std::size_t>(it - rows_.begin());
}

std::vector<std::size_t> GroundAtomTable::match(
    std::span<const std::optional<SymbolId>> pattern) const {
  // Scan the shortest posting list among bound columns.
  const std::vector<std::size_t>* best = nullptr;
  for (std::size_t c = 0; c < pattern.size(); ++c) {
    if (!pattern[c]) continue;
    auto it = column_index_[c].find(*pattern[c]);
    if (it == column_index_[c].end()) return {};
    if (!best || it->second.size() < best->size()) best = &it->second;
  }
  std::vector<std::size_t> out;
  auto consider = [&](std::size_t r) {
    const Row& row = rows_[r];
    for (std::size_t c = 0; c < pattern.size(); ++c) {
      if (pattern[c] && row[c] != *pattern[c]) return;
    }
    out.push_back(r);
  };
  if (best) {
    for (std::size_t r : *best) consider(r);
  } else {
    for (std::size_t r = 0; r < rows_.size(); ++r) consider(r);
  }
  return out;
}

RawData read_data_dir(const fs::path& dir, const CheckedProgram& program) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::MissingFile, "data directory not found: " + dir.string());
  }
  RawData raw;
  for (const auto& [name, decl] : program.predicates()) {
    const fs::path path = dir / (name + ".tsv");
    auto& rows = raw.tables[name];
    if (!fs::exists(path)) {
      if (!decl.is_open()) {
        throw Error(ErrorKind::MissingFile,
                    fmt::format("closed relation '{}' needs {}", name,
                                path.string()));
      }
      continue;
    }
    const std::size_t arity = decl.arg_types.size();
    for (auto& [no, line] : data_lines(path)) {
      auto cols = split(line, true);
      RawData::RawRow row;
      if (cols.size() == arity + 1 && decl.is_open()) {
        const std::string& g = cols.back();
        if (g != "0" && g != "1") {
          throw Error(ErrorKind::FormatError,
                      fmt::format("{}:{}: gold column must be 0 or 1, got '{}'",
                                  path.string(), no, g));
        }
        row.gold = g == "1" ? 1 : 0;
        cols.pop_back();
      } else if (cols.size() != arity) {
        throw Error(ErrorKind::ArityError,
                    fmt::format("{}:{}: expected {} columns, got {}",
                                path.string(), no, arity, cols.size()));
      }
      row.values = std::move(cols);
      rows.push_back(std::move(row));
    }
  }
  for (const auto& [name, decl] : program.entities()) {
    if (decl.kind == EntityKind::Attributed) {
      const fs::path path = dir / (name + ".feat");
      auto& table = raw.features[name];
      if (!fs::exists(path)) continue;
      for (auto& [no, line] : data_lines(path)) {
        auto cols = split(line, false);
        std::vector<double> vec;
        for (std::size_t i = 1; i < cols.size(); ++i) {
          vec.push_back(parse_double(cols[i], path, no));
        }
        if (!table.emplace(cols[0], std::move(vec)).second) {
          throw Error(ErrorKind::DuplicateRow,
                      fmt::format("{}:{}: duplicate constant '{}'",
                                  path.string(), no, cols[0]));
        }
      }
    } else {
      const fs::path path = dir / (name + ".vocab");
      if (!fs::exists(path)) continue;
      auto& vocab = raw.vocab[name];
      for (auto& [no, line] : data_lines(path)) {
        auto cols = split(line, false);
        if (cols.size() != 1) {
          throw Error(ErrorKind::FormatError,
                      fmt::format("{}:{}: one constant per line", path.string(), no));
        }
        vocab.push_back(cols[0]);
      }
    }
  }
  return raw;
}

Datastore Datastore::build(const CheckedProgram& program, const RawData& raw) {
  Datastore ds;

  // Intern every constant up front so ids are in lexicographic order.
  std::set<std::string> names;
  for (const auto& [pred, rows] : raw.tables) {
    for (const auto& r : rows) names.insert(r.values.begin(), r.values.end());
  }
  for (const auto& [type, table] : raw.features) {
    for (const auto& [c, v] : table) names.insert(c);
  }
  for (const auto& [type, list] : raw.vocab) names.insert(list.begin(), list.end());
  const auto program_constants = program.program_constants();
  for (const auto& [type, list] : program_constants) {
    names.insert(list.begin(), list.end());
  }
  ds.symbols_.assign(names.begin(), names.end());
  for (SymbolId i = 0; i < ds.symbols_.size(); ++i) ds.symbol_ids_[ds.symbols_[i]] = i;

  // Feature tables.
  for (const auto& [type, table] : raw.features) {
    const EntityDecl& decl = program.entity(type);
    if (decl.kind != EntityKind::Attributed) {
      throw Error(ErrorKind::FormatError,
                  fmt::format("features given for symbolic type '{}'", type));
    }
    auto& dense = ds.dense_[type];
    for (const auto& [c, vec] : table) {
      if (vec.size() != decl.feature_dim) {
        throw Error(ErrorKind::DimensionError,
                    fmt::format("'{}' of type {} has {} features, expected {}",
                                c, type, vec.size(), decl.feature_dim));
      }
      for (double v : vec) {
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::DimensionError,
                      fmt::format("'{}' of type {} has a non-finite feature", c, type));
        }
      }
      dense.emplace(ds.symbol_ids_.at(c), vec);
    }
  }

  std::map<std::string, std::set<SymbolId>> seen_symbolic;
  auto check_constant = [&](const std::string& type, const std::string& c,
                            const std::string& where) {
    const EntityDecl& decl = program.entity(type);
    const SymbolId id = ds.symbol_ids_.at(c);
    if (decl.kind == EntityKind::Attributed) {
      auto it = ds.dense_.find(type);
      if (it == ds.dense_.end() || !it->second.contains(id)) {
        throw Error(ErrorKind::UnknownConstant,
                    fmt::format("{}: '{}' has no {} features", where, c, type));
      }
    } else if (auto it = raw.vocab.find(type); it != raw.vocab.end()) {
      if (std::find(it->second.begin(), it->second.end(), c) == it->second.end()) {
        throw Error(ErrorKind::UnknownConstant,
                    fmt::format("{}: '{}' is not in the {} vocabulary", where, c, type));
      }
    } else {
      seen_symbolic[type].insert(id);
    }
    return id;
  };

  for (const auto& [name, decl] : program.predicates()) {
    GroundAtomTable& table = ds.tables_[name];
    table.schema_ = decl;
    auto it = raw.tables.find(name);
    if (it == raw.tables.end()) {
      if (!decl.is_open()) {
        throw Error(ErrorKind::MissingFile,
                    fmt::format("no data for closed relation '{}'", name));
      }
    } else {
      std::vector<std::pair<Row, std::optional<int>>> rows;
      for (const auto& r : it->second) {
        if (r.values.size() != decl.arg_types.size()) {
          throw Error(ErrorKind::ArityError,
                      fmt::format("'{}' row has {} values, expected {}", name,
                                  r.values.size(), decl.arg_types.size()));
        }
        if (r.gold && !decl.is_open()) {
          throw Error(ErrorKind::ArityError,
                      fmt::format("closed relation '{}' cannot carry gold labels", name));
        }
        Row row;
        for (std::size_t i = 0; i < r.values.size(); ++i) {
          row.push_back(check_constant(decl.arg_types[i], r.values[i], name));
        }
        rows.emplace_back(std::move(row), r.gold);
      }
      std::sort(rows.begin(), rows.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first) {
          std::vector<std::string> text;
          for (SymbolId s : rows[i].first) text.push_back(ds.symbols_[s]);
          throw Error(ErrorKind::DuplicateRow,
                      fmt::format("{}({}) listed twice", name, fmt::join(text, ", ")));
        }
      }
      for (auto& [row, gold] : rows) {
        table.rows_.push_back(std::move(row));
        table.gold_.push_back(gold);
      }
    }
    table.column_index_.resize(decl.arg_types.size());
    for (std::size_t r = 0; r < table.rows_.size(); ++r) {
      for (std::size_t c = 0; c < decl.arg_types.size(); ++c) {
        table.column_index_[c][table.rows_[r][c]].push_back(r);
      }
    }
  }
  for (const auto& [type, list] : program_constants) {
    for (const auto& c : list) check_constant(type, c, "program");
  }

  // Vocabularies: explicit file order, else sorted observed constants.
  for (const auto& [type, decl] : program.entities()) {
    if (decl.kind != EntityKind::Symbolic) continue;
    auto& vocab = ds.vocab_[type];
    if (auto it = raw.vocab.find(type); it != raw.vocab.end()) {
      for (const auto& c : it->second) vocab.push_back(ds.symbol_ids_.at(c));
    } else {
      const auto& seen = seen_symbolic[type];
      vocab.assign(seen.begin(), seen.end());
    }
    auto& index = ds.vocab_index_[type];
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (!index.emplace(vocab[i], i).second) {
        throw Error(ErrorKind::DuplicateRow,
                    fmt::format("'{}' appears twice in the {} vocabulary",
                                ds.symbols_[vocab[i]], type));
      }
    }
  }

  std::uint64_t h = fnv1a("relgraph-data");
  for (const auto& [name, table] : ds.tables_) {
    h = fnv1a(name, h);
    for (std::size_t r = 0; r < table.rows_.size(); ++r) {
      for (SymbolId s : table.rows_[r]) h = fnv1a(ds.symbols_[s] + "\t", h);
      h = fnv1a(table.gold_[r] ? std::to_string(*table.gold_[r]) : "-", h);
    }
  }
  for (const auto& [type, dense] : ds.dense_) {
    std::map<std::string, const std::vector<double>*> ordered;
    for (const auto& [id, vec] : dense) ordered[ds.symbols_[id]] = &vec;
    h = fnv1a(type, h);
    for (const auto& [name, vec] : ordered) {
      h = fnv1a(name, h);
      for (double v : *vec) h = fnv1a(fmt::format("{:.17g}", v), h);
    }
  }
  ds.fingerprint_ = h;
  return ds;
}

const GroundAtomTable& Datastore::table(const std::string& predicate) const {
  auto it = tables_.find(predicate);
  if (it == tables_.end()) {
    throw Error(ErrorKind::UndeclaredPredicate, "no table for " + predicate);
  }
  return it->second;
}

std::vector<Binding> Datastore::query(const Atom& pattern,
                                      const Binding& partial) const {
  const GroundAtomTable& t = table(pattern.predicate);
  std::vector<std::optional<SymbolId>> key(pattern.args.size());
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const Term& term = pattern.args[i];
    if (term.is_constant()) {
      auto id = symbol(term.text);
      if (!id) return {};
      key[i] = *id;
    } else if (auto it = partial.find(term.text); it != partial.end()) {
      key[i] = it->second;
    }
  }
  std::vector<Binding> out;
  for (std::size_t r : t.match(key)) {
    Binding b = partial;
    bool ok = true;
    for (std::size_t i = 0; i < pattern.args.size() && ok; ++i) {
      const Term& term = pattern.args[i];
      if (term.is_constant()) continue;
      auto [it, inserted] = b.emplace(term.text, t.rows()[r][i]);
      ok = inserted || it->second == t.rows()[r][i];
    }
    if (ok) out.push_back(std::move(b));
  }
  return out;
}

std::optional<SymbolId> Datastore::symbol(std::string_view name) const {
  auto it = symbol_ids_.find(std::string(name));
  if (it == symbol_ids_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> Datastore::features(const std::string& type,
                                            SymbolId id) const {
  auto t = dense_.find(type);
  if (t == dense_.end()) return {};
  auto it = t->second.find(id);
  if (it == t->second.end()) return {};
  return it->second;
}

std::optional<std::size_t> Datastore::vocab_index(const std::string& type,
                                                  SymbolId id) const {
  auto t = vocab_index_.find(type);
  if (t == vocab_index_.end()) return std::nullopt;
  auto it = t->second.find(id);
  if (it == t->second.end()) return std::nullopt;
  return it->second;
}

std::size_t Datastore::vocab_size(const std::string& type) const {
  auto it = vocab_.find(type);
  return it == vocab_.end() ? 0 : it->second.size();
}

const std::vector<SymbolId>& Datastore::vocab(const std::string& type) const {
  static const std::vector<SymbolId> empty;
  auto it = vocab_.find(type);
  return it == vocab_.end() ? empty : it->second;
}

bool operator==(const Datastore& a, const Datastore& b) {
  if (a.symbols_ != b.symbols_ || a.vocab_ != b.vocab_ || a.dense_ != b.dense_) {
    return false;
  }
  if (a.tables_.size() != b.tables_.size()) return false;
  for (const auto& [name, t] : a.tables_) {
    auto it = b.tables_.find(name);
    if (it == b.tables_.end() || it->second.rows() != t.rows() ||
        it->second.gold() != t.gold()) {
      return false;
    }
  }
  return true;
}

Datastore load_data(const fs::path& dir, const CheckedProgram& program) {
  return Datastore::build(program, read_data_dir(dir, program));
}

}  // namespace relgraph
