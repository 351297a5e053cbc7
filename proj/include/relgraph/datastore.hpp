#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relgraph/checked_program.hpp"

namespace relgraph {

/// Interned constant. Ids follow lexicographic order of the constant text,
/// so sorting by id is sorting by name.
using SymbolId = std::uint32_t;
using Row = std::vector<SymbolId>;

/// Variable name -> constant.
using Binding = std::map<std::string, SymbolId>;

/// Rows of one relation. Closed relations: membership means true. Open
/// relations: rows are the candidate ground atoms, optionally gold-labelled.
class GroundAtomTable {
 public:
  const PredicateDecl& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<std::optional<int>>& gold() const { return gold_; }
  std::size_t size() const { return rows_.size(); }

  std::optional<std::size_t> find(const Row& row) const;
  bool contains(const Row& row) const { return find(row).has_value(); }

  /// Row indices matching a pattern (nullopt = wildcard), ascending.
  std::vector<std::size_t> match(std::span<const std::optional<SymbolId>> pattern) const;

 private:
  friend class Datastore;
  PredicateDecl schema_;
  std::vector<Row> rows_;
  std::vector<std::optional<int>> gold_;
  std::vector<std::unordered_map<SymbolId, std::vector<std::size_t>>> column_index_;
};

/// Input as read from disk (or built in memory), before checking.
struct RawData {
  struct RawRow {
    std::vector<std::string> values;
    std::optional<int> gold;
  };
  std::map<std::string, std::vector<RawRow>> tables;
  std::map<std::string, std::map<std::string, std::vector<double>>> features;
  std::map<std::string, std::vector<std::string>> vocab;
};

RawData read_data_dir(const std::filesystem::path& dir,
                      const CheckedProgram& program);

class Datastore {
 public:
  static Datastore build(const CheckedProgram& program, const RawData& raw);

  const GroundAtomTable& table(const std::string& predicate) const;
  const std::map<std::string, GroundAtomTable>& tables() const { return tables_; }

  /// Every binding extending `partial` under which `pattern` matches a row,
  /// in lexicographic row order. Open relations yield all candidate rows.
  std::vector<Binding> query(const Atom& pattern, const Binding& partial) const;

  std::optional<SymbolId> symbol(std::string_view name) const;
  const std::string& name(SymbolId id) const { return symbols_[id]; }
  std::size_t symbol_count() const { return symbols_.size(); }

  /// Dense features of an attributed constant (empty span if absent).
  std::span<const double> features(const std::string& type, SymbolId id) const;
  /// Embedding row of a symbolic constant.
  std::optional<std::size_t> vocab_index(const std::string& type, SymbolId id) const;
  std::size_t vocab_size(const std::string& type) const;
  const std::vector<SymbolId>& vocab(const std::string& type) const;

  /// Order-independent content hash of all tables and features.
  std::uint64_t fingerprint() const { return fingerprint_; }

  friend bool operator==(const Datastore& a, const Datastore& b);

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, SymbolId> symbol_ids_;
  std::map<std::string, GroundAtomTable> tables_;
  std::map<std::string, std::unordered_map<SymbolId, std::vector<double>>> dense_;
  std::map<std::string, std::vector<SymbolId>> vocab_;
  std::map<std::string, std::unordered_map<SymbolId, std::size_t>> vocab_index_;
  std::uint64_t fingerprint_ = 0;
};

Datastore load_data(const std::filesystem::path& dir,
                    const CheckedProgram& program);

}  // namespace relgraph
