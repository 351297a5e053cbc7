#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relgraph {

/// Position of a construct inside a program file (1-based, 0 = unknown).
struct SourceSpan {
  std::size_t line = 0;
  std::size_t column = 0;

  std::string str() const;
};

enum class ErrorKind {
  // dsl
  SyntaxError,
  TypeMismatch,
  UndeclaredPredicate,
  UndeclaredEntity,
  DuplicateDeclaration,
  DuplicateTemplate,
  UnboundHeadVariable,
  UnboundVariable,
  ClosedHeadRelation,
  NegatedWeightedHead,
  OpennessConflict,
  InvalidConstraint,
  // datastore
  MissingFile,
  ArityError,
  UnknownConstant,
  DimensionError,
  DuplicateRow,
  FormatError,
  // grounder
  GroundingExplosion,
  InfeasibleConstant,
  // autodiff
  ShapeMismatch,
  NonScalarRoot,
  CheckpointError,
  // relnets
  MissingSpec,
  DimMismatch,
  MissingFeature,
  ConfigError,
  // inference
  Infeasible,
  TooLarge,
  // learning
  MissingGold,
  AlignmentError,
  // cli
  UsageError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, SourceSpan span = {});

  ErrorKind kind() const noexcept { return kind_; }
  const SourceSpan& span() const noexcept { return span_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  SourceSpan span_;
  std::string detail_;
};

}  // namespace relgraph
