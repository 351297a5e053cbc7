#include "relgraph/error.hpp"

#include <fmt/format.h>

namespace relgraph {

std::string SourceSpan::str() const {
  if (line == 0) return "?";
  return fmt::format("{}:{}", line, column);
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::UndeclaredPredicate: return "UndeclaredPredicate";
    case ErrorKind::UndeclaredEntity: return "UndeclaredEntity";
    case ErrorKind::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrorKind::DuplicateTemplate: return "DuplicateTemplate";
    case ErrorKind::UnboundHeadVariable: return "UnboundHeadVariable";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::ClosedHeadRelation: return "ClosedHeadRelation";
    case ErrorKind::NegatedWeightedHead: return "NegatedWeightedHead";
    case ErrorKind::OpennessConflict: return "OpennessConflict";
    case ErrorKind::InvalidConstraint: return "InvalidConstraint";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::UnknownConstant: return "UnknownConstant";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::DuplicateRow: return "DuplicateRow";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::GroundingExplosion: return "GroundingExplosion";
    case ErrorKind::InfeasibleConstant: return "InfeasibleConstant";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonScalarRoot: return "NonScalarRoot";
    case ErrorKind::CheckpointError: return "CheckpointError";
    case ErrorKind::MissingSpec: return "MissingSpec";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::MissingFeature: return "MissingFeature";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::MissingGold: return "MissingGold";
    case ErrorKind::AlignmentError: return "AlignmentError";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, SourceSpan span)
    : std::runtime_error(span.line == 0
                             ? fmt::format("{}: {}", to_string(kind), message)
                             : fmt::format("{} at {}: {}", to_string(kind),
                                           span.str(), message)),
      kind_(kind),
      span_(span),
      detail_(message) {}

}  // namespace relgraph
