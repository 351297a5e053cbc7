#pragma once

// Neural scorers for ground rules: entity encoders, relation encoders over
// argument encodings, and one rule network per template. In relnets mode the
// entity and relation encoders are shared by every template that mentions them.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relgraph/autodiff.hpp"
#include "relgraph/checked_program.hpp"
#include "relgraph/datastore.hpp"
#include "relgraph/factor_graph.hpp"

namespace relgraph {

enum class SharingMode { RelNets, Independent };

SharingMode parse_sharing_mode(const std::string& text);
std::string to_string(SharingMode mode);

struct MlpSpec {
  /// [in, hidden..., out]. A single entry is the identity map of that width.
  std::vector<std::size_t> layers;
  ad::Activation activation = ad::Activation::Relu;
  bool share = true;

  std::size_t out() const { return layers.back(); }
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct EntitySpec {
  /// Symbolic types: embedding width. Attributed types: 0, and `mlp` applies.
  std::size_t embed_dim = 0;
  MlpSpec mlp;
  bool share = true;

  std::size_t out() const { return embed_dim ? embed_dim : mlp.out(); }
  friend bool operator==(const EntitySpec&, const EntitySpec&) = default;
};

struct NetConfig {
  SharingMode mode = SharingMode::RelNets;
  /// Whether the rule network also sees the head's argument encodings.
  bool include_head = true;
  std::map<std::string, EntitySpec> entities;
  std::map<std::string, MlpSpec> relations;
  std::map<std::string, MlpSpec> rules;

  static NetConfig parse(const std::string& json_text);
  std::string to_json() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// A complete config covering every entity, relation and template used by
/// weighted templates: one hidden layer of `hidden` units everywhere.
NetConfig default_config(const CheckedProgram& program, const Datastore& data,
                         std::size_t hidden = 8, std::size_t embed_dim = 4,
                         bool include_head = true);

/// Memoizes entity and relation encodings within one tape.
struct EncodingCache {
  std::map<std::pair<std::string, std::vector<SymbolId>>, ad::Var> vars;
};

class ScorerGraph {
 public:
  /// Raises MissingSpec when the config omits something a weighted template
  /// needs, DimMismatch when declared widths disagree.
  static ScorerGraph build(const CheckedProgram& program, const Datastore& data,
                           const NetConfig& config, std::uint64_t seed);

  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }
  const NetConfig& config() const { return config_; }

  /// Raw scores for the rule's head labels as a 1 x L row on `tape`.
  ad::Var score(ad::Tape& tape, const GroundRule& rule, const Datastore& data,
                EncodingCache* cache = nullptr) const;

  /// Parameter names of the encoder a template uses for an entity type or
  /// relation; exposes the sharing wiring.
  std::vector<std::string> entity_params(const std::string& template_id,
                                         const std::string& type) const;
  std::vector<std::string> relation_params(const std::string& template_id,
                                           const std::string& predicate) const;
  std::vector<std::string> rule_params(const std::string& template_id) const;

  std::size_t num_labels(std::size_t template_index) const {
    return plans_[template_index].labels;
  }

  /// Entity and relation encoder parameters (as opposed to rule networks).
  static bool is_encoder_param(const std::string& name);

 private:
  struct Mlp {
    std::vector<std::string> weights;
    std::vector<std::string> biases;
    ad::Activation activation = ad::Activation::Relu;
    bool activate_last = true;
  };
  struct Plan {
    std::string id;
    std::vector<std::size_t> body;        // body literal indices fed to the rule net
    std::vector<std::size_t> head_args;   // head argument positions fed to the rule net
    std::size_t labels = 2;
  };

  const CheckedProgram* program_ = nullptr;
  NetConfig config_;
  ad::ParameterStore params_;
  std::vector<Plan> plans_;
  std::map<std::string, Mlp> mlps_;             // keyed by parameter prefix
  std::map<std::string, std::string> embeddings_;  // key -> table parameter

  std::string entity_key(const Plan& plan, const std::string& type) const;
  std::string relation_key(const Plan& plan, const std::string& predicate) const;

  ad::Var run_mlp(ad::Tape& tape, const Mlp& mlp, ad::Var x) const;
  ad::Var encode_entity(ad::Tape& tape, const Plan& plan, const std::string& type,
                        SymbolId constant, const Datastore& data,
                        EncodingCache* cache) const;
  ad::Var encode_relation(ad::Tape& tape, const Plan& plan, const std::string& predicate,
                          const Row& args, const Datastore& data,
                          EncodingCache* cache) const;
};

/// Score values for one rule, off-tape.
std::vector<double> score_rule(const ScorerGraph& graph, const GroundRule& rule,
                               const Datastore& data);

}  // namespace relgraph
