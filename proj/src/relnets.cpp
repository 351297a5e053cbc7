#include "relgraph/relnets.hpp"

#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "relgraph/error.hpp"
#include "relgraph/random.hpp"

namespace relgraph {

using nlohmann::json;

SharingMode parse_sharing_mode(const std::string& text) {
  if (text == "relnets") return SharingMode::RelNets;
  if (text == "independent") return SharingMode::Independent;
  throw Error(ErrorKind::ConfigError,
              fmt::format("unknown sharing mode '{}' (expected relnets or independent)", text));
}

std::string to_string(SharingMode mode) {
  return mode == SharingMode::RelNets ? "relnets" : "independent";
}

namespace {

std::string symbol_name(const Datastore& data, SymbolId id) {
  return id < data.symbol_count() ? data.name(id) : fmt::format("#{}", id);
}

MlpSpec parse_mlp(const json& j, const std::string& where) {
  MlpSpec spec;
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
    throw Error(ErrorKind::ConfigError, fmt::format("{}: 'layers' must be a non-empty list", where));
  }
  for (const auto& l : j["layers"]) {
    if (!l.is_number_unsigned() || l.get<std::size_t>() == 0) {
      throw Error(ErrorKind::ConfigError, fmt::format("{}: layer sizes must be positive", where));
    }
    spec.layers.push_back(l.get<std::size_t>());
  }
  spec.activation = ad::parse_activation(j.value("activation", std::string("relu")));
  spec.share = j.value("share", true);
  return spec;
}

json mlp_json(const MlpSpec& m) {
  json j;
  j["layers"] = m.layers;
  j["activation"] = ad::to_string(m.activation);
  if (!m.share) j["share"] = false;
  return j;
}

// What a template's rule network consumes.
struct Inputs {
  std::vector<std::size_t> body;
  std::vector<std::size_t> head_args;
  std::size_t labels = 2;
};

Inputs template_inputs(const Template& t, const CheckedProgram& program,
                       const Datastore& data, bool include_head) {
  Inputs in;
  const Atom& head = t.rule.head.atom;
  std::string label_var;
  if (t.label_position) {
    label_var = head.args[*t.label_position].text;
    const auto& type = program.predicate(head.predicate).arg_types[*t.label_position];
    in.labels = data.vocab_size(type);
  }
  for (std::size_t i = 0; i < t.rule.body.size(); ++i) {
    bool uses_label = false;
    for (const auto& arg : t.rule.body[i].atom.args) {
      if (!label_var.empty() && arg.is_variable() && arg.text == label_var) uses_label = true;
    }
    if (!uses_label) in.body.push_back(i);
  }
  if (include_head) {
    for (std::size_t i = 0; i < head.args.size(); ++i) {
      if (!t.label_position || i != *t.label_position) in.head_args.push_back(i);
    }
  }
  return in;
}

}  // namespace

NetConfig NetConfig::parse(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, fmt::format("network config: {}", e.what()));
  }
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "network config must be an object");
  NetConfig c;
  try {
    c.mode = parse_sharing_mode(j.value("mode", std::string("relnets")));
    c.include_head = j.value("include_head", true);
    const json entities = j.value("entities", json::object());
    const json relations = j.value("relations", json::object());
    const json rules = j.value("rules", json::object());
    for (const auto& [name, spec] : entities.items()) {
      EntitySpec e;
      e.share = spec.value("share", true);
      if (spec.contains("embed_dim")) {
        e.embed_dim = spec["embed_dim"].get<std::size_t>();
        if (e.embed_dim == 0) {
          throw Error(ErrorKind::ConfigError,
                      fmt::format("entity {}: embed_dim must be positive", name));
        }
      } else {
        e.mlp = parse_mlp(spec, "entity " + name);
        e.mlp.share = true;  // entities carry sharing on EntitySpec
      }
      c.entities[name] = e;
    }
    for (const auto& [name, spec] : relations.items()) {
      c.relations[name] = parse_mlp(spec, "relation " + name);
    }
    for (const auto& [name, spec] : rules.items()) {
      c.rules[name] = parse_mlp(spec, "rule " + name);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, fmt::format("network config: {}", e.what()));
  }
  return c;
}

std::string NetConfig::to_json() const {
  json j;
  j["mode"] = to_string(mode);
  j["include_head"] = include_head;
  j["entities"] = json::object();
  for (const auto& [name, e] : entities) {
    json ej = e.embed_dim ? json{{"embed_dim", e.embed_dim}} : mlp_json(e.mlp);
    if (!e.share) ej["share"] = false;
    j["entities"][name] = ej;
  }
  j["relations"] = json::object();
  for (const auto& [name, m] : relations) j["relations"][name] = mlp_json(m);
  j["rules"] = json::object();
  for (const auto& [name, m] : rules) j["rules"][name] = mlp_json(m);
  return j.dump(2) + "\n";
}

NetConfig default_config(const CheckedProgram& program, const Datastore& data,
                         std::size_t hidden, std::size_t embed_dim, bool include_head) {
  NetConfig c;
  c.include_head = include_head;
  auto entity_out = [&](const std::string& type) -> std::size_t {
    auto it = c.entities.find(type);
    if (it == c.entities.end()) {
      const EntityDecl& decl = program.entity(type);
      EntitySpec e;
      if (decl.kind == EntityKind::Symbolic) {
        e.embed_dim = embed_dim;
      } else {
        e.mlp.layers = {decl.feature_dim, hidden};
      }
      it = c.entities.emplace(type, e).first;
    }
    return it->second.out();
  };
  for (const Template& t : program.templates()) {
    const Inputs in = template_inputs(t, program, data, c.include_head);
    std::size_t width = 0;
    for (std::size_t b : in.body) {
      const Atom& atom = t.rule.body[b].atom;
      const PredicateDecl& decl = program.predicate(atom.predicate);
      if (!c.relations.contains(atom.predicate)) {
        std::size_t rin = 0;
        for (const auto& type : decl.arg_types) rin += entity_out(type);
        c.relations[atom.predicate].layers = {rin, hidden};
      }
      width += c.relations[atom.predicate].out();
    }
    const PredicateDecl& head = program.predicate(t.rule.head.atom.predicate);
    for (std::size_t a : in.head_args) width += entity_out(head.arg_types[a]);
    c.rules[t.id].layers = {width, hidden, in.labels};
  }
  return c;
}

bool ScorerGraph::is_encoder_param(const std::string& name) {
  return name.starts_with("ent/") || name.starts_with("rel/") ||
         name.find("/ent/") != std::string::npos || name.find("/rel/") != std::string::npos;
}

std::string ScorerGraph::entity_key(const Plan& plan, const std::string& type) const {
  const EntitySpec& spec = config_.entities.at(type);
  const bool shared = config_.mode == SharingMode::RelNets && spec.share;
  return (shared ? "" : plan.id + "/") + "ent/" + type;
}

std::string ScorerGraph::relation_key(const Plan& plan, const std::string& predicate) const {
  const MlpSpec& spec = config_.relations.at(predicate);
  const bool shared = config_.mode == SharingMode::RelNets && spec.share;
  return (shared ? "" : plan.id + "/") + "rel/" + predicate;
}

ScorerGraph ScorerGraph::build(const CheckedProgram& program, const Datastore& data,
                               const NetConfig& config, std::uint64_t seed) {
  ScorerGraph g;
  g.program_ = &program;
  g.config_ = config;
  Rng rng = make_stream(seed, "init");

  auto make_mlp = [&](const std::string& key, const MlpSpec& spec, bool activate_last) {
    if (g.mlps_.contains(key)) return;
    Mlp m;
    m.activation = spec.activation;
    m.activate_last = activate_last;
    for (std::size_t l = 0; l + 1 < spec.layers.size(); ++l) {
      const std::size_t in = spec.layers[l];
      const std::size_t out = spec.layers[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      ad::Tensor w(in, out);
      for (double& v : w.values) v = u(rng);
      m.weights.push_back(fmt::format("{}/W{}", key, l));
      m.biases.push_back(fmt::format("{}/b{}", key, l));
      g.params_.add(m.weights.back(), std::move(w));
      g.params_.add(m.biases.back(), ad::Tensor(1, out));
    }
    g.mlps_.emplace(key, std::move(m));
  };

  auto entity_spec = [&](const std::string& tid, const std::string& type) -> const EntitySpec& {
    auto it = config.entities.find(type);
    if (it == config.entities.end()) {
      throw Error(ErrorKind::MissingSpec,
                  fmt::format("template {} needs an encoder for entity type {}", tid, type));
    }
    return it->second;
  };

  auto ensure_entity = [&](const Plan& plan, const std::string& type) -> std::size_t {
    const EntitySpec& spec = entity_spec(plan.id, type);
    const EntityDecl& decl = program.entity(type);
    const std::string key = g.entity_key(plan, type);
    if (decl.kind == EntityKind::Symbolic) {
      if (!spec.embed_dim) {
        throw Error(ErrorKind::ConfigError,
                    fmt::format("symbolic entity {} needs embed_dim", type));
      }
      if (!g.embeddings_.contains(key)) {
        std::normal_distribution<double> n(0.0, 0.1);
        ad::Tensor table(data.vocab_size(type), spec.embed_dim);
        for (double& v : table.values) v = n(rng);
        g.params_.add(key + "/E", std::move(table));
        g.embeddings_.emplace(key, key + "/E");
      }
      return spec.embed_dim;
    }
    if (spec.embed_dim) {
      throw Error(ErrorKind::ConfigError,
                  fmt::format("attributed entity {} takes layers, not embed_dim", type));
    }
    if (spec.mlp.layers.front() != decl.feature_dim) {
      throw Error(ErrorKind::DimMismatch,
                  fmt::format("entity {} encoder takes {} inputs but has {} features", type,
                              spec.mlp.layers.front(), decl.feature_dim));
    }
    make_mlp(key, spec.mlp, true);
    return spec.mlp.out();
  };

  for (const Template& t : program.templates()) {
    const Inputs in = template_inputs(t, program, data, config.include_head);
    Plan plan;
    plan.id = t.id;
    plan.body = in.body;
    plan.head_args = in.head_args;
    plan.labels = in.labels;

    std::size_t width = 0;
    for (std::size_t b : in.body) {
      const Atom& atom = t.rule.body[b].atom;
      const PredicateDecl& decl = program.predicate(atom.predicate);
      auto rit = config.relations.find(atom.predicate);
      if (rit == config.relations.end()) {
        throw Error(ErrorKind::MissingSpec,
                    fmt::format("template {} needs an encoder for relation {}", t.id,
                                atom.predicate));
      }
      std::size_t rin = 0;
      for (const auto& type : decl.arg_types) rin += ensure_entity(plan, type);
      if (rit->second.layers.front() != rin) {
        throw Error(ErrorKind::DimMismatch,
                    fmt::format("relation {} encoder takes {} inputs but its arguments "
                                "encode to {}",
                                atom.predicate, rit->second.layers.front(), rin));
      }
      make_mlp(g.relation_key(plan, atom.predicate), rit->second, true);
      width += rit->second.out();
    }
    const PredicateDecl& head = program.predicate(t.rule.head.atom.predicate);
    for (std::size_t a : in.head_args) width += ensure_entity(plan, head.arg_types[a]);

    auto sit = config.rules.find(t.id);
    if (sit == config.rules.end()) {
      throw Error(ErrorKind::MissingSpec, fmt::format("no rule network for template {}", t.id));
    }
    const MlpSpec& rs = sit->second;
    if (width == 0) {
      throw Error(ErrorKind::ConfigError,
                  fmt::format("template {} gives its rule network no inputs", t.id));
    }
    if (rs.layers.front() != width) {
      throw Error(ErrorKind::DimMismatch,
                  fmt::format("rule {} network takes {} inputs but receives {}", t.id,
                              rs.layers.front(), width));
    }
    if (rs.layers.size() < 2 || rs.out() != in.labels) {
      throw Error(ErrorKind::DimMismatch,
                  fmt::format("rule {} network must output {} scores", t.id, in.labels));
    }
    make_mlp("rule/" + t.id, rs, false);
    g.plans_.push_back(std::move(plan));
  }
  return g;
}

ad::Var ScorerGraph::run_mlp(ad::Tape& tape, const Mlp& mlp, ad::Var x) const {
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    auto& w = const_cast<ad::ParameterStore&>(params_).get(mlp.weights[l]);
    auto& b = const_cast<ad::ParameterStore&>(params_).get(mlp.biases[l]);
    x = ad::add(ad::matmul(x, tape.param(w)), tape.param(b));
    if (mlp.activate_last || l + 1 < mlp.weights.size()) x = ad::activate(x, mlp.activation);
  }
  return x;
}

ad::Var ScorerGraph::encode_entity(ad::Tape& tape, const Plan& plan, const std::string& type,
                                   SymbolId constant, const Datastore& data,
                                   EncodingCache* cache) const {
  const std::string key = entity_key(plan, type);
  if (cache) {
    auto it = cache->vars.find({key, {constant}});
    if (it != cache->vars.end()) return it->second;
  }
  ad::Var out;
  if (auto eit = embeddings_.find(key); eit != embeddings_.end()) {
    auto idx = data.vocab_index(type, constant);
    if (!idx) {
      throw Error(ErrorKind::MissingFeature,
                  fmt::format("'{}' is not in the {} vocabulary", symbol_name(data, constant), type));
    }
    auto& table = const_cast<ad::ParameterStore&>(params_).get(eit->second);
    out = ad::embedding_lookup(tape.param(table), *idx);
  } else {
    const auto f = data.features(type, constant);
    if (f.empty()) {
      throw Error(ErrorKind::MissingFeature,
                  fmt::format("no features for {} '{}'", type, symbol_name(data, constant)));
    }
    out = run_mlp(tape, mlps_.at(key),
                  tape.constant(ad::Tensor::row(std::vector<double>(f.begin(), f.end()))));
  }
  if (cache) cache->vars.emplace(std::make_pair(key, std::vector<SymbolId>{constant}), out);
  return out;
}

ad::Var ScorerGraph::encode_relation(ad::Tape& tape, const Plan& plan,
                                     const std::string& predicate, const Row& args,
                                     const Datastore& data, EncodingCache* cache) const {
  const std::string key = relation_key(plan, predicate);
  if (cache) {
    auto it = cache->vars.find({key, args});
    if (it != cache->vars.end()) return it->second;
  }
  const PredicateDecl& decl = program_->predicate(predicate);
  std::vector<ad::Var> parts;
  for (std::size_t i = 0; i < args.size(); ++i) {
    parts.push_back(encode_entity(tape, plan, decl.arg_types[i], args[i], data, cache));
  }
  ad::Var out = run_mlp(tape, mlps_.at(key), ad::concat(parts));
  if (cache) cache->vars.emplace(std::make_pair(key, args), out);
  return out;
}

ad::Var ScorerGraph::score(ad::Tape& tape, const GroundRule& rule, const Datastore& data,
                           EncodingCache* cache) const {
  const Plan& plan = plans_.at(rule.template_index);
  const Template& t = program_->templates()[rule.template_index];
  std::vector<ad::Var> parts;
  for (std::size_t b : plan.body) {
    if (rule.body_args[b].empty()) {
      throw Error(ErrorKind::MissingFeature,
                  fmt::format("template {}: body literal {} has an unknown constant", plan.id, b));
    }
    parts.push_back(encode_relation(tape, plan, t.rule.body[b].atom.predicate,
                                    rule.body_args[b], data, cache));
  }
  const PredicateDecl& head = program_->predicate(t.rule.head.atom.predicate);
  for (std::size_t a : plan.head_args) {
    parts.push_back(encode_entity(tape, plan, head.arg_types[a], rule.head_args[a], data, cache));
  }
  ad::Var scores = run_mlp(tape, mlps_.at("rule/" + plan.id), ad::concat(parts));
  if (!rule.multiclass()) return scores;
  bool identity = rule.label_ids.size() == plan.labels;
  for (std::size_t l = 0; identity && l < rule.label_ids.size(); ++l) {
    identity = rule.label_ids[l] == l;
  }
  if (identity) return scores;
  std::vector<ad::Var> picked;
  for (std::size_t id : rule.label_ids) picked.push_back(ad::pick(scores, id));
  return ad::concat(picked);
}

std::vector<std::string> ScorerGraph::entity_params(const std::string& template_id,
                                                    const std::string& type) const {
  const Plan& plan = plans_.at(program_->template_index(template_id));
  const std::string key = entity_key(plan, type);
  if (auto it = embeddings_.find(key); it != embeddings_.end()) return {it->second};
  auto it = mlps_.find(key);
  if (it == mlps_.end()) return {};
  std::vector<std::string> out = it->second.weights;
  out.insert(out.end(), it->second.biases.begin(), it->second.biases.end());
  return out;
}

std::vector<std::string> ScorerGraph::relation_params(const std::string& template_id,
                                                      const std::string& predicate) const {
  const Plan& plan = plans_.at(program_->template_index(template_id));
  auto it = mlps_.find(relation_key(plan, predicate));
  if (it == mlps_.end()) return {};
  std::vector<std::string> out = it->second.weights;
  out.insert(out.end(), it->second.biases.begin(), it->second.biases.end());
  return out;
}

std::vector<std::string> ScorerGraph::rule_params(const std::string& template_id) const {
  const Mlp& m = mlps_.at("rule/" + template_id);
  std::vector<std::string> out = m.weights;
  out.insert(out.end(), m.biases.begin(), m.biases.end());
  return out;
}

std::vector<double> score_rule(const ScorerGraph& graph, const GroundRule& rule,
                               const Datastore& data) {
  ad::Tape tape;
  return graph.score(tape, rule, data).value().values;
}

}  // namespace relgraph
