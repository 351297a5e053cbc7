#include "relgraph/learning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "relgraph/error.hpp"
#include "relgraph/parallel.hpp"
#include "relgraph/random.hpp"

namespace relgraph {

using Bits = std::vector<std::uint8_t>;

TrainMode parse_train_mode(const std::string& name) {
  if (name == "local") return TrainMode::Local;
  if (name == "joint") return TrainMode::Joint;
  if (name == "global-hinge") return TrainMode::GlobalHinge;
  if (name == "global-crf") return TrainMode::GlobalCrf;
  throw Error(ErrorKind::UsageError,
              fmt::format("unknown mode '{}' (expected local, joint, global-hinge or "
                          "global-crf)",
                          name));
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Local: return "local";
    case TrainMode::Joint: return "joint";
    case TrainMode::GlobalHinge: return "global-hinge";
    case TrainMode::GlobalCrf: return "global-crf";
  }
  return "local";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw Error(ErrorKind::UsageError,
              fmt::format("unknown optimizer '{}' (expected sgd or adam)", name));
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
  const bool crf = mode == TrainMode::GlobalCrf;
  if (crf && pool == 0) throw Error(ErrorKind::ConfigError, "global-crf needs a pool size >= 1");
  if (!crf && pool != 0) {
    throw Error(ErrorKind::ConfigError,
                fmt::format("pool size applies to global-crf only, not {}", to_string(mode)));
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw Error(ErrorKind::ConfigError, "learning rate must be positive");
  }
  if (weight_decay < 0.0) throw Error(ErrorKind::ConfigError, "weight decay must be >= 0");
  if (batch_graphs == 0) throw Error(ErrorKind::ConfigError, "batch size must be >= 1");
}

Bits gold_assignment(const FactorGraph& graph) {
  Bits out(graph.size());
  for (const auto& v : graph.variables) {
    if (!v.gold) {
      throw Error(ErrorKind::MissingGold,
                  fmt::format("{}: variable y{} has no gold label", graph.instance_id, v.id));
    }
    out[v.id] = static_cast<std::uint8_t>(*v.gold);
  }
  return out;
}

std::size_t gold_label(const FactorGraph& graph, const GroundRule& rule) {
  auto gold_of = [&](VarId v) {
    const auto& g = graph.variables[v].gold;
    if (!g) {
      throw Error(ErrorKind::MissingGold,
                  fmt::format("{}: head variable y{} has no gold label", graph.instance_id, v));
    }
    return *g;
  };
  if (!rule.multiclass()) return gold_of(rule.head_var()) ? 1 : 0;
  std::optional<std::size_t> label;
  for (std::size_t l = 0; l < rule.head_vars.size(); ++l) {
    if (gold_of(rule.head_vars[l]) == 0) continue;
    if (label) {
      throw Error(ErrorKind::MissingGold,
                  fmt::format("{}: several gold labels for one multiclass head",
                              graph.instance_id));
    }
    label = l;
  }
  if (!label) {
    throw Error(ErrorKind::MissingGold,
                fmt::format("{}: no gold label among the candidates of a multiclass head",
                            graph.instance_id));
  }
  return *label;
}

std::vector<ad::Var> score_vars(ad::Tape& tape, const ScorerGraph& scorer,
                                const FactorGraph& graph, const Datastore& data) {
  EncodingCache cache;
  std::vector<ad::Var> out;
  out.reserve(graph.potentials.size());
  for (const auto& r : graph.potentials) out.push_back(scorer.score(tape, r, data, &cache));
  return out;
}

ScoreTables score_tables(const ScorerGraph& scorer, const FactorGraph& graph,
                         const Datastore& data) {
  ad::Tape tape;
  ScoreTables out;
  for (const auto& v : score_vars(tape, scorer, graph, data)) out.push_back(v.value().values);
  return out;
}

ScoreTables log_softmax_tables(const ScoreTables& scores) {
  ScoreTables out = scores;
  for (auto& row : out) {
    if (row.empty()) continue;
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double x : row) s += std::exp(x - m);
    const double lse = m + std::log(s);
    for (double& x : row) x -= lse;
  }
  return out;
}

namespace {

ad::Var zero(ad::Tape& tape) { return tape.constant(ad::Tensor::scalar(0.0)); }

ad::Var total(ad::Tape& tape, const std::vector<ad::Var>& terms) {
  if (terms.empty()) return zero(tape);
  return terms.size() == 1 ? terms[0] : ad::sum(ad::concat(terms));
}

ScoreTables tables_of(const std::vector<ad::Var>& vars) {
  ScoreTables out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.value().values);
  return out;
}

}  // namespace

ad::Var local_loss(ad::Tape& tape, const std::vector<ad::Var>& scores, const FactorGraph& graph) {
  std::vector<ad::Var> terms;
  for (std::size_t r = 0; r < graph.potentials.size(); ++r) {
    const std::size_t label = gold_label(graph, graph.potentials[r]);
    terms.push_back(ad::scale(ad::pick(ad::log_softmax(scores[r]), label), -1.0));
  }
  return total(tape, terms);
}

ad::Var structured_score(ad::Tape& tape, const std::vector<ad::Var>& scores,
                         const FactorGraph& graph, std::span<const std::uint8_t> y) {
  std::vector<ad::Var> terms;
  for (std::size_t r = 0; r < graph.potentials.size(); ++r) {
    const auto psi = potential_values(graph.potentials[r], y);
    if (std::all_of(psi.begin(), psi.end(), [](double x) { return x == 0.0; })) continue;
    terms.push_back(ad::dot_const(scores[r], psi));
  }
  return total(tape, terms);
}

ad::Var hinge_loss(ad::Tape& tape, const std::vector<ad::Var>& scores, const FactorGraph& graph,
                   std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> gold) {
  const double delta = static_cast<double>(hamming(predicted, gold));
  ad::Var margin = ad::add_scalar(
      ad::sub(structured_score(tape, scores, graph, predicted),
              structured_score(tape, scores, graph, gold)),
      delta);
  if (margin.item() <= 0.0) return zero(tape);
  return margin;
}

ad::Var crf_loss(ad::Tape& tape, const std::vector<ad::Var>& scores, const FactorGraph& graph,
                 const SolutionPool& pool, std::span<const std::uint8_t> gold) {
  const bool has_gold = std::any_of(pool.begin(), pool.end(), [&](const Assignment& a) {
    return std::equal(a.values.begin(), a.values.end(), gold.begin(), gold.end());
  });
  if (!has_gold) {
    throw Error(ErrorKind::AlignmentError,
                fmt::format("{}: solution pool lacks the gold assignment", graph.instance_id));
  }
  std::vector<ad::Var> members;
  for (const auto& a : pool) members.push_back(structured_score(tape, scores, graph, a.values));
  return ad::sub(ad::logsumexp(ad::concat(members)), structured_score(tape, scores, graph, gold));
}

SolutionPool crf_pool(const FactorGraph& graph, const ScoreTables& scores, std::size_t beta,
                      std::span<const std::uint8_t> gold, const SolveOptions& options) {
  SolutionPool pool = k_best(graph, scores, beta, options);
  const bool has_gold = std::any_of(pool.begin(), pool.end(), [&](const Assignment& a) {
    return std::equal(a.values.begin(), a.values.end(), gold.begin(), gold.end());
  });
  if (!has_gold) {
    Bits g(gold.begin(), gold.end());
    const double s = objective(graph, scores, g);
    pool.push_back({std::move(g), s});
  }
  return pool;
}

double pooled_log_partition(const FactorGraph& graph, const ScoreTables& scores,
                            const SolutionPool& pool) {
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> s;
  for (const auto& a : pool) {
    s.push_back(objective(graph, scores, a.values));
    m = std::max(m, s.back());
  }
  double acc = 0.0;
  for (double x : s) acc += std::exp(x - m);
  return m + std::log(acc);
}

Bits predict_local(const FactorGraph& graph, const ScoreTables& scores) {
  std::vector<double> log_odds(graph.size(), 0.0);
  const ScoreTables logp = log_softmax_tables(scores);
  for (std::size_t r = 0; r < graph.potentials.size(); ++r) {
    const GroundRule& rule = graph.potentials[r];
    if (!rule.multiclass()) {
      log_odds[rule.head_var()] += logp[r][1] - logp[r][0];
      continue;
    }
    for (std::size_t l = 0; l < rule.head_vars.size(); ++l) {
      const double p = std::exp(logp[r][l]);
      log_odds[rule.head_vars[l]] += logp[r][l] - std::log(std::max(1.0 - p, 1e-300));
    }
  }
  Bits out(graph.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = log_odds[i] > 0.0 ? 1 : 0;
  return out;
}

Assignment predict_joint(const FactorGraph& graph, const ScoreTables& scores,
                         const SolveOptions& options) {
  return solve(graph, log_softmax_tables(scores), options);
}

std::vector<Bits> predict(const ScorerGraph& scorer, const Datastore& data,
                          std::span<const FactorGraph> graphs, TrainMode mode,
                          const SolveOptions& options, unsigned jobs) {
  std::vector<Bits> out(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t i) {
    const ScoreTables scores = score_tables(scorer, graphs[i], data);
    switch (mode) {
      case TrainMode::Local: out[i] = predict_local(graphs[i], scores); break;
      case TrainMode::Joint: out[i] = predict_joint(graphs[i], scores, options).values; break;
      default: out[i] = solve(graphs[i], scores, options).values; break;
    }
  });
  return out;
}

namespace {

struct GraphLoss {
  double value = 0.0;
  std::vector<std::pair<ad::Parameter*, ad::Tensor>> grads;
};

GraphLoss graph_loss(const ScorerGraph& scorer, const Datastore& data, const FactorGraph& g,
                     const TrainConfig& config, bool with_grad) {
  ad::Tape tape;
  const auto vars = score_vars(tape, scorer, g, data);
  ad::Var loss;
  switch (config.mode) {
    case TrainMode::Local:
    case TrainMode::Joint:
      loss = local_loss(tape, vars, g);
      break;
    case TrainMode::GlobalHinge: {
      const Bits gold = gold_assignment(g);
      const auto yhat = solve_loss_augmented(g, tables_of(vars), gold, config.solver);
      loss = hinge_loss(tape, vars, g, yhat.values, gold);
      break;
    }
    case TrainMode::GlobalCrf: {
      const Bits gold = gold_assignment(g);
      const auto pool = crf_pool(g, tables_of(vars), config.pool, gold, config.solver);
      loss = crf_loss(tape, vars, g, pool, gold);
      break;
    }
  }
  GraphLoss out;
  out.value = loss.item();
  if (with_grad && out.value != 0.0) {
    tape.backward(loss);
    out.grads = tape.parameter_gradients();
  }
  return out;
}

double dev_metric(const ScorerGraph& scorer, const Datastore& data,
                  std::span<const FactorGraph> dev, const TrainConfig& config) {
  if (config.mode == TrainMode::Local || config.mode == TrainMode::Joint) {
    std::vector<double> losses(dev.size());
    parallel_for(dev.size(), config.jobs, [&](std::size_t i) {
      losses[i] = graph_loss(scorer, data, dev[i], config, false).value;
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(dev.size());
  }
  const auto pred = predict(scorer, data, dev, config.mode, config.solver, config.jobs);
  std::size_t right = 0, n = 0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const Bits gold = gold_assignment(dev[i]);
    n += gold.size();
    right += gold.size() - hamming(pred[i], gold);
  }
  return n ? static_cast<double>(right) / static_cast<double>(n) : 1.0;
}

std::unique_ptr<ad::Optimizer> make_optimizer(const TrainConfig& config) {
  if (config.optimizer == OptimizerKind::Sgd) {
    return std::make_unique<ad::Sgd>(ad::SgdOptions{config.lr, config.weight_decay});
  }
  ad::AdamOptions o;
  o.lr = config.lr;
  o.weight_decay = config.weight_decay;
  return std::make_unique<ad::Adam>(o);
}

void check_gold(std::span<const FactorGraph> graphs, TrainMode mode) {
  for (const auto& g : graphs) {
    if (mode == TrainMode::Local || mode == TrainMode::Joint) {
      for (const auto& r : g.potentials) (void)gold_label(g, r);
    } else {
      (void)gold_assignment(g);
    }
  }
}

TrainReport run(ScorerGraph& scorer, const Datastore& data, std::span<const FactorGraph> train,
                std::span<const FactorGraph> dev, const TrainConfig& config) {
  config.validate();
  check_gold(train, config.mode);
  check_gold(dev, config.mode);
  const bool lower_is_better = config.mode == TrainMode::Local || config.mode == TrainMode::Joint;
  auto optimizer = make_optimizer(config);
  std::function<bool(const std::string&)> frozen;
  if (config.freeze_encoders) frozen = &ScorerGraph::is_encoder_param;
  Rng rng = make_stream(config.seed, "shuffle");

  TrainReport report;
  double best = dev.empty() ? 0.0 : dev_metric(scorer, data, dev, config);
  auto best_params = scorer.params().snapshot();
  std::size_t stale = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_graphs) {
      const std::size_t size = std::min(config.batch_graphs, order.size() - start);
      std::vector<GraphLoss> losses(size);
      parallel_for(size, config.jobs, [&](std::size_t b) {
        losses[b] = graph_loss(scorer, data, train[order[start + b]], config, true);
      });
      scorer.params().zero_grad();
      for (const auto& l : losses) {
        epoch_loss += l.value;
        for (const auto& [p, g] : l.grads) {
          auto& acc = p->grad().values;
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g.values[i];
        }
      }
      optimizer->step(scorer.params(), frozen);
    }
    EpochLog log{epoch, epoch_loss, std::numeric_limits<double>::quiet_NaN()};
    report.epochs.push_back(log);
    if (dev.empty()) {
      report.best_epoch = epoch;
      continue;
    }
    const double metric = dev_metric(scorer, data, dev, config);
    report.epochs.back().dev_metric = metric;
    const bool improved = lower_is_better ? metric < best - 1e-12 : metric > best + 1e-12;
    if (improved) {
      best = metric;
      report.best_epoch = epoch;
      best_params = scorer.params().snapshot();
      stale = 0;
    } else if (++stale > config.patience) {
      report.stopped_early = true;
      break;
    }
  }
  if (!dev.empty()) scorer.params().restore(best_params);
  scorer.params().zero_grad();
  return report;
}

void warm_start(ScorerGraph& scorer, const Datastore& data, std::span<const FactorGraph> train,
                std::span<const FactorGraph> dev, const TrainConfig& config) {
  if (config.warm_start) {
    load_checkpoint(scorer.params(), *config.warm_start);
    return;
  }
  TrainConfig local = config;
  local.mode = TrainMode::Local;
  local.pool = 0;
  run(scorer, data, train, dev, local);
}

}  // namespace

TrainReport train(ScorerGraph& scorer, const Datastore& data,
                  std::span<const FactorGraph> train_graphs,
                  std::span<const FactorGraph> dev_graphs, const TrainConfig& config) {
  config.validate();
  if (config.mode == TrainMode::GlobalHinge || config.mode == TrainMode::GlobalCrf) {
    warm_start(scorer, data, train_graphs, dev_graphs, config);
  }
  return run(scorer, data, train_graphs, dev_graphs, config);
}

TrainReport train_local(ScorerGraph& scorer, const Datastore& data,
                        std::span<const FactorGraph> train_graphs,
                        std::span<const FactorGraph> dev_graphs, TrainConfig config) {
  config.mode = TrainMode::Local;
  return train(scorer, data, train_graphs, dev_graphs, config);
}

TrainReport train_global_hinge(ScorerGraph& scorer, const Datastore& data,
                               std::span<const FactorGraph> train_graphs,
                               std::span<const FactorGraph> dev_graphs, TrainConfig config) {
  config.mode = TrainMode::GlobalHinge;
  return train(scorer, data, train_graphs, dev_graphs, config);
}

TrainReport train_global_crf(ScorerGraph& scorer, const Datastore& data,
                             std::span<const FactorGraph> train_graphs,
                             std::span<const FactorGraph> dev_graphs, TrainConfig config) {
  config.mode = TrainMode::GlobalCrf;
  return train(scorer, data, train_graphs, dev_graphs, config);
}

Metric parse_metric(const std::string& name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "macro-f1") return Metric::MacroF1;
  if (name == "positive-f1") return Metric::PositiveF1;
  throw Error(ErrorKind::UsageError,
              fmt::format("unknown metric '{}' (expected accuracy, macro-f1 or positive-f1)",
                          name));
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::Accuracy: return "accuracy";
    case Metric::MacroF1: return "macro-f1";
    case Metric::PositiveF1: return "positive-f1";
  }
  return "accuracy";
}

std::size_t Confusion::total() const {
  std::size_t n = 0;
  for (const auto& row : counts_) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

double Confusion::accuracy() const {
  const std::size_t n = total();
  if (n == 0) return 1.0;
  std::size_t right = 0;
  for (std::size_t c = 0; c < counts_.size(); ++c) right += counts_[c][c];
  return static_cast<double>(right) / static_cast<double>(n);
}

double Confusion::f1(std::size_t c) const {
  const std::size_t tp = counts_[c][c];
  std::size_t fp = 0, fn = 0;
  for (std::size_t o = 0; o < counts_.size(); ++o) {
    if (o == c) continue;
    fp += counts_[o][c];
    fn += counts_[c][o];
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double Confusion::macro_f1() const {
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    std::size_t seen = 0;
    for (std::size_t o = 0; o < counts_.size(); ++o) seen += counts_[c][o] + counts_[o][c];
    if (seen == 0) continue;
    sum += f1(c);
    ++classes;
  }
  return classes ? sum / static_cast<double>(classes) : 1.0;
}

std::map<std::string, std::size_t> label_positions(const CheckedProgram& program) {
  std::map<std::string, std::size_t> out;
  for (const auto& t : program.templates()) {
    if (t.label_position) out[t.rule.head.atom.predicate] = *t.label_position;
  }
  return out;
}

Evaluation evaluate(std::span<const FactorGraph> graphs, const std::vector<Bits>& predicted,
                    const std::vector<Bits>& gold, Metric metric,
                    const std::map<std::string, std::size_t>& multiclass) {
  if (predicted.size() != graphs.size() || gold.size() != graphs.size()) {
    throw Error(ErrorKind::AlignmentError,
                fmt::format("{} graphs but {} predictions and {} gold assignments", graphs.size(),
                            predicted.size(), gold.size()));
  }
  // Binary relations: atom-level pairs. Multiclass: per group, the labels set to 1.
  std::map<std::string, Confusion> binary;
  struct Group {
    std::optional<SymbolId> gold;
    std::optional<SymbolId> pred;
  };
  std::map<std::string, std::map<std::pair<std::size_t, Row>, Group>> groups;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = graphs[gi];
    if (predicted[gi].size() != g.size() || gold[gi].size() != g.size()) {
      throw Error(ErrorKind::AlignmentError,
                  fmt::format("{}: {} variables but {} predicted and {} gold values",
                              g.instance_id, g.size(), predicted[gi].size(), gold[gi].size()));
    }
    for (const auto& v : g.variables) {
      const auto& pred = v.atom.predicate;
      auto mc = multiclass.find(pred);
      if (mc == multiclass.end()) {
        binary.try_emplace(pred, 2).first->second.add(gold[gi][v.id], predicted[gi][v.id]);
        continue;
      }
      Row key = v.atom.args;
      const SymbolId label = key[mc->second];
      key.erase(key.begin() + static_cast<std::ptrdiff_t>(mc->second));
      Group& grp = groups[pred][{gi, key}];
      if (gold[gi][v.id] && !grp.gold) grp.gold = label;
      if (predicted[gi][v.id] && !grp.pred) grp.pred = label;
    }
  }
  auto value = [&](const Confusion& c, bool is_binary) {
    switch (metric) {
      case Metric::Accuracy: return c.accuracy();
      case Metric::MacroF1: return c.macro_f1();
      case Metric::PositiveF1: return is_binary ? c.f1(1) : c.macro_f1();
    }
    return 0.0;
  };
  Evaluation out;
  for (const auto& [pred, c] : binary) out.per_relation[pred] = value(c, true);
  for (const auto& [pred, by_key] : groups) {
    std::set<SymbolId> labels;
    for (const auto& [_, grp] : by_key) {
      if (grp.gold) labels.insert(*grp.gold);
      if (grp.pred) labels.insert(*grp.pred);
    }
    std::vector<SymbolId> index(labels.begin(), labels.end());
    const std::size_t none = index.size();
    auto class_of = [&](const std::optional<SymbolId>& s) {
      if (!s) return none;
      return static_cast<std::size_t>(std::lower_bound(index.begin(), index.end(), *s) -
                                      index.begin());
    };
    Confusion c(none + 1);
    for (const auto& [_, grp] : by_key) c.add(class_of(grp.gold), class_of(grp.pred));
    out.per_relation[pred] = value(c, false);
  }
  double sum = 0.0;
  for (const auto& [_, v] : out.per_relation) sum += v;
  out.average = out.per_relation.empty() ? 0.0 : sum / static_cast<double>(out.per_relation.size());
  return out;
}

}  // namespace relgraph
