#pragma once

// Training regimes over scored factor graphs and the evaluation metrics.
//
//   local         per-rule cross-entropy on the head label
//   joint         local training; prediction is MAP over log-softmax weights
//   global-hinge  structured hinge with loss-augmented MAP
//   global-crf    CRF likelihood with the partition sum over a solution pool

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relgraph/autodiff.hpp"
#include "relgraph/checked_program.hpp"
#include "relgraph/datastore.hpp"
#include "relgraph/factor_graph.hpp"
#include "relgraph/inference.hpp"
#include "relgraph/relnets.hpp"

namespace relgraph {

enum class TrainMode { Local, Joint, GlobalHinge, GlobalCrf };
TrainMode parse_train_mode(const std::string& name);
std::string to_string(TrainMode mode);

enum class OptimizerKind { Sgd, Adam };
OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct TrainConfig {
  TrainMode mode = TrainMode::Local;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double lr = 0.01;
  double weight_decay = 0.0;
  std::size_t epochs = 20;
  std::size_t patience = 3;
  /// CRF pool size β; required (>= 1) for global-crf only.
  std::size_t pool = 0;
  /// Graphs per optimizer step; their losses are computed concurrently.
  std::size_t batch_graphs = 1;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  bool freeze_encoders = false;
  /// Global modes: parameters to start from. Without one, global modes first
  /// run local training with the same settings.
  std::optional<std::filesystem::path> warm_start;
  SolveOptions solver;

  /// Raises ConfigError for inconsistent settings.
  void validate() const;
};

/// Gold values of every variable; MissingGold if any is unlabeled.
std::vector<std::uint8_t> gold_assignment(const FactorGraph& graph);

/// Index of the gold head label of a potential.
std::size_t gold_label(const FactorGraph& graph, const GroundRule& rule);

/// Raw scores of every potential, as tape nodes and as plain tables.
std::vector<ad::Var> score_vars(ad::Tape& tape, const ScorerGraph& scorer,
                                const FactorGraph& graph, const Datastore& data);
ScoreTables score_tables(const ScorerGraph& scorer, const FactorGraph& graph,
                         const Datastore& data);
ScoreTables log_softmax_tables(const ScoreTables& scores);

/// Σ_r -log softmax(w_r)[gold label].
ad::Var local_loss(ad::Tape& tape, const std::vector<ad::Var>& scores, const FactorGraph& graph);

/// Σ_r Σ_l w_rl ψ_rl(y) on the tape.
ad::Var structured_score(ad::Tape& tape, const std::vector<ad::Var>& scores,
                         const FactorGraph& graph, std::span<const std::uint8_t> y);

/// max(0, Δ(ŷ, gold) + S(ŷ) - S(gold)) for a fixed ŷ.
ad::Var hinge_loss(ad::Tape& tape, const std::vector<ad::Var>& scores, const FactorGraph& graph,
                   std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> gold);

/// -S(gold) + log Σ_{y in pool} exp S(y); the pool must contain gold.
ad::Var crf_loss(ad::Tape& tape, const std::vector<ad::Var>& scores, const FactorGraph& graph,
                 const SolutionPool& pool, std::span<const std::uint8_t> gold);

/// k_best(β) with gold appended when missing.
SolutionPool crf_pool(const FactorGraph& graph, const ScoreTables& scores, std::size_t beta,
                      std::span<const std::uint8_t> gold, const SolveOptions& options = {});

/// log Σ_{y in pool} exp objective(y).
double pooled_log_partition(const FactorGraph& graph, const ScoreTables& scores,
                            const SolutionPool& pool);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// Dev loss (local training) or dev accuracy (global modes); NaN without dev.
  double dev_metric = 0.0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Trains in place. Parameters end at the best dev epoch (or the last epoch
/// when `dev` is empty).
TrainReport train(ScorerGraph& scorer, const Datastore& data,
                  std::span<const FactorGraph> train_graphs,
                  std::span<const FactorGraph> dev_graphs, const TrainConfig& config);

TrainReport train_local(ScorerGraph& scorer, const Datastore& data,
                        std::span<const FactorGraph> train_graphs,
                        std::span<const FactorGraph> dev_graphs, TrainConfig config);
TrainReport train_global_hinge(ScorerGraph& scorer, const Datastore& data,
                               std::span<const FactorGraph> train_graphs,
                               std::span<const FactorGraph> dev_graphs, TrainConfig config);
TrainReport train_global_crf(ScorerGraph& scorer, const Datastore& data,
                             std::span<const FactorGraph> train_graphs,
                             std::span<const FactorGraph> dev_graphs, TrainConfig config);

/// Independent per-variable decisions: each variable sums, over the potentials
/// it heads, the log-odds of being true. No constraints are applied.
std::vector<std::uint8_t> predict_local(const FactorGraph& graph, const ScoreTables& scores);

/// MAP over log-softmax weights under the hard constraints.
Assignment predict_joint(const FactorGraph& graph, const ScoreTables& scores,
                         const SolveOptions& options = {});

/// Predictions for every graph using the mode's decoder: local for Local,
/// joint for Joint, MAP over raw scores for the global modes.
std::vector<std::vector<std::uint8_t>> predict(const ScorerGraph& scorer, const Datastore& data,
                                               std::span<const FactorGraph> graphs,
                                               TrainMode mode, const SolveOptions& options = {},
                                               unsigned jobs = 1);

enum class Metric { Accuracy, MacroF1, PositiveF1 };
Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

/// Confusion counts over classes 0..k-1, indexed [gold][predicted].
class Confusion {
 public:
  explicit Confusion(std::size_t classes) : counts_(classes, std::vector<std::size_t>(classes)) {}
  void add(std::size_t gold, std::size_t predicted) { ++counts_[gold][predicted]; }
  std::size_t count(std::size_t gold, std::size_t predicted) const {
    return counts_[gold][predicted];
  }
  std::size_t total() const;
  double accuracy() const;
  /// F1 of one class; 1 when the class never occurs in gold or prediction.
  double f1(std::size_t c) const;
  /// Mean F1 over classes occurring in gold or prediction.
  double macro_f1() const;

 private:
  std::vector<std::vector<std::size_t>> counts_;
};

struct Evaluation {
  std::map<std::string, double> per_relation;
  /// Mean of the per-relation values.
  double average = 0.0;
};

/// Open predicate -> label argument position for multiclass relations.
std::map<std::string, std::size_t> label_positions(const CheckedProgram& program);

/// Scores predictions per open relation. Binary relations are two-class
/// problems over atoms; multiclass relations group atoms that differ only in
/// the label argument, and the class is the label set to 1. Raises
/// AlignmentError when predictions do not line up with the graphs.
Evaluation evaluate(std::span<const FactorGraph> graphs,
                    const std::vector<std::vector<std::uint8_t>>& predicted,
                    const std::vector<std::vector<std::uint8_t>>& gold, Metric metric,
                    const std::map<std::string, std::size_t>& multiclass = {});

}  // namespace relgraph
