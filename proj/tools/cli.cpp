#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "relgraph/error.hpp"
#include "relgraph/grounder.hpp"
#include "relgraph/learning.hpp"
#include "relgraph/parallel.hpp"
#include "relgraph/random.hpp"

namespace relgraph::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Bits = std::vector<std::uint8_t>;

struct Options {
  std::string program;
  std::string data_dir;
  std::string net_config;
  std::string mode = "local";
  std::string decoder;  // infer: empty means the checkpoint's mode
  std::string solver = "exact";
  std::string metric = "accuracy";
  std::string optimizer = "adam";
  std::string sharing;
  std::size_t pool = 0;
  std::size_t folds = 1;
  std::size_t epochs = 20;
  std::size_t patience = 3;
  std::size_t batch_graphs = 1;
  std::size_t hidden = 8;
  std::size_t embed_dim = 4;
  std::size_t max_free_variables = 40;
  std::size_t restarts = 10;
  double lr = 0.01;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  bool freeze_encoders = false;
  bool dump = false;
  std::string dump_lp;
  std::string metrics_out;
  std::string out;
  std::string checkpoint;
  std::string predictions;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

struct Loaded {
  CheckedProgram program;
  std::uint64_t program_hash = 0;
  std::optional<Datastore> data;
};

Loaded load(const Options& o, bool with_data) {
  const std::string text = read_text(o.program);
  Loaded l{validate(parse_program(text)), fnv1a(text), std::nullopt};
  if (with_data) {
    if (o.data_dir.empty()) throw Error(ErrorKind::UsageError, "--data-dir is required");
    if (!fs::is_directory(o.data_dir)) {
      throw Error(ErrorKind::IoError, fmt::format("no such directory {}", o.data_dir));
    }
    l.data = load_data(o.data_dir, l.program);
  }
  return l;
}

json manifest(const Options& o, const Loaded& l) {
  json m;
  m["program"] = o.program;
  m["program_hash"] = hex(l.program_hash);
  if (l.data) {
    m["data_dir"] = o.data_dir;
    m["data_hash"] = hex(l.data->fingerprint());
  }
  if (!o.net_config.empty()) m["net_config"] = o.net_config;
  m["seed"] = o.seed;
  return m;
}

std::string manifest_line(const json& m) {
  std::string line = "# manifest";
  for (const auto& [k, v] : m.items()) {
    line += fmt::format(" {}={}", k, v.is_string() ? v.get<std::string>() : v.dump());
  }
  return line + "\n";
}

SolveOptions solve_options(const Options& o) {
  SolveOptions s;
  s.solver = parse_solver(o.solver);
  s.max_free_variables = o.max_free_variables;
  s.restarts = o.restarts;
  s.seed = o.seed;
  return s;
}

NetConfig net_config(const Options& o, const Loaded& l) {
  NetConfig config = o.net_config.empty()
                         ? default_config(l.program, *l.data, o.hidden, o.embed_dim)
                         : NetConfig::parse(read_text(o.net_config));
  if (!o.sharing.empty()) config.mode = parse_sharing_mode(o.sharing);
  return config;
}

json evaluation_json(const Evaluation& e) {
  json j;
  j["per_relation"] = json::object();
  for (const auto& [rel, v] : e.per_relation) j["per_relation"][rel] = v;
  j["average"] = e.average;
  return j;
}

std::vector<std::vector<std::uint8_t>> gold_of(std::span<const FactorGraph> graphs) {
  std::vector<Bits> gold;
  for (const auto& g : graphs) gold.push_back(gold_assignment(g));
  return gold;
}

// ---------------------------------------------------------------- compile

int cmd_compile(const Options& o, std::ostream& out) {
  const auto l = load(o, false);
  json r;
  r["manifest"] = manifest(o, l);
  r["status"] = "ok";
  json entities = json::array();
  for (const auto& [name, e] : l.program.entities()) entities.push_back(name);
  json open = json::array(), closed = json::array();
  for (const auto& [name, p] : l.program.predicates()) (p.is_open() ? open : closed).push_back(name);
  json templates = json::array();
  for (const auto& t : l.program.templates()) {
    json tj;
    tj["id"] = t.id;
    tj["multiclass"] = t.label_position.has_value();
    templates.push_back(tj);
  }
  json constraints = json::array();
  for (const auto& c : l.program.constraints()) {
    json cj;
    cj["id"] = c.id;
    cj["kind"] = c.is_arith() ? "arithmetic" : "clause";
    constraints.push_back(cj);
  }
  r["entities"] = entities;
  r["open_predicates"] = open;
  r["closed_predicates"] = closed;
  r["weighted_templates"] = l.program.templates().size();
  r["hard_constraints"] = l.program.constraints().size();
  r["templates"] = templates;
  r["constraints"] = constraints;
  out << r.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------------- ground

int cmd_ground(const Options& o, std::ostream& out) {
  const auto l = load(o, true);
  GroundOptions go;
  go.jobs = o.jobs;
  const auto graphs = ground(l.program, *l.data, go);
  const json m = manifest(o, l);
  std::string text;
  if (o.dump) {
    text = manifest_line(m);
    for (const auto& g : graphs) text += dump(g, l.program, *l.data);
  } else {
    json r;
    r["manifest"] = m;
    json instances = json::array();
    GroundStats total;
    for (const auto& g : graphs) {
      const auto s = stats(g);
      instances.push_back({{"instance", g.instance_id},
                           {"variables", s.variables},
                           {"potentials", s.potentials},
                           {"constraints", s.constraints}});
      total.variables += s.variables;
      total.potentials += s.potentials;
      total.constraints += s.constraints;
    }
    r["instances"] = instances;
    r["total"] = {{"instances", graphs.size()},
                  {"variables", total.variables},
                  {"potentials", total.potentials},
                  {"constraints", total.constraints}};
    text = r.dump(2) + "\n";
  }
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
  }
  return 0;
}

// ------------------------------------------------------------------ train

struct Fold {
  std::vector<FactorGraph> train, dev, test;
};

// Graphs are shuffled with the "folds" stream and dealt round-robin. Fold k
// tests on part k, stops early on part k+1 (with three or more folds), and
// trains on the rest. A single fold trains and tests on everything.
std::vector<Fold> make_folds(const std::vector<FactorGraph>& graphs, std::size_t n,
                             std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::UsageError, "--folds must be at least 1");
  if (n > graphs.size()) {
    throw Error(ErrorKind::UsageError,
                fmt::format("--folds {} exceeds the {} grounded instances", n, graphs.size()));
  }
  if (n == 1) return {Fold{graphs, {}, graphs}};
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_stream(seed, "folds");
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> parts(n);
  for (std::size_t i = 0; i < order.size(); ++i) parts[i % n].push_back(order[i]);
  for (auto& p : parts) std::sort(p.begin(), p.end());
  std::vector<Fold> folds(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t dev = n >= 3 ? (k + 1) % n : n;
    for (std::size_t p = 0; p < n; ++p) {
      auto& dst = p == k ? folds[k].test : p == dev ? folds[k].dev : folds[k].train;
      for (std::size_t i : parts[p]) dst.push_back(graphs[i]);
    }
  }
  return folds;
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.mode = parse_train_mode(o.mode);
  c.optimizer = parse_optimizer(o.optimizer);
  c.lr = o.lr;
  c.weight_decay = o.weight_decay;
  c.epochs = o.epochs;
  c.patience = o.patience;
  c.pool = o.pool;
  c.batch_graphs = o.batch_graphs;
  c.jobs = o.jobs;
  c.seed = o.seed;
  c.freeze_encoders = o.freeze_encoders;
  c.solver = solve_options(o);
  c.validate();
  return c;
}

std::map<std::string, std::string> checkpoint_metadata(const std::string& text) {
  std::map<std::string, std::string> meta;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.starts_with("meta ")) continue;
    const auto space = line.find(' ', 5);
    if (space == std::string::npos) continue;
    meta[line.substr(5, space - 5)] = line.substr(space + 1);
  }
  return meta;
}

std::string compact(const NetConfig& config) { return json::parse(config.to_json()).dump(); }

int cmd_train(const Options& o, std::ostream& out) {
  const auto l = load(o, true);
  const TrainConfig config = train_config(o);
  const Metric metric = parse_metric(o.metric);
  const NetConfig net = net_config(o, l);
  GroundOptions go;
  go.jobs = o.jobs;
  const auto graphs = ground(l.program, *l.data, go);
  const auto folds = make_folds(graphs, o.folds, o.seed);
  const auto multiclass = label_positions(l.program);
  const fs::path out_dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(out_dir);
  const json m = manifest(o, l);

  std::map<std::string, std::string> meta;
  for (const auto& [k, v] : m.items()) meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  meta["mode"] = o.mode;
  meta["net"] = compact(net);

  std::vector<json> fold_results(folds.size());
  std::vector<Evaluation> evals(folds.size());
  // Folds run concurrently; each gets an equal share of the worker budget.
  const unsigned fold_jobs = static_cast<unsigned>(std::min<std::size_t>(folds.size(), o.jobs));
  TrainConfig inner = config;
  inner.jobs = std::max(1u, o.jobs / std::max(1u, fold_jobs));
  parallel_for(folds.size(), fold_jobs, [&](std::size_t k) {
    const auto& f = folds[k];
    auto scorer = ScorerGraph::build(l.program, *l.data, net, o.seed);
    spdlog::info("fold {}: {} train, {} dev, {} test instances", k, f.train.size(), f.dev.size(),
                 f.test.size());
    const auto report = train(scorer, *l.data, f.train, f.dev, inner);
    const auto predicted = predict(scorer, *l.data, f.test, config.mode, config.solver, inner.jobs);
    evals[k] = evaluate(f.test, predicted, gold_of(f.test), metric, multiclass);
    const fs::path ckpt = out_dir / fmt::format("fold{}.ckpt", k);
    auto fold_meta = meta;
    fold_meta["fold"] = std::to_string(k);
    save_checkpoint(scorer.params(), ckpt, fold_meta);
    json fj;
    fj["fold"] = k;
    fj["checkpoint"] = ckpt.string();
    fj["train_instances"] = f.train.size();
    fj["dev_instances"] = f.dev.size();
    fj["test_instances"] = f.test.size();
    fj["epochs"] = report.epochs.size();
    fj["best_epoch"] = report.best_epoch;
    fj["stopped_early"] = report.stopped_early;
    fj.update(evaluation_json(evals[k]));
    fold_results[k] = fj;
  });

  Evaluation mean;
  for (const auto& e : evals) {
    for (const auto& [rel, v] : e.per_relation) mean.per_relation[rel] += v / evals.size();
    mean.average += e.average / evals.size();
  }
  json r;
  r["manifest"] = m;
  r["mode"] = o.mode;
  r["metric"] = to_string(metric);
  r["folds"] = fold_results;
  r["mean"] = evaluation_json(mean);
  const std::string text = r.dump(2) + "\n";
  if (!o.metrics_out.empty()) write_text(o.metrics_out, text);
  out << text;
  return 0;
}

// ------------------------------------------------------------------ infer

int cmd_infer(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) throw Error(ErrorKind::UsageError, "--checkpoint is required");
  const auto l = load(o, true);
  const std::string ckpt_text = read_text(o.checkpoint);
  std::string mode_name = o.decoder;
  NetConfig net;
  {
    // The network shape comes from the checkpoint unless overridden.
    const auto meta = checkpoint_metadata(ckpt_text);
    if (!o.net_config.empty() || !meta.contains("net")) {
      net = net_config(o, l);
    } else {
      net = NetConfig::parse(meta.at("net"));
    }
    if (meta.contains("data_hash") && meta.at("data_hash") != hex(l.data->fingerprint())) {
      spdlog::warn("checkpoint was trained on data {} but {} has {}", meta.at("data_hash"),
                   o.data_dir, hex(l.data->fingerprint()));
    }
    if (mode_name.empty()) mode_name = meta.contains("mode") ? meta.at("mode") : "local";
  }
  const TrainMode mode = parse_train_mode(mode_name);
  auto scorer = ScorerGraph::build(l.program, *l.data, net, o.seed);
  load_checkpoint_text(scorer.params(), ckpt_text);
  const SolveOptions solve_opts = solve_options(o);
  GroundOptions go;
  go.jobs = o.jobs;
  const auto graphs = ground(l.program, *l.data, go);
  const std::size_t k = std::max<std::size_t>(o.pool, 1);

  std::vector<std::string> blocks(graphs.size()), lps(graphs.size());
  parallel_for(graphs.size(), o.jobs, [&](std::size_t i) {
    const auto& g = graphs[i];
    auto scores = score_tables(scorer, g, *l.data);
    if (mode == TrainMode::Local || mode == TrainMode::Joint) {
      scores = log_softmax_tables(scores);
    }
    SolutionPool pool;
    if (mode == TrainMode::Local) {
      const Bits y = predict_local(g, scores);
      pool.push_back({y, objective(g, scores, y)});
    } else if (k == 1) {
      pool.push_back(solve(g, scores, solve_opts));
    } else {
      pool = k_best(g, scores, k, solve_opts);
    }
    std::string& b = blocks[i];
    for (std::size_t r = 0; r < pool.size(); ++r) {
      b += fmt::format("# instance {} rank {} score {:.17g}\n", g.instance_id, r, pool[r].score);
      for (std::size_t v = 0; v < g.size(); ++v) {
        b += fmt::format("{}\t{}\t{}\t{}\n", g.instance_id, r,
                         to_string(g.variables[v].atom, *l.data), int(pool[r].values[v]));
      }
    }
    if (!o.dump_lp.empty()) lps[i] = dump_lp(g, scores);
  });

  std::string text = manifest_line(manifest(o, l));
  text += fmt::format("# mode {} solver {} checkpoint {}\n", mode_name, o.solver, o.checkpoint);
  for (const auto& b : blocks) text += b;
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
  }
  if (!o.dump_lp.empty()) {
    std::string lp;
    for (const auto& s : lps) lp += s;
    write_text(o.dump_lp, lp);
  }
  return 0;
}

// ------------------------------------------------------------------- eval

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.predictions.empty()) throw Error(ErrorKind::UsageError, "--predictions is required");
  const auto l = load(o, true);
  const Metric metric = parse_metric(o.metric);
  const auto graphs = ground(l.program, *l.data);
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> where;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (std::size_t v = 0; v < graphs[i].size(); ++v) {
      where[{graphs[i].instance_id, to_string(graphs[i].variables[v].atom, *l.data)}] = {i, v};
    }
  }
  std::vector<Bits> predicted(graphs.size());
  std::vector<std::vector<bool>> seen(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    predicted[i].assign(graphs[i].size(), 0);
    seen[i].assign(graphs[i].size(), false);
  }
  std::istringstream in(read_text(o.predictions));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, '\t');) cols.push_back(c);
    if (cols.size() != 4 || (cols[3] != "0" && cols[3] != "1")) {
      throw Error(ErrorKind::FormatError,
                  fmt::format("{}:{}: expected instance, rank, atom, 0/1", o.predictions, lineno));
    }
    if (cols[1] != "0") continue;
    const auto it = where.find({cols[0], cols[2]});
    if (it == where.end()) {
      throw Error(ErrorKind::AlignmentError,
                  fmt::format("{}:{}: {} is not an atom of instance {}", o.predictions, lineno,
                              cols[2], cols[0]));
    }
    const auto [gi, vi] = it->second;
    predicted[gi][vi] = cols[3] == "1";
    seen[gi][vi] = true;
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (std::size_t v = 0; v < graphs[i].size(); ++v) {
      if (!seen[i][v]) {
        throw Error(ErrorKind::AlignmentError,
                    fmt::format("no prediction for {} in instance {}",
                                to_string(graphs[i].variables[v].atom, *l.data),
                                graphs[i].instance_id));
      }
    }
  }
  const auto e = evaluate(graphs, predicted, gold_of(graphs), metric, label_positions(l.program));
  std::size_t violations = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) violations += !graphs[i].feasible(predicted[i]);
  json r;
  r["manifest"] = manifest(o, l);
  r["metric"] = to_string(metric);
  r.update(evaluation_json(e));
  r["infeasible_instances"] = violations;
  if (!o.metrics_out.empty()) write_text(o.metrics_out, r.dump(2) + "\n");
  out << fmt::format("{:<24} {}\n", "relation", to_string(metric));
  for (const auto& [rel, v] : e.per_relation) out << fmt::format("{:<24} {:.4f}\n", rel, v);
  out << fmt::format("{:<24} {:.4f}\n", "average", e.average);
  if (violations) out << fmt::format("{} instance(s) violate hard constraints\n", violations);
  return 0;
}

// ------------------------------------------------------------------- setup

void configure_logging(std::ostream& err) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto logger = spdlog::get("relgraph");
  if (!logger) {
    logger = spdlog::stderr_color_mt("relgraph");
    spdlog::set_default_logger(logger);
  }
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("RELGRAPH_LOG")) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      err << fmt::format("unknown RELGRAPH_LOG level '{}', using warn\n", env);
      level = spdlog::level::warn;
    }
  }
  spdlog::set_level(level);
}

void report(std::ostream& err, std::string_view kind, const std::string& message,
            const SourceSpan& span = {}) {
  json e;
  e["kind"] = kind;
  e["message"] = message;
  if (span.line) {
    e["line"] = span.line;
    e["column"] = span.column;
  }
  err << json{{"error", e}}.dump() << "\n";
}

void add_program(CLI::App* cmd, Options& o) {
  cmd->add_option("--program", o.program, "Program file")->required()->check(CLI::ExistingFile);
}
void add_data(CLI::App* cmd, Options& o) {
  cmd->add_option("--data-dir", o.data_dir, "Directory of .tsv/.feat/.vocab files")
      ->required()
      ->check(CLI::ExistingDirectory);
}
void add_network(CLI::App* cmd, Options& o) {
  cmd->add_option("--net-config", o.net_config, "Network config JSON (default: generated)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--sharing", o.sharing, "Override sharing: relnets|independent");
  cmd->add_option("--hidden", o.hidden, "Hidden width of generated configs")->capture_default_str();
  cmd->add_option("--embed-dim", o.embed_dim, "Embedding width of generated configs")
      ->capture_default_str();
}
void add_solver(CLI::App* cmd, Options& o) {
  cmd->add_option("--solver", o.solver, "exact|approx")->capture_default_str();
  cmd->add_option("--max-free-vars", o.max_free_variables, "Exact solver size cap")
      ->capture_default_str();
  cmd->add_option("--restarts", o.restarts, "Approximate solver restarts")->capture_default_str();
}
void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Run seed")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: all cores)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging(err);
  Options o;
  CLI::App app("Relational learning toolkit: weighted horn-clause templates, neural rule "
               "scorers and constrained MAP inference.",
               "relgraph");
  app.require_subcommand(1);
  app.set_version_flag("--version", "relgraph 0.1.0");

  auto* compile = app.add_subcommand("compile", "Parse and validate a program");
  add_program(compile, o);

  auto* ground_cmd = app.add_subcommand("ground", "Ground a program into factor graphs");
  add_program(ground_cmd, o);
  add_data(ground_cmd, o);
  ground_cmd->add_flag("--dump", o.dump, "Write the text dump instead of statistics");
  ground_cmd->add_option("--out", o.out, "Output file (default: stdout)");
  add_common(ground_cmd, o);

  auto* train_cmd = app.add_subcommand("train", "Train rule scorers with cross-validation");
  add_program(train_cmd, o);
  add_data(train_cmd, o);
  add_network(train_cmd, o);
  train_cmd->add_option("--mode", o.mode, "local|joint|global-hinge|global-crf")
      ->capture_default_str();
  add_solver(train_cmd, o);
  train_cmd->add_option("--pool", o.pool, "CRF solution pool size (global-crf)");
  train_cmd->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  train_cmd->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
  train_cmd->add_option("--patience", o.patience, "Early-stopping patience")
      ->capture_default_str();
  train_cmd->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--weight-decay", o.weight_decay, "Weight decay")->capture_default_str();
  train_cmd->add_option("--optimizer", o.optimizer, "sgd|adam")->capture_default_str();
  train_cmd->add_option("--batch-graphs", o.batch_graphs, "Instances per update")
      ->capture_default_str();
  train_cmd->add_flag("--freeze-encoders", o.freeze_encoders,
                      "Keep entity/relation encoders fixed in global modes");
  train_cmd->add_option("--metric", o.metric, "accuracy|macro-f1|positive-f1")
      ->capture_default_str();
  train_cmd->add_option("--metrics-out", o.metrics_out, "Metrics JSON file");
  train_cmd->add_option("--out", o.out, "Checkpoint directory (default: .)");
  add_common(train_cmd, o);

  auto* infer_cmd = app.add_subcommand("infer", "Predict assignments with a trained checkpoint");
  add_program(infer_cmd, o);
  add_data(infer_cmd, o);
  infer_cmd->add_option("--checkpoint", o.checkpoint, "Trained parameters")
      ->required()
      ->check(CLI::ExistingFile);
  add_network(infer_cmd, o);
  infer_cmd->add_option("--mode", o.decoder,
                        "Decoder: local|joint|global-hinge|global-crf (default: the "
                        "checkpoint's training mode)");
  add_solver(infer_cmd, o);
  infer_cmd->add_option("--pool", o.pool, "Emit the k best assignments per instance");
  infer_cmd->add_option("--dump-lp", o.dump_lp, "Write each MAP problem as LP text");
  infer_cmd->add_option("--out", o.out, "Assignment file (default: stdout)");
  add_common(infer_cmd, o);

  auto* eval_cmd = app.add_subcommand("eval", "Score an assignment file against gold labels");
  add_program(eval_cmd, o);
  add_data(eval_cmd, o);
  eval_cmd->add_option("--predictions", o.predictions, "Assignment file from infer")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--metric", o.metric, "accuracy|macro-f1|positive-f1")
      ->capture_default_str();
  eval_cmd->add_option("--metrics-out", o.metrics_out, "Metrics JSON file");

  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "UsageError", e.what());
    return 2;
  }
  if (o.jobs == 0) o.jobs = 1;

  try {
    if (*compile) return cmd_compile(o, out);
    if (*ground_cmd) return cmd_ground(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*infer_cmd) return cmd_infer(o, out);
    if (*eval_cmd) return cmd_eval(o, out);
  } catch (const Error& e) {
    report(err, to_string(e.kind()), e.detail(), e.span());
    return e.kind() == ErrorKind::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    report(err, "IoError", e.what());
    return 1;
  }
  return 2;
}

}  // namespace relgraph::cli
