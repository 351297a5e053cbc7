#include "relgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "relgraph/error.hpp"

namespace relgraph::ad {

namespace {

std::string shape_str(const Tensor& t) { return fmt::format("{}x{}", t.rows, t.cols); }

[[noreturn]] void mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorKind::ShapeMismatch,
              fmt::format("{}: {} vs {}", op, shape_str(a), shape_str(b)));
}

}  // namespace

double Tensor::item() const {
  if (values.size() != 1) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("item() on a {}x{} tensor", rows, cols));
  }
  return values[0];
}

void Parameter::zero_grad() { std::fill(grad_.values.begin(), grad_.values.end(), 0.0); }

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  auto [it, inserted] = params_.emplace(name, nullptr);
  if (!inserted) {
    throw Error(ErrorKind::ConfigError, fmt::format("parameter '{}' defined twice", name));
  }
  it->second = std::make_unique<Parameter>(name, std::move(value));
  return *it->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto* p = find(name);
  if (!p) throw Error(ErrorKind::ConfigError, fmt::format("no parameter '{}'", name));
  return *p;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : it->second.get();
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& [name, p] : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p->value().size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p->zero_grad();
}

std::map<std::string, Tensor> ParameterStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, p] : params_) out.emplace(name, p->value());
  return out;
}

void ParameterStore::restore(const std::map<std::string, Tensor>& values) {
  for (const auto& [name, t] : values) get(name).value() = t;
}

std::string checkpoint_text(const ParameterStore& store,
                            const std::map<std::string, std::string>& metadata) {
  std::string out = "relgraph-checkpoint v1\n";
  for (const auto& [k, v] : metadata) out += fmt::format("meta {} {}\n", k, v);
  for (const Parameter* p : store.all()) {
    out += fmt::format("param {} {} {}\n", p->name(), p->value().rows, p->value().cols);
    for (std::size_t i = 0; i < p->value().values.size(); ++i) {
      out += fmt::format("{}{:.17g}", i ? " " : "", p->value().values[i]);
    }
    out += "\n";
  }
  return out;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path,
                     const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, fmt::format("cannot write {}", path.string()));
  out << checkpoint_text(store, metadata);
}

std::map<std::string, std::string> load_checkpoint_text(ParameterStore& store,
                                                        const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "relgraph-checkpoint v1") {
    throw Error(ErrorKind::CheckpointError, "missing or unsupported checkpoint header");
  }
  std::map<std::string, std::string> meta;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      meta[key] = value;
      continue;
    }
    if (tag != "param") {
      throw Error(ErrorKind::CheckpointError, fmt::format("unexpected line '{}'", line));
    }
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(ls >> name >> rows >> cols)) {
      throw Error(ErrorKind::CheckpointError, fmt::format("bad parameter header '{}'", line));
    }
    Parameter* p = store.find(name);
    if (!p) {
      throw Error(ErrorKind::CheckpointError,
                  fmt::format("checkpoint parameter '{}' is not in the model", name));
    }
    if (p->value().rows != rows || p->value().cols != cols) {
      throw Error(ErrorKind::CheckpointError,
                  fmt::format("parameter '{}' is {}x{} in the model but {}x{} in the "
                              "checkpoint",
                              name, p->value().rows, p->value().cols, rows, cols));
    }
    std::string values;
    std::getline(in, values);
    std::istringstream vs(values);
    for (double& v : p->value().values) {
      std::string tok;
      if (!(vs >> tok)) {
        throw Error(ErrorKind::CheckpointError,
                    fmt::format("too few values for parameter '{}'", name));
      }
      v = std::strtod(tok.c_str(), nullptr);
    }
  }
  return meta;
}

std::map<std::string, std::string> load_checkpoint(ParameterStore& store,
                                                   const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return load_checkpoint_text(store, ss.str());
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, Backward backward) {
  nodes_.push_back({std::move(value), {}, std::move(inputs), std::move(backward), nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return record(std::move(value), {}, nullptr); }

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  Var v = record(p.value(), {}, nullptr);
  nodes_[v.id].param = &p;
  param_nodes_.emplace(&p, v.id);
  return v;
}

void Tape::backward(Var root) {
  const Tensor& r = nodes_[root.id].value;
  if (r.values.size() != 1) {
    throw Error(ErrorKind::NonScalarRoot,
                fmt::format("backward from a {}x{} node", r.rows, r.cols));
  }
  for (auto& n : nodes_) n.grad = Tensor(n.value.rows, n.value.cols);
  nodes_[root.id].grad.values[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

std::vector<std::pair<Parameter*, Tensor>> Tape::parameter_gradients() const {
  std::vector<std::pair<Parameter*, Tensor>> out;
  for (const auto& n : nodes_) {
    if (n.param && !n.grad.values.empty()) out.emplace_back(n.param, n.grad);
  }
  return out;
}

void Tape::backward_into_params(Var root, double scale) {
  backward(root);
  for (auto& n : nodes_) {
    if (!n.param) continue;
    auto& g = n.param->grad().values;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * n.grad.values[i];
  }
}

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols != B.rows) mismatch("matmul", A, B);
  Tensor C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double x = A.at(i, k);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) C.at(i, j) += x * B.at(k, j);
    }
  }
  return a.tape->record(std::move(C), {a.id, b.id}, [](Tape& t, std::size_t self) {
    const auto& in = t.inputs(self);
    const Tensor& G = t.grad_of(self);
    const Tensor& A = t.value(in[0]);
    const Tensor& B = t.value(in[1]);
    Tensor& GA = t.grad_of(in[0]);
    for (std::size_t i = 0; i < A.rows; ++i) {
      for (std::size_t k = 0; k < A.cols; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < B.cols; ++j) s += G.at(i, j) * B.at(k, j);
        GA.at(i, k) += s;
      }
    }
    Tensor& GB = t.grad_of(in[1]);
    for (std::size_t k = 0; k < B.rows; ++k) {
      for (std::size_t i = 0; i < A.rows; ++i) {
        const double x = A.at(i, k);
        if (x == 0.0) continue;
        for (std::size_t j = 0; j < B.cols; ++j) GB.at(k, j) += x * G.at(i, j);
      }
    }
  });
}

namespace {

// Elementwise binary op with optional row broadcast of b.
template <typename F, typename DA, typename DB>
Var binary(std::string_view name, Var a, Var b, F f, DA da, DB db) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool broadcast = B.rows == 1 && A.rows != 1 && B.cols == A.cols;
  if (!broadcast && (A.rows != B.rows || A.cols != B.cols)) mismatch(name, A, B);
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) {
      C.at(i, j) = f(A.at(i, j), B.at(broadcast ? 0 : i, j));
    }
  }
  return a.tape->record(std::move(C), {a.id, b.id},
                        [broadcast, da, db](Tape& t, std::size_t self) {
    const auto& in = t.inputs(self);
    const Tensor& G = t.grad_of(self);
    const Tensor& A = t.value(in[0]);
    const Tensor& B = t.value(in[1]);
    Tensor& GA = t.grad_of(in[0]);
    Tensor& GB = t.grad_of(in[1]);
    for (std::size_t i = 0; i < A.rows; ++i) {
      for (std::size_t j = 0; j < A.cols; ++j) {
        const std::size_t bi = broadcast ? 0 : i;
        const double x = A.at(i, j);
        const double y = B.at(bi, j);
        GA.at(i, j) += G.at(i, j) * da(x, y);
        GB.at(bi, j) += G.at(i, j) * db(x, y);
      }
    }
  });
}

template <typename F, typename D>
Var unary(Var a, F f, D d) {
  const Tensor& A = a.value();
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.values.size(); ++i) C.values[i] = f(A.values[i]);
  return a.tape->record(std::move(C), {a.id}, [d](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs(self)[0];
    const Tensor& G = t.grad_of(self);
    const Tensor& X = t.value(in);
    const Tensor& Y = t.value(self);
    Tensor& GX = t.grad_of(in);
    for (std::size_t i = 0; i < X.values.size(); ++i) {
      GX.values[i] += G.values[i] * d(X.values[i], Y.values[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var scale(Var a, double k) {
  return unary(a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Var add_scalar(Var a, double k) {
  return unary(a, [k](double x) { return x + k; }, [](double, double) { return 1.0; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "concat of zero tensors");
  }
  const std::size_t rows = parts[0].value().rows;
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.value().rows != rows) mismatch("concat", parts[0].value(), p.value());
    cols += p.value().cols;
    ids.push_back(p.id);
  }
  Tensor C(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < P.cols; ++j) C.at(i, offset + j) = P.at(i, j);
    }
    offset += P.cols;
  }
  return parts[0].tape->record(std::move(C), std::move(ids), [](Tape& t, std::size_t self) {
    const Tensor& G = t.grad_of(self);
    std::size_t offset = 0;
    for (std::size_t in : t.inputs(self)) {
      Tensor& GP = t.grad_of(in);
      for (std::size_t i = 0; i < GP.rows; ++i) {
        for (std::size_t j = 0; j < GP.cols; ++j) GP.at(i, j) += G.at(i, offset + j);
      }
      offset += GP.cols;
    }
  });
}

Var softmax(Var a) {
  const Tensor& A = a.value();
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < A.cols; ++j) m = std::max(m, A.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) z += (C.at(i, j) = std::exp(A.at(i, j) - m));
    for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) /= z;
  }
  return a.tape->record(std::move(C), {a.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs(self)[0];
    const Tensor& G = t.grad_of(self);
    const Tensor& Y = t.value(self);
    Tensor& GX = t.grad_of(in);
    for (std::size_t i = 0; i < Y.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < Y.cols; ++j) dot += G.at(i, j) * Y.at(i, j);
      for (std::size_t j = 0; j < Y.cols; ++j) GX.at(i, j) += Y.at(i, j) * (G.at(i, j) - dot);
    }
  });
}

Var log_softmax(Var a) {
  const Tensor& A = a.value();
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < A.cols; ++j) m = std::max(m, A.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) z += std::exp(A.at(i, j) - m);
    const double lz = m + std::log(z);
    for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) = A.at(i, j) - lz;
  }
  return a.tape->record(std::move(C), {a.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs(self)[0];
    const Tensor& G = t.grad_of(self);
    const Tensor& Y = t.value(self);
    Tensor& GX = t.grad_of(in);
    for (std::size_t i = 0; i < Y.rows; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < Y.cols; ++j) gsum += G.at(i, j);
      for (std::size_t j = 0; j < Y.cols; ++j) {
        GX.at(i, j) += G.at(i, j) - std::exp(Y.at(i, j)) * gsum;
      }
    }
  });
}

Var logsumexp(Var a) {
  const Tensor& A = a.value();
  Tensor C(A.rows, 1);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < A.cols; ++j) m = std::max(m, A.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) z += std::exp(A.at(i, j) - m);
    C.at(i, 0) = m + std::log(z);
  }
  return a.tape->record(std::move(C), {a.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs(self)[0];
    const Tensor& G = t.grad_of(self);
    const Tensor& Y = t.value(self);
    const Tensor& X = t.value(in);
    Tensor& GX = t.grad_of(in);
    for (std::size_t i = 0; i < X.rows; ++i) {
      for (std::size_t j = 0; j < X.cols; ++j) {
        GX.at(i, j) += G.at(i, 0) * std::exp(X.at(i, j) - Y.at(i, 0));
      }
    }
  });
}

Var embedding_lookup(Var table, std::size_t index) {
  const Tensor& T = table.value();
  if (index >= T.rows) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("embedding index {} out of range for {} rows", index, T.rows));
  }
  Tensor C(1, T.cols);
  for (std::size_t j = 0; j < T.cols; ++j) C.at(0, j) = T.at(index, j);
  return table.tape->record(std::move(C), {table.id}, [index](Tape& t, std::size_t self) {
    const Tensor& G = t.grad_of(self);
    Tensor& GT = t.grad_of(t.inputs(self)[0]);
    for (std::size_t j = 0; j < G.cols; ++j) GT.at(index, j) += G.at(0, j);
  });
}

Var cross_entropy(Var probabilities, std::size_t k) {
  const Tensor& P = probabilities.value();
  if (P.rows != 1 || k >= P.cols) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("cross_entropy: label {} for a {}x{} row", k, P.rows, P.cols));
  }
  const double p = std::max(P.at(0, k), std::numeric_limits<double>::min());
  return probabilities.tape->record(
      Tensor::scalar(-std::log(p)), {probabilities.id}, [k](Tape& t, std::size_t self) {
        const std::size_t in = t.inputs(self)[0];
        const double g = t.grad_of(self).values[0];
        const double p = std::max(t.value(in).at(0, k), std::numeric_limits<double>::min());
        t.grad_of(in).at(0, k) += -g / p;
      });
}

Var pick(Var a, std::size_t i) {
  const Tensor& A = a.value();
  if (i >= A.values.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("pick {} from a {}x{} tensor", i, A.rows, A.cols));
  }
  return a.tape->record(Tensor::scalar(A.values[i]), {a.id}, [i](Tape& t, std::size_t self) {
    t.grad_of(t.inputs(self)[0]).values[i] += t.grad_of(self).values[0];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values) s += v;
  return a.tape->record(Tensor::scalar(s), {a.id}, [](Tape& t, std::size_t self) {
    const double g = t.grad_of(self).values[0];
    for (double& x : t.grad_of(t.inputs(self)[0]).values) x += g;
  });
}

Var dot_const(Var a, std::span<const double> w) {
  const Tensor& A = a.value();
  if (w.size() != A.values.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("dot_const: {} weights for a {}x{} tensor", w.size(), A.rows,
                            A.cols));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * A.values[i];
  std::vector<double> weights(w.begin(), w.end());
  return a.tape->record(Tensor::scalar(s), {a.id},
                        [weights = std::move(weights)](Tape& t, std::size_t self) {
    const double g = t.grad_of(self).values[0];
    auto& gx = t.grad_of(t.inputs(self)[0]).values;
    for (std::size_t i = 0; i < weights.size(); ++i) gx[i] += g * weights[i];
  });
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity" || name == "linear" || name.empty()) return Activation::Identity;
  throw Error(ErrorKind::ConfigError, fmt::format("unknown activation '{}'", name));
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Var activate(Var a, Activation act) {
  switch (act) {
    case Activation::Relu: return relu(a);
    case Activation::Tanh: return tanh(a);
    case Activation::Identity: return a;
  }
  return a;
}

void Sgd::step(ParameterStore& store, const std::function<bool(const std::string&)>& frozen) {
  for (Parameter* p : store.all()) {
    if (frozen && frozen(p->name())) continue;
    auto& v = p->value().values;
    const auto& g = p->grad().values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= opts_.lr * (g[i] + opts_.weight_decay * v[i]);
    }
  }
}

void Adam::step(ParameterStore& store,
                const std::function<bool(const std::string&)>& frozen) {
  for (Parameter* p : store.all()) {
    if (frozen && frozen(p->name())) continue;
    auto& v = p->value().values;
    const auto& g = p->grad().values;
    Moments& s = state_[p->name()];
    if (s.m.size() != v.size()) {
      s.m.assign(v.size(), 0.0);
      s.v.assign(v.size(), 0.0);
      s.t = 0;
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.m[i] = opts_.beta1 * s.m[i] + (1.0 - opts_.beta1) * g[i];
      s.v[i] = opts_.beta2 * s.v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = s.m[i] / c1;
      const double vhat = s.v[i] / c2;
      // Decoupled decay (AdamW form).
      v[i] -= opts_.lr * (mhat / (std::sqrt(vhat) + opts_.eps) + opts_.weight_decay * v[i]);
    }
  }
}

}  // namespace relgraph::ad
