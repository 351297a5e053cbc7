#pragma once

// Reverse-mode differentiation over small dense matrices. Vectors are 1 x n
// rows. A Tape records one forward pass; backward() walks it in reverse.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace relgraph::ad {

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}
  static Tensor row(std::vector<double> v) {
    Tensor t;
    t.rows = 1;
    t.cols = v.size();
    t.values = std::move(v);
    return t;
  }
  static Tensor scalar(double x) { return row({x}); }

  std::vector<std::size_t> shape() const { return {rows, cols}; }
  std::size_t size() const { return values.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double item() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

class Parameter {
 public:
  Parameter(std::string name, Tensor value)
      : name_(std::move(name)), value_(std::move(value)),
        grad_(value_.rows, value_.cols) {}

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  void zero_grad();

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

/// Owns parameters by unique name; iteration is in name order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  bool contains(const std::string& name) const { return params_.contains(name); }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  /// Parameter values keyed by name, for snapshot/restore.
  std::map<std::string, Tensor> snapshot() const;
  void restore(const std::map<std::string, Tensor>& values);

 private:
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

/// Text checkpoint: versioned header, optional metadata, then one block per
/// parameter with values at 17 significant digits (round-trips exactly).
void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path,
                     const std::map<std::string, std::string>& metadata = {});
std::string checkpoint_text(const ParameterStore& store,
                            const std::map<std::string, std::string>& metadata = {});
/// Loads values into existing parameters of matching shape; unknown names
/// are an error. Returns the metadata.
std::map<std::string, std::string> load_checkpoint(ParameterStore& store,
                                                   const std::filesystem::path& path);
std::map<std::string, std::string> load_checkpoint_text(ParameterStore& store,
                                                        const std::string& text);

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  double item() const { return value().item(); }
};

class Tape {
 public:
  Var constant(Tensor value);
  /// Parameter leaf; repeated calls for the same parameter share one node.
  Var param(Parameter& p);

  /// Gradient of a scalar root with respect to every node.
  void backward(Var root);
  /// backward() then add the parameter-node gradients into Parameter::grad.
  void backward_into_params(Var root, double scale = 1.0);
  /// Gradients of parameter nodes after backward(), for deferred merging.
  std::vector<std::pair<Parameter*, Tensor>> parameter_gradients() const;
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  std::size_t size() const { return nodes_.size(); }

  // Internal: used by the primitive ops.
  using Backward = std::function<void(Tape&, std::size_t self)>;
  Var record(Tensor value, std::vector<std::size_t> inputs, Backward backward);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  Tensor& grad_of(std::size_t id) { return nodes_[id].grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
};

// Primitives. All raise ShapeMismatch on incompatible inputs.
Var matmul(Var a, Var b);
/// Elementwise sum; b may also be a 1 x n row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);
/// Column-wise concatenation of operands with equal row counts.
Var concat(const std::vector<Var>& parts);
Var relu(Var a);
Var tanh(Var a);
/// Row-wise.
Var softmax(Var a);
Var log_softmax(Var a);
/// Row-wise log Σ exp, producing rows x 1.
Var logsumexp(Var a);
/// Row `index` of an embedding table.
Var embedding_lookup(Var table, std::size_t index);
/// -log p[k] of a 1 x n probability row.
Var cross_entropy(Var probabilities, std::size_t k);
/// Scalar element (0, i) of a row.
Var pick(Var a, std::size_t i);
Var sum(Var a);
/// Σ_i w_i a_i over the flattened values with constant weights.
Var dot_const(Var a, std::span<const double> w);

enum class Activation { Identity, Relu, Tanh };
Activation parse_activation(const std::string& name);
std::string to_string(Activation a);
Var activate(Var a, Activation act);

struct SgdOptions {
  double lr = 0.01;
  double weight_decay = 0.0;
};

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies accumulated gradients to every parameter not excluded by
  /// `frozen`, then leaves gradients untouched (callers zero them).
  virtual void step(ParameterStore& store,
                    const std::function<bool(const std::string&)>& frozen = {}) = 0;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(SgdOptions o) : opts_(o) {}
  void step(ParameterStore& store,
            const std::function<bool(const std::string&)>& frozen = {}) override;

 private:
  SgdOptions opts_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(AdamOptions o) : opts_(o) {}
  void step(ParameterStore& store,
            const std::function<bool(const std::string&)>& frozen = {}) override;

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
  };
  AdamOptions opts_;
  std::map<std::string, Moments> state_;
};

}  // namespace relgraph::ad
