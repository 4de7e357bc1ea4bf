#pragma once

// Minimal dense tensor type and a tape-based reverse-mode differentiator,
// sized for an LSTM + attention pointer model. Tensors are rank 1 or 2,
// row-major. Arithmetic inner loops go through the kernels dispatch, so the
// same graph runs on the scalar or SIMD backend.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "ordbench/kernels.hpp"

namespace ordbench {

#if defined(ORDBENCH_REAL32)
using real = float;
#else
using real = double;
#endif

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<real> v;

  static Tensor zeros(std::initializer_list<std::size_t> dims);
  static Tensor zeros_like(const Tensor& other);
  static Tensor vec(std::vector<real> values);
  static Tensor mat(std::size_t rows, std::size_t cols, std::vector<real> values);
  static Tensor scalar(real value);

  std::size_t size() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return rank() == 2 ? shape[1] : 1; }
  real& at(std::size_t i) { return v[i]; }
  real at(std::size_t i) const { return v[i]; }
  real& at(std::size_t i, std::size_t j) { return v[i * cols() + j]; }
  real at(std::size_t i, std::size_t j) const { return v[i * cols() + j]; }
  bool all_finite() const;
};

// When enabled, every op output is checked for NaN/Inf and a violation
// throws. Off by default (it walks every value).
void set_finite_checks(bool on);
bool finite_checks_enabled();

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape, accumulated by Graph::backward
};

class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  void zero_grads();
  std::size_t total_size() const;  // number of scalar parameters

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t count() const { return params_.size(); }

  // Checkpoint round trip: JSON map name -> {shape, values}, format_version 1.
  std::string to_json() const;
  static ParamStore from_json(const std::string& text);
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::deque<Parameter> params_;  // deque: stable addresses across add()
};

// Seeded uniform init in +-1/sqrt(fan_in).
Tensor uniform_init(std::initializer_list<std::size_t> dims, std::size_t fan_in,
                    std::uint64_t seed);

class Graph {
 public:
  using Id = std::int32_t;

  Id input(Tensor value);
  Id param(Parameter& p);  // one node per parameter per graph

  Id matmul(Id a, Id b);       // (m,k) x (k,n)|(k) -> (m,n)|(m)
  Id add(Id a, Id b);          // same shape
  Id mul(Id a, Id b);          // elementwise, same shape
  Id scale(Id a, real c);
  Id sigmoid(Id a);
  Id tanh(Id a);
  Id concat(Id a, Id b);       // rank-1 only
  Id slice(Id a, std::size_t begin, std::size_t len);  // rank-1 contiguous
  Id softmax(Id a);            // rank-1, max-subtraction stabilized
  Id masked_softmax(Id a, std::vector<std::uint8_t> live);  // dead -> exactly 0
  Id sum(Id a);                // -> scalar (shape {1})
  Id sumsq(Id a);              // -> scalar
  Id row(Id matrix, std::size_t r);              // rank-2 -> rank-1 row copy
  Id pick_neg_log(Id probs, std::size_t index);  // -> scalar -log(p[index]); p=0 gives +inf

  const Tensor& value(Id id) const;
  const Tensor& grad(Id id) const;  // valid after backward

  // Accumulates into Parameter::grad for every parameter node; other
  // parameters are untouched (zero them via ParamStore::zero_grads first).
  void backward(Id loss);

  std::size_t node_count() const { return nodes_.size(); }

  // Standard LSTM cell. weights: (4*hidden, input+hidden), bias: (4*hidden),
  // gate order [input, forget, candidate, output].
  struct LstmOut {
    Id h;
    Id c;
  };
  LstmOut lstm_cell(Id x, Id h_prev, Id c_prev, Id weights, Id bias, std::size_t hidden);

 private:
  enum class Op : std::uint8_t {
    Input, Param, Matmul, Add, Mul, Scale, Sigmoid, Tanh, Concat, Slice,
    Softmax, MaskedSoftmax, Sum, SumSq, Row, PickNegLog,
  };

  struct Node {
    Op op;
    Tensor val;
    Tensor grad;
    Id p0 = -1, p1 = -1;
    std::size_t a = 0, b = 0;           // slice begin/len, row/pick index
    real c = 0;                          // scale factor
    std::vector<std::uint8_t> mask;      // masked_softmax liveness
    Parameter* parameter = nullptr;
  };

  Id push(Node node);
  const Tensor& val_of(Id id) const { return nodes_[static_cast<std::size_t>(id)].val; }

  std::deque<Node> nodes_;  // deque: value()/grad() references stay valid as ops push
  std::vector<std::pair<Parameter*, Id>> param_nodes_;
};

struct GradCheckResult {
  double max_rel_error = 0;
  std::size_t coords_checked = 0;
};

// Central finite differences of the builder's scalar loss against the
// analytic gradients, over every coordinate of the given parameters (or a
// seeded subsample of max_coords >= 200 when the total is larger).
GradCheckResult grad_check(const std::function<Graph::Id(Graph&)>& build,
                           const std::vector<Parameter*>& params, double epsilon,
                           std::size_t max_coords = 0, std::uint64_t seed = 0);

struct SgdConfig {
  double learning_rate = 0.1;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParamStore& params) = 0;
};

class SgdOptimizer : public Optimizer {
 public:
  explicit SgdOptimizer(SgdConfig cfg) : cfg_(cfg) {}
  void step(ParamStore& params) override;

 private:
  SgdConfig cfg_;
};

class AdamOptimizer : public Optimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}
  void step(ParamStore& params) override;

 private:
  AdamConfig cfg_;
  std::vector<std::vector<real>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace ordbench
