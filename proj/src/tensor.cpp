#include "ordbench/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ordbench/rng.hpp"

namespace ordbench {

using nlohmann::json;
namespace kn = ordbench::kernels;

namespace {

std::atomic<bool> g_finite_checks{false};

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

[[noreturn]] void dim_error(const char* op, const std::string& detail) {
  throw std::invalid_argument(std::string("graph op ") + op + ": " + detail);
}

}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks_enabled() { return g_finite_checks; }

Tensor Tensor::zeros(std::initializer_list<std::size_t> dims) {
  Tensor t;
  t.shape.assign(dims);
  t.v.assign(product(t.shape), real{0});
  return t;
}

Tensor Tensor::zeros_like(const Tensor& other) {
  Tensor t;
  t.shape = other.shape;
  t.v.assign(other.v.size(), real{0});
  return t;
}

Tensor Tensor::vec(std::vector<real> values) {
  Tensor t;
  t.shape = {values.size()};
  t.v = std::move(values);
  return t;
}

Tensor Tensor::mat(std::size_t rows, std::size_t cols, std::vector<real> values) {
  if (values.size() != rows * cols)
    throw std::invalid_argument("Tensor::mat: value count does not match shape");
  Tensor t;
  t.shape = {rows, cols};
  t.v = std::move(values);
  return t;
}

Tensor Tensor::scalar(real value) { return vec({value}); }

bool Tensor::all_finite() const {
  for (real x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

Parameter& ParamStore::add(const std::string& name, Tensor init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.grad = Tensor::zeros_like(init);
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  for (Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamStore::zero_grads() {
  for (Parameter& p : params_) std::fill(p.grad.v.begin(), p.grad.v.end(), real{0});
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

std::string ParamStore::to_json() const {
  json j;
  j["format_version"] = 1;
  json params = json::object();
  for (const Parameter& p : params_) {
    json jp;
    jp["shape"] = p.value.shape;
    jp["values"] = std::vector<double>(p.value.v.begin(), p.value.v.end());
    params[p.name] = std::move(jp);
  }
  j["params"] = std::move(params);
  return j.dump();
}

ParamStore ParamStore::from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("format_version") || j.at("format_version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported format_version");
  ParamStore store;
  for (auto& [name, jp] : j.at("params").items()) {
    Tensor t;
    t.shape = jp.at("shape").get<std::vector<std::size_t>>();
    std::vector<double> vals = jp.at("values").get<std::vector<double>>();
    t.v.assign(vals.begin(), vals.end());
    if (t.v.size() != product(t.shape))
      throw std::runtime_error("checkpoint: shape/value mismatch for " + name);
    store.add(name, std::move(t));
  }
  return store;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << to_json() << "\n";
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

Tensor uniform_init(std::initializer_list<std::size_t> dims, std::size_t fan_in,
                    std::uint64_t seed) {
  Tensor t = Tensor::zeros(dims);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Pcg64 rng(seed, hash_str("param-init"));
  for (real& x : t.v) x = static_cast<real>(rng.uniform(-bound, bound));
  return t;
}

// ---------------------------------------------------------------------------
// Graph

Graph::Id Graph::push(Node node) {
  if (finite_checks_enabled() && !node.val.all_finite())
    throw std::runtime_error("graph: non-finite value produced by op");
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

Graph::Id Graph::input(Tensor value) {
  Node n;
  n.op = Op::Input;
  n.val = std::move(value);
  return push(std::move(n));
}

Graph::Id Graph::param(Parameter& p) {
  for (auto& [param, id] : param_nodes_)
    if (param == &p) return id;
  Node n;
  n.op = Op::Param;
  n.val = p.value;
  n.parameter = &p;
  Id id = push(std::move(n));
  param_nodes_.emplace_back(&p, id);
  return id;
}

Graph::Id Graph::matmul(Id a, Id b) {
  const Tensor& A = val_of(a);
  const Tensor& B = val_of(b);
  if (A.rank() != 2) dim_error("matmul", "left operand must be rank 2");
  const std::size_t m = A.rows(), k = A.cols();
  std::size_t n;
  Node out;
  if (B.rank() == 1) {
    if (B.size() != k) dim_error("matmul", "inner dimensions disagree");
    n = 1;
    out.val = Tensor::zeros({m});
  } else {
    if (B.rows() != k) dim_error("matmul", "inner dimensions disagree");
    n = B.cols();
    out.val = Tensor::zeros({m, n});
  }
  kn::active<real>().matmul(A.v.data(), B.v.data(), out.val.v.data(), m, k, n);
  out.op = Op::Matmul;
  out.p0 = a;
  out.p1 = b;
  return push(std::move(out));
}

Graph::Id Graph::add(Id a, Id b) {
  const Tensor& A = val_of(a);
  const Tensor& B = val_of(b);
  if (A.shape != B.shape) dim_error("add", "shape mismatch");
  Node out;
  out.val = Tensor::zeros_like(A);
  kn::active<real>().add(A.v.data(), B.v.data(), out.val.v.data(), A.size());
  out.op = Op::Add;
  out.p0 = a;
  out.p1 = b;
  return push(std::move(out));
}

Graph::Id Graph::mul(Id a, Id b) {
  const Tensor& A = val_of(a);
  const Tensor& B = val_of(b);
  if (A.shape != B.shape) dim_error("mul", "shape mismatch");
  Node out;
  out.val = Tensor::zeros_like(A);
  kn::active<real>().mul(A.v.data(), B.v.data(), out.val.v.data(), A.size());
  out.op = Op::Mul;
  out.p0 = a;
  out.p1 = b;
  return push(std::move(out));
}

Graph::Id Graph::scale(Id a, real c) {
  const Tensor& A = val_of(a);
  Node out;
  out.val = Tensor::zeros_like(A);
  kn::active<real>().scale(A.v.data(), c, out.val.v.data(), A.size());
  out.op = Op::Scale;
  out.p0 = a;
  out.c = c;
  return push(std::move(out));
}

Graph::Id Graph::sigmoid(Id a) {
  const Tensor& A = val_of(a);
  Node out;
  out.val = Tensor::zeros_like(A);
  for (std::size_t i = 0; i < A.size(); ++i)
    out.val.v[i] = real{1} / (real{1} + std::exp(-A.v[i]));
  out.op = Op::Sigmoid;
  out.p0 = a;
  return push(std::move(out));
}

Graph::Id Graph::tanh(Id a) {
  const Tensor& A = val_of(a);
  Node out;
  out.val = Tensor::zeros_like(A);
  for (std::size_t i = 0; i < A.size(); ++i) out.val.v[i] = std::tanh(A.v[i]);
  out.op = Op::Tanh;
  out.p0 = a;
  return push(std::move(out));
}

Graph::Id Graph::concat(Id a, Id b) {
  const Tensor& A = val_of(a);
  const Tensor& B = val_of(b);
  if (A.rank() != 1 || B.rank() != 1) dim_error("concat", "rank-1 operands only");
  Node out;
  out.val = Tensor::zeros({A.size() + B.size()});
  std::copy(A.v.begin(), A.v.end(), out.val.v.begin());
  std::copy(B.v.begin(), B.v.end(), out.val.v.begin() + static_cast<std::ptrdiff_t>(A.size()));
  out.op = Op::Concat;
  out.p0 = a;
  out.p1 = b;
  return push(std::move(out));
}

Graph::Id Graph::slice(Id a, std::size_t begin, std::size_t len) {
  const Tensor& A = val_of(a);
  if (A.rank() != 1) dim_error("slice", "rank-1 operand only");
  if (begin + len > A.size()) dim_error("slice", "out of range");
  Node out;
  out.val = Tensor::zeros({len});
  std::copy(A.v.begin() + static_cast<std::ptrdiff_t>(begin),
            A.v.begin() + static_cast<std::ptrdiff_t>(begin + len), out.val.v.begin());
  out.op = Op::Slice;
  out.p0 = a;
  out.a = begin;
  out.b = len;
  return push(std::move(out));
}

Graph::Id Graph::softmax(Id a) {
  const Tensor& A = val_of(a);
  if (A.rank() != 1 || A.size() == 0) dim_error("softmax", "non-empty rank-1 operand only");
  Node out;
  out.val = Tensor::zeros_like(A);
  real mx = *std::max_element(A.v.begin(), A.v.end());
  real total = 0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    out.val.v[i] = std::exp(A.v[i] - mx);
    total += out.val.v[i];
  }
  for (real& x : out.val.v) x /= total;
  out.op = Op::Softmax;
  out.p0 = a;
  return push(std::move(out));
}

Graph::Id Graph::masked_softmax(Id a, std::vector<std::uint8_t> live) {
  const Tensor& A = val_of(a);
  if (A.rank() != 1) dim_error("masked_softmax", "rank-1 operand only");
  if (live.size() != A.size()) dim_error("masked_softmax", "mask length mismatch");
  Node out;
  out.val = Tensor::zeros_like(A);
  real mx = 0;
  bool any = false;
  for (std::size_t i = 0; i < A.size(); ++i)
    if (live[i] && (!any || A.v[i] > mx)) {
      mx = A.v[i];
      any = true;
    }
  if (!any) dim_error("masked_softmax", "all positions masked");
  real total = 0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (!live[i]) continue;
    out.val.v[i] = std::exp(A.v[i] - mx);
    total += out.val.v[i];
  }
  for (std::size_t i = 0; i < A.size(); ++i)
    if (live[i]) out.val.v[i] /= total;
  out.op = Op::MaskedSoftmax;
  out.p0 = a;
  out.mask = std::move(live);
  return push(std::move(out));
}

Graph::Id Graph::sum(Id a) {
  const Tensor& A = val_of(a);
  Node out;
  out.val = Tensor::scalar(kn::active<real>().sum(A.v.data(), A.size()));
  out.op = Op::Sum;
  out.p0 = a;
  return push(std::move(out));
}

Graph::Id Graph::sumsq(Id a) {
  const Tensor& A = val_of(a);
  Node out;
  out.val = Tensor::scalar(kn::active<real>().sumsq(A.v.data(), A.size()));
  out.op = Op::SumSq;
  out.p0 = a;
  return push(std::move(out));
}

Graph::Id Graph::row(Id matrix, std::size_t r) {
  const Tensor& A = val_of(matrix);
  if (A.rank() != 2) dim_error("row", "rank-2 operand only");
  if (r >= A.rows()) dim_error("row", "row index out of range");
  Node out;
  out.val = Tensor::zeros({A.cols()});
  std::copy(A.v.begin() + static_cast<std::ptrdiff_t>(r * A.cols()),
            A.v.begin() + static_cast<std::ptrdiff_t>((r + 1) * A.cols()),
            out.val.v.begin());
  out.op = Op::Row;
  out.p0 = matrix;
  out.a = r;
  return push(std::move(out));
}

Graph::Id Graph::pick_neg_log(Id probs, std::size_t index) {
  const Tensor& P = val_of(probs);
  if (P.rank() != 1) dim_error("pick_neg_log", "rank-1 operand only");
  if (index >= P.size()) dim_error("pick_neg_log", "index out of range");
  Node out;
  // A zero probability (fully saturated softmax) yields an infinite loss;
  // the training loop treats that as divergence.
  out.val = Tensor::scalar(-std::log(P.v[index]));
  out.op = Op::PickNegLog;
  out.p0 = probs;
  out.a = index;
  return push(std::move(out));
}

const Tensor& Graph::value(Id id) const { return nodes_.at(static_cast<std::size_t>(id)).val; }
const Tensor& Graph::grad(Id id) const { return nodes_.at(static_cast<std::size_t>(id)).grad; }

void Graph::backward(Id loss) {
  Node& top = nodes_.at(static_cast<std::size_t>(loss));
  if (top.val.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar");

  for (Node& n : nodes_) n.grad = Tensor::zeros_like(n.val);
  top.grad.v[0] = 1;

  const auto& ops = kn::active<real>();
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::Input:
        break;
      case Op::Param:
        ops.add(n.parameter->grad.v.data(), g.v.data(), n.parameter->grad.v.data(),
                g.size());
        break;
      case Op::Matmul: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        Node& B = nodes_[static_cast<std::size_t>(n.p1)];
        const std::size_t m = A.val.rows(), k = A.val.cols();
        const std::size_t cols = B.val.rank() == 1 ? 1 : B.val.cols();
        // dA += dC B^T ; dB += A^T dC
        ops.gemm_nt_acc(g.v.data(), B.val.v.data(), A.grad.v.data(), m, cols, k);
        ops.gemm_tn_acc(A.val.v.data(), g.v.data(), B.grad.v.data(), m, k, cols);
        break;
      }
      case Op::Add: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        Node& B = nodes_[static_cast<std::size_t>(n.p1)];
        ops.add(A.grad.v.data(), g.v.data(), A.grad.v.data(), g.size());
        ops.add(B.grad.v.data(), g.v.data(), B.grad.v.data(), g.size());
        break;
      }
      case Op::Mul: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        Node& B = nodes_[static_cast<std::size_t>(n.p1)];
        for (std::size_t j = 0; j < g.size(); ++j) {
          A.grad.v[j] += g.v[j] * B.val.v[j];
          B.grad.v[j] += g.v[j] * A.val.v[j];
        }
        break;
      }
      case Op::Scale:
        ops.axpy(n.c, g.v.data(), nodes_[static_cast<std::size_t>(n.p0)].grad.v.data(),
                 g.size());
        break;
      case Op::Sigmoid: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        for (std::size_t j = 0; j < g.size(); ++j)
          A.grad.v[j] += g.v[j] * n.val.v[j] * (real{1} - n.val.v[j]);
        break;
      }
      case Op::Tanh: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        for (std::size_t j = 0; j < g.size(); ++j)
          A.grad.v[j] += g.v[j] * (real{1} - n.val.v[j] * n.val.v[j]);
        break;
      }
      case Op::Concat: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        Node& B = nodes_[static_cast<std::size_t>(n.p1)];
        ops.add(A.grad.v.data(), g.v.data(), A.grad.v.data(), A.val.size());
        ops.add(B.grad.v.data(), g.v.data() + A.val.size(), B.grad.v.data(),
                B.val.size());
        break;
      }
      case Op::Slice: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        ops.add(A.grad.v.data() + n.a, g.v.data(), A.grad.v.data() + n.a, n.b);
        break;
      }
      case Op::Softmax: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        real dot = 0;
        for (std::size_t j = 0; j < g.size(); ++j) dot += g.v[j] * n.val.v[j];
        for (std::size_t j = 0; j < g.size(); ++j)
          A.grad.v[j] += (g.v[j] - dot) * n.val.v[j];
        break;
      }
      case Op::MaskedSoftmax: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        real dot = 0;
        for (std::size_t j = 0; j < g.size(); ++j)
          if (n.mask[j]) dot += g.v[j] * n.val.v[j];
        for (std::size_t j = 0; j < g.size(); ++j)
          if (n.mask[j]) A.grad.v[j] += (g.v[j] - dot) * n.val.v[j];
        break;
      }
      case Op::Sum: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        for (std::size_t j = 0; j < A.grad.size(); ++j) A.grad.v[j] += g.v[0];
        break;
      }
      case Op::SumSq: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        ops.axpy(real{2} * g.v[0], A.val.v.data(), A.grad.v.data(), A.val.size());
        break;
      }
      case Op::Row: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        const std::size_t cols = A.val.cols();
        ops.add(A.grad.v.data() + n.a * cols, g.v.data(), A.grad.v.data() + n.a * cols,
                cols);
        break;
      }
      case Op::PickNegLog: {
        Node& A = nodes_[static_cast<std::size_t>(n.p0)];
        A.grad.v[n.a] += -g.v[0] / A.val.v[n.a];
        break;
      }
    }
  }
}

Graph::LstmOut Graph::lstm_cell(Id x, Id h_prev, Id c_prev, Id weights, Id bias,
                                std::size_t hidden) {
  Id z = add(matmul(weights, concat(x, h_prev)), bias);
  Id gi = sigmoid(slice(z, 0, hidden));
  Id gf = sigmoid(slice(z, hidden, hidden));
  Id gg = tanh(slice(z, 2 * hidden, hidden));
  Id go = sigmoid(slice(z, 3 * hidden, hidden));
  Id c = add(mul(gf, c_prev), mul(gi, gg));
  Id h = mul(go, tanh(c));
  return {h, c};
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckResult grad_check(const std::function<Graph::Id(Graph&)>& build,
                           const std::vector<Parameter*>& params, double epsilon,
                           std::size_t max_coords, std::uint64_t seed) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw std::invalid_argument("grad_check: epsilon out of [1e-7, 1e-3]");

  for (Parameter* p : params) std::fill(p->grad.v.begin(), p->grad.v.end(), real{0});
  {
    Graph g;
    g.backward(build(g));
  }
  std::vector<std::vector<real>> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad.v);

  std::vector<std::pair<std::size_t, std::size_t>> coords;  // (param idx, coord)
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    for (std::size_t ci = 0; ci < params[pi]->value.size(); ++ci)
      coords.emplace_back(pi, ci);
  if (max_coords > 0 && coords.size() > max_coords) {
    Pcg64 rng(seed, hash_str("grad-check"));
    for (std::size_t i = 0; i < max_coords; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(max_coords);
  }

  auto loss_at = [&]() {
    Graph g;
    return static_cast<double>(g.value(build(g)).v[0]);
  };

  GradCheckResult result;
  result.coords_checked = coords.size();
  for (auto [pi, ci] : coords) {
    real& theta = params[pi]->value.v[ci];
    const real saved = theta;
    theta = saved + static_cast<real>(epsilon);
    const double up = loss_at();
    theta = saved - static_cast<real>(epsilon);
    const double down = loss_at();
    theta = saved;

    const double numeric = (up - down) / (2.0 * epsilon);
    const double exact = static_cast<double>(analytic[pi][ci]);
    const double diff = std::abs(exact - numeric);
    // Tiny-gradient coordinates are compared absolutely; the floor is far
    // below any real backward bug.
    const double rel =
        diff <= 1e-7 ? 0.0 : diff / std::max(std::abs(exact), std::abs(numeric));
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Optimizers

void SgdOptimizer::step(ParamStore& params) {
  for (Parameter& p : params)
    kernels::active<real>().axpy(static_cast<real>(-cfg_.learning_rate),
                                 p.grad.v.data(), p.value.v.data(), p.value.size());
}

void AdamOptimizer::step(ParamStore& params) {
  if (m_.empty()) {
    for (Parameter& p : params) {
      m_.emplace_back(p.value.size(), real{0});
      v_.emplace_back(p.value.size(), real{0});
    }
  }
  ++t_;
  const double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t pi = 0;
  for (Parameter& p : params) {
    std::vector<real>& m = m_.at(pi);
    std::vector<real>& v = v_.at(pi);
    ++pi;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gi = static_cast<double>(p.grad.v[i]);
      m[i] = static_cast<real>(cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi);
      v[i] = static_cast<real>(cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi);
      const double mhat = static_cast<double>(m[i]) / b1t;
      const double vhat = static_cast<double>(v[i]) / b2t;
      p.value.v[i] -= static_cast<real>(cfg_.learning_rate * mhat /
                                        (std::sqrt(vhat) + cfg_.epsilon));
    }
  }
}

}  // namespace ordbench
