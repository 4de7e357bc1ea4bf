#include "ordbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ordbench {

namespace {

void require_same_length(const EvalPair& pair) {
  if (pair.predicted.size() != pair.gold.size())
    throw std::invalid_argument("metric: predicted and gold lengths differ for doc '" +
                                pair.doc_id + "'");
  pair.predicted.validate();
  pair.gold.validate();
}

double run_weight(double k, double exponent) { return std::pow(k, exponent); }

}  // namespace

void Order::validate() const {
  if (perm.size() < 2)
    throw std::invalid_argument("Order: need at least 2 elements");
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t v : perm) {
    if (v >= perm.size() || seen[v])
      throw std::invalid_argument("Order: not a permutation of 0..n-1");
    seen[v] = true;
  }
}

Order Order::identity(std::size_t n) {
  Order o;
  o.perm.resize(n);
  std::iota(o.perm.begin(), o.perm.end(), std::size_t{0});
  return o;
}

Order Order::reversed(std::size_t n) {
  Order o = identity(n);
  std::reverse(o.perm.begin(), o.perm.end());
  return o;
}

void WlcsParams::validate() const {
  if (!(weight_exponent > 1.0))
    throw std::invalid_argument("WlcsParams: weight_exponent must be > 1");
  if (!(f_alpha >= 0.0))
    throw std::invalid_argument("WlcsParams: f_alpha must be >= 0");
}

double accuracy(const EvalPair& pair) {
  require_same_length(pair);
  std::size_t n = pair.gold.size();
  std::size_t hits = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (pair.predicted.perm[t] == pair.gold.perm[t]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

double kendall_tau(const EvalPair& pair) {
  require_same_length(pair);
  std::size_t n = pair.gold.size();

  // Position of each element in each order; a pair of elements (a,b) is an
  // inversion when their relative order disagrees between the two.
  std::vector<std::size_t> pos_pred(n), pos_gold(n);
  for (std::size_t t = 0; t < n; ++t) {
    pos_pred[pair.predicted.perm[t]] = t;
    pos_gold[pair.gold.perm[t]] = t;
  }
  std::size_t inversions = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      bool pred_before = pos_pred[a] < pos_pred[b];
      bool gold_before = pos_gold[a] < pos_gold[b];
      if (pred_before != gold_before) ++inversions;
    }
  double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return 1.0 - 2.0 * static_cast<double>(inversions) / pairs;
}

double pmr(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("pmr: empty batch");
  std::size_t exact = 0;
  for (const EvalPair& pair : pairs) {
    require_same_length(pair);
    if (pair.predicted == pair.gold) ++exact;
  }
  return static_cast<double>(exact) / static_cast<double>(pairs.size());
}

double wlcs(const Order& pred, const Order& gold, double weight_exponent) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("wlcs: length mismatch");
  pred.validate();
  gold.validate();

  const std::size_t m = pred.size();
  const std::size_t n = gold.size();

  // DP over prefixes: c holds the best weighted score, w the length of the
  // consecutive diagonal run ending at (i,j). On a match the run grows and
  // the score gains f(w+1) - f(w).
  std::vector<double> c((m + 1) * (n + 1), 0.0);
  std::vector<int> w((m + 1) * (n + 1), 0);
  auto at = [n](std::size_t i, std::size_t j) { return i * (n + 1) + j; };

  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j) {
      if (pred.perm[i - 1] == gold.perm[j - 1]) {
        int k = w[at(i - 1, j - 1)];
        c[at(i, j)] = c[at(i - 1, j - 1)] +
                      run_weight(k + 1, weight_exponent) - run_weight(k, weight_exponent);
        w[at(i, j)] = k + 1;
      } else if (c[at(i - 1, j)] > c[at(i, j - 1)]) {
        c[at(i, j)] = c[at(i - 1, j)];
        w[at(i, j)] = 0;
      } else {
        c[at(i, j)] = c[at(i, j - 1)];
        w[at(i, j)] = 0;
      }
    }
  return c[at(m, n)];
}

WlcsScore wlcs_l(const EvalPair& pair, const WlcsParams& params) {
  require_same_length(pair);
  params.validate();

  const double n = static_cast<double>(pair.gold.size());
  const double score = wlcs(pair.predicted, pair.gold, params.weight_exponent);
  const double fn = run_weight(n, params.weight_exponent);
  const double inv = 1.0 / params.weight_exponent;

  WlcsScore out;
  out.p = std::pow(score / fn, inv);
  out.r = std::pow(score / (fn * fn), inv);
  const double a2 = params.f_alpha * params.f_alpha;
  out.f = (1.0 + a2) * out.r * out.p / (out.r + a2 * out.p);
  return out;
}

MetricReport aggregate(const std::vector<EvalPair>& pairs, const WlcsParams& params) {
  if (pairs.empty()) throw std::invalid_argument("aggregate: empty batch");
  MetricReport report;
  report.document_count = pairs.size();
  report.pmr = pmr(pairs);

  double acc_sum = 0, tau_sum = 0, f_sum = 0;
  std::size_t positions = 0, position_hits = 0;
  for (const EvalPair& pair : pairs) {
    DocMetrics dm;
    dm.doc_id = pair.doc_id;
    dm.acc = accuracy(pair);
    dm.tau = kendall_tau(pair);
    WlcsScore ws = wlcs_l(pair, params);
    dm.wlcs_p = ws.p;
    dm.wlcs_r = ws.r;
    dm.wlcs_f = ws.f;
    acc_sum += dm.acc;
    tau_sum += dm.tau;
    f_sum += dm.wlcs_f;
    positions += pair.gold.size();
    position_hits += static_cast<std::size_t>(
        std::lround(dm.acc * static_cast<double>(pair.gold.size())));
    report.per_document.push_back(std::move(dm));
  }
  const double k = static_cast<double>(pairs.size());
  report.mean_acc = acc_sum / k;
  report.mean_tau = tau_sum / k;
  report.mean_wlcs_f = f_sum / k;
  report.micro_acc = static_cast<double>(position_hits) / static_cast<double>(positions);
  return report;
}

}  // namespace ordbench
