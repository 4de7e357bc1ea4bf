#pragma once

// Ordering metrics: perfect match ratio, positional accuracy, Kendall's tau,
// and a length-adapted weighted-LCS F measure (WLCS-l).

#include <cstddef>
#include <string>
#include <vector>

namespace ordbench {

// A permutation of 0..n-1. Holds either a predicted or a gold order.
struct Order {
  std::vector<std::size_t> perm;

  std::size_t size() const { return perm.size(); }
  bool operator==(const Order&) const = default;

  // Throws std::invalid_argument unless perm is a permutation with n >= 2.
  void validate() const;

  static Order identity(std::size_t n);
  static Order reversed(std::size_t n);
};

struct EvalPair {
  std::string doc_id;
  Order predicted;
  Order gold;
};

struct WlcsParams {
  double weight_exponent = 1.2;  // exponent of the run-weight f(k) = k^a, a > 1
  double f_alpha = 0.5;          // the alpha of the F measure

  void validate() const;
};

struct DocMetrics {
  std::string doc_id;
  double acc = 0;
  double tau = 0;
  double wlcs_p = 0;
  double wlcs_r = 0;
  double wlcs_f = 0;
};

struct MetricReport {
  std::vector<DocMetrics> per_document;
  double pmr = 0;
  double mean_acc = 0;
  double mean_tau = 0;
  double mean_wlcs_f = 0;
  double micro_acc = 0;  // position-weighted variant, reported alongside
  std::size_t document_count = 0;
};

// Fraction of positions where predicted and gold agree.
double accuracy(const EvalPair& pair);

// tau = 1 - 2 * inversions / C(n,2); an inversion is an unordered element
// pair whose relative order in predicted disagrees with gold.
double kendall_tau(const EvalPair& pair);

// Fraction of pairs whose predicted order equals gold exactly.
double pmr(const std::vector<EvalPair>& pairs);

// Weighted LCS score: max over common subsequences of sum f(run length),
// f(k) = k^weight_exponent. Consecutive-in-both runs earn superlinear credit.
double wlcs(const Order& pred, const Order& gold, double weight_exponent);

struct WlcsScore {
  double p = 0;
  double r = 0;
  double f = 0;
};

// P = f^-1(WLCS/f(n)), R = f^-1(WLCS/f(n)^2), F = (1+a^2)RP/(R+a^2 P).
// The squared denominator makes F decay with passage length.
WlcsScore wlcs_l(const EvalPair& pair, const WlcsParams& params);

// Per-document metrics plus corpus aggregates. PMR is computed over the
// whole batch; acc/tau/wlcs-f corpus values are unweighted means over
// documents (micro_acc additionally pools positions).
MetricReport aggregate(const std::vector<EvalPair>& pairs, const WlcsParams& params);

}  // namespace ordbench
