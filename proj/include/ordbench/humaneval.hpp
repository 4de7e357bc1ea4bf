#pragma once

// Human-rating analysis: judge-vs-mean Pearson agreement, Krippendorff's
// alpha for interval data, and simple OLS regressions of metric values on
// mean ratings.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ordbench {

struct RatingRecord {
  std::string judge;
  std::string passage;
  double rating = 0;  // scale 1..5
};

class RatingMatrix {
 public:
  static RatingMatrix from_records(const std::vector<RatingRecord>& records);

  const std::vector<std::string>& judges() const { return judges_; }
  const std::vector<std::string>& passages() const { return passages_; }
  std::optional<double> rating(std::size_t judge, std::size_t passage) const;
  std::size_t rating_count() const { return count_; }
  std::size_t missing_count() const { return judges_.size() * passages_.size() - count_; }

  // Mean over the judges that rated the passage; leave_out excludes one
  // judge (pass size() or larger for the all-judge mean).
  std::optional<double> passage_mean(std::size_t passage,
                                     std::size_t leave_out_judge) const;

 private:
  std::vector<std::string> judges_;
  std::vector<std::string> passages_;
  std::vector<std::optional<double>> cells_;  // judges x passages
  std::size_t count_ = 0;
};

// TSV with header "judge<TAB>passage<TAB>rating"; ratings outside [1,5]
// are a validation error carrying the row number.
RatingMatrix load_ratings(const std::string& path);

struct JudgeCorrelation {
  std::string judge;
  std::optional<double> r;  // empty when the judge's ratings have zero variance
  std::size_t passages_used = 0;
};

struct AgreementReport {
  std::vector<JudgeCorrelation> per_judge;
  std::optional<double> mean_r;
  bool leave_one_out = false;
};

// Pearson r between each judge's ratings and the per-passage mean rating
// over the passages that judge rated. The judge's own rating is part of the
// mean unless leave_one_out.
AgreementReport interrater_pearson(const RatingMatrix& matrix, bool leave_one_out = false);

// alpha = 1 - D_o/D_e with squared-difference distance (interval data),
// coincidence-matrix formulation; missing cells are handled natively.
// Throws when no passage has two or more ratings.
double krippendorff_alpha(const RatingMatrix& matrix);

struct Regression {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  double p_value = 1;  // two-sided, for the Pearson correlation of x and y
  std::size_t n = 0;
};

// Simple OLS of y on x. Throws when fewer than 3 points or x has zero
// variance (and when y is constant, where R^2 is undefined).
Regression regress_metric(const std::vector<double>& metric_values,
                          const std::vector<double>& mean_ratings);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Two-sided p-value for Pearson r at sample size n via the t transform and
// the regularized incomplete beta function.
double pearson_p_value(double r, std::size_t n);

}  // namespace ordbench
