#include "ordbench/humaneval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ordbench {

namespace {

std::size_t index_of(std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  names.push_back(name);
  return names.size() - 1;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Regularized incomplete beta via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-14;
  double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1 - x));
  if (x < (a + 1) / (a + b + 2)) return bt * betacf(a, b, x) / a;
  return 1 - bt * betacf(b, a, 1 - x) / b;
}

}  // namespace

RatingMatrix RatingMatrix::from_records(const std::vector<RatingRecord>& records) {
  RatingMatrix m;
  for (const RatingRecord& r : records) {
    index_of(m.judges_, r.judge);
    index_of(m.passages_, r.passage);
  }
  m.cells_.assign(m.judges_.size() * m.passages_.size(), std::nullopt);
  for (const RatingRecord& r : records) {
    std::size_t j = index_of(m.judges_, r.judge);
    std::size_t p = index_of(m.passages_, r.passage);
    auto& cell = m.cells_[j * m.passages_.size() + p];
    if (cell)
      throw std::invalid_argument("duplicate rating for judge '" + r.judge +
                                  "', passage '" + r.passage + "'");
    cell = r.rating;
    ++m.count_;
  }
  return m;
}

std::optional<double> RatingMatrix::rating(std::size_t judge, std::size_t passage) const {
  return cells_.at(judge * passages_.size() + passage);
}

std::optional<double> RatingMatrix::passage_mean(std::size_t passage,
                                                 std::size_t leave_out_judge) const {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < judges_.size(); ++j) {
    if (j == leave_out_judge) continue;
    if (auto r = rating(j, passage)) {
      sum += *r;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

RatingMatrix load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ratings file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("judge\tpassage\trating", 0) != 0)
    throw std::runtime_error("ratings file must start with 'judge\\tpassage\\trating'");

  std::vector<RatingRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    RatingRecord r;
    std::string rating_text;
    if (!std::getline(ls, r.judge, '\t') || !std::getline(ls, r.passage, '\t') ||
        !std::getline(ls, rating_text, '\t'))
      throw std::runtime_error("ratings row " + std::to_string(row) + ": need 3 columns");
    try {
      r.rating = std::stod(rating_text);
    } catch (const std::exception&) {
      throw std::runtime_error("ratings row " + std::to_string(row) +
                               ": bad rating '" + rating_text + "'");
    }
    if (r.rating < 1.0 || r.rating > 5.0)
      throw std::runtime_error("ratings row " + std::to_string(row) + ": rating " +
                               rating_text + " outside [1,5]");
    records.push_back(std::move(r));
  }
  return RatingMatrix::from_records(records);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length vectors, n >= 2");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0)
    throw std::invalid_argument("pearson: zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  const double nu = static_cast<double>(n - 2);
  const double r2 = std::min(r * r, 1.0);
  if (r2 >= 1.0) return 0.0;
  const double t2 = r2 * nu / (1.0 - r2);
  return betai(nu / 2.0, 0.5, nu / (nu + t2));
}

AgreementReport interrater_pearson(const RatingMatrix& matrix, bool leave_one_out) {
  if (matrix.judges().size() < 2)
    throw std::invalid_argument("interrater_pearson: need at least 2 judges");

  AgreementReport report;
  report.leave_one_out = leave_one_out;
  double r_sum = 0;
  std::size_t r_count = 0;
  const std::size_t no_judge = matrix.judges().size() + 1;

  for (std::size_t j = 0; j < matrix.judges().size(); ++j) {
    std::vector<double> own, means;
    for (std::size_t p = 0; p < matrix.passages().size(); ++p) {
      auto r = matrix.rating(j, p);
      if (!r) continue;
      auto m = matrix.passage_mean(p, leave_one_out ? j : no_judge);
      if (!m) continue;
      own.push_back(*r);
      means.push_back(*m);
    }
    JudgeCorrelation jc;
    jc.judge = matrix.judges()[j];
    jc.passages_used = own.size();
    if (own.size() >= 3) {
      try {
        jc.r = pearson(own, means);
        r_sum += *jc.r;
        ++r_count;
      } catch (const std::invalid_argument&) {
        // zero-variance judge (or mean) vector: r stays undefined
      }
    }
    report.per_judge.push_back(std::move(jc));
  }
  if (r_count > 0) report.mean_r = r_sum / static_cast<double>(r_count);
  return report;
}

double krippendorff_alpha(const RatingMatrix& matrix) {
  // Pairable values: ratings in passages rated by at least two judges.
  std::vector<std::vector<double>> units;
  std::vector<double> pooled;
  for (std::size_t p = 0; p < matrix.passages().size(); ++p) {
    std::vector<double> unit;
    for (std::size_t j = 0; j < matrix.judges().size(); ++j)
      if (auto r = matrix.rating(j, p)) unit.push_back(*r);
    if (unit.size() >= 2) {
      pooled.insert(pooled.end(), unit.begin(), unit.end());
      units.push_back(std::move(unit));
    }
  }
  if (units.empty())
    throw std::invalid_argument("krippendorff_alpha: no passage rated by 2+ judges");

  const double n = static_cast<double>(pooled.size());
  double d_obs = 0;
  for (const auto& unit : units) {
    const double m = static_cast<double>(unit.size());
    double within = 0;
    for (std::size_t i = 0; i < unit.size(); ++i)
      for (std::size_t k = 0; k < unit.size(); ++k) {
        if (i == k) continue;
        const double d = unit[i] - unit[k];
        within += d * d;
      }
    d_obs += within / (m - 1);
  }
  d_obs /= n;

  double d_exp = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t k = 0; k < pooled.size(); ++k) {
      if (i == k) continue;
      const double d = pooled[i] - pooled[k];
      d_exp += d * d;
    }
  d_exp /= n * (n - 1.0);

  if (d_exp == 0) return 1.0;  // all pooled values identical: perfect agreement
  return 1.0 - d_obs / d_exp;
}

Regression regress_metric(const std::vector<double>& metric_values,
                          const std::vector<double>& mean_ratings) {
  const std::size_t n = metric_values.size();
  if (mean_ratings.size() != n)
    throw std::invalid_argument("regress_metric: length mismatch");
  if (n < 3) throw std::invalid_argument("regress_metric: need at least 3 passages");

  const double mx = mean_of(metric_values), my = mean_of(mean_ratings);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = metric_values[i] - mx;
    const double dy = mean_ratings[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw std::invalid_argument("regress_metric: metric has zero variance");
  if (syy == 0)
    throw std::invalid_argument("regress_metric: ratings have zero variance (R^2 undefined)");

  Regression out;
  out.n = n;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = out.intercept + out.slope * metric_values[i];
    ss_res += (mean_ratings[i] - fit) * (mean_ratings[i] - fit);
  }
  out.r_squared = 1.0 - ss_res / syy;
  out.p_value = pearson_p_value(pearson(metric_values, mean_ratings), n);
  return out;
}

}  // namespace ordbench
