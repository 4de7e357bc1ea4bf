#include "doctest.h"

#include <stdexcept>
#include "ordbench/humaneval.hpp"
#include "ordbench/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace ordbench;

namespace {

RatingMatrix matrix_of(const std::vector<RatingRecord>& recs) {
  return RatingMatrix::from_records(recs);
}

std::string write_tmp(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

}  // namespace

TEST_CASE("load_ratings validates bounds and rows") {
  std::string ok = write_tmp("r1.tsv",
                             "judge\tpassage\trating\n"
                             "j1\tp1\t4\n"
                             "j1\tp2\t3.5\n"
                             "j2\tp1\t5\n");
  RatingMatrix m = load_ratings(ok);
  CHECK(m.judges().size() == 2);
  CHECK(m.passages().size() == 2);
  CHECK(m.rating_count() == 3);
  CHECK(m.missing_count() == 1);

  std::string bad = write_tmp("r2.tsv",
                              "judge\tpassage\trating\n"
                              "j1\tp1\t6\n");
  CHECK_THROWS_WITH_AS(load_ratings(bad), doctest::Contains("row 2"), std::runtime_error);

  std::string noheader = write_tmp("r3.tsv", "a\tb\t4\n");
  CHECK_THROWS_AS(load_ratings(noheader), std::runtime_error);
}

TEST_CASE("a complete 3-judge x 40-passage file yields a full matrix") {
  std::string content = "judge\tpassage\trating\n";
  for (int j = 0; j < 3; ++j)
    for (int p = 0; p < 40; ++p)
      content += "j" + std::to_string(j) + "\tp" + std::to_string(p) + "\t" +
                 std::to_string(1 + (j + p) % 5) + "\n";
  std::string path = write_tmp("r_full.tsv", content);
  RatingMatrix m = load_ratings(path);
  CHECK(m.judges().size() == 3);
  CHECK(m.passages().size() == 40);
  CHECK(m.rating_count() == 120);
  CHECK(m.missing_count() == 0);
}

TEST_CASE("pearson is invariant under positive affine transforms") {
  std::vector<double> x = {1, 2, 2.5, 4, 5.5};
  std::vector<double> y = {2, 1.5, 3, 3.5, 5};
  double base = pearson(x, y);
  std::vector<double> x2, y2;
  for (double v : x) x2.push_back(3.0 * v + 7.0);
  for (double v : y) y2.push_back(0.5 * v - 2.0);
  CHECK(pearson(x2, y) == doctest::Approx(base).epsilon(1e-12));
  CHECK(pearson(x, y2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("perfect agreement gives r = 1 for every judge") {
  std::vector<RatingRecord> recs;
  for (int j = 0; j < 3; ++j)
    for (int p = 0; p < 6; ++p)
      recs.push_back({"j" + std::to_string(j), "p" + std::to_string(p),
                      1.0 + (p % 5)});
  AgreementReport rep = interrater_pearson(matrix_of(recs));
  REQUIRE(rep.mean_r.has_value());
  CHECK(*rep.mean_r == doctest::Approx(1.0));
  for (const auto& jc : rep.per_judge) {
    REQUIRE(jc.r.has_value());
    CHECK(*jc.r == doctest::Approx(1.0));
  }
}

TEST_CASE("pearson is invariant under judge-level shifts") {
  std::vector<RatingRecord> recs;
  double base[6] = {1, 2, 3, 4, 5, 2.5};
  for (int p = 0; p < 6; ++p) {
    recs.push_back({"a", "p" + std::to_string(p), base[p]});
    recs.push_back({"b", "p" + std::to_string(p), std::min(5.0, base[p] + 1.0)});
  }
  // use an exact shift inside the scale for the invariance statement
  recs.clear();
  double vals[5] = {1, 2, 3, 3.5, 4};
  for (int p = 0; p < 5; ++p) {
    recs.push_back({"a", "p" + std::to_string(p), vals[p]});
    recs.push_back({"b", "p" + std::to_string(p), vals[p] + 1.0});
  }
  AgreementReport rep = interrater_pearson(matrix_of(recs));
  REQUIRE(rep.per_judge[0].r.has_value());
  CHECK(*rep.per_judge[0].r == doctest::Approx(1.0));
  REQUIRE(rep.per_judge[1].r.has_value());
  CHECK(*rep.per_judge[1].r == doctest::Approx(1.0));
}

TEST_CASE("judge-vs-mean correlation matches a direct covariance computation") {
  std::vector<RatingRecord> recs = {
      {"a", "p0", 1}, {"a", "p1", 3}, {"a", "p2", 4}, {"a", "p3", 5},
      {"b", "p0", 2}, {"b", "p1", 2}, {"b", "p2", 5}, {"b", "p3", 4},
      {"c", "p0", 1}, {"c", "p1", 4}, {"c", "p2", 3}, {"c", "p3", 5},
  };
  RatingMatrix m = matrix_of(recs);
  AgreementReport rep = interrater_pearson(m);

  // oracle: textbook formula for judge a against the all-judge mean
  std::vector<double> a = {1, 3, 4, 5};
  std::vector<double> mean = {(1 + 2 + 1) / 3.0, (3 + 2 + 4) / 3.0, (4 + 5 + 3) / 3.0,
                              (5 + 4 + 5) / 3.0};
  double ma = 0, mm = 0;
  for (int i = 0; i < 4; ++i) {
    ma += a[i] / 4;
    mm += mean[i] / 4;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (a[i] - ma) * (mean[i] - mm);
    sxx += (a[i] - ma) * (a[i] - ma);
    syy += (mean[i] - mm) * (mean[i] - mm);
  }
  REQUIRE(rep.per_judge[0].r.has_value());
  CHECK(*rep.per_judge[0].r == doctest::Approx(sxy / std::sqrt(sxx * syy)));
}

TEST_CASE("zero-variance judge is reported as undefined") {
  std::vector<RatingRecord> recs;
  for (int p = 0; p < 5; ++p) {
    recs.push_back({"flat", "p" + std::to_string(p), 3.0});
    recs.push_back({"varied", "p" + std::to_string(p), 1.0 + p});
  }
  AgreementReport rep = interrater_pearson(matrix_of(recs));
  CHECK_FALSE(rep.per_judge[0].r.has_value());
  REQUIRE(rep.per_judge[1].r.has_value());
  CHECK_THROWS_AS(interrater_pearson(matrix_of({{"only", "p", 3.0}})),
                  std::invalid_argument);
}

TEST_CASE("krippendorff alpha: perfect, adversarial, and null cases") {
  // perfect agreement on passages with differing values -> alpha = 1
  std::vector<RatingRecord> perfect = {
      {"a", "p0", 2}, {"b", "p0", 2}, {"a", "p1", 5}, {"b", "p1", 5}};
  CHECK(krippendorff_alpha(matrix_of(perfect)) == doctest::Approx(1.0));

  // the hand-worked 2x2 disagreement case: D_o = 16, D_e = 32/3, alpha = -0.5
  std::vector<RatingRecord> adversarial = {
      {"a", "p0", 1}, {"b", "p0", 5}, {"a", "p1", 5}, {"b", "p1", 1}};
  CHECK(krippendorff_alpha(matrix_of(adversarial)) == doctest::Approx(-0.5));

  // ratings independent of passage -> alpha near 0
  Pcg64 rng(2718);
  std::vector<RatingRecord> random_recs;
  for (int p = 0; p < 1500; ++p)
    for (int j = 0; j < 2; ++j)
      random_recs.push_back({"j" + std::to_string(j), "p" + std::to_string(p),
                             1.0 + static_cast<double>(rng.below(5))});
  double alpha = krippendorff_alpha(matrix_of(random_recs));
  CHECK(alpha > -0.15);
  CHECK(alpha < 0.15);

  CHECK_THROWS_AS(krippendorff_alpha(matrix_of({{"a", "p0", 3}, {"a", "p1", 4}})),
                  std::invalid_argument);
}

TEST_CASE("krippendorff alpha is invariant under affine rescaling") {
  Pcg64 rng(37);
  std::vector<RatingRecord> recs, scaled;
  for (int p = 0; p < 40; ++p)
    for (int j = 0; j < 3; ++j) {
      if (rng.next_double() < 0.15) continue;  // some missing cells
      double r = 1.0 + static_cast<double>(rng.below(5));
      recs.push_back({"j" + std::to_string(j), "p" + std::to_string(p), r});
      scaled.push_back({"j" + std::to_string(j), "p" + std::to_string(p), 2.5 * r - 3.0});
    }
  double a = krippendorff_alpha(matrix_of(recs));
  double b = krippendorff_alpha(matrix_of(scaled));
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("regress_metric: exact line, degenerate contracts, closed form") {
  std::vector<double> x = {0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v + 1);
  Regression r = regress_metric(x, y);
  CHECK(r.slope == doctest::Approx(2.0));
  CHECK(r.intercept == doctest::Approx(1.0));
  CHECK(r.r_squared == doctest::Approx(1.0));

  CHECK_THROWS_AS(regress_metric({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(regress_metric({1, 2, 3}, {2, 2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(regress_metric({1, 2}, {1, 2}), std::invalid_argument);

  // 5-point hand dataset against the normal equations
  std::vector<double> xs = {1, 2, 3, 4, 5};
  std::vector<double> ys = {2.0, 2.5, 3.9, 4.1, 5.2};
  Regression h = regress_metric(xs, ys);
  double sx = 15, sy = 17.7, sxx = 55, sxy = 0;
  for (int i = 0; i < 5; ++i) sxy += xs[i] * ys[i];
  double n = 5;
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  CHECK(h.slope == doctest::Approx(slope));
  CHECK(h.intercept == doctest::Approx(intercept));
}

TEST_CASE("R^2 equals squared pearson correlation") {
  Pcg64 rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 4 + rng.below(30);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(rng.uniform(-3, 3));
      y.push_back(2.0 * x.back() + rng.uniform(-1, 1));
    }
    Regression r = regress_metric(x, y);
    double rho = pearson(x, y);
    CHECK(std::abs(r.r_squared - rho * rho) < 1e-10);
  }
}

TEST_CASE("pearson p-value: bounds and monotonicity in n") {
  CHECK(pearson_p_value(0.0, 10) == doctest::Approx(1.0));
  CHECK(pearson_p_value(1.0, 10) == doctest::Approx(0.0));
  double p_small = pearson_p_value(0.6, 10);
  double p_large = pearson_p_value(0.6, 40);
  CHECK(p_small > p_large);  // more data, same r -> smaller p
  CHECK(p_small > 0);
  CHECK(p_small < 1);
}

TEST_CASE("leave-one-out variant excludes the judge from the mean") {
  std::vector<RatingRecord> recs = {
      {"a", "p0", 1}, {"a", "p1", 2}, {"a", "p2", 3}, {"a", "p3", 5},
      {"b", "p0", 5}, {"b", "p1", 4}, {"b", "p2", 2}, {"b", "p3", 1},
      {"c", "p0", 3}, {"c", "p1", 3}, {"c", "p2", 2}, {"c", "p3", 4},
  };
  RatingMatrix m = matrix_of(recs);
  AgreementReport incl = interrater_pearson(m, false);
  AgreementReport excl = interrater_pearson(m, true);
  REQUIRE(incl.per_judge[0].r.has_value());
  REQUIRE(excl.per_judge[0].r.has_value());
  CHECK(*incl.per_judge[0].r != *excl.per_judge[0].r);
}
