#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "curselab/common.hpp"
#include "curselab/learners.hpp"
#include "curselab/rng.hpp"
#include "curselab/tabular.hpp"

using namespace curselab;
using namespace curselab::learners;

namespace {

/// Tent curve rising to y_max at t0 and falling back to zero at one.
double tent(double t, double t0, double y_max) {
  return t <= t0 ? t * y_max / t0 : (1.0 - t) * y_max / (1.0 - t0);
}

std::vector<std::vector<double>> random_design(rng::Rng& r, int n, int p) {
  std::vector<std::vector<double>> x(static_cast<std::size_t>(n),
                                     std::vector<double>(
                                         static_cast<std::size_t>(p)));
  for (auto& row : x)
    for (double& v : row) v = r.normal();
  return x;
}

tabular::Dataset tiny_dataset(int n, int L, std::uint64_t seed) {
  tabular::Dataset d;
  d.schema.covariates.push_back(
      {"age", tabular::Kind::numeric, {}, 18.0, 60.0});
  d.schema.covariates.push_back(
      {"group", tabular::Kind::categorical, {"a", "b", "c"}, 0, 0});
  d.num_locations = L;
  rng::Rng r(seed);
  for (int i = 0; i < n; ++i) {
    tabular::RefugeeRecord rec;
    rec.values = {r.uniform(18.0, 60.0),
                  static_cast<double>(r.uniform_int(3))};
    d.records.push_back(rec);
    d.locations.push_back(
        static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(L))));
    d.outcomes.push_back(r.bernoulli(0.5) ? 1 : 0);
    d.propensities.push_back(
        std::vector<double>(static_cast<std::size_t>(L), 1.0 / L));
  }
  return d;
}

}  // namespace

TEST_CASE("ols interpolates a full-rank square system") {
  rng::Rng r(101);
  int p = 5;
  auto x = random_design(r, p, p);
  std::vector<double> truth = {1.5, -2.0, 0.25, 3.0, -0.75};
  std::vector<double> y(static_cast<std::size_t>(p), 0.0);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      y[static_cast<std::size_t>(i)] +=
          x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
          truth[static_cast<std::size_t>(j)];
  bool deficient = true;
  auto beta = ols_coefficients(x, y, &deficient);
  CHECK_FALSE(deficient);
  for (int j = 0; j < p; ++j)
    CHECK(beta[static_cast<std::size_t>(j)] ==
          doctest::Approx(truth[static_cast<std::size_t>(j)]).epsilon(1e-9));
}

TEST_CASE("through-origin slope of the tent curve matches its closed form") {
  // Uniform t, outcome f*(t) with t0 = 0.5, y_max = 2: the least-squares
  // slope is (1 + t0) * y_max / 2 = 1.5.
  int n = 10001;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    x.push_back({t});
    y.push_back(tent(t, 0.5, 2.0));
  }
  auto beta = ols_coefficients(x, y);
  REQUIRE(beta.size() == 1);
  CHECK(beta[0] == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("duplicating every row leaves ols unchanged") {
  rng::Rng r(102);
  auto x = random_design(r, 40, 4);
  std::vector<double> y;
  for (const auto& row : x) y.push_back(row[0] - 2.0 * row[2] + r.normal());
  auto base = ols_coefficients(x, y);

  auto x2 = x;
  auto y2 = y;
  x2.insert(x2.end(), x.begin(), x.end());
  y2.insert(y2.end(), y.begin(), y.end());
  auto doubled = ols_coefficients(x2, y2);
  for (std::size_t j = 0; j < base.size(); ++j)
    CHECK(doubled[j] == doctest::Approx(base[j]).epsilon(1e-10));
}

TEST_CASE("rank-deficient design falls back to the minimum-norm solution") {
  rng::Rng r(103);
  // Two identical columns: the minimum-norm solution splits their shared
  // coefficient equally.
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    double v = r.normal();
    x.push_back({v, v});
    y.push_back(3.0 * v);
  }
  bool deficient = false;
  auto beta = ols_coefficients(x, y, &deficient);
  CHECK(deficient);
  CHECK(beta[0] == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(beta[1] == doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("ridge satisfies its normal equations") {
  rng::Rng r(104);
  int n = 60, p = 6;
  auto x = random_design(r, n, p);
  std::vector<double> y;
  for (const auto& row : x) y.push_back(row[1] + 0.5 * row[4] + r.normal());
  double lambda = 0.37;
  auto beta = ridge_coefficients(x, y, lambda);

  // (X'X/n + lambda I) beta == X'y/n, coordinate by coordinate.
  for (int j = 0; j < p; ++j) {
    double lhs = lambda * beta[static_cast<std::size_t>(j)];
    double rhs = 0.0;
    for (int i = 0; i < n; ++i) {
      double xj = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      double xb = 0.0;
      for (int k = 0; k < p; ++k)
        xb += x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
              beta[static_cast<std::size_t>(k)];
      lhs += xj * xb / n;
      rhs += xj * y[static_cast<std::size_t>(i)] / n;
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("ridge shrinks to zero as the penalty explodes") {
  rng::Rng r(105);
  auto x = random_design(r, 30, 3);
  std::vector<double> y;
  for (const auto& row : x) y.push_back(2.0 * row[0] + r.normal());
  auto beta = ridge_coefficients(x, y, 1e9);
  for (double b : beta) CHECK(std::abs(b) < 1e-6);
}

TEST_CASE("ridge agrees with a gradient-descent oracle") {
  rng::Rng r(106);
  int n = 40, p = 3;
  auto x = random_design(r, n, p);
  std::vector<double> y;
  for (const auto& row : x) y.push_back(row[0] - row[2] + 0.3 * r.normal());
  double lambda = 0.2;
  auto beta = ridge_coefficients(x, y, lambda);

  // Plain gradient descent on (1/2n)||y - Xb||^2 + (lambda/2)||b||^2.
  std::vector<double> gd(static_cast<std::size_t>(p), 0.0);
  for (int step = 0; step < 200000; ++step) {
    std::vector<double> grad(static_cast<std::size_t>(p), 0.0);
    for (int i = 0; i < n; ++i) {
      double resid = y[static_cast<std::size_t>(i)];
      for (int k = 0; k < p; ++k)
        resid -= x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                 gd[static_cast<std::size_t>(k)];
      for (int k = 0; k < p; ++k)
        grad[static_cast<std::size_t>(k)] -=
            x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
            resid / n;
    }
    for (int k = 0; k < p; ++k) {
      grad[static_cast<std::size_t>(k)] +=
          lambda * gd[static_cast<std::size_t>(k)];
      gd[static_cast<std::size_t>(k)] -=
          0.05 * grad[static_cast<std::size_t>(k)];
    }
  }
  for (int k = 0; k < p; ++k)
    CHECK(beta[static_cast<std::size_t>(k)] ==
          doctest::Approx(gd[static_cast<std::size_t>(k)]).epsilon(1e-6));
}

TEST_CASE("ridge recovers the shrunken split of a nearly collinear pair") {
  // Features [t, x, tx] with t almost always one: ridge splits the single
  // true x-coefficient b across the two collinear columns, converging to
  // b / (2 + lambda) on each.
  rng::Rng r(107);
  int n = 20000;
  double b = 1.0, lambda = 0.5;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < n; ++i) {
    double xv = r.normal();
    double t = r.bernoulli(0.999) ? 1.0 : 0.0;
    x.push_back({t, xv, t * xv});
    y.push_back(b * xv + r.normal());
  }
  auto beta = ridge_coefficients(x, y, lambda);
  double want = b / (2.0 + lambda);
  CHECK(std::abs(beta[0]) < 0.05);
  CHECK(beta[1] == doctest::Approx(want).epsilon(0.15));
  CHECK(beta[2] == doctest::Approx(want).epsilon(0.15));
  CHECK(beta[1] + beta[2] == doctest::Approx(2.0 * want).epsilon(0.05));
}

TEST_CASE("ridge_from_moments matches the design-matrix solve") {
  rng::Rng r(108);
  int n = 200, p = 3;
  auto x = random_design(r, n, p);
  std::vector<double> y;
  for (const auto& row : x) y.push_back(row[0] + r.normal());
  double lambda = 0.8;
  auto direct = ridge_coefficients(x, y, lambda);

  std::vector<std::vector<double>> sigma(
      static_cast<std::size_t>(p),
      std::vector<double>(static_cast<std::size_t>(p), 0.0));
  std::vector<double> xty(static_cast<std::size_t>(p), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) {
      xty[static_cast<std::size_t>(j)] +=
          x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
          y[static_cast<std::size_t>(i)] / n;
      for (int k = 0; k < p; ++k)
        sigma[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] +=
            x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
            x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] / n;
    }
  auto from_moments = ridge_from_moments(sigma, xty, lambda);
  for (int j = 0; j < p; ++j)
    CHECK(from_moments[static_cast<std::size_t>(j)] ==
          doctest::Approx(direct[static_cast<std::size_t>(j)]).epsilon(1e-9));
}

TEST_CASE("fitted linear models predict their own encoding dot product") {
  auto d = tiny_dataset(80, 3, 109);
  auto map = tabular::FeatureMap::fit(d.schema, d.records,
                                      tabular::FeatureMode::interactions, 3);
  LinearModel model = fit_ridge(d, map, 0.05);
  CHECK(model.family() == Family::ridge);
  CHECK(model.num_locations() == 3);
  for (int i = 0; i < 5; ++i)
    for (int t = 0; t < 3; ++t) {
      auto phi = map.encode(d.records[static_cast<std::size_t>(i)], t);
      double dot = 0.0;
      for (std::size_t j = 0; j < phi.size(); ++j)
        dot += phi[j] * model.coefficients()[j];
      CHECK(model.predict(d.records[static_cast<std::size_t>(i)], t) ==
            doctest::Approx(dot).epsilon(1e-12));
    }

  std::vector<double> all(3, 0.0);
  model.predict_all(d.records[0], all);
  for (int t = 0; t < 3; ++t)
    CHECK(all[static_cast<std::size_t>(t)] ==
          doctest::Approx(model.predict(d.records[0], t)).epsilon(1e-12));
}

TEST_CASE("linear model save/load round trip preserves predictions") {
  auto d = tiny_dataset(60, 2, 110);
  auto map = tabular::FeatureMap::fit(d.schema, d.records,
                                      tabular::FeatureMode::interactions, 2);
  LinearModel model = fit_ols(d, map);
  std::ostringstream os;
  model.save(os);
  std::istringstream is(os.str());
  auto back = load_model(is);
  CHECK(back->family() == Family::ols);
  CHECK(back->digest() == model.digest());
  for (int i = 0; i < 10; ++i)
    for (int t = 0; t < 2; ++t)
      CHECK(back->predict(d.records[static_cast<std::size_t>(i)], t) ==
            doctest::Approx(
                model.predict(d.records[static_cast<std::size_t>(i)], t))
                .epsilon(1e-12));
}
