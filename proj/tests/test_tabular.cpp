#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "curselab/common.hpp"
#include "curselab/rng.hpp"
#include "curselab/tabular.hpp"

using namespace curselab;
using namespace curselab::tabular;

namespace {

CovariateSchema binary_schema() {
  CovariateSchema s;
  s.covariates.push_back({"x", Kind::categorical, {"a", "b"}, 0, 0});
  return s;
}

CovariateSchema mixed_schema() {
  CovariateSchema s;
  s.covariates.push_back({"age", Kind::numeric, {}, 18.0, 60.0});
  s.covariates.push_back({"color", Kind::categorical, {"red", "green", "blue"}, 0, 0});
  return s;
}

Dataset small_dataset(int n, int L, std::uint64_t seed) {
  Dataset d;
  d.schema = mixed_schema();
  d.num_locations = L;
  rng::Rng r(seed);
  for (int i = 0; i < n; ++i) {
    RefugeeRecord rec;
    rec.values = {r.uniform(18.0, 60.0),
                  static_cast<double>(r.uniform_int(3))};
    d.records.push_back(rec);
    d.locations.push_back(static_cast<int>(r.uniform_int(static_cast<std::uint64_t>(L))));
    d.outcomes.push_back(r.bernoulli(0.4) ? 1 : 0);
    std::vector<double> p(static_cast<std::size_t>(L), 1.0 / L);
    d.propensities.push_back(p);
  }
  return d;
}

}  // namespace

TEST_CASE("schema validation rejects malformed descriptors") {
  CovariateSchema s;
  CHECK_THROWS(s.validate());  // empty
  s.covariates.push_back({"x", Kind::numeric, {}, 2.0, 1.0});
  CHECK_THROWS(s.validate());  // empty numeric range
  s.covariates[0] = {"x", Kind::categorical, {}, 0, 0};
  CHECK_THROWS(s.validate());  // no categories
  s.covariates[0] = {"x", Kind::categorical, {"a", "b"}, 0, 0};
  s.covariates.push_back({"x", Kind::categorical, {"c", "d"}, 0, 0});
  CHECK_THROWS(s.validate());  // duplicate name
  s.covariates[1].name = "y";
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("one-hot identity case in interaction mode") {
  // Binary covariate at level 1 of {a,b}, location 1 of 2. All categories are
  // kept, so the layout is [x one-hot | location one-hot | outer product].
  auto schema = binary_schema();
  std::vector<RefugeeRecord> recs = {{{0.0}}, {{1.0}}};
  auto map = FeatureMap::fit(schema, recs, FeatureMode::interactions, 2);
  REQUIRE(map.dimension() == 2 + 2 + 4);
  auto v = map.encode(recs[1], 1);
  CHECK(v == std::vector<double>{0, 1, 0, 1, 0, 0, 0, 1});
  auto w = map.encode(recs[0], 0);
  CHECK(w == std::vector<double>{1, 0, 1, 0, 1, 0, 0, 0});
}

TEST_CASE("covariates-only encoding ignores the location argument") {
  auto d = small_dataset(50, 5, 7);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::covariates_only, 5);
  for (const auto& rec : d.records) {
    auto base = map.encode(rec, 0);
    for (int t = 1; t < 5; ++t) CHECK(map.encode(rec, t) == base);
  }
}

TEST_CASE("encode/decode round trip recovers categories and location") {
  auto d = small_dataset(200, 4, 11);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::interactions, 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    int t = d.locations[i];
    auto v = map.encode(d.records[i], t);
    // Decode the categorical one-hot block.
    int color_off = map.covariate_offset(1);
    int decoded_cat = -1;
    int ones = 0;
    for (int k = 0; k < 3; ++k) {
      if (v[static_cast<std::size_t>(color_off + k)] == 1.0) {
        decoded_cat = k;
        ++ones;
      }
    }
    CHECK(ones == 1);
    CHECK(decoded_cat == static_cast<int>(d.records[i].values[1]));
    // Decode the location block.
    int decoded_loc = -1;
    ones = 0;
    for (int k = 0; k < 4; ++k) {
      if (v[static_cast<std::size_t>(map.covariate_block_size() + k)] == 1.0) {
        decoded_loc = k;
        ++ones;
      }
    }
    CHECK(ones == 1);
    CHECK(decoded_loc == t);
  }
}

TEST_CASE("interaction features equal covariate block times location indicator") {
  auto d = small_dataset(1000, 3, 13);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::interactions, 3);
  int cdim = map.covariate_block_size();
  int L = 3;
  for (std::size_t i = 0; i < d.size(); ++i) {
    int t = d.locations[i];
    auto v = map.encode(d.records[i], t);
    for (int c = 0; c < cdim; ++c) {
      for (int j = 0; j < L; ++j) {
        double inter = v[static_cast<std::size_t>(cdim + L + c * L + j)];
        double want = v[static_cast<std::size_t>(c)] * (t == j ? 1.0 : 0.0);
        CHECK(inter == want);
      }
    }
  }
}

TEST_CASE("sparse encoding agrees with dense encoding") {
  auto d = small_dataset(100, 6, 17);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::interactions, 6);
  std::vector<std::pair<int, double>> sp;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto v = map.encode(d.records[i], d.locations[i]);
    map.encode_sparse(d.records[i], d.locations[i], sp);
    std::vector<double> rebuilt(v.size(), 0.0);
    for (auto [j, val] : sp) rebuilt[static_cast<std::size_t>(j)] = val;
    CHECK(rebuilt == v);
  }
}

TEST_CASE("standardization yields mean 0 and sd 1 on the fitting data") {
  auto d = small_dataset(500, 3, 19);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::covariates_only, 3);
  double sum = 0.0, sumsq = 0.0;
  for (const auto& rec : d.records) {
    double z = map.encode(rec, 0)[0];
    sum += z;
    sumsq += z * z;
  }
  double n = static_cast<double>(d.size());
  double mean = sum / n;
  double sd = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(mean) < 1e-9);
  CHECK(std::abs(sd - 1.0) < 1e-9);
}

TEST_CASE("encode rejects schema mismatches by name") {
  auto d = small_dataset(10, 3, 23);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::interactions, 3);
  RefugeeRecord bad;
  bad.values = {30.0, 7.0};  // category index out of range
  CHECK_THROWS_WITH_AS(static_cast<void>(map.encode(bad, 0)),
                       doctest::Contains("color"), Error);
  RefugeeRecord short_rec;
  short_rec.values = {30.0};
  CHECK_THROWS(static_cast<void>(map.encode(short_rec, 0)));
  CHECK_THROWS(static_cast<void>(map.encode(d.records[0], 5)));
}

TEST_CASE("split partitions with ceiling sizes, deterministically") {
  auto d = small_dataset(4, 2, 29);
  auto [a, b] = split(d, 0.5, 99);
  CHECK(a.size() == 2);
  CHECK(b.size() == 2);
  auto [a2, b2] = split(d, 0.5, 99);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.records[i].values == a2.records[i].values);

  // Union of rows is the original set: match on the unique age values.
  std::multiset<double> ages;
  for (const auto& r : a.records) ages.insert(r.values[0]);
  for (const auto& r : b.records) ages.insert(r.values[0]);
  std::multiset<double> want;
  for (const auto& r : d.records) want.insert(r.values[0]);
  CHECK(ages == want);

  auto d5 = small_dataset(5, 2, 31);
  auto [c5, e5] = split(d5, 0.5, 1);
  CHECK(c5.size() == 3);
  CHECK(e5.size() == 2);

  // Ceiling sizing keeps the first part nonempty for any tiny fraction;
  // only a fraction near one can starve the second part.
  auto [lo1, lo2] = split(d, 1e-9, 1);
  CHECK(lo1.size() == 1);
  CHECK(lo2.size() == 3);
  CHECK_THROWS(split(d, 0.999999, 1));  // empty second part

  Dataset tiny = small_dataset(2, 2, 37);
  tiny.records.resize(1);
  tiny.locations.resize(1);
  tiny.outcomes.resize(1);
  tiny.propensities.resize(1);
  CHECK_THROWS(split(tiny, 0.5, 1));  // n < 2
}

TEST_CASE("dataset validation catches bad rows") {
  auto d = small_dataset(5, 3, 41);
  CHECK_NOTHROW(d.validate());
  auto bad = d;
  bad.outcomes[2] = 2;
  CHECK_THROWS(bad.validate());
  bad = d;
  bad.locations[0] = 3;
  CHECK_THROWS(bad.validate());
  bad = d;
  bad.propensities[1] = {0.5, 0.4, 0.2};
  CHECK_THROWS(bad.validate());
  bad = d;
  bad.propensities[1] = {1.0, 0.0, 0.0};
  bad.locations[1] = 1;  // assigned under zero propensity
  CHECK_THROWS(bad.validate());
}

TEST_CASE("CSV round trip is lossless and byte-stable") {
  auto d = small_dataset(50, 4, 43);
  std::string p1 = "tabular_roundtrip_1.csv";
  std::string p2 = "tabular_roundtrip_2.csv";
  write_csv(d, p1);
  Dataset back = read_csv(p1, d.schema);
  REQUIRE(back.size() == d.size());
  CHECK(back.num_locations == d.num_locations);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.records[i].values == d.records[i].values);
    CHECK(back.locations[i] == d.locations[i]);
    CHECK(back.outcomes[i] == d.outcomes[i]);
    CHECK(back.propensities[i] == d.propensities[i]);
  }
  write_csv(back, p2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("feature map serialization round trips") {
  auto d = small_dataset(100, 5, 47);
  auto map = FeatureMap::fit(d.schema, d.records, FeatureMode::interactions, 5);
  std::stringstream ss;
  map.save(ss);
  auto back = FeatureMap::load(ss);
  CHECK(back.dimension() == map.dimension());
  CHECK(back.mode() == map.mode());
  for (const auto& rec : d.records)
    CHECK(back.encode(rec, 2) == map.encode(rec, 2));
}
