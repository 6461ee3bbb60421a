#include "curselab/envgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "curselab/common.hpp"
#include "curselab/rng.hpp"

namespace curselab::envgen {

namespace {

constexpr double kProbTolerance = 1e-9;
constexpr double kFxClipLo = 0.02;
constexpr double kFxClipHi = 0.98;

void check_probability_vector(const std::vector<double>& p,
                              const std::string& what, bool strictly_positive) {
  if (p.empty()) fail(what + ": empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) fail(what + ": negative probability");
    if (strictly_positive && !(v > 0.0))
      fail(what + ": probabilities must be strictly positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTolerance)
    fail(what + ": probabilities must sum to 1");
}

}  // namespace

void CovariateSpec::validate() const {
  if (covariate.kind == tabular::Kind::categorical) {
    if (covariate.categories.empty())
      fail("covariate " + covariate.name + ": no categories");
    if (category_probs.size() != covariate.categories.size())
      fail("covariate " + covariate.name +
           ": category_probs must match the category list");
    if (!bins.empty())
      fail("covariate " + covariate.name + ": categorical with numeric bins");
    check_probability_vector(category_probs, "covariate " + covariate.name,
                             false);
    return;
  }
  if (!category_probs.empty())
    fail("covariate " + covariate.name + ": numeric with category_probs");
  if (bins.empty()) fail("covariate " + covariate.name + ": no bins");
  std::vector<double> probs;
  for (const auto& b : bins) {
    if (!(b.lo < b.hi))
      fail("covariate " + covariate.name + ": empty bin range");
    if (b.lo < covariate.lo || b.hi > covariate.hi)
      fail("covariate " + covariate.name + ": bin outside covariate range");
    probs.push_back(b.prob);
  }
  check_probability_vector(probs, "covariate " + covariate.name, false);
}

tabular::CovariateSchema EnvironmentConfig::schema() const {
  tabular::CovariateSchema s;
  s.covariates.reserve(covariates.size());
  for (const auto& spec : covariates) s.covariates.push_back(spec.covariate);
  return s;
}

EnvironmentConfig EnvironmentConfig::resolved() const {
  EnvironmentConfig c = *this;
  if (c.location_probs.empty())
    c.location_probs = default_location_probs(c.num_locations);
  return c;
}

void EnvironmentConfig::validate() const {
  if (covariates.empty()) fail("environment: no covariates");
  schema().validate();
  for (const auto& spec : covariates) spec.validate();
  if (num_locations < 2) fail("environment: need at least 2 locations");
  if (!location_probs.empty()) {
    if (static_cast<int>(location_probs.size()) != num_locations)
      fail("environment: location_probs length must equal num_locations");
    check_probability_vector(location_probs, "location_probs", true);
  }
  if (!(beta_a > 0.0) || !(beta_b > 0.0))
    fail("environment: Beta shapes must be positive");
  if (!(fx.coef_scale >= 0.0)) fail("environment: coef_scale must be >= 0");
  if (fx.n_fit < 1) fail("environment: n_fit must be >= 1");
  if (fx.rf.trees < 1 || fx.rf.max_depth < 0 || !(fx.rf.min_leaf > 0.0))
    fail("environment: bad forest parameters");
}

std::string EnvironmentConfig::describe() const {
  EnvironmentConfig c = resolved();
  std::ostringstream os;
  os << "environment\n";
  os << "locations " << c.num_locations << '\n';
  os << "location_probs";
  for (double p : c.location_probs) os << ' ' << format_double(p);
  os << '\n';
  os << "beta " << format_double(c.beta_a) << ' ' << format_double(c.beta_b)
     << '\n';
  os << "free_case_boost " << format_double(c.free_case_boost) << '\n';
  os << "fx coef_scale " << format_double(c.fx.coef_scale) << " intercept "
     << format_double(c.fx.intercept) << " n_fit " << c.fx.n_fit << " rf "
     << c.fx.rf.trees << ' ' << c.fx.rf.max_depth << ' '
     << format_double(c.fx.rf.min_leaf) << '\n';
  for (const auto& spec : c.covariates) {
    const auto& cov = spec.covariate;
    if (cov.kind == tabular::Kind::categorical) {
      os << "covariate " << cov.name << " categorical";
      for (std::size_t k = 0; k < cov.categories.size(); ++k)
        os << ' ' << cov.categories[k] << ' '
           << format_double(spec.category_probs[k]);
      os << '\n';
    } else {
      os << "covariate " << cov.name << " numeric " << format_double(cov.lo)
         << ' ' << format_double(cov.hi);
      for (const auto& b : spec.bins)
        os << " bin " << format_double(b.lo) << ' ' << format_double(b.hi)
           << ' ' << format_double(b.prob);
      os << '\n';
    }
  }
  return os.str();
}

std::vector<double> default_location_probs(int num_locations) {
  if (num_locations < 1) fail("default_location_probs: need at least 1");
  if (num_locations == 1) return {1.0};
  // Ratio between the most and least likely location is 20.
  double r = std::pow(20.0, 1.0 / (num_locations - 1));
  std::vector<double> p(static_cast<std::size_t>(num_locations));
  double sum = 0.0;
  for (int t = 0; t < num_locations; ++t) {
    p[static_cast<std::size_t>(t)] = std::pow(r, t);
    sum += p[static_cast<std::size_t>(t)];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::uint64_t environment_digest(const EnvironmentConfig& config,
                                 std::uint64_t seed) {
  return fnv1a64(config.describe() + "seed " + std::to_string(seed) + "\n");
}

namespace {

std::vector<CovariateSpec> default_covariates() {
  auto cat = [](std::string name, std::vector<std::string> labels,
                std::vector<double> probs) {
    CovariateSpec s;
    s.covariate.name = std::move(name);
    s.covariate.kind = tabular::Kind::categorical;
    s.covariate.categories = std::move(labels);
    s.category_probs = std::move(probs);
    return s;
  };

  std::vector<CovariateSpec> covs;

  CovariateSpec age;
  age.covariate.name = "age";
  age.covariate.kind = tabular::Kind::numeric;
  age.covariate.lo = 18.0;
  age.covariate.hi = 60.0;
  age.bins = {{18.0, 30.0, 0.44},
              {30.0, 40.0, 0.28},
              {40.0, 50.0, 0.16},
              {50.0, 60.0, 0.12}};
  covs.push_back(std::move(age));

  covs.push_back(cat("gender", {"male", "female"}, {0.53, 0.47}));
  covs.push_back(cat("education",
                     {"none", "little", "secondary", "advanced", "university"},
                     {0.18, 0.39, 0.21, 0.10, 0.12}));
  covs.push_back(cat("speaks_english", {"yes", "no"}, {0.43, 0.57}));
  covs.push_back(cat("case_restriction", {"free", "tied"}, {0.28, 0.72}));

  double rare = 26.0 / 900.0;
  covs.push_back(cat("origin",
                     {"burma", "iraq", "bhutan", "somalia", "afghanistan",
                      "dr_congo", "iran", "eritrea", "ukraine", "syria",
                      "sudan", "ethiopia", "moldova", "other"},
                     {0.23, 0.20, 0.13, 0.11, 0.07, rare, rare, rare, rare,
                      rare, rare, rare, rare, rare}));

  double y = 4.0 / 23.0;
  covs.push_back(cat("arrival_year",
                     {"2011", "2012", "2013", "2014", "2015", "2016"},
                     {y, y, y, y, y, 3.0 / 23.0}));

  double early = 6.0 / 69.0;
  double late = 5.0 / 69.0;
  covs.push_back(cat("arrival_month",
                     {"jan", "feb", "mar", "apr", "may", "jun", "jul", "aug",
                      "sep", "oct", "nov", "dec"},
                     {early, early, early, early, early, early, early, early,
                      early, late, late, late}));
  return covs;
}

}  // namespace

EnvironmentConfig default_environment() {
  EnvironmentConfig c;
  c.covariates = default_covariates();
  c.num_locations = 43;
  // location_probs stays empty: resolved() fills the default geometric
  // profile for whatever num_locations is in force by then.
  return c;
}

std::vector<tabular::RefugeeRecord> sample_covariates(
    const EnvironmentConfig& config, int n, std::uint64_t seed,
    Restriction restriction) {
  EnvironmentConfig cfg = config.resolved();
  cfg.validate();
  if (n < 1) fail("sample_covariates: n must be >= 1");

  int restrict_cov = -1;
  int restrict_cat = -1;
  if (restriction == Restriction::free_only) {
    tabular::CovariateSchema schema = cfg.schema();
    restrict_cov = schema.index_of("case_restriction");
    if (restrict_cov < 0)
      fail("free-only sampling needs a case_restriction covariate");
    restrict_cat = schema.category_index(
        static_cast<std::size_t>(restrict_cov), "free");
    if (restrict_cat < 0)
      fail("free-only sampling needs a 'free' category on case_restriction");
  }

  rng::Rng rng(seed);
  std::vector<tabular::RefugeeRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  std::size_t ncov = cfg.covariates.size();
  std::vector<std::vector<double>> bin_probs(ncov);
  for (std::size_t j = 0; j < ncov; ++j)
    for (const auto& b : cfg.covariates[j].bins)
      bin_probs[j].push_back(b.prob);
  for (int i = 0; i < n; ++i) {
    tabular::RefugeeRecord rec;
    rec.values.resize(ncov);
    for (std::size_t j = 0; j < ncov; ++j) {
      const auto& spec = cfg.covariates[j];
      if (spec.covariate.kind == tabular::Kind::categorical) {
        rec.values[j] = static_cast<double>(rng.categorical(spec.category_probs));
      } else {
        const auto& bin =
            spec.bins[static_cast<std::size_t>(rng.categorical(bin_probs[j]))];
        rec.values[j] = rng.uniform(bin.lo, bin.hi);
      }
    }
    // Forced after sampling, so the other covariates' draws match what an
    // unrestricted pass would have produced.
    if (restrict_cov >= 0)
      rec.values[static_cast<std::size_t>(restrict_cov)] =
          static_cast<double>(restrict_cat);
    records.push_back(std::move(rec));
  }
  return records;
}

CausalModel CausalModel::constant(double fx_value,
                                  std::vector<double> location_effects) {
  if (!(fx_value >= 0.0 && fx_value <= 1.0))
    fail("CausalModel::constant: fx_value must lie in [0, 1]");
  for (double v : location_effects)
    if (!(v >= 0.0 && v <= 1.0))
      fail("CausalModel::constant: location effects must lie in [0, 1]");
  CausalModel m;
  m.fx_constant_ = true;
  m.fx_value_ = fx_value;
  m.f_loc_ = std::move(location_effects);
  m.degenerate_ = true;
  return m;
}

double CausalModel::f_x(const tabular::RefugeeRecord& record) const {
  if (fx_constant_) return fx_value_;
  std::vector<double> x = map_.encode(record, 0);
  return std::clamp(forest_.predict(x), kFxClipLo, kFxClipHi);
}

double CausalModel::f_location(int location) const {
  if (location < 0 || location >= num_locations())
    fail("f_location: location out of range");
  return f_loc_[static_cast<std::size_t>(location)];
}

double CausalModel::value(const tabular::RefugeeRecord& record,
                          int location) const {
  return 0.5 * f_x(record) + 0.5 * f_location(location);
}

std::vector<double> CausalModel::f_x_batch(
    const std::vector<tabular::RefugeeRecord>& records, int threads) const {
  std::vector<double> out(records.size());
  if (fx_constant_) {
    std::fill(out.begin(), out.end(), fx_value_);
    return out;
  }
  parallel_for(static_cast<int>(records.size()), threads, [&](int i) {
    auto u = static_cast<std::size_t>(i);
    out[u] = f_x(records[u]);
  });
  return out;
}

CausalModel build_causal_model(const EnvironmentConfig& config,
                               std::uint64_t seed) {
  EnvironmentConfig cfg = config.resolved();
  cfg.validate();
  tabular::CovariateSchema schema = cfg.schema();
  rng::Rng root(seed);
  int n = cfg.fx.n_fit;
  int L = cfg.num_locations;

  // Internal fitting sample: covariate rows plus random locations.
  std::vector<tabular::RefugeeRecord> records = sample_covariates(
      cfg, n, rng::derive_seed(seed, "fx-covariates", 0), Restriction::any);
  rng::Rng loc_rng = root.child("fx-locations");
  std::vector<int> locations(static_cast<std::size_t>(n));
  for (auto& t : locations) t = loc_rng.categorical(cfg.location_probs);

  // Random-coefficient logit labels over covariate and location features.
  tabular::FeatureMap label_map = tabular::FeatureMap::fit(
      schema, records, tabular::FeatureMode::covariates_plus_location, L);
  rng::Rng coef_rng = root.child("fx-coefficients");
  std::vector<double> coef(static_cast<std::size_t>(label_map.dimension()));
  for (double& c : coef) c = coef_rng.normal(0.0, cfg.fx.coef_scale);
  int free_cov = schema.index_of("case_restriction");
  if (free_cov >= 0) {
    int free_cat =
        schema.category_index(static_cast<std::size_t>(free_cov), "free");
    if (free_cat >= 0)
      coef[static_cast<std::size_t>(
          label_map.covariate_offset(static_cast<std::size_t>(free_cov)) +
          free_cat)] = cfg.free_case_boost;
  }
  rng::Rng label_rng = root.child("fx-labels");
  std::vector<double> labels(static_cast<std::size_t>(n));
  std::vector<double> buf(static_cast<std::size_t>(label_map.dimension()));
  for (int i = 0; i < n; ++i) {
    auto u = static_cast<std::size_t>(i);
    label_map.encode_into(records[u], locations[u], buf);
    double eta = cfg.fx.intercept;
    for (std::size_t j = 0; j < buf.size(); ++j) eta += coef[j] * buf[j];
    labels[u] = label_rng.bernoulli(sigmoid(eta)) ? 1.0 : 0.0;
  }

  // Forest regression of the labels on covariates only.
  tabular::FeatureMap cov_map = tabular::FeatureMap::fit(
      schema, records, tabular::FeatureMode::covariates_only, L);
  int m = cov_map.dimension();
  std::vector<std::vector<double>> columns(
      static_cast<std::size_t>(m),
      std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<double> cbuf(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    cov_map.encode_into(records[static_cast<std::size_t>(i)], 0, cbuf);
    for (int j = 0; j < m; ++j)
      columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
          cbuf[static_cast<std::size_t>(j)];
  }
  trees::ColumnSet column_set(std::move(columns));
  trees::ForestParams fp;
  fp.trees = cfg.fx.rf.trees;
  fp.tree.max_depth = cfg.fx.rf.max_depth;
  fp.tree.min_leaf_weight = cfg.fx.rf.min_leaf;
  fp.tree.features_per_split = std::max(
      1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(m)))));
  trees::Forest forest =
      trees::fit_forest(column_set, labels, fp, root.child("fx-forest"));

  CausalModel model;
  model.map_ = std::move(cov_map);
  model.forest_ = std::move(forest);
  model.build_seed_ = seed;

  // Degeneracy diagnostic: constant predictions over the fitting rows.
  double lo = 0.0, hi = 0.0;
  std::vector<double> probe(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j)
      probe[static_cast<std::size_t>(j)] =
          column_set.value(j, i);
    double p = model.forest_.predict(probe);
    if (i == 0) {
      lo = hi = p;
    } else {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  model.degenerate_ = (hi - lo) < 1e-12;

  // Location effects, from a stream independent of the f_X construction.
  rng::Rng floc_rng = root.child("floc");
  model.f_loc_.resize(static_cast<std::size_t>(L));
  for (auto& v : model.f_loc_) v = floc_rng.beta(cfg.beta_a, cfg.beta_b);
  return model;
}

HistoricalSample sample_history(const CausalModel& model,
                                const EnvironmentConfig& config, int n,
                                std::uint64_t seed, Restriction restriction) {
  EnvironmentConfig cfg = config.resolved();
  cfg.validate();
  if (model.num_locations() != cfg.num_locations)
    fail("sample_history: model and config disagree on the location count");
  if (n < 1) fail("sample_history: n must be >= 1");

  HistoricalSample sample;
  sample.env_seed = model.build_seed();
  sample.sample_seed = seed;
  tabular::Dataset& data = sample.dataset;
  data.schema = cfg.schema();
  data.num_locations = cfg.num_locations;
  data.records = sample_covariates(
      cfg, n, rng::derive_seed(seed, "covariates", 0), restriction);

  rng::Rng root(seed);
  rng::Rng loc_rng = root.child("locations");
  rng::Rng out_rng = root.child("outcomes");
  std::vector<double> fx = model.f_x_batch(data.records);
  data.locations.resize(static_cast<std::size_t>(n));
  data.outcomes.resize(static_cast<std::size_t>(n));
  data.propensities.assign(static_cast<std::size_t>(n), cfg.location_probs);
  for (int i = 0; i < n; ++i) {
    auto u = static_cast<std::size_t>(i);
    int t = loc_rng.categorical(cfg.location_probs);
    data.locations[u] = t;
    double f = 0.5 * fx[u] + 0.5 * model.f_location(t);
    data.outcomes[u] = out_rng.bernoulli(f) ? 1 : 0;
  }
  data.validate();
  return sample;
}

double true_value(const CausalModel& model,
                  const std::vector<tabular::RefugeeRecord>& records,
                  const assign::Matching& matching) {
  if (matching.assignment.size() != records.size())
    fail("true_value: matching length must equal the record count");
  std::vector<double> fx = model.f_x_batch(records);
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    int t = matching.assignment[i];
    if (t < 0 || t >= model.num_locations())
      fail("true_value: matching assigns an out-of-range location");
    total += 0.5 * fx[i] + 0.5 * model.f_location(t);
  }
  return total;
}

}  // namespace curselab::envgen
