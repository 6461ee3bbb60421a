#include "curselab/expt.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <utility>

#include "curselab/assign.hpp"
#include "curselab/common.hpp"
#include "curselab/rng.hpp"

namespace curselab::expt {

namespace {

constexpr int kCalibrationBins = 10;

/// Canonical method-label order for summary and histogram files.
const char* const kLabelOrder[] = {"model-based", "ipw", "oracle",
                                   "bootstrap-model-based", "ipw-shuffled"};

bool valid_family_tag(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

double mean_outcome(const std::vector<int>& outcomes) {
  if (outcomes.empty()) fail("mean_outcome: empty outcome vector");
  double sum = 0.0;
  for (int y : outcomes) sum += y;
  return sum / static_cast<double>(outcomes.size());
}

}  // namespace

void RunConfig::validate() const {
  env.resolved().validate();
  if (n_train < 1) fail("run config: n_train must be positive");
  if (n_test < 1) fail("run config: n_test must be positive");
  if (replications < 1) fail("run config: replications must be positive");
  if (bootstraps < 0) fail("run config: bootstraps must be nonnegative");
  if (threads < 1) fail("run config: threads must be positive");
  if (histogram_bins < 1) fail("run config: histogram_bins must be positive");
  if (diag_n < 2) fail("run config: diag_n must be at least 2");
  if (out_dir.empty()) fail("run config: out_dir must be set");
  if (learners.empty()) fail("run config: at least one learner family");
  for (const auto& entry : learners) {
    if (!valid_family_tag(entry.name))
      fail("run config: learner name '" + entry.name +
           "' must be nonempty [A-Za-z0-9_-]");
    entry.train.resolved();  // throws on bad hyperparameters
  }
  for (std::size_t i = 0; i < learners.size(); ++i)
    for (std::size_t j = i + 1; j < learners.size(); ++j)
      if (learners[i].name == learners[j].name)
        fail("run config: duplicate learner name '" + learners[i].name + "'");
}

std::vector<LearnerEntry> default_learners() {
  std::vector<LearnerEntry> entries(3);
  entries[0].name = "lasso-logit";
  entries[0].train.family = learners::Family::lasso_logit;
  entries[1].name = "honest-rf";
  entries[1].train.family = learners::Family::honest_rf;
  entries[2].name = "gbm";
  entries[2].train.family = learners::Family::gbm;
  return entries;
}

RunConfig full_preset() {
  RunConfig config;
  config.env = envgen::default_environment();
  config.learners = default_learners();
  return config;
}

RunConfig desk_preset() {
  RunConfig config = full_preset();
  config.n_train = 8000;
  config.n_test = 500;
  config.replications = 50;
  config.bootstraps = 50;
  return config;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail("config key " + key + ": expected true/false, got '" + value + "'");
}

int parse_int(const std::string& value, const std::string& key) {
  long v = 0;
  try {
    v = parse_long(value);
  } catch (const std::exception&) {
    fail("config key " + key + ": expected an integer, got '" + value + "'");
  }
  if (v < -2147483647L || v > 2147483647L)
    fail("config key " + key + ": value out of range");
  return static_cast<int>(v);
}

double parse_real(const std::string& value, const std::string& key) {
  try {
    return parse_double(value);
  } catch (const std::exception&) {
    fail("config key " + key + ": expected a number, got '" + value + "'");
  }
}

void apply_env_key(envgen::EnvironmentConfig& env, const std::string& key,
                   const std::string& value) {
  if (key == "num_locations")
    env.num_locations = parse_int(value, key);
  else if (key == "beta_a")
    env.beta_a = parse_real(value, key);
  else if (key == "beta_b")
    env.beta_b = parse_real(value, key);
  else if (key == "free_case_boost")
    env.free_case_boost = parse_real(value, key);
  else if (key == "coef_scale")
    env.fx.coef_scale = parse_real(value, key);
  else if (key == "fx_intercept")
    env.fx.intercept = parse_real(value, key);
  else if (key == "fx_n_fit")
    env.fx.n_fit = parse_int(value, key);
  else if (key == "fx_trees")
    env.fx.rf.trees = parse_int(value, key);
  else if (key == "fx_max_depth")
    env.fx.rf.max_depth = parse_int(value, key);
  else if (key == "fx_min_leaf")
    env.fx.rf.min_leaf = parse_real(value, key);
  else if (key == "location_probs") {
    env.location_probs.clear();
    for (const auto& field : split_csv_line(value))
      env.location_probs.push_back(parse_real(trim(field), key));
  } else
    fail("config: unknown [env] key '" + key + "'");
}

void apply_learner_key(LearnerEntry& entry, const std::string& key,
                       const std::string& value) {
  if (key == "family")
    entry.train.family = learners::parse_family(value);
  else if (key == "lambda")
    entry.train.lambda = parse_real(value, key);
  else if (key == "cv_folds")
    entry.train.cv_folds = parse_int(value, key);
  else if (key == "trees")
    entry.train.trees = parse_int(value, key);
  else if (key == "depth")
    entry.train.depth = parse_int(value, key);
  else if (key == "learning_rate")
    entry.train.learning_rate = parse_real(value, key);
  else if (key == "min_leaf")
    entry.train.min_leaf = parse_real(value, key);
  else if (key == "honesty_fraction")
    entry.train.honesty_fraction = parse_real(value, key);
  else
    fail("config: unknown learner key '" + key + "'");
}

void apply_run_key(RunConfig& config, const std::string& key,
                   const std::string& value) {
  if (key == "n_train")
    config.n_train = parse_int(value, key);
  else if (key == "n_test")
    config.n_test = parse_int(value, key);
  else if (key == "replications")
    config.replications = parse_int(value, key);
  else if (key == "bootstraps")
    config.bootstraps = parse_int(value, key);
  else if (key == "master_seed")
    config.master_seed = static_cast<std::uint64_t>(parse_long(value));
  else if (key == "out_dir")
    config.out_dir = value;
  else if (key == "threads")
    config.threads = parse_int(value, key);
  else if (key == "histogram_bins")
    config.histogram_bins = parse_int(value, key);
  else if (key == "refit_per_rep")
    config.refit_per_rep = parse_bool(value, key);
  else if (key == "diag_n")
    config.diag_n = parse_int(value, key);
  else
    fail("config: unknown [run] key '" + key + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const RunConfig& base) {
  RunConfig config = base;
  std::istringstream is(text);
  std::string line, section;
  bool learners_cleared = false;
  LearnerEntry* entry = nullptr;
  // Entries whose family is implied by the section name rather than an
  // explicit `family =` key; resolved after the whole file is read.
  std::vector<char> family_implicit(config.learners.size(), 0);
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        fail("config line " + std::to_string(line_no) +
             ": unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      entry = nullptr;
      if (section == "env" || section == "run") continue;
      if (section.rfind("learners.", 0) == 0) {
        std::string name = section.substr(9);
        if (!valid_family_tag(name))
          fail("config line " + std::to_string(line_no) +
               ": bad learner name '" + name + "'");
        if (!learners_cleared) {
          config.learners.clear();
          family_implicit.clear();
          learners_cleared = true;
        }
        config.learners.push_back({name, {}});
        family_implicit.push_back(1);
        entry = &config.learners.back();
        continue;
      }
      fail("config line " + std::to_string(line_no) + ": unknown section [" +
           section + "]");
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(line_no) +
           ": expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      fail("config line " + std::to_string(line_no) + ": empty key");
    if (section == "env")
      apply_env_key(config.env, key, value);
    else if (section == "run")
      apply_run_key(config, key, value);
    else if (entry != nullptr) {
      apply_learner_key(*entry, key, value);
      if (key == "family") family_implicit[config.learners.size() - 1] = 0;
    } else
      fail("config line " + std::to_string(line_no) +
           ": key outside any section");
  }
  for (std::size_t i = 0; i < config.learners.size(); ++i)
    if (family_implicit[i])
      config.learners[i].train.family =
          learners::parse_family(config.learners[i].name);
  return config;
}

RunConfig load_run_config(const std::string& path, const RunConfig& base) {
  std::ifstream is(path);
  if (!is) fail("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str(), base);
}

std::string summary_label(const evaluate::PolicyEstimate& estimate) {
  if (estimate.method == evaluate::Method::ipw && estimate.bootstrap_index >= 0)
    return "ipw-shuffled";
  return std::string(evaluate::method_name(estimate.method));
}

namespace {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

/// INI rendering of a config; parsing it back over the same base
/// reproduces the config. Doubles round-trip through format_double.
std::string render_config(const RunConfig& config) {
  std::ostringstream os;
  os << "[env]\n";
  os << "num_locations = " << config.env.num_locations << '\n';
  if (!config.env.location_probs.empty()) {
    std::vector<std::string> fields;
    for (double p : config.env.location_probs)
      fields.push_back(format_double(p));
    os << "location_probs = " << join_csv(fields) << '\n';
  }
  os << "beta_a = " << format_double(config.env.beta_a) << '\n';
  os << "beta_b = " << format_double(config.env.beta_b) << '\n';
  os << "free_case_boost = " << format_double(config.env.free_case_boost)
     << '\n';
  os << "coef_scale = " << format_double(config.env.fx.coef_scale) << '\n';
  os << "fx_intercept = " << format_double(config.env.fx.intercept) << '\n';
  os << "fx_n_fit = " << config.env.fx.n_fit << '\n';
  os << "fx_trees = " << config.env.fx.rf.trees << '\n';
  os << "fx_max_depth = " << config.env.fx.rf.max_depth << '\n';
  os << "fx_min_leaf = " << format_double(config.env.fx.rf.min_leaf) << '\n';
  for (const auto& entry : config.learners) {
    os << "\n[learners." << entry.name << "]\n";
    os << "family = " << learners::family_name(entry.train.family) << '\n';
    os << "lambda = " << format_double(entry.train.lambda) << '\n';
    os << "cv_folds = " << entry.train.cv_folds << '\n';
    os << "trees = " << entry.train.trees << '\n';
    os << "depth = " << entry.train.depth << '\n';
    os << "learning_rate = " << format_double(entry.train.learning_rate)
       << '\n';
    os << "min_leaf = " << format_double(entry.train.min_leaf) << '\n';
    os << "honesty_fraction = " << format_double(entry.train.honesty_fraction)
       << '\n';
  }
  os << "\n[run]\n";
  os << "n_train = " << config.n_train << '\n';
  os << "n_test = " << config.n_test << '\n';
  os << "replications = " << config.replications << '\n';
  os << "bootstraps = " << config.bootstraps << '\n';
  os << "master_seed = " << config.master_seed << '\n';
  os << "out_dir = " << config.out_dir << '\n';
  os << "threads = " << config.threads << '\n';
  os << "histogram_bins = " << config.histogram_bins << '\n';
  os << "refit_per_rep = " << (config.refit_per_rep ? "true" : "false")
     << '\n';
  os << "diag_n = " << config.diag_n << '\n';
  return os.str();
}

/// Per-replication worker output; slot 0 additionally keeps the matching
/// that the bootstrap and shuffled-IPW stages evaluate.
struct RepOutput {
  bool ok = false;
  std::string error;
  std::vector<evaluate::PolicyEstimate> direct;
  assign::Matching matching;
  double observed_rate = 0.0;
};

/// One shuffled-assignment evaluation draw: the observed location multiset
/// permuted across refugees, with outcomes regenerated from the truth at
/// the new locations. Covariates and propensities stay fixed.
struct ShuffleDraw {
  std::vector<int> locations;
  std::vector<int> outcomes;
};

std::vector<ShuffleDraw> make_shuffle_draws(
    const envgen::CausalModel& world, const envgen::HistoricalSample& test0,
    int count, std::uint64_t master_seed) {
  int n = static_cast<int>(test0.dataset.size());
  std::vector<double> fx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    fx[static_cast<std::size_t>(i)] =
        world.f_x(test0.dataset.records[static_cast<std::size_t>(i)]);
  std::vector<ShuffleDraw> draws(static_cast<std::size_t>(count));
  for (int b = 0; b < count; ++b) {
    rng::Rng rng(rng::derive_seed(master_seed, "shuffle",
                                  static_cast<std::uint64_t>(b)));
    std::vector<int> perm = rng.permutation(n);
    ShuffleDraw& draw = draws[static_cast<std::size_t>(b)];
    draw.locations.resize(static_cast<std::size_t>(n));
    draw.outcomes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int t = test0.dataset
                  .locations[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      draw.locations[static_cast<std::size_t>(i)] = t;
      double f = 0.5 * fx[static_cast<std::size_t>(i)] +
                 0.5 * world.f_location(t);
      draw.outcomes[static_cast<std::size_t>(i)] = rng.bernoulli(f) ? 1 : 0;
    }
  }
  return draws;
}

}  // namespace

RunResult run_protocol(const RunConfig& config) {
  config.validate();
  auto t_start = std::chrono::steady_clock::now();

  envgen::EnvironmentConfig env = config.env.resolved();
  std::uint64_t env_seed = rng::derive_seed(config.master_seed, "env", 0);
  envgen::CausalModel world = envgen::build_causal_model(env, env_seed);

  RunResult result;
  result.env_digest = envgen::environment_digest(env, env_seed);

  envgen::HistoricalSample train = envgen::sample_history(
      world, env, config.n_train,
      rng::derive_seed(config.master_seed, "train", 0),
      envgen::Restriction::any);

  envgen::HistoricalSample diag = envgen::sample_history(
      world, env, config.diag_n, rng::derive_seed(config.master_seed, "diag", 0),
      envgen::Restriction::any);
  {
    std::vector<double> truth_scores(diag.dataset.size());
    for (std::size_t i = 0; i < diag.dataset.size(); ++i)
      truth_scores[i] =
          world.value(diag.dataset.records[i], diag.dataset.locations[i]);
    result.truth_calibration = evaluate::calibration_curve(
        truth_scores, diag.dataset.outcomes, kCalibrationBins);
  }

  envgen::HistoricalSample test0 = envgen::sample_history(
      world, env, config.n_test, rng::derive_seed(config.master_seed, "test", 0),
      envgen::Restriction::free_only);
  std::vector<ShuffleDraw> shuffle_draws =
      config.bootstraps > 0
          ? make_shuffle_draws(world, test0, config.bootstraps,
                               config.master_seed)
          : std::vector<ShuffleDraw>{};

  for (std::size_t findex = 0; findex < config.learners.size(); ++findex) {
    const LearnerEntry& entry = config.learners[findex];
    FamilyResult fam;
    fam.name = entry.name;
    try {
      learners::TrainConfig tc = entry.train;
      tc.seed = rng::derive_seed(config.master_seed, "fit",
                                 static_cast<std::uint64_t>(findex));

      std::unique_ptr<learners::OutcomeModel> shared_model;
      std::uint64_t shared_digest = 0;
      if (!config.refit_per_rep) {
        shared_model = learners::fit_model(train.dataset, tc);
        shared_digest = shared_model->digest();
      }
      std::unique_ptr<learners::OutcomeModel> rep0_model;

      std::vector<RepOutput> slots(
          static_cast<std::size_t>(config.replications));
      parallel_for(config.replications, config.threads, [&](int k) {
        RepOutput& out = slots[static_cast<std::size_t>(k)];
        try {
          envgen::HistoricalSample test = envgen::sample_history(
              world, env, config.n_test,
              rng::derive_seed(config.master_seed, "test",
                               static_cast<std::uint64_t>(k)),
              envgen::Restriction::free_only);

          const learners::OutcomeModel* model = shared_model.get();
          std::uint64_t digest = shared_digest;
          std::unique_ptr<learners::OutcomeModel> own;
          if (config.refit_per_rep) {
            envgen::HistoricalSample train_k = envgen::sample_history(
                world, env, config.n_train,
                rng::derive_seed(config.master_seed, "train",
                                 static_cast<std::uint64_t>(k)),
                envgen::Restriction::any);
            learners::TrainConfig tck = tc;
            tck.seed =
                rng::derive_seed(tc.seed, "rep", static_cast<std::uint64_t>(k));
            own = learners::fit_model(train_k.dataset, tck);
            digest = own->digest();
            model = own.get();
          }

          assign::AssignmentInstance instance;
          instance.scores = learners::score_matrix(*model, test.dataset.records);
          instance.capacities = assign::capacities_from_observed(test.dataset);
          assign::SolveResult sol = assign::solve(instance);

          double observed = mean_outcome(test.dataset.outcomes);
          if (!(observed > 0.0))
            fail("observed employment rate is zero; cannot normalize");

          out.direct.push_back(evaluate::model_based_from_scores(
              instance.scores, sol.matching, observed, digest));
          out.direct.push_back(
              evaluate::ipw(sol.matching, test.dataset, observed));
          out.direct.push_back(evaluate::oracle(world, test.dataset.records,
                                                sol.matching, observed));
          if (k == 0) {
            out.matching = sol.matching;
            out.observed_rate = observed;
            if (config.refit_per_rep) rep0_model = std::move(own);
          }
          out.ok = true;
        } catch (const std::exception& e) {
          out.ok = false;
          out.error = e.what();
        }
      });

      const learners::OutcomeModel* model0 =
          config.refit_per_rep ? rep0_model.get() : shared_model.get();
      if (model0 != nullptr) {
        fam.model_digest = model0->digest();
        fam.notes = model0->notes();
        try {
          fam.roc = evaluate::roc_auc(*model0, diag.dataset);
        } catch (const std::exception& e) {
          fam.notes.push_back(std::string("roc diagnostics failed: ") +
                              e.what());
        }
        try {
          fam.calibration = evaluate::calibration_curve(*model0, diag.dataset,
                                                        kCalibrationBins);
        } catch (const std::exception& e) {
          fam.notes.push_back(std::string("calibration diagnostics failed: ") +
                              e.what());
        }
      }

      for (int k = 0; k < config.replications; ++k) {
        const RepOutput& out = slots[static_cast<std::size_t>(k)];
        if (!out.ok) {
          result.errors.push_back("family " + entry.name + " replication " +
                                  std::to_string(k) + ": " + out.error);
          continue;
        }
        for (const auto& est : out.direct)
          result.rows.push_back({entry.name, k, est});

        if (k == 0 && config.bootstraps > 0 && model0 != nullptr) {
          evaluate::BootstrapConfig bc;
          bc.train = tc;
          bc.replicates = config.bootstraps;
          bc.seed = rng::derive_seed(config.master_seed, "bootstrap",
                                     static_cast<std::uint64_t>(findex));
          bc.threads = config.threads;
          // Bootstrap refits reuse the penalty the original lasso fit
          // selected, so replicates measure resampling noise only.
          if (bc.train.family == learners::Family::lasso_logit &&
              bc.train.lambda < 0.0) {
            auto* lasso =
                dynamic_cast<const learners::LassoLogitModel*>(model0);
            if (lasso != nullptr) bc.train.lambda = lasso->selected_lambda();
          }
          try {
            std::vector<evaluate::PolicyEstimate> boots =
                evaluate::bootstrap_model_based(train.dataset, out.matching,
                                                test0.dataset.records, bc,
                                                out.observed_rate);
            for (const auto& est : boots)
              result.rows.push_back({entry.name, k, est});
          } catch (const std::exception& e) {
            result.errors.push_back("family " + entry.name +
                                    " bootstrap stage: " + e.what());
          }

          for (int b = 0; b < config.bootstraps; ++b) {
            const ShuffleDraw& draw =
                shuffle_draws[static_cast<std::size_t>(b)];
            tabular::Dataset shuffled = test0.dataset;
            shuffled.locations = draw.locations;
            shuffled.outcomes = draw.outcomes;
            double draw_observed = mean_outcome(shuffled.outcomes);
            if (!(draw_observed > 0.0)) {
              result.errors.push_back("family " + entry.name +
                                      " shuffled ipw draw " +
                                      std::to_string(b) +
                                      ": regenerated outcomes are all zero");
              continue;
            }
            evaluate::PolicyEstimate est =
                evaluate::ipw(out.matching, shuffled, draw_observed);
            est.bootstrap_index = b;
            result.rows.push_back({entry.name, k, est});
          }
        }
      }
    } catch (const std::exception& e) {
      result.errors.push_back("family " + entry.name + " fit: " + e.what());
    }
    result.families.push_back(std::move(fam));
  }

  auto t_end = std::chrono::steady_clock::now();
  result.wall_seconds =
      std::chrono::duration<double>(t_end - t_start).count();
  return result;
}

namespace {

/// Lightweight row view used by both the in-memory writer and the
/// estimates.csv rebuilder.
struct PctRow {
  std::string family;
  std::string label;
  double pct = 0.0;
};

struct PctGroup {
  std::string family;
  std::string label;
  std::vector<double> values;
};

std::vector<PctGroup> collect_groups(const std::vector<PctRow>& rows) {
  std::vector<std::string> families;
  for (const auto& row : rows)
    if (std::find(families.begin(), families.end(), row.family) ==
        families.end())
      families.push_back(row.family);

  std::vector<PctGroup> groups;
  for (const auto& family : families) {
    for (const char* label : kLabelOrder) {
      PctGroup group;
      group.family = family;
      group.label = label;
      for (const auto& row : rows)
        if (row.family == family && row.label == label)
          group.values.push_back(row.pct);
      if (!group.values.empty()) groups.push_back(std::move(group));
    }
  }
  return groups;
}

void write_report_files(const std::vector<PctGroup>& groups,
                        const std::string& out_dir, int bins) {
  std::ofstream hist(out_dir + "/histograms.csv");
  if (!hist) fail("cannot open " + out_dir + "/histograms.csv");
  hist << "family,method,bin_lo,bin_hi,count\n";
  for (const auto& group : groups) {
    for (const auto& bin : evaluate::histogram(group.values, bins))
      hist << group.family << ',' << group.label << ','
           << format_double(bin.lo) << ',' << format_double(bin.hi) << ','
           << bin.count << '\n';
  }
  if (!hist) fail("write failed for histograms.csv");

  std::ofstream sum(out_dir + "/summary.csv");
  if (!sum) fail("cannot open " + out_dir + "/summary.csv");
  sum << "family,method,n,mean,sd,bias_vs_oracle\n";
  for (const auto& group : groups) {
    evaluate::Summary s = evaluate::summarize(group.values);
    double oracle_mean = 0.0;
    bool have_oracle = false;
    for (const auto& other : groups)
      if (other.family == group.family && other.label == "oracle") {
        oracle_mean = evaluate::summarize(other.values).mean;
        have_oracle = true;
      }
    std::string bias =
        have_oracle ? format_double(s.mean - oracle_mean) : std::string("nan");
    sum << group.family << ',' << group.label << ',' << s.n << ','
        << format_double(s.mean) << ',' << format_double(s.sd) << ',' << bias
        << '\n';
  }
  if (!sum) fail("write failed for summary.csv");
}

void write_calibration_csv(const std::vector<evaluate::CalibrationBin>& bins,
                           const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("cannot open " + path);
  os << "bin_lo,bin_hi,mean_predicted,observed_rate,count\n";
  for (const auto& bin : bins)
    os << format_double(bin.lo) << ',' << format_double(bin.hi) << ','
       << format_double(bin.mean_predicted) << ','
       << format_double(bin.observed_rate) << ',' << bin.count << '\n';
  if (!os) fail("write failed for " + path);
}

}  // namespace

void write_outputs(const RunResult& result, const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir + "/diagnostics");

  {
    std::ofstream os(config.out_dir + "/estimates.csv");
    if (!os) fail("cannot open " + config.out_dir + "/estimates.csv");
    os << "family,replication,method,bootstrap_index,count,rate,pct_change\n";
    for (const auto& row : result.rows) {
      const auto& est = row.estimate;
      os << row.family << ',' << row.replication << ','
         << evaluate::method_name(est.method) << ',' << est.bootstrap_index
         << ',' << format_double(est.employment_count) << ','
         << format_double(est.employment_rate) << ','
         << format_double(est.pct_change_vs_observed) << '\n';
    }
    if (!os) fail("write failed for estimates.csv");
  }

  std::vector<PctRow> pct_rows;
  pct_rows.reserve(result.rows.size());
  for (const auto& row : result.rows)
    pct_rows.push_back({row.family, summary_label(row.estimate),
                        row.estimate.pct_change_vs_observed});
  write_report_files(collect_groups(pct_rows), config.out_dir,
                     config.histogram_bins);

  for (const auto& fam : result.families) {
    if (!fam.roc.curve.empty()) {
      std::ofstream os(config.out_dir + "/diagnostics/roc_" + fam.name +
                       ".csv");
      if (!os) fail("cannot open roc csv for " + fam.name);
      os << "threshold,fpr,tpr\n";
      for (const auto& point : fam.roc.curve)
        os << format_double(point.threshold) << ',' << format_double(point.fpr)
           << ',' << format_double(point.tpr) << '\n';
      if (!os) fail("write failed for roc csv of " + fam.name);
    }
    if (!fam.calibration.empty())
      write_calibration_csv(fam.calibration, config.out_dir +
                                                 "/diagnostics/calibration_" +
                                                 fam.name + ".csv");
  }
  if (!result.truth_calibration.empty())
    write_calibration_csv(result.truth_calibration,
                          config.out_dir + "/diagnostics/calibration_truth.csv");

  {
    std::ofstream os(config.out_dir + "/run_manifest.txt");
    if (!os) fail("cannot open run_manifest.txt");
    os << "run manifest\n";
    os << "environment digest: " << hex64(result.env_digest) << "\n";
    for (const auto& fam : result.families) {
      os << "family " << fam.name << ": model digest "
         << hex64(fam.model_digest) << ", auc " << format_double(fam.roc.auc)
         << "\n";
      for (const auto& note : fam.notes)
        os << "  note: " << note << "\n";
    }
    os << "errors: " << result.errors.size() << "\n";
    for (const auto& err : result.errors) os << "  " << err << "\n";
    os << "wall seconds: " << format_double(result.wall_seconds) << "\n";
    os << "\nconfig:\n" << render_config(config);
    if (!os) fail("write failed for run_manifest.txt");
  }
}

void rebuild_reports(const std::string& estimates_path,
                     const std::string& out_dir, int bins) {
  std::ifstream is(estimates_path);
  if (!is) fail("cannot open " + estimates_path);
  std::string line;
  if (!std::getline(is, line)) fail("empty estimates file " + estimates_path);
  if (line != "family,replication,method,bootstrap_index,count,rate,pct_change")
    fail("unexpected estimates header: " + line);

  std::vector<PctRow> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 7)
      fail("estimates line " + std::to_string(line_no) +
           ": expected 7 fields");
    long index = parse_long(fields[3]);
    std::string label = fields[2];
    if (label == "ipw" && index >= 0) label = "ipw-shuffled";
    rows.push_back({fields[0], label, parse_double(fields[6])});
  }
  std::filesystem::create_directories(out_dir);
  write_report_files(collect_groups(rows), out_dir, bins);
}

}  // namespace curselab::expt
