#include "curselab/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "curselab/common.hpp"
#include "curselab/rng.hpp"

namespace curselab::evaluate {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::model_based: return "model-based";
    case Method::bootstrap_model_based: return "bootstrap-model-based";
    case Method::ipw: return "ipw";
    case Method::oracle: return "oracle";
  }
  fail("method_name: unknown method");
}

PolicyEstimate make_estimate(Method method, double count, int n,
                             double observed_rate, std::uint64_t model_digest,
                             int bootstrap_index) {
  if (n < 1) fail("make_estimate: n must be >= 1");
  if (!(observed_rate > 0.0))
    fail("make_estimate: observed rate must be positive");
  PolicyEstimate e;
  e.method = method;
  e.employment_count = count;
  e.employment_rate = count / static_cast<double>(n);
  e.pct_change_vs_observed =
      100.0 * (e.employment_rate - observed_rate) / observed_rate;
  e.model_digest = model_digest;
  e.bootstrap_index = bootstrap_index;
  return e;
}

namespace {

double matched_prediction_sum(const learners::OutcomeModel& model,
                              const assign::Matching& matching,
                              const std::vector<tabular::RefugeeRecord>& records) {
  if (matching.assignment.size() != records.size())
    fail("model_based: matching length must equal the record count");
  double count = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i)
    count += model.predict(records[i], matching.assignment[i]);
  return count;
}

}  // namespace

PolicyEstimate model_based(const learners::OutcomeModel& model,
                           const assign::Matching& matching,
                           const std::vector<tabular::RefugeeRecord>& records,
                           double observed_rate) {
  double count = matched_prediction_sum(model, matching, records);
  return make_estimate(Method::model_based, count,
                       static_cast<int>(records.size()), observed_rate,
                       model.digest());
}

PolicyEstimate model_based_from_scores(
    const std::vector<std::vector<double>>& scores,
    const assign::Matching& matching, double observed_rate,
    std::uint64_t model_digest) {
  if (matching.assignment.size() != scores.size())
    fail("model_based: matching length must equal the score row count");
  double count = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int t = matching.assignment[i];
    if (t < 0 || t >= static_cast<int>(scores[i].size()))
      fail("model_based: matching assigns an out-of-range location");
    count += scores[i][static_cast<std::size_t>(t)];
  }
  return make_estimate(Method::model_based, count,
                       static_cast<int>(scores.size()), observed_rate,
                       model_digest);
}

std::vector<PolicyEstimate> bootstrap_model_based(
    const tabular::Dataset& train, const assign::Matching& matching,
    const std::vector<tabular::RefugeeRecord>& test_records,
    const BootstrapConfig& config, double observed_rate) {
  if (config.replicates < 1) fail("bootstrap: replicates must be >= 1");
  train.validate();
  if (matching.assignment.size() != test_records.size())
    fail("bootstrap: matching length must equal the test record count");
  std::size_t n = train.size();

  std::vector<PolicyEstimate> estimates(
      static_cast<std::size_t>(config.replicates));
  parallel_for(config.replicates, config.threads, [&](int b) {
    tabular::Dataset sample;
    sample.schema = train.schema;
    sample.num_locations = train.num_locations;
    if (config.identity_resample) {
      sample = train;
    } else {
      rng::Rng draw(rng::derive_seed(config.seed, "boot-sample",
                                     static_cast<std::uint64_t>(b)));
      sample.records.reserve(n);
      sample.locations.reserve(n);
      sample.outcomes.reserve(n);
      sample.propensities.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        auto i = static_cast<std::size_t>(
            draw.uniform_int(static_cast<std::uint64_t>(n)));
        sample.records.push_back(train.records[i]);
        sample.locations.push_back(train.locations[i]);
        sample.outcomes.push_back(train.outcomes[i]);
        sample.propensities.push_back(train.propensities[i]);
      }
    }
    learners::TrainConfig tc = config.train;
    tc.seed = rng::derive_seed(config.seed, "boot-fit",
                               static_cast<std::uint64_t>(b));
    try {
      auto model = learners::fit_model(sample, tc);
      double count = matched_prediction_sum(*model, matching, test_records);
      estimates[static_cast<std::size_t>(b)] = make_estimate(
          Method::bootstrap_model_based, count,
          static_cast<int>(test_records.size()), observed_rate,
          model->digest(), b);
    } catch (const Error& e) {
      fail("bootstrap replicate " + std::to_string(b) + ": " + e.what());
    }
  });
  return estimates;
}

PolicyEstimate ipw(const assign::Matching& matching,
                   const tabular::Dataset& test, double observed_rate,
                   bool self_normalized) {
  test.validate();
  std::size_t n = test.size();
  if (matching.assignment.size() != n)
    fail("ipw: matching length must equal the test size");
  double weighted = 0.0;
  double weight_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    int logged = test.locations[i];
    double p = test.propensities[i][static_cast<std::size_t>(logged)];
    if (!(p > 0.0))
      fail("ipw: nonpositive propensity at a logged assignment");
    if (matching.assignment[i] != logged) continue;
    weighted += static_cast<double>(test.outcomes[i]) / p;
    weight_total += 1.0 / p;
  }
  double count = weighted;
  if (self_normalized) {
    if (!(weight_total > 0.0))
      fail("ipw: self-normalization needs at least one agreeing assignment");
    count = static_cast<double>(n) * weighted / weight_total;
  }
  return make_estimate(Method::ipw, count, static_cast<int>(n),
                       observed_rate);
}

PolicyEstimate oracle(const envgen::CausalModel& model,
                      const std::vector<tabular::RefugeeRecord>& records,
                      const assign::Matching& matching, double observed_rate) {
  double count = envgen::true_value(model, records, matching);
  return make_estimate(Method::oracle, count,
                       static_cast<int>(records.size()), observed_rate);
}

RocResult roc_auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    fail("roc_auc: scores and labels must be nonempty and equal length");
  std::size_t n = scores.size();
  double positives = 0.0;
  for (int y : labels) {
    if (y != 0 && y != 1) fail("roc_auc: labels must be 0 or 1");
    positives += y;
  }
  double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0)
    fail("roc_auc: both classes must be present");

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] <
           scores[static_cast<std::size_t>(b)];
  });

  // Rank-sum AUC with tied scores sharing their average rank.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double tied_pos = 0.0;
    while (j < n &&
           scores[static_cast<std::size_t>(order[j])] ==
               scores[static_cast<std::size_t>(order[i])]) {
      tied_pos += labels[static_cast<std::size_t>(order[j])];
      ++j;
    }
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    rank_sum_pos += avg_rank * tied_pos;
    i = j;
  }
  RocResult result;
  result.auc = (rank_sum_pos - positives * (positives + 1.0) / 2.0) /
               (positives * negatives);

  // Threshold sweep from high scores down; one curve point per distinct
  // score plus the (0,0) start.
  result.curve.push_back(
      {scores[static_cast<std::size_t>(order[n - 1])] + 1.0, 0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  std::size_t k = n;
  while (k > 0) {
    std::size_t j = k;
    double s = scores[static_cast<std::size_t>(order[k - 1])];
    while (j > 0 && scores[static_cast<std::size_t>(order[j - 1])] == s) {
      tp += labels[static_cast<std::size_t>(order[j - 1])];
      fp += 1 - labels[static_cast<std::size_t>(order[j - 1])];
      --j;
    }
    result.curve.push_back({s, fp / negatives, tp / positives});
    k = j;
  }
  return result;
}

namespace {

std::pair<std::vector<double>, std::vector<int>> logged_scores(
    const learners::OutcomeModel& model, const tabular::Dataset& data) {
  data.validate();
  std::vector<double> scores(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    scores[i] = model.predict(data.records[i], data.locations[i]);
  return {std::move(scores), data.outcomes};
}

}  // namespace

RocResult roc_auc(const learners::OutcomeModel& model,
                  const tabular::Dataset& data) {
  auto [scores, labels] = logged_scores(model, data);
  return roc_auc(scores, labels);
}

std::vector<CalibrationBin> calibration_curve(const std::vector<double>& scores,
                                              const std::vector<int>& labels,
                                              int bins) {
  if (bins < 2) fail("calibration_curve: bins must be >= 2");
  if (scores.size() != labels.size() || scores.empty())
    fail("calibration_curve: scores and labels must be nonempty and equal length");
  std::vector<CalibrationBin> all(static_cast<std::size_t>(bins));
  double width = 1.0 / bins;
  for (int b = 0; b < bins; ++b) {
    all[static_cast<std::size_t>(b)].lo = b * width;
    all[static_cast<std::size_t>(b)].hi = (b + 1) * width;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0))
      fail("calibration_curve: score outside [0, 1]");
    int b = std::min(bins - 1, static_cast<int>(s * bins));
    auto& bin = all[static_cast<std::size_t>(b)];
    bin.mean_predicted += s;
    bin.observed_rate += labels[i];
    bin.count += 1;
  }
  std::vector<CalibrationBin> out;
  for (auto& bin : all) {
    if (bin.count == 0) continue;
    bin.mean_predicted /= bin.count;
    bin.observed_rate /= bin.count;
    out.push_back(bin);
  }
  return out;
}

std::vector<CalibrationBin> calibration_curve(
    const learners::OutcomeModel& model, const tabular::Dataset& data,
    int bins) {
  auto [scores, labels] = logged_scores(model, data);
  return calibration_curve(scores, labels, bins);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  s.min = values[0];
  s.max = values[0];
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) fail("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                    int bins) {
  if (bins < 1) fail("histogram: bins must be >= 1");
  if (values.empty()) fail("histogram: empty sample");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) return {{lo, hi, static_cast<int>(values.size())}};
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lo = lo + b * width;
    out[static_cast<std::size_t>(b)].hi = lo + (b + 1) * width;
  }
  out.back().hi = hi;
  for (double v : values) {
    int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    out[static_cast<std::size_t>(b)].count += 1;
  }
  return out;
}

}  // namespace curselab::evaluate
