#include "curselab/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "curselab/common.hpp"
#include "curselab/rng.hpp"

namespace curselab::tabular {

void CovariateSchema::validate() const {
  if (covariates.empty()) fail("schema: no covariates");
  std::set<std::string> names;
  for (const auto& c : covariates) {
    if (c.name.empty()) fail("schema: covariate with empty name");
    if (!names.insert(c.name).second)
      fail("schema: duplicate covariate name '" + c.name + "'");
    if (c.kind == Kind::categorical) {
      if (c.categories.empty())
        fail("schema: categorical covariate '" + c.name + "' has no categories");
      std::set<std::string> cats(c.categories.begin(), c.categories.end());
      if (cats.size() != c.categories.size())
        fail("schema: duplicate category in covariate '" + c.name + "'");
    } else {
      if (!(c.lo < c.hi))
        fail("schema: numeric covariate '" + c.name + "' has empty range");
    }
  }
}

int CovariateSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < covariates.size(); ++i)
    if (covariates[i].name == name) return static_cast<int>(i);
  return -1;
}

int CovariateSchema::category_index(std::size_t covariate,
                                    std::string_view label) const {
  const auto& c = covariates.at(covariate);
  for (std::size_t k = 0; k < c.categories.size(); ++k)
    if (c.categories[k] == label) return static_cast<int>(k);
  return -1;
}

void check_record(const CovariateSchema& schema, const RefugeeRecord& record) {
  if (record.values.size() != schema.covariates.size())
    fail("record: has " + std::to_string(record.values.size()) +
         " values but schema lists " + std::to_string(schema.covariates.size()) +
         " covariates");
  for (std::size_t i = 0; i < schema.covariates.size(); ++i) {
    const auto& c = schema.covariates[i];
    double v = record.values[i];
    if (!std::isfinite(v))
      fail("record: covariate '" + c.name + "' is not finite");
    if (c.kind == Kind::categorical) {
      double r = std::round(v);
      if (r != v || r < 0.0 || r >= static_cast<double>(c.categories.size()))
        fail("record: covariate '" + c.name + "' has invalid category index " +
             format_double(v));
    } else {
      if (v < c.lo || v > c.hi)
        fail("record: covariate '" + c.name + "' value " + format_double(v) +
             " outside [" + format_double(c.lo) + ", " + format_double(c.hi) +
             "]");
    }
  }
}

void Dataset::validate() const {
  schema.validate();
  if (num_locations <= 0) fail("dataset: num_locations must be positive");
  std::size_t n = records.size();
  if (locations.size() != n || outcomes.size() != n || propensities.size() != n)
    fail("dataset: parallel arrays disagree in length");
  for (std::size_t i = 0; i < n; ++i) {
    check_record(schema, records[i]);
    if (locations[i] < 0 || locations[i] >= num_locations)
      fail("dataset: row " + std::to_string(i) + " location out of range");
    if (outcomes[i] != 0 && outcomes[i] != 1)
      fail("dataset: row " + std::to_string(i) + " outcome not binary");
    const auto& p = propensities[i];
    if (static_cast<int>(p.size()) != num_locations)
      fail("dataset: row " + std::to_string(i) + " propensity length mismatch");
    double total = 0.0;
    for (double q : p) {
      if (!(q >= 0.0) || q > 1.0)
        fail("dataset: row " + std::to_string(i) + " propensity outside [0, 1]");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9)
      fail("dataset: row " + std::to_string(i) + " propensities sum to " +
           format_double(total));
    if (propensities[i][static_cast<std::size_t>(locations[i])] <= 0.0)
      fail("dataset: row " + std::to_string(i) +
           " was assigned a zero-propensity location");
  }
}

namespace {

int covariate_width(const Covariate& c) {
  return c.kind == Kind::numeric ? 1 : static_cast<int>(c.categories.size());
}

}  // namespace

FeatureMap FeatureMap::fit(const CovariateSchema& schema,
                           const std::vector<RefugeeRecord>& records,
                           FeatureMode mode, int num_locations) {
  schema.validate();
  if (records.empty()) fail("FeatureMap::fit: no records");
  if (mode != FeatureMode::covariates_only && num_locations <= 0)
    fail("FeatureMap::fit: num_locations must be positive for location modes");
  for (const auto& r : records) check_record(schema, r);

  FeatureMap map;
  map.schema_ = schema;
  map.mode_ = mode;
  map.num_locations_ = mode == FeatureMode::covariates_only ? 0 : num_locations;

  int offset = 0;
  for (const auto& c : schema.covariates) {
    map.offsets_.push_back(offset);
    offset += covariate_width(c);
  }
  map.cov_dim_ = offset;
  switch (mode) {
    case FeatureMode::covariates_only:
      map.dim_ = map.cov_dim_;
      break;
    case FeatureMode::covariates_plus_location:
      map.dim_ = map.cov_dim_ + num_locations;
      break;
    case FeatureMode::interactions:
      map.dim_ = map.cov_dim_ + num_locations + map.cov_dim_ * num_locations;
      break;
  }

  // Freeze standardization constants: mean and population standard deviation
  // of each numeric covariate over the fitting records.
  map.mean_.assign(schema.covariates.size(), 0.0);
  map.sd_.assign(schema.covariates.size(), 1.0);
  double n = static_cast<double>(records.size());
  for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
    if (schema.covariates[j].kind != Kind::numeric) continue;
    double sum = 0.0;
    for (const auto& r : records) sum += r.values[j];
    double mu = sum / n;
    double ss = 0.0;
    for (const auto& r : records) {
      double d = r.values[j] - mu;
      ss += d * d;
    }
    double sd = std::sqrt(ss / n);
    map.mean_[j] = mu;
    map.sd_[j] = sd > 0.0 ? sd : 1.0;  // constant column: leave it centered
  }
  return map;
}

int FeatureMap::covariate_offset(std::size_t covariate) const {
  return offsets_.at(covariate);
}

double FeatureMap::standardize_mean(std::size_t covariate) const {
  return mean_.at(covariate);
}

double FeatureMap::standardize_sd(std::size_t covariate) const {
  return sd_.at(covariate);
}

void FeatureMap::encode_sparse(const RefugeeRecord& record, int location,
                               std::vector<std::pair<int, double>>& out) const {
  out.clear();
  if (record.values.size() != schema_.covariates.size())
    fail("encode: record does not conform to the feature map's schema");
  bool with_location = mode_ != FeatureMode::covariates_only;
  if (with_location && (location < 0 || location >= num_locations_))
    fail("encode: location " + std::to_string(location) + " out of range");

  // Covariate block.
  for (std::size_t j = 0; j < schema_.covariates.size(); ++j) {
    const auto& c = schema_.covariates[j];
    double v = record.values[j];
    if (c.kind == Kind::numeric) {
      if (!std::isfinite(v))
        fail("encode: covariate '" + c.name + "' is not finite");
      out.emplace_back(offsets_[j], (v - mean_[j]) / sd_[j]);
    } else {
      double r = std::round(v);
      if (r != v || r < 0.0 || r >= static_cast<double>(c.categories.size()))
        fail("encode: covariate '" + c.name + "' has invalid category index");
      out.emplace_back(offsets_[j] + static_cast<int>(r), 1.0);
    }
  }
  if (!with_location) return;

  out.emplace_back(cov_dim_ + location, 1.0);
  if (mode_ != FeatureMode::interactions) return;

  // Interaction block, covariate-major: feature c of the covariate block
  // crossed with location t lives at cov_dim_ + L + c * L + t.
  int base = cov_dim_ + num_locations_;
  std::size_t cov_entries = schema_.covariates.size();
  for (std::size_t k = 0; k < cov_entries; ++k) {
    auto [idx, val] = out[k];
    out.emplace_back(base + idx * num_locations_ + location, val);
  }
}

void FeatureMap::encode_into(const RefugeeRecord& record, int location,
                             std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_)
    fail("encode: output span has wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<std::pair<int, double>> sparse;
  encode_sparse(record, location, sparse);
  for (auto [i, v] : sparse) out[static_cast<std::size_t>(i)] = v;
}

std::vector<double> FeatureMap::encode(const RefugeeRecord& record,
                                       int location) const {
  std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
  encode_into(record, location, out);
  return out;
}

void FeatureMap::save(std::ostream& os) const {
  os << "featuremap " << static_cast<int>(mode_) << ' ' << num_locations_
     << ' ' << schema_.covariates.size() << '\n';
  for (std::size_t j = 0; j < schema_.covariates.size(); ++j) {
    const auto& c = schema_.covariates[j];
    if (c.name.find_first_of(" \t\n") != std::string::npos)
      fail("FeatureMap::save: covariate name contains whitespace");
    if (c.kind == Kind::numeric) {
      os << "numeric " << c.name << ' ' << format_double(c.lo) << ' '
         << format_double(c.hi) << ' ' << format_double(mean_[j]) << ' '
         << format_double(sd_[j]) << '\n';
    } else {
      os << "categorical " << c.name << ' ' << c.categories.size();
      for (const auto& cat : c.categories) {
        if (cat.find_first_of(" \t\n") != std::string::npos)
          fail("FeatureMap::save: category label contains whitespace");
        os << ' ' << cat;
      }
      os << '\n';
    }
  }
}

FeatureMap FeatureMap::load(std::istream& is) {
  std::string tag;
  int mode_int = 0, L = 0;
  std::size_t ncov = 0;
  if (!(is >> tag >> mode_int >> L >> ncov) || tag != "featuremap")
    fail("FeatureMap::load: bad header");
  if (mode_int < 0 || mode_int > 2) fail("FeatureMap::load: bad mode");

  CovariateSchema schema;
  std::vector<double> means, sds;
  for (std::size_t j = 0; j < ncov; ++j) {
    std::string kind, name;
    if (!(is >> kind >> name)) fail("FeatureMap::load: truncated covariate");
    Covariate c;
    c.name = name;
    if (kind == "numeric") {
      c.kind = Kind::numeric;
      double mu = 0.0, sd = 1.0;
      if (!(is >> c.lo >> c.hi >> mu >> sd))
        fail("FeatureMap::load: truncated numeric covariate");
      means.push_back(mu);
      sds.push_back(sd);
    } else if (kind == "categorical") {
      c.kind = Kind::categorical;
      std::size_t k = 0;
      if (!(is >> k)) fail("FeatureMap::load: truncated category count");
      for (std::size_t i = 0; i < k; ++i) {
        std::string cat;
        if (!(is >> cat)) fail("FeatureMap::load: truncated category list");
        c.categories.push_back(cat);
      }
      means.push_back(0.0);
      sds.push_back(1.0);
    } else {
      fail("FeatureMap::load: unknown covariate kind '" + kind + "'");
    }
    schema.covariates.push_back(std::move(c));
  }

  // Rebuild layout through a single-record fit, then restore the frozen
  // standardization constants.
  std::vector<RefugeeRecord> probe(1);
  for (const auto& c : schema.covariates)
    probe[0].values.push_back(c.kind == Kind::numeric ? c.lo : 0.0);
  FeatureMap map = fit(schema, probe, static_cast<FeatureMode>(mode_int),
                       mode_int == 0 ? 1 : L);
  map.mean_ = means;
  map.sd_ = sds;
  return map;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double fraction,
                                  std::uint64_t seed) {
  std::size_t n = data.size();
  if (n < 2) fail("split: need at least two rows");
  if (!(fraction > 0.0) || !(fraction < 1.0))
    fail("split: fraction must lie strictly inside (0, 1)");
  auto first_size = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  if (first_size == 0 || first_size >= n)
    fail("split: a part would be empty");

  rng::Rng r(seed);
  std::vector<int> perm = r.permutation(static_cast<int>(n));
  std::vector<int> first_idx(perm.begin(),
                             perm.begin() + static_cast<long>(first_size));
  std::vector<int> second_idx(perm.begin() + static_cast<long>(first_size),
                              perm.end());
  // Keep original row order within each part.
  std::sort(first_idx.begin(), first_idx.end());
  std::sort(second_idx.begin(), second_idx.end());

  auto take = [&](const std::vector<int>& idx) {
    Dataset out;
    out.schema = data.schema;
    out.num_locations = data.num_locations;
    out.records.reserve(idx.size());
    for (int i : idx) {
      auto u = static_cast<std::size_t>(i);
      out.records.push_back(data.records[u]);
      out.locations.push_back(data.locations[u]);
      out.outcomes.push_back(data.outcomes[u]);
      out.propensities.push_back(data.propensities[u]);
    }
    return out;
  };
  return {take(first_idx), take(second_idx)};
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("write_csv: cannot open '" + path + "'");
  std::vector<std::string> header;
  for (const auto& c : data.schema.covariates) header.push_back(c.name);
  header.push_back("location");
  header.push_back("outcome");
  for (int t = 0; t < data.num_locations; ++t)
    header.push_back("p_" + std::to_string(t));
  os << join_csv(header) << '\n';

  std::vector<std::string> row;
  for (std::size_t i = 0; i < data.size(); ++i) {
    row.clear();
    for (std::size_t j = 0; j < data.schema.covariates.size(); ++j) {
      const auto& c = data.schema.covariates[j];
      double v = data.records[i].values[j];
      if (c.kind == Kind::categorical)
        row.push_back(c.categories[static_cast<std::size_t>(v)]);
      else
        row.push_back(format_double(v));
    }
    row.push_back(std::to_string(data.locations[i]));
    row.push_back(std::to_string(data.outcomes[i]));
    for (double p : data.propensities[i]) row.push_back(format_double(p));
    os << join_csv(row) << '\n';
  }
  if (!os) fail("write_csv: write to '" + path + "' failed");
}

Dataset read_csv(const std::string& path, const CovariateSchema& schema) {
  schema.validate();
  std::ifstream is(path);
  if (!is) fail("read_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) fail("read_csv: empty file '" + path + "'");
  auto header = split_csv_line(line);
  std::size_t ncov = schema.covariates.size();
  if (header.size() < ncov + 3)
    fail("read_csv: header too short in '" + path + "'");
  for (std::size_t j = 0; j < ncov; ++j)
    if (header[j] != schema.covariates[j].name)
      fail("read_csv: header column '" + header[j] + "' does not match schema '" +
           schema.covariates[j].name + "'");
  if (header[ncov] != "location" || header[ncov + 1] != "outcome")
    fail("read_csv: expected location,outcome after covariates");
  int L = static_cast<int>(header.size() - ncov - 2);
  for (int t = 0; t < L; ++t)
    if (header[ncov + 2 + static_cast<std::size_t>(t)] !=
        "p_" + std::to_string(t))
      fail("read_csv: bad propensity column header");

  Dataset data;
  data.schema = schema;
  data.num_locations = L;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      fail("read_csv: line " + std::to_string(lineno) + " has " +
           std::to_string(fields.size()) + " fields, expected " +
           std::to_string(header.size()));
    RefugeeRecord rec;
    for (std::size_t j = 0; j < ncov; ++j) {
      const auto& c = schema.covariates[j];
      if (c.kind == Kind::categorical) {
        int k = schema.category_index(j, fields[j]);
        if (k < 0)
          fail("read_csv: line " + std::to_string(lineno) +
               " unknown category '" + fields[j] + "' for covariate '" +
               c.name + "'");
        rec.values.push_back(static_cast<double>(k));
      } else {
        rec.values.push_back(parse_double(fields[j]));
      }
    }
    data.records.push_back(std::move(rec));
    data.locations.push_back(static_cast<int>(parse_long(fields[ncov])));
    data.outcomes.push_back(static_cast<int>(parse_long(fields[ncov + 1])));
    std::vector<double> props;
    props.reserve(static_cast<std::size_t>(L));
    for (int t = 0; t < L; ++t)
      props.push_back(parse_double(fields[ncov + 2 + static_cast<std::size_t>(t)]));
    data.propensities.push_back(std::move(props));
  }
  data.validate();
  return data;
}

}  // namespace curselab::tabular
