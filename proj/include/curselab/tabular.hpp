#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace curselab::tabular {

enum class Kind { numeric, categorical };

/// One covariate descriptor: a named numeric range or a named category list.
struct Covariate {
  std::string name;
  Kind kind = Kind::categorical;
  std::vector<std::string> categories;  // categorical only
  double lo = 0.0;                      // numeric only
  double hi = 0.0;
};

struct CovariateSchema {
  std::vector<Covariate> covariates;

  /// Throws on duplicate names, empty category lists, or empty numeric
  /// ranges.
  void validate() const;
  int index_of(std::string_view name) const;  // -1 if absent
  int category_index(std::size_t covariate, std::string_view label) const;
  std::size_t size() const { return covariates.size(); }
};

/// One row of covariates. Numeric covariates store their value directly;
/// categorical covariates store the category index as a double. The schema
/// gives the interpretation.
struct RefugeeRecord {
  std::vector<double> values;
};

/// A labeled historical sample: covariates, realized location, binary
/// employment outcome, and the assignment propensities each row was drawn
/// under (used by the importance-weighted estimator).
struct Dataset {
  CovariateSchema schema;
  int num_locations = 0;
  std::vector<RefugeeRecord> records;
  std::vector<int> locations;
  std::vector<int> outcomes;
  std::vector<std::vector<double>> propensities;  // one row per record

  std::size_t size() const { return records.size(); }
  /// Throws if the parallel arrays disagree, a location or outcome is out of
  /// range, a record does not conform to the schema, or a propensity row is
  /// not a probability vector.
  void validate() const;
};

/// Throws unless the record's values conform to the schema (size, category
/// ranges, numeric bounds, finiteness). Error messages name the covariate.
void check_record(const CovariateSchema& schema, const RefugeeRecord& record);

enum class FeatureMode {
  covariates_only,
  covariates_plus_location,
  interactions,
};

/// Frozen encoding from (record, location) to a flat feature vector.
///
/// Layout: the covariate block first (schema order; a numeric covariate
/// contributes one standardized value, a categorical covariate contributes
/// one indicator per category, all categories kept), then the location
/// one-hot block, then covariate x location interaction terms in
/// covariate-major order. Standardization constants (mean and population
/// standard deviation of each numeric covariate) are frozen at fit time.
class FeatureMap {
 public:
  static FeatureMap fit(const CovariateSchema& schema,
                        const std::vector<RefugeeRecord>& records,
                        FeatureMode mode, int num_locations);

  int dimension() const { return dim_; }
  int covariate_block_size() const { return cov_dim_; }
  FeatureMode mode() const { return mode_; }
  int num_locations() const { return num_locations_; }
  const CovariateSchema& schema() const { return schema_; }

  /// Offset of a covariate's first feature within the covariate block.
  int covariate_offset(std::size_t covariate) const;
  double standardize_mean(std::size_t covariate) const;
  double standardize_sd(std::size_t covariate) const;

  /// Writes the encoding into `out` (size must equal dimension()).
  void encode_into(const RefugeeRecord& record, int location,
                   std::span<double> out) const;
  std::vector<double> encode(const RefugeeRecord& record, int location) const;

  /// Sparse encoding as (feature index, value) pairs, ascending by index.
  /// Equivalent to encode(); used on hot prediction paths where the dense
  /// vector is mostly zeros.
  void encode_sparse(const RefugeeRecord& record, int location,
                     std::vector<std::pair<int, double>>& out) const;

  void save(std::ostream& os) const;
  static FeatureMap load(std::istream& is);

 private:
  CovariateSchema schema_;
  FeatureMode mode_ = FeatureMode::covariates_only;
  int num_locations_ = 0;
  int dim_ = 0;
  int cov_dim_ = 0;
  std::vector<int> offsets_;   // per covariate, within the covariate block
  std::vector<double> mean_;   // per covariate; zero for categoricals
  std::vector<double> sd_;     // per covariate; one for categoricals
};

/// Seeded disjoint split into (first, second) parts with
/// |first| = ceil(fraction * n). Throws if either part would be empty.
std::pair<Dataset, Dataset> split(const Dataset& data, double fraction,
                                  std::uint64_t seed);

/// CSV round trip. Header: covariate names, "location", "outcome",
/// then "p_0".."p_{L-1}". Categorical cells hold category labels; doubles are
/// written in shortest round-trip form, so files are byte-stable.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path, const CovariateSchema& schema);

}  // namespace curselab::tabular
