#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace mpspectra {

/// A seed is a 64-bit value plus a sub-stream index. Two seeds that differ
/// in either field drive independent generators.
struct Seed {
  std::uint64_t value = 0;
  std::uint64_t stream = 0;

  /// The k-th sub-stream of this seed. Columns of a sampled matrix and
  /// trials of a Monte Carlo estimate are drawn from children.
  Seed child(std::uint64_t k) const;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// std::mt19937_64 initialised through std::seed_seq from the four 32-bit
/// halves of (value, stream).
std::mt19937_64 make_engine(Seed seed);

/// Random column x in R^p. Every model has centred coordinates with
/// E |x|^2 / p = 1.
class ColumnModel {
 public:
  enum class Kind {
    IidGaussian,
    IidRademacher,
    IidSparseSpike,
    SphereUniform,
    LinearFilter,
    ScalarMixture,
  };

  static constexpr std::size_t kDefaultFilterLength = 32;
  static constexpr double kDefaultFilterPole = 0.5;

  static ColumnModel iid_gaussian(std::size_t p);
  static ColumnModel iid_rademacher(std::size_t p);
  /// Entries +-sqrt(q) with probability 1/(2q) each, 0 otherwise.
  /// q = 0 selects q = p.
  static ColumnModel iid_sparse_spike(std::size_t p, double q = 0.0);
  /// x = sqrt(p) u with u uniform on the unit sphere.
  static ColumnModel sphere_uniform(std::size_t p);
  /// X_k = sum_j c_j eps_{k+j} with Rademacher innovations eps. The
  /// coefficients are rescaled to unit l2 norm.
  static ColumnModel linear_filter(std::size_t p, std::vector<double> coefficients);
  /// Impulse response of the all-pass filter (-r + z^-1) / (1 - r z^-1)
  /// truncated to `length` taps. Its shifts are orthonormal up to the
  /// truncated tail, so entries are uncorrelated with unit variance.
  static ColumnModel linear_filter(std::size_t p,
                                   std::size_t length = kDefaultFilterLength,
                                   double pole = kDefaultFilterPole);
  /// x = xi * y, xi^2 in {0, 2} with equal probability, y from `base`.
  static ColumnModel scalar_mixture(const ColumnModel& base);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return p_; }
  /// Same model in dimension p (sparse-spike q = p follows the dimension).
  ColumnModel with_dim(std::size_t p) const;

  /// True for models whose coordinates are i.i.d.
  bool iid_entries() const;
  double spike_q() const;
  const std::vector<double>& filter() const { return filter_; }
  const ColumnModel& base() const;

  /// max over nonzero lags of |sum_j c_j c_{j+lag}|; 0 for an exactly
  /// orthonormal filter.
  double filter_shift_defect() const;

  /// snake_case kind name used in configs and file headers.
  std::string name() const;

  /// Fills `out` (length p) from `engine`.
  void sample_into(std::span<double> out, std::mt19937_64& engine) const;

 private:
  ColumnModel(Kind kind, std::size_t p) : kind_(kind), p_(p) {}

  Kind kind_;
  std::size_t p_;
  double spike_q_ = 0.0;  // 0 means "use p"
  std::vector<double> filter_;
  std::shared_ptr<const ColumnModel> base_;
};

/// Default memory budget for sampled matrices, in doubles (1 GiB).
inline constexpr std::size_t kDefaultMaxEntries = std::size_t{1} << 27;

Eigen::VectorXd sample_column(const ColumnModel& model, Seed seed);

/// p x n matrix whose column k is sample_column(model, seed.child(k)).
/// Throws ResourceError when p * n exceeds `max_entries`.
Eigen::MatrixXd sample_matrix(const ColumnModel& model, std::size_t n, Seed seed,
                              std::size_t max_entries = kDefaultMaxEntries);

/// JSON form of a model without its dimension, e.g.
/// {"kind": "iid_sparse_spike", "q": 100} or
/// {"kind": "scalar_mixture", "base": {"kind": "iid_gaussian"}}.
nlohmann::json model_to_json(const ColumnModel& model);
/// Inverse of model_to_json; throws ConfigError on unknown kinds or bad
/// parameters.
ColumnModel model_from_json(const nlohmann::json& j, std::size_t p);

nlohmann::json seed_to_json(const Seed& seed);
/// Accepts either an integer (stream 0) or {"value": v, "stream": s}.
Seed seed_from_json(const nlohmann::json& j);

std::string to_string(const Seed& seed);

}  // namespace mpspectra
