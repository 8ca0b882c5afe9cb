#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mpspectra/mp_law.hpp"
#include "mpspectra/resolvent_identities.hpp"
#include "mpspectra/sampling.hpp"

namespace mpspectra {

/// Real symmetric PSD test matrix with |A| <= 1, stored either as a
/// diagonal or as a factor F with A = F F^T.
class TestMatrix {
 public:
  static TestMatrix diagonal(Eigen::VectorXd d);
  static TestMatrix factored(Eigen::MatrixXd F);

  Eigen::Index dim() const;
  double quadratic_form(const Eigen::VectorXd& x) const;
  double trace() const;
  double spectral_norm() const;
  Eigen::MatrixXd dense() const;

 private:
  struct Diagonal {
    Eigen::VectorXd d;
  };
  struct Factor {
    Eigen::MatrixXd F;
  };
  explicit TestMatrix(std::variant<Diagonal, Factor> storage) : storage_(std::move(storage)) {}

  std::variant<Diagonal, Factor> storage_;
};

/// Family of bounded test matrices over which condition (A) is probed.
struct TestMatrixFamily {
  enum class Kind { Identity, RandomProjection, ResolventReal, DiagonalSigns, RandomPSD };

  Kind kind = Kind::Identity;
  std::size_t p = 1;
  /// RandomProjection / RandomPSD rank; 0 selects max(1, p/2) and
  /// max(1, p/4) respectively.
  std::size_t rank = 0;
  /// ResolventReal: A = v Im (C - zI)^-1 with C = n^-1 G G^T, G Gaussian
  /// p x round(p / source_ratio).
  ComplexPoint z{1.0, 0.5};
  double source_ratio = 0.5;

  static TestMatrixFamily identity(std::size_t p);
  static TestMatrixFamily random_projection(std::size_t p, std::size_t rank = 0);
  static TestMatrixFamily resolvent_real(std::size_t p, ComplexPoint z = {1.0, 0.5},
                                         double source_ratio = 0.5);
  static TestMatrixFamily diagonal_signs(std::size_t p);
  static TestMatrixFamily random_psd(std::size_t p, std::size_t rank = 0);

  TestMatrixFamily with_dim(std::size_t p) const;
  std::string name() const;
  TestMatrix generate(Seed seed) const;
};

TestMatrixFamily family_from_name(const std::string& name, std::size_t p);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

/// Mean of ((x^T A x - tr A) / p)^2 over independent (x, A) draws; trial t
/// uses seed.child(t).
MonteCarloEstimate quadform_deviation(const ColumnModel& model, const TestMatrixFamily& family,
                                      std::size_t trials, Seed seed);

struct LindebergEstimate {
  MonteCarloEstimate monte_carlo;
  /// Closed form of (1/p) sum_k E X^2 1{|X| > eps sqrt p}; available for
  /// every i.i.d. kind.
  std::optional<double> exact;
};

/// Monte Carlo (and exact) Lindeberg ratio for the model's dimension p.
/// DomainError for models without i.i.d. entries or eps <= 0.
LindebergEstimate lindeberg_statistic(const ColumnModel& model, double epsilon,
                                      std::size_t trials, Seed seed);

/// E X^2 1{|X| > t} for the model's entry law.
double lindeberg_exact(const ColumnModel& model, double threshold);

struct OffDiagonalReport {
  /// lhs = Monte Carlo E|x^T (A - D) x|^2, rhs = 4 tr(A A*) + 3 standard errors.
  BoundReport bound;
  MonteCarloEstimate estimate;
  /// sum_{j<k} |a_jk + a_kj|^2, the exact second moment for orthonormal
  /// independent entries.
  double exact = 0.0;
  double four_trace = 0.0;
};

OffDiagonalReport offdiag_moment_check(const ColumnModel& model, const Eigen::MatrixXcd& A,
                                       std::size_t trials, Seed seed);

/// Mean of |(1/p) sum_k a_k (X_k^2 - 1)| over trials.
MonteCarloEstimate weighted_squares_check(const ColumnModel& model,
                                          std::span<const double> coefficients,
                                          std::size_t trials, Seed seed);

/// Complex Gaussian p x p matrix scaled to unit spectral norm.
Eigen::MatrixXcd random_contraction(std::size_t p, Seed seed);

enum class ConditionStatistic { QuadFormDeviation, Lindeberg, OffDiagMoment, WeightedSquares };

std::string to_string(ConditionStatistic statistic);

/// A statistic tracked across a geometric p-sweep.
struct ConditionReport {
  ColumnModel model;
  ConditionStatistic statistic;
  std::string detail;  // family name, epsilon, ...
  std::vector<std::size_t> p_grid;
  std::vector<double> estimates;
  std::vector<double> standard_errors;
  std::vector<std::optional<double>> exact;
  std::size_t trials = 0;
  Seed seed{};

  /// Each estimate <= previous + 2 (se_prev + se_next) + 1e-12.
  bool nonincreasing_within_noise() const;
  /// Last estimate below threshold and nonincreasing within noise.
  bool vanishes(double threshold) const;
};

/// quadform_deviation across p; `family.p` is replaced by each grid value.
ConditionReport sweep_quadform(const ColumnModel& model, const TestMatrixFamily& family,
                               std::span<const std::size_t> p_grid, std::size_t trials, Seed seed);
ConditionReport sweep_lindeberg(const ColumnModel& model, double epsilon,
                                std::span<const std::size_t> p_grid, std::size_t trials, Seed seed);
/// weighted_squares_check with a_k = 1.
ConditionReport sweep_weighted_squares(const ColumnModel& model,
                                       std::span<const std::size_t> p_grid, std::size_t trials,
                                       Seed seed);
/// E|x^T (A - D) x|^2 / p^2 with A = random_contraction(p).
ConditionReport sweep_offdiag(const ColumnModel& model, std::span<const std::size_t> p_grid,
                              std::size_t trials, Seed seed);

nlohmann::json to_json(const ConditionReport& report);

/// Sum of `values` by recursive halving; the order depends only on the
/// length, so reductions are reproducible.
double pairwise_sum(std::span<const double> values);

}  // namespace mpspectra
