#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mpspectra/mp_law.hpp"
#include "mpspectra/sampling.hpp"
#include "mpspectra/spectra.hpp"

namespace mpspectra {

/// Resolvent (C - w I)^-1 of a real symmetric matrix C, held as its
/// eigendecomposition so that norms, traces and quadratic forms are
/// diagonal complex arithmetic.
class SymmetricResolvent {
 public:
  explicit SymmetricResolvent(const Eigen::MatrixXd& C);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  Eigen::Index dim() const { return eigenvalues_.size(); }

  /// Spectral norm, max_i 1 / |lambda_i - w|.
  double norm(Complex w) const;
  Complex trace(Complex w) const;
  /// x^T (C - w I)^-1 x (bilinear, no conjugation).
  Complex quadratic_form(const Eigen::VectorXd& x, Complex w) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Inputs of the rank-one resolvent bounds: C real symmetric PSD, x in R^p
/// and Im z > 0.
struct ResolventProbe {
  Eigen::MatrixXd C;
  Eigen::VectorXd x;
  ComplexPoint z;

  /// Throws PreconditionError unless C is exactly symmetric, PSD up to
  /// 1e-10 relative, and sized like x; DomainError unless Im z > 0.
  void validate() const;
};

/// lhs <= rhs style report. pass iff slack >= -1e-9 max(1, |rhs|).
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;

  static BoundReport make(std::string name, double lhs, double rhs);
};

inline constexpr double kInequalitySlack = 1e-9;
inline constexpr double kIdentityTolerance = 1e-8;
inline constexpr double kTraceIdentityTolerance = 1e-7;

/// Evaluates, in order,
///   L1.1  |(C - zI)^-1| <= 1/v
///   L1.2  |tr(C + xx^T - zI)^-1 - tr(C - zI)^-1| <= 1/v
///   L1.3  |x^T (C + xx^T - zI)^-1 x| <= 1 + |z|/v
///   L1.4  Im(z + z tr(C - zI)^-1) >= v  and  Im tr(C - zI)^-1 > 0
///   L1.5  Im(z + z x^T (C - zI)^-1 x) >= v
/// The updated matrix C + xx^T is diagonalised separately.
std::vector<BoundReport> check_lemma1(const ResolventProbe& probe);

/// Largest discrepancy between four expressions of x^T (C + xx^T - zI)^-1 x,
/// with q = x^T (C - zI)^-1 x:
///   direct (diagonalising C + xx^T),  q - q^2/(1 + q),  q/(1 + q),
///   1 - z/(z + z q),
/// divided by max(1, largest modulus among them).
double sherman_morrison_gap(const ResolventProbe& probe);
BoundReport check_sherman_morrison(const ResolventProbe& probe);

/// |sum_k x_k^T (B - znI)^-1 x_k - zn tr(B - znI)^-1 - p| for the p x (n+1)
/// matrix of columns x_1..x_{n+1} and B = sum_k x_k x_k^T. The identity is
/// exact for every realization.
double trace_identity_residual(const Eigen::MatrixXd& columns, ComplexPoint z, std::size_t n);
BoundReport check_trace_identity(const Eigen::MatrixXd& columns, ComplexPoint z, std::size_t n);

/// S_n/(1 + S_n) - z S_n - p/n with S_n = normalized_stieltjes(spectrum, z).
Complex fixed_point_residual(const Spectrum& spectrum, ComplexPoint z);

/// |1 + w| >= Im(z + z w) / |z|, reported as lhs = Im(z + zw)/|z|,
/// rhs = |1 + w|.
BoundReport check_w_inequality(Complex w, ComplexPoint z);

/// Randomized verification of all rank-one identities and bounds.
struct LemmaFuzzConfig {
  std::size_t cases = 1000;
  std::size_t max_p = 8;
  double v_min = 1e-2;
  double v_max = 1e2;
  Seed seed{};
};

struct BoundTally {
  std::size_t pass = 0;
  std::size_t fail = 0;
  /// Smallest slack observed (most adverse case).
  double worst_slack = 0.0;
};

struct LemmaFuzzSummary {
  std::size_t cases = 0;
  std::map<std::string, BoundTally> bounds;  // L1.1 .. L1.5, SM, TRACE, W-INEQ
  double max_sherman_morrison_gap = 0.0;
  /// max over cases of trace_identity_residual / p.
  double max_trace_residual_per_p = 0.0;

  std::size_t lemma1_checks() const;
  std::size_t lemma1_failures() const;
  bool all_pass() const;
};

/// Draws `cases` probes: p uniform on 1..max_p, C = G G^T with G Gaussian
/// p x r (r uniform on 1..p+1), x Gaussian, Re z uniform on [-3, 3 + |C|],
/// v log-uniform on [v_min, v_max]. Each case also checks the trace
/// identity on p x (n+1) Gaussian columns and the w-inequality at w = q.
/// Throws ConfigError when cases == 0.
LemmaFuzzSummary run_lemma_fuzz(const LemmaFuzzConfig& config);

ResolventProbe random_probe(std::size_t p, double v, Seed seed);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const LemmaFuzzSummary& summary);

}  // namespace mpspectra
