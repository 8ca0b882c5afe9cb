#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpspectra/mp_law.hpp"

namespace mpspectra {

/// Sorted eigenvalues of n^-1 X X^T for a p x n matrix X, i.e. the support
/// of the empirical spectral distribution (1/p) sum_i delta_{lambda_i}.
class Spectrum {
 public:
  /// Takes eigenvalues in any order; sorts them. Values in
  /// [-1e-10 max(1, lambda_max), 0) are clamped to 0, anything more
  /// negative throws NumericalError.
  Spectrum(std::vector<double> eigenvalues, std::size_t n);

  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  std::size_t p() const { return eigenvalues_.size(); }
  std::size_t n() const { return n_; }
  double ratio() const { return static_cast<double>(p()) / static_cast<double>(n_); }
  double trace() const;

 private:
  std::vector<double> eigenvalues_;
  std::size_t n_;
};

/// Relative round-off allowance below zero before an eigenvalue is treated
/// as a genuine PSD violation.
inline constexpr double kNegativeClampTolerance = 1e-10;

/// Eigenvalues of n^-1 X X^T. When p > n the n x n Gram matrix is
/// diagonalised instead and the spectrum padded with p - n exact zeros.
Spectrum esd(const Eigen::MatrixXd& X);

/// s_n(z) = (1/p) sum_i 1 / (lambda_i - z).
Complex empirical_stieltjes(const Spectrum& spectrum, ComplexPoint z);

/// S_n(z) = tr(A_n - z n I)^-1 with A_n = X X^T, which equals
/// (p/n) s_n(z) = (1/n) sum_i 1 / (lambda_i - z).
Complex normalized_stieltjes(const Spectrum& spectrum, ComplexPoint z);

/// #{i : lambda_i <= x} / p.
double empirical_cdf(const Spectrum& spectrum, double x);

/// sup_x |F_emp(x) - F_c(x)|, evaluated on both one-sided limits at every
/// jump of F_emp and at 0 (the atom of the law).
double ks_distance(const Spectrum& spectrum, const MPLaw& law);

/// One eigenvalue per line under an `eigenvalue` header, preceded by a
/// '#' comment line carrying p, n, model and seed. 17 significant digits.
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, const std::string& model,
                        const std::string& seed);

}  // namespace mpspectra
