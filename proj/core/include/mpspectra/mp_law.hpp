#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mpspectra {

using Complex = std::complex<double>;

/// Spectral parameter z. Resolvent and Stieltjes operations require
/// v = Im z > 0; the constructor does not enforce it so that real
/// off-support points can be represented for the analytic extension.
class ComplexPoint {
 public:
  constexpr ComplexPoint() = default;
  constexpr ComplexPoint(double re, double im) : re_(re), im_(im) {}
  explicit ComplexPoint(Complex z) : re_(z.real()), im_(z.imag()) {}

  constexpr double re() const { return re_; }
  constexpr double im() const { return im_; }
  /// Distance to the real axis.
  constexpr double v() const { return im_; }
  Complex value() const { return {re_, im_}; }
  bool in_upper_half_plane() const { return im_ > 0.0; }

  /// Throws DomainError unless Im z > 0.
  void require_upper_half_plane(const char* where) const;

 private:
  double re_ = 0.0;
  double im_ = 1.0;
};

/// Stieltjes transform of the law and its normalized form S = c * s.
struct StieltjesValue {
  Complex s;
  Complex S;
};

struct Support {
  double a;
  double b;
};

/// Absolute tolerance of every quadrature performed on the density.
inline constexpr double kQuadratureTolerance = 1e-8;

Support mp_support(double c);
double mp_atom(double c);
/// Continuous part of the law only; the atom at 0 is excluded.
double mp_density(double x, double c);
double mp_cdf(double x, double c);
StieltjesValue mp_stieltjes(ComplexPoint z, double c);

/// The Marchenko-Pastur law with ratio c:
///
///   (1 - 1/c)^+ delta_0 + sqrt((b - x)(x - a)) / (2 pi c x) dx on [a, b],
///
/// with a = (1 - sqrt c)^2 and b = (1 + sqrt c)^2.
class MPLaw {
 public:
  explicit MPLaw(double c);

  double ratio() const { return c_; }
  double lower_edge() const { return a_; }
  double upper_edge() const { return b_; }
  double atom() const { return atom_; }

  double density(double x) const;

  /// atom * 1{x >= 0} plus the integral of the density over [a, min(x, b)].
  /// The integral is evaluated by adaptive Gauss-Kronrod quadrature after
  /// the substitution x = a + (b - a) sin^2(theta), which removes both
  /// square-root edge singularities. Throws NumericalError when the error
  /// estimate exceeds kQuadratureTolerance.
  double cdf(double x) const;

  /// Mass of the continuous part on [a, x] (no atom).
  double continuous_mass_below(double x) const;

  /// Smallest x with cdf(x) >= u, for u in [0, 1]. Levels at or below the
  /// atom map to 0.
  double quantile(double u) const;

  /// Root of z S^2 + (z - 1 + c) S + c = 0 with Im S >= 0 for Im z > 0.
  /// Real z outside [a, b] (and z != 0) take the root continuous with the
  /// upper half-plane branch.
  StieltjesValue stieltjes(ComplexPoint z) const;

 private:
  double c_;
  double a_;
  double b_;
  double atom_;
};

/// Eigenvalues placed at the law's quantiles of levels (i - 1/2)/p,
/// i = 1..p, sorted ascending.
std::vector<double> mp_quantile_spectrum(const MPLaw& law, std::size_t p);

}  // namespace mpspectra
