#include "mpspectra/mp_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "mpspectra/errors.hpp"

namespace mpspectra {

namespace {

void require_positive_ratio(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    std::ostringstream msg;
    msg << "Marchenko-Pastur ratio must be positive and finite, got " << c;
    throw DomainError(msg.str());
  }
}

// Both roots of z S^2 + (z - 1 + c) S + c = 0, computed without
// cancellation: q = -(B + sign * sqrt(D)) / 2, roots q / A and C / q.
std::pair<Complex, Complex> fixed_point_roots(Complex z, double c) {
  const Complex A = z;
  const Complex B = z - 1.0 + c;
  const Complex D = B * B - 4.0 * A * c;
  Complex sq = std::sqrt(D);
  if ((std::conj(B) * sq).real() < 0.0) sq = -sq;
  const Complex q = -0.5 * (B + sq);
  return {q / A, c / q};
}

Complex upper_branch(Complex z, double c) {
  auto [r1, r2] = fixed_point_roots(z, c);
  const Complex& pick = r1.imag() >= r2.imag() ? r1 : r2;
  if (pick.imag() < 0.0) {
    std::ostringstream msg;
    msg << "no fixed-point root with Im >= 0 at z = " << z << ", c = " << c
        << " (roots " << r1 << ", " << r2 << ")";
    throw NumericalError(msg.str());
  }
  return pick;
}

}  // namespace

void ComplexPoint::require_upper_half_plane(const char* where) const {
  if (!(im_ > 0.0)) {
    std::ostringstream msg;
    msg << where << ": spectral parameter needs Im z > 0, got z = (" << re_
        << ", " << im_ << ")";
    throw DomainError(msg.str());
  }
}

MPLaw::MPLaw(double c) : c_(c) {
  require_positive_ratio(c);
  const double r = std::sqrt(c);
  a_ = (1.0 - r) * (1.0 - r);
  b_ = (1.0 + r) * (1.0 + r);
  atom_ = std::max(1.0 - 1.0 / c, 0.0);
}

double MPLaw::density(double x) const {
  if (!(x > a_) || !(x < b_)) return 0.0;
  return std::sqrt((b_ - x) * (x - a_)) / (2.0 * std::numbers::pi * c_ * x);
}

double MPLaw::continuous_mass_below(double x) const {
  if (!(x > a_)) return 0.0;
  const double width = b_ - a_;
  if (x >= b_) x = b_;
  const double t = std::clamp((x - a_) / width, 0.0, 1.0);
  const double theta_max = std::asin(std::sqrt(t));

  // dx = 2 width sin cos dtheta and sqrt((b - x)(x - a)) = width sin cos.
  const double scale = width / (std::numbers::pi * c_);
  auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    const double co = std::cos(theta);
    const double s2 = s * s;
    const double xt = a_ + width * s2;
    if (xt <= 0.0) return scale * co * co;  // a == 0 limit
    return scale * width * s2 * co * co / xt;
  };

  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, theta_max, 20, 1e-12, &error);
  if (!std::isfinite(value) || error > kQuadratureTolerance) {
    std::ostringstream msg;
    msg << "density quadrature did not converge: c = " << c_ << ", x = " << x
        << ", estimate = " << value << ", error estimate = " << error;
    throw NumericalError(msg.str());
  }
  return value;
}

double MPLaw::cdf(double x) const {
  if (x < 0.0) return 0.0;
  const double value = atom_ + continuous_mass_below(x);
  return std::clamp(value, 0.0, 1.0);
}

double MPLaw::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) {
    std::ostringstream msg;
    msg << "quantile level must lie in [0, 1], got " << u;
    throw DomainError(msg.str());
  }
  if (u <= atom_) return 0.0;
  if (u >= 1.0) return b_;
  const double target = u - atom_;
  auto f = [&](double x) { return continuous_mass_below(x) - target; };
  boost::uintmax_t iterations = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      f, a_, b_, -target, 1.0 - atom_ - target,
      boost::math::tools::eps_tolerance<double>(50), iterations);
  return 0.5 * (lo + hi);
}

StieltjesValue MPLaw::stieltjes(ComplexPoint z) const {
  if (z.im() < 0.0) {
    z.require_upper_half_plane("mp_stieltjes");
  }
  Complex S;
  if (z.im() > 0.0) {
    S = upper_branch(z.value(), c_);
  } else {
    const double x = z.re();
    if (x == 0.0 || (x >= a_ && x <= b_)) {
      std::ostringstream msg;
      msg << "mp_stieltjes: real z = " << x << " lies on the support [" << a_
          << ", " << b_ << "] or at the atom";
      throw DomainError(msg.str());
    }
    // Off the support both roots are real; follow the upper branch down to
    // the axis and keep the nearer root.
    const double eps = 1e-7 * std::max(1.0, std::abs(x));
    const Complex ref = upper_branch(Complex(x, eps), c_);
    auto [r1, r2] = fixed_point_roots(Complex(x, 0.0), c_);
    const Complex& pick = std::abs(r1 - ref) <= std::abs(r2 - ref) ? r1 : r2;
    S = Complex(pick.real(), 0.0);
  }
  return {S / c_, S};
}

Support mp_support(double c) {
  const MPLaw law(c);
  return {law.lower_edge(), law.upper_edge()};
}

double mp_atom(double c) { return MPLaw(c).atom(); }

double mp_density(double x, double c) { return MPLaw(c).density(x); }

double mp_cdf(double x, double c) { return MPLaw(c).cdf(x); }

StieltjesValue mp_stieltjes(ComplexPoint z, double c) {
  return MPLaw(c).stieltjes(z);
}

std::vector<double> mp_quantile_spectrum(const MPLaw& law, std::size_t p) {
  std::vector<double> eigenvalues(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(p);
    eigenvalues[i] = law.quantile(u);
  }
  return eigenvalues;
}

}  // namespace mpspectra
