#include "mpspectra/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mpspectra/errors.hpp"

namespace mpspectra {

Spectrum::Spectrum(std::vector<double> eigenvalues, std::size_t n)
    : eigenvalues_(std::move(eigenvalues)), n_(n) {
  if (eigenvalues_.empty()) throw PreconditionError("spectrum needs at least one eigenvalue");
  if (n_ == 0) throw PreconditionError("spectrum needs n >= 1");
  for (double lambda : eigenvalues_) {
    if (!std::isfinite(lambda)) throw NumericalError("spectrum contains a non-finite eigenvalue");
  }
  std::sort(eigenvalues_.begin(), eigenvalues_.end());
  const double floor = -kNegativeClampTolerance * std::max(1.0, eigenvalues_.back());
  for (double& lambda : eigenvalues_) {
    if (lambda >= 0.0) break;
    if (lambda < floor) {
      std::ostringstream msg;
      msg << "eigenvalue " << lambda << " is below the PSD round-off floor " << floor;
      throw NumericalError(msg.str());
    }
    lambda = 0.0;
  }
}

double Spectrum::trace() const {
  return std::accumulate(eigenvalues_.begin(), eigenvalues_.end(), 0.0);
}

Spectrum esd(const Eigen::MatrixXd& X) {
  const Eigen::Index p = X.rows();
  const Eigen::Index n = X.cols();
  if (p < 1 || n < 1) throw PreconditionError("esd needs a matrix with p >= 1 and n >= 1");

  const bool gram = p > n;
  const Eigen::Index k = gram ? n : p;
  Eigen::MatrixXd sample(k, k);
  sample.setZero();
  if (gram) {
    sample.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / static_cast<double>(n));
  } else {
    sample.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(n));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sample, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "symmetric eigensolver failed on a " << k << " x " << k
        << " sample covariance (p = " << p << ", n = " << n
        << ", max |entry| = " << sample.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(msg.str());
  }

  std::vector<double> eigenvalues(static_cast<std::size_t>(p), 0.0);
  const Eigen::VectorXd& values = solver.eigenvalues();
  std::copy(values.data(), values.data() + k, eigenvalues.begin());
  return Spectrum(std::move(eigenvalues), static_cast<std::size_t>(n));
}

Complex empirical_stieltjes(const Spectrum& spectrum, ComplexPoint z) {
  z.require_upper_half_plane("empirical_stieltjes");
  const Complex w = z.value();
  Complex sum = 0.0;
  for (double lambda : spectrum.eigenvalues()) sum += 1.0 / (lambda - w);
  return sum / static_cast<double>(spectrum.p());
}

Complex normalized_stieltjes(const Spectrum& spectrum, ComplexPoint z) {
  z.require_upper_half_plane("normalized_stieltjes");
  const Complex w = z.value();
  Complex sum = 0.0;
  for (double lambda : spectrum.eigenvalues()) sum += 1.0 / (lambda - w);
  return sum / static_cast<double>(spectrum.n());
}

double empirical_cdf(const Spectrum& spectrum, double x) {
  const auto& values = spectrum.eigenvalues();
  const auto count = std::upper_bound(values.begin(), values.end(), x) - values.begin();
  return static_cast<double>(count) / static_cast<double>(values.size());
}

double ks_distance(const Spectrum& spectrum, const MPLaw& law) {
  const auto& values = spectrum.eigenvalues();
  const double p = static_cast<double>(values.size());
  double worst = 0.0;

  // F_c has a single jump, at 0; it is continuous everywhere else. Both
  // CDFs vanish at 0- because the spectrum is nonnegative.
  {
    const auto at_or_below_zero = std::upper_bound(values.begin(), values.end(), 0.0) - values.begin();
    const double emp = static_cast<double>(at_or_below_zero) / p;
    worst = std::abs(emp - law.cdf(0.0));
  }

  std::size_t i = 0;
  while (i < values.size()) {
    const double x = values[i];
    std::size_t j = i;
    while (j < values.size() && values[j] == x) ++j;
    const double right = law.cdf(x);
    const double left = x > 0.0 ? right : 0.0;
    worst = std::max(worst, std::abs(static_cast<double>(i) / p - left));
    worst = std::max(worst, std::abs(static_cast<double>(j) / p - right));
    i = j;
  }
  return std::min(worst, 1.0);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, const std::string& model,
                        const std::string& seed) {
  out << "# p=" << spectrum.p() << " n=" << spectrum.n() << " model=" << model
      << " seed=" << seed << "\n";
  out << "eigenvalue\n";
  out << std::setprecision(17);
  for (double lambda : spectrum.eigenvalues()) out << lambda << "\n";
}

}  // namespace mpspectra
