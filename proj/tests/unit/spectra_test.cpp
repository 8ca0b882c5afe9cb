#include "mpspectra/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "mpspectra/errors.hpp"
#include "mpspectra/sampling.hpp"

namespace mpspectra {
namespace {

// Characteristic polynomial by Faddeev-LeVerrier, then real roots by a sign
// scan plus bisection. Only for tiny symmetric matrices.
std::vector<double> charpoly_roots(const Eigen::MatrixXd& A) {
  const Eigen::Index p = A.rows();
  std::vector<double> coeff(static_cast<std::size_t>(p) + 1, 0.0);  // coeff[k] of lambda^(p-k)
  coeff[0] = 1.0;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 1; k <= p; ++k) {
    M = A * M + coeff[static_cast<std::size_t>(k - 1)] * Eigen::MatrixXd::Identity(p, p);
    coeff[static_cast<std::size_t>(k)] = -(A * M).trace() / static_cast<double>(k);
  }
  auto poly = [&](double x) {
    double acc = 0.0;
    for (double c : coeff) acc = acc * x + c;
    return acc;
  };
  const double bound = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();
  std::vector<double> roots;
  const int steps = 200000;
  double x0 = -bound;
  double f0 = poly(x0);
  for (int i = 1; i <= steps; ++i) {
    const double x1 = -bound + 2.0 * bound * i / steps;
    const double f1 = poly(x1);
    if (f1 == 0.0) {
      roots.push_back(x1);
    } else if ((f0 < 0.0) != (f1 < 0.0) && f0 != 0.0) {
      double lo = x0, hi = x1;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((poly(mid) < 0.0) == (poly(lo) < 0.0) ? lo : hi) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

TEST(Spectrum, SortsAndClampsRoundOff) {
  const Spectrum s({3.0, -1e-12, 1.0}, 2);
  EXPECT_EQ(s.eigenvalues(), (std::vector<double>{0.0, 1.0, 3.0}));
  EXPECT_EQ(s.p(), 3u);
  EXPECT_EQ(s.n(), 2u);
  EXPECT_DOUBLE_EQ(s.ratio(), 1.5);
  EXPECT_DOUBLE_EQ(s.trace(), 4.0);
}

TEST(Spectrum, RejectsGenuineNegativesAndBadInput) {
  EXPECT_THROW(Spectrum({1.0, -1e-3}, 2), NumericalError);
  EXPECT_THROW(Spectrum({1.0, std::nan("")}, 2), NumericalError);
  EXPECT_THROW(Spectrum({}, 2), PreconditionError);
  EXPECT_THROW(Spectrum({1.0}, 0), PreconditionError);
}

TEST(Esd, TwoByTwoHandComputation) {
  // X X^T = [[5, 11], [11, 25]], n = 2: eigenvalues (15 +- sqrt(221)) / 2.
  Eigen::MatrixXd X(2, 2);
  X << 1, 2, 3, 4;
  const Spectrum s = esd(X);
  const double root = std::sqrt(221.0);
  EXPECT_NEAR(s.eigenvalues()[0], (15.0 - root) / 2.0, 1e-13);
  EXPECT_NEAR(s.eigenvalues()[1], (15.0 + root) / 2.0, 1e-13);
}

TEST(Esd, SingleColumnIsRankOne) {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 2;
  const Spectrum s = esd(X);
  EXPECT_EQ(s.eigenvalues()[0], 0.0);
  EXPECT_EQ(s.eigenvalues()[1], 0.0);
  EXPECT_NEAR(s.eigenvalues()[2], 9.0, 1e-13);
}

TEST(Esd, RejectsEmpty) {
  EXPECT_THROW(esd(Eigen::MatrixXd(0, 3)), PreconditionError);
  EXPECT_THROW(esd(Eigen::MatrixXd(3, 0)), PreconditionError);
}

TEST(EsdProperty, MatchesCharacteristicPolynomialRoots) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::size_t p : {1u, 2u, 3u, 4u}) {
      for (std::size_t n : {1u, 3u, 6u}) {
        const auto X = sample_matrix(ColumnModel::iid_gaussian(p), n, Seed{seed, p * 10 + n});
        const Spectrum s = esd(X);
        if (n < p) {
          // Rank-deficient: zeros come from the padding, not the solver.
          for (std::size_t i = 0; i < p - n; ++i) EXPECT_EQ(s.eigenvalues()[i], 0.0);
          continue;
        }
        const Eigen::MatrixXd C = X * X.transpose() / static_cast<double>(n);
        const auto roots = charpoly_roots(C);
        ASSERT_EQ(roots.size(), p) << "seed " << seed;
        for (std::size_t i = 0; i < p; ++i) {
          EXPECT_NEAR(s.eigenvalues()[i], roots[i], 1e-8 * (1.0 + roots.back()));
        }
      }
    }
  }
}

TEST(EsdProperty, TraceAndFrobeniusInvariants) {
  for (std::size_t p : {5u, 40u, 90u}) {
    const std::size_t n = 60;
    const auto X = sample_matrix(ColumnModel::iid_rademacher(p), n, Seed{1, p});
    const Spectrum s = esd(X);
    const Eigen::MatrixXd C = X * X.transpose() / static_cast<double>(n);
    EXPECT_NEAR(s.trace(), C.trace(), 1e-10 * C.trace());
    double sum_sq = 0.0;
    for (double lambda : s.eigenvalues()) sum_sq += lambda * lambda;
    EXPECT_NEAR(sum_sq, C.squaredNorm(), 1e-9 * C.squaredNorm());
    for (double lambda : s.eigenvalues()) EXPECT_GE(lambda, 0.0);
    EXPECT_TRUE(std::is_sorted(s.eigenvalues().begin(), s.eigenvalues().end()));
    if (p > n) {
      // Exactly p - n zeros from the Gram path.
      const auto zeros = std::count(s.eigenvalues().begin(), s.eigenvalues().end(), 0.0);
      EXPECT_GE(zeros, static_cast<long>(p - n));
    }
  }
}

TEST(EsdProperty, GramPathAgreesWithTranspose) {
  const auto X = sample_matrix(ColumnModel::iid_gaussian(30), 12, Seed{77, 0});
  const Spectrum tall = esd(X);                // Gram path, n = 12
  const Spectrum wide = esd(X.transpose());     // direct, p = 12, n = 30
  // X X^T / 12 and X^T X / 30 share nonzero eigenvalues up to 30/12.
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_NEAR(tall.eigenvalues()[18 + i], wide.eigenvalues()[i] * 30.0 / 12.0, 1e-10);
  }
}

TEST(EmpiricalStieltjes, HandValues) {
  const Spectrum s({0.0, 2.0}, 4);
  const ComplexPoint z(1.0, 1.0);
  // (1/(-1-i) + 1/(1-i)) / 2 = ((-1+i)/2 + (1+i)/2) / 2 = i/2
  EXPECT_NEAR(std::abs(empirical_stieltjes(s, z) - Complex(0.0, 0.5)), 0.0, 1e-15);
  // normalized: sum / n = i / 4, i.e. (p/n) s_n.
  EXPECT_NEAR(std::abs(normalized_stieltjes(s, z) - Complex(0.0, 0.25)), 0.0, 1e-15);
  EXPECT_THROW(empirical_stieltjes(s, ComplexPoint(1.0, 0.0)), DomainError);
  EXPECT_THROW(normalized_stieltjes(s, ComplexPoint(1.0, -1.0)), DomainError);
}

TEST(EmpiricalStieltjesProperty, HerglotzAndBound) {
  const auto X = sample_matrix(ColumnModel::iid_gaussian(50), 80, Seed{3, 3});
  const Spectrum s = esd(X);
  for (double re : {-1.0, 0.5, 2.0}) {
    for (double v : {1e-3, 0.1, 1.0, 10.0}) {
      const ComplexPoint z(re, v);
      const Complex sn = empirical_stieltjes(s, z);
      EXPECT_GT(sn.imag(), 0.0);
      EXPECT_LE(std::abs(sn), 1.0 / v + 1e-12);
      EXPECT_NEAR(std::abs(normalized_stieltjes(s, z) - s.ratio() * sn), 0.0,
                  1e-14 * std::abs(sn) + 1e-300);
    }
  }
}

TEST(EmpiricalCdf, RightContinuousStep) {
  const Spectrum s({0.0, 1.0, 1.0, 3.0}, 4);
  EXPECT_EQ(empirical_cdf(s, -0.5), 0.0);
  EXPECT_EQ(empirical_cdf(s, 0.0), 0.25);
  EXPECT_EQ(empirical_cdf(s, 0.999), 0.25);
  EXPECT_EQ(empirical_cdf(s, 1.0), 0.75);
  EXPECT_EQ(empirical_cdf(s, 3.0), 1.0);
  EXPECT_EQ(empirical_cdf(s, 1e9), 1.0);
}

// Brute-force KS: evaluate |F_emp - F| on a dense grid and at both sides of
// every eigenvalue (offset by a tiny amount).
double brute_force_ks(const Spectrum& s, const MPLaw& law) {
  std::vector<double> points;
  for (int k = 0; k <= 4000; ++k) points.push_back(-0.1 + (law.upper_edge() + 1.0) * k / 4000.0);
  for (double lambda : s.eigenvalues()) {
    points.push_back(lambda);
    points.push_back(lambda - 1e-12 * (1.0 + lambda));
  }
  points.push_back(0.0);
  points.push_back(-1e-300);
  double worst = 0.0;
  for (double x : points) worst = std::max(worst, std::abs(empirical_cdf(s, x) - law.cdf(x)));
  return worst;
}

TEST(KsDistance, SinglePointAtOneUnitRatio) {
  // F(1) = 1/3 + sqrt(3)/(2 pi) ~ 0.60900; the step is 0 -> 1 at 1.
  const Spectrum s({1.0}, 1);
  const double f1 = 1.0 / 3.0 + std::sqrt(3.0) / (2.0 * std::numbers::pi);
  EXPECT_NEAR(ks_distance(s, MPLaw(1.0)), std::max(f1, 1.0 - f1), 1e-10);
}

TEST(KsDistance, AtomHandling) {
  // c = 2: half the mass at 0. A spectrum with exactly half zeros.
  const MPLaw law(2.0);
  const Spectrum exact_atom({0.0, 0.0, 1.0, 3.0}, 2);
  EXPECT_NEAR(ks_distance(exact_atom, law), brute_force_ks(exact_atom, law), 1e-9);
  // Same spectrum judged against c = 0.5 (no atom): the jump at 0 costs 1/2.
  EXPECT_GE(ks_distance(exact_atom, MPLaw(0.5)), 0.5);
}

TEST(KsDistanceProperty, MatchesBruteForceAndBounds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (std::size_t p : {10u, 60u}) {
      for (double c : {0.5, 1.0, 2.0}) {
        const auto n = static_cast<std::size_t>(std::lround(p / c));
        const Spectrum s = esd(sample_matrix(ColumnModel::iid_gaussian(p), n, Seed{seed, p}));
        const MPLaw law(c);
        const double ks = ks_distance(s, law);
        EXPECT_GE(ks, 0.0);
        EXPECT_LE(ks, 1.0);
        EXPECT_NEAR(ks, brute_force_ks(s, law), 1e-8) << "p=" << p << " c=" << c;
      }
    }
  }
}

TEST(KsDistanceProperty, QuantileSpectrumIsClose) {
  for (double c : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    const MPLaw law(c);
    const std::size_t p = 400;
    const auto n = static_cast<std::size_t>(std::lround(p / c));
    const Spectrum s(mp_quantile_spectrum(law, p), n);
    // Quantiles at (i - 1/2)/p give KS = 1/(2p) for a continuous law.
    EXPECT_LE(ks_distance(s, law), 1.0 / p + 1e-9) << c;
  }
}

TEST(Esd, IdentityAndScalarCases) {
  const Spectrum identity = esd(Eigen::MatrixXd::Identity(4, 4));
  for (double lambda : identity.eigenvalues()) EXPECT_NEAR(lambda, 0.25, 1e-15);

  Eigen::MatrixXd row(1, 4);
  row << 1.0, -2.0, 0.5, 3.0;
  const Spectrum scalar = esd(row);
  ASSERT_EQ(scalar.p(), 1u);
  EXPECT_NEAR(scalar.eigenvalues()[0], (1.0 + 4.0 + 0.25 + 9.0) / 4.0, 1e-15);
}

TEST(Esd, IntegerMatrixMatchesCharacteristicPolynomial) {
  Eigen::MatrixXd X(3, 5);
  X << 2, -1, 0, 3, 1,
       1, 4, -2, 0, 2,
       -3, 1, 1, 2, 5;
  const Spectrum s = esd(X);
  const auto roots = charpoly_roots(X * X.transpose() / 5.0);
  ASSERT_EQ(roots.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.eigenvalues()[i], roots[i], 1e-8);
}

TEST(Esd, EigenpairResidualContract) {
  // The eigensolver behind esd, checked with eigenvectors on a sample
  // covariance: |S v - lambda v| <= 1e-8 |S| for every pair.
  const auto X = sample_matrix(ColumnModel::iid_gaussian(400), 800, Seed{8, 0});
  const Eigen::MatrixXd S = X * X.transpose() / 800.0;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  const double norm = solver.eigenvalues().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    const Eigen::VectorXd v = solver.eigenvectors().col(i);
    EXPECT_LE((S * v - solver.eigenvalues()[i] * v).norm(), 1e-8 * norm);
  }
  const Spectrum s = esd(X);
  for (std::size_t i = 0; i < s.p(); ++i) {
    EXPECT_NEAR(s.eigenvalues()[i], solver.eigenvalues()[static_cast<Eigen::Index>(i)],
                1e-10 * norm);
  }
}

TEST(EmpiricalStieltjes, SpecExamples) {
  const ComplexPoint i(0.0, 1.0);
  const Spectrum ones({1.0, 1.0, 1.0}, 3);
  EXPECT_NEAR(std::abs(empirical_stieltjes(ones, i) - Complex(0.5, 0.5)), 0.0, 1e-15);
  // p = n: the two transforms coincide.
  EXPECT_EQ(normalized_stieltjes(ones, i), empirical_stieltjes(ones, i));

  const Spectrum two({0.0, 2.0}, 4);
  EXPECT_NEAR(std::abs(empirical_stieltjes(two, i) - Complex(0.2, 0.6)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(normalized_stieltjes(two, i) - Complex(0.1, 0.3)), 0.0, 1e-15);
}

TEST(EmpiricalStieltjesProperty, MatchesComplexSolveTrace) {
  for (std::size_t p : {3u, 17u, 60u}) {
    const std::size_t n = 2 * p + 1;
    const auto X = sample_matrix(ColumnModel::iid_gaussian(p), n, Seed{21, p});
    const Spectrum s = esd(X);
    const Eigen::MatrixXcd C = (X * X.transpose() / static_cast<double>(n)).cast<Complex>();
    for (const ComplexPoint z : {ComplexPoint(0.5, 0.1), ComplexPoint(2.0, 1.0),
                                 ComplexPoint(-1.0, 3.0)}) {
      const auto I = Eigen::MatrixXcd::Identity(C.rows(), C.cols());
      const Eigen::MatrixXcd resolvent = (C - z.value() * I).partialPivLu().solve(I);
      const Complex expected = resolvent.trace() / static_cast<double>(p);
      EXPECT_NEAR(std::abs(empirical_stieltjes(s, z) - expected), 0.0, 1e-8) << p;
    }
  }
}

TEST(EmpiricalStieltjesProperty, PositiveImaginaryPartOnRandomSpectra) {
  std::mt19937_64 engine(99);
  std::uniform_real_distribution<double> unit(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> values(1 + trial % 13);
    for (double& v : values) v = unit(engine);
    const Spectrum s(values, 1 + trial % 7);
    for (double re : {-2.0, 0.0, 1.0, 2.5, 7.0}) {
      for (double im : {1e-3, 1.0, 1e3}) {
        EXPECT_GT(normalized_stieltjes(s, ComplexPoint(re, im)).imag(), 0.0);
        EXPECT_GT(empirical_stieltjes(s, ComplexPoint(re, im)).imag(), 0.0);
      }
    }
  }
}

TEST(EmpiricalCdf, CountExample) {
  const Spectrum s({1.0, 2.0, 3.0}, 3);
  EXPECT_DOUBLE_EQ(empirical_cdf(s, 2.0), 2.0 / 3.0);
  EXPECT_EQ(empirical_cdf(s, 0.5), 0.0);
  EXPECT_EQ(empirical_cdf(s, 3.0), 1.0);
}

TEST(KsDistance, QuantileSpectrumAtDeskScale) {
  const MPLaw law(0.5);
  const Spectrum s(mp_quantile_spectrum(law, 1000), 2000);
  EXPECT_LE(ks_distance(s, law), 1.0 / 1000.0 + kQuadratureTolerance);
}

TEST(KsDistanceProperty, QuantileDiscretisationTrend) {
  for (double c : {0.5, 2.0}) {
    const MPLaw law(c);
    double previous = 1.0;
    for (std::size_t p : {100u, 400u, 1600u}) {
      const auto n = static_cast<std::size_t>(std::lround(p / c));
      const double ks = ks_distance(Spectrum(mp_quantile_spectrum(law, p), n), law);
      EXPECT_LT(ks, previous) << "c=" << c << " p=" << p;
      previous = ks;
    }
  }
}

TEST(EsdProperty, RankBoundForWideMatrices) {
  const auto X = sample_matrix(ColumnModel::iid_rademacher(50), 20, Seed{4, 4});
  const Spectrum s = esd(X);
  std::size_t zeros = 0;
  for (double lambda : s.eigenvalues()) zeros += std::abs(lambda) <= 1e-8;
  EXPECT_GE(zeros, 30u);
}

TEST(SpectrumCsv, Format) {
  const Spectrum s({0.5, 0.1}, 4);
  std::ostringstream out;
  write_spectrum_csv(out, s, "iid_gaussian", "1:0");
  EXPECT_EQ(out.str(),
            "# p=2 n=4 model=iid_gaussian seed=1:0\n"
            "eigenvalue\n"
            "0.10000000000000001\n"
            "0.5\n");
}

}  // namespace
}  // namespace mpspectra
