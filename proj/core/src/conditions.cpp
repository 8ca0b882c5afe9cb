#include "mpspectra/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "mpspectra/errors.hpp"

namespace mpspectra {

namespace {

void require_trials(std::size_t trials) {
  if (trials == 0) throw DomainError("Monte Carlo estimate needs at least one trial");
}

void require_iid(const ColumnModel& model, const char* statistic) {
  if (!model.iid_entries()) {
    throw DomainError(std::string(statistic) + " is defined for i.i.d.-entry models only, got " +
                      model.name());
  }
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& engine) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd G(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) G(i, j) = normal(engine);
  return G;
}

// Evaluates trial(t) for t in [0, trials). Trials are split in contiguous
// blocks across hardware threads; results land at their own index.
std::vector<double> run_trials(std::size_t trials, const std::function<double(std::size_t)>& trial) {
  std::vector<double> results(trials);
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), trials);
  if (workers <= 1) {
    for (std::size_t t = 0; t < trials; ++t) results[t] = trial(t);
    return results;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (trials + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(trials, (w + 1) * block);
        for (std::size_t t = w * block; t < end; ++t) results[t] = trial(t);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& thread : pool) thread.join();
  for (auto& error : errors)
    if (error) std::rethrow_exception(error);
  return results;
}

MonteCarloEstimate summarize(const std::vector<double>& samples) {
  MonteCarloEstimate estimate;
  estimate.trials = samples.size();
  const double count = static_cast<double>(samples.size());
  estimate.value = pairwise_sum(samples) / count;
  if (samples.size() > 1) {
    std::vector<double> squares(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = samples[i] - estimate.value;
      squares[i] = d * d;
    }
    const double variance = pairwise_sum(squares) / (count - 1.0);
    estimate.standard_error = std::sqrt(variance / count);
  }
  return estimate;
}

double gaussian_tail_second_moment(double t) {
  // E X^2 1{|X| > t} = 2 t phi(t) + erfc(t / sqrt 2) for X ~ N(0, 1).
  if (t <= 0.0) return 1.0;
  const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  return 2.0 * t * phi + std::erfc(t / std::numbers::sqrt2);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double sum = 0.0;
    for (double x : values) sum += x;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

TestMatrix TestMatrix::diagonal(Eigen::VectorXd d) { return TestMatrix(Diagonal{std::move(d)}); }

TestMatrix TestMatrix::factored(Eigen::MatrixXd F) { return TestMatrix(Factor{std::move(F)}); }

Eigen::Index TestMatrix::dim() const {
  return std::visit(
      [](const auto& s) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Diagonal>)
          return s.d.size();
        else
          return s.F.rows();
      },
      storage_);
}

double TestMatrix::quadratic_form(const Eigen::VectorXd& x) const {
  if (const auto* diag = std::get_if<Diagonal>(&storage_)) {
    return (diag->d.array() * x.array().square()).sum();
  }
  const auto& factor = std::get<Factor>(storage_);
  return (factor.F.transpose() * x).squaredNorm();
}

double TestMatrix::trace() const {
  if (const auto* diag = std::get_if<Diagonal>(&storage_)) return diag->d.sum();
  return std::get<Factor>(storage_).F.squaredNorm();
}

double TestMatrix::spectral_norm() const {
  if (const auto* diag = std::get_if<Diagonal>(&storage_)) {
    return diag->d.size() == 0 ? 0.0 : diag->d.cwiseAbs().maxCoeff();
  }
  const auto& F = std::get<Factor>(storage_).F;
  if (F.cols() == 0) return 0.0;
  const Eigen::MatrixXd gram = F.transpose() * F;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

Eigen::MatrixXd TestMatrix::dense() const {
  if (const auto* diag = std::get_if<Diagonal>(&storage_)) {
    return diag->d.asDiagonal();
  }
  const auto& F = std::get<Factor>(storage_).F;
  return F * F.transpose();
}

TestMatrixFamily TestMatrixFamily::identity(std::size_t p) {
  return TestMatrixFamily{Kind::Identity, p};
}

TestMatrixFamily TestMatrixFamily::random_projection(std::size_t p, std::size_t rank) {
  return TestMatrixFamily{Kind::RandomProjection, p, rank};
}

TestMatrixFamily TestMatrixFamily::resolvent_real(std::size_t p, ComplexPoint z,
                                                  double source_ratio) {
  z.require_upper_half_plane("resolvent test family");
  if (!(source_ratio > 0.0)) throw DomainError("resolvent family needs a positive source ratio");
  return TestMatrixFamily{Kind::ResolventReal, p, 0, z, source_ratio};
}

TestMatrixFamily TestMatrixFamily::diagonal_signs(std::size_t p) {
  return TestMatrixFamily{Kind::DiagonalSigns, p};
}

TestMatrixFamily TestMatrixFamily::random_psd(std::size_t p, std::size_t rank) {
  return TestMatrixFamily{Kind::RandomPSD, p, rank};
}

TestMatrixFamily TestMatrixFamily::with_dim(std::size_t dim) const {
  TestMatrixFamily copy = *this;
  copy.p = dim;
  return copy;
}

std::string TestMatrixFamily::name() const {
  switch (kind) {
    case Kind::Identity:
      return "identity";
    case Kind::RandomProjection:
      return "random_projection";
    case Kind::ResolventReal:
      return "resolvent_real";
    case Kind::DiagonalSigns:
      return "diagonal_signs";
    case Kind::RandomPSD:
      return "random_psd";
  }
  return "unknown";
}

TestMatrixFamily family_from_name(const std::string& name, std::size_t p) {
  if (name == "identity") return TestMatrixFamily::identity(p);
  if (name == "random_projection") return TestMatrixFamily::random_projection(p);
  if (name == "resolvent_real") return TestMatrixFamily::resolvent_real(p);
  if (name == "diagonal_signs") return TestMatrixFamily::diagonal_signs(p);
  if (name == "random_psd") return TestMatrixFamily::random_psd(p);
  throw ConfigError("unknown test matrix family \"" + name + "\"");
}

TestMatrix TestMatrixFamily::generate(Seed seed) const {
  if (p == 0) throw DomainError("test matrix dimension must be at least 1");
  const auto dim = static_cast<Eigen::Index>(p);
  auto engine = make_engine(seed);
  switch (kind) {
    case Kind::Identity:
      return TestMatrix::diagonal(Eigen::VectorXd::Ones(dim));
    case Kind::DiagonalSigns: {
      Eigen::VectorXd d(dim);
      for (Eigen::Index i = 0; i < dim; ++i) d[i] = (engine() >> 63) != 0 ? 1.0 : 0.0;
      return TestMatrix::diagonal(std::move(d));
    }
    case Kind::RandomProjection: {
      const auto r = static_cast<Eigen::Index>(
          std::min(p, rank == 0 ? std::max<std::size_t>(1, p / 2) : rank));
      const Eigen::MatrixXd G = gaussian_matrix(dim, r, engine);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
      Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, r);
      return TestMatrix::factored(std::move(Q));
    }
    case Kind::RandomPSD: {
      const auto r =
          static_cast<Eigen::Index>(rank == 0 ? std::max<std::size_t>(1, p / 4) : rank);
      Eigen::MatrixXd G = gaussian_matrix(dim, r, engine);
      const Eigen::MatrixXd gram = G.transpose() * G;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
      const double top = solver.eigenvalues().maxCoeff();
      if (!(top > 0.0)) throw NumericalError("random PSD factor has zero norm");
      G /= std::sqrt(top);
      return TestMatrix::factored(std::move(G));
    }
    case Kind::ResolventReal: {
      const auto n_src = static_cast<Eigen::Index>(
          std::max(1.0, std::round(static_cast<double>(p) / source_ratio)));
      const Eigen::MatrixXd G = gaussian_matrix(dim, n_src, engine);
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(dim, dim);
      C.selfadjointView<Eigen::Lower>().rankUpdate(G, 1.0 / static_cast<double>(n_src));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(C);
      if (solver.info() != Eigen::Success) throw NumericalError("resolvent family eigensolve failed");
      const double v = z.v();
      Eigen::VectorXd weights(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double d = solver.eigenvalues()[i] - z.re();
        weights[i] = std::sqrt(v * v / (d * d + v * v));
      }
      return TestMatrix::factored(solver.eigenvectors() * weights.asDiagonal());
    }
  }
  throw ConfigError("unknown test matrix family");
}

MonteCarloEstimate quadform_deviation(const ColumnModel& model, const TestMatrixFamily& family,
                                      std::size_t trials, Seed seed) {
  require_trials(trials);
  if (family.p != model.dim()) {
    std::ostringstream msg;
    msg << "test family dimension " << family.p << " differs from model dimension "
        << model.dim();
    throw PreconditionError(msg.str());
  }
  const double p = static_cast<double>(model.dim());
  return summarize(run_trials(trials, [&](std::size_t t) {
    const Seed trial_seed = seed.child(t);
    const TestMatrix A = family.generate(trial_seed.child(0));
    const Eigen::VectorXd x = sample_column(model, trial_seed.child(1));
    const double deviation = (A.quadratic_form(x) - A.trace()) / p;
    return deviation * deviation;
  }));
}

double lindeberg_exact(const ColumnModel& model, double threshold) {
  switch (model.kind()) {
    case ColumnModel::Kind::IidGaussian:
      return gaussian_tail_second_moment(threshold);
    case ColumnModel::Kind::IidRademacher:
      return 1.0 > threshold ? 1.0 : 0.0;
    case ColumnModel::Kind::IidSparseSpike:
      // |X| = sqrt(q) with probability 1/q, so E X^2 1{...} = 1{sqrt(q) > t}.
      return std::sqrt(model.spike_q()) > threshold ? 1.0 : 0.0;
    default:
      break;
  }
  require_iid(model, "lindeberg_exact");
  return 0.0;
}

LindebergEstimate lindeberg_statistic(const ColumnModel& model, double epsilon,
                                      std::size_t trials, Seed seed) {
  require_iid(model, "lindeberg_statistic");
  require_trials(trials);
  if (!(epsilon > 0.0)) throw DomainError("Lindeberg epsilon must be positive");
  const double p = static_cast<double>(model.dim());
  const double threshold = epsilon * std::sqrt(p);

  LindebergEstimate result;
  result.monte_carlo = summarize(run_trials(trials, [&](std::size_t t) {
    const Eigen::VectorXd x = sample_column(model, seed.child(t));
    double sum = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (std::abs(x[k]) > threshold) sum += x[k] * x[k];
    }
    return sum / p;
  }));
  result.exact = lindeberg_exact(model, threshold);
  return result;
}

OffDiagonalReport offdiag_moment_check(const ColumnModel& model, const Eigen::MatrixXcd& A,
                                       std::size_t trials, Seed seed) {
  require_iid(model, "offdiag_moment_check");
  require_trials(trials);
  const auto p = static_cast<Eigen::Index>(model.dim());
  if (A.rows() != p || A.cols() != p) {
    std::ostringstream msg;
    msg << "test matrix is " << A.rows() << " x " << A.cols() << ", model dimension is " << p;
    throw PreconditionError(msg.str());
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  if (svd.singularValues()[0] > 1.0 + 1e-10) {
    std::ostringstream msg;
    msg << "offdiag_moment_check needs |A| <= 1, got " << svd.singularValues()[0];
    throw DomainError(msg.str());
  }

  Eigen::MatrixXcd off = A;
  off.diagonal().setZero();

  OffDiagonalReport report;
  report.estimate = summarize(run_trials(trials, [&](std::size_t t) {
    const Eigen::VectorXd x = sample_column(model, seed.child(t));
    const Eigen::VectorXcd xc = x.cast<Complex>();
    const Complex form = xc.dot(off * xc);  // conjugates xc, which is real
    return std::norm(form);
  }));
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k) report.exact += std::norm(off(j, k) + off(k, j));
  report.four_trace = 4.0 * A.squaredNorm();
  report.bound = BoundReport::make("OFFDIAG", report.estimate.value,
                                   report.four_trace + 3.0 * report.estimate.standard_error);
  return report;
}

MonteCarloEstimate weighted_squares_check(const ColumnModel& model,
                                          std::span<const double> coefficients,
                                          std::size_t trials, Seed seed) {
  require_iid(model, "weighted_squares_check");
  require_trials(trials);
  if (coefficients.size() != model.dim()) {
    std::ostringstream msg;
    msg << "weighted squares needs " << model.dim() << " coefficients, got "
        << coefficients.size();
    throw PreconditionError(msg.str());
  }
  for (double a : coefficients) {
    if (!(std::abs(a) <= 1.0)) {
      std::ostringstream msg;
      msg << "weighted squares coefficient " << a << " lies outside [-1, 1]";
      throw DomainError(msg.str());
    }
  }
  const double p = static_cast<double>(model.dim());
  return summarize(run_trials(trials, [&](std::size_t t) {
    const Eigen::VectorXd x = sample_column(model, seed.child(t));
    double sum = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) sum += coefficients[k] * (x[k] * x[k] - 1.0);
    return std::abs(sum / p);
  }));
}

Eigen::MatrixXcd random_contraction(std::size_t p, Seed seed) {
  if (p == 0) throw DomainError("contraction dimension must be at least 1");
  auto engine = make_engine(seed);
  const auto dim = static_cast<Eigen::Index>(p);
  const Eigen::MatrixXd re = gaussian_matrix(dim, dim, engine);
  const Eigen::MatrixXd im = gaussian_matrix(dim, dim, engine);
  Eigen::MatrixXcd A(dim, dim);
  A.real() = re;
  A.imag() = im;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  A /= svd.singularValues()[0];
  return A;
}

std::string to_string(ConditionStatistic statistic) {
  switch (statistic) {
    case ConditionStatistic::QuadFormDeviation:
      return "quadform_deviation";
    case ConditionStatistic::Lindeberg:
      return "lindeberg";
    case ConditionStatistic::OffDiagMoment:
      return "offdiag_moment";
    case ConditionStatistic::WeightedSquares:
      return "weighted_squares";
  }
  return "unknown";
}

bool ConditionReport::nonincreasing_within_noise() const {
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    const double allowance = 2.0 * (standard_errors[i - 1] + standard_errors[i]) + 1e-12;
    if (estimates[i] > estimates[i - 1] + allowance) return false;
  }
  return true;
}

bool ConditionReport::vanishes(double threshold) const {
  return !estimates.empty() && estimates.back() < threshold && nonincreasing_within_noise();
}

namespace {

ConditionReport make_report(const ColumnModel& model, ConditionStatistic statistic,
                            std::string detail, std::span<const std::size_t> p_grid,
                            std::size_t trials, Seed seed) {
  if (p_grid.empty()) throw ConfigError("condition sweep needs a nonempty p grid");
  require_trials(trials);
  ConditionReport report{model, statistic, std::move(detail), {}, {}, {}, {}};
  report.p_grid.assign(p_grid.begin(), p_grid.end());
  report.trials = trials;
  report.seed = seed;
  return report;
}

void push(ConditionReport& report, const MonteCarloEstimate& estimate,
          std::optional<double> exact = std::nullopt, double scale = 1.0) {
  report.estimates.push_back(estimate.value * scale);
  report.standard_errors.push_back(estimate.standard_error * scale);
  report.exact.push_back(exact);
}

}  // namespace

ConditionReport sweep_quadform(const ColumnModel& model, const TestMatrixFamily& family,
                               std::span<const std::size_t> p_grid, std::size_t trials, Seed seed) {
  ConditionReport report = make_report(model, ConditionStatistic::QuadFormDeviation, family.name(),
                                       p_grid, trials, seed);
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const std::size_t p = p_grid[i];
    push(report, quadform_deviation(model.with_dim(p), family.with_dim(p), trials, seed.child(i)));
  }
  return report;
}

ConditionReport sweep_lindeberg(const ColumnModel& model, double epsilon,
                                std::span<const std::size_t> p_grid, std::size_t trials,
                                Seed seed) {
  std::ostringstream detail;
  detail << "epsilon=" << epsilon;
  ConditionReport report =
      make_report(model, ConditionStatistic::Lindeberg, detail.str(), p_grid, trials, seed);
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const LindebergEstimate estimate =
        lindeberg_statistic(model.with_dim(p_grid[i]), epsilon, trials, seed.child(i));
    push(report, estimate.monte_carlo, estimate.exact);
  }
  return report;
}

ConditionReport sweep_weighted_squares(const ColumnModel& model,
                                       std::span<const std::size_t> p_grid, std::size_t trials,
                                       Seed seed) {
  ConditionReport report = make_report(model, ConditionStatistic::WeightedSquares, "a_k=1",
                                       p_grid, trials, seed);
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const std::vector<double> ones(p_grid[i], 1.0);
    push(report, weighted_squares_check(model.with_dim(p_grid[i]), ones, trials, seed.child(i)));
  }
  return report;
}

ConditionReport sweep_offdiag(const ColumnModel& model, std::span<const std::size_t> p_grid,
                              std::size_t trials, Seed seed) {
  ConditionReport report = make_report(model, ConditionStatistic::OffDiagMoment,
                                       "random_contraction, scaled by 1/p^2", p_grid, trials, seed);
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const std::size_t p = p_grid[i];
    const Eigen::MatrixXcd A = random_contraction(p, seed.child(i).child(0));
    const OffDiagonalReport check =
        offdiag_moment_check(model.with_dim(p), A, trials, seed.child(i).child(1));
    const double pp = static_cast<double>(p);
    push(report, check.estimate, check.exact / (pp * pp), 1.0 / (pp * pp));
  }
  return report;
}

nlohmann::json to_json(const ConditionReport& report) {
  nlohmann::json exact = nlohmann::json::array();
  for (const auto& value : report.exact) {
    exact.push_back(value ? nlohmann::json(*value) : nlohmann::json(nullptr));
  }
  return nlohmann::json{
      {"model", model_to_json(report.model)},
      {"statistic", to_string(report.statistic)},
      {"detail", report.detail},
      {"p_grid", report.p_grid},
      {"estimates", report.estimates},
      {"standard_errors", report.standard_errors},
      {"exact", exact},
      {"trials", report.trials},
      {"seed", seed_to_json(report.seed)},
      {"nonincreasing_within_noise", report.nonincreasing_within_noise()},
  };
}

}  // namespace mpspectra
