#include "mpspectra/resolvent_identities.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mpspectra/errors.hpp"

namespace mpspectra {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diagonalize(const Eigen::MatrixXd& C) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(C);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "symmetric eigensolver failed on a " << C.rows() << " x " << C.cols() << " matrix";
    throw NumericalError(msg.str());
  }
  return solver;
}

}  // namespace

SymmetricResolvent::SymmetricResolvent(const Eigen::MatrixXd& C) {
  auto solver = diagonalize(C);
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

double SymmetricResolvent::norm(Complex w) const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    best = std::max(best, 1.0 / std::abs(eigenvalues_[i] - w));
  }
  return best;
}

Complex SymmetricResolvent::trace(Complex w) const {
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) sum += 1.0 / (eigenvalues_[i] - w);
  return sum;
}

Complex SymmetricResolvent::quadratic_form(const Eigen::VectorXd& x, Complex w) const {
  const Eigen::VectorXd y = eigenvectors_.transpose() * x;
  Complex sum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) sum += y[i] * y[i] / (eigenvalues_[i] - w);
  return sum;
}

void ResolventProbe::validate() const {
  if (C.rows() != C.cols() || C.rows() == 0) {
    throw PreconditionError("probe matrix C must be square and nonempty");
  }
  if (x.size() != C.rows()) {
    std::ostringstream msg;
    msg << "probe vector has length " << x.size() << ", matrix is " << C.rows() << " x "
        << C.cols();
    throw PreconditionError(msg.str());
  }
  if (C != C.transpose()) throw PreconditionError("probe matrix C is not exactly symmetric");
  z.require_upper_half_plane("resolvent probe");
  const Eigen::VectorXd lambda = diagonalize(C).eigenvalues();
  const double floor = -1e-10 * std::max(1.0, lambda.maxCoeff());
  if (lambda.minCoeff() < floor) {
    std::ostringstream msg;
    msg << "probe matrix C is not PSD: smallest eigenvalue " << lambda.minCoeff();
    throw PreconditionError(msg.str());
  }
}

BoundReport BoundReport::make(std::string name, double lhs, double rhs) {
  BoundReport report;
  report.name = std::move(name);
  report.lhs = lhs;
  report.rhs = rhs;
  report.slack = rhs - lhs;
  report.pass = std::isfinite(report.slack) &&
                report.slack >= -kInequalitySlack * std::max(1.0, std::abs(rhs));
  return report;
}

std::vector<BoundReport> check_lemma1(const ResolventProbe& probe) {
  probe.validate();
  const Complex z = probe.z.value();
  const double v = probe.z.v();

  const SymmetricResolvent base(probe.C);
  const Eigen::MatrixXd updated_matrix = probe.C + probe.x * probe.x.transpose();
  const SymmetricResolvent updated(updated_matrix);

  const Complex tr = base.trace(z);
  const Complex tr_updated = updated.trace(z);
  const Complex q = base.quadratic_form(probe.x, z);
  const Complex q_updated = updated.quadratic_form(probe.x, z);

  std::vector<BoundReport> reports;
  reports.reserve(5);
  reports.push_back(BoundReport::make("L1.1", base.norm(z), 1.0 / v));
  reports.push_back(BoundReport::make("L1.2", std::abs(tr_updated - tr), 1.0 / v));
  reports.push_back(BoundReport::make("L1.3", std::abs(q_updated), 1.0 + std::abs(z) / v));
  BoundReport fourth = BoundReport::make("L1.4", v, (z + z * tr).imag());
  fourth.pass = fourth.pass && tr.imag() > 0.0;
  reports.push_back(fourth);
  reports.push_back(BoundReport::make("L1.5", v, (z + z * q).imag()));
  return reports;
}

double sherman_morrison_gap(const ResolventProbe& probe) {
  probe.validate();
  const Complex z = probe.z.value();
  const SymmetricResolvent base(probe.C);
  const SymmetricResolvent updated(Eigen::MatrixXd(probe.C + probe.x * probe.x.transpose()));

  const Complex q = base.quadratic_form(probe.x, z);
  const Complex direct = updated.quadratic_form(probe.x, z);
  const Complex subtracted = q - q * q / (1.0 + q);
  const Complex cavity = q / (1.0 + q);
  const Complex shifted = 1.0 - z / (z + z * q);

  const Complex forms[] = {direct, subtracted, cavity, shifted};
  double gap = 0.0;
  double scale = 1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::isfinite(std::abs(forms[i]))) {
      throw NumericalError("Sherman-Morrison expression is not finite");
    }
    scale = std::max(scale, std::abs(forms[i]));
    for (std::size_t j = i + 1; j < 4; ++j) gap = std::max(gap, std::abs(forms[i] - forms[j]));
  }
  return gap / scale;
}

BoundReport check_sherman_morrison(const ResolventProbe& probe) {
  return BoundReport::make("SM", sherman_morrison_gap(probe), kIdentityTolerance);
}

double trace_identity_residual(const Eigen::MatrixXd& columns, ComplexPoint z, std::size_t n) {
  z.require_upper_half_plane("trace_identity_residual");
  if (n == 0) throw DomainError("trace identity needs n >= 1");
  if (static_cast<std::size_t>(columns.cols()) != n + 1) {
    std::ostringstream msg;
    msg << "trace identity needs n + 1 = " << n + 1 << " columns, got " << columns.cols();
    throw PreconditionError(msg.str());
  }
  const Eigen::Index p = columns.rows();
  if (p == 0) throw PreconditionError("trace identity needs p >= 1");

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);
  B.selfadjointView<Eigen::Lower>().rankUpdate(columns);
  B.triangularView<Eigen::StrictlyUpper>() = B.transpose();

  const SymmetricResolvent resolvent(B);
  const Complex w = z.value() * static_cast<double>(n);
  const Eigen::MatrixXd projected = resolvent.eigenvectors().transpose() * columns;

  Complex quadratic_sum = 0.0;
  for (Eigen::Index k = 0; k < projected.cols(); ++k) {
    Complex form = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double y = projected(i, k);
      form += y * y / (resolvent.eigenvalues()[i] - w);
    }
    quadratic_sum += form;
  }
  return std::abs(quadratic_sum - w * resolvent.trace(w) - static_cast<double>(p));
}

BoundReport check_trace_identity(const Eigen::MatrixXd& columns, ComplexPoint z, std::size_t n) {
  const double residual = trace_identity_residual(columns, z, n);
  return BoundReport::make("TRACE", residual,
                           kTraceIdentityTolerance * static_cast<double>(columns.rows()));
}

Complex fixed_point_residual(const Spectrum& spectrum, ComplexPoint z) {
  const Complex S = normalized_stieltjes(spectrum, z);
  const Complex w = z.value();
  return S / (1.0 + S) - w * S - spectrum.ratio();
}

BoundReport check_w_inequality(Complex w, ComplexPoint z) {
  z.require_upper_half_plane("w-inequality");
  const Complex zz = z.value();
  return BoundReport::make("W-INEQ", (zz + zz * w).imag() / std::abs(zz), std::abs(1.0 + w));
}

ResolventProbe random_probe(std::size_t p, double v, Seed seed) {
  if (p == 0) throw DomainError("probe dimension must be at least 1");
  auto engine = make_engine(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> rank_dist(1, p + 1);
  const std::size_t r = rank_dist(engine);

  Eigen::MatrixXd G(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    for (Eigen::Index i = 0; i < G.rows(); ++i) G(i, j) = normal(engine);
  Eigen::MatrixXd C = G * G.transpose();
  C = (0.5 * (C + C.transpose())).eval();

  Eigen::VectorXd x(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(engine);

  const double top = C.diagonal().sum();  // >= |C|
  std::uniform_real_distribution<double> re_dist(-3.0, 3.0 + top);
  return ResolventProbe{std::move(C), std::move(x), ComplexPoint(re_dist(engine), v)};
}

std::size_t LemmaFuzzSummary::lemma1_checks() const {
  std::size_t total = 0;
  for (const char* name : {"L1.1", "L1.2", "L1.3", "L1.4", "L1.5"}) {
    auto it = bounds.find(name);
    if (it != bounds.end()) total += it->second.pass + it->second.fail;
  }
  return total;
}

std::size_t LemmaFuzzSummary::lemma1_failures() const {
  std::size_t total = 0;
  for (const char* name : {"L1.1", "L1.2", "L1.3", "L1.4", "L1.5"}) {
    auto it = bounds.find(name);
    if (it != bounds.end()) total += it->second.fail;
  }
  return total;
}

bool LemmaFuzzSummary::all_pass() const {
  return std::all_of(bounds.begin(), bounds.end(),
                     [](const auto& entry) { return entry.second.fail == 0; });
}

LemmaFuzzSummary run_lemma_fuzz(const LemmaFuzzConfig& config) {
  if (config.cases == 0) throw ConfigError("lemma fuzz needs at least one case");
  if (config.max_p == 0) throw ConfigError("lemma fuzz needs max_p >= 1");
  if (!(config.v_min > 0.0) || !(config.v_max >= config.v_min)) {
    throw ConfigError("lemma fuzz needs 0 < v_min <= v_max");
  }

  LemmaFuzzSummary summary;
  summary.cases = config.cases;
  auto record = [&summary](const BoundReport& report) {
    auto [it, inserted] = summary.bounds.try_emplace(report.name);
    BoundTally& tally = it->second;
    if (inserted || report.slack < tally.worst_slack) tally.worst_slack = report.slack;
    (report.pass ? tally.pass : tally.fail) += 1;
  };

  const double log_lo = std::log(config.v_min);
  const double log_hi = std::log(config.v_max);
  for (std::size_t k = 0; k < config.cases; ++k) {
    const Seed case_seed = config.seed.child(k);
    auto engine = make_engine(case_seed);
    std::uniform_int_distribution<std::size_t> dim_dist(1, config.max_p);
    std::uniform_real_distribution<double> unit;
    const std::size_t p = dim_dist(engine);
    const double v = std::exp(log_lo + (log_hi - log_lo) * unit(engine));

    const ResolventProbe probe = random_probe(p, v, case_seed.child(0));
    for (const BoundReport& report : check_lemma1(probe)) record(report);

    const BoundReport sm = check_sherman_morrison(probe);
    summary.max_sherman_morrison_gap = std::max(summary.max_sherman_morrison_gap, sm.lhs);
    record(sm);

    const Complex q = SymmetricResolvent(probe.C).quadratic_form(probe.x, probe.z.value());
    record(check_w_inequality(q, probe.z));

    std::uniform_int_distribution<std::size_t> n_dist(1, 2 * config.max_p);
    const std::size_t n = n_dist(engine);
    const Eigen::MatrixXd columns =
        sample_matrix(ColumnModel::iid_gaussian(p), n + 1, case_seed.child(1));
    const BoundReport trace = check_trace_identity(columns, probe.z, n);
    summary.max_trace_residual_per_p =
        std::max(summary.max_trace_residual_per_p, trace.lhs / static_cast<double>(p));
    record(trace);
  }
  return summary;
}

nlohmann::json to_json(const BoundReport& report) {
  return nlohmann::json{{"name", report.name},   {"lhs", report.lhs},
                        {"rhs", report.rhs},     {"slack", report.slack},
                        {"pass", report.pass}};
}

nlohmann::json to_json(const LemmaFuzzSummary& summary) {
  nlohmann::json bounds = nlohmann::json::object();
  for (const auto& [name, tally] : summary.bounds) {
    bounds[name] = {{"pass", tally.pass}, {"fail", tally.fail}, {"worst_slack", tally.worst_slack}};
  }
  return nlohmann::json{
      {"cases", summary.cases},
      {"bounds", bounds},
      {"lemma1_checks", summary.lemma1_checks()},
      {"lemma1_failures", summary.lemma1_failures()},
      {"max_sherman_morrison_gap", summary.max_sherman_morrison_gap},
      {"max_trace_residual_per_p", summary.max_trace_residual_per_p},
      {"all_pass", summary.all_pass()},
  };
}

}  // namespace mpspectra
