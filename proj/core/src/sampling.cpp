#include "mpspectra/sampling.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mpspectra/errors.hpp"

namespace mpspectra {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_dim(std::size_t p) {
  if (p == 0) throw ConfigError("column dimension p must be at least 1");
}

double rademacher(std::mt19937_64& engine) {
  return (engine() >> 63) != 0 ? 1.0 : -1.0;
}

struct KindName {
  ColumnModel::Kind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ColumnModel::Kind::IidGaussian, "iid_gaussian"},
    {ColumnModel::Kind::IidRademacher, "iid_rademacher"},
    {ColumnModel::Kind::IidSparseSpike, "iid_sparse_spike"},
    {ColumnModel::Kind::SphereUniform, "sphere_uniform"},
    {ColumnModel::Kind::LinearFilter, "linear_filter"},
    {ColumnModel::Kind::ScalarMixture, "scalar_mixture"},
};

}  // namespace

Seed Seed::child(std::uint64_t k) const {
  return Seed{splitmix64(value ^ splitmix64(stream + 0x632be59bd9b4e019ULL)), k};
}

std::mt19937_64 make_engine(Seed seed) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed.value),
      static_cast<std::uint32_t>(seed.value >> 32),
      static_cast<std::uint32_t>(seed.stream),
      static_cast<std::uint32_t>(seed.stream >> 32),
  };
  return std::mt19937_64(seq);
}

std::string to_string(const Seed& seed) {
  return std::to_string(seed.value) + ":" + std::to_string(seed.stream);
}

ColumnModel ColumnModel::iid_gaussian(std::size_t p) {
  require_dim(p);
  return ColumnModel(Kind::IidGaussian, p);
}

ColumnModel ColumnModel::iid_rademacher(std::size_t p) {
  require_dim(p);
  return ColumnModel(Kind::IidRademacher, p);
}

ColumnModel ColumnModel::iid_sparse_spike(std::size_t p, double q) {
  require_dim(p);
  if (q != 0.0 && !(q >= 1.0 && std::isfinite(q))) {
    std::ostringstream msg;
    msg << "sparse spike parameter q must be >= 1 (or 0 for q = p), got " << q;
    throw ConfigError(msg.str());
  }
  ColumnModel model(Kind::IidSparseSpike, p);
  model.spike_q_ = q;
  return model;
}

ColumnModel ColumnModel::sphere_uniform(std::size_t p) {
  require_dim(p);
  return ColumnModel(Kind::SphereUniform, p);
}

ColumnModel ColumnModel::linear_filter(std::size_t p, std::vector<double> coefficients) {
  require_dim(p);
  if (coefficients.empty()) {
    throw ConfigError("linear filter needs at least one coefficient");
  }
  double norm2 = 0.0;
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw ConfigError("linear filter coefficient is not finite");
    norm2 += c * c;
  }
  if (!(norm2 > 0.0)) throw ConfigError("linear filter coefficients have zero norm");
  const double roundoff =
      4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(coefficients.size());
  if (std::abs(norm2 - 1.0) > roundoff) {
    const double scale = 1.0 / std::sqrt(norm2);
    for (double& c : coefficients) c *= scale;
  }
  ColumnModel model(Kind::LinearFilter, p);
  model.filter_ = std::move(coefficients);
  return model;
}

ColumnModel ColumnModel::linear_filter(std::size_t p, std::size_t length, double pole) {
  if (length == 0) throw ConfigError("linear filter length must be at least 1");
  if (!(std::abs(pole) < 1.0)) {
    std::ostringstream msg;
    msg << "all-pass pole must satisfy |r| < 1, got " << pole;
    throw ConfigError(msg.str());
  }
  std::vector<double> h(length);
  h[0] = -pole;
  double power = 1.0;
  for (std::size_t j = 1; j < length; ++j) {
    h[j] = (1.0 - pole * pole) * power;
    power *= pole;
  }
  return linear_filter(p, std::move(h));
}

ColumnModel ColumnModel::scalar_mixture(const ColumnModel& base) {
  ColumnModel model(Kind::ScalarMixture, base.dim());
  model.base_ = std::make_shared<const ColumnModel>(base);
  return model;
}

ColumnModel ColumnModel::with_dim(std::size_t p) const {
  require_dim(p);
  ColumnModel copy = *this;
  copy.p_ = p;
  if (base_) copy.base_ = std::make_shared<const ColumnModel>(base_->with_dim(p));
  return copy;
}

bool ColumnModel::iid_entries() const {
  return kind_ == Kind::IidGaussian || kind_ == Kind::IidRademacher ||
         kind_ == Kind::IidSparseSpike;
}

double ColumnModel::spike_q() const {
  return spike_q_ == 0.0 ? static_cast<double>(p_) : spike_q_;
}

const ColumnModel& ColumnModel::base() const {
  if (!base_) throw ConfigError("model " + name() + " has no base model");
  return *base_;
}

double ColumnModel::filter_shift_defect() const {
  double worst = 0.0;
  for (std::size_t lag = 1; lag < filter_.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t j = 0; j + lag < filter_.size(); ++j) acc += filter_[j] * filter_[j + lag];
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

std::string ColumnModel::name() const {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind_) return entry.name;
  }
  return "unknown";
}

void ColumnModel::sample_into(std::span<double> out, std::mt19937_64& engine) const {
  if (out.size() != p_) {
    std::ostringstream msg;
    msg << "sample buffer has length " << out.size() << ", model dimension is " << p_;
    throw PreconditionError(msg.str());
  }
  switch (kind_) {
    case Kind::IidGaussian: {
      std::normal_distribution<double> normal;
      for (double& x : out) x = normal(engine);
      break;
    }
    case Kind::IidRademacher:
      for (double& x : out) x = rademacher(engine);
      break;
    case Kind::IidSparseSpike: {
      const double q = spike_q();
      const double height = std::sqrt(q);
      const double half = 0.5 / q;
      std::uniform_real_distribution<double> uniform;
      for (double& x : out) {
        const double u = uniform(engine);
        x = u < half ? height : (u < 2.0 * half ? -height : 0.0);
      }
      break;
    }
    case Kind::SphereUniform: {
      std::normal_distribution<double> normal;
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (double& x : out) {
          x = normal(engine);
          norm2 += x * x;
        }
      } while (!(norm2 > 0.0));
      const double scale = std::sqrt(static_cast<double>(p_) / norm2);
      for (double& x : out) x *= scale;
      break;
    }
    case Kind::LinearFilter: {
      const std::size_t m = filter_.size();
      std::vector<double> innovations(p_ + m - 1);
      for (double& e : innovations) e = rademacher(engine);
      for (std::size_t k = 0; k < p_; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += filter_[j] * innovations[k + j];
        out[k] = acc;
      }
      break;
    }
    case Kind::ScalarMixture: {
      const double xi = rademacher(engine) > 0.0 ? std::sqrt(2.0) : 0.0;
      base_->sample_into(out, engine);
      for (double& x : out) x *= xi;
      break;
    }
  }
}

Eigen::VectorXd sample_column(const ColumnModel& model, Seed seed) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(model.dim()));
  auto engine = make_engine(seed);
  model.sample_into(std::span<double>(x.data(), model.dim()), engine);
  return x;
}

Eigen::MatrixXd sample_matrix(const ColumnModel& model, std::size_t n, Seed seed,
                              std::size_t max_entries) {
  if (n == 0) throw ConfigError("sample count n must be at least 1");
  const std::size_t p = model.dim();
  if (p > max_entries / n) {
    std::ostringstream msg;
    msg << "sample matrix " << p << " x " << n << " exceeds the budget of " << max_entries
        << " entries";
    throw ResourceError(msg.str());
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    auto engine = make_engine(seed.child(k));
    model.sample_into(std::span<double>(X.col(static_cast<Eigen::Index>(k)).data(), p), engine);
  }
  return X;
}

nlohmann::json model_to_json(const ColumnModel& model) {
  nlohmann::json j;
  j["kind"] = model.name();
  switch (model.kind()) {
    case ColumnModel::Kind::IidSparseSpike:
      j["q"] = model.spike_q();
      break;
    case ColumnModel::Kind::LinearFilter:
      j["coefficients"] = model.filter();
      break;
    case ColumnModel::Kind::ScalarMixture:
      j["base"] = model_to_json(model.base());
      break;
    default:
      break;
  }
  return j;
}

ColumnModel model_from_json(const nlohmann::json& j, std::size_t p) {
  if (j.is_string()) return model_from_json(nlohmann::json{{"kind", j}}, p);
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("model description needs a string field \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "iid_gaussian") return ColumnModel::iid_gaussian(p);
    if (kind == "iid_rademacher") return ColumnModel::iid_rademacher(p);
    if (kind == "iid_sparse_spike") return ColumnModel::iid_sparse_spike(p, j.value("q", 0.0));
    if (kind == "sphere_uniform") return ColumnModel::sphere_uniform(p);
    if (kind == "linear_filter") {
      if (j.contains("coefficients")) {
        return ColumnModel::linear_filter(p, j["coefficients"].get<std::vector<double>>());
      }
      return ColumnModel::linear_filter(
          p, j.value("length", ColumnModel::kDefaultFilterLength),
          j.value("pole", ColumnModel::kDefaultFilterPole));
    }
    if (kind == "scalar_mixture") {
      const nlohmann::json base = j.contains("base") ? j["base"] : nlohmann::json("iid_gaussian");
      return ColumnModel::scalar_mixture(model_from_json(base, p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad parameter for model " + kind + ": " + e.what());
  }
  throw ConfigError("unknown model kind \"" + kind + "\"");
}

nlohmann::json seed_to_json(const Seed& seed) {
  return nlohmann::json{{"value", seed.value}, {"stream", seed.stream}};
}

Seed seed_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return Seed{j.get<std::uint64_t>(), 0};
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) throw ConfigError("seed values must be nonnegative");
    return Seed{j.get<std::uint64_t>(), 0};
  }
  if (j.is_object() && j.contains("value")) {
    try {
      return Seed{j["value"].get<std::uint64_t>(), j.value("stream", std::uint64_t{0})};
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad seed: ") + e.what());
    }
  }
  throw ConfigError("seed must be an integer or {\"value\": v, \"stream\": s}");
}

}  // namespace mpspectra
