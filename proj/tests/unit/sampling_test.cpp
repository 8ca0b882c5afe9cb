#include "mpspectra/sampling.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "mpspectra/errors.hpp"

namespace mpspectra {
namespace {

std::vector<ColumnModel> all_models(std::size_t p) {
  return {
      ColumnModel::iid_gaussian(p),
      ColumnModel::iid_rademacher(p),
      ColumnModel::iid_sparse_spike(p),
      ColumnModel::sphere_uniform(p),
      ColumnModel::linear_filter(p),
      ColumnModel::scalar_mixture(ColumnModel::iid_gaussian(p)),
  };
}

TEST(Seed, ChildrenAreDistinctAndDeterministic) {
  const Seed root{42, 0};
  std::set<std::uint64_t> values;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const Seed child = root.child(k);
    EXPECT_EQ(child, root.child(k));
    EXPECT_EQ(child.stream, k);
    values.insert(child.value);
  }
  // value depends only on the parent; streams separate the children.
  EXPECT_EQ(values.size(), 1u);
  EXPECT_NE(root.child(0).value, Seed({43, 0}).child(0).value);
  EXPECT_NE(root.child(0).value, Seed({42, 1}).child(0).value);
}

TEST(Seed, EnginesDifferAcrossStreams) {
  auto a = make_engine(Seed{7, 0});
  auto b = make_engine(Seed{7, 1});
  auto c = make_engine(Seed{7, 0});
  const auto first_a = a();
  EXPECT_NE(first_a, b());
  EXPECT_EQ(first_a, c());
}

TEST(Seed, JsonForms) {
  EXPECT_EQ(seed_from_json(nlohmann::json(5)), (Seed{5, 0}));
  EXPECT_EQ(seed_from_json(nlohmann::json{{"value", 5}, {"stream", 3}}), (Seed{5, 3}));
  EXPECT_THROW(seed_from_json(nlohmann::json(-1)), ConfigError);
  EXPECT_THROW(seed_from_json(nlohmann::json("x")), ConfigError);
  EXPECT_THROW(seed_from_json(nlohmann::json{{"value", "x"}}), ConfigError);
  EXPECT_EQ(to_string(Seed{5, 3}), "5:3");
  for (std::uint64_t v : {0ULL, 1ULL, 123456789ULL, ~0ULL}) {
    const Seed seed{v, v / 3};
    EXPECT_EQ(seed_from_json(seed_to_json(seed)), seed);
  }
}

TEST(ColumnModel, RejectsBadParameters) {
  EXPECT_THROW(ColumnModel::iid_gaussian(0), ConfigError);
  EXPECT_THROW(ColumnModel::iid_sparse_spike(10, 0.5), ConfigError);
  EXPECT_THROW(ColumnModel::linear_filter(10, std::vector<double>{}), ConfigError);
  EXPECT_THROW(ColumnModel::linear_filter(10, std::vector<double>{0.0, 0.0}), ConfigError);
  EXPECT_THROW(ColumnModel::linear_filter(10, std::size_t{8}, 1.0), ConfigError);
  EXPECT_THROW(ColumnModel::iid_gaussian(4).base(), ConfigError);
}

TEST(ColumnModel, IidFlags) {
  EXPECT_TRUE(ColumnModel::iid_gaussian(3).iid_entries());
  EXPECT_TRUE(ColumnModel::iid_rademacher(3).iid_entries());
  EXPECT_TRUE(ColumnModel::iid_sparse_spike(3).iid_entries());
  EXPECT_FALSE(ColumnModel::sphere_uniform(3).iid_entries());
  EXPECT_FALSE(ColumnModel::linear_filter(3).iid_entries());
  EXPECT_FALSE(ColumnModel::scalar_mixture(ColumnModel::iid_gaussian(3)).iid_entries());
}

TEST(ColumnModel, SpikeQFollowsDimensionWhenUnset) {
  const auto model = ColumnModel::iid_sparse_spike(50);
  EXPECT_EQ(model.spike_q(), 50.0);
  EXPECT_EQ(model.with_dim(200).spike_q(), 200.0);
  EXPECT_EQ(ColumnModel::iid_sparse_spike(50, 4.0).with_dim(200).spike_q(), 4.0);
}

TEST(ColumnModel, WithDimPropagatesToBase) {
  const auto mix = ColumnModel::scalar_mixture(ColumnModel::iid_rademacher(3)).with_dim(9);
  EXPECT_EQ(mix.dim(), 9u);
  EXPECT_EQ(mix.base().dim(), 9u);
  EXPECT_EQ(mix.base().kind(), ColumnModel::Kind::IidRademacher);
}

TEST(ColumnModel, FilterIsNormalized) {
  const auto model = ColumnModel::linear_filter(5, std::vector<double>{3.0, 4.0});
  EXPECT_DOUBLE_EQ(model.filter()[0], 0.6);
  EXPECT_DOUBLE_EQ(model.filter()[1], 0.8);
  EXPECT_NEAR(model.filter_shift_defect(), 0.48, 1e-15);
}

TEST(ColumnModel, DefaultAllPassFilterHasOrthonormalShifts) {
  const auto model = ColumnModel::linear_filter(10);
  EXPECT_EQ(model.filter().size(), ColumnModel::kDefaultFilterLength);
  double norm2 = 0.0;
  for (double c : model.filter()) norm2 += c * c;
  EXPECT_NEAR(norm2, 1.0, 1e-14);
  EXPECT_LT(model.filter_shift_defect(), 1e-9);
  EXPECT_NEAR(model.filter()[0], -0.5, 1e-9);
}

TEST(ColumnModel, SampleIntoChecksLength) {
  auto engine = make_engine(Seed{1, 0});
  std::vector<double> buffer(4);
  EXPECT_THROW(ColumnModel::iid_gaussian(5).sample_into(buffer, engine), PreconditionError);
}

TEST(ColumnModel, Names) {
  const std::vector<std::string> expected{"iid_gaussian",   "iid_rademacher", "iid_sparse_spike",
                                          "sphere_uniform", "linear_filter",  "scalar_mixture"};
  const auto models = all_models(4);
  for (std::size_t i = 0; i < models.size(); ++i) EXPECT_EQ(models[i].name(), expected[i]);
}

TEST(Sampling, SupportOfEntryLaws) {
  const auto rad = sample_column(ColumnModel::iid_rademacher(500), Seed{3, 0});
  for (double x : rad) EXPECT_EQ(std::abs(x), 1.0);

  const auto spike = sample_column(ColumnModel::iid_sparse_spike(400, 16.0), Seed{3, 0});
  int nonzero = 0;
  for (double x : spike) {
    EXPECT_TRUE(x == 0.0 || std::abs(x) == 4.0) << x;
    nonzero += x != 0.0;
  }
  EXPECT_GT(nonzero, 0);

  const auto sphere = sample_column(ColumnModel::sphere_uniform(37), Seed{3, 0});
  EXPECT_NEAR(sphere.squaredNorm(), 37.0, 1e-11);
}

TEST(Sampling, ScalarMixtureNormIsZeroOrTwiceBase) {
  const auto model = ColumnModel::scalar_mixture(ColumnModel::sphere_uniform(20));
  int zeros = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const double norm2 = sample_column(model, Seed{9, k}).squaredNorm();
    if (norm2 == 0.0) {
      ++zeros;
    } else {
      EXPECT_NEAR(norm2, 40.0, 1e-10);
    }
  }
  EXPECT_GT(zeros, 60);
  EXPECT_LT(zeros, 140);
}

TEST(Sampling, MatrixColumnsUseChildSeeds) {
  const auto model = ColumnModel::iid_gaussian(6);
  const Seed seed{11, 2};
  const auto X = sample_matrix(model, 5, seed);
  for (Eigen::Index k = 0; k < 5; ++k) {
    EXPECT_EQ(X.col(k), sample_column(model, seed.child(static_cast<std::uint64_t>(k))));
  }
  EXPECT_EQ(X, sample_matrix(model, 5, seed));
  EXPECT_NE(X, sample_matrix(model, 5, Seed{12, 2}));
}

TEST(Sampling, MatrixBudgetAndShape) {
  const auto model = ColumnModel::iid_gaussian(100);
  EXPECT_THROW(sample_matrix(model, 100, Seed{}, 9999), ResourceError);
  EXPECT_NO_THROW(sample_matrix(model, 100, Seed{}, 10000));
  EXPECT_THROW(sample_matrix(model, 0, Seed{}), ConfigError);
}

// Sample moments over p * n entries. Tolerances are about five standard
// errors of the respective estimators.
struct Moments {
  double mean = 0.0;
  double second = 0.0;
  double lag1 = 0.0;
};

Moments moments(const Eigen::MatrixXd& X) {
  Moments m;
  const double count = static_cast<double>(X.size());
  m.mean = X.sum() / count;
  m.second = X.squaredNorm() / count;
  const auto top = X.topRows(X.rows() - 1);
  const auto bottom = X.bottomRows(X.rows() - 1);
  m.lag1 = top.cwiseProduct(bottom).sum() / static_cast<double>(top.size());
  return m;
}

TEST(SamplingProperty, CentredUnitSecondMoment) {
  const std::size_t p = 200;
  const std::size_t n = 500;
  for (const auto& model : all_models(p)) {
    if (model.kind() == ColumnModel::Kind::IidSparseSpike) continue;  // heavy; see below
    const auto m = moments(sample_matrix(model, n, Seed{2024, 0}));
    EXPECT_NEAR(m.mean, 0.0, 5.0 * std::sqrt(2.0 / (p * n))) << model.name();
    // Scalar mixture: columns share xi, so only n effective draws.
    const double second_tol = model.kind() == ColumnModel::Kind::ScalarMixture
                                  ? 5.0 / std::sqrt(static_cast<double>(n))
                                  : 5.0 * std::sqrt(3.0 / (p * n));
    EXPECT_NEAR(m.second, 1.0, second_tol) << model.name();
    EXPECT_NEAR(m.lag1, 0.0, 5.0 * std::sqrt(2.0 / (p * n))) << model.name();
  }
}

TEST(SamplingProperty, SparseSpikeMomentsAtSmallQ) {
  // q = 4: entries +-2 w.p. 1/8 each; var(X^2) = 16/4 - 1 = 3.
  const auto X = sample_matrix(ColumnModel::iid_sparse_spike(4, 4.0), 20000, Seed{5, 0});
  const auto m = moments(X);
  const double count = static_cast<double>(X.size());
  EXPECT_NEAR(m.mean, 0.0, 5.0 / std::sqrt(count));
  EXPECT_NEAR(m.second, 1.0, 5.0 * std::sqrt(3.0 / count));
  const double nonzero_fraction = (X.array() != 0.0).cast<double>().sum() / count;
  EXPECT_NEAR(nonzero_fraction, 0.25, 5.0 * std::sqrt(0.25 * 0.75 / count));
}

TEST(SamplingProperty, ModelJsonRoundTrip) {
  for (std::size_t p : {1u, 7u, 64u}) {
    for (const auto& model : all_models(p)) {
      const auto j = model_to_json(model);
      const auto back = model_from_json(j, p);
      EXPECT_EQ(back.kind(), model.kind());
      EXPECT_EQ(model_to_json(back), j);
      EXPECT_EQ(sample_column(back, Seed{1, 1}), sample_column(model, Seed{1, 1})) << j.dump();
    }
  }
}

TEST(Sampling, ModelFromJsonForms) {
  EXPECT_EQ(model_from_json("iid_gaussian", 3).kind(), ColumnModel::Kind::IidGaussian);
  const auto spike = model_from_json(nlohmann::json{{"kind", "iid_sparse_spike"}, {"q", 9}}, 3);
  EXPECT_EQ(spike.spike_q(), 9.0);
  const auto filter =
      model_from_json(nlohmann::json{{"kind", "linear_filter"}, {"length", 4}, {"pole", 0.25}}, 3);
  EXPECT_EQ(filter.filter().size(), 4u);
  const auto mix = model_from_json(nlohmann::json{{"kind", "scalar_mixture"}}, 3);
  EXPECT_EQ(mix.base().kind(), ColumnModel::Kind::IidGaussian);
  EXPECT_THROW(model_from_json("cauchy", 3), ConfigError);
  EXPECT_THROW(model_from_json(nlohmann::json{{"q", 1}}, 3), ConfigError);
  EXPECT_THROW(model_from_json(nlohmann::json{{"kind", "linear_filter"}, {"coefficients", "x"}}, 3),
               ConfigError);
  EXPECT_THROW(model_from_json(nlohmann::json{{"kind", "iid_sparse_spike"}, {"q", 0.1}}, 3),
               ConfigError);
}

}  // namespace
}  // namespace mpspectra
