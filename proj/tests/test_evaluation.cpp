/* Copyright 2026 The MIQA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include "miqa/degradation/random.hpp"
#include "miqa/evaluation/report.hpp"
#include "miqa/synthetic.hpp"
#include "oracles.hpp"

namespace miqa {
namespace {

std::vector<double> random_vector(std::mt19937& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  std::uniform_int_distribution<int> small(0, 4);
  std::normal_distribution<double> g;
  for (auto& x : v) x = ties ? small(rng) : g(rng);
  return v;
}

TEST(Correlation, SelfIsPerfect) {
  const std::vector<double> a{0.3, 1.5, -2, 7, 4.25};
  EXPECT_NEAR(*srcc(a, a), 1.0, 1e-15);
  EXPECT_NEAR(*plcc(a, a), 1.0, 1e-15);
  EXPECT_NEAR(*krcc(a, a), 1.0, 1e-15);
  EXPECT_EQ(rmse(a, a), 0.0);
}

TEST(Correlation, KendallThreePairs) {
  const std::vector<double> a{1, 2, 3}, b{1, 3, 2};
  EXPECT_EQ(*krcc(a, b), 1.0 / 3.0);
}

TEST(Correlation, UndefinedOnZeroVariance) {
  const std::vector<double> a{1, 2, 3}, c{5, 5, 5};
  EXPECT_FALSE(srcc(a, c).has_value());
  EXPECT_FALSE(plcc(a, c).has_value());
  EXPECT_FALSE(krcc(c, a).has_value());
}

TEST(Correlation, InputErrors) {
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  EXPECT_THROW(srcc(a, b), ValidationError);
  EXPECT_THROW(rmse(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
}

TEST(Correlation, MatchesDefinitionalOracles) {
  std::mt19937 rng(17);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 199;
    const bool ties = t % 3 == 0;
    const auto a = random_vector(rng, n, ties), b = random_vector(rng, n, ties || t % 5 == 0);
    auto same = [](Correlation x, std::optional<double> y) {
      return x.has_value() == y.has_value() && (!x || std::abs(*x - *y) <= 1e-12);
    };
    EXPECT_TRUE(same(srcc(a, b), oracle::spearman(a, b))) << t;
    EXPECT_TRUE(same(plcc(a, b), oracle::pearson(a, b))) << t;
    EXPECT_TRUE(same(krcc(a, b), oracle::kendall(a, b))) << t;
    EXPECT_NEAR(rmse(a, b), oracle::rmse(a, b), 1e-12);
  }
}

TEST(Correlation, RankInvariance) {
  std::mt19937 rng(23);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_vector(rng, 60, t % 2), b = random_vector(rng, 60, t % 3 == 0);
    std::vector<double> gb(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) gb[i] = std::exp(b[i]) + b[i] * b[i] * b[i];
    EXPECT_NEAR(*srcc(a, gb), *srcc(a, b), 1e-12);
    EXPECT_NEAR(*krcc(a, gb), *krcc(a, b), 1e-12);
  }
}

TEST(Logistic, LinearDataIsReproduced) {
  std::vector<double> q, y;
  for (int i = 0; i < 50; ++i) {
    q.push_back(0.1 * i - 1.3);
    y.push_back(0.7 * q.back() + 0.2);
  }
  const auto fit = fit_logistic(q, y);
  EXPECT_LE(rmse(apply_logistic(fit.params, q), y), 1e-8);
}

TEST(Logistic, PlantedCurveIsRecovered) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    const LogisticParams planted{{0.4 + u(rng), 3 + 10 * u(rng), 0.3 + 0.4 * u(rng), 0.2 * u(rng) - 0.1, u(rng)}};
    std::vector<double> q, y;
    for (int i = 0; i < 200; ++i) {
      q.push_back(u(rng));
      y.push_back(planted(q.back()));
    }
    const auto fit = fit_logistic(q, y);
    EXPECT_LE(rmse(apply_logistic(fit.params, q), y), 1e-6) << "trial " << t;
  }
}

TEST(Logistic, NeverWorseThanStart) {
  std::mt19937 rng(6);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 5 + rng() % 60;
    std::vector<double> q(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = g(rng);
      y[i] = (t % 2 ? std::tanh(2 * q[i]) : q[i] * q[i]) + 0.3 * g(rng);
    }
    const auto fit = fit_logistic(q, y);
    EXPECT_LE(fit.sse, fit.initial_sse);
    EXPECT_LE(fit.sse, fit.linear_sse * (1 + 1e-12));
    EXPECT_NEAR(fit.sse, logistic_sse(fit.params, q, y), 1e-12 * (1 + fit.sse));
  }
}

TEST(Logistic, DegenerateInputs) {
  const std::vector<double> c{1, 1, 1, 1, 1}, y{1, 2, 3, 4, 5};
  EXPECT_THROW(fit_logistic(c, y), ValidationError);
  EXPECT_THROW(fit_logistic(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}), ValidationError);
  EXPECT_THROW(fit_logistic(y, std::vector<double>{1, 2}), ValidationError);
}

TEST(Logistic, ExponentClamped) {
  const LogisticParams p{{1, 1e6, 0, 0, 0}};
  EXPECT_TRUE(std::isfinite(p(1e3)));
  EXPECT_TRUE(std::isfinite(p(-1e3)));
}

// Labels from a synthetic ensemble on an in-memory 3-image manifest.
LabelTable synthetic_labels() {
  DatasetManifest m;
  for (int i = 0; i < 3; ++i) {
    ManifestImage im;
    im.image_id = "img" + std::to_string(i);
    im.ground_truth = ClassPrediction{i, 1.0};
    m.images.push_back(im);
  }
  return synth::closed_form_labels(synth::default_ensemble(TaskKind::kClassification), m, MatchConfig{}, {});
}

ScoreTable noised(const LabelTable& labels, std::uint64_t seed) {
  const CounterRng rng(seed, 77);
  ScoreTable s;
  std::uint64_t i = 0;
  for (const auto& [k, q] : labels) s[k] = q.composite + 0.05 * rng.normal(i++);
  return s;
}

TEST(Evaluate, IdentityPrediction) {
  const auto labels = synthetic_labels();
  ScoreTable s;
  for (const auto& [k, q] : labels) s[k] = q.composite;
  const auto r = evaluate(s, labels, LabelKind::kComposite);
  EXPECT_NEAR(*r.overall.srcc, 1.0, 1e-12);
  EXPECT_NEAR(*r.overall.plcc, 1.0, 1e-9);
  EXPECT_LE(*r.overall.rmse, 1e-6);
}

TEST(Evaluate, MonotoneTransform) {
  const auto labels = synthetic_labels();
  ScoreTable s;
  std::vector<double> raw, y;
  for (const auto& [k, q] : labels) {
    s[k] = std::exp(3 * q.accuracy);
    raw.push_back(s[k]);
    y.push_back(q.accuracy);
  }
  const auto r = evaluate(s, labels, LabelKind::kAccuracy);
  EXPECT_NEAR(*r.overall.srcc, 1.0, 1e-12);
  EXPECT_NEAR(*r.overall.krcc, 1.0, 1e-12);
  EXPECT_GE(*r.overall.plcc, *plcc(raw, y) - 1e-12);
}

// Oracle: regroup samples by hand, then use the definitional statistics
// with a fresh logistic fit per group.
struct OracleStats {
  std::size_t n = 0;
  std::optional<double> srcc, plcc, krcc, rmse;
};

OracleStats oracle_stats(const std::vector<double>& q, const std::vector<double>& y) {
  OracleStats s;
  s.n = q.size();
  if (s.n < 5) return s;
  s.srcc = oracle::spearman(q, y);
  s.krcc = oracle::kendall(q, y);
  if (*std::min_element(q.begin(), q.end()) == *std::max_element(q.begin(), q.end())) return s;
  const auto fit = fit_logistic(q, y);
  std::vector<double> mapped;
  for (double v : q) mapped.push_back(fit.params(v));
  s.plcc = oracle::pearson(mapped, y);
  s.rmse = oracle::rmse(mapped, y);
  return s;
}

void expect_same(const StratumStats& got, const OracleStats& want, const std::string& where) {
  EXPECT_EQ(got.n, want.n) << where;
  auto cmp = [&](const std::optional<double>& a, const std::optional<double>& b, const char* what) {
    ASSERT_EQ(a.has_value(), b.has_value()) << where << " " << what;
    if (a) {
      EXPECT_NEAR(*a, *b, 1e-9) << where << " " << what;
    }
  };
  cmp(got.srcc, want.srcc, "srcc");
  cmp(got.plcc, want.plcc, "plcc");
  cmp(got.krcc, want.krcc, "krcc");
  cmp(got.rmse, want.rmse, "rmse");
}

TEST(Evaluate, NoisedSyntheticMatchesOracle) {
  const auto labels = synthetic_labels();
  const auto scores = noised(labels, 5);
  for (auto kind : kAllLabelKinds) {
    const auto r = evaluate(scores, labels, kind, 2);
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& [k, q] : labels) {
      const double y = kind == LabelKind::kConsistency ? q.consistency
                       : kind == LabelKind::kAccuracy  ? q.accuracy
                                                       : q.composite;
      const auto region = std::string(to_string(k.spec.region_mode()));
      const auto type = std::string(to_string(k.spec.type));
      const auto cell = std::to_string(k.spec.roi_level) + "_" + std::to_string(k.spec.bg_level);
      for (const auto& g : {std::string("overall"), "region:" + region, "type:" + type, "cell:" + cell,
                            "stratum:" + region + "|" + type + "|" + cell}) {
        groups[g].first.push_back(scores.at(k));
        groups[g].second.push_back(y);
      }
    }
    expect_same(r.overall, oracle_stats(groups["overall"].first, groups["overall"].second), "overall");
    for (const auto& [reg, s] : r.by_region) {
      const auto& g = groups["region:" + std::string(to_string(reg))];
      expect_same(s, oracle_stats(g.first, g.second), "region");
    }
    for (const auto& [t, s] : r.by_type) {
      const auto& g = groups["type:" + std::string(to_string(t))];
      expect_same(s, oracle_stats(g.first, g.second), "type");
    }
    for (const auto& [c, s] : r.by_cell) {
      const auto& g = groups["cell:" + c.label()];
      expect_same(s, oracle_stats(g.first, g.second), "cell");
    }
    for (const auto& [k, s] : r.strata) {
      const auto& g =
          groups["stratum:" + std::string(to_string(k.region)) + "|" + std::string(to_string(k.type)) + "|" +
                 k.cell.label()];
      expect_same(s, oracle_stats(g.first, g.second), to_string(k));
    }
    EXPECT_EQ(groups.size(), 1 + r.by_region.size() + r.by_type.size() + r.by_cell.size() + r.strata.size());
  }
}

TEST(Evaluate, StrataPartitionAndInsufficiency) {
  const auto labels = synthetic_labels();
  const auto r = evaluate(noised(labels, 1), labels, LabelKind::kComposite);
  std::size_t total = 0;
  for (const auto& [k, s] : r.strata) {
    total += s.n;
    EXPECT_EQ(s.n, 3u);  // one sample per image
    EXPECT_FALSE(s.sufficient);
    EXPECT_FALSE(s.srcc.has_value());
  }
  EXPECT_EQ(total, r.overall.n);
  EXPECT_EQ(r.strata.size(), 250u);
  EXPECT_EQ(r.by_region.size(), 3u);
  EXPECT_EQ(r.by_type.size(), 10u);
  EXPECT_EQ(r.by_cell.size(), 25u);
  EXPECT_EQ(r.by_region.at(RegionMode::kUniform).n, 150u);
}

TEST(Evaluate, KeyMismatch) {
  const auto labels = synthetic_labels();
  auto scores = noised(labels, 1);
  scores.erase(scores.begin());
  EXPECT_THROW(evaluate(scores, labels, LabelKind::kComposite), ValidationError);
  EXPECT_THROW(evaluate({}, {}, LabelKind::kComposite), ValidationError);
}

}  // namespace
}  // namespace miqa
