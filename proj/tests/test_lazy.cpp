#include <gtest/gtest.h>

#include <cmath>

#include "erm/dasvrda.hpp"
#include "erm/lazy.hpp"
#include "test_util.hpp"

using namespace erm;
using erm::testing::random_problem;
using erm::testing::random_vector;

namespace {

struct Replay {
  std::vector<double> z;  // z[k'] for k' = kj..k
  std::vector<double> x;
};

// Iterate a coordinate whose gradient stays at grad_tilde from iteration kj+1 to k,
// exactly as the dense inner loop does.
Replay replay(double z0, double gsum_kj, double x_kj, double g, double eta, double l1, double l2,
              std::int64_t kj, std::int64_t k) {
  Replay r;
  double gsum = gsum_kj, x = x_kj;
  r.z.push_back(NAN);
  r.x.push_back(x);
  for (std::int64_t kk = kj + 1; kk <= k; ++kk) {
    gsum += ((kk - 1) + 1) / 2.0 * g;
    const double tau = eta * kk * (kk + 1) / 4.0;
    const double z = soft(z0 - eta * gsum, tau * l1) / (1.0 + tau * l2);
    const double th = (kk + 1) / 2.0;
    x = (1 - 1 / th) * x + z / th;
    r.z.push_back(z);
    r.x.push_back(x);
  }
  return r;
}

}  // namespace

TEST(KSets, MatchPointwiseThresholds) {
  RngStream rng(1);
  int nonempty_plus = 0, nonempty_minus = 0, split = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const double scale = std::exp(4.0 * rng.normal());
    const double c1 = rng.normal() * scale * (trial % 7 == 0 ? 0.0 : 1.0);
    const double c2 = std::abs(rng.normal()) * scale * (trial % 11 == 0 ? 0.0 : 1.0);
    const double c3 = rng.normal() * scale * 50;
    const double z0 = rng.normal() * scale * 50;
    const std::int64_t kj = static_cast<std::int64_t>(rng.uniform_index(200));
    const std::int64_t k = kj + static_cast<std::int64_t>(rng.uniform_index(400));
    const lazy::KSets ks = lazy::compute_k_sets(c1, c2, c3, z0, kj, k);
    ASSERT_LE(ks.plus.count, 1);
    ASSERT_LE(ks.minus.count, 1);
    for (std::int64_t kp = kj + 2; kp <= k; ++kp) {
      const bool plus = z0 > lazy::threshold_m(c1 + c2, c3, kp);
      const bool minus = z0 < lazy::threshold_m(c1 - c2, c3, kp);
      ASSERT_EQ(ks.plus.contains(kp), plus) << trial << " " << kp;
      ASSERT_EQ(ks.minus.contains(kp), minus) << trial << " " << kp;
    }
    for (std::int64_t kp : {kj + 1, kj, k + 1}) {
      ASSERT_FALSE(ks.plus.contains(kp));
      ASSERT_FALSE(ks.minus.contains(kp));
    }
    nonempty_plus += !ks.plus.empty();
    nonempty_minus += !ks.minus.empty();
    split += !ks.plus.empty() && ks.plus.size() < k - kj - 1;
  }
  EXPECT_GT(nonempty_plus, 1000);
  EXPECT_GT(nonempty_minus, 1000);
  EXPECT_GT(split, 100);
}

TEST(KSets, EmptyRangeWhenNoSkippedIterations) {
  const lazy::KSets ks = lazy::compute_k_sets(1.0, 0.5, 0.0, 10.0, 5, 6);
  EXPECT_TRUE(ks.plus.empty());
  EXPECT_TRUE(ks.minus.empty());
}

TEST(PrefixTables, MatchDirectSums) {
  const double eta = 0.3, l2 = 0.7;
  const lazy::PrefixTables t(eta, l2, 300);
  for (std::int64_t k = 0; k <= 300; k += 7) {
    long double s = 0, sp = 0;
    for (std::int64_t kp = 1; kp <= k; ++kp) {
      const long double th1 = kp / 2.0L, th2 = (kp - 1) / 2.0L;
      const long double den = 1 + eta * th1 * th2 * l2;
      s += th2 / den;
      sp += th1 * th2 * th2 / den;
    }
    EXPECT_NEAR(t.s(k), static_cast<double>(s), 1e-12 * std::max(1.0L, s));
    EXPECT_NEAR(t.s_prime(k), static_cast<double>(sp), 1e-12 * std::max(1.0L, sp));
  }
  EXPECT_EQ(t.s(0), 0.0);
  EXPECT_EQ(t.sum_s(lazy::Interval{4, 3}), 0.0);
}

TEST(LazyCoordinate, MatchesReplayOfSkippedIterations) {
  RngStream rng(2);
  int checked = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const double eta = std::exp(rng.normal() - 3.0);
    const double l1 = trial % 5 == 0 ? 0.0 : std::abs(rng.normal()) * 0.1;
    const double l2 = trial % 3 == 0 ? 0.0 : std::abs(rng.normal()) * 0.1;
    const double g = rng.normal() * 0.2;
    const double z0 = rng.normal();
    const std::int64_t kj = static_cast<std::int64_t>(rng.uniform_index(50));
    const std::int64_t k = kj + 1 + static_cast<std::int64_t>(rng.uniform_index(300));
    const double gsum_kj = kj == 0 ? 0.0 : rng.normal() * inner_theta_pair(kj) * 0.2;
    const double x_kj = rng.normal();
    const Replay r = replay(z0, gsum_kj, x_kj, g, eta, l1, l2, kj, k);
    const lazy::PrefixTables tables(eta, l2, k + 1);
    const lazy::CoordContext c{z0, gsum_kj, g, kj};
    for (std::int64_t target = kj + 1; target <= k + 1; target += 1 + (k - kj) / 9) {
      // x_{target-1}
      const double expect_x = r.x[target - 1 - kj];
      const lazy::KSets ks = lazy::k_sets_for(c, target, eta, l1);
      const double got_x = lazy::lazy_x(x_kj, c, target, ks, tables, eta, l1);
      ASSERT_NEAR(got_x, expect_x, 1e-10 * std::max(1.0, std::abs(expect_x))) << trial;
      if (target <= k) {
        const double got_z = lazy::lazy_z(z0, gsum_kj, g, eta, l1, l2, inner_theta_pair(target),
                                          inner_theta_pair(kj));
        const double expect_z = r.z[target - kj];
        ASSERT_NEAR(got_z, expect_z, 1e-10 * std::max(1.0, std::abs(expect_z))) << trial;
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST(LazyStage, MatchesDenseEveryIteration) {
  RngStream gen(3);
  for (int inst = 0; inst < 8; ++inst) {
    const Problem p = random_problem(gen, 60, 150, 0.03, Loss::logistic(), ElasticNet(1e-3, 1e-2));
    const Vector y = random_vector(gen, p.d(), 0.1), anchor = random_vector(gen, p.d(), 0.1);
    const SamplingScheme s = inst % 2 ? SamplingScheme::iid_uniform(p.n())
                                      : SamplingScheme::iid_weighted(p.smoothness());
    const std::size_t b = 1 + inst % 4;
    std::vector<Vector> dx, dz;
    RngStream a(100 + inst), c(100 + inst);
    const StageOutput dense =
        one_stage_accsvrda(p, y, anchor, 0.5, 200, b, s, a, Engine::Dense, [&](const InnerSnapshot& q) {
          dx.emplace_back(q.x.begin(), q.x.end());
          dz.emplace_back(q.z.begin(), q.z.end());
        });
    std::size_t k = 0;
    double worst = 0.0;
    const StageOutput lz =
        one_stage_accsvrda(p, y, anchor, 0.5, 200, b, s, c, Engine::Lazy, [&](const InnerSnapshot& q) {
          for (std::size_t j = 0; j < p.d(); ++j) {
            worst = std::max(worst, std::abs(q.x[j] - dx[k][j]) / std::max(1.0, std::abs(dx[k][j])));
            worst = std::max(worst, std::abs(q.z[j] - dz[k][j]) / std::max(1.0, std::abs(dz[k][j])));
          }
          ++k;
        });
    EXPECT_EQ(k, 200u);
    EXPECT_LT(worst, 1e-9) << inst;
    EXPECT_TRUE(lz.lazy);
    EXPECT_FALSE(dense.lazy);
    for (std::size_t j = 0; j < p.d(); ++j) {
      EXPECT_NEAR(lz.x[j], dense.x[j], 1e-9 * std::max(1.0, std::abs(dense.x[j])));
      EXPECT_NEAR(lz.z[j], dense.z[j], 1e-9 * std::max(1.0, std::abs(dense.z[j])));
    }
  }
}

TEST(LazyStage, WorkIsProportionalToTouchedCoordinates) {
  RngStream gen(4);
  const Problem p = random_problem(gen, 100, 2000, 0.002, Loss::logistic(), ElasticNet(1e-3, 0.0));
  const Vector y(p.d(), 0.0);
  const SamplingScheme s = SamplingScheme::iid_uniform(p.n());
  const VarianceReducedGradient est(p, y);
  lazy::AccSvrdaStage stage(p, est, y, 0.1, 300);
  RngStream rng(5);
  std::vector<std::size_t> batch;
  std::uint64_t nnz = 0;
  for (int k = 0; k < 300; ++k) {
    s.draw_batch(rng, 2, batch);
    for (std::size_t i : batch) nnz += p.data().row(i).nnz();
    stage.step(s, batch);
  }
  stage.finish();
  EXPECT_LE(stage.stats().touched, nnz);
  EXPECT_LE(stage.stats().max_active, 2 * p.data().max_row_nnz());
  EXPECT_GT(stage.stats().final_sweep, 0u);
  EXPECT_LE(stage.stats().final_sweep, p.d());
}

TEST(LazyStage, RejectsNonElasticNet) {
  RngStream gen(6);
  CustomRegularizer zero{[](std::span<const double>) { return 0.0; },
                         [](std::span<const double> z, double, std::span<double> out) {
                           std::copy(z.begin(), z.end(), out.begin());
                         }};
  const Problem p(erm::testing::random_dataset(gen, 10, 20, 0.1, true), Loss::logistic(), zero);
  const Vector y(p.d(), 0.0);
  const SamplingScheme s = SamplingScheme::iid_uniform(p.n());
  RngStream rng(7);
  EXPECT_THROW(lazy_one_stage_accsvrda(p, y, y, 0.1, 5, 1, s, rng), Error);
}

TEST(LazyStage, AutoEngineSelection) {
  RngStream gen(8);
  const Problem sparse = random_problem(gen, 10, 100, 0.05, Loss::logistic(), ElasticNet(0, 0));
  const Problem dense = random_problem(gen, 10, 10, 0.9, Loss::logistic(), ElasticNet(0, 0));
  EXPECT_TRUE(use_lazy(sparse, Engine::Auto));
  EXPECT_FALSE(use_lazy(dense, Engine::Auto));
  EXPECT_TRUE(use_lazy(dense, Engine::Lazy));
  EXPECT_FALSE(use_lazy(sparse, Engine::Dense));
}
