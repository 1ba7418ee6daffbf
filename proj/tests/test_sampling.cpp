#include "tsv/sampling.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace tsv;
using tsv::testing::gen;
using tsv::testing::ksCritical1pct;
using tsv::testing::ksStatistic;

namespace {

StateVector bornForward(std::size_t d, double p) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
  v(0) = std::sqrt(p);
  v(1) = std::sqrt(1.0 - p);
  return StateVector::normalize(v);
}

OrthonormalBasis tilted(double thetaDeg) {
  const double h = thetaDeg * std::numbers::pi / 360.0;
  CMatrix m(2, 2);
  m << std::cos(h), -std::sin(h), std::sin(h), std::cos(h);
  return OrthonormalBasis::fromColumns(m);
}

double uniformCdf(double q) { return std::clamp(q, 0.0, 1.0); }

}  // namespace

TEST(RngStream, SampleIsPureFunctionOfIndex) {
  const RngStream s(42, 3);
  auto a = s.sample(17);
  auto b = RngStream(42, 3).sample(17);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(RngStream(42, 3).sample(18).next(), RngStream(42, 3).sample(17).next());
  EXPECT_NE(RngStream(42, 4).sample(17).next(), RngStream(42, 3).sample(17).next());
  EXPECT_NE(RngStream(43, 3).sample(17).next(), RngStream(42, 3).sample(17).next());
}

TEST(RngStream, UniformRange) {
  auto g = gen(20);
  for (int i = 0; i < 100000; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = g.uniformPositive();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(HaarState, Normalized) {
  for (int i = 0; i < 10000; ++i) {
    auto g = gen(21, i);
    EXPECT_NEAR(haarState(2 + i % 8, g).amplitudes().norm(), 1.0, 1e-12);
  }
  auto g = gen(21);
  EXPECT_THROW(haarState(1, g), InvalidArgument);
}

TEST(HaarState, OverlapMarginalQubitIsUniform) {
  const StateVector a = tsv::testing::ket({0.6, Complex(0.0, 0.8)});
  std::vector<double> q;
  for (int i = 0; i < 10000; ++i) {
    auto g = gen(22, i);
    q.push_back(overlapSquared(haarState(2, g), a));
  }
  EXPECT_LT(ksStatistic(q, uniformCdf), ksCritical1pct(q.size()));
}

TEST(HaarState, OverlapMarginalQutritIsBeta12) {
  const StateVector a = StateVector::basis(3, 1);
  std::vector<double> q;
  for (int i = 0; i < 10000; ++i) {
    auto g = gen(23, i);
    q.push_back(overlapSquared(haarState(3, g), a));
  }
  // density 2(1−q), CDF 1 − (1−q)²
  const auto cdf = [](double x) { return 1.0 - std::pow(1.0 - std::clamp(x, 0.0, 1.0), 2); };
  EXPECT_LT(ksStatistic(q, cdf), ksCritical1pct(q.size()));
  // The uniform law must be rejected at this sample size.
  EXPECT_GT(ksStatistic(q, uniformCdf), ksCritical1pct(q.size()));
}

TEST(HaarState, InvariantUnderFixedUnitary) {
  // Marginal of |⟨Un|a⟩|² matches that of |⟨n|a⟩|².
  auto ug = gen(24);
  const UnitaryOperator u = haarUnitary(3, ug);
  const StateVector a = StateVector::basis(3, 0);
  std::vector<double> q;
  for (int i = 0; i < 10000; ++i) {
    auto g = gen(25, i);
    q.push_back(overlapSquared(u.apply(haarState(3, g)), a));
  }
  const auto cdf = [](double x) { return 1.0 - std::pow(1.0 - std::clamp(x, 0.0, 1.0), 2); };
  EXPECT_LT(ksStatistic(q, cdf), ksCritical1pct(q.size()));
}

TEST(BackwardUniformOverlap, MeanOverlapIsHalf) {
  const StateVector a = StateVector::basis(3, 2);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    auto g = gen(26, i);
    sum += overlapSquared(backwardUniformOverlap(a, g), a);
  }
  const double stderr_ = std::sqrt(1.0 / 12.0 / n);
  EXPECT_NEAR(sum / n, 0.5, 3.0 * stderr_);
}

TEST(BackwardUniformOverlap, OverlapIsUniformInEachDimension) {
  for (std::size_t d : {2u, 3u, 4u}) {
    auto tg = gen(27, d);
    const StateVector a = haarState(d, tg);
    std::vector<double> q;
    for (int i = 0; i < 10000; ++i) {
      auto g = gen(28 + d, i);
      const StateVector n = backwardUniformOverlap(a, g);
      ASSERT_NEAR(n.amplitudes().norm(), 1.0, 1e-12);
      q.push_back(overlapSquared(n, a));
    }
    EXPECT_LT(ksStatistic(q, uniformCdf), ksCritical1pct(q.size())) << "d=" << d;
  }
}

TEST(BackwardUniformOverlap, ComplementDirectionIsHaar) {
  // At d=3 the weight on e1 within the complement of e0 is uniform on [0,1].
  const StateVector a = StateVector::basis(3, 0);
  std::vector<double> w;
  for (int i = 0; i < 10000; ++i) {
    auto g = gen(31, i);
    const StateVector n = backwardUniformOverlap(a, g);
    const double rest = std::norm(n[1]) + std::norm(n[2]);
    if (rest > 1e-6) w.push_back(std::norm(n[1]) / rest);
  }
  EXPECT_LT(ksStatistic(w, uniformCdf), ksCritical1pct(w.size()));
}

TEST(BornMc, UniformOverlapReproducesBorn) {
  const StateVector a = StateVector::basis(2, 0);
  const BornEstimate e = bornMc(bornForward(2, 0.7), a, UniformOverlap{a}, 100000, 42);
  EXPECT_NEAR(e.stdErr, std::sqrt(0.7 * 0.3 / 1e5), 2e-5);
  EXPECT_LT(std::abs(e.frequency - 0.7), 4.0 * e.stdErr);
}

TEST(BornMc, FixedBackwardIsDeterministic) {
  const StateVector a = StateVector::basis(2, 0);
  const BornEstimate e = bornMc(bornForward(2, 0.7), a, Fixed{tsv::testing::plus()}, 1000, 1);
  EXPECT_EQ(e.frequency, 1.0);
  EXPECT_EQ(e.hits, 1000u);
  EXPECT_EQ(e.stdErr, 0.0);
}

TEST(BornMc, HaarQutritGivesSquare) {
  const StateVector a = StateVector::basis(3, 0);
  const BornEstimate e = bornMc(bornForward(3, 0.5), a, HaarPure{}, 100000, 7);
  EXPECT_LT(std::abs(e.frequency - 0.25), 4.0 * e.stdErr);
}

TEST(BornMc, Errors) {
  const StateVector a = StateVector::basis(2, 0);
  EXPECT_THROW(bornMc(StateVector::basis(3, 0), a, HaarPure{}, 10, 1), DimensionMismatch);
  EXPECT_THROW(bornMc(a, a, UniformOverlap{StateVector::basis(3, 0)}, 10, 1), DimensionMismatch);
  EXPECT_THROW(bornMc(a, a, HaarPure{}, 0, 1), InvalidArgument);
}

TEST(BornMc, StdErrFormula) {
  for (std::uint64_t hits : {0u, 1u, 500u, 999u, 1000u}) {
    const BornEstimate e = BornEstimate::fromCounts(hits, 1000);
    const double f = static_cast<double>(hits) / 1000.0;
    EXPECT_NEAR(e.stdErr, std::sqrt(f * (1.0 - f) / 1000.0), 1e-12);
  }
}

TEST(BornMc, WithinFourSigmaAcrossSeeds) {
  // 100 independent seeds at N=1e4 for every (d, p); at least 99 must land
  // within 4 standard errors.
  for (std::size_t d : {2u, 3u, 4u}) {
    const StateVector a = StateVector::basis(d, 0);
    for (int pi = 1; pi <= 9; ++pi) {
      const double p = pi / 10.0;
      const StateVector fwd = bornForward(d, p);
      int ok = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const BornEstimate e = bornMc(fwd, a, UniformOverlap{a}, 10000, 1000 + seed, 0.0, 4);
        ok += std::abs(e.frequency - p) <= 4.0 * e.stdErr;
      }
      EXPECT_GE(ok, 99) << "d=" << d << " p=" << p;
    }
  }
}

TEST(BornMc, IndependentOfWorkerCount) {
  const StateVector a = StateVector::basis(4, 0);
  const StateVector fwd = bornForward(4, 0.3);
  const BornEstimate ref = bornMc(fwd, a, UniformOverlap{a}, 20011, 5, 0.0, 1);
  for (unsigned w : {2u, 3u, 8u, 64u}) {
    const BornEstimate e = bornMc(fwd, a, UniformOverlap{a}, 20011, 5, 0.0, w);
    EXPECT_EQ(e.hits, ref.hits);
    EXPECT_EQ(e.frequency, ref.frequency);
    EXPECT_EQ(e.stdErr, ref.stdErr);
  }
  EXPECT_EQ(bornMc(fwd, a, HaarPure{}, 3, 5, 0.0, 8).samples, 3u);
}

TEST(BornMc, InvariantUnderGlobalPhase) {
  const StateVector a = StateVector::basis(3, 0);
  const StateVector fwd = bornForward(3, 0.6);
  const BornEstimate ref = bornMc(fwd, a, HaarPure{}, 20000, 9);
  const BornEstimate ph = bornMc(fwd.withPhase(1.1), a.withPhase(-0.4), HaarPure{}, 20000, 9);
  EXPECT_EQ(ph.hits, ref.hits);
}

TEST(BasisMc, FixedForwardGivesCertainOutcome) {
  const StateVector e0 = StateVector::basis(3, 0);
  const BasisEstimate e = basisMc(e0, OrthonormalBasis::computational(3), Fixed{e0}, 500, 1);
  EXPECT_EQ(e.counts, (std::vector<std::uint64_t>{500, 0, 0}));
  EXPECT_EQ(e.noAssignRate, 0.0);
  EXPECT_EQ(e.outcomes[0].frequency, 1.0);
}

TEST(BasisMc, AlignedQubitBasisUnderHaar) {
  // forward = |z⟩ and basis {|z⟩, |−z⟩}: p = 1 on the first outcome, so
  // 1 + q > 1 for every q > 0 and the first outcome is (almost surely) always
  // assigned; the second has p = 0 and needs q > 1, which never happens.
  const StateVector z = StateVector::basis(2, 0);
  const BasisEstimate e = basisMc(z, OrthonormalBasis::computational(2), HaarPure{}, 100000, 3);
  EXPECT_EQ(e.counts[1], 0u);
  EXPECT_GE(e.outcomes[0].frequency, 1.0 - 1e-4);
  EXPECT_LE(e.noAssignRate, 1e-4);
  EXPECT_EQ(e.conditional(0).frequency, 1.0);
}

TEST(BasisMc, BellModelTiltedBasis) {
  const StateVector z = StateVector::basis(2, 0);
  for (double theta : {30.0, 60.0, 90.0, 120.0, 150.0}) {
    const BasisEstimate e = basisMc(z, tilted(theta), HaarPure{}, 100000, 11, 0.0, 4);
    const BornEstimate c = e.conditional(0);
    const double born = std::pow(std::cos(theta * std::numbers::pi / 360.0), 2);
    EXPECT_LT(std::abs(c.frequency - born), 4.0 * c.stdErr) << "theta=" << theta;
  }
}

TEST(BasisMc, CountsSumToSamples) {
  for (int i = 0; i < 20; ++i) {
    auto g = gen(32, i);
    const std::size_t d = 2 + i % 5;
    const BasisEstimate e =
        basisMc(haarState(d, g), haarBasis(d, g), HaarPure{}, 997, static_cast<std::uint64_t>(i), 0.0, 1 + i % 4);
    std::uint64_t total = e.noAssignCount;
    for (auto c : e.counts) total += c;
    EXPECT_EQ(total, e.samples);
    double f = e.noAssignRate;
    for (const auto& o : e.outcomes) f += o.frequency;
    EXPECT_NEAR(f, 1.0, 1e-12);
  }
}

TEST(BasisMc, IndependentOfWorkerCount) {
  auto g = gen(33);
  const StateVector fwd = haarState(5, g);
  const OrthonormalBasis b = haarBasis(5, g);
  const BasisEstimate ref = basisMc(fwd, b, UniformOverlap{b[0]}, 30000, 2, 0.0, 1);
  for (unsigned w : {2u, 8u}) {
    const BasisEstimate e = basisMc(fwd, b, UniformOverlap{b[0]}, 30000, 2, 0.0, w);
    EXPECT_EQ(e.counts, ref.counts);
    EXPECT_EQ(e.noAssignCount, ref.noAssignCount);
  }
}

TEST(ShardedTally, RethrowsWorkerException) {
  EXPECT_THROW(shardedTally(100, 4, 1,
                            [](std::uint64_t i) -> std::optional<std::size_t> {
                              if (i == 77) throw MultipleOutcomes("boom");
                              return 0;
                            }),
               MultipleOutcomes);
}

TEST(BornOracle, Examples) {
  EXPECT_EQ(bornOracle(UniformOverlap{StateVector::basis(5, 0)}, 0.3, 5), 0.3);
  EXPECT_EQ(bornOracle(HaarPure{}, 0.5, 2), 0.5);
  EXPECT_EQ(bornOracle(HaarPure{}, 0.5, 3), 0.25);
  EXPECT_THROW(bornOracle(Fixed{StateVector::basis(2, 0)}, 0.5, 2), NotApplicable);
  EXPECT_THROW(bornOracle(HaarPure{}, 1.5, 2), InvalidArgument);
}

TEST(BornOracle, HaarTailMatchesNumericalIntegral) {
  // ∫_{1−p}^{1} (d−1)(1−q)^{d−2} dq by the midpoint rule.
  for (std::size_t d : {2u, 3u, 4u, 6u}) {
    for (double p : {0.1, 0.35, 0.8}) {
      const int n = 20000;
      const double h = p / n;
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double q = 1.0 - p + (i + 0.5) * h;
        s += (d - 1.0) * std::pow(1.0 - q, static_cast<double>(d) - 2.0) * h;
      }
      EXPECT_NEAR(bornOracle(HaarPure{}, p, d), s, 1e-7);
    }
  }
}
