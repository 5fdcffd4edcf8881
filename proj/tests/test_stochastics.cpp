#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "boxchain/rng.hpp"
#include "boxchain/stochastics.hpp"
#include "test_support.hpp"

using namespace boxchain;
namespace ts = testsupport;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("poisson pmf matches closed forms and the log-gamma oracle") {
  CHECK_THAT(poisson_pmf(3.0, 3), WithinRel(std::exp(-3.0) * 27.0 / 6.0, 1e-14));
  CHECK_THAT(poisson_pmf(2.0, 2), WithinRel(std::exp(-2.0) * 2.0, 1e-14));
  CHECK(poisson_pmf(0.0, 0) == 1.0);
  CHECK(poisson_pmf(0.0, 3) == 0.0);
  for (const double mu : {0.3, 7.0, 80.0, 300.0})  // crosses the log-domain switch
    for (std::uint64_t k = 0; k < 40; ++k)
      CHECK_THAT(poisson_pmf(mu, k), WithinRel(ts::poisson_pmf_oracle(mu, k), 1e-11));
  double total = 0;
  for (std::uint64_t k = 0; k < 60; ++k) total += poisson_pmf(9.0, k);
  CHECK_THAT(total, WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(poisson_pmf(-1.0, 0), std::invalid_argument);
}

TEST_CASE("piecewise intensity validates its segment tiling") {
  CHECK_THROWS_AS(PiecewiseIntensity::parse("1:2:1:0"), std::invalid_argument);   // gap at 0
  CHECK_THROWS_AS(PiecewiseIntensity::parse("0:1:1:0,2:3:1:0"), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseIntensity::parse("0:1:-1:0"), std::invalid_argument);  // negative
  CHECK_THROWS_AS(PiecewiseIntensity::parse("0:1:1:-2"), std::invalid_argument);  // dips below 0
  CHECK_THROWS_AS(PiecewiseIntensity::parse("0:0:1:0"), std::invalid_argument);   // empty span
  CHECK_THROWS_AS(PiecewiseIntensity::parse("nonsense"), std::invalid_argument);
  const auto ok = PiecewiseIntensity::parse("0:1:0:2,1:2:2:0,2:4:4:-1");
  CHECK(ok.end_time() == 4.0);
  CHECK(ok.to_string() == "0:1:0:2,1:2:2:0,2:4:4:-1");
}

TEST_CASE("piecewise intensity integrates and bounds exactly") {
  const auto f = PiecewiseIntensity::parse("0:1:0:2,1:2:2:0,2:4:4:-1");
  CHECK_THAT(f.integral(0, 2), WithinAbs(3.0, 1e-12));  // ramp then plateau
  CHECK_THAT(f.integral(2, 4), WithinAbs(2.0, 1e-12));  // descending leg
  CHECK_THAT(f.integral(0, 4), WithinAbs(5.0, 1e-12));
  CHECK_THAT(f.value(0.5), WithinAbs(1.0, 1e-12));
  CHECK_THAT(f.value(3.0), WithinAbs(1.0, 1e-12));
  CHECK_THAT(f.sup(0, 4), WithinAbs(2.0, 1e-12));
  CHECK_THROWS_AS(f.integral(0, 5), std::invalid_argument);  // outside the domain
}

TEST_CASE("thinning produces the analytic count distribution") {
  const auto f = PiecewiseIntensity::parse("0:1:0:2,1:2:2:0,2:4:4:-1");
  RngStream rng(2024, "thinning");
  const int reps = 20000;
  int hits3 = 0, hits2 = 0;
  for (int i = 0; i < reps; ++i) {
    if (f.sample_count(0, 2, rng) == 3) ++hits3;
    if (f.sample_count(2, 4, rng) == 2) ++hits2;
  }
  const double p3 = poisson_pmf(3.0, 3), p2 = poisson_pmf(2.0, 2);
  const double se3 = std::sqrt(p3 * (1 - p3) / reps), se2 = std::sqrt(p2 * (1 - p2) / reps);
  CHECK_THAT(static_cast<double>(hits3) / reps, WithinAbs(p3, 3.5 * se3));
  CHECK_THAT(static_cast<double>(hits2) / reps, WithinAbs(p2, 3.5 * se2));
}

TEST_CASE("thinned arrival times follow the cumulative intensity") {
  // On a purely linear segment the transformed times Lambda(t)/Lambda(T)
  // are uniform; a KS test at the 1% level must not reject.
  const auto f = PiecewiseIntensity::parse("0:4:1:1.5");
  RngStream rng(77, "thinning-ks");
  std::vector<double> u;
  const double total = f.integral(0, 4);
  for (int i = 0; i < 400; ++i)
    for (double t : f.sample(0, 4, rng)) u.push_back(f.integral(0, t) / total);
  CHECK(u.size() > 3000);
  CHECK(ts::ks_statistic_uniform(u) < ts::kKsCritical1pct);
}

TEST_CASE("gamma-mixed poisson counts follow the negative binomial law") {
  const double r = 3.0, p = 0.4;
  for (std::uint64_t k = 0; k < 30; ++k)
    CHECK_THAT(negative_binomial_pmf(r, p, k),
               WithinRel(ts::negative_binomial_pmf_oracle(r, p, k), 1e-11));
  RngStream rng(31337, "mixed-poisson");
  const int reps = 30000;
  std::vector<double> observed(12, 0.0);
  for (int i = 0; i < reps; ++i) {
    const std::uint64_t k = sample_mixed_poisson(r, p, 1.0, rng);
    observed[std::min<std::uint64_t>(k, 11)] += 1.0;
  }
  std::vector<double> expected(12, 0.0);
  double tail = 1.0;
  for (std::uint64_t k = 0; k < 11; ++k) {
    expected[k] = reps * negative_binomial_pmf(r, p, k);
    tail -= negative_binomial_pmf(r, p, k);
  }
  expected[11] = reps * tail;
  CHECK(ts::chi_square_pvalue(observed, expected) > 0.01);
}

TEST_CASE("superposed streams merge with the summed rate") {
  const std::vector<double> rates{0.7, 1.3, 2.0};
  CHECK_THAT(superposed_rate(rates), WithinAbs(4.0, 1e-12));
  RngStream base(555, "superposition");
  const auto events = sample_superposition(rates, 0.0, 50.0, base);
  // sorted in time, flows labeled, deterministic under the same base
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i - 1].time <= events[i].time);
  for (const auto& e : events) {
    CHECK(e.flow < rates.size());
    CHECK(e.time >= 0.0);
    CHECK(e.time < 50.0);
  }
  RngStream base2(555, "superposition");
  const auto events2 = sample_superposition(rates, 0.0, 50.0, base2);
  REQUIRE(events.size() == events2.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].time == events2[i].time);
    CHECK(events[i].flow == events2[i].flow);
  }
  // total count within 4 sigma of Poisson(sum * span)
  const double mu = 4.0 * 50.0;
  CHECK_THAT(static_cast<double>(events.size()), WithinAbs(mu, 4.0 * std::sqrt(mu)));
}

TEST_CASE("superposition attributes events to flows proportionally") {
  const std::vector<double> rates{0.5, 1.0, 1.5};
  RngStream base(99, "superposition-chi");
  std::vector<double> observed(rates.size(), 0.0);
  double n = 0;
  for (int rep = 0; rep < 40; ++rep) {
    for (const auto& e : sample_superposition(rates, 0.0, 100.0, base.derived(rep))) {
      observed[e.flow] += 1.0;
      n += 1.0;
    }
  }
  std::vector<double> expected;
  for (double r : rates) expected.push_back(n * r / 3.0);
  CHECK(ts::chi_square_pvalue(observed, expected) > 0.01);
}

TEST_CASE("erlang density and arrival-count probabilities") {
  // Erlang(n=1) is the exponential density.
  CHECK_THAT(erlang_pdf(1, 2.0, 0.7), WithinRel(2.0 * std::exp(-1.4), 1e-13));
  // n=3, lambda=2, x=1.5: l^n x^{n-1} e^{-lx} / (n-1)!
  CHECK_THAT(erlang_pdf(3, 2.0, 1.5),
             WithinRel(8.0 * 2.25 * std::exp(-3.0) / 2.0, 1e-13));
  CHECK(arrival_count_prob(4, 2.0, 3.0) == poisson_pmf(6.0, 4));
  CHECK_THROWS_AS(erlang_pdf(0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("expected discounted fees: closed form and Monte Carlo") {
  CHECK_THAT(expected_discounted_fees(30.0, 0.1, 1.0), WithinRel(28.548774589212126, 1e-13));
  CHECK_THAT(expected_discounted_fees(5.0, 0.0, 3.0), WithinRel(15.0, 1e-13));  // no discount
  // Monte Carlo oracle: arrivals at rate lambda, each discounted.
  const double lambda = 4.0, beta = 0.3, horizon = 2.0;
  RngStream rng(4242, "fees-mc");
  const int reps = 60000;
  double sum = 0, sq = 0;
  for (int i = 0; i < reps; ++i) {
    double t = 0, v = 0;
    for (;;) {
      t += rng.exponential(lambda);
      if (t > horizon) break;
      v += std::exp(-beta * t);
    }
    sum += v;
    sq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / reps);
  CHECK_THAT(expected_discounted_fees(lambda, beta, horizon), WithinAbs(mean, 3.5 * se));
}

TEST_CASE("attack success probability and the minimum box duration") {
  CHECK_THAT(attack_success_prob(0.5, 20.0), WithinRel(2.0611536224385578e-09, 1e-13));
  CHECK_THAT(attack_success_prob(0.5, 10.0), WithinRel(4.5399929762484854e-05, 1e-13));
  CHECK(attack_success_prob(0.0, 10.0) == 1.0);  // silent network: takeover certain
  CHECK(attack_success_prob(0.5, 0.0) == 1.0);
  CHECK_THAT(min_tau_for_bound(100.0 / 60.0, 1e-6), WithinRel(4.1446531673892822, 1e-13));
  // Inverse relationship: the bound is met with equality.
  const double tau = min_tau_for_bound(0.25, 1e-4);
  CHECK_THAT(attack_success_prob(0.25, tau), WithinRel(1e-4, 1e-12));
  CHECK_THROWS_AS(min_tau_for_bound(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(min_tau_for_bound(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("severity pmf parsing and moments") {
  const auto sev = SeverityPmf::parse("1:0.5,2:0.3,3:0.2");
  CHECK(sev.max_value() == 3);
  CHECK_THAT(sev.p(1), WithinAbs(0.5, 1e-15));
  CHECK_THAT(sev.mean(), WithinAbs(1.7, 1e-12));
  CHECK_THAT(sev.second_moment(), WithinAbs(0.5 + 1.2 + 1.8, 1e-12));
  CHECK(sev.p(0) == 0.0);
  CHECK(sev.p(9) == 0.0);
  CHECK_THROWS_AS(SeverityPmf::parse("1:0.5,2:0.4"), std::invalid_argument);   // sums to 0.9
  CHECK_THROWS_AS(SeverityPmf::parse("0:1.0"), std::invalid_argument);         // value 0
  CHECK_THROWS_AS(SeverityPmf::parse(""), std::invalid_argument);
  RngStream rng(7, "severity-sample");
  std::vector<double> counts(4, 0.0);
  const int reps = 30000;
  for (int i = 0; i < reps; ++i) counts[sev.sample(rng)] += 1.0;
  CHECK(counts[0] == 0.0);
  CHECK(ts::chi_square_pvalue({counts[1], counts[2], counts[3]},
                              {reps * 0.5, reps * 0.3, reps * 0.2}) > 0.01);
}

TEST_CASE("panjer recursion reproduces the exact convolution masses") {
  const auto sev = SeverityPmf::parse("1:0.5,2:0.5");
  const auto f = panjer_compound_pmf(1.0, sev, 8);
  CHECK_THAT(f[0], WithinRel(0.36787944117144233, 1e-14));
  CHECK_THAT(f[1], WithinRel(0.18393972058572117, 1e-14));
  CHECK_THAT(f[2], WithinRel(0.22992465073215146, 1e-14));
  for (const double lambda : {0.5, 1.0, 2.0, 5.0}) {
    for (const char* spec : {"1:1.0", "1:0.5,2:0.5", "1:0.25,2:0.25,3:0.25,4:0.25",
                             "1:0.4,2:0.3,3:0.2,4:0.07,5:0.03"}) {
      const auto severity = SeverityPmf::parse(spec);
      std::vector<double> probs(severity.max_value() + 1, 0.0);
      for (std::uint64_t v = 1; v <= severity.max_value(); ++v) probs[v] = severity.p(v);
      const auto got = panjer_compound_pmf(lambda, severity, 30);
      const auto want = ts::compound_pmf_by_convolution(lambda, probs, 30);
      for (std::size_t k = 0; k <= 30; ++k) CHECK_THAT(got[k], WithinAbs(want[k], 1e-11));
    }
  }
}

TEST_CASE("compound moments and sampled sums agree") {
  const auto sev = SeverityPmf::parse("1:0.5,2:0.3,3:0.2");
  const double lambda = 2.0, t = 3.0;
  CHECK_THAT(compound_mean(lambda, t, sev), WithinAbs(6.0 * 1.7, 1e-12));
  CHECK_THAT(compound_variance(lambda, t, sev), WithinAbs(6.0 * 3.5, 1e-12));
  // pmf mass sums to ~1 and reproduces the mean.
  const auto f = panjer_compound_pmf(lambda * t, sev, 80);
  double mass = 0, mean = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    mass += f[k];
    mean += static_cast<double>(k) * f[k];
  }
  CHECK_THAT(mass, WithinAbs(1.0, 1e-9));
  CHECK_THAT(mean, WithinAbs(compound_mean(lambda, t, sev), 1e-6));
  RngStream rng(1001, "compound-sample");
  const int reps = 50000;
  double sum = 0, sq = 0;
  for (int i = 0; i < reps; ++i) {
    const double s = static_cast<double>(sample_compound_sum(lambda, t, sev, rng));
    sum += s;
    sq += s * s;
  }
  const double m = sum / reps;
  const double var = sq / reps - m * m;
  const double se_mean = std::sqrt(compound_variance(lambda, t, sev) / reps);
  CHECK_THAT(m, WithinAbs(compound_mean(lambda, t, sev), 3.5 * se_mean));
  CHECK_THAT(var, WithinRel(compound_variance(lambda, t, sev), 0.05));
}

TEST_CASE("confirmation time and balance growth closed forms") {
  CHECK_THAT(mean_confirmation_time(20.0), WithinAbs(30.0, 1e-12));
  CHECK_THAT(boxdollar_value(100.0, 0.06, 0.01, 1.0), WithinRel(105.12710963760242, 1e-13));
  CHECK_THAT(boxdollar_value(100.0, 0.05, 0.05, 7.0), WithinAbs(100.0, 1e-10));
  CHECK_THROWS_AS(boxdollar_value(-1.0, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("parallel deterministic mean is invariant in the thread count") {
  const auto f = [](std::uint64_t i) {
    return std::sin(static_cast<double>(i) * 0.001) + 1.0;
  };
  const double m1 = deterministic_mean(100000, f, 1);
  const double m2 = deterministic_mean(100000, f, 2);
  const double m4 = deterministic_mean(100000, f, 4);
  CHECK(m1 == m2);
  CHECK(m2 == m4);
  double linear = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) linear += f(i);
  CHECK_THAT(m1, WithinRel(linear / 100000, 1e-10));
}
