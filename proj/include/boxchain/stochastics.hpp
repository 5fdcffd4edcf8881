#pragma once

// Closed forms and samplers for the workload and risk models: Poisson pmf,
// nonhomogeneous intensities with thinning, gamma-mixed and superposed
// flows, Erlang interarrival laws, discounted fee totals, flood-attack
// bounds, and compound-sum recursion.
//
// Units: rates are per second and times are seconds unless a caller says
// otherwise; every formula only depends on the product of a rate and a
// duration, so any consistent pair of units works.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "boxchain/rng.hpp"

namespace boxchain {

// P(N = k) for N ~ Poisson(mu). Small means use the running product;
// larger means switch to the log-domain form to dodge exp(-mu) underflow.
inline double poisson_pmf(double mu, std::uint64_t k) {
  if (!(mu >= 0) || !std::isfinite(mu))
    throw std::invalid_argument("poisson_pmf: mean must be finite and nonnegative");
  if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
  if (mu > 50.0) {
    const double kd = static_cast<double>(k);
    return std::exp(kd * std::log(mu) - mu - std::lgamma(kd + 1.0));
  }
  double p = std::exp(-mu);
  for (std::uint64_t i = 1; i <= k; ++i) p *= mu / static_cast<double>(i);
  return p;
}

// lambda(u) = a + b*u on [t0, t1). Segments must tile [0, T) contiguously.
struct IntensitySegment {
  double t0 = 0, t1 = 0, a = 0, b = 0;
};

class PiecewiseIntensity {
 public:
  explicit PiecewiseIntensity(std::vector<IntensitySegment> segments)
      : segments_(std::move(segments)) {
    if (segments_.empty()) throw std::invalid_argument("intensity: no segments");
    double cursor = 0.0;
    for (const auto& s : segments_) {
      if (s.t0 != cursor || s.t1 <= s.t0)
        throw std::invalid_argument("intensity: segments must tile [0,T) contiguously");
      if (s.a + s.b * s.t0 < 0 || s.a + s.b * s.t1 < 0)
        throw std::invalid_argument("intensity: negative rate inside a segment");
      cursor = s.t1;
    }
  }

  double end_time() const { return segments_.back().t1; }
  const std::vector<IntensitySegment>& segments() const { return segments_; }

  double value(double t) const {
    const auto& s = segment_at(t);
    return s.a + s.b * t;
  }

  // Exact integral of the rate over [w0, w1].
  double integral(double w0, double w1) const {
    check_window(w0, w1);
    double total = 0.0;
    for (const auto& s : segments_) {
      const double lo = std::max(w0, s.t0), hi = std::min(w1, s.t1);
      if (lo >= hi) continue;
      total += s.a * (hi - lo) + 0.5 * s.b * (hi * hi - lo * lo);
    }
    return total;
  }

  double sup(double w0, double w1) const {
    check_window(w0, w1);
    double m = 0.0;
    for (const auto& s : segments_) {
      const double lo = std::max(w0, s.t0), hi = std::min(w1, s.t1);
      if (lo >= hi) continue;
      m = std::max({m, s.a + s.b * lo, s.a + s.b * hi});
    }
    return m;
  }

  // Ogata-style thinning, segment by segment so the dominating rate stays
  // tight. Returns accepted event times in increasing order.
  std::vector<double> sample(double w0, double w1, RngStream& rng) const {
    check_window(w0, w1);
    std::vector<double> events;
    for (const auto& s : segments_) {
      const double lo = std::max(w0, s.t0), hi = std::min(w1, s.t1);
      if (lo >= hi) continue;
      const double bound = std::max(s.a + s.b * lo, s.a + s.b * hi);
      if (bound <= 0) continue;
      double t = lo;
      for (;;) {
        t += rng.exponential(bound);
        if (t >= hi) break;
        if (rng.uniform01() * bound < s.a + s.b * t) events.push_back(t);
      }
    }
    return events;
  }

  std::uint64_t sample_count(double w0, double w1, RngStream& rng) const {
    return sample(w0, w1, rng).size();
  }

  // "t0:t1:a:b,..." with lambda(u) = a + b*u on [t0,t1).
  static PiecewiseIntensity parse(const std::string& text) {
    std::vector<IntensitySegment> segs;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      IntensitySegment s;
      char c1, c2, c3;
      std::istringstream fs(item);
      if (!(fs >> s.t0 >> c1 >> s.t1 >> c2 >> s.a >> c3 >> s.b) ||
          c1 != ':' || c2 != ':' || c3 != ':')
        throw std::invalid_argument("intensity: expected 't0:t1:a:b' got '" + item + "'");
      segs.push_back(s);
    }
    return PiecewiseIntensity(std::move(segs));
  }

  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      if (i) out << ',';
      out << s.t0 << ':' << s.t1 << ':' << s.a << ':' << s.b;
    }
    return out.str();
  }

 private:
  const IntensitySegment& segment_at(double t) const {
    for (const auto& s : segments_)
      if (t >= s.t0 && t < s.t1) return s;
    if (t == end_time()) return segments_.back();
    throw std::invalid_argument("intensity: time outside domain");
  }

  void check_window(double w0, double w1) const {
    if (!(w0 >= 0) || !(w1 >= w0) || w1 > end_time())
      throw std::invalid_argument("intensity: window outside domain");
  }

  std::vector<IntensitySegment> segments_;
};

// Random intensity theta ~ Gamma(shape r, rate p/(1-p)). The count over one
// unit of time is then NegBinomial(r, p), which the tests verify.
inline double sample_gamma_intensity(double r, double p, RngStream& rng) {
  if (!(r > 0) || !(p > 0) || !(p < 1))
    throw std::invalid_argument("mixed poisson: need r > 0 and p in (0,1)");
  return rng.gamma(r, p / (1.0 - p));
}

inline std::uint64_t sample_mixed_poisson(double r, double p, double t, RngStream& rng) {
  if (!(t >= 0)) throw std::invalid_argument("mixed poisson: negative horizon");
  return rng.poisson(sample_gamma_intensity(r, p, rng) * t);
}

// Failures-before-r-th-success parametrization; marginal law of the
// gamma-mixed count at t = 1.
inline double negative_binomial_pmf(double r, double p, std::uint64_t k) {
  if (!(r > 0) || !(p > 0) || !(p < 1))
    throw std::invalid_argument("negative_binomial_pmf: need r > 0 and p in (0,1)");
  const double kd = static_cast<double>(k);
  return std::exp(std::lgamma(kd + r) - std::lgamma(r) - std::lgamma(kd + 1.0) +
                  r * std::log(p) + kd * std::log1p(-p));
}

struct FlowEvent {
  double time;
  std::size_t flow;
};

inline double superposed_rate(std::span<const double> rates) {
  double total = 0.0;
  for (double r : rates) {
    if (!(r >= 0)) throw std::invalid_argument("superposition: negative rate");
    total += r;
  }
  return total;
}

// Independent homogeneous flows merged into one ordered stream. Flow j
// draws from base.derived(j), so the merge is reproducible and
// thread-agnostic.
inline std::vector<FlowEvent> sample_superposition(std::span<const double> rates, double t0,
                                                   double t1, const RngStream& base) {
  if (!(t1 >= t0)) throw std::invalid_argument("superposition: bad window");
  std::vector<FlowEvent> events;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    if (!(rates[j] >= 0)) throw std::invalid_argument("superposition: negative rate");
    RngStream rng = base.derived(j);
    double t = t0;
    for (;;) {
      t += rng.exponential(rates[j]);
      if (t >= t1) break;
      events.push_back({t, j});
    }
  }
  std::sort(events.begin(), events.end(), [](const FlowEvent& x, const FlowEvent& y) {
    return x.time != y.time ? x.time < y.time : x.flow < y.flow;
  });
  return events;
}

// Density of the n-th arrival time at rate lambda:
// lambda^n x^(n-1) e^(-lambda x) / (n-1)!.
inline double erlang_pdf(std::uint64_t n, double lambda, double x) {
  if (n == 0 || !(lambda > 0)) throw std::invalid_argument("erlang_pdf: need n >= 1, lambda > 0");
  if (!(x >= 0)) return 0.0;
  if (x == 0.0) return n == 1 ? lambda : 0.0;
  const double nd = static_cast<double>(n);
  return std::exp(nd * std::log(lambda) + (nd - 1.0) * std::log(x) - lambda * x -
                  std::lgamma(nd));
}

// P(exactly n arrivals in [0, t]) = (lambda t)^n / n! * e^(-lambda t).
inline double arrival_count_prob(std::uint64_t n, double lambda, double t) {
  if (!(lambda >= 0) || !(t >= 0))
    throw std::invalid_argument("arrival_count_prob: negative parameter");
  return poisson_pmf(lambda * t, n);
}

// Expected discounted unit-fee total over [0, t] at discount rate beta:
// (lambda / beta) * (1 - e^(-beta t)), continuous at beta -> 0.
inline double expected_discounted_fees(double lambda, double beta, double t) {
  if (!(lambda >= 0) || !(beta >= 0) || !(t >= 0))
    throw std::invalid_argument("expected_discounted_fees: negative parameter");
  if (beta == 0.0) return lambda * t;
  return lambda * (-std::expm1(-beta * t)) / beta;
}

// Probability that an honest-transaction-free window of length 2*tau occurs
// at the attack instant: e^(-2 lambda tau).
inline double attack_success_prob(double lambda, double tau) {
  if (!(lambda >= 0) || !(tau >= 0))
    throw std::invalid_argument("attack_success_prob: negative parameter");
  return std::exp(-2.0 * lambda * tau);
}

// Smallest box duration keeping the attack bound at or below p_max.
inline double min_tau_for_bound(double lambda, double p_max) {
  if (!(lambda > 0)) throw std::invalid_argument("min_tau_for_bound: lambda must be positive");
  if (!(p_max > 0) || !(p_max <= 1))
    throw std::invalid_argument("min_tau_for_bound: p_max must be in (0, 1]");
  return -std::log(p_max) / (2.0 * lambda);
}

// Claim-size pmf on {1, 2, ..., m}.
class SeverityPmf {
 public:
  explicit SeverityPmf(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw std::invalid_argument("severity: empty support");
    double total = 0.0;
    for (double q : p_) {
      if (!(q >= 0)) throw std::invalid_argument("severity: negative probability");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("severity: probabilities must sum to 1");
    while (p_.size() > 1 && p_.back() == 0.0) p_.pop_back();
  }

  double p(std::uint64_t i) const {
    return (i >= 1 && i <= p_.size()) ? p_[i - 1] : 0.0;
  }
  std::size_t max_value() const { return p_.size(); }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) m += static_cast<double>(i + 1) * p_[i];
    return m;
  }

  double second_moment() const {
    double m = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const double v = static_cast<double>(i + 1);
      m += v * v * p_[i];
    }
    return m;
  }

  std::uint64_t sample(RngStream& rng) const {
    const double u = rng.uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      cum += p_[i];
      if (u < cum) return i + 1;
    }
    return p_.size();
  }

  // "1:0.5,2:0.5"; every listed value must be a positive integer.
  static SeverityPmf parse(const std::string& text) {
    std::vector<double> probs;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      std::istringstream fs(item);
      std::uint64_t value;
      char colon;
      double prob;
      if (!(fs >> value >> colon >> prob) || colon != ':' || value == 0)
        throw std::invalid_argument("severity: expected 'value:prob' got '" + item + "'");
      if (probs.size() < value) probs.resize(value, 0.0);
      probs[value - 1] += prob;
    }
    return SeverityPmf(std::move(probs));
  }

 private:
  std::vector<double> p_;
};

// Compound Poisson pmf f(0..kmax) by the recursion
// f(0) = e^(-lambda), f(k) = (lambda / k) * sum_i i p(i) f(k - i).
inline std::vector<double> panjer_compound_pmf(double lambda, const SeverityPmf& severity,
                                               std::size_t kmax) {
  if (!(lambda >= 0)) throw std::invalid_argument("panjer: negative rate");
  std::vector<double> f(kmax + 1, 0.0);
  f[0] = std::exp(-lambda);
  for (std::size_t k = 1; k <= kmax; ++k) {
    double acc = 0.0;
    const std::size_t top = std::min<std::size_t>(k, severity.max_value());
    for (std::size_t i = 1; i <= top; ++i)
      acc += static_cast<double>(i) * severity.p(i) * f[k - i];
    f[k] = lambda / static_cast<double>(k) * acc;
  }
  return f;
}

inline double compound_mean(double lambda, double t, const SeverityPmf& severity) {
  return lambda * t * severity.mean();
}

inline double compound_variance(double lambda, double t, const SeverityPmf& severity) {
  return lambda * t * severity.second_moment();
}

inline double sample_compound_sum(double lambda, double t, const SeverityPmf& severity,
                                  RngStream& rng) {
  const std::uint64_t n = rng.poisson(lambda * t);
  double total = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) total += static_cast<double>(severity.sample(rng));
  return total;
}

// Average dual-layer confirmation wait: a transaction lands uniformly inside
// a tau-long box and is confirmed when the next box closes.
inline double mean_confirmation_time(double tau) {
  if (!(tau > 0)) throw std::invalid_argument("mean_confirmation_time: tau must be positive");
  return 1.5 * tau;
}

// Unit value under growth rate r and dilution rate delta: m0 e^((r-delta)t).
inline double boxdollar_value(double m0, double r, double delta, double t) {
  if (!(m0 >= 0)) throw std::invalid_argument("boxdollar_value: negative base value");
  return m0 * std::exp((r - delta) * t);
}

// Mean of sample(i) over i in [0, n), accumulated on a fixed 1024-leaf
// summation tree: the result is bit-identical for any thread count.
template <class F>
double deterministic_mean(std::uint64_t n, F&& sample, unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("deterministic_mean: empty sample");
  constexpr std::uint64_t leaves = 1024;
  const std::uint64_t chunk = (n + leaves - 1) / leaves;
  std::vector<double> partial(leaves, 0.0);
  auto fill = [&](std::uint64_t leaf_begin, std::uint64_t leaf_end) {
    for (std::uint64_t l = leaf_begin; l < leaf_end; ++l) {
      const std::uint64_t lo = l * chunk, hi = std::min(n, (l + 1) * chunk);
      double acc = 0.0;
      for (std::uint64_t i = lo; i < hi; ++i) acc += sample(i);
      partial[l] = acc;
    }
  };
  if (threads <= 1) {
    fill(0, leaves);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t per = (leaves + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::uint64_t lo = w * per, hi = std::min<std::uint64_t>(leaves, lo + per);
      if (lo >= hi) break;
      pool.emplace_back(fill, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  for (std::uint64_t width = leaves; width > 1; width /= 2)
    for (std::uint64_t i = 0; i < width / 2; ++i)
      partial[i] = partial[2 * i] + partial[2 * i + 1];
  return partial[0] / static_cast<double>(n);
}

}  // namespace boxchain
