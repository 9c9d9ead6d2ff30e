#pragma once

#include "genestim/core.hpp"
#include "genestim/family.hpp"
#include "genestim/parallel.hpp"
#include "genestim/rng.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace genestim {

enum class ExpectationMode { Exact, MonteCarlo };

// How E_theta[h] is evaluated. Exact mode enumerates a finite support (or
// applies the family's quadrature rule); Monte Carlo mode draws
// `replications` samples from counter-based sub-streams of `seed`, in blocks
// of kBlockSize, so results depend only on (seed, stream, replications).
struct ExpectationEngine {
  static constexpr std::int64_t kBlockSize = 1000;
  static constexpr std::int64_t kBatches = 20;

  ExpectationMode mode = ExpectationMode::Exact;
  std::int64_t replications = 0;
  std::uint64_t seed = 0;
  bool estimate_se = true;
  std::uint64_t stream = 0;

  static ExpectationEngine exact() { return {}; }

  static ExpectationEngine monte_carlo(std::int64_t replications, std::uint64_t seed,
                                       std::uint64_t stream = 0) {
    require(replications >= 2, "Monte Carlo engine needs at least 2 replications");
    ExpectationEngine e;
    e.mode = ExpectationMode::MonteCarlo;
    e.replications = replications;
    e.seed = seed;
    e.stream = stream;
    return e;
  }

  ExpectationEngine with_stream(std::uint64_t s) const {
    ExpectationEngine e = *this;
    e.stream = s;
    return e;
  }

  bool is_exact() const { return mode == ExpectationMode::Exact; }
};

struct Expectation {
  Vec value;
  Vec se;                         // empty in exact mode
  std::vector<Vec> batch_means;   // Monte Carlo only: contiguous equal batches
  std::int64_t count = 0;         // outcomes enumerated or draws taken
};

namespace detail {

inline std::int64_t block_count(std::int64_t reps) {
  return (reps + ExpectationEngine::kBlockSize - 1) / ExpectationEngine::kBlockSize;
}

// Draws block `b` and feeds (global draw index, outcome) to sink.
template <class Sink>
void draw_block(const ExpectationEngine& engine, const ModelFamily& family, const Vec& param,
                std::int64_t b, Sink&& sink) {
  auto gen = rng::make_engine(engine.seed, engine.stream, static_cast<std::uint64_t>(b));
  std::int64_t begin = b * ExpectationEngine::kBlockSize;
  std::int64_t end = std::min(engine.replications, begin + ExpectationEngine::kBlockSize);
  for (std::int64_t i = begin; i < end; ++i) sink(i, family.support.sampler()(param, gen));
}

inline void require_sampler(const ModelFamily& family) {
  if (!family.support.has_sampler())
    fail(ErrorKind::InvalidArgument, family.name + ": Monte Carlo requested without a sampler");
}

}  // namespace detail

// E_theta[h] for a vector-valued h : Outcome -> R^d.
template <class H>
Expectation expect(const ExpectationEngine& engine, const ModelFamily& family, const Vec& param,
                   H&& h) {
  family.require_in_domain(param);
  Expectation out;

  if (engine.is_exact()) {
    auto accumulate = [&](const Outcome& y, double w) {
      if (w == 0.0) return;
      Vec v = h(y);
      if (out.value.size() == 0) out.value = Vec::Zero(v.size());
      out.value += w * v;
      ++out.count;
    };
    if (family.support.is_finite()) {
      for (const auto& y : family.support.outcomes())
        accumulate(y, std::exp(family.log_density(y, param)));
    } else if (family.support.quadrature()) {
      for (const auto& node : (*family.support.quadrature())(param)) accumulate(node.y, node.weight);
    } else {
      fail(ErrorKind::InvalidArgument,
           family.name + ": exact expectation needs a finite support or a quadrature rule");
    }
    if (!out.value.allFinite()) fail(ErrorKind::Numeric, family.name + ": non-finite expectation");
    return out;
  }

  detail::require_sampler(family);
  const std::int64_t n = engine.replications;
  const std::int64_t blocks = detail::block_count(n);
  const std::int64_t batches = std::min<std::int64_t>(ExpectationEngine::kBatches, n);
  auto batch_of = [&](std::int64_t i) { return (i * batches) / n; };

  struct BlockAcc {
    Vec sum, sumsq;
    std::vector<std::pair<std::int64_t, Vec>> batch_sums;
  };
  std::vector<BlockAcc> acc(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    BlockAcc& a = acc[b];
    detail::draw_block(engine, family, param, static_cast<std::int64_t>(b),
                       [&](std::int64_t i, const Outcome& y) {
                         Vec v = h(y);
                         if (a.sum.size() == 0) {
                           a.sum = Vec::Zero(v.size());
                           a.sumsq = Vec::Zero(v.size());
                         }
                         a.sum += v;
                         a.sumsq += v.cwiseAbs2();
                         std::int64_t bt = batch_of(i);
                         if (a.batch_sums.empty() || a.batch_sums.back().first != bt)
                           a.batch_sums.emplace_back(bt, Vec::Zero(v.size()));
                         a.batch_sums.back().second += v;
                       });
  });

  Vec sum = Vec::Zero(acc.front().sum.size());
  Vec sumsq = Vec::Zero(sum.size());
  std::vector<Vec> batch_sum(static_cast<std::size_t>(batches), Vec::Zero(sum.size()));
  for (const auto& a : acc) {
    sum += a.sum;
    sumsq += a.sumsq;
    for (const auto& [bt, s] : a.batch_sums) batch_sum[static_cast<std::size_t>(bt)] += s;
  }
  const double nd = static_cast<double>(n);
  out.value = sum / nd;
  out.count = n;
  if (engine.estimate_se) {
    Vec var = (sumsq / nd - out.value.cwiseAbs2()) * (nd / (nd - 1.0));
    out.se = (var.cwiseMax(0.0) / nd).cwiseSqrt();
  }
  out.batch_means.reserve(batch_sum.size());
  for (std::int64_t bt = 0; bt < batches; ++bt) {
    std::int64_t lo = (bt * n + batches - 1) / batches;
    std::int64_t hi = ((bt + 1) * n + batches - 1) / batches;
    out.batch_means.push_back(batch_sum[static_cast<std::size_t>(bt)] / static_cast<double>(hi - lo));
  }
  if (!out.value.allFinite()) fail(ErrorKind::Numeric, family.name + ": non-finite expectation");
  return out;
}

// Scalar convenience wrapper.
template <class H>
double expect_scalar(const ExpectationEngine& engine, const ModelFamily& family, const Vec& param,
                     H&& h) {
  return expect(engine, family, param, [&](const Outcome& y) { return scalar_vec(h(y)); }).value(0);
}

// Per-draw values of fn over the engine's Monte Carlo sample, in draw order.
// Uses the same sub-streams as expect(), so both see identical draws.
template <class Fn>
std::vector<Vec> monte_carlo_values(const ExpectationEngine& engine, const ModelFamily& family,
                                    const Vec& param, Fn&& fn) {
  require(!engine.is_exact(), "monte_carlo_values needs a Monte Carlo engine");
  family.require_in_domain(param);
  detail::require_sampler(family);
  std::vector<Vec> values(static_cast<std::size_t>(engine.replications));
  const std::int64_t blocks = detail::block_count(engine.replications);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    detail::draw_block(engine, family, param, static_cast<std::int64_t>(b),
                       [&](std::int64_t i, const Outcome& y) {
                         values[static_cast<std::size_t>(i)] = fn(y);
                       });
  });
  return values;
}

// Standard error of a statistic computed per batch (batch-means method).
inline double batch_standard_error(const std::vector<double>& per_batch) {
  const double m = static_cast<double>(per_batch.size());
  if (m < 2) return 0.0;
  double mean = 0.0;
  for (double v : per_batch) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : per_batch) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (m - 1.0) / m);
}

}  // namespace genestim
