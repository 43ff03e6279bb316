#pragma once

#include "baroid/constitutive.hpp"
#include "baroid/element_test.hpp"
#include "baroid/rng.hpp"
#include "baroid/types.hpp"

#include <array>
#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace baroid {

inline constexpr std::array<const char*, 7> kParamNames = {"c1", "c2", "c3", "c4",
                                                           "c5", "c6", "ec0"};

/// Per-parameter sampling intervals.  Defaults are the +/-5% box around the
/// Hostun sand base values, rounded to five significant figures.
struct ParamBounds {
  Vec7 lower;
  Vec7 upper;

  ParamBounds() {
    lower << -1.8519, -1.0761, 0.5241, -1232.7, -4383.8, 2107.1, 0.8268;
    upper << -1.6755, -0.9737, 0.5793, -1115.3, -3966.3, 2328.9, 0.9138;
  }

  /// The published table carries -0.1076 as the lower c2 bound, which is
  /// inconsistent with the +/-5% construction (a digit transposition of
  /// -1.0761).  This variant keeps the literal value; the interval is
  /// re-ordered so lower < upper still holds.
  static ParamBounds literal_table() {
    ParamBounds b;
    b.lower[1] = -0.9737;
    b.upper[1] = -0.1076;
    return b;
  }

  void validate() const {
    for (int i = 0; i < 7; ++i) {
      if (!(lower[i] < upper[i])) {
        throw InvalidParams(std::string("bounds for ") + kParamNames[i] +
                            " must satisfy lower < upper");
      }
    }
  }

  bool contains(const MaterialParams& p) const {
    const Vec7 v = p.vector();
    return (v.array() >= lower.array()).all() && (v.array() <= upper.array()).all();
  }
};

/// Draws each of the seven parameters independently and uniformly from its
/// interval, advancing the given stream.
inline MaterialParams sample_params(SplitMix64& rng, const ParamBounds& bounds) {
  Vec7 v;
  for (int i = 0; i < 7; ++i) v[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
  return MaterialParams::from_vector(v);
}

struct Sample {
  MaterialParams params;
  StressSeries series;
};

struct Dataset {
  std::vector<Sample> samples;
  LoadingSchedule schedule;
  InitialState init;
  ParamBounds bounds;
  std::uint64_t seed = 0;
  Index rejections = 0;

  Index size() const { return static_cast<Index>(samples.size()); }
  Index n_steps() const { return schedule.n_steps; }

  /// Stress series stacked row-wise, one sample per row.
  Mat series_matrix() const {
    Mat m(size(), n_steps());
    for (Index i = 0; i < size(); ++i) m.row(i) = samples[static_cast<std::size_t>(i)].series.values.transpose();
    return m;
  }

  Mat param_matrix() const {
    Mat m(size(), 7);
    for (Index i = 0; i < size(); ++i) m.row(i) = samples[static_cast<std::size_t>(i)].params.vector().transpose();
    return m;
  }
};

namespace detail {

// Slot result depends only on (seed, slot): attempt a of slot i draws from
// the stream derived from (seed, i, a), so rejection/redraw keeps the
// output independent of the worker count.
inline constexpr Index kMaxAttemptsPerSlot = 64;

inline Sample generate_slot(std::uint64_t seed, Index slot, const ParamBounds& bounds,
                            const InitialState& init, const LoadingSchedule& sched,
                            Index& rejections) {
  for (Index attempt = 0; attempt < kMaxAttemptsPerSlot; ++attempt) {
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(slot),
                                 static_cast<std::uint64_t>(attempt)));
    const MaterialParams p = sample_params(rng, bounds);
    try {
      StressSeries series = run_test(p, init, sched);
      return Sample{p, std::move(series)};
    } catch (const Diverged&) {
      ++rejections;
    }
  }
  throw TooManyRejections("slot " + std::to_string(slot) + " exceeded " +
                          std::to_string(kMaxAttemptsPerSlot) + " attempts");
}

}  // namespace detail

/// Generates n labeled parameters-stress pairs.  Divergent forward runs are
/// rejected and redrawn; more than 10% rejected draws aborts.  The result is
/// a deterministic function of the seed for any worker count.
inline Dataset generate_dataset(Index n, const ParamBounds& bounds, const InitialState& init,
                                const LoadingSchedule& sched, std::uint64_t seed,
                                Index workers = 1) {
  if (n < 1) throw InvalidParams("dataset size must be >= 1");
  bounds.validate();
  init.validate();
  sched.validate();
  if (workers < 1) workers = 1;

  Dataset ds;
  ds.samples.resize(static_cast<std::size_t>(n));
  ds.schedule = sched;
  ds.init = init;
  ds.bounds = bounds;
  ds.seed = seed;

  std::atomic<Index> next_slot{0};
  std::atomic<Index> total_rejections{0};
  std::atomic<bool> failed{false};
  std::string failure_msg;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      const Index slot = next_slot.fetch_add(1);
      if (slot >= n || failed.load()) break;
      Index rejections = 0;
      try {
        ds.samples[static_cast<std::size_t>(slot)] =
            detail::generate_slot(seed, slot, bounds, init, sched, rejections);
      } catch (const TooManyRejections& ex) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure_msg = ex.what();
        break;
      }
      total_rejections.fetch_add(rejections);
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (failed.load()) throw TooManyRejections(failure_msg);

  ds.rejections = total_rejections.load();
  const Scalar total_draws = static_cast<Scalar>(n + ds.rejections);
  if (static_cast<Scalar>(ds.rejections) > 0.10 * total_draws) {
    throw TooManyRejections(std::to_string(ds.rejections) + " of " +
                            std::to_string(n + ds.rejections) +
                            " draws diverged; check bounds and schedule");
  }
  return ds;
}

/// First floor(n * train_fraction) samples train, the rest test; generation
/// order is already random, so the prefix split is unbiased.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, Scalar train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidParams("train_fraction must lie in (0,1)");
  }
  const Index n_train = static_cast<Index>(static_cast<Scalar>(ds.size()) * train_fraction);
  Dataset train;
  train.schedule = ds.schedule;
  train.init = ds.init;
  train.bounds = ds.bounds;
  train.seed = ds.seed;
  Dataset test = train;
  train.samples.assign(ds.samples.begin(), ds.samples.begin() + n_train);
  test.samples.assign(ds.samples.begin() + n_train, ds.samples.end());
  return {std::move(train), std::move(test)};
}

}  // namespace baroid
