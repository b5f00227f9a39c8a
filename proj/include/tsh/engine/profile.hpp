#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tsh/engine/model.hpp"

namespace tsh::engine {

inline constexpr double kReferenceLatencyMs = 18.24;

struct TimingSummary {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
  double deadline_ms = 0.0;
  double deadline_miss_fraction = 0.0;  ///< share of chunks slower than one chunk period
  std::vector<std::pair<double, double>> cdf;  ///< (ms, cumulative fraction)
};

/// Linear-interpolated percentile of unsorted values, q in [0, 100].
double percentile(std::vector<double> values, double q);
TimingSummary summarize_timings(const std::vector<double>& ms, double deadline_ms,
                                std::size_t cdf_points = 101);

struct ProfileOptions {
  int warmup_chunks = 50;
  std::uint64_t input_seed = 1;
  bool pin_thread = true;
};

struct ProfileResult {
  bool include_cache_copy = false;
  std::size_t state_bytes = 0;
  std::vector<ChunkTimings> timings;  ///< measured chunks only (warmup discarded)
  TimingSummary summary;              ///< over inference (+ copy) time
};

/// Feeds `n_chunks` random stereo chunks through `state` after the warmup
/// and records per-chunk wall-clock times (monotonic clock).
ProfileResult profile_stream(const Model& model, StreamState& state, const Conditioning& cond,
                             int n_chunks, bool include_cache_copy,
                             const ProfileOptions& options = {});

struct LatencyBreakdown {
  double buffering_ms = 0.0;
  double lookahead_ms = 0.0;
  double processing_ms = 0.0;  ///< p95 per-chunk processing time
  double total_ms() const { return buffering_ms + lookahead_ms + processing_ms; }
  double reference_ms = kReferenceLatencyMs;
};

LatencyBreakdown latency_breakdown(const dsp::AudioParams& audio, const TimingSummary& s);

/// Pins the calling thread to one CPU; returns false when unsupported.
bool pin_current_thread(int cpu = 0);

}  // namespace tsh::engine
