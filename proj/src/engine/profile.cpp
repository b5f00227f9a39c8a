#include "tsh/engine/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef __linux__
#include <pthread.h>
#include <sched.h>
#endif

namespace tsh::engine {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - lo;
  return values[lo] + (values[hi] - values[lo]) * frac;
}

TimingSummary summarize_timings(const std::vector<double>& ms, double deadline_ms,
                                std::size_t cdf_points) {
  TimingSummary s;
  s.count = ms.size();
  s.deadline_ms = deadline_ms;
  if (ms.empty()) return s;
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / ms.size();
  s.p50_ms = percentile(ms, 50);
  s.p95_ms = percentile(ms, 95);
  s.p99_ms = percentile(ms, 99);
  s.max_ms = *std::max_element(ms.begin(), ms.end());
  s.deadline_miss_fraction =
      static_cast<double>(std::count_if(ms.begin(), ms.end(),
                                        [&](double v) { return v > deadline_ms; })) /
      ms.size();
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = std::max<std::size_t>(cdf_points, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / (n - 1);
    const auto idx = static_cast<std::size_t>(std::lround(frac * (sorted.size() - 1)));
    s.cdf.emplace_back(sorted[idx], static_cast<double>(idx + 1) / sorted.size());
  }
  return s;
}

bool pin_current_thread(int cpu) {
#ifdef __linux__
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#else
  (void)cpu;
  return false;
#endif
}

ProfileResult profile_stream(const Model& model, StreamState& state, const Conditioning& cond,
                             int n_chunks, bool include_cache_copy,
                             const ProfileOptions& options) {
  if (n_chunks < 1) throw ConfigError("profile needs at least one chunk");
  if (options.pin_thread) pin_current_thread(0);
  const auto& audio = model.config().audio;
  const int hop = audio.hop_len;
  const auto mode = include_cache_copy ? StateUpdate::Copy : StateUpdate::InPlace;

  Rng rng(options.input_seed);
  std::vector<float> l(hop), r(hop), out(hop);
  auto fill = [&] {
    for (int i = 0; i < hop; ++i) {
      l[i] = static_cast<float>(0.1 * rng.normal());
      r[i] = static_cast<float>(0.1 * rng.normal());
    }
  };

  for (int i = 0; i < options.warmup_chunks; ++i) {
    fill();
    model.process_chunk(state, l, r, cond, out, mode);
  }

  ProfileResult result;
  result.include_cache_copy = include_cache_copy;
  result.state_bytes = state.bytes();
  result.timings.reserve(n_chunks);
  std::vector<double> totals;
  totals.reserve(n_chunks);
  for (int i = 0; i < n_chunks; ++i) {
    fill();
    result.timings.push_back(model.process_chunk(state, l, r, cond, out, mode));
    totals.push_back(result.timings.back().total_ms());
  }
  result.summary = summarize_timings(totals, audio.chunk_ms());
  return result;
}

LatencyBreakdown latency_breakdown(const dsp::AudioParams& audio, const TimingSummary& s) {
  LatencyBreakdown b;
  b.buffering_ms = audio.chunk_ms();
  b.lookahead_ms = audio.lookahead_ms();
  b.processing_ms = s.p95_ms;
  return b;
}

}  // namespace tsh::engine
