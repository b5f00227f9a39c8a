// Acceptance suite: one [PASS]/[FAIL] line per criterion. Pass criterion
// numbers as arguments to run a subset.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "tsh/dsp/metrics.hpp"
#include "tsh/dsp/noise.hpp"
#include "tsh/dsp/stft.hpp"
#include "tsh/engine/model.hpp"
#include "tsh/engine/profile.hpp"
#include "tsh/enroll/enrollment.hpp"
#include "tsh/eval/dataset.hpp"
#include "tsh/eval/eval.hpp"
#include "tsh/io/json_file.hpp"
#include "tsh/io/wav.hpp"

using namespace tsh;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double max_abs_diff(const Mono& a, const Mono& b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    m = std::max(m, double(std::abs(a[i] - b[i])));
  }
  return m;
}

dsp::SpeakerEmbedding random_embedding(std::uint64_t seed) {
  return dsp::SpeakerEmbedding::from_raw(test::random_signal(256, seed));
}

const eval::SceneAssets& assets() {
  static const eval::SceneAssets a = eval::load_scene_assets();
  return a;
}

// 1 ----------------------------------------------------------------------
Outcome streaming_equivalence() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int runs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = engine::Model::from_seed(engine::ModelConfig{}, 1000 + seed);
    const auto cond = model.condition(random_embedding(seed));
    for (std::uint64_t input = 0; input < 5; ++input) {
      const auto x = test::random_stereo(48000, seed * 100 + input);
      worst = std::max(worst, max_abs_diff(engine::run_stream(model, x, cond),
                                           model.offline_causal_forward(x, cond)));
      ++runs;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0,
          fmt("max |stream - offline| = %.3g over %d runs (10 seeds x 5 inputs, 3 s); %.1f s", worst,
              runs, secs)};
}

// 2 ----------------------------------------------------------------------
Outcome causality() {
  const auto model = engine::Model::from_seed(engine::ModelConfig{}, 77);
  const auto cond = model.condition(random_embedding(77));
  Rng rng(2024);
  constexpr std::size_t kChunks = 64;
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    if (trial % 10 == 0) rng = Rng(2024 + trial);
    const auto x = test::random_stereo(kChunks * 128, 500 + trial / 10);
    const std::size_t c = rng.index(kChunks - 2);
    const std::size_t boundary = (c + 1) * 128;
    auto p = x;
    const std::size_t n_changes = 1 + rng.index(8);
    for (std::size_t i = 0; i < n_changes; ++i) {
      const std::size_t at = boundary + rng.index(x.size() - boundary);
      p.left[at] += static_cast<float>(rng.normal());
      p.right[at] += static_cast<float>(rng.normal());
    }
    auto s1 = model.make_state(), s2 = model.make_state();
    Mono o1(128), o2(128);
    bool same = true;
    for (std::size_t k = 0; k <= c; ++k) {
      const auto sl = std::span(x.left).subspan(k * 128, 128);
      const auto sr = std::span(x.right).subspan(k * 128, 128);
      const auto pl = std::span(p.left).subspan(k * 128, 128);
      const auto pr = std::span(p.right).subspan(k * 128, 128);
      model.process_chunk(s1, sl, sr, cond, o1);
      model.process_chunk(s2, pl, pr, cond, o2);
      same = same && o1 == o2;
    }
    ok += same ? 1 : 0;
  }
  return {ok == 100, fmt("%d/100 perturbations past the 4 ms lookahead left emitted chunks "
                         "bit-identical", ok)};
}

// 3 ----------------------------------------------------------------------
engine::AttentionWeights random_attention(Rng& rng) {
  engine::AttentionWeights w;
  w.heads = 4;
  w.head_dim = 6;
  w.value_dim = 16;
  w.freq_bins = 97;
  w.window = 50;
  const int D = 64, LE = 24, F = 97;
  auto fill = [&](auto& m, Eigen::Index r, Eigen::Index c, double scale) {
    m.resize(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(scale * rng.normal());
  };
  fill(w.wq, LE, D, 0.2);
  fill(w.wk, LE, D, 0.2);
  fill(w.wv, D, D, 0.2);
  fill(w.wp, D, D, 0.2);
  for (auto* b : {&w.bq, &w.bk}) fill(*b, LE, 1, 0.1);
  for (auto* b : {&w.bv, &w.bp}) fill(*b, D, 1, 0.1);
  for (auto* a : {&w.aq, &w.ak, &w.av}) a->setConstant(4, 0.25f);
  w.ap.setConstant(1, 0.25f);
  fill(w.q_norm_w, LE, F, 1.0);
  fill(w.q_norm_b, LE, F, 0.1);
  fill(w.k_norm_w, LE, F, 1.0);
  fill(w.k_norm_b, LE, F, 0.1);
  fill(w.v_norm_w, D, F, 1.0);
  fill(w.v_norm_b, D, F, 0.1);
  fill(w.p_norm_w, D, F, 1.0);
  fill(w.p_norm_b, D, F, 0.1);
  w.prepare();
  return w;
}

Outcome attention_window() {
  Rng rng(3);
  const auto w = random_attention(rng);
  const int F = 97;
  int ok = 0, sensitive = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 51 + static_cast<int>(rng.index(40));
    engine::Mat z(64, T * F);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(rng.normal());
    auto z2 = z;
    // Every frame at least 50 steps before the last one.
    const int old = T - 50;
    for (int t = 0; t < old; ++t) {
      if (t == old - 1 || rng.bernoulli(0.3)) {
        for (Eigen::Index i = 0; i < 64 * F; ++i) {
          z2.middleCols(t * F, F).data()[i] += static_cast<float>(rng.normal());
        }
      }
    }
    engine::KvCache c1(4, 6 * F, 16 * F, 50), c2(4, 6 * F, 16 * F, 50);
    const auto a = engine::attention_sublayer(w, z, T, &c1);
    const auto b = engine::attention_sublayer(w, z2, T, &c2);
    ok += a.middleCols((T - 1) * F, F) == b.middleCols((T - 1) * F, F) ? 1 : 0;
    // Frame T-2 still sees frame T-51 = old-1.
    sensitive += a.middleCols((T - 2) * F, F) == b.middleCols((T - 2) * F, F) ? 0 : 1;
  }
  return {ok == 100 && sensitive == 100,
          fmt("%d/100 trials invariant to frames >= 50 steps back (%d/100 sensitive at 49 back)",
              ok, sensitive)};
}

// 4 ----------------------------------------------------------------------
Outcome parameter_count() {
  const auto n = engine::Model::from_seed(engine::ModelConfig{}, 1).parameter_count();
  const double rel = (double(n) - 2.04e6) / 2.04e6;
  return {std::abs(rel) <= 0.05, fmt("%lld parameters (%+.2f%% vs 2.04 M)", (long long)n, rel * 100)};
}

// 5 ----------------------------------------------------------------------
Outcome latency_accounting() {
  const auto model = engine::Model::from_seed(engine::ModelConfig{}, 1);
  eval::LatencyOptions opts;
  opts.chunks = 1000;
  const auto r = eval::latency_report(model, opts);
  bool ok = r.timings.size() == 2;
  std::string detail;
  for (const auto& t : r.timings) {
    const auto& l = t.latency;
    ok = ok && t.chunks.size() == 1000 && l.buffering_ms == 8.0 && l.lookahead_ms == 4.0 &&
         std::abs(l.total_ms - (12.0 + t.p95_ms)) < 1e-9 && l.reference_ms == 18.24;
    detail += fmt("%s: mean %.2f ms, p95 %.2f ms, total 8 + 4 + %.2f = %.2f ms vs 18.24 ms; ",
                  t.label.c_str(), t.mean_ms, t.p95_ms, l.processing_ms, l.total_ms);
  }
  ok = ok && r.timings[0].label == "in_place" && r.timings[1].label == "copy";
  const bool soft = ok && r.timings[0].mean_ms < 8.0;
  detail += fmt("copy-included mean %s copy-excluded mean", r.timings[1].mean_ms >= r.timings[0].mean_ms ? ">=" : "<");
  return {ok && soft, detail};
}

// 6 ----------------------------------------------------------------------
Outcome stft_round_trip() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t chunks = 50 + s * 7;
    const auto x = test::random_signal(chunks * 128, 600 + s, 0.5);
    dsp::StftAnalyzer a;
    dsp::IstftSynthesizer syn;
    Mono y, out(128);
    for (std::size_t c = 0; c < chunks; ++c) {
      syn.push_frame(a.push(std::span(x).subspan(c * 128, 128)), out);
      y.insert(y.end(), out.begin(), out.end());
    }
    for (std::size_t n = 0; n < y.size(); ++n) {
      const float ref = n >= 64 ? x[n - 64] : 0.0f;
      worst = std::max(worst, double(std::abs(y[n] - ref)));
    }
  }
  return {worst < 1e-5, fmt("20 signals, 64-sample delay, max error %.3g", worst)};
}

// 7 ----------------------------------------------------------------------
Outcome metric_oracles() {
  // Scale invariance: bit-exact for power-of-two gains (exact in float32);
  // other gains round the scaled input itself, so only a float32 bound applies.
  bool exact = true;
  double worst_scale = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto ref = test::random_signal(4000, 700 + s);
    const auto noise = test::random_signal(4000, 800 + s);
    Mono est(ref);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.5f * noise[i];
    const double base = dsp::si_snr(est, ref);
    for (float a : {0.25f, 2.0f, 8.0f}) {
      Mono e(est);
      for (auto& v : e) v *= a;
      exact = exact && dsp::si_snr(e, ref) == base;
    }
    for (float a : {0.3f, 3.7f, -1.9f}) {
      Mono e(est);
      for (auto& v : e) v *= a;
      worst_scale = std::max(worst_scale, std::abs(dsp::si_snr(e, ref) - base));
    }
  }
  // Identity and oracle estimators over a synthetic dataset.
  const auto dir = test::temp_dir("acc_metrics");
  eval::DatasetOptions opts;
  opts.count = 10;
  opts.seed = 70;
  opts.duration_s = 3.0;
  eval::synthesize_dataset(dir, eval::dataset_specs(opts), assets());
  eval::EvalContext ctx;
  ctx.estimator = eval::Estimator::Identity;
  const auto id = eval::run_eval(dir, ctx);
  ctx.estimator = eval::Estimator::Oracle;
  const auto oracle = eval::run_eval(dir, ctx);
  double worst_oracle = 0.0;
  for (const auto& r : oracle.records) {
    worst_oracle = std::max(worst_oracle,
                            std::abs(r.si_snri_db - (dsp::kSnrCapDb - r.input_si_snr_db)));
  }
  const bool ok = exact && worst_scale < 1e-5 && id.failed == 0 && id.records.size() == 10 &&
                  std::abs(id.si_snri_db.mean) <= 1e-9 && oracle.failed == 0 &&
                  worst_oracle < 1e-9;
  return {ok, fmt("power-of-two scales exact: %s, other scales max %.2g dB; identity mean "
                  "SI-SNRi %.3g dB; oracle max |SI-SNRi - (cap - input)| %.3g dB (10 scenes)",
                  exact ? "yes" : "no", worst_scale, id.si_snri_db.mean, worst_oracle)};
}

// 8 ----------------------------------------------------------------------
Outcome trajectory_statistics() {
  const auto t0 = Clock::now();
  Rng rng(8);
  const auto moving = scene::sample_trajectory(rng, 1e6 * scene::kTrajectoryStepS,
                                               scene::MotionMode::Moving);
  const double rate = double(moving.events.size()) / double(moving.trial_steps);
  double vmin = INFINITY, vmax = 0.0;
  for (const auto& e : moving.events) {
    for (double v : {e.azimuth_velocity_deg_s, e.polar_velocity_deg_s}) {
      vmin = std::min(vmin, std::abs(v));
      vmax = std::max(vmax, std::abs(v));
    }
  }
  const auto enroll = scene::sample_trajectory(rng, 1e6 * scene::kTrajectoryStepS,
                                               scene::MotionMode::Enrollment);
  const auto [amin, amax] = std::minmax_element(enroll.azimuth_deg.begin(), enroll.azimuth_deg.end());
  const double secs = seconds_since(t0);
  const bool ok = moving.size() == 1000000 && std::abs(rate - 0.025) <= 0.002 && vmin >= 30.0 &&
                  vmax <= 90.0 && *amin >= 72.0 && *amax <= 108.0 && secs < 60.0;
  return {ok, fmt("event rate %.5f over %zu non-hold steps; |v| in [%.2f, %.2f] deg/s; enrollment "
                  "azimuth in [%.2f, %.2f] over 1e6 steps; %.1f s",
                  rate, moving.trial_steps, vmin, vmax, *amin, *amax, secs)};
}

// 9 ----------------------------------------------------------------------
Outcome scene_additivity() {
  double worst = 0.0;
  int identical = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto spec = scene::random_scene_spec(9000 + s, "acc", s % 2 == 0);
    spec.duration_s = 3.0;
    const auto a = scene::compose_scene(spec, *assets().library, assets().corpora());
    for (std::size_t i = 0; i < a.mixture.size(); ++i) {
      float l = a.augmentation.left[i], r = a.augmentation.right[i];
      for (const auto& st : a.stems) {
        l += st.left[i];
        r += st.right[i];
      }
      worst = std::max({worst, double(std::abs(l - a.mixture.left[i])),
                        double(std::abs(r - a.mixture.right[i]))});
    }
    const auto b = scene::compose_scene(spec, *assets().library, assets().corpora());
    identical += (a.mixture.left == b.mixture.left && a.mixture.right == b.mixture.right &&
                  a.target_gt.left == b.target_gt.left && a.target_gt.right == b.target_gt.right)
                     ? 1
                     : 0;
  }
  return {worst <= 1e-6 && identical == 100,
          fmt("max |mixture - sum(stems)| = %.3g over 100 scenes; %d/100 re-renders bit-identical",
              worst, identical)};
}

// 10 ---------------------------------------------------------------------
Outcome noise_slopes() {
  const double pink =
      test::welch_slope_db_per_decade(dsp::colored_noise(dsp::NoiseColor::Pink, 1 << 20, 10));
  const double brown =
      test::welch_slope_db_per_decade(dsp::colored_noise(dsp::NoiseColor::Brown, 1 << 20, 10));
  return {std::abs(pink + 10.0) <= 1.5 && std::abs(brown + 20.0) <= 2.0,
          fmt("pink %.2f dB/decade, brown %.2f dB/decade", pink, brown)};
}

// 11 ---------------------------------------------------------------------
double energy_ratio_db(const Mono& t, const Mono& i) {
  double et = 0.0, ei = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    et += double(t[k]) * t[k];
    ei += double(i[k]) * i[k];
  }
  return 10.0 * std::log10(et / ei);
}

Outcome alignment_benefit() {
  std::vector<scene::BrirEntry> entries;
  for (double az = 0.0; az < 360.0; az += 10.0) {
    BinauralBuffer ir(48);
    ir.left[scene::synthetic_ear_delay(az, 90.0, true)] = 1.0f;
    ir.right[scene::synthetic_ear_delay(az, 90.0, false)] = 1.0f;
    entries.push_back({"pure-delay", az, 90.0, ir});
  }
  scene::BrirLibrary lib;
  lib.add(std::make_shared<const scene::BrirSet>(entries));

  int wins = 0;
  double min_gain = INFINITY;
  for (std::uint64_t s = 0; s < 20; ++s) {
    scene::SceneSpec spec;
    spec.id = "align";
    spec.seed = 1100 + s;
    spec.noise_enabled = false;
    spec.augment = false;
    spec.enrollment.angle_error_deg = 0.0;
    spec.enrollment.interferers = 1;
    scene::SourceSpec side;
    side.azimuth_deg = 30.0;
    side.polar_deg = 90.0;
    spec.interferers = {side};
    const auto e = scene::make_enrollment_scene(spec, lib, assets().corpora());
    const auto& t = e.stems.at(0);
    const auto& i = e.stems.at(1);
    const double best_single =
        std::max(energy_ratio_db(t.left, i.left), energy_ratio_db(t.right, i.right));
    const double summed =
        energy_ratio_db(enroll::align_and_sum(t), enroll::align_and_sum(i));
    min_gain = std::min(min_gain, summed - best_single);
    wins += summed > best_single ? 1 : 0;
  }
  return {wins >= 18, fmt("%d/20 scenes improved over the best single channel (min gain %.2f dB)",
                          wins, min_gain)};
}

// 12 ---------------------------------------------------------------------
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TSH_CLI_PATH) + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// synth -> enroll -> run -> eval into `root`; returns the first failing step.
std::string cli_pipeline(const fs::path& root) {
  const auto log = root / "log.txt";
  const auto ds = root / "dataset";
  if (cli("synth --out " + ds.string() + " --count 10 --seed 12 --duration 3", log) != 0) {
    return "synth";
  }
  for (const auto& scene : io::list_scene_folders(ds)) {
    const auto id = scene.filename().string();
    const auto emb = root / "embeddings" / (id + ".json");
    if (cli("enroll --in " + (scene / io::kEnrollFile).string() + " --out " + emb.string(), log) !=
        0) {
      return "enroll " + id;
    }
    if (cli("run --seed 5 --in " + (scene / io::kMixtureFile).string() + " --embedding " +
                emb.string() + " --out " + (root / "outputs" / (id + ".wav")).string(),
            log) != 0) {
      return "run " + id;
    }
  }
  if (cli("eval --seed 5 --dataset " + ds.string() + " --out " + (root / "report").string(), log) !=
      0) {
    return "eval";
  }
  return {};
}

std::vector<fs::path> artifacts(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "log.txt") {
      out.push_back(fs::relative(e.path(), root));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome cli_smoke() {
  const auto t0 = Clock::now();
  const auto a = test::temp_dir("acc_cli_a"), b = test::temp_dir("acc_cli_b");
  for (const auto& root : {a, b}) {
    const auto failed = cli_pipeline(root);
    if (!failed.empty()) return {false, "step failed: " + failed + " (see " + root.string() + "/log.txt)"};
  }
  std::string problems;
  std::size_t reports = 0;
  for (const char* ext : {".json", ".csv", ".md"}) {
    if (!fs::exists(a / ("report" + std::string(ext)))) problems += std::string("missing report") + ext + "; ";
  }
  try {
    const auto j = io::read_json_file(a / "report.json");
    eval::validate_report_json(j);
    const auto r = eval::report_from_json(j);
    if (r.records.size() != 10 || r.failed != 0) problems += "report does not hold 10 ok records; ";
    for (const auto& rec : r.records) {
      if (!std::isfinite(rec.si_snri_db)) problems += "non-finite SI-SNRi; ";
    }
    ++reports;
  } catch (const std::exception& e) {
    problems += std::string("schema: ") + e.what() + "; ";
  }
  const auto fa = artifacts(a), fb = artifacts(b);
  std::size_t identical = 0;
  if (fa != fb) problems += "artifact lists differ; ";
  for (const auto& rel : fa) {
    if (fs::exists(b / rel) && io::read_file_bytes(a / rel) == io::read_file_bytes(b / rel)) {
      ++identical;
    } else {
      problems += "differs: " + rel.string() + "; ";
    }
  }
  const double secs = seconds_since(t0);
  return {problems.empty() && reports == 1,
          fmt("synth/enroll/run/eval on 10 scenes twice; report schema valid; %zu/%zu artifacts "
              "bit-identical; %.1f s",
              identical, fa.size(), secs) +
              (problems.empty() ? "" : " | " + problems)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "streaming/offline equivalence", streaming_equivalence},
      {2, "causality beyond the lookahead", causality},
      {3, "attention window of 50 frames", attention_window},
      {4, "parameter count", parameter_count},
      {5, "latency accounting", latency_accounting},
      {6, "STFT/ISTFT round trip", stft_round_trip},
      {7, "metric oracles", metric_oracles},
      {8, "trajectory statistics", trajectory_statistics},
      {9, "scene additivity and determinism", scene_additivity},
      {10, "colored-noise PSD slopes", noise_slopes},
      {11, "enrollment alignment benefit", alignment_benefit},
      {12, "end-to-end CLI smoke", cli_smoke},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int passed = 0, run = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++run;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    passed += o.pass ? 1 : 0;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << o.detail
              << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
  }
  std::cout << passed << "/" << run << " acceptance criteria passed" << std::endl;
  return passed == run ? 0 : 1;
}
