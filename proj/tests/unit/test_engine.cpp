#include <doctest.h>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "tsh/engine/model.hpp"
#include "tsh/engine/profile.hpp"
#include "tsh/io/json_file.hpp"

using namespace tsh;
using namespace tsh::engine;

namespace {

const Model& default_model() {
  static const Model m = Model::from_seed(ModelConfig{}, 1);
  return m;
}

dsp::SpeakerEmbedding embedding(std::uint64_t seed) {
  return dsp::SpeakerEmbedding::from_raw(test::random_signal(256, seed));
}

template <class Fn>
WeightArchive transform(const WeightArchive& a, Fn&& fn) {
  WeightArchive out(a.config());
  for (Tensor t : a.tensors()) {
    if (fn(t)) out.add(std::move(t));
  }
  return out;
}

std::vector<float> chunk_of(const Mono& x, std::size_t c) {
  return {x.begin() + c * 128, x.begin() + (c + 1) * 128};
}

double max_abs_diff(const Mono& a, const Mono& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    m = std::max(m, double(std::abs(a[i] - b[i])));
  }
  return m;
}

}  // namespace

TEST_CASE("attention: first frame returns the value of that frame") {
  KvCache cache(2, 3, 4, 5);
  Mat q = Mat::Random(3, 2), k = Mat::Random(3, 2), v = Mat::Random(4, 2), out;
  causal_windowed_attention(q, k, v, cache, out);
  CHECK(out.isApprox(v, 1e-6f));
  CHECK(cache.filled() == 1);
}

TEST_CASE("attention: uniform keys average the cached values") {
  KvCache cache(2, 3, 4, 3);
  const Mat k = Mat::Random(3, 2);
  std::vector<Mat> vs;
  Mat out;
  for (int t = 0; t < 5; ++t) {
    vs.push_back(Mat::Random(4, 2));
    causal_windowed_attention(Mat::Random(3, 2), k, vs.back(), cache, out);
  }
  const Mat mean = (vs[2] + vs[3] + vs[4]) / 3.0f;
  CHECK(out.isApprox(mean, 1e-5f));
}

TEST_CASE("attention: frames at t-W or older do not affect frame t") {
  const int T = 10, W = 4, E = 3, V = 2;
  std::vector<Mat> q{Mat::Random(E, T)}, k{Mat::Random(E, T)}, v{Mat::Random(V, T)};
  const auto ref = windowed_attention_offline(q, k, v, W);
  auto k2 = k, v2 = v;
  for (int t = 0; t <= T - 1 - W; ++t) {
    k2[0].col(t).setRandom();
    v2[0].col(t).setRandom();
  }
  const auto changed = windowed_attention_offline(q, k2, v2, W);
  CHECK(changed[0].col(T - 1) == ref[0].col(T - 1));
  CHECK(!(changed[0].col(T - 2) == ref[0].col(T - 2)));

  // Streaming through the ring buffer matches the explicit-window oracle.
  KvCache cache(1, E, V, W);
  Mat out;
  for (int t = 0; t < T; ++t) {
    causal_windowed_attention(q[0].col(t), k[0].col(t), v[0].col(t), cache, out);
    CHECK(out.isApprox(ref[0].col(t), 1e-5f));
  }
  CHECK_THROWS_AS(cache.push(Mat::Zero(E + 1, 1), Mat::Zero(V, 1)), SizeMismatch);
}

TEST_CASE("model: parameter count and determinism") {
  const auto& m = default_model();
  CHECK(m.parameter_count() >= 1940000);
  CHECK(m.parameter_count() <= 2140000);
  CHECK(m.to_archive().total_parameters() == m.parameter_count());
  CHECK(Model::from_seed(ModelConfig{}, 1).to_archive() == m.to_archive());
  CHECK(!(Model::from_seed(ModelConfig{}, 2).to_archive() == m.to_archive()));
}

TEST_CASE("model: config validation and hashing") {
  ModelConfig c;
  CHECK(model_config_from_json(to_json(c)) == c);
  CHECK(c.hash() == ModelConfig{}.hash());
  ModelConfig d = c;
  d.attn_window = 10;
  CHECK(d.hash() != c.hash());
  d = c;
  d.emb_dim = 62;  // not divisible by the head count
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("model: zero weights give zero output") {
  const auto zero = Model::from_archive(transform(default_model().to_archive(), [](Tensor& t) {
    std::fill(t.data.begin(), t.data.end(), 0.0f);
    return true;
  }));
  const auto x = test::random_stereo(128 * 10, 3);
  const auto y = run_stream(zero, x, zero.condition(embedding(1)));
  for (float v : y) CHECK(v == 0.0f);
  CHECK(zero.offline_causal_forward(x, zero.condition(embedding(1))) == y);
}

TEST_CASE("model: silence in gives silence out") {
  const auto& m = default_model();
  const auto y = run_stream(m, BinauralBuffer(128 * 20), m.condition(embedding(1)));
  for (float v : y) CHECK(v == 0.0f);
}

TEST_CASE("model: conditioning is time invariant and normalised") {
  const auto& m = default_model();
  const auto e = embedding(4);
  CHECK(m.condition(e).tensor == m.condition(e).tensor);
  const auto unit = Model::from_archive(transform(m.to_archive(), [](Tensor& t) {
    if (t.name == "cond.norm.weight") std::fill(t.data.begin(), t.data.end(), 1.0f);
    if (t.name == "cond.norm.bias") std::fill(t.data.begin(), t.data.end(), 0.0f);
    return true;
  }));
  const Mat c = unit.condition(e).tensor;
  CHECK(c.rows() == 64);
  CHECK(c.cols() == 97);
  const double mean = c.cast<double>().mean();
  const double var = (c.cast<double>().array() - mean).square().mean();
  CHECK(std::abs(mean) < 1e-5);
  // var / (var + eps) with eps = 1e-5 on a small pre-norm variance.
  CHECK(var == doctest::Approx(1.0).epsilon(1e-2));
  CHECK_THROWS_AS(m.condition(dsp::SpeakerEmbedding{}), SizeMismatch);
}

TEST_CASE("model: different embeddings give different outputs") {
  const auto& m = default_model();
  const auto x = test::random_stereo(128 * 40, 5);
  const auto a = run_stream(m, x, m.condition(embedding(6)));
  const auto b = run_stream(m, x, m.condition(embedding(7)));
  CHECK(max_abs_diff(a, b) > 1e-4);
}

TEST_CASE("model: streaming over 3 s equals the offline causal forward") {
  const auto& m = default_model();
  const auto x = test::random_stereo(48000, 8);
  const auto cond = m.condition(embedding(9));
  const auto stream = run_stream(m, x, cond);
  const auto offline = m.offline_causal_forward(x, cond);
  REQUIRE(stream.size() == offline.size());
  CHECK(stream.size() == 48000);
  CHECK(max_abs_diff(stream, offline) < 1e-4);
}

TEST_CASE("model: single-frame offline forward equals one process_chunk") {
  const auto& m = default_model();
  const auto x = test::random_stereo(128, 10);
  const auto cond = m.condition(embedding(11));
  auto state = m.make_state();
  Mono out(128);
  m.process_chunk(state, x.left, x.right, cond, out);
  CHECK(max_abs_diff(m.offline_causal_forward(x, cond), out) < 1e-5);
}

TEST_CASE("model: output is causal up to the lookahead") {
  const auto& m = default_model();
  const auto x = test::random_stereo(128 * 12, 12);
  const auto cond = m.condition(embedding(13));
  const auto base = run_stream(m, x, cond);
  for (std::size_t c : {std::size_t{2}, std::size_t{6}}) {
    const std::size_t boundary = (c + 1) * 128;
    for (std::size_t offset : {std::size_t{0}, std::size_t{37}, std::size_t{200}}) {
      auto p = x;
      p.left[boundary + offset] += 0.5f;
      p.right[boundary + offset] -= 0.5f;
      const auto y = run_stream(m, p, cond);
      CHECK(std::equal(y.begin(), y.begin() + boundary, base.begin()));
    }
    // The last lookahead sample still reaches chunk c.
    auto p = x;
    p.left[boundary - 1] += 0.5f;
    const auto y = run_stream(m, p, cond);
    CHECK(!std::equal(y.begin() + c * 128, y.begin() + boundary, base.begin() + c * 128));
  }
}

TEST_CASE("model: reset, copy mode and state checks") {
  const auto& m = default_model();
  const auto x = test::random_stereo(128 * 8, 14);
  const auto cond = m.condition(embedding(15));
  const auto fresh = run_stream(m, x, cond);
  CHECK(run_stream(m, x, cond, false, StateUpdate::Copy) == fresh);

  auto state = m.make_state();
  Mono out(128), y;
  for (int pass = 0; pass < 2; ++pass) {
    y.clear();
    for (std::size_t c = 0; c < 8; ++c) {
      m.process_chunk(state, chunk_of(x.left, c), chunk_of(x.right, c), cond, out);
      y.insert(y.end(), out.begin(), out.end());
    }
    CHECK(y == fresh);
    CHECK(state.chunks_processed() == 8);
    state.reset();
  }
  CHECK(state.bytes() > 0);

  StreamState blank;
  CHECK(!blank.initialized());
  CHECK_THROWS_AS(m.process_chunk(blank, chunk_of(x.left, 0), chunk_of(x.right, 0), cond, out),
                  ConfigError);
  CHECK_THROWS_AS(m.process_chunk(state, Mono(100), Mono(100), cond, out), SizeMismatch);
}

TEST_CASE("model: non-finite input raises a fault carrying the chunk index") {
  const auto& m = default_model();
  auto x = test::random_stereo(128 * 6, 16);
  x.left[3 * 128 + 100] = NAN;
  const auto cond = m.condition(embedding(17));
  auto state = m.make_state();
  Mono out(128);
  std::int64_t faulted = -1;
  try {
    for (std::size_t c = 0; c < 6; ++c) {
      m.process_chunk(state, chunk_of(x.left, c), chunk_of(x.right, c), cond, out);
    }
  } catch (const NumericFault& f) {
    faulted = f.chunk_index();
  }
  CHECK(faulted == 3);
}

TEST_CASE("model: aligned extraction removes the lookahead") {
  const auto& m = default_model();
  const auto x = test::random_stereo(1000, 18);
  const auto cond = m.condition(embedding(19));
  const auto flushed = run_stream(m, x, cond, true);
  const auto aligned = extract_aligned(m, x, cond);
  REQUIRE(aligned.size() == 1000);
  CHECK(flushed.size() >= 1064);
  CHECK(std::equal(aligned.begin(), aligned.end(), flushed.begin() + 64));
}

TEST_CASE("weights: save and load round trip") {
  const auto dir = test::temp_dir("weights");
  const auto archive = default_model().to_archive();
  save_weight_archive(archive, dir / "w.json");
  CHECK(std::filesystem::exists(dir / "w.bin"));
  const auto back = load_weight_archive(dir / "w.json");
  CHECK(back == archive);
  const ModelConfig expected;
  CHECK(load_weight_archive(dir / "w.json", &expected) == archive);
}

TEST_CASE("weights: hash mismatches are typed") {
  const auto dir = test::temp_dir("weights_hash");
  save_weight_archive(default_model().to_archive(), dir / "w.json");
  SUBCASE("expected config differs") {
    ModelConfig other;
    other.attn_window = 20;
    CHECK_THROWS_AS(load_weight_archive(dir / "w.json", &other), HashMismatch);
  }
  SUBCASE("manifest hash edited") {
    auto j = io::read_json_file(dir / "w.json");
    j["config_hash"] = "0000000000000000";
    io::write_json_file(dir / "w.json", j);
    CHECK_THROWS_AS(load_weight_archive(dir / "w.json"), HashMismatch);
  }
  SUBCASE("blob corrupted") {
    std::fstream f(dir / "w.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(16);
    f.put('\x7f');
    f.close();
    CHECK_THROWS_AS(load_weight_archive(dir / "w.json"), HashMismatch);
  }
  SUBCASE("blob truncated") {
    std::filesystem::resize_file(dir / "w.bin", 1000);
    CHECK_THROWS_AS(load_weight_archive(dir / "w.json"), ParseError);
  }
}

TEST_CASE("weights: missing and misshapen tensors are named") {
  const auto archive = default_model().to_archive();
  const auto missing = transform(archive, [](const Tensor& t) {
    return t.name != "blocks.1.attn.q.bias" && t.name != "deconv.bias";
  });
  try {
    (void)Model::from_archive(missing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("blocks.1.attn.q.bias") != std::string::npos);
    CHECK(msg.find("deconv.bias") != std::string::npos);
  }
  const auto misshapen = transform(archive, [](Tensor& t) {
    if (t.name == "conv_in.bias") t.shape = {32, 2};
    return true;
  });
  CHECK_THROWS_AS((void)Model::from_archive(misshapen), ShapeMismatch);
}

TEST_CASE("profile: 1000 chunks give 1000 records and consistent sums") {
  const auto& m = default_model();
  const auto cond = m.condition(embedding(20));
  auto state = m.make_state();
  ProfileOptions opts;
  opts.warmup_chunks = 5;
  const auto in_place = profile_stream(m, state, cond, 1000, false, opts);
  CHECK(in_place.timings.size() == 1000);
  CHECK(in_place.summary.count == 1000);
  for (const auto& t : in_place.timings) CHECK(t.copy_ms == 0.0);

  auto state2 = m.make_state();
  const auto copy = profile_stream(m, state2, cond, 1000, true, opts);
  REQUIRE(copy.timings.size() == 1000);
  double mean_inf = 0.0;
  for (const auto& t : copy.timings) {
    CHECK(t.total_ms() >= t.inference_ms);
    CHECK(t.copy_ms > 0.0);
    mean_inf += t.inference_ms / 1000.0;
  }
  CHECK(copy.summary.mean_ms >= mean_inf);
  CHECK(copy.summary.p50_ms <= copy.summary.p95_ms);
  CHECK(copy.summary.p95_ms <= copy.summary.max_ms);
  CHECK(copy.summary.cdf.back().second == doctest::Approx(1.0));

  const auto lat = latency_breakdown(m.config().audio, copy.summary);
  CHECK(lat.buffering_ms == 8.0);
  CHECK(lat.lookahead_ms == 4.0);
  CHECK(lat.processing_ms == copy.summary.p95_ms);
  CHECK(lat.total_ms() == doctest::Approx(12.0 + copy.summary.p95_ms));
  CHECK(lat.reference_ms == 18.24);
  CHECK_THROWS_AS(profile_stream(m, state, cond, 0, false), ConfigError);
}

TEST_CASE("percentile helper") {
  CHECK(percentile({3.0, 1.0, 2.0}, 50) == 2.0);
  CHECK(percentile({1.0, 2.0}, 50) == 1.5);
  CHECK(percentile({5.0}, 95) == 5.0);
  const auto s = summarize_timings({1.0, 2.0, 10.0, 3.0}, 8.0);
  CHECK(s.deadline_miss_fraction == 0.25);
  CHECK(s.max_ms == 10.0);
}
