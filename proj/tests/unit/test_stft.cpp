#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "tsh/dsp/stft.hpp"

using namespace tsh;
using namespace tsh::dsp;

TEST_CASE("default framing constants") {
  AudioParams p;
  CHECK(p.bins() == 97);
  CHECK(p.tail_len() == 64);
  CHECK(p.chunk_ms() == doctest::Approx(8.0));
  CHECK(p.lookahead_ms() == doctest::Approx(4.0));
  CHECK_NOTHROW(p.validate());
  AudioParams bad = p;
  bad.win_len = 196;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stft push: zero chunk with zero state gives zero bins") {
  StftAnalyzer a;
  const auto frame = a.push(std::vector<float>(128, 0.0f));
  REQUIRE(frame.size() == 97);
  for (auto c : frame) CHECK(std::abs(c) == 0.0f);
}

TEST_CASE("stft push: wrong chunk length is a size mismatch") {
  StftAnalyzer a;
  CHECK_THROWS_AS(a.push(std::vector<float>(100, 0.0f)), SizeMismatch);
}

TEST_CASE("stft push: impulse with rectangular window matches a direct DFT") {
  AudioParams p;
  StftAnalyzer a(p, rectangular_window(p.win_len));
  std::vector<float> chunk(128, 0.0f);
  chunk[0] = 1.0f;
  const auto frame = a.push(chunk);
  // Assembled window: 64 zero tail samples then the chunk.
  std::vector<double> assembled(p.win_len, 0.0);
  assembled[64] = 1.0;
  const auto ref = test::direct_dft(assembled);
  for (int k = 0; k < p.bins(); ++k) {
    CHECK(std::abs(std::complex<double>(frame[k]) - ref[k]) < 1e-5);
    // Window value 1 times the phase ramp exp(-j 2 pi k 64 / 192).
    CHECK(std::abs(std::complex<double>(frame[k]) -
                   std::polar(1.0, -2.0 * M_PI * k * 64.0 / 192.0)) < 1e-5);
  }
}

TEST_CASE("stft push: 1 s in 125 chunks equals offline framing") {
  const auto x = test::random_signal(16000, 11);
  StftAnalyzer a;
  const auto offline = stft_offline(x);
  REQUIRE(offline.size() == 125);
  double max_err = 0.0;
  for (int c = 0; c < 125; ++c) {
    const auto f = a.push(std::span(x).subspan(c * 128, 128));
    for (int k = 0; k < 97; ++k) max_err = std::max(max_err, double(std::abs(f[k] - offline[c][k])));
  }
  CHECK(max_err <= 1e-6);
}

TEST_CASE("stft push: matches a direct DFT of the windowed assembled frame") {
  AudioParams p;
  const auto win = sqrt_hann_window(p.win_len);
  const auto x = test::random_signal(128 * 4, 5);
  StftAnalyzer a(p, win);
  std::vector<double> history(64, 0.0);
  for (int c = 0; c < 4; ++c) {
    const auto f = a.push(std::span(x).subspan(c * 128, 128));
    std::vector<double> assembled(history);
    for (int i = 0; i < 128; ++i) assembled.push_back(x[c * 128 + i]);
    for (int i = 0; i < p.win_len; ++i) assembled[i] *= win[i];
    const auto ref = test::direct_dft(assembled);
    for (int k = 0; k < 97; ++k) CHECK(std::abs(std::complex<double>(f[k]) - ref[k]) < 1e-4);
    history.assign(x.begin() + c * 128 + 64, x.begin() + c * 128 + 128);
  }
}

TEST_CASE("window pair reconstructs perfectly at hop 128") {
  const auto w = sqrt_hann_window(192);
  const auto s = synthesis_window(w, 128);
  for (int n = 0; n < 128; ++n) {
    double acc = 0.0;
    for (int m = n; m < 192; m += 128) acc += double(w[m]) * s[m];
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("stft/istft round trip delays by exactly 64 samples") {
  const auto x = test::random_signal(128 * 200, 21);
  StftAnalyzer a;
  IstftSynthesizer s;
  std::vector<float> y;
  std::vector<float> out(128);
  for (int c = 0; c < 200; ++c) {
    const auto f = a.push(std::span(x).subspan(c * 128, 128));
    s.push_frame(f, out);
    y.insert(y.end(), out.begin(), out.end());
  }
  double max_err = 0.0;
  for (std::size_t n = 0; n < 64; ++n) max_err = std::max(max_err, double(std::abs(y[n])));
  for (std::size_t n = 64; n < y.size(); ++n) {
    max_err = std::max(max_err, double(std::abs(y[n] - x[n - 64])));
  }
  CHECK(max_err < 1e-5);
}

TEST_CASE("istft: all-zero frames give all-zero output") {
  IstftSynthesizer s;
  SpectralFrame zero(97);
  std::vector<float> out(128);
  for (int i = 0; i < 5; ++i) {
    s.push_frame(zero, out);
    for (float v : out) CHECK(v == 0.0f);
  }
}

TEST_CASE("istft: a single nonzero frame is confined to this hop plus the tail") {
  IstftSynthesizer s;
  SpectralFrame f(97);
  for (int k = 0; k < 97; ++k) f[k] = {1.0f / (k + 1), 0.5f};
  f[0] = {1.0f, 0.0f};
  f[96] = {0.3f, 0.0f};
  std::vector<float> now(128), later(128), after(128);
  s.push_frame(f, now);
  s.push_frame(SpectralFrame(97), later);
  s.push_frame(SpectralFrame(97), after);
  double energy_now = 0.0;
  for (float v : now) energy_now += v * v;
  CHECK(energy_now > 0.0);
  for (int i = 64; i < 128; ++i) CHECK(later[i] == 0.0f);
  for (float v : after) CHECK(v == 0.0f);
}

TEST_CASE("offline istft matches the streaming synthesizer") {
  const auto x = test::random_signal(128 * 30, 8);
  const auto frames = stft_offline(x);
  const auto y = istft_offline(frames);
  IstftSynthesizer s;
  std::vector<float> out(128);
  for (std::size_t c = 0; c < frames.size(); ++c) {
    s.push_frame(frames[c], out);
    for (int i = 0; i < 128; ++i) CHECK(out[i] == doctest::Approx(y[c * 128 + i]).epsilon(1e-6));
  }
}
