#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "tsh/dsp/metrics.hpp"
#include "tsh/scene/scene.hpp"

using namespace tsh;
using namespace tsh::scene;

namespace {

BinauralBuffer impulse_pair(std::size_t taps, std::size_t dl, std::size_t dr) {
  BinauralBuffer b(taps);
  b.left[dl] = 1.0f;
  b.right[dr] = 1.0f;
  return b;
}

BrirEntry entry(const std::string& room, double az, double pol, BinauralBuffer ir) {
  return BrirEntry{room, az, pol, std::move(ir)};
}

/// Horizontal and vertical grid at `grid_deg` with one kernel per direction.
template <class Kernel>
BrirSet grid_set(const std::string& room, double grid_deg, Kernel&& kernel) {
  std::vector<BrirEntry> entries;
  for (double pol = 0.0; pol <= 180.0 + 1e-9; pol += grid_deg) {
    const bool pole = pol < 1e-9 || pol > 180.0 - 1e-9;
    for (double az = 0.0; az < 360.0 - 1e-9; az += grid_deg) {
      entries.push_back(entry(room, az, pol, kernel(az, pol)));
      if (pole) break;
    }
  }
  return BrirSet(std::move(entries));
}

BrirLibrary single(BrirSet set) {
  BrirLibrary lib;
  lib.add(std::make_shared<const BrirSet>(std::move(set)));
  return lib;
}

const SyntheticVoiceCorpus& voices() {
  static const SyntheticVoiceCorpus c(8, 7);
  return c;
}
const SyntheticNoiseCorpus& noises() {
  static const SyntheticNoiseCorpus c;
  return c;
}
Corpora corpora() { return {&voices(), &noises()}; }

}  // namespace

TEST_CASE("nearest brir: grid points and the three-entry example") {
  const BrirSet set({entry("r", 0, 90, impulse_pair(4, 0, 0)), entry("r", 90, 90, impulse_pair(4, 0, 0)),
                     entry("r", 180, 90, impulse_pair(4, 0, 0))});
  CHECK(set.nearest(100, 90).azimuth_deg == 90.0);
  CHECK(set.nearest(0, 90).azimuth_deg == 0.0);
  CHECK(set.nearest(180, 90).azimuth_deg == 180.0);
  CHECK(set.nearest(350, 90).azimuth_deg == 0.0);
  // Equidistant: lowest index wins.
  CHECK(set.nearest_index(45, 90) == 0);
}

TEST_CASE("nearest brir matches a brute-force scan on random grids") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<BrirEntry> entries;
    for (int i = 0; i < 40; ++i) {
      entries.push_back(entry("r", rng.uniform(0.0, 360.0), rng.uniform(0.0, 180.0),
                              impulse_pair(2, 0, 0)));
    }
    const BrirSet set(entries);
    for (int q = 0; q < 200; ++q) {
      const double az = rng.uniform(0.0, 360.0), pol = rng.uniform(0.0, 180.0);
      std::size_t best = 0;
      double best_d = 1e9;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const double d = angular_distance_deg(az, pol, entries[i].azimuth_deg, entries[i].polar_deg);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      CHECK(set.nearest_index(az, pol) == best);
    }
  }
}

TEST_CASE("brir set validation") {
  CHECK_THROWS_AS(BrirSet({}), DataError);
  CHECK_THROWS_AS(BrirSet({entry("r", 0, 90, impulse_pair(2, 0, 0)),
                           entry("r", 0, 90, impulse_pair(2, 0, 0))}),
                  DataError);
  CHECK_THROWS_AS(BrirSet({entry("a", 0, 90, impulse_pair(2, 0, 0)),
                           entry("b", 10, 90, impulse_pair(2, 0, 0))}),
                  DataError);
}

TEST_CASE("synthetic rooms are mirror symmetric") {
  const auto set = make_synthetic_brir_set(default_synthetic_rooms().front(), 10.0);
  const auto& front = set.nearest(90.0, 90.0);
  CHECK(front.azimuth_deg == 90.0);
  CHECK(front.impulse.left == front.impulse.right);
  CHECK(synthetic_ear_delay(30.0, 90.0, true) > synthetic_ear_delay(30.0, 90.0, false));
}

TEST_CASE("trajectory: static 5 s gives 200 identical samples") {
  Rng rng(1);
  const auto t = sample_trajectory(rng, 5.0, MotionMode::Static);
  REQUIRE(t.size() == 200);
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(t.azimuth_deg[i] == t.azimuth_deg[0]);
    CHECK(t.polar_deg[i] == t.polar_deg[0]);
  }
  CHECK(t.polar_deg[0] >= 45.0);
  CHECK(t.polar_deg[0] <= 135.0);
}

TEST_CASE("trajectory: enrollment stays within 18 degrees of the front") {
  Rng rng(2);
  const auto t = sample_trajectory(rng, 60.0, MotionMode::Enrollment);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.azimuth_deg[i] >= 72.0);
    CHECK(t.azimuth_deg[i] <= 108.0);
    CHECK(t.polar_deg[i] >= 72.0);
    CHECK(t.polar_deg[i] <= 108.0);
  }
  TrajectoryOptions bad;
  bad.enrollment_error_deg = 20.0;
  CHECK_THROWS_AS(sample_trajectory(rng, 1.0, MotionMode::Enrollment, bad), ConfigError);
}

TEST_CASE("trajectory: moving event statistics over 1e6 steps") {
  Rng rng(3);
  const auto t = sample_trajectory(rng, 1e6 * kTrajectoryStepS, MotionMode::Moving);
  REQUIRE(t.size() == 1000000);
  const double rate = double(t.events.size()) / double(t.trial_steps);
  CHECK(rate == doctest::Approx(0.025).epsilon(0.002 / 0.025));
  for (const auto& e : t.events) {
    const double va = std::abs(e.azimuth_velocity_deg_s), vp = std::abs(e.polar_velocity_deg_s);
    CHECK(va >= 30.0);
    CHECK(va <= 90.0);
    CHECK(vp >= 30.0);
    CHECK(vp <= 90.0);
    CHECK(e.hold_steps >= 4);
    CHECK(e.hold_steps <= 40);
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.azimuth_deg[i] >= 0.0);
    CHECK(t.azimuth_deg[i] < 360.0);
    CHECK(t.polar_deg[i] >= 0.0);
    CHECK(t.polar_deg[i] <= 180.0);
  }
}

TEST_CASE("trajectory: determinism and mode names") {
  Rng a(9), b(9);
  const auto ta = sample_trajectory(a, 3.0, MotionMode::Moving);
  const auto tb = sample_trajectory(b, 3.0, MotionMode::Moving);
  CHECK(ta.azimuth_deg == tb.azimuth_deg);
  CHECK(parse_motion_mode("moving") == MotionMode::Moving);
  CHECK(to_string(MotionMode::Enrollment) == "enrollment");
  CHECK_THROWS_AS(parse_motion_mode("orbit"), ConfigError);
  CHECK(Trajectory::steps_for_samples(801) == 3);
}

TEST_CASE("render: unit impulse duplicates the input") {
  const BrirSet set({entry("r", 90, 90, impulse_pair(16, 0, 0))});
  const auto x = test::random_signal(3000, 1);
  const auto out = render_moving_source(x, Trajectory::fixed(8, 90, 90), set);
  CHECK(out.left == x);
  CHECK(out.right == x);
  CHECK_THROWS_AS(render_moving_source(x, Trajectory::fixed(7, 90, 90), set), SizeMismatch);
}

TEST_CASE("render: constant trajectory equals direct convolution") {
  BinauralBuffer ir(test::random_signal(200, 2), test::random_signal(200, 3));
  const BrirSet set({entry("r", 90, 90, ir)});
  const auto x = test::random_signal(4000, 4);
  const auto out = render_moving_source(x, Trajectory::fixed(10, 90, 90), set);
  const auto rl = test::direct_convolve(x, ir.left);
  const auto rr = test::direct_convolve(x, ir.right);
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err = std::max({err, std::abs(out.left[i] - rl[i]), std::abs(out.right[i] - rr[i])});
  }
  CHECK(err < 1e-6);
}

TEST_CASE("render: two-step trajectory matches single-kernel renders outside the crossfade") {
  BinauralBuffer a(test::random_signal(64, 5), test::random_signal(64, 6));
  BinauralBuffer b(test::random_signal(64, 7), test::random_signal(64, 8));
  const BrirSet set({entry("r", 0, 90, a), entry("r", 180, 90, b)});
  const auto x = test::random_signal(800, 9);
  Trajectory t = Trajectory::fixed(2, 0, 90);
  t.azimuth_deg[1] = 180;
  const auto out = render_moving_source(x, t, set);
  const auto only_a = render_moving_source(x, Trajectory::fixed(2, 0, 90), set);
  const auto only_b = render_moving_source(x, Trajectory::fixed(2, 180, 90), set);
  for (std::size_t i = 0; i < 360; ++i) {
    CHECK(out.left[i] == doctest::Approx(only_a.left[i]).epsilon(1e-6));
    CHECK(out.right[i] == doctest::Approx(only_a.right[i]).epsilon(1e-6));
  }
  for (std::size_t i = 440; i < 800; ++i) {
    CHECK(out.left[i] == doctest::Approx(only_b.left[i]).epsilon(1e-6));
    CHECK(out.right[i] == doctest::Approx(only_b.right[i]).epsilon(1e-6));
  }
}

TEST_CASE("compose: single target through impulse BRIRs without noise equals target") {
  const auto lib = single(grid_set("id", 30.0, [](double, double) { return impulse_pair(8, 0, 0); }));
  SceneSpec spec;
  spec.seed = 5;
  spec.duration_s = 2.0;
  spec.interferers = {};
  spec.noise_enabled = false;
  spec.augment = false;
  spec.enrollment.interferers = 0;
  const auto scene = compose_scene(spec, lib, corpora());
  CHECK(scene.mixture.left == scene.target_gt.left);
  CHECK(scene.mixture.right == scene.target_gt.right);
  double energy = 0.0;
  for (float v : scene.target_gt.left) energy += v * v;
  CHECK(energy > 0.0);
  CHECK(scene.target_gt.left == scene.target_gt.right);
}

TEST_CASE("compose: mixture equals the sum of stems and augmentation") {
  const auto lib = make_synthetic_library(10.0);
  const auto spec = random_scene_spec(17, "s", true);
  const auto scene = compose_scene(spec, lib, corpora());
  REQUIRE(scene.stems.size() == scene.meta.stems.size());
  CHECK(scene.meta.stems.front().role == StemRole::Target);
  double max_err = 0.0;
  for (std::size_t i = 0; i < scene.mixture.size(); ++i) {
    double l = scene.augmentation.left[i], r = scene.augmentation.right[i];
    for (const auto& s : scene.stems) {
      l += s.left[i];
      r += s.right[i];
    }
    max_err = std::max({max_err, std::abs(l - scene.mixture.left[i]),
                        std::abs(r - scene.mixture.right[i])});
  }
  CHECK(max_err < 1e-6);
  CHECK(scene.target_gt.left == scene.stems.front().left);
}

TEST_CASE("compose: fixed seed twice is bit-identical") {
  const auto lib = make_synthetic_library(10.0);
  const auto spec = random_scene_spec(23, "s", true);
  const auto a = compose_scene(spec, lib, corpora());
  const auto b = compose_scene(spec, lib, corpora());
  CHECK(a.mixture.left == b.mixture.left);
  CHECK(a.mixture.right == b.mixture.right);
  CHECK(to_json(a.meta) == to_json(b.meta));
  const auto ea = make_enrollment_scene(spec, lib, corpora());
  const auto eb = make_enrollment_scene(spec, lib, corpora());
  CHECK(ea.mixture.left == eb.mixture.left);
}

TEST_CASE("scene spec json round trip and validation") {
  const auto spec = random_scene_spec(3, "x", true);
  CHECK(to_json(scene_spec_from_json(to_json(spec))) == to_json(spec));
  SceneSpec bad = spec;
  bad.interferers.assign(3, SourceSpec{});
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.duration_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("enrollment scene: symmetric BRIRs give identical channels at 90 degrees") {
  const auto lib = make_synthetic_library(10.0);
  SceneSpec spec = random_scene_spec(4, "sym");
  spec.enrollment.angle_error_deg = 0.0;
  const auto enroll = make_enrollment_scene(spec, lib, corpora());
  const auto& target = enroll.stems.front();
  CHECK(enroll.meta.stems.front().role == StemRole::Target);
  CHECK(target.left == target.right);
}

TEST_CASE("enrollment scene: pure-delay kernels place the target at lag 0") {
  const auto lib = single(grid_set("delay", 10.0, [](double az, double pol) {
    return impulse_pair(48, synthetic_ear_delay(az, pol, true), synthetic_ear_delay(az, pol, false));
  }));
  SceneSpec spec;
  spec.seed = 12;
  spec.duration_s = 2.0;
  spec.noise_enabled = false;
  spec.augment = false;
  spec.enrollment.duration_s = 2.0;
  spec.enrollment.angle_error_deg = 0.0;
  spec.enrollment.interferers = 1;
  SourceSpec side;
  side.azimuth_deg = 30.0;
  side.polar_deg = 90.0;
  spec.interferers = {side};
  const auto enroll = make_enrollment_scene(spec, lib, corpora());
  REQUIRE(enroll.stems.size() >= 2);
  CHECK(test::xcorr_peak_lag(enroll.stems[0].left, enroll.stems[0].right, 20) == 0);
  CHECK(enroll.meta.stems[1].role == StemRole::Interferer);
  CHECK(enroll.meta.stems[1].trajectory.azimuth_deg.front() == 30.0);
  CHECK(test::xcorr_peak_lag(enroll.stems[1].left, enroll.stems[1].right, 20) != 0);
}
