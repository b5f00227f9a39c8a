#include "tsh/scene/trajectory.hpp"

#include <cmath>

namespace tsh::scene {

MotionMode parse_motion_mode(std::string_view s) {
  if (s == "static") return MotionMode::Static;
  if (s == "moving") return MotionMode::Moving;
  if (s == "enrollment") return MotionMode::Enrollment;
  throw ConfigError("unknown motion mode '" + std::string(s) + "'");
}

std::string to_string(MotionMode m) {
  switch (m) {
    case MotionMode::Static: return "static";
    case MotionMode::Moving: return "moving";
    case MotionMode::Enrollment: return "enrollment";
  }
  return "static";
}

std::size_t Trajectory::steps_for(double duration_s) {
  return static_cast<std::size_t>(std::ceil(duration_s / kTrajectoryStepS - 1e-9));
}

std::size_t Trajectory::steps_for_samples(std::size_t samples) {
  const std::size_t step = static_cast<std::size_t>(kTrajectoryStepS * kSampleRate);
  return (samples + step - 1) / step;
}

Trajectory Trajectory::fixed(std::size_t steps, double azimuth_deg, double polar_deg) {
  Trajectory t;
  t.azimuth_deg.assign(steps, azimuth_deg);
  t.polar_deg.assign(steps, polar_deg);
  return t;
}

void TrajectoryOptions::validate() const {
  if (polar_min_deg > polar_max_deg || polar_min_deg < 0.0 || polar_max_deg > 180.0) {
    throw ConfigError("invalid polar range");
  }
  if (speed_min_deg_s < 0.0 || speed_min_deg_s > speed_max_deg_s) {
    throw ConfigError("invalid angular speed range");
  }
  if (hold_min_s <= 0.0 || hold_min_s > hold_max_s) throw ConfigError("invalid hold range");
  if (event_probability < 0.0 || event_probability > 1.0) {
    throw ConfigError("event probability must be in [0, 1]");
  }
  if (!(enrollment_error_deg >= 0.0) || enrollment_error_deg > kMaxEnrollmentErrorDeg) {
    throw ConfigError("enrollment angle error must be within [0, 18] deg, got " +
                      std::to_string(enrollment_error_deg));
  }
}

namespace {

double wrap360(double a) {
  double r = std::fmod(a, 360.0);
  if (r < 0) r += 360.0;
  return r;
}

}  // namespace

Trajectory sample_trajectory(Rng& rng, double duration_s, MotionMode mode,
                             const TrajectoryOptions& opts) {
  if (!(duration_s > 0.0)) throw ConfigError("trajectory duration must be > 0");
  opts.validate();
  const std::size_t steps = Trajectory::steps_for(duration_s);
  Trajectory t;
  t.azimuth_deg.resize(steps);
  t.polar_deg.resize(steps);

  if (mode == MotionMode::Enrollment) {
    const double lo = 90.0 - opts.enrollment_error_deg;
    const double hi = 90.0 + opts.enrollment_error_deg;
    for (std::size_t i = 0; i < steps; ++i) {
      t.azimuth_deg[i] = rng.uniform(lo, hi);
      t.polar_deg[i] = rng.uniform(lo, hi);
    }
    return t;
  }

  double az = opts.azimuth_deg ? wrap360(*opts.azimuth_deg) : rng.uniform(0.0, 360.0);
  double po = opts.polar_deg ? *opts.polar_deg : rng.uniform(opts.polar_min_deg, opts.polar_max_deg);
  t.azimuth_deg[0] = az;
  t.polar_deg[0] = po;
  if (mode == MotionMode::Static) {
    for (std::size_t i = 1; i < steps; ++i) {
      t.azimuth_deg[i] = az;
      t.polar_deg[i] = po;
    }
    return t;
  }

  std::size_t hold = 0;
  double v_az = 0.0, v_po = 0.0;
  for (std::size_t i = 1; i < steps; ++i) {
    if (hold == 0) {
      ++t.trial_steps;
      if (rng.bernoulli(opts.event_probability)) {
        const double s_az = rng.uniform(opts.speed_min_deg_s, opts.speed_max_deg_s);
        const double s_po = rng.uniform(opts.speed_min_deg_s, opts.speed_max_deg_s);
        v_az = rng.bernoulli(0.5) ? s_az : -s_az;
        v_po = rng.bernoulli(0.5) ? s_po : -s_po;
        const double dur = rng.uniform(opts.hold_min_s, opts.hold_max_s);
        hold = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(dur / t.step_s)));
        t.events.push_back({i, hold, v_az, v_po});
      }
    }
    if (hold > 0) {
      az = wrap360(az + v_az * t.step_s);
      po += v_po * t.step_s;
      // Reflect at the poles.
      if (po < 0.0) {
        po = -po;
        v_po = -v_po;
      } else if (po > 180.0) {
        po = 360.0 - po;
        v_po = -v_po;
      }
      --hold;
    }
    t.azimuth_deg[i] = az;
    t.polar_deg[i] = po;
  }
  return t;
}

}  // namespace tsh::scene
