#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsh/common.hpp"

namespace tsh::scene {

inline constexpr double kTrajectoryStepS = 0.025;
inline constexpr double kMaxEnrollmentErrorDeg = 18.0;

enum class MotionMode { Static, Moving, Enrollment };

MotionMode parse_motion_mode(std::string_view s);
std::string to_string(MotionMode m);

struct MotionEvent {
  std::size_t step = 0;        ///< step at which the event fired
  std::size_t hold_steps = 0;  ///< steps the velocity is held
  double azimuth_velocity_deg_s = 0.0;
  double polar_velocity_deg_s = 0.0;
};

/// Source direction sampled every 25 ms.
struct Trajectory {
  double step_s = kTrajectoryStepS;
  std::vector<double> azimuth_deg;
  std::vector<double> polar_deg;
  /// Motion bookkeeping (moving mode only).
  std::vector<MotionEvent> events;
  std::size_t trial_steps = 0;  ///< steps on which an event could fire

  std::size_t size() const { return azimuth_deg.size(); }
  static std::size_t steps_for(double duration_s);
  static std::size_t steps_for_samples(std::size_t samples);
  /// Constant direction for `steps` steps.
  static Trajectory fixed(std::size_t steps, double azimuth_deg, double polar_deg);
};

struct TrajectoryOptions {
  double polar_min_deg = 45.0;  ///< initial polar range (static / moving)
  double polar_max_deg = 135.0;
  std::optional<double> azimuth_deg;  ///< fixed initial azimuth
  std::optional<double> polar_deg;    ///< fixed initial polar
  double event_probability = 0.025;
  double speed_min_deg_s = 30.0;  ///< pi/6 rad/s
  double speed_max_deg_s = 90.0;  ///< pi/2 rad/s
  double hold_min_s = 0.1;
  double hold_max_s = 1.0;
  double enrollment_error_deg = kMaxEnrollmentErrorDeg;

  /// Throws ConfigError on inverted ranges or an enrollment error above 18 deg.
  void validate() const;
};

/// static: one direction for the whole clip. moving: per-step motion events
/// with velocities of random sign held for a random duration. enrollment:
/// every step independently uniform within +/- error of 90 deg on both axes.
Trajectory sample_trajectory(Rng& rng, double duration_s, MotionMode mode,
                             const TrajectoryOptions& opts = {});

}  // namespace tsh::scene
