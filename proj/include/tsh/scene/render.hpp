#pragma once

#include <span>

#include "tsh/common.hpp"
#include "tsh/scene/brir.hpp"
#include "tsh/scene/trajectory.hpp"

namespace tsh::scene {

/// Full linear convolution (length x + h - 1) via FFT in double precision.
std::vector<double> fft_convolve(std::span<const float> x, std::span<const float> h);

struct RenderOptions {
  double crossfade_ms = 5.0;
};

/// Spatialise a mono source along a trajectory: each 25 ms step uses the
/// nearest BRIR, consecutive kernels' outputs are linearly crossfaded over
/// `crossfade_ms` centred on the step boundary. Output has the input length.
/// Throws SizeMismatch unless traj.size() == ceil(len / 400).
BinauralBuffer render_moving_source(std::span<const float> mono, const Trajectory& traj,
                                    const BrirSet& set, const RenderOptions& opts = {});

}  // namespace tsh::scene
