#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tsh/common.hpp"

namespace tsh::dsp {

enum class NoiseColor { White, Pink, Brown };

/// Spectral exponent beta: PSD ~ 1/f^beta.
double noise_exponent(NoiseColor c);
NoiseColor parse_noise_color(std::string_view name);
std::string to_string(NoiseColor c);

/// Gaussian noise with PSD ~ 1/f^beta, unit standard deviation in
/// expectation. White is i.i.d.; pink and brown are shaped in the frequency
/// domain. Same (kind, len, seed) always gives the same samples.
Mono colored_noise(NoiseColor kind, std::size_t len, std::uint64_t seed);

}  // namespace tsh::dsp
