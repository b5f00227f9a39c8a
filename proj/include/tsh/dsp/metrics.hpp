#pragma once

#include <limits>
#include <span>
#include <vector>

namespace tsh::dsp {

/// Reports never contain +inf: perfect reconstructions saturate here.
inline constexpr double kSnrCapDb = 60.0;
/// Returned for an all-zero estimate.
inline constexpr double kSnrFloorDb = -std::numeric_limits<double>::infinity();

struct SiSnrOptions {
  bool zero_mean = true;
  double cap_db = kSnrCapDb;
};

/// Scale-invariant SNR in dB. Throws DomainError for a zero reference and
/// SizeMismatch for unequal or empty inputs.
double si_snr(std::span<const float> estimate, std::span<const float> reference,
              const SiSnrOptions& opts = {});

/// Plain SNR 10*log10(|ref|^2 / |ref - est|^2), same cap and errors.
double snr(std::span<const float> estimate, std::span<const float> reference,
           double cap_db = kSnrCapDb);

double si_snr_improvement(std::span<const float> estimate, std::span<const float> mixture,
                          std::span<const float> reference, const SiSnrOptions& opts = {});

/// Cosine of the angle between a and b, clamped to [-1, 1]. Zero vectors give 0.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace tsh::dsp
