#include "tsh/dsp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tsh/common.hpp"

namespace tsh::dsp {

namespace {

void check_pair(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw SizeMismatch("metric inputs differ in length: " + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()));
  }
  if (a.empty()) throw SizeMismatch("metric inputs are empty");
}

double mean(std::span<const float> x) {
  double s = 0.0;
  for (float v : x) s += v;
  return s / static_cast<double>(x.size());
}

double ratio_db(double num, double den, double cap) {
  if (num <= 0.0) return kSnrFloorDb;
  if (den <= 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(num / den));
}

}  // namespace

double si_snr(std::span<const float> estimate, std::span<const float> reference,
              const SiSnrOptions& opts) {
  check_pair(estimate, reference);
  const double me = opts.zero_mean ? mean(estimate) : 0.0;
  const double mr = opts.zero_mean ? mean(reference) : 0.0;

  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference[i] - mr;
    dot += (estimate[i] - me) * r;
    ref_energy += r * r;
  }
  if (ref_energy <= 0.0) throw DomainError("si_snr: reference is identically zero");

  const double alpha = dot / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * (reference[i] - mr);
    const double e = (estimate[i] - me) - t;
    target += t * t;
    noise += e * e;
  }
  return ratio_db(target, noise, opts.cap_db);
}

double snr(std::span<const float> estimate, std::span<const float> reference, double cap_db) {
  check_pair(estimate, reference);
  double ref_energy = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference[i];
    const double d = r - estimate[i];
    ref_energy += r * r;
    err += d * d;
  }
  if (ref_energy <= 0.0) throw DomainError("snr: reference is identically zero");
  return ratio_db(ref_energy, err, cap_db);
}

double si_snr_improvement(std::span<const float> estimate, std::span<const float> mixture,
                          std::span<const float> reference, const SiSnrOptions& opts) {
  return si_snr(estimate, reference, opts) - si_snr(mixture, reference, opts);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw SizeMismatch("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace tsh::dsp
