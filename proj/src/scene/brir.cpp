#include "tsh/scene/brir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace tsh::scene {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kHeadRadius = 0.0875;  // m
constexpr double kSpeedOfSound = 343.0;
constexpr int kBaseDelay = 32;

double wrap360(double a) {
  double r = std::fmod(a, 360.0);
  if (r < 0) r += 360.0;
  return r;
}

}  // namespace

std::array<double, 3> direction(double azimuth_deg, double polar_deg) {
  const double az = azimuth_deg * kDeg;
  const double po = polar_deg * kDeg;
  return {std::sin(po) * std::cos(az), std::sin(po) * std::sin(az), std::cos(po)};
}

double angular_distance_deg(double az1, double polar1, double az2, double polar2) {
  const auto a = direction(az1, polar1);
  const auto b = direction(az2, polar2);
  const double d = std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
  return std::acos(d) / kDeg;
}

BrirSet::BrirSet(std::vector<BrirEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw DataError("BRIR set is empty");
  room_id_ = entries_.front().room_id;
  std::set<std::pair<long long, long long>> seen;
  dirs_.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.room_id != room_id_) {
      throw DataError("BRIR set mixes room ids '" + room_id_ + "' and '" + e.room_id + "'");
    }
    if (e.impulse.left.size() != e.impulse.right.size() || e.impulse.empty()) {
      throw DataError("BRIR channels must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < e.impulse.size(); ++i) {
      if (!std::isfinite(e.impulse.left[i]) || !std::isfinite(e.impulse.right[i])) {
        throw DataError("BRIR has non-finite taps");
      }
    }
    const auto key = std::make_pair(std::llround(wrap360(e.azimuth_deg) * 1e6),
                                    std::llround(e.polar_deg * 1e6));
    if (!seen.insert(key).second) {
      throw DataError("duplicate BRIR angle (" + std::to_string(e.azimuth_deg) + ", " +
                      std::to_string(e.polar_deg) + ") in room '" + room_id_ + "'");
    }
    dirs_.push_back(direction(e.azimuth_deg, e.polar_deg));
  }
}

std::size_t BrirSet::nearest_index(double azimuth_deg, double polar_deg) const {
  const auto q = direction(azimuth_deg, polar_deg);
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t i = 0; i < dirs_.size(); ++i) {
    const auto& d = dirs_[i];
    const double dot = d[0] * q[0] + d[1] * q[1] + d[2] * q[2];
    if (dot > best_dot) {
      best_dot = dot;
      best = i;
    }
  }
  return best;
}

void BrirLibrary::add(std::shared_ptr<const BrirSet> set) {
  const auto id = set->room_id();
  if (!sets_.emplace(id, std::move(set)).second) {
    throw DataError("BRIR library already has room '" + id + "'");
  }
}

const BrirSet& BrirLibrary::at(const std::string& room_id) const {
  auto it = sets_.find(room_id);
  if (it == sets_.end()) throw DataError("no BRIR set for room '" + room_id + "'");
  return *it->second;
}

std::vector<std::string> BrirLibrary::room_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : sets_) ids.push_back(id);
  return ids;
}

// ---------------------------------------------------------------------------
// Synthetic pack

std::vector<SyntheticRoom> default_synthetic_rooms() {
  return {
      {"synthetic-anechoic", true, 0.0, 0.0, 64},
      {"synthetic-pure-delay", false, 0.0, 0.0, 64},
      {"synthetic-room-small", true, 40.0, 0.25, 1024},
      {"synthetic-room-large", true, 90.0, 0.35, 2048},
  };
}

namespace {

// Right-ear kernel for a source in direction d; the left ear uses the
// mirrored direction (x -> -x).
Mono ear_kernel(const SyntheticRoom& room, const std::array<double, 3>& d) {
  Mono h(room.taps, 0.0f);
  const double cos_a = std::clamp(d[0], -1.0, 1.0);
  const double alpha = std::acos(cos_a);
  const double tau = alpha <= std::numbers::pi / 2
                         ? -kHeadRadius / kSpeedOfSound * cos_a
                         : kHeadRadius / kSpeedOfSound * (alpha - std::numbers::pi / 2);
  const int delay = kBaseDelay + static_cast<int>(std::lround(tau * kSampleRate));
  const double gain = room.level_difference ? 0.5 + 0.25 * (1.0 + cos_a) : 1.0;
  if (delay < room.taps) h[delay] = static_cast<float>(gain);

  if (room.decay_ms > 0.0 && room.tail_level > 0.0) {
    // Tail seed depends only on the (ear-relative) direction and the room so
    // mirrored directions share a tail.
    const long long qx = std::llround(d[0] * 1e4);
    const long long qy = std::llround(d[1] * 1e4);
    const long long qz = std::llround(d[2] * 1e4);
    std::uint64_t seed = fnv1a64(room.id);
    seed = fnv1a64(&qx, sizeof qx, seed);
    seed = fnv1a64(&qy, sizeof qy, seed);
    seed = fnv1a64(&qz, sizeof qz, seed);
    Rng rng(seed);
    const int start = delay + 24;
    const double tc = room.decay_ms * 1e-3 * kSampleRate;
    for (int n = start; n < room.taps; ++n) {
      const double env = room.tail_level * std::exp(-(n - start) / tc);
      h[n] += static_cast<float>(env * rng.normal());
    }
  }
  return h;
}

}  // namespace

int synthetic_ear_delay(double azimuth_deg, double polar_deg, bool left_ear) {
  auto d = direction(azimuth_deg, polar_deg);
  if (left_ear) d[0] = -d[0];
  const double cos_a = std::clamp(d[0], -1.0, 1.0);
  const double alpha = std::acos(cos_a);
  const double tau = alpha <= std::numbers::pi / 2
                         ? -kHeadRadius / kSpeedOfSound * cos_a
                         : kHeadRadius / kSpeedOfSound * (alpha - std::numbers::pi / 2);
  return kBaseDelay + static_cast<int>(std::lround(tau * kSampleRate));
}

BrirSet make_synthetic_brir_set(const SyntheticRoom& room, double grid_deg) {
  if (!(grid_deg > 0.0) || grid_deg > 90.0) throw ConfigError("grid spacing must be in (0, 90]");
  std::vector<BrirEntry> entries;
  const int n_polar = static_cast<int>(std::lround(180.0 / grid_deg));
  const int n_az = static_cast<int>(std::lround(360.0 / grid_deg));
  for (int ip = 0; ip <= n_polar; ++ip) {
    const double polar = 180.0 * ip / n_polar;
    const bool pole = ip == 0 || ip == n_polar;
    for (int ia = 0; ia < (pole ? 1 : n_az); ++ia) {
      const double az = 360.0 * ia / n_az;
      auto d = direction(az, polar);
      BrirEntry e;
      e.room_id = room.id;
      e.azimuth_deg = az;
      e.polar_deg = polar;
      Mono right = ear_kernel(room, d);
      d[0] = -d[0];
      Mono left = ear_kernel(room, d);
      e.impulse = BinauralBuffer(std::move(left), std::move(right));
      entries.push_back(std::move(e));
    }
  }
  return BrirSet(std::move(entries));
}

BrirLibrary make_synthetic_library(double grid_deg) {
  BrirLibrary lib;
  for (const auto& room : default_synthetic_rooms()) {
    lib.add(std::make_shared<const BrirSet>(make_synthetic_brir_set(room, grid_deg)));
  }
  return lib;
}

BrirLibrary make_synthetic_library(const std::string& room_id, double grid_deg) {
  for (const auto& room : default_synthetic_rooms()) {
    if (room.id == room_id) {
      BrirLibrary lib;
      lib.add(std::make_shared<const BrirSet>(make_synthetic_brir_set(room, grid_deg)));
      return lib;
    }
  }
  throw ConfigError("unknown synthetic room '" + room_id + "'");
}

}  // namespace tsh::scene
