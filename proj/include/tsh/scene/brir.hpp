#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tsh/common.hpp"

namespace tsh::scene {

/// One measured (or generated) binaural impulse response.
///
/// Angle convention: azimuth in the horizontal plane measured from the
/// listener's right-ear axis, 90 deg straight ahead, 180 deg left. Polar is
/// measured from the vertical, 90 deg on the horizontal plane.
struct BrirEntry {
  std::string room_id;
  double azimuth_deg = 0.0;
  double polar_deg = 90.0;
  BinauralBuffer impulse;
};

/// Unit direction (x right, y front, z up).
std::array<double, 3> direction(double azimuth_deg, double polar_deg);
/// Great-circle angle in degrees between two directions.
double angular_distance_deg(double az1, double polar1, double az2, double polar2);

/// Immutable set of BRIRs sharing one room/subject configuration.
class BrirSet {
 public:
  /// Validates: nonempty, one room id, no duplicate (azimuth, polar), finite
  /// taps with equal channel lengths.
  explicit BrirSet(std::vector<BrirEntry> entries);

  const std::string& room_id() const { return room_id_; }
  std::size_t size() const { return entries_.size(); }
  const BrirEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<BrirEntry>& entries() const { return entries_; }

  /// Index of the entry with the smallest great-circle distance to the query;
  /// ties resolve to the lowest index.
  std::size_t nearest_index(double azimuth_deg, double polar_deg) const;
  const BrirEntry& nearest(double azimuth_deg, double polar_deg) const {
    return entries_[nearest_index(azimuth_deg, polar_deg)];
  }

 private:
  std::string room_id_;
  std::vector<BrirEntry> entries_;
  std::vector<std::array<double, 3>> dirs_;
};

/// Room id -> set. Sets are shared read-only.
class BrirLibrary {
 public:
  void add(std::shared_ptr<const BrirSet> set);
  const BrirSet& at(const std::string& room_id) const;
  bool contains(const std::string& room_id) const { return sets_.count(room_id) != 0; }
  /// Sorted room ids.
  std::vector<std::string> room_ids() const;
  std::size_t size() const { return sets_.size(); }
  bool empty() const { return sets_.empty(); }

 private:
  std::map<std::string, std::shared_ptr<const BrirSet>> sets_;
};

/// Parameters of a generated room: spherical-head direct path plus an
/// optional exponentially decaying diffuse tail.
struct SyntheticRoom {
  std::string id;
  bool level_difference = true;  ///< head-shadow ILD on the direct path
  double decay_ms = 0.0;         ///< 0 = anechoic
  double tail_level = 0.0;
  int taps = 64;
};

std::vector<SyntheticRoom> default_synthetic_rooms();

/// Generates a set on a sphere grid with `grid_deg` spacing (poles kept once).
/// Left-ear kernels are mirror images of right-ear kernels, so a source at
/// 90 deg azimuth produces identical channels.
BrirSet make_synthetic_brir_set(const SyntheticRoom& room, double grid_deg = 10.0);
BrirLibrary make_synthetic_library(double grid_deg = 10.0);
/// Library holding a single synthetic room by preset id.
BrirLibrary make_synthetic_library(const std::string& room_id, double grid_deg);

/// Direct-path delay (samples, integer) of the synthetic head model for one
/// ear; exposed for tests.
int synthetic_ear_delay(double azimuth_deg, double polar_deg, bool left_ear);

}  // namespace tsh::scene
