#pragma once

#include "mif/world/scene.hpp"

#include <vector>

namespace mif::world {

inline constexpr int kFovDepth = 3;
inline constexpr int kFovWidth = 3;
inline constexpr int kSlots = 8;
inline constexpr int kDistanceBuckets = 4;

inline constexpr int kSlotFlags = 5;  // clean, hot, cold, sliced, toggled_on
inline constexpr int kSlotFeatures = int(kNumEntityClasses) + kSlotFlags + kDistanceBuckets + 1;
inline constexpr int kFovFeatures = 2 * kFovDepth * kFovWidth;  // wall and receptacle channels
// Class one-hot, clean/hot/cold/sliced, carrying-something, carried-container-full.
inline constexpr int kHeldFeatures = int(kNumObjectClasses) + 4 + 2;
inline constexpr int kObservationDim = kFovFeatures + kSlots * kSlotFeatures + kHeldFeatures;

struct VisibleEntity {
  EntityId id = 0;
  bool is_receptacle = false;
  int distance = 0;
  friend bool operator==(const VisibleEntity&, const VisibleEntity&) = default;
};

struct Observation {
  std::vector<double> features;
  std::vector<EntityId> visible;  // ids backing slots 0..visible.size()-1
  friend bool operator==(const Observation&, const Observation&) = default;
};

// Cells of the field of view, rows nearest-first, columns left to right.
std::vector<Cell> fov_cells(const Scene& scene);

// Every entity in view, sorted by (distance, id). Held objects are excluded.
std::vector<VisibleEntity> visible_entities(const Scene& scene);

Observation observe(const Scene& scene);

// Offset of slot i's block inside the feature vector.
inline constexpr int slot_offset(int slot) { return kFovFeatures + slot * kSlotFeatures; }
inline constexpr int held_offset() { return kFovFeatures + kSlots * kSlotFeatures; }

}  // namespace mif::world
