#include "mif/world/observation.hpp"

#include <algorithm>
#include <cstdlib>

namespace mif::world {
namespace {

struct FovHit {
  Cell cell;
  int distance;
};

std::vector<FovHit> fov(const Scene& s) {
  std::vector<FovHit> out;
  const Facing right = rotate_right(s.facing);
  for (int d = 1; d <= kFovDepth; ++d) {
    for (int l = -(kFovWidth / 2); l <= kFovWidth / 2; ++l) {
      const Cell c = step_towards(step_towards(s.agent, s.facing, d), right, l);
      out.push_back({c, (d - 1) + std::abs(l)});
    }
  }
  return out;
}

}  // namespace

std::vector<Cell> fov_cells(const Scene& scene) {
  std::vector<Cell> out;
  for (const auto& hit : fov(scene)) out.push_back(hit.cell);
  return out;
}

std::vector<VisibleEntity> visible_entities(const Scene& s) {
  std::vector<VisibleEntity> out;
  const auto hits = fov(s);
  auto distance_of = [&](Cell c) -> int {
    for (const auto& h : hits)
      if (h.cell == c) return h.distance;
    return -1;
  };
  for (const auto& r : s.receptacles) {
    const int d = distance_of(r.cell);
    if (d >= 0) out.push_back({r.id, true, d});
  }
  for (const auto& o : s.objects) {
    int d = -1;
    if (o.location.kind == LocationKind::Floor) {
      d = distance_of(o.location.cell);
    } else if (auto rec = s.resting_receptacle(o)) {
      d = distance_of(s.receptacle(*rec).cell);
    }
    if (d >= 0) out.push_back({o.id, false, d});
  }
  std::sort(out.begin(), out.end(), [](const VisibleEntity& a, const VisibleEntity& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

Observation observe(const Scene& s) {
  Observation obs;
  obs.features.assign(kObservationDim, 0.0);
  auto& f = obs.features;

  const auto cells = fov_cells(s);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    f[2 * i] = s.is_wall(cells[i]) ? 1.0 : 0.0;
    f[2 * i + 1] = s.receptacle_at(cells[i]) ? 1.0 : 0.0;
  }

  const auto visible = visible_entities(s);
  const int shown = std::min<int>(kSlots, int(visible.size()));
  for (int slot = 0; slot < shown; ++slot) {
    const VisibleEntity& v = visible[std::size_t(slot)];
    obs.visible.push_back(v.id);
    double* block = f.data() + slot_offset(slot);
    double* flags = block + kNumEntityClasses;
    if (v.is_receptacle) {
      const Receptacle& r = s.receptacle(v.id);
      block[class_index(r.cls)] = 1.0;
      flags[4] = r.toggled_on ? 1.0 : 0.0;
    } else {
      const ObjectState& o = *s.find_object(v.id);
      block[class_index(o.cls)] = 1.0;
      flags[0] = o.clean;
      flags[1] = o.hot;
      flags[2] = o.cold;
      flags[3] = o.sliced;
      flags[4] = o.toggled_on;
      block[kNumEntityClasses + kSlotFlags + kDistanceBuckets] =
          o.location.kind == LocationKind::Floor ? 0.0 : 1.0;
    }
    block[kNumEntityClasses + kSlotFlags + std::min(v.distance, kDistanceBuckets - 1)] = 1.0;
  }

  if (const ObjectState* held = s.held_object()) {
    double* block = f.data() + held_offset();
    block[std::size_t(held->cls)] = 1.0;
    block[kNumObjectClasses + 0] = held->clean;
    block[kNumObjectClasses + 1] = held->hot;
    block[kNumObjectClasses + 2] = held->cold;
    block[kNumObjectClasses + 3] = held->sliced;
    block[kNumObjectClasses + 4] = 1.0;
    block[kNumObjectClasses + 5] = s.occupancy(LocationKind::Container, held->id) > 0 ? 1.0 : 0.0;
  }
  return obs;
}

}  // namespace mif::world
