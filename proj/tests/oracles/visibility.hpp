#pragma once

// Independent visibility computation: transforms every entity into the
// agent frame and keeps those inside the forward cone rectangle.

#include "mif/world/scene.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>
#include <vector>

namespace mif::oracle {

struct Seen {
  int id;
  int distance;
};

inline std::vector<int> brute_force_visible(const world::Scene& s, int depth = 3, int half_width = 1) {
  // Unit vectors for N, E, S, W in (row, col).
  const int fr[] = {-1, 0, 1, 0};
  const int fc[] = {0, 1, 0, -1};
  const int f = int(s.facing);
  const int rr = fr[(f + 1) % 4], rc = fc[(f + 1) % 4];

  auto frame = [&](world::Cell c, int& forward, int& lateral) {
    const int dr = c.row - s.agent.row, dc = c.col - s.agent.col;
    forward = dr * fr[f] + dc * fc[f];
    lateral = dr * rr + dc * rc;
  };
  auto visible_at = [&](world::Cell c, int& distance) {
    int fwd, lat;
    frame(c, fwd, lat);
    if (fwd < 1 || fwd > depth || std::abs(lat) > half_width) return false;
    distance = fwd - 1 + std::abs(lat);
    return true;
  };

  std::vector<Seen> seen;
  for (const auto& r : s.receptacles) {
    int d;
    if (visible_at(r.cell, d)) seen.push_back({r.id, d});
  }
  for (const auto& o : s.objects) {
    // Walk up the containment chain to a cell.
    const world::ObjectState* cur = &o;
    bool lost = false;
    while (cur->location.kind == world::LocationKind::Container) {
      cur = s.find_object(cur->location.holder);
      if (!cur) {
        lost = true;
        break;
      }
    }
    if (lost || cur->location.kind == world::LocationKind::Held) continue;
    const world::Cell c = cur->location.kind == world::LocationKind::Floor
                              ? cur->location.cell
                              : s.receptacles[std::size_t(cur->location.holder)].cell;
    int d;
    if (visible_at(c, d)) seen.push_back({o.id, d});
  }
  std::sort(seen.begin(), seen.end(), [](const Seen& a, const Seen& b) {
    return std::tie(a.distance, a.id) < std::tie(b.distance, b.id);
  });
  std::vector<int> ids;
  for (const auto& v : seen) ids.push_back(v.id);
  return ids;
}

}  // namespace mif::oracle
