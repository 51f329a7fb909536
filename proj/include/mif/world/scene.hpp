#pragma once

#include "mif/world/layout.hpp"
#include "mif/world/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mif::world {

using EntityId = int;

struct Receptacle {
  EntityId id = 0;
  ReceptacleClass cls = ReceptacleClass::Table;
  Cell cell;
  bool toggled_on = false;
  friend bool operator==(const Receptacle&, const Receptacle&) = default;
};

enum class LocationKind : std::uint8_t { Floor, Receptacle, Container, Held };

struct Location {
  LocationKind kind = LocationKind::Floor;
  // Receptacle id or container object id; unused for Floor and Held.
  EntityId holder = -1;
  // Only meaningful for Floor.
  Cell cell;

  static Location floor(Cell c) { return {LocationKind::Floor, -1, c}; }
  static Location in_receptacle(EntityId r) { return {LocationKind::Receptacle, r, {}}; }
  static Location in_container(EntityId o) { return {LocationKind::Container, o, {}}; }
  static Location held() { return {LocationKind::Held, -1, {}}; }
  friend bool operator==(const Location&, const Location&) = default;
};

struct ObjectState {
  EntityId id = 0;
  ObjectClass cls = ObjectClass::Apple;
  Location location;
  bool clean = false;
  bool hot = false;
  bool cold = false;
  bool sliced = false;
  bool toggled_on = false;
  // Set when a lamp is switched on while this object is held.
  bool examined = false;
  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

inline constexpr int kReceptacleCapacity = 5;

struct Scene {
  std::string layout_id;
  Pool pool = Pool::Seen;
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  std::vector<Receptacle> receptacles;
  std::vector<ObjectState> objects;
  Cell agent;
  Facing facing = Facing::North;
  EntityId next_id = 0;

  friend bool operator==(const Scene&, const Scene&) = default;

  bool in_bounds(Cell c) const;
  bool is_wall(Cell c) const;  // out of bounds counts as wall
  const Receptacle* receptacle_at(Cell c) const;
  // In bounds, not a wall, no receptacle.
  bool is_free(Cell c) const;

  bool is_receptacle(EntityId id) const;
  const Receptacle& receptacle(EntityId id) const;
  Receptacle& receptacle(EntityId id);
  const Receptacle* find_receptacle(ReceptacleClass cls) const;
  const ObjectState* find_object(EntityId id) const;
  ObjectState* find_object(EntityId id);

  const ObjectState* held_object() const;
  // The receptacle an object ultimately rests in, following containers.
  std::optional<EntityId> resting_receptacle(const ObjectState& obj) const;
  // Objects directly inside a receptacle or container.
  int occupancy(LocationKind kind, EntityId holder) const;

  Cell front() const { return step_towards(agent, facing); }
};

// Throws ContractError describing the first broken invariant.
void validate(const Scene& scene);

Scene generate_scene(std::uint64_t seed, Pool pool, const LayoutPools& layouts = builtin_layouts());

std::string describe(const Scene& scene);

}  // namespace mif::world
