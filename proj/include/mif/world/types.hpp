#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mif::world {

enum class Facing : std::uint8_t { North, East, South, West };

struct Cell {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

Cell step_towards(Cell c, Facing f, int distance = 1);
Facing rotate_left(Facing f);
Facing rotate_right(Facing f);

enum class ReceptacleClass : std::uint8_t {
  Table,
  Counter,
  Cabinet,
  Shelf,
  Sink,
  Microwave,
  Fridge,
  Lamp,
};
inline constexpr std::size_t kNumReceptacleClasses = 8;

enum class ObjectClass : std::uint8_t {
  Apple,
  Potato,
  Tomato,
  Lettuce,
  Bread,
  Mug,
  Vase,
  Cd,
  Book,
  Remote,
  Knife,
  Pan,
  Bowl,
};
inline constexpr std::size_t kNumObjectClasses = 13;

// Receptacle and object classes share one index space in observations:
// receptacles first, then objects.
inline constexpr std::size_t kNumEntityClasses = kNumReceptacleClasses + kNumObjectClasses;

inline constexpr std::size_t class_index(ReceptacleClass c) { return std::size_t(c); }
inline constexpr std::size_t class_index(ObjectClass c) {
  return kNumReceptacleClasses + std::size_t(c);
}

std::string_view name(ReceptacleClass c);
std::string_view name(ObjectClass c);
std::string_view name(Facing f);
std::optional<ReceptacleClass> parse_receptacle_class(std::string_view s);
std::optional<ObjectClass> parse_object_class(std::string_view s);
std::optional<Facing> parse_facing(std::string_view s);
std::optional<ReceptacleClass> receptacle_from_symbol(char symbol);
char symbol(ReceptacleClass c);

bool is_sliceable(ObjectClass c);
// Portable receptacles: can hold one object and be carried with it.
bool is_container(ObjectClass c);
// Devices with an on/off switch.
bool is_toggleable(ReceptacleClass c);
// Fixed receptacles that accept objects (the lamp does not).
bool accepts_objects(ReceptacleClass c);
// Receptacles objects rest on when a scene is generated.
bool is_surface(ReceptacleClass c);

}  // namespace mif::world
