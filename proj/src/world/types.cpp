#include "mif/world/types.hpp"

namespace mif::world {
namespace {

constexpr std::array<std::string_view, kNumReceptacleClasses> kReceptacleNames = {
    "table", "counter", "cabinet", "shelf", "sink", "microwave", "fridge", "lamp"};
constexpr std::array<char, kNumReceptacleClasses> kReceptacleSymbols = {'T', 'C', 'K', 'H',
                                                                        'S', 'M', 'F', 'L'};
constexpr std::array<std::string_view, kNumObjectClasses> kObjectNames = {
    "apple", "potato", "tomato", "lettuce", "bread", "mug",  "vase",
    "cd",    "book",   "remote", "knife",   "pan",   "bowl"};
constexpr std::array<std::string_view, 4> kFacingNames = {"N", "E", "S", "W"};

}  // namespace

Cell step_towards(Cell c, Facing f, int distance) {
  switch (f) {
    case Facing::North: return {c.row - distance, c.col};
    case Facing::East: return {c.row, c.col + distance};
    case Facing::South: return {c.row + distance, c.col};
    case Facing::West: return {c.row, c.col - distance};
  }
  return c;
}

Facing rotate_left(Facing f) { return Facing((int(f) + 3) % 4); }
Facing rotate_right(Facing f) { return Facing((int(f) + 1) % 4); }

std::string_view name(ReceptacleClass c) { return kReceptacleNames[std::size_t(c)]; }
std::string_view name(ObjectClass c) { return kObjectNames[std::size_t(c)]; }
std::string_view name(Facing f) { return kFacingNames[std::size_t(f)]; }

std::optional<ReceptacleClass> parse_receptacle_class(std::string_view s) {
  for (std::size_t i = 0; i < kReceptacleNames.size(); ++i)
    if (kReceptacleNames[i] == s) return ReceptacleClass(i);
  return std::nullopt;
}

std::optional<ObjectClass> parse_object_class(std::string_view s) {
  for (std::size_t i = 0; i < kObjectNames.size(); ++i)
    if (kObjectNames[i] == s) return ObjectClass(i);
  return std::nullopt;
}

std::optional<Facing> parse_facing(std::string_view s) {
  for (std::size_t i = 0; i < kFacingNames.size(); ++i)
    if (kFacingNames[i] == s) return Facing(i);
  return std::nullopt;
}

std::optional<ReceptacleClass> receptacle_from_symbol(char symbol) {
  for (std::size_t i = 0; i < kReceptacleSymbols.size(); ++i)
    if (kReceptacleSymbols[i] == symbol) return ReceptacleClass(i);
  return std::nullopt;
}

char symbol(ReceptacleClass c) { return kReceptacleSymbols[std::size_t(c)]; }

bool is_sliceable(ObjectClass c) {
  switch (c) {
    case ObjectClass::Apple:
    case ObjectClass::Potato:
    case ObjectClass::Tomato:
    case ObjectClass::Lettuce:
    case ObjectClass::Bread: return true;
    default: return false;
  }
}

bool is_container(ObjectClass c) { return c == ObjectClass::Pan || c == ObjectClass::Bowl; }

bool is_toggleable(ReceptacleClass c) {
  return c == ReceptacleClass::Sink || c == ReceptacleClass::Microwave || c == ReceptacleClass::Lamp;
}

bool accepts_objects(ReceptacleClass c) { return c != ReceptacleClass::Lamp; }

bool is_surface(ReceptacleClass c) {
  return c == ReceptacleClass::Table || c == ReceptacleClass::Counter ||
         c == ReceptacleClass::Cabinet || c == ReceptacleClass::Shelf;
}

}  // namespace mif::world
