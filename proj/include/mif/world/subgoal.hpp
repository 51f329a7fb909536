#pragma once

#include "mif/world/scene.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace mif::world {

enum class SubgoalType : std::uint8_t { GoTo, PickUp, Put, Clean, Heat, Cool, Slice, Toggle };
inline constexpr int kNumSubgoalTypes = 8;

std::string_view name(SubgoalType t);
std::optional<SubgoalType> parse_subgoal_type(std::string_view s);

struct SubgoalSpec {
  SubgoalType type = SubgoalType::GoTo;
  // PickUp, Put, Clean, Heat, Cool, Slice: the object class acted on.
  std::optional<ObjectClass> object;
  // Whether the object argument is a slice.
  bool sliced = false;
  // GoTo destination, Put destination or Toggle device.
  EntityId receptacle = -1;
  // Put into a portable container of this class instead of a receptacle.
  std::optional<ObjectClass> container;
  // Toggle target state.
  bool toggle_on = true;

  friend bool operator==(const SubgoalSpec&, const SubgoalSpec&) = default;
};

// Transition predicate; throws ContractError for malformed specs.
bool subgoal_satisfied(const Scene& before, const Scene& after, const SubgoalSpec& spec);

// Agent faces the receptacle from the adjacent cell.
bool at_destination(const Scene& scene, EntityId receptacle);

std::string describe(const SubgoalSpec& spec, const Scene& scene);

}  // namespace mif::world
