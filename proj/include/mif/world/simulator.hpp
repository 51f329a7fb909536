#pragma once

#include "mif/world/observation.hpp"
#include "mif/world/scene.hpp"

#include <optional>
#include <string_view>

namespace mif::world {

enum class ActionType : std::uint8_t {
  MoveAhead,
  RotateLeft,
  RotateRight,
  Pickup,
  Put,
  ToggleOn,
  ToggleOff,
  Slice,
  Stop,
};
inline constexpr int kNumActionTypes = 9;

bool needs_target(ActionType t);
std::string_view name(ActionType t);
std::optional<ActionType> parse_action_type(std::string_view s);

struct Action {
  ActionType type = ActionType::Stop;
  int target_slot = -1;  // >= 0 iff needs_target(type)

  static Action move_ahead() { return {ActionType::MoveAhead, -1}; }
  static Action rotate_left() { return {ActionType::RotateLeft, -1}; }
  static Action rotate_right() { return {ActionType::RotateRight, -1}; }
  static Action stop() { return {ActionType::Stop, -1}; }
  static Action interact(ActionType type, int slot) { return {type, slot}; }
  friend bool operator==(const Action&, const Action&) = default;
};

enum class FailureReason : std::uint8_t {
  None,
  Blocked,
  InvalidTarget,
  OutOfReach,
  HandsFull,
  HandsEmpty,
  NotPickupable,
  NotReceptacle,
  ReceptacleFull,
  NotToggleable,
  AlreadyInState,
  NoKnife,
  NotSliceable,
};

std::string_view name(FailureReason r);

struct StepResult {
  bool ok = true;
  FailureReason reason = FailureReason::None;
  static StepResult success() { return {}; }
  static StepResult failed(FailureReason r) { return {false, r}; }
};

inline constexpr int kSlicePieces = 2;

// Applies the action in place. A failed action leaves the scene untouched.
// Stop is accepted and changes nothing.
StepResult step(Scene& scene, const Action& action);

// Value-semantics form.
std::pair<Scene, StepResult> transition(const Scene& scene, const Action& action);

}  // namespace mif::world
