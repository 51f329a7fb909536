#include "mif/world/simulator.hpp"

#include <algorithm>
#include <array>

namespace mif::world {
namespace {

constexpr std::array<std::string_view, kNumActionTypes> kActionNames = {
    "MoveAhead", "RotateLeft", "RotateRight", "Pickup", "Put", "ToggleOn", "ToggleOff", "Slice", "Stop"};

struct Target {
  VisibleEntity entity;
  FailureReason error = FailureReason::None;
};

Target resolve(const Scene& s, int slot) {
  const auto visible = visible_entities(s);
  const int shown = std::min<int>(kSlots, int(visible.size()));
  if (slot < 0 || slot >= shown) return {{}, FailureReason::InvalidTarget};
  const VisibleEntity& v = visible[std::size_t(slot)];
  if (v.distance != 0) return {v, FailureReason::OutOfReach};
  return {v, FailureReason::None};
}

template <class F>
void for_each_resting_in(Scene& s, EntityId receptacle, F&& f) {
  for (auto& o : s.objects) {
    if (s.resting_receptacle(o) == receptacle) f(o);
  }
}

StepResult pickup(Scene& s, const VisibleEntity& v) {
  if (v.is_receptacle) return StepResult::failed(FailureReason::NotPickupable);
  if (s.held_object()) return StepResult::failed(FailureReason::HandsFull);
  ObjectState& o = *s.find_object(v.id);
  const auto from = s.resting_receptacle(o);
  const bool from_fridge = from && s.receptacle(*from).cls == ReceptacleClass::Fridge;
  o.location = Location::held();
  if (from_fridge) {
    for (auto& other : s.objects) {
      if (other.id == o.id || (other.location.kind == LocationKind::Container && other.location.holder == o.id)) {
        other.cold = true;
        other.hot = false;
      }
    }
  }
  return StepResult::success();
}

StepResult put(Scene& s, const VisibleEntity& v) {
  const ObjectState* held = s.held_object();
  if (!held) return StepResult::failed(FailureReason::HandsEmpty);
  Location dest;
  if (v.is_receptacle) {
    const Receptacle& r = s.receptacle(v.id);
    if (!accepts_objects(r.cls)) return StepResult::failed(FailureReason::NotReceptacle);
    if (s.occupancy(LocationKind::Receptacle, r.id) >= kReceptacleCapacity) {
      return StepResult::failed(FailureReason::ReceptacleFull);
    }
    dest = Location::in_receptacle(r.id);
  } else {
    const ObjectState& c = *s.find_object(v.id);
    if (!is_container(c.cls) || is_container(held->cls)) return StepResult::failed(FailureReason::NotReceptacle);
    if (s.occupancy(LocationKind::Container, c.id) > 0) return StepResult::failed(FailureReason::ReceptacleFull);
    dest = Location::in_container(c.id);
  }
  s.find_object(held->id)->location = dest;
  return StepResult::success();
}

StepResult toggle(Scene& s, const VisibleEntity& v, bool on) {
  if (!v.is_receptacle || !is_toggleable(s.receptacle(v.id).cls)) {
    return StepResult::failed(FailureReason::NotToggleable);
  }
  Receptacle& r = s.receptacle(v.id);
  if (r.toggled_on == on) return StepResult::failed(FailureReason::AlreadyInState);
  r.toggled_on = on;
  if (!on) return StepResult::success();
  switch (r.cls) {
    case ReceptacleClass::Sink:
      for_each_resting_in(s, r.id, [](ObjectState& o) { o.clean = true; });
      break;
    case ReceptacleClass::Microwave:
      for_each_resting_in(s, r.id, [](ObjectState& o) {
        o.hot = true;
        o.cold = false;
      });
      break;
    case ReceptacleClass::Lamp:
      for (auto& o : s.objects)
        if (o.location.kind == LocationKind::Held) o.examined = true;
      break;
    default: break;
  }
  return StepResult::success();
}

StepResult slice(Scene& s, const VisibleEntity& v) {
  const ObjectState* held = s.held_object();
  if (!held || held->cls != ObjectClass::Knife) return StepResult::failed(FailureReason::NoKnife);
  if (v.is_receptacle) return StepResult::failed(FailureReason::NotSliceable);
  const ObjectState target = *s.find_object(v.id);
  if (!is_sliceable(target.cls) || target.sliced) return StepResult::failed(FailureReason::NotSliceable);
  if (target.location.kind == LocationKind::Container) return StepResult::failed(FailureReason::ReceptacleFull);
  if (target.location.kind == LocationKind::Receptacle &&
      s.occupancy(LocationKind::Receptacle, target.location.holder) + kSlicePieces - 1 > kReceptacleCapacity) {
    return StepResult::failed(FailureReason::ReceptacleFull);
  }
  std::erase_if(s.objects, [&](const ObjectState& o) { return o.id == target.id; });
  for (int i = 0; i < kSlicePieces; ++i) {
    ObjectState piece = target;
    piece.id = s.next_id++;
    piece.sliced = true;
    s.objects.push_back(piece);
  }
  return StepResult::success();
}

}  // namespace

bool needs_target(ActionType t) {
  switch (t) {
    case ActionType::Pickup:
    case ActionType::Put:
    case ActionType::ToggleOn:
    case ActionType::ToggleOff:
    case ActionType::Slice: return true;
    default: return false;
  }
}

std::string_view name(ActionType t) { return kActionNames[std::size_t(t)]; }

std::optional<ActionType> parse_action_type(std::string_view s) {
  for (std::size_t i = 0; i < kActionNames.size(); ++i)
    if (kActionNames[i] == s) return ActionType(i);
  return std::nullopt;
}

std::string_view name(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "none";
    case FailureReason::Blocked: return "blocked";
    case FailureReason::InvalidTarget: return "invalid_target";
    case FailureReason::OutOfReach: return "out_of_reach";
    case FailureReason::HandsFull: return "hands_full";
    case FailureReason::HandsEmpty: return "hands_empty";
    case FailureReason::NotPickupable: return "not_pickupable";
    case FailureReason::NotReceptacle: return "not_receptacle";
    case FailureReason::ReceptacleFull: return "receptacle_full";
    case FailureReason::NotToggleable: return "not_toggleable";
    case FailureReason::AlreadyInState: return "already_in_state";
    case FailureReason::NoKnife: return "no_knife";
    case FailureReason::NotSliceable: return "not_sliceable";
  }
  return "unknown";
}

StepResult step(Scene& s, const Action& action) {
  if (int(action.type) >= kNumActionTypes) return StepResult::failed(FailureReason::InvalidTarget);
  if (!needs_target(action.type) && action.target_slot != -1) {
    return StepResult::failed(FailureReason::InvalidTarget);
  }
  switch (action.type) {
    case ActionType::MoveAhead: {
      const Cell next = s.front();
      if (!s.is_free(next)) return StepResult::failed(FailureReason::Blocked);
      s.agent = next;
      return StepResult::success();
    }
    case ActionType::RotateLeft: s.facing = rotate_left(s.facing); return StepResult::success();
    case ActionType::RotateRight: s.facing = rotate_right(s.facing); return StepResult::success();
    case ActionType::Stop: return StepResult::success();
    default: break;
  }
  const Target target = resolve(s, action.target_slot);
  if (target.error != FailureReason::None) return StepResult::failed(target.error);
  switch (action.type) {
    case ActionType::Pickup: return pickup(s, target.entity);
    case ActionType::Put: return put(s, target.entity);
    case ActionType::ToggleOn: return toggle(s, target.entity, true);
    case ActionType::ToggleOff: return toggle(s, target.entity, false);
    case ActionType::Slice: return slice(s, target.entity);
    default: return StepResult::failed(FailureReason::InvalidTarget);
  }
}

std::pair<Scene, StepResult> transition(const Scene& scene, const Action& action) {
  Scene next = scene;
  const StepResult r = step(next, action);
  return {std::move(next), r};
}

}  // namespace mif::world
