#include "mif/tasks/planner.hpp"

#include "mif/errors.hpp"

#include <algorithm>
#include <array>
#include <queue>

namespace mif::tasks {

using namespace mif::world;

namespace {

int pose_index(const Scene& s, Cell c, Facing f) { return (c.row * s.width + c.col) * 4 + int(f); }

int slot_of(const Scene& s, EntityId id) {
  const auto visible = visible_entities(s);
  for (std::size_t i = 0; i < visible.size() && i < std::size_t(kSlots); ++i)
    if (visible[i].id == id && visible[i].distance == 0) return int(i);
  return -1;
}

[[noreturn]] void planning_failure(const SubgoalSpec& spec, const Scene& s, const std::string& why) {
  throw PlanningError("cannot plan " + describe(spec, s) + " in " + s.layout_id + "/seed " +
                      std::to_string(s.seed) + ": " + why);
}

// Lowest-id object in reach matching the class and slice state.
EntityId reachable_object(const Scene& s, ObjectClass cls, bool sliced, const SubgoalSpec& spec) {
  for (const auto& v : visible_entities(s)) {
    if (v.distance != 0 || v.is_receptacle) continue;
    const ObjectState* o = s.find_object(v.id);
    if (o->cls == cls && o->sliced == sliced && o->location.kind != LocationKind::Held) return o->id;
  }
  planning_failure(spec, s, std::string("no ") + (sliced ? "sliced " : "") + std::string(name(cls)) + " in reach");
}

Action target(const Scene& s, ActionType type, EntityId id, const SubgoalSpec& spec) {
  const int slot = slot_of(s, id);
  if (slot < 0) planning_failure(spec, s, "entity " + std::to_string(id) + " is not in an interaction slot");
  return Action::interact(type, slot);
}

EntityId device(const Scene& s, ReceptacleClass cls) { return s.find_receptacle(cls)->id; }

}  // namespace

std::optional<std::vector<Action>> navigate(const Scene& s, EntityId receptacle) {
  const Cell goal = s.receptacle(receptacle).cell;
  const int n = s.height * s.width * 4;
  std::vector<int> parent(std::size_t(n), -2);
  std::vector<ActionType> via(std::size_t(n), ActionType::Stop);
  std::queue<std::pair<Cell, Facing>> frontier;
  const int start = pose_index(s, s.agent, s.facing);
  parent[std::size_t(start)] = -1;
  frontier.push({s.agent, s.facing});
  int found = -1;
  while (!frontier.empty()) {
    auto [cell, facing] = frontier.front();
    frontier.pop();
    const int here = pose_index(s, cell, facing);
    if (step_towards(cell, facing) == goal) {
      found = here;
      break;
    }
    const std::array<std::pair<ActionType, std::pair<Cell, Facing>>, 3> moves = {{
        {ActionType::MoveAhead, {step_towards(cell, facing), facing}},
        {ActionType::RotateLeft, {cell, rotate_left(facing)}},
        {ActionType::RotateRight, {cell, rotate_right(facing)}},
    }};
    for (const auto& [type, pose] : moves) {
      if (type == ActionType::MoveAhead && !s.is_free(pose.first)) continue;
      const int next = pose_index(s, pose.first, pose.second);
      if (parent[std::size_t(next)] != -2) continue;
      parent[std::size_t(next)] = here;
      via[std::size_t(next)] = type;
      frontier.push(pose);
    }
  }
  if (found < 0) return std::nullopt;
  std::vector<Action> path;
  for (int at = found; parent[std::size_t(at)] != -1; at = parent[std::size_t(at)]) {
    path.push_back({via[std::size_t(at)], -1});
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Action> interaction_script(const Scene& s, const SubgoalSpec& spec) {
  const ObjectState* held = s.held_object();
  auto need_held = [&] {
    if (!held || held->cls != *spec.object || held->sliced != spec.sliced) {
      planning_failure(spec, s, "the object is not in hand");
    }
  };
  auto appliance_cycle = [&](ReceptacleClass cls, bool switch_on) {
    need_held();
    const EntityId d = device(s, cls);
    std::vector<Action> script;
    Scene sim = s;
    auto push = [&](Action a) {
      if (!step(sim, a).ok) planning_failure(spec, s, "scripted " + std::string(name(a.type)) + " failed");
      script.push_back(a);
    };
    push(target(sim, ActionType::Put, d, spec));
    if (switch_on) {
      push(target(sim, ActionType::ToggleOn, d, spec));
      push(target(sim, ActionType::ToggleOff, d, spec));
    }
    push(target(sim, ActionType::Pickup, held->id, spec));
    return script;
  };

  switch (spec.type) {
    case SubgoalType::GoTo: planning_failure(spec, s, "navigation is not an interaction");
    case SubgoalType::PickUp:
      if (!spec.object) planning_failure(spec, s, "missing object argument");
      return {target(s, ActionType::Pickup, reachable_object(s, *spec.object, spec.sliced, spec), spec)};
    case SubgoalType::Put: {
      need_held();
      if (spec.container) {
        for (const auto& v : visible_entities(s)) {
          if (v.distance != 0 || v.is_receptacle) continue;
          if (s.find_object(v.id)->cls == *spec.container) return {target(s, ActionType::Put, v.id, spec)};
        }
        planning_failure(spec, s, "container not in reach");
      }
      return {target(s, ActionType::Put, spec.receptacle, spec)};
    }
    case SubgoalType::Clean: return appliance_cycle(ReceptacleClass::Sink, true);
    case SubgoalType::Heat: return appliance_cycle(ReceptacleClass::Microwave, true);
    case SubgoalType::Cool: return appliance_cycle(ReceptacleClass::Fridge, false);
    case SubgoalType::Slice:
      if (!spec.object) planning_failure(spec, s, "missing object argument");
      return {target(s, ActionType::Slice, reachable_object(s, *spec.object, false, spec), spec)};
    case SubgoalType::Toggle:
      return {target(s, spec.toggle_on ? ActionType::ToggleOn : ActionType::ToggleOff, spec.receptacle, spec)};
  }
  throw ContractError("unknown subgoal type " + std::to_string(int(spec.type)));
}

Demonstration plan_expert(const Scene& initial, const std::vector<SubgoalSpec>& specs) {
  Demonstration demo;
  Scene s = initial;
  demo.boundaries.push_back(0);
  for (const auto& spec : specs) {
    const Scene start = s;
    std::vector<Action> segment;
    if (spec.type == SubgoalType::GoTo) {
      if (!s.is_receptacle(spec.receptacle)) planning_failure(spec, s, "unknown destination");
      auto path = navigate(s, spec.receptacle);
      if (!path) planning_failure(spec, s, "destination unreachable");
      segment = std::move(*path);
    } else {
      segment = interaction_script(s, spec);
    }
    for (const auto& a : segment) {
      const StepResult r = step(s, a);
      if (!r.ok) planning_failure(spec, start, std::string(name(a.type)) + " failed: " + std::string(name(r.reason)));
    }
    if (!subgoal_satisfied(start, s, spec)) planning_failure(spec, start, "segment does not satisfy its subgoal");
    demo.actions.insert(demo.actions.end(), segment.begin(), segment.end());
    demo.boundaries.push_back(int(demo.actions.size()));
  }
  return demo;
}

std::vector<Scene> replay_scenes(const Scene& initial, const std::vector<Action>& actions) {
  std::vector<Scene> out{initial};
  out.reserve(actions.size() + 1);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Scene next = out.back();
    const StepResult r = step(next, actions[i]);
    if (!r.ok) {
      throw DataError("replay failed at action " + std::to_string(i) + " (" + std::string(name(actions[i].type)) +
                      "): " + std::string(name(r.reason)));
    }
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<Observation> replay_observations(const Scene& initial, const std::vector<Action>& actions) {
  std::vector<Observation> out;
  out.reserve(actions.size() + 1);
  Scene s = initial;
  out.push_back(observe(s));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const StepResult r = step(s, actions[i]);
    if (!r.ok) {
      throw DataError("replay failed at action " + std::to_string(i) + " (" + std::string(name(actions[i].type)) +
                      "): " + std::string(name(r.reason)));
    }
    out.push_back(observe(s));
  }
  return out;
}

}  // namespace mif::tasks
