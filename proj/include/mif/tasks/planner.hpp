#pragma once

#include "mif/world/observation.hpp"
#include "mif/world/simulator.hpp"
#include "mif/world/subgoal.hpp"

#include <optional>
#include <vector>

namespace mif::tasks {

struct Demonstration {
  std::vector<world::Action> actions;
  // Segment i covers actions [boundaries[i], boundaries[i + 1]).
  std::vector<int> boundaries;
  int segment_count() const { return int(boundaries.size()) - 1; }
  int segment_length(int i) const { return boundaries[std::size_t(i) + 1] - boundaries[std::size_t(i)]; }
};

// Shortest action sequence that leaves the agent facing the receptacle.
// Returns nullopt when no such pose is reachable.
std::optional<std::vector<world::Action>> navigate(const world::Scene& scene, world::EntityId receptacle);

// Fixed interaction script for a non-navigation subgoal, resolved against
// the current scene. Throws PlanningError if the target is not in reach.
std::vector<world::Action> interaction_script(const world::Scene& scene, const world::SubgoalSpec& spec);

// Plans every segment in order, replaying through the simulator and
// checking each subgoal. Throws PlanningError on any failure.
Demonstration plan_expert(const world::Scene& scene, const std::vector<world::SubgoalSpec>& specs);

// Scenes before each action plus the final scene (actions.size() + 1 entries).
std::vector<world::Scene> replay_scenes(const world::Scene& initial, const std::vector<world::Action>& actions);
std::vector<world::Observation> replay_observations(const world::Scene& initial,
                                                    const std::vector<world::Action>& actions);

}  // namespace mif::tasks
