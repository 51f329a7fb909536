#pragma once

#include "mif/world/scene.hpp"
#include "mif/world/subgoal.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace mif::tasks {

using world::EntityId;
using world::ObjectClass;
using world::Scene;
using world::SubgoalSpec;
using world::SubgoalType;

enum class TaskType : std::uint8_t {
  PickPlace,
  ExamineInLight,
  HeatPlace,
  CoolPlace,
  CleanPlace,
  StackPlace,
  PickTwoPlace,
};
inline constexpr int kNumTaskTypes = 7;

std::string_view name(TaskType t);
std::optional<TaskType> parse_task_type(std::string_view s);
bool is_held_out(TaskType t);  // StackPlace and PickTwoPlace

// Tasks whose target may be a slice, which adds the knife prefix.
bool allows_slice_variant(TaskType t);

// Canonical subgoal types, optionally with the slice prefix.
std::vector<SubgoalType> subgoal_sequence(TaskType t, bool sliced = false);

struct TaskArgs {
  ObjectClass object = ObjectClass::Apple;
  bool sliced = false;
  EntityId source = -1;
  EntityId destination = -1;                // Put destination, or the lamp
  std::optional<ObjectClass> container;     // StackPlace
  EntityId container_source = -1;           // StackPlace
  EntityId second_source = -1;              // PickTwoPlace
  EntityId knife_source = -1;               // slice variants
  EntityId knife_drop = -1;                 // slice variants
  friend bool operator==(const TaskArgs&, const TaskArgs&) = default;
};

struct TaskInstance {
  TaskType type = TaskType::PickPlace;
  TaskArgs args;
  std::vector<SubgoalSpec> specs;
  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

struct InstantiateOptions {
  double slice_probability = 0.25;
};

// Grounds a task in the scene. Throws InstantiationError when the scene
// cannot support it.
TaskInstance instantiate_task(const Scene& scene, TaskType type, std::uint64_t seed,
                              const InstantiateOptions& options = {});

// Goal condition on the final scene.
bool goal_satisfied(const Scene& final_scene, const TaskInstance& task);

}  // namespace mif::tasks
