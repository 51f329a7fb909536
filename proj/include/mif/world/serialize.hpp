#pragma once

#include "mif/world/scene.hpp"
#include "mif/world/simulator.hpp"
#include "mif/world/subgoal.hpp"

#include <json.hpp>

namespace mif::world {

using Json = nlohmann::ordered_json;

Json to_json(const Scene& scene);
Scene scene_from_json(const Json& j);

Json to_json(const SubgoalSpec& spec);
SubgoalSpec subgoal_from_json(const Json& j);

Json to_json(const Action& action);
Action action_from_json(const Json& j);

}  // namespace mif::world
