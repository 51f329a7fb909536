#include "mif/world/subgoal.hpp"

#include "mif/errors.hpp"

#include <array>

namespace mif::world {
namespace {

constexpr std::array<std::string_view, kNumSubgoalTypes> kSubgoalNames = {
    "GoTo", "PickUp", "Put", "Clean", "Heat", "Cool", "Slice", "Toggle"};

bool matches(const ObjectState& o, const SubgoalSpec& spec) {
  return o.cls == *spec.object && o.sliced == spec.sliced;
}

ObjectClass require_object(const SubgoalSpec& spec) {
  if (!spec.object) {
    throw ContractError(std::string(name(spec.type)) + " subgoal needs an object argument");
  }
  return *spec.object;
}

const Receptacle& require_receptacle(const Scene& s, const SubgoalSpec& spec) {
  if (!s.is_receptacle(spec.receptacle)) {
    throw ContractError(std::string(name(spec.type)) + " subgoal references receptacle " +
                        std::to_string(spec.receptacle) + ", which is not in the scene");
  }
  return s.receptacle(spec.receptacle);
}

// Number of spec-matching objects placed at the Put destination.
int placed_count(const Scene& s, const SubgoalSpec& spec) {
  int n = 0;
  for (const auto& o : s.objects) {
    if (!matches(o, spec)) continue;
    if (spec.container) {
      if (o.location.kind != LocationKind::Container) continue;
      const ObjectState* c = s.find_object(o.location.holder);
      if (c && c->cls == *spec.container) ++n;
    } else if (o.location.kind == LocationKind::Receptacle && o.location.holder == spec.receptacle) {
      ++n;
    }
  }
  return n;
}

template <class Flag>
bool flag_turned_on(const Scene& before, const Scene& after, const SubgoalSpec& spec, Flag flag) {
  for (const auto& o : after.objects) {
    if (!matches(o, spec) || !flag(o)) continue;
    const ObjectState* prev = before.find_object(o.id);
    if (prev && !flag(*prev)) return true;
  }
  return false;
}

int sliced_count(const Scene& s, ObjectClass cls) {
  int n = 0;
  for (const auto& o : s.objects) n += o.cls == cls && o.sliced;
  return n;
}

}  // namespace

std::string_view name(SubgoalType t) {
  if (int(t) >= kNumSubgoalTypes) return "invalid";
  return kSubgoalNames[std::size_t(t)];
}

std::optional<SubgoalType> parse_subgoal_type(std::string_view s) {
  for (std::size_t i = 0; i < kSubgoalNames.size(); ++i)
    if (kSubgoalNames[i] == s) return SubgoalType(i);
  return std::nullopt;
}

bool at_destination(const Scene& scene, EntityId receptacle) {
  return scene.is_receptacle(receptacle) && scene.receptacle(receptacle).cell == scene.front();
}

bool subgoal_satisfied(const Scene& before, const Scene& after, const SubgoalSpec& spec) {
  switch (spec.type) {
    case SubgoalType::GoTo:
      require_receptacle(after, spec);
      return at_destination(after, spec.receptacle);
    case SubgoalType::PickUp: {
      require_object(spec);
      const ObjectState* held = after.held_object();
      if (!held || !matches(*held, spec)) return false;
      const ObjectState* prev = before.find_object(held->id);
      return !prev || prev->location.kind != LocationKind::Held;
    }
    case SubgoalType::Put:
      require_object(spec);
      if (!spec.container) require_receptacle(after, spec);
      return placed_count(after, spec) > placed_count(before, spec);
    case SubgoalType::Clean:
      require_object(spec);
      return flag_turned_on(before, after, spec, [](const ObjectState& o) { return o.clean; });
    case SubgoalType::Heat:
      require_object(spec);
      return flag_turned_on(before, after, spec, [](const ObjectState& o) { return o.hot; });
    case SubgoalType::Cool:
      require_object(spec);
      return flag_turned_on(before, after, spec, [](const ObjectState& o) { return o.cold; });
    case SubgoalType::Slice: {
      const ObjectClass cls = require_object(spec);
      return sliced_count(after, cls) > sliced_count(before, cls);
    }
    case SubgoalType::Toggle: {
      const Receptacle& now = require_receptacle(after, spec);
      if (!is_toggleable(now.cls)) throw ContractError("Toggle subgoal names a receptacle without a switch");
      const Receptacle& was = require_receptacle(before, spec);
      return was.toggled_on != spec.toggle_on && now.toggled_on == spec.toggle_on;
    }
  }
  throw ContractError("unknown subgoal type " + std::to_string(int(spec.type)));
}

std::string describe(const SubgoalSpec& spec, const Scene& scene) {
  std::string out(name(spec.type));
  out += '(';
  bool first = true;
  auto arg = [&](const std::string& s) {
    if (!first) out += ", ";
    out += s;
    first = false;
  };
  if (spec.object) arg(std::string(spec.sliced ? "sliced " : "") + std::string(name(*spec.object)));
  if (spec.container) arg("into " + std::string(name(*spec.container)));
  else if (scene.is_receptacle(spec.receptacle)) arg(std::string(name(scene.receptacle(spec.receptacle).cls)));
  if (spec.type == SubgoalType::Toggle) arg(spec.toggle_on ? "on" : "off");
  return out + ')';
}

}  // namespace mif::world
