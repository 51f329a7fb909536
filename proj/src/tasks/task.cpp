#include "mif/tasks/task.hpp"

#include "mif/errors.hpp"
#include "mif/numerics/random.hpp"
#include "mif/world/simulator.hpp"

#include <algorithm>
#include <array>

namespace mif::tasks {

using world::LocationKind;
using world::ObjectState;
using world::ReceptacleClass;

namespace {

constexpr std::array<std::string_view, kNumTaskTypes> kTaskNames = {
    "PickPlace", "ExamineInLight", "HeatPlace", "CoolPlace", "CleanPlace", "StackPlace", "PickTwoPlace"};

bool eligible(TaskType t, ObjectClass c) {
  using O = ObjectClass;
  switch (t) {
    case TaskType::PickPlace: return true;
    case TaskType::ExamineInLight:
      return c == O::Book || c == O::Cd || c == O::Remote || c == O::Vase || c == O::Mug;
    case TaskType::HeatPlace:
      return c == O::Apple || c == O::Potato || c == O::Tomato || c == O::Bread || c == O::Mug;
    case TaskType::CoolPlace:
      return world::is_sliceable(c) || c == O::Mug || c == O::Pan;
    case TaskType::CleanPlace:
      return c == O::Mug || c == O::Knife || c == O::Pan || c == O::Bowl || c == O::Apple ||
             c == O::Tomato || c == O::Lettuce || c == O::Potato;
    case TaskType::StackPlace: return !world::is_container(c);
    case TaskType::PickTwoPlace: return true;
  }
  return false;
}

EntityId source_of(const Scene& s, const ObjectState& o) {
  auto r = s.resting_receptacle(o);
  return r && o.location.kind == LocationKind::Receptacle ? *r : -1;
}

std::vector<EntityId> surfaces(const Scene& s) {
  std::vector<EntityId> out;
  for (const auto& r : s.receptacles)
    if (world::is_surface(r.cls)) out.push_back(r.id);
  return out;
}

bool holds_class(const Scene& s, EntityId rec, ObjectClass cls) {
  for (const auto& o : s.objects)
    if (o.cls == cls && s.resting_receptacle(o) == rec) return true;
  return false;
}

// Surfaces that can take `extra` more objects, exclude every id in
// `avoid`, and hold nothing of class `cls`.
std::vector<EntityId> destinations(const Scene& s, ObjectClass cls, int extra,
                                   std::initializer_list<EntityId> avoid) {
  std::vector<EntityId> out;
  for (EntityId r : surfaces(s)) {
    if (std::find(avoid.begin(), avoid.end(), r) != avoid.end()) continue;
    if (holds_class(s, r, cls)) continue;
    if (s.occupancy(LocationKind::Receptacle, r) + extra > world::kReceptacleCapacity) continue;
    out.push_back(r);
  }
  return out;
}

[[noreturn]] void unsatisfiable(TaskType t, const Scene& s, const std::string& why) {
  throw InstantiationError(std::string(name(t)) + " cannot be grounded in scene " + s.layout_id +
                           "/seed " + std::to_string(s.seed) + ": " + why);
}

SubgoalSpec go_to(EntityId r) { return {SubgoalType::GoTo, std::nullopt, false, r}; }
SubgoalSpec pick_up(ObjectClass c, bool sliced) { return {SubgoalType::PickUp, c, sliced}; }
SubgoalSpec put(ObjectClass c, bool sliced, EntityId r) { return {SubgoalType::Put, c, sliced, r}; }

// Picks the knife and a drop surface for the slice prefix, or returns false.
bool ground_slice(const Scene& s, TaskArgs& args, Rng& rng) {
  const ObjectState* knife = nullptr;
  for (const auto& o : s.objects)
    if (o.cls == ObjectClass::Knife && o.location.kind == LocationKind::Receptacle) knife = &o;
  if (!knife) return false;
  const EntityId knife_src = source_of(s, *knife);
  if (knife_src == args.source) return false;
  if (s.occupancy(LocationKind::Receptacle, args.source) + world::kSlicePieces - 1 > world::kReceptacleCapacity) {
    return false;
  }
  std::vector<EntityId> drops;
  for (EntityId r : surfaces(s))
    if (r != args.source && (r == knife_src || s.occupancy(LocationKind::Receptacle, r) < world::kReceptacleCapacity))
      drops.push_back(r);
  if (drops.empty()) return false;
  args.sliced = true;
  args.knife_source = knife_src;
  args.knife_drop = choose(drops, rng);
  return true;
}

std::vector<SubgoalSpec> slice_prefix(const TaskArgs& a) {
  return {go_to(a.knife_source),
          pick_up(ObjectClass::Knife, false),
          go_to(a.source),
          {SubgoalType::Slice, a.object, false, a.source},
          go_to(a.knife_drop),
          put(ObjectClass::Knife, false, a.knife_drop)};
}

std::vector<SubgoalSpec> build_specs(const Scene& s, TaskType type, const TaskArgs& a) {
  std::vector<SubgoalSpec> specs;
  if (a.sliced) specs = slice_prefix(a);
  auto add = [&](SubgoalSpec spec) { specs.push_back(spec); };
  auto appliance = [&](ReceptacleClass c) { return s.find_receptacle(c)->id; };
  switch (type) {
    case TaskType::PickPlace:
      add(go_to(a.source));
      add(pick_up(a.object, a.sliced));
      add(go_to(a.destination));
      add(put(a.object, a.sliced, a.destination));
      break;
    case TaskType::ExamineInLight:
      add(go_to(a.source));
      add(pick_up(a.object, a.sliced));
      add(go_to(a.destination));
      add({SubgoalType::Toggle, std::nullopt, false, a.destination, std::nullopt, true});
      break;
    case TaskType::HeatPlace:
    case TaskType::CoolPlace:
    case TaskType::CleanPlace: {
      const auto [sub, device] =
          type == TaskType::HeatPlace   ? std::pair{SubgoalType::Heat, ReceptacleClass::Microwave}
          : type == TaskType::CoolPlace ? std::pair{SubgoalType::Cool, ReceptacleClass::Fridge}
                                        : std::pair{SubgoalType::Clean, ReceptacleClass::Sink};
      add(go_to(a.source));
      add(pick_up(a.object, a.sliced));
      add(go_to(appliance(device)));
      add({sub, a.object, a.sliced, appliance(device)});
      add(go_to(a.destination));
      add(put(a.object, a.sliced, a.destination));
      break;
    }
    case TaskType::StackPlace: {
      add(go_to(a.source));
      add(pick_up(a.object, a.sliced));
      add(go_to(a.container_source));
      SubgoalSpec into = put(a.object, a.sliced, -1);
      into.container = a.container;
      add(into);
      add(pick_up(*a.container, false));
      add(go_to(a.destination));
      add(put(*a.container, false, a.destination));
      break;
    }
    case TaskType::PickTwoPlace:
      for (EntityId src : {a.source, a.second_source}) {
        add(go_to(src));
        add(pick_up(a.object, false));
        add(go_to(a.destination));
        add(put(a.object, false, a.destination));
      }
      break;
  }
  return specs;
}

}  // namespace

std::string_view name(TaskType t) {
  if (int(t) >= kNumTaskTypes) return "invalid";
  return kTaskNames[std::size_t(t)];
}

std::optional<TaskType> parse_task_type(std::string_view s) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i)
    if (kTaskNames[i] == s) return TaskType(i);
  return std::nullopt;
}

bool is_held_out(TaskType t) { return t == TaskType::StackPlace || t == TaskType::PickTwoPlace; }

bool allows_slice_variant(TaskType t) {
  return t == TaskType::PickPlace || t == TaskType::HeatPlace || t == TaskType::CoolPlace ||
         t == TaskType::CleanPlace || t == TaskType::StackPlace;
}

std::vector<SubgoalType> subgoal_sequence(TaskType t, bool sliced) {
  using S = SubgoalType;
  std::vector<S> seq;
  if (sliced) {
    if (!allows_slice_variant(t)) throw ContractError(std::string(name(t)) + " has no slice variant");
    seq = {S::GoTo, S::PickUp, S::GoTo, S::Slice, S::GoTo, S::Put};
  }
  auto append = [&](std::initializer_list<S> xs) { seq.insert(seq.end(), xs); };
  switch (t) {
    case TaskType::PickPlace: append({S::GoTo, S::PickUp, S::GoTo, S::Put}); break;
    case TaskType::ExamineInLight: append({S::GoTo, S::PickUp, S::GoTo, S::Toggle}); break;
    case TaskType::HeatPlace: append({S::GoTo, S::PickUp, S::GoTo, S::Heat, S::GoTo, S::Put}); break;
    case TaskType::CoolPlace: append({S::GoTo, S::PickUp, S::GoTo, S::Cool, S::GoTo, S::Put}); break;
    case TaskType::CleanPlace: append({S::GoTo, S::PickUp, S::GoTo, S::Clean, S::GoTo, S::Put}); break;
    case TaskType::StackPlace: append({S::GoTo, S::PickUp, S::GoTo, S::Put, S::PickUp, S::GoTo, S::Put}); break;
    case TaskType::PickTwoPlace:
      append({S::GoTo, S::PickUp, S::GoTo, S::Put, S::GoTo, S::PickUp, S::GoTo, S::Put});
      break;
    default: throw ContractError("unknown task type " + std::to_string(int(t)));
  }
  return seq;
}

TaskInstance instantiate_task(const Scene& s, TaskType type, std::uint64_t seed, const InstantiateOptions& options) {
  if (int(type) >= kNumTaskTypes) throw ContractError("unknown task type " + std::to_string(int(type)));
  Rng rng(mix_seed(seed, 0x7a5c + std::uint64_t(type)));
  TaskArgs args;

  if (type == TaskType::PickTwoPlace) {
    struct Pair {
      const ObjectState* a;
      const ObjectState* b;
    };
    std::vector<Pair> pairs;
    for (const auto& a : s.objects) {
      for (const auto& b : s.objects) {
        if (a.id >= b.id || a.cls != b.cls || a.sliced || b.sliced) continue;
        const EntityId sa = source_of(s, a), sb = source_of(s, b);
        if (sa < 0 || sb < 0 || sa == sb) continue;
        if (destinations(s, a.cls, 2, {sa, sb}).empty()) continue;
        pairs.push_back({&a, &b});
      }
    }
    if (pairs.empty()) unsatisfiable(type, s, "no two instances of one class in different receptacles");
    Pair p = choose(pairs, rng);
    if (bernoulli(rng, 0.5)) std::swap(p.a, p.b);
    args.object = p.a->cls;
    args.source = source_of(s, *p.a);
    args.second_source = source_of(s, *p.b);
    args.destination = choose(destinations(s, args.object, 2, {args.source, args.second_source}), rng);
    return {type, args, build_specs(s, type, args)};
  }

  const ObjectState* container = nullptr;
  if (type == TaskType::StackPlace) {
    for (const auto& o : s.objects)
      if (world::is_container(o.cls) && o.location.kind == LocationKind::Receptacle &&
          s.occupancy(LocationKind::Container, o.id) == 0)
        container = &o;
    if (!container) unsatisfiable(type, s, "no empty container on a receptacle");
    args.container = container->cls;
    args.container_source = source_of(s, *container);
  }

  std::vector<const ObjectState*> candidates;
  for (const auto& o : s.objects) {
    if (!eligible(type, o.cls) || o.sliced) continue;
    const EntityId src = source_of(s, o);
    if (src < 0) continue;
    if (type == TaskType::ExamineInLight) {
      candidates.push_back(&o);
    } else if (type == TaskType::StackPlace) {
      if (src != args.container_source &&
          !destinations(s, container->cls, 1, {args.container_source}).empty())
        candidates.push_back(&o);
    } else if (!destinations(s, o.cls, 1, {src}).empty()) {
      candidates.push_back(&o);
    }
  }
  if (candidates.empty()) unsatisfiable(type, s, "no eligible object with a free destination");
  const ObjectState& target = *choose(candidates, rng);
  args.object = target.cls;
  args.source = source_of(s, target);

  if (allows_slice_variant(type) && world::is_sliceable(target.cls) &&
      bernoulli(rng, options.slice_probability)) {
    ground_slice(s, args, rng);
  }

  if (type == TaskType::ExamineInLight) {
    args.destination = s.find_receptacle(ReceptacleClass::Lamp)->id;
  } else if (type == TaskType::StackPlace) {
    args.destination = choose(destinations(s, container->cls, 1, {args.container_source}), rng);
  } else {
    auto dst = destinations(s, target.cls, 1, {args.source});
    if (args.sliced) {
      // The knife drop adds an object to its surface.
      std::erase_if(dst, [&](EntityId r) {
        return r == args.knife_drop && r != args.knife_source &&
               s.occupancy(LocationKind::Receptacle, r) + 2 > world::kReceptacleCapacity;
      });
    }
    if (dst.empty()) unsatisfiable(type, s, "no destination left after the slice prefix");
    args.destination = choose(dst, rng);
  }
  return {type, args, build_specs(s, type, args)};
}

bool goal_satisfied(const Scene& s, const TaskInstance& task) {
  const TaskArgs& a = task.args;
  auto matches = [&](const ObjectState& o) { return o.cls == a.object && o.sliced == a.sliced; };
  auto in_dst = [&](const ObjectState& o) {
    return o.location.kind == LocationKind::Receptacle && o.location.holder == a.destination;
  };
  switch (task.type) {
    case TaskType::PickPlace:
      return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) { return matches(o) && in_dst(o); });
    case TaskType::ExamineInLight:
      if (!s.receptacle(a.destination).toggled_on) return false;
      return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) {
        return matches(o) && o.examined && o.location.kind == LocationKind::Held;
      });
    case TaskType::HeatPlace:
    case TaskType::CoolPlace:
    case TaskType::CleanPlace:
      return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) {
        const bool flag = task.type == TaskType::HeatPlace   ? o.hot
                          : task.type == TaskType::CoolPlace ? o.cold
                                                             : o.clean;
        return matches(o) && in_dst(o) && flag;
      });
    case TaskType::StackPlace:
      return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& o) {
        if (!matches(o) || o.location.kind != LocationKind::Container) return false;
        const ObjectState* c = s.find_object(o.location.holder);
        return c && c->cls == *a.container && in_dst(*c);
      });
    case TaskType::PickTwoPlace:
      return std::count_if(s.objects.begin(), s.objects.end(), [&](const auto& o) { return matches(o) && in_dst(o); }) >= 2;
  }
  throw ContractError("unknown task type " + std::to_string(int(task.type)));
}

}  // namespace mif::tasks
