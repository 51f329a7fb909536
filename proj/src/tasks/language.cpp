#include "mif/tasks/language.hpp"

#include "mif/errors.hpp"
#include "mif/numerics/random.hpp"

#include <array>
#include <sstream>

namespace mif::tasks {

using world::ReceptacleClass;

namespace {

using Templates = std::vector<std::string_view>;

const std::array<Templates, world::kNumSubgoalTypes>& templates() {
  static const std::array<Templates, world::kNumSubgoalTypes> table = {{
      // GoTo
      {"walk to the {rec} .", "go to the {rec} .", "head to the {rec} .", "turn and walk over to the {rec} .",
       "move to the {rec} .", "make your way to the {rec} .", "walk forward to the {rec} ."},
      // PickUp
      {"pick up the {obj} .", "grab the {obj} .", "take the {obj} .", "pick the {obj} up from the {here} .",
       "take the {obj} off the {here} .", "grab the {obj} from the {here} ."},
      // Put
      {"put the {obj} on the {rec} .", "place the {obj} in the {rec} .", "put it down on the {rec} .",
       "set the {obj} on the {rec} .", "leave the {obj} in the {rec} .", "place it on the {rec} ."},
      // Clean
      {"clean the {obj} in the {dev} .", "rinse the {obj} off in the {dev} .", "wash the {obj} .",
       "put the {obj} in the {dev} , turn on the water , then take it out .",
       "rinse off the {obj} and take it out of the {dev} ."},
      // Heat
      {"heat the {obj} in the {dev} .", "warm up the {obj} .", "cook the {obj} in the {dev} .",
       "put the {obj} in the {dev} , turn it on , then take it out .",
       "heat up the {obj} and take it out of the {dev} ."},
      // Cool
      {"chill the {obj} in the {dev} .", "cool the {obj} down .", "put the {obj} in the {dev} and take it back out .",
       "cool the {obj} in the {dev} .", "chill the {obj} then take it out of the {dev} ."},
      // Slice
      {"slice the {obj} .", "cut the {obj} into slices .", "cut up the {obj} with the knife .",
       "use the knife to slice the {obj} .", "chop the {obj} ."},
      // Toggle
      {"turn on the {rec} .", "switch on the {rec} .", "turn the {rec} on .", "look at the {held} under the {rec} .",
       "examine the {held} by the light of the {rec} ."},
  }};
  return table;
}

const std::array<std::vector<std::string_view>, world::kNumReceptacleClasses> kReceptacleWords = {{
    {"table", "dining table", "coffee table"},
    {"counter", "countertop", "kitchen counter"},
    {"cabinet", "cupboard"},
    {"shelf", "shelving unit"},
    {"sink", "basin", "sink basin"},
    {"microwave", "microwave oven"},
    {"fridge", "refrigerator"},
    {"lamp", "floor lamp", "desk lamp"},
}};

const std::array<std::vector<std::string_view>, world::kNumObjectClasses> kObjectWords = {{
    {"apple"},
    {"potato"},
    {"tomato"},
    {"lettuce", "head of lettuce"},
    {"bread", "loaf of bread"},
    {"mug", "cup", "coffee mug"},
    {"vase"},
    {"cd", "disc"},
    {"book"},
    {"remote", "remote control"},
    {"knife", "butter knife"},
    {"pan", "frying pan"},
    {"bowl"},
}};

constexpr std::array<std::string_view, 3> kSliceForms = {"slice of {n}", "{n} slice", "sliced {n}"};
constexpr std::array<std::string_view, 5> kJoiners = {"then", "next ,", "now", "and then", "after that ,"};
constexpr double kJoinerProbability = 0.3;

std::vector<std::string> split(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string receptacle_phrase(ReceptacleClass c, Rng& rng) {
  return std::string(choose(kReceptacleWords[std::size_t(c)], rng));
}

std::string object_phrase(world::ObjectClass c, bool sliced, Rng& rng) {
  const auto& words = kObjectWords[std::size_t(c)];
  if (!sliced) return std::string(choose(words, rng));
  std::string form(choose(kSliceForms, rng));
  form.replace(form.find("{n}"), 3, words.front());
  return form;
}

}  // namespace

int template_count(SubgoalType t) { return int(templates()[std::size_t(t)].size()); }

Instruction generate_instruction(const Scene& scene, const TaskInstance& task, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1a59));
  Instruction out;
  EntityId here = -1;
  bool holding = false;
  world::ObjectClass held_cls = world::ObjectClass::Apple;
  bool held_sliced = false;

  for (std::size_t i = 0; i < task.specs.size(); ++i) {
    const SubgoalSpec& spec = task.specs[i];
    const auto& pool = templates()[std::size_t(spec.type)];
    // Templates mentioning the current receptacle need one.
    std::vector<int> usable;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const bool wants_here = pool[k].find("{here}") != std::string_view::npos;
      const bool wants_held = pool[k].find("{held}") != std::string_view::npos;
      if ((wants_here && here < 0) || (wants_held && !holding)) continue;
      usable.push_back(int(k));
    }
    const int chosen = choose(usable, rng);
    std::string text(pool[std::size_t(chosen)]);

    auto fill = [&](std::string_view key, const std::string& value) {
      for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
      }
    };
    if (spec.object) fill("{obj}", object_phrase(*spec.object, spec.sliced && spec.type != SubgoalType::Slice, rng));
    if (spec.container) {
      fill("{rec}", object_phrase(*spec.container, false, rng));
    } else if (scene.is_receptacle(spec.receptacle)) {
      const auto cls = scene.receptacle(spec.receptacle).cls;
      fill("{rec}", receptacle_phrase(cls, rng));
      fill("{dev}", receptacle_phrase(cls, rng));
    }
    if (here >= 0) fill("{here}", receptacle_phrase(scene.receptacle(here).cls, rng));
    if (holding) fill("{held}", object_phrase(held_cls, held_sliced, rng));
    if (text.find('{') != std::string::npos) {
      throw ContractError("unfilled template for " + world::describe(spec, scene) + ": " + text);
    }

    std::vector<std::string> words;
    if (i > 0 && bernoulli(rng, kJoinerProbability)) words = split(choose(kJoiners, rng));
    for (auto& w : split(text)) words.push_back(std::move(w));

    InstructionSegment seg;
    seg.span.begin = int(out.tokens.size());
    seg.type = spec.type;
    seg.template_index = chosen;
    for (auto& w : words) {
      out.tokens.push_back(std::move(w));
      out.labels.push_back(spec.type);
    }
    seg.span.end = int(out.tokens.size());
    out.segments.push_back(seg);

    if (spec.type == SubgoalType::GoTo) here = spec.receptacle;
    if (spec.type == SubgoalType::PickUp) {
      holding = true;
      held_cls = *spec.object;
      held_sliced = spec.sliced;
    }
    if (spec.type == SubgoalType::Put) holding = false;
  }
  return out;
}

const std::set<std::string>& generator_vocabulary() {
  static const std::set<std::string> vocab = [] {
    std::set<std::string> v;
    auto add = [&](std::string_view text) {
      for (auto& w : split(text))
        if (w.front() != '{') v.insert(w);
    };
    for (const auto& pool : templates())
      for (auto t : pool) add(t);
    for (const auto& words : kReceptacleWords)
      for (auto w : words) add(w);
    for (const auto& words : kObjectWords)
      for (auto w : words) add(w);
    for (auto f : kSliceForms) add(f);
    for (auto j : kJoiners) add(j);
    return v;
  }();
  return vocab;
}

}  // namespace mif::tasks
