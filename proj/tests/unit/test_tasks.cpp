#include "mif/errors.hpp"
#include "mif/numerics/random.hpp"
#include "mif/tasks/dataset.hpp"
#include "mif/tasks/language.hpp"
#include "mif/tasks/planner.hpp"
#include "mif/tasks/task.hpp"
#include "oracles/shortest_path.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace mif;
using namespace mif::tasks;
using world::Pool;
using world::ReceptacleClass;

namespace {

using S = SubgoalType;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mif_tasks_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

DatasetConfig small_config(std::uint64_t seed, int train = 300, int valid = 80) {
  DatasetConfig c;
  c.master_seed = seed;
  c.train = train;
  c.valid_seen = valid;
  c.valid_unseen = valid;
  return c;
}

}  // namespace

TEST(SubgoalSequence, CanonicalSequences) {
  EXPECT_EQ(subgoal_sequence(TaskType::PickPlace), (std::vector<S>{S::GoTo, S::PickUp, S::GoTo, S::Put}));
  EXPECT_EQ(subgoal_sequence(TaskType::PickTwoPlace),
            (std::vector<S>{S::GoTo, S::PickUp, S::GoTo, S::Put, S::GoTo, S::PickUp, S::GoTo, S::Put}));
  EXPECT_EQ(subgoal_sequence(TaskType::HeatPlace),
            (std::vector<S>{S::GoTo, S::PickUp, S::GoTo, S::Heat, S::GoTo, S::Put}));
  EXPECT_EQ(subgoal_sequence(TaskType::ExamineInLight), (std::vector<S>{S::GoTo, S::PickUp, S::GoTo, S::Toggle}));
  const auto sliced = subgoal_sequence(TaskType::CoolPlace, true);
  EXPECT_EQ(sliced.size(), 12u);
  EXPECT_EQ(sliced[3], S::Slice);
  EXPECT_THROW(subgoal_sequence(TaskType::PickTwoPlace, true), ContractError);
  for (int t = 0; t < kNumTaskTypes; ++t) {
    for (bool s : {false, true}) {
      if (s && !allows_slice_variant(TaskType(t))) continue;
      const auto seq = subgoal_sequence(TaskType(t), s);
      for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_NE(seq[i - 1], seq[i]);
    }
  }
}

TEST(Instantiate, OnlyChoiceGrounding) {
  world::Scene s = world::generate_scene(7, Pool::Seen);
  const auto counter = s.find_receptacle(ReceptacleClass::Counter)->id;
  s.receptacles[std::size_t(s.find_receptacle(ReceptacleClass::Cabinet)->id)].cls = ReceptacleClass::Fridge;
  s.receptacles[std::size_t(s.find_receptacle(ReceptacleClass::Shelf)->id)].cls = ReceptacleClass::Microwave;
  world::ObjectState mug;
  mug.id = s.next_id++;
  mug.cls = ObjectClass::Mug;
  mug.location = world::Location::in_receptacle(counter);
  s.objects = {mug};
  world::validate(s);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TaskInstance t = instantiate_task(s, TaskType::PickPlace, seed);
    EXPECT_EQ(t.args.object, ObjectClass::Mug);
    EXPECT_EQ(s.receptacle(t.args.destination).cls, ReceptacleClass::Table);
    EXPECT_EQ(t.args.source, counter);
  }
  EXPECT_THROW(instantiate_task(s, TaskType::PickTwoPlace, 0), InstantiationError);
  EXPECT_THROW(instantiate_task(s, TaskType::StackPlace, 0), InstantiationError);
}

TEST(Instantiate, DeterministicAndPlannable) {
  int draws = 0, failures = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (Pool pool : {Pool::Seen, Pool::Unseen}) {
      const world::Scene scene = world::generate_scene(seed, pool);
      for (int t = 0; t < kNumTaskTypes; ++t) {
        ++draws;
        try {
          const TaskInstance a = instantiate_task(scene, TaskType(t), seed * 31 + 7);
          const TaskInstance b = instantiate_task(scene, TaskType(t), seed * 31 + 7);
          ASSERT_EQ(a, b);
          std::vector<S> types;
          for (const auto& spec : a.specs) types.push_back(spec.type);
          ASSERT_EQ(types, subgoal_sequence(TaskType(t), a.args.sliced));
          const Demonstration demo = plan_expert(scene, a.specs);
          auto scenes = replay_scenes(scene, demo.actions);
          ASSERT_TRUE(goal_satisfied(scenes.back(), a)) << name(TaskType(t));
          ASSERT_FALSE(goal_satisfied(scene, a)) << name(TaskType(t));
        } catch (const InstantiationError&) {
          ++failures;
        } catch (const PlanningError&) {
          ++failures;
        }
      }
    }
  }
  EXPECT_LT(double(failures) / draws, 0.01) << failures << " of " << draws;
}

TEST(Instantiate, EverySceneAdmitsEveryTaskType) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (Pool pool : {Pool::Seen, Pool::Unseen}) {
      const world::Scene scene = world::generate_scene(seed, pool);
      for (int t = 0; t < kNumTaskTypes; ++t) {
        bool ok = false;
        for (std::uint64_t k = 0; k < 10 && !ok; ++k) {
          try {
            plan_expert(scene, instantiate_task(scene, TaskType(t), k).specs);
            ok = true;
          } catch (const InstantiationError&) {
          } catch (const PlanningError&) {
          }
        }
        EXPECT_TRUE(ok) << name(TaskType(t)) << " in " << scene.layout_id << " seed " << seed;
      }
    }
  }
}

TEST(Planner, NavigationMatchesExhaustiveShortestPath) {
  Rng rng(123);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    world::Scene s = world::generate_scene(seed, seed % 3 ? Pool::Seen : Pool::Unseen);
    const auto goal = world::EntityId(uniform_index(rng, s.receptacles.size()));
    const auto path = navigate(s, goal);
    const int oracle = mif::oracle::shortest_path_length(s, s.receptacle(goal).cell);
    ASSERT_TRUE(path.has_value());
    ASSERT_EQ(int(path->size()), oracle) << "seed " << seed;
    world::Scene walk = s;
    for (const auto& a : *path) ASSERT_TRUE(world::step(walk, a).ok);
    EXPECT_TRUE(world::at_destination(walk, goal));
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Planner, AlreadyAdjacentGivesEmptyOrRotationOnlySegment) {
  world::Scene s = world::generate_scene(3, Pool::Seen);
  const auto& rec = s.receptacles[0];
  for (int f = 0; f < 4; ++f) {
    const world::Cell from = world::step_towards(rec.cell, world::Facing(f));
    if (!s.is_free(from)) continue;
    s.agent = from;
    s.facing = world::Facing((f + 2) % 4);
    break;
  }
  auto path = navigate(s, rec.id);
  ASSERT_TRUE(path.has_value());
  EXPECT_TRUE(path->empty());
  s.facing = world::rotate_left(s.facing);
  path = navigate(s, rec.id);
  ASSERT_TRUE(path.has_value());
  ASSERT_EQ(path->size(), 1u);
  EXPECT_EQ(path->front().type, world::ActionType::RotateRight);
  const Demonstration demo = plan_expert(s, {{S::GoTo, std::nullopt, false, rec.id}});
  EXPECT_EQ(demo.segment_length(0), 1);
}

TEST(Planner, ThousandDemonstrationsReplayCleanly) {
  const DatasetConfig config = small_config(99);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto type = TaskType(i % kNumTaskTypes);
    const Pool pool = i % 5 == 0 ? Pool::Unseen : Pool::Seen;
    const Episode ep = build_episode("ep" + std::to_string(i), mix_seed(99, std::uint64_t(i)), pool, type, config,
                                     world::builtin_layouts());
    ASSERT_NO_THROW(validate_episode(ep)) << ep.id;
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Planner, ScriptedCleanSetsCleanFlag) {
  const DatasetConfig config = small_config(5);
  for (int i = 0; i < 200; ++i) {
    const Episode ep = build_episode("c" + std::to_string(i), mix_seed(5, std::uint64_t(i)), Pool::Seen,
                                     TaskType::CleanPlace, config, world::builtin_layouts());
    const auto scenes = replay_scenes(ep.initial_scene(), ep.actions);
    for (const auto& seg : ep.segments) {
      if (seg.type != S::Clean) continue;
      ASSERT_EQ(seg.action_count(), 4);
      EXPECT_EQ(ep.actions[std::size_t(seg.action_begin)].type, world::ActionType::Put);
      EXPECT_EQ(ep.actions[std::size_t(seg.action_begin + 1)].type, world::ActionType::ToggleOn);
      EXPECT_EQ(ep.actions[std::size_t(seg.action_begin + 2)].type, world::ActionType::ToggleOff);
      EXPECT_EQ(ep.actions[std::size_t(seg.action_begin + 3)].type, world::ActionType::Pickup);
      const auto* held = scenes[std::size_t(seg.action_end)].held_object();
      ASSERT_NE(held, nullptr);
      EXPECT_TRUE(held->clean);
    }
  }
}

TEST(Planner, BadSpecsRaisePlanningError) {
  const world::Scene s = world::generate_scene(1, Pool::Seen);
  EXPECT_THROW(plan_expert(s, {{S::PickUp, ObjectClass::Mug}, {S::Put, ObjectClass::Mug, false, 0}}), PlanningError);
  EXPECT_THROW(plan_expert(s, {{S::Heat, ObjectClass::Apple}}), PlanningError);
}

TEST(Instruction, SegmentsLabelsAndBoundaries) {
  const world::Scene scene = world::generate_scene(4, Pool::Seen);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const TaskInstance task = instantiate_task(scene, TaskType(seed % kNumTaskTypes), seed);
    const Instruction ins = generate_instruction(scene, task, seed);
    ASSERT_EQ(ins.tokens.size(), ins.labels.size());
    ASSERT_EQ(ins.segments.size(), task.specs.size());
    int total = 0;
    for (std::size_t i = 0; i < ins.segments.size(); ++i) {
      const auto& seg = ins.segments[i];
      EXPECT_EQ(seg.span.begin, total);
      total = seg.span.end;
      for (int t = seg.span.begin; t < seg.span.end; ++t) EXPECT_EQ(ins.labels[std::size_t(t)], seg.type);
      EXPECT_EQ(ins.tokens[std::size_t(seg.span.end - 1)], ".");
    }
    EXPECT_EQ(total, int(ins.tokens.size()));
    for (std::size_t t = 1; t < ins.labels.size(); ++t) {
      const bool boundary = ins.tokens[t - 1] == "." && ins.labels[t] != ins.labels[t - 1];
      EXPECT_EQ(ins.labels[t] != ins.labels[t - 1], boundary);
    }
  }
}

TEST(Instruction, PickUpMugLooksLikeIt) {
  world::Scene scene = world::generate_scene(4, Pool::Seen);
  TaskInstance task;
  task.specs = {{S::PickUp, ObjectClass::Mug}};
  bool saw_plain = false;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Instruction ins = generate_instruction(scene, task, seed);
    for (auto l : ins.labels) EXPECT_EQ(l, S::PickUp);
    std::string joined;
    for (const auto& t : ins.tokens) joined += (joined.empty() ? "" : " ") + t;
    saw_plain |= joined == "pick up the mug .";
  }
  EXPECT_TRUE(saw_plain);
}

TEST(Instruction, GenerationCensus) {
  std::map<S, std::set<int>> used;
  std::set<std::string> emitted;
  const auto& vocab = generator_vocabulary();
  EXPECT_LE(vocab.size(), 400u);
  int generations = 0;
  for (std::uint64_t i = 0; generations < 10000; ++i) {
    const world::Scene scene = world::generate_scene(i, i % 4 ? Pool::Seen : Pool::Unseen);
    TaskInstance task;
    try {
      task = instantiate_task(scene, TaskType(i % kNumTaskTypes), i, {0.5});
    } catch (const InstantiationError&) {
      continue;
    }
    const Instruction ins = generate_instruction(scene, task, i);
    ++generations;
    for (const auto& seg : ins.segments) used[seg.type].insert(seg.template_index);
    for (const auto& t : ins.tokens) {
      ASSERT_TRUE(vocab.count(t)) << "out-of-vocabulary token '" << t << "'";
      emitted.insert(t);
    }
  }
  for (int t = 0; t < world::kNumSubgoalTypes; ++t) {
    EXPECT_GE(template_count(S(t)), 5);
    EXPECT_EQ(int(used[S(t)].size()), template_count(S(t))) << world::name(S(t));
  }
  EXPECT_GT(emitted.size(), vocab.size() * 9 / 10);
}

TEST(Dataset, RegenerationIsByteIdentical) {
  const auto config = small_config(42, 120, 40);
  const Dataset a = build_dataset(config);
  const Dataset b = build_dataset(config, world::builtin_layouts(), 3);
  const auto da = temp_dir("a"), db = temp_dir("b");
  write_dataset(da, a, build_generalization_splits(a), {{"master_seed", 42}});
  write_dataset(db, b, build_generalization_splits(b), {{"master_seed", 42}});
  for (const char* f : {"train.jsonl", "valid_seen.jsonl", "valid_unseen.jsonl", "splits.json", "manifest.json"}) {
    EXPECT_EQ(read_file(da / f), read_file(db / f)) << f;
  }
  const auto other = build_dataset(small_config(43, 120, 40));
  EXPECT_NE(to_json(other.train[0]).dump(), to_json(a.train[0]).dump());
}

TEST(Dataset, RoundTripAndValidity) {
  const Dataset d = build_dataset(small_config(7, 200, 60));
  const auto dir = temp_dir("rt");
  write_dataset(dir, d, build_generalization_splits(d), Json::object());
  const LoadedDataset loaded = load_dataset(dir);
  ASSERT_EQ(loaded.dataset.train.size(), d.train.size());
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    EXPECT_EQ(to_json(loaded.dataset.train[i]).dump(), to_json(d.train[i]).dump());
  }
  for (const auto* list : {&d.train, &d.valid_seen, &d.valid_unseen})
    for (const auto& ep : *list) ASSERT_NO_THROW(validate_episode(ep)) << ep.id;
  for (const auto& ep : d.valid_unseen) {
    EXPECT_EQ(ep.pool, Pool::Unseen);
    EXPECT_EQ(ep.initial_scene().layout_id.rfind("unseen", 0), 0u);
  }
  for (const auto& ep : d.train) EXPECT_EQ(ep.initial_scene().pool, Pool::Seen);
  EXPECT_EQ(loaded.split("pick2-seen").size(), build_generalization_splits(d).at("pick2-seen").size());
  EXPECT_THROW(loaded.split("nope"), NotFoundError);
}

TEST(Dataset, TaskProportionsMatchWeights) {
  DatasetConfig config = small_config(11, 1400, 7);
  config.task_weights = {3, 1, 1, 1, 1, 1, 1};
  const Dataset d = build_dataset(config);
  std::array<int, kNumTaskTypes> counts{};
  for (const auto& ep : d.train) ++counts[std::size_t(ep.task.type)];
  double chi2 = 0;
  for (int t = 0; t < kNumTaskTypes; ++t) {
    const double expected = 1400.0 * config.task_weights[std::size_t(t)] / 9.0;
    chi2 += std::pow(counts[std::size_t(t)] - expected, 2) / expected;
  }
  // 6 degrees of freedom; 99.9th percentile is 22.46.
  EXPECT_LT(chi2, 22.46);
  EXPECT_LT(double(d.stats.resamples) / d.stats.episodes, 0.01);
}

TEST(Dataset, MalformedRecordsNameTheLine) {
  const auto dir = temp_dir("bad");
  {
    std::ofstream out(dir / "x.jsonl");
    out << to_json(build_dataset(small_config(1, 1, 0)).train[0]).dump() << "\n{\"episode_id\": 3}\n";
  }
  try {
    read_jsonl(dir / "x.jsonl");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("x.jsonl:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_jsonl(dir / "missing.jsonl"), IoError);
}

TEST(Splits, FilteringAndPartitionArithmetic) {
  const Dataset d = build_dataset(small_config(21, 500, 140));
  const SplitMap splits = build_generalization_splits(d);
  std::map<std::string, const Episode*> index;
  for (const auto* list : {&d.train, &d.valid_seen, &d.valid_unseen})
    for (const auto& e : *list) index[e.id] = &e;
  for (const auto& id : splits.at("filtered-train")) EXPECT_FALSE(is_held_out(index.at(id)->task.type));
  for (const auto& id : splits.at("pick2-unseen")) EXPECT_EQ(index.at(id)->task.type, TaskType::PickTwoPlace);
  for (const auto& id : splits.at("stack-seen")) EXPECT_EQ(index.at(id)->task.type, TaskType::StackPlace);
  std::size_t others = 0;
  for (const auto& e : d.valid_seen) others += !is_held_out(e.task.type);
  EXPECT_EQ(splits.at("standard-seen").size(),
            splits.at("pick2-seen").size() + splits.at("stack-seen").size() + others);
  EXPECT_EQ(splits.at("standard-unseen").size(), d.valid_unseen.size());

  std::vector<const Episode*> filtered, pick2, held_out;
  for (const auto& id : splits.at("filtered-train")) filtered.push_back(index.at(id));
  for (const auto* list : {&d.valid_seen, &d.valid_unseen})
    for (const auto& e : *list) {
      if (e.task.type == TaskType::PickTwoPlace) pick2.push_back(&e);
      if (is_held_out(e.task.type)) held_out.push_back(&e);
    }
  const auto seen_bigrams = subgoal_bigrams(filtered);
  for (const auto& b : subgoal_bigrams(pick2)) {
    EXPECT_TRUE(seen_bigrams.count(b)) << world::name(b.first) << "->" << world::name(b.second);
  }
  std::set<S> train_types;
  for (const auto* e : filtered)
    for (const auto& s : e->segments) train_types.insert(s.type);
  for (const auto* e : held_out)
    for (const auto& s : e->segments) EXPECT_TRUE(train_types.count(s.type));
}

TEST(Splits, EmptySplitIsConfigurationError) {
  DatasetConfig config = small_config(3, 30, 10);
  config.task_weights = {1, 1, 1, 1, 1, 0, 0};
  const Dataset d = build_dataset(config);
  EXPECT_THROW(build_generalization_splits(d), ConfigError);
}
