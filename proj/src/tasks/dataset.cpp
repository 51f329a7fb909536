#include "mif/tasks/dataset.hpp"

#include "mif/errors.hpp"
#include "mif/io.hpp"
#include "mif/numerics/checkpoint.hpp"
#include "mif/numerics/random.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace mif::tasks {

using world::Action;
using world::Pool;

namespace {

constexpr int kFormatVersion = 1;

struct SplitPlan {
  const char* name;
  const char* file;
  Pool pool;
  int count;
  std::uint64_t salt;
};

std::vector<SplitPlan> split_plans(const DatasetConfig& c) {
  return {{"train", "train.jsonl", Pool::Seen, c.train, 1},
          {"valid_seen", "valid_seen.jsonl", Pool::Seen, c.valid_seen, 2},
          {"valid_unseen", "valid_unseen.jsonl", Pool::Unseen, c.valid_unseen, 3}};
}

TaskType sample_task(const std::array<double, kNumTaskTypes>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0)) throw ConfigError("task weights must have a positive sum");
  double u = uniform01(rng) * total;
  for (int t = 0; t < kNumTaskTypes; ++t) {
    if (weights[std::size_t(t)] < 0) throw ConfigError("task weights must be non-negative");
    if (u < weights[std::size_t(t)]) return TaskType(t);
    u -= weights[std::size_t(t)];
  }
  for (int t = kNumTaskTypes - 1; t >= 0; --t)
    if (weights[std::size_t(t)] > 0) return TaskType(t);
  return TaskType::PickPlace;
}

Json args_json(const TaskArgs& a) {
  Json j;
  j["object"] = std::string(world::name(a.object));
  j["sliced"] = a.sliced;
  j["source"] = a.source;
  j["destination"] = a.destination;
  if (a.container) j["container"] = std::string(world::name(*a.container));
  if (a.container_source >= 0) j["container_source"] = a.container_source;
  if (a.second_source >= 0) j["second_source"] = a.second_source;
  if (a.knife_source >= 0) j["knife_source"] = a.knife_source;
  if (a.knife_drop >= 0) j["knife_drop"] = a.knife_drop;
  return j;
}

TaskArgs args_from(const Json& j) {
  TaskArgs a;
  const auto obj = world::parse_object_class(j.at("object").get<std::string>());
  if (!obj) throw DataError("unknown object class in task args");
  a.object = *obj;
  a.sliced = j.at("sliced").get<bool>();
  a.source = j.at("source").get<int>();
  a.destination = j.at("destination").get<int>();
  if (j.contains("container")) {
    const auto c = world::parse_object_class(j.at("container").get<std::string>());
    if (!c) throw DataError("unknown container class in task args");
    a.container = *c;
  }
  a.container_source = j.value("container_source", -1);
  a.second_source = j.value("second_source", -1);
  a.knife_source = j.value("knife_source", -1);
  a.knife_drop = j.value("knife_drop", -1);
  return a;
}

SubgoalType subgoal_type_from(const Json& j) {
  const auto t = world::parse_subgoal_type(j.get<std::string>());
  if (!t) throw DataError("unknown subgoal type '" + j.get<std::string>() + "'");
  return *t;
}

}  // namespace

world::Scene Episode::initial_scene(const world::LayoutPools& layouts) const {
  return world::generate_scene(scene_seed, pool, layouts);
}

Episode build_episode(const std::string& id, std::uint64_t seed, Pool pool, TaskType type,
                      const DatasetConfig& config, const world::LayoutPools& layouts, GenerationStats* stats) {
  std::string last_error;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const std::uint64_t scene_seed = mix_seed(seed, std::uint64_t(attempt));
    const world::Scene scene = world::generate_scene(scene_seed, pool, layouts);
    TaskInstance task;
    Demonstration demo;
    try {
      task = instantiate_task(scene, type, mix_seed(scene_seed, 1), {config.slice_probability});
      demo = plan_expert(scene, task.specs);
    } catch (const InstantiationError& e) {
      last_error = e.what();
      if (stats) ++stats->resamples;
      continue;
    } catch (const PlanningError& e) {
      last_error = e.what();
      if (stats) ++stats->resamples;
      continue;
    }
    const Instruction text = generate_instruction(scene, task, mix_seed(scene_seed, 2));
    Episode ep;
    ep.id = id;
    ep.scene_seed = scene_seed;
    ep.pool = pool;
    ep.task = task;
    ep.tokens = text.tokens;
    ep.labels = text.labels;
    ep.actions = demo.actions;
    for (std::size_t i = 0; i < task.specs.size(); ++i) {
      ep.segments.push_back({text.segments[i].span, task.specs[i].type, task.specs[i], demo.boundaries[i],
                             demo.boundaries[i + 1]});
    }
    if (stats) {
      ++stats->episodes;
      ++stats->per_task[std::size_t(type)];
    }
    return ep;
  }
  throw DataError("episode " + id + ": no groundable scene after " + std::to_string(config.max_attempts) +
                  " attempts; last error: " + last_error);
}

Dataset build_dataset(const DatasetConfig& config, const world::LayoutPools& layouts, int workers) {
  if (config.train < 0 || config.valid_seen < 0 || config.valid_unseen < 0) {
    throw ConfigError("episode counts must be non-negative");
  }
  Dataset data;
  for (const auto& plan : split_plans(config)) {
    struct Job {
      std::string id;
      std::uint64_t seed;
      TaskType type;
    };
    std::vector<Job> jobs;
    Rng rng(mix_seed(config.master_seed, plan.salt));
    for (int i = 0; i < plan.count; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s-%05d", plan.name, i);
      jobs.push_back({id, mix_seed(config.master_seed, (plan.salt << 32) + std::uint64_t(i)), sample_task(config.task_weights, rng)});
    }

    std::vector<Episode> episodes(jobs.size());
    std::vector<GenerationStats> partial(std::size_t(std::max(workers, 1)));
    auto run = [&](std::size_t worker) {
      for (std::size_t i = worker; i < jobs.size(); i += partial.size()) {
        episodes[i] = build_episode(jobs[i].id, jobs[i].seed, plan.pool, jobs[i].type, config, layouts, &partial[worker]);
      }
    };
    if (partial.size() == 1) {
      run(0);
    } else {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(partial.size());
      for (std::size_t w = 0; w < partial.size(); ++w) {
        threads.emplace_back([&, w] {
          try {
            run(w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    for (const auto& p : partial) {
      data.stats.episodes += p.episodes;
      data.stats.resamples += p.resamples;
      for (int t = 0; t < kNumTaskTypes; ++t) data.stats.per_task[std::size_t(t)] += p.per_task[std::size_t(t)];
    }
    auto& dest = std::string(plan.name) == "train"        ? data.train
                 : std::string(plan.name) == "valid_seen" ? data.valid_seen
                                                          : data.valid_unseen;
    dest = std::move(episodes);
  }
  return data;
}

void validate_episode(const Episode& ep, const world::LayoutPools& layouts) {
  auto fail = [&](const std::string& msg) { throw DataError("episode " + ep.id + ": " + msg); };
  if (ep.tokens.empty()) fail("empty instruction");
  if (ep.tokens.size() != ep.labels.size()) fail("token and label counts differ");
  if (ep.segments.empty()) fail("no segments");
  if (ep.segments.size() != ep.task.specs.size()) fail("segment count differs from the task's subgoal count");
  int token_cursor = 0, action_cursor = 0;
  for (std::size_t i = 0; i < ep.segments.size(); ++i) {
    const auto& seg = ep.segments[i];
    if (seg.tokens.begin != token_cursor || seg.tokens.end <= seg.tokens.begin) fail("token segments do not partition the instruction");
    if (seg.action_begin != action_cursor || seg.action_end < seg.action_begin) fail("demonstration segments do not partition the actions");
    if (i > 0 && ep.segments[i - 1].type == seg.type) fail("adjacent segments share type " + std::string(world::name(seg.type)));
    if (seg.type != seg.spec.type) fail("segment type disagrees with its spec");
    for (int t = seg.tokens.begin; t < seg.tokens.end; ++t)
      if (ep.labels[std::size_t(t)] != seg.type) fail("label inside segment " + std::to_string(i) + " disagrees");
    token_cursor = seg.tokens.end;
    action_cursor = seg.action_end;
  }
  if (token_cursor != int(ep.tokens.size())) fail("segments do not cover every token");
  if (action_cursor != int(ep.actions.size())) fail("segments do not cover every action");

  world::Scene s = ep.initial_scene(layouts);
  for (std::size_t i = 0; i < ep.segments.size(); ++i) {
    const auto& seg = ep.segments[i];
    const world::Scene start = s;
    for (int a = seg.action_begin; a < seg.action_end; ++a) {
      const auto r = world::step(s, ep.actions[std::size_t(a)]);
      if (!r.ok) fail("action " + std::to_string(a) + " failed: " + std::string(world::name(r.reason)));
    }
    if (!world::subgoal_satisfied(start, s, seg.spec)) fail("segment " + std::to_string(i) + " does not satisfy its subgoal");
  }
  if (!goal_satisfied(s, ep.task)) fail("final scene does not satisfy the task goal");
}

Json to_json(const Episode& ep) {
  Json j;
  j["episode_id"] = ep.id;
  j["scene"] = {{"seed", ep.scene_seed}, {"pool", std::string(world::name(ep.pool))}};
  j["task"] = {{"type", std::string(name(ep.task.type))}, {"args", args_json(ep.task.args)}};
  j["instruction"] = ep.tokens;
  Json labels = Json::array();
  for (auto l : ep.labels) labels.push_back(std::string(world::name(l)));
  j["gold_labels"] = labels;
  Json segs = Json::array();
  for (const auto& s : ep.segments) {
    segs.push_back({{"tokens", {s.tokens.begin, s.tokens.end}},
                    {"type", std::string(world::name(s.type))},
                    {"spec", world::to_json(s.spec)},
                    {"actions", {s.action_begin, s.action_end}}});
  }
  j["segments"] = segs;
  Json actions = Json::array();
  for (const auto& a : ep.actions) actions.push_back(world::to_json(a));
  j["demonstration"] = actions;
  return j;
}

Episode episode_from_json(const Json& j) {
  try {
    Episode ep;
    ep.id = j.at("episode_id").get<std::string>();
    ep.scene_seed = j.at("scene").at("seed").get<std::uint64_t>();
    const auto pool = world::parse_pool(j.at("scene").at("pool").get<std::string>());
    if (!pool) throw DataError("unknown pool");
    ep.pool = *pool;
    const auto type = parse_task_type(j.at("task").at("type").get<std::string>());
    if (!type) throw DataError("unknown task type");
    ep.task.type = *type;
    ep.task.args = args_from(j.at("task").at("args"));
    ep.tokens = j.at("instruction").get<std::vector<std::string>>();
    for (const auto& l : j.at("gold_labels")) ep.labels.push_back(subgoal_type_from(l));
    for (const auto& s : j.at("segments")) {
      EpisodeSegment seg;
      seg.tokens = {s.at("tokens").at(0).get<int>(), s.at("tokens").at(1).get<int>()};
      seg.type = subgoal_type_from(s.at("type"));
      seg.spec = world::subgoal_from_json(s.at("spec"));
      seg.action_begin = s.at("actions").at(0).get<int>();
      seg.action_end = s.at("actions").at(1).get<int>();
      ep.segments.push_back(seg);
      ep.task.specs.push_back(seg.spec);
    }
    for (const auto& a : j.at("demonstration")) ep.actions.push_back(world::action_from_json(a));
    return ep;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed episode record: ") + e.what());
  }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Episode>& episodes) {
  std::string text;
  for (const auto& ep : episodes) {
    text += to_json(ep).dump();
    text += '\n';
  }
  write_file(path, text);
}

std::vector<Episode> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Episode> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(episode_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

SplitMap build_generalization_splits(const Dataset& d) {
  SplitMap splits;
  auto ids = [](const std::vector<Episode>& eps, auto keep) {
    std::vector<std::string> out;
    for (const auto& e : eps)
      if (keep(e.task.type)) out.push_back(e.id);
    return out;
  };
  auto any = [](TaskType) { return true; };
  splits["standard-seen"] = ids(d.valid_seen, any);
  splits["standard-unseen"] = ids(d.valid_unseen, any);
  splits["pick2-seen"] = ids(d.valid_seen, [](TaskType t) { return t == TaskType::PickTwoPlace; });
  splits["pick2-unseen"] = ids(d.valid_unseen, [](TaskType t) { return t == TaskType::PickTwoPlace; });
  splits["stack-seen"] = ids(d.valid_seen, [](TaskType t) { return t == TaskType::StackPlace; });
  splits["stack-unseen"] = ids(d.valid_unseen, [](TaskType t) { return t == TaskType::StackPlace; });
  splits["filtered-train"] = ids(d.train, [](TaskType t) { return !is_held_out(t); });
  splits["filtered-valid-seen"] = ids(d.valid_seen, [](TaskType t) { return !is_held_out(t); });
  for (const auto& [name, list] : splits) {
    if (list.empty()) throw ConfigError("generalization split '" + name + "' is empty; increase episode counts");
  }
  return splits;
}

std::set<std::pair<SubgoalType, SubgoalType>> subgoal_bigrams(const std::vector<const Episode*>& episodes) {
  std::set<std::pair<SubgoalType, SubgoalType>> out;
  for (const Episode* ep : episodes)
    for (std::size_t i = 1; i < ep->segments.size(); ++i) out.insert({ep->segments[i - 1].type, ep->segments[i].type});
  return out;
}

std::uint64_t vocabulary_hash(const std::set<std::string>& vocab) {
  std::string joined;
  for (const auto& w : vocab) {
    joined += w;
    joined += '\n';
  }
  return fnv1a(joined);
}

void write_dataset(const std::filesystem::path& dir, const Dataset& d, const SplitMap& splits, const Json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  Json files = Json::object();
  auto emit = [&](const char* file, const std::vector<Episode>& eps) {
    write_jsonl(dir / file, eps);
    files[file] = {{"episodes", eps.size()}, {"fnv1a", hex64(fnv1a(read_file(dir / file)))}};
  };
  emit("train.jsonl", d.train);
  emit("valid_seen.jsonl", d.valid_seen);
  emit("valid_unseen.jsonl", d.valid_unseen);

  Json split_json = Json::object();
  for (const auto& [name, ids] : splits) split_json[name] = ids;
  write_file(dir / "splits.json", split_json.dump(1) + "\n");

  Json manifest = Json::object();
  manifest["format_version"] = kFormatVersion;
  manifest["vocabulary_hash"] = hex64(vocabulary_hash(generator_vocabulary()));
  manifest["files"] = files;
  manifest["resamples"] = d.stats.resamples;
  Json per_task = Json::object();
  for (int t = 0; t < kNumTaskTypes; ++t) per_task[std::string(name(TaskType(t)))] = d.stats.per_task[std::size_t(t)];
  manifest["episodes_per_task"] = per_task;
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::map<std::string, const Episode*> LoadedDataset::by_id() const {
  std::map<std::string, const Episode*> out;
  for (const auto* list : {&dataset.train, &dataset.valid_seen, &dataset.valid_unseen})
    for (const auto& e : *list) out[e.id] = &e;
  return out;
}

std::vector<const Episode*> LoadedDataset::split(const std::string& name) const {
  const auto index = by_id();
  std::vector<const Episode*> out;
  if (name == "train" || name == "valid_seen" || name == "valid_unseen") {
    const auto& list = name == "train" ? dataset.train : name == "valid_seen" ? dataset.valid_seen : dataset.valid_unseen;
    for (const auto& e : list) out.push_back(&e);
    return out;
  }
  auto it = splits.find(name);
  if (it == splits.end()) {
    std::string known = "train, valid_seen, valid_unseen";
    for (const auto& [k, _] : splits) known += ", " + k;
    throw NotFoundError("unknown split '" + name + "' (known: " + known + ")");
  }
  for (const auto& id : it->second) {
    auto e = index.find(id);
    if (e == index.end()) throw DataError("split '" + name + "' references missing episode " + id);
    out.push_back(e->second);
  }
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  LoadedDataset out;
  out.manifest = Json::parse(read_file(dir / "manifest.json"));
  if (out.manifest.value("format_version", 0) != kFormatVersion) {
    throw DataError(dir.string() + "/manifest.json: unsupported dataset format version");
  }
  const std::string vocab = hex64(vocabulary_hash(generator_vocabulary()));
  if (out.manifest.value("vocabulary_hash", std::string()) != vocab) {
    throw DataError(dir.string() + ": dataset vocabulary hash does not match this build's generator");
  }
  out.dataset.train = read_jsonl(dir / "train.jsonl");
  out.dataset.valid_seen = read_jsonl(dir / "valid_seen.jsonl");
  out.dataset.valid_unseen = read_jsonl(dir / "valid_unseen.jsonl");
  const Json splits = Json::parse(read_file(dir / "splits.json"));
  for (const auto& [k, v] : splits.items()) out.splits[k] = v.get<std::vector<std::string>>();
  return out;
}

}  // namespace mif::tasks
