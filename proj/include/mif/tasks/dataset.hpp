#pragma once

#include "mif/tasks/language.hpp"
#include "mif/tasks/planner.hpp"
#include "mif/tasks/task.hpp"
#include "mif/world/layout.hpp"
#include "mif/world/serialize.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mif::tasks {

using world::Json;

struct EpisodeSegment {
  TokenSpan tokens;
  SubgoalType type = SubgoalType::GoTo;
  SubgoalSpec spec;
  int action_begin = 0;
  int action_end = 0;
  int action_count() const { return action_end - action_begin; }
};

struct Episode {
  std::string id;
  std::uint64_t scene_seed = 0;
  world::Pool pool = world::Pool::Seen;
  TaskInstance task;
  std::vector<std::string> tokens;
  std::vector<SubgoalType> labels;
  std::vector<EpisodeSegment> segments;
  std::vector<world::Action> actions;

  world::Scene initial_scene(const world::LayoutPools& layouts = world::builtin_layouts()) const;
};

struct DatasetConfig {
  int train = 3000;
  int valid_seen = 300;
  int valid_unseen = 300;
  std::uint64_t master_seed = 1;
  std::array<double, kNumTaskTypes> task_weights = {1, 1, 1, 1, 1, 1, 1};
  double slice_probability = 0.25;
  int max_attempts = 50;
};

struct GenerationStats {
  int episodes = 0;
  int resamples = 0;
  std::array<int, kNumTaskTypes> per_task{};
};

struct Dataset {
  std::vector<Episode> train;
  std::vector<Episode> valid_seen;
  std::vector<Episode> valid_unseen;
  GenerationStats stats;
};

// Generates one episode, resampling the scene on grounding or planning
// failures. Throws DataError if max_attempts is exhausted.
Episode build_episode(const std::string& id, std::uint64_t seed, world::Pool pool, TaskType type,
                      const DatasetConfig& config, const world::LayoutPools& layouts,
                      GenerationStats* stats = nullptr);

// workers > 1 generates episodes on that many threads; output is identical.
Dataset build_dataset(const DatasetConfig& config, const world::LayoutPools& layouts = world::builtin_layouts(),
                      int workers = 1);

// Throws DataError naming the first broken Episode invariant.
void validate_episode(const Episode& episode, const world::LayoutPools& layouts = world::builtin_layouts());

Json to_json(const Episode& episode);
Episode episode_from_json(const Json& j);

void write_jsonl(const std::filesystem::path& path, const std::vector<Episode>& episodes);
std::vector<Episode> read_jsonl(const std::filesystem::path& path);

using SplitMap = std::map<std::string, std::vector<std::string>>;

// standard-seen, standard-unseen, pick2-*, stack-*, filtered-train and
// filtered-valid-seen (valid-seen without held-out task types).
SplitMap build_generalization_splits(const Dataset& dataset);

std::set<std::pair<SubgoalType, SubgoalType>> subgoal_bigrams(const std::vector<const Episode*>& episodes);

// Writes train/valid jsonl files, splits.json and manifest.json.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset, const SplitMap& splits,
                   const Json& manifest_extra);

struct LoadedDataset {
  Dataset dataset;
  SplitMap splits;
  Json manifest;
  // Episode lookup across all files.
  std::map<std::string, const Episode*> by_id() const;
  std::vector<const Episode*> split(const std::string& name) const;
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

std::uint64_t vocabulary_hash(const std::set<std::string>& vocab);

}  // namespace mif::tasks
