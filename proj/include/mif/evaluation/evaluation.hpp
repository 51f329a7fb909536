#pragma once

#include "mif/controller/controller.hpp"
#include "mif/policy/policy.hpp"
#include "mif/tasks/dataset.hpp"
#include "mif/world/serialize.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mif::evaluation {

using tasks::Episode;
using world::Json;
using world::SubgoalType;

// s * L* / max(L*, L_hat); 1 for a successful empty subgoal.
double path_weighted(bool success, int expert_length, int agent_length);

// Something that acts in the world one step at a time. The harness calls
// act() for a proposal and then commit() with the action actually executed,
// which during warm-up is the expert's.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  // Modular agents return STOP to hand control to the next plan entry.
  virtual bool modular() const { return false; }
  virtual void begin(const Episode& episode) = 0;
  virtual void enter_segment(SubgoalType type) { (void)type; }
  virtual world::Action act(const world::Observation& observation) = 0;
  virtual void commit(const world::Action& taken) = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

// Greedy decoding with a trained policy; the model must outlive the agent.
class PolicyAgent : public Agent {
 public:
  explicit PolicyAgent(const policy::PolicyModel& model);
  std::string name() const override;
  bool modular() const override;
  void begin(const Episode& episode) override;
  void enter_segment(SubgoalType type) override;
  world::Action act(const world::Observation& observation) override;
  void commit(const world::Action& taken) override;

 private:
  const policy::PolicyModel& model_;
  std::optional<policy::PolicyRunner> runner_;
};

// Replays the demonstration; STOP once it is exhausted.
class ExpertAgent : public Agent {
 public:
  std::string name() const override { return "expert"; }
  void begin(const Episode& episode) override;
  world::Action act(const world::Observation& observation) override;
  void commit(const world::Action& taken) override;

 private:
  const Episode* episode_ = nullptr;
  std::size_t cursor_ = 0;
};

class StopAgent : public Agent {
 public:
  std::string name() const override { return "stop"; }
  void begin(const Episode&) override {}
  world::Action act(const world::Observation&) override { return world::Action::stop(); }
  void commit(const world::Action&) override {}
};

enum class PlanSource { Controller, Gold };
std::string_view name(PlanSource p);

struct EvalOptions {
  // Full-trajectory plan for modular agents.
  PlanSource plan = PlanSource::Controller;
  // Module routing of the expert prefix in subgoal evaluation.
  PlanSource warmup = PlanSource::Gold;
  const controller::ControllerModel* controller = nullptr;
  // Floorplans the episodes were generated with; null means built-in.
  const world::LayoutPools* layouts = nullptr;
  int max_failures = 10;
  bool subgoals = true;
  bool full_trajectory = true;
};

struct SubgoalOutcome {
  int index = 0;
  SubgoalType type = SubgoalType::GoTo;
  bool success = false;
  int expert_length = 0;
  int agent_length = 0;
  std::string end;  // success, stop, step_limit, failure_budget

  friend bool operator==(const SubgoalOutcome&, const SubgoalOutcome&) = default;
};

struct EpisodeResult {
  std::string episode_id;
  std::string task_type;
  std::vector<SubgoalOutcome> subgoals;
  // Full trajectory.
  std::vector<SubgoalType> types;  // all subgoal types in order
  int completed = 0;
  int total = 0;
  int expert_length = 0;
  int agent_length = 0;
  int failed_actions = 0;
  bool goal_reached = false;
  std::string end;
  std::vector<SubgoalType> plan;  // modular plan actually executed

  double completion() const { return total == 0 ? 0.0 : double(completed) / double(total); }
  double weighted_completion() const;
  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

// The expert prefix up to subgoal `index` is replayed, then the agent acts
// until the subgoal holds, it stops, or a limit is hit. Throws HarnessError if
// the expert prefix fails to replay.
SubgoalOutcome eval_subgoal_independent(Agent& agent, const Episode& episode, std::size_t index,
                                        const EvalOptions& options = {});

// One rollout from the initial scene with in-order subgoal crediting.
EpisodeResult eval_full_trajectory(Agent& agent, const Episode& episode, const EvalOptions& options = {});

EpisodeResult evaluate_episode(Agent& agent, const Episode& episode, const EvalOptions& options = {});
// Results in input order; one agent per worker.
std::vector<EpisodeResult> evaluate_episodes(const AgentFactory& factory, const std::vector<const Episode*>& episodes,
                                             const EvalOptions& options = {}, int workers = 1);

inline constexpr int kMinReportedInstances = 50;

struct TypeCell {
  SubgoalType type = SubgoalType::GoTo;
  int instances = 0;
  double success = 0.0;   // percent
  double weighted = 0.0;  // percent, path weighted
  bool low_count = false;
};

struct MetricsReport {
  std::string split;
  std::string model;
  int episodes = 0;
  std::vector<TypeCell> cells;  // types present in the split, enum order
  double average = 0.0;              // unweighted mean of weighted cell values
  double average_unweighted = 0.0;   // same over unweighted success
  double completion = 0.0;
  double weighted_completion = 0.0;
  double goal_success = 0.0;
  Json provenance = Json::object();

  const TypeCell* cell(SubgoalType t) const;
};

// `manifest` lists the split's episode ids; every result must belong to it
// and every listed episode must have a result. Results are read in id order.
MetricsReport aggregate(const std::vector<EpisodeResult>& results, const std::vector<std::string>& manifest,
                        const std::string& split, const std::string& model);

Json to_json(const EpisodeResult& r);
EpisodeResult episode_result_from_json(const Json& j);
void write_results(const std::filesystem::path& path, const std::vector<EpisodeResult>& results);
std::vector<EpisodeResult> read_results(const std::filesystem::path& path);

Json to_json(const MetricsReport& r);
MetricsReport report_from_json(const Json& j);
// Rows are reports; columns are subgoal types, Avg., and the completion pair.
std::string format_table(const std::vector<MetricsReport>& reports);

}  // namespace mif::evaluation
