#include "mif/errors.hpp"
#include "mif/evaluation/evaluation.hpp"
#include "mif/io.hpp"
#include "mif/world/observation.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace mif;
using namespace mif::evaluation;
using mif::world::Json;
using S = world::SubgoalType;

namespace {

const tasks::Dataset& dataset() {
  static const tasks::Dataset d = [] {
    tasks::DatasetConfig c;
    c.master_seed = 31;
    c.train = 60;
    c.valid_seen = 60;
    c.valid_unseen = 60;
    return tasks::build_dataset(c);
  }();
  return d;
}

std::vector<const tasks::Episode*> all_episodes() {
  std::vector<const tasks::Episode*> out;
  for (const auto* split : {&dataset().train, &dataset().valid_seen, &dataset().valid_unseen})
    for (const auto& e : *split) out.push_back(&e);
  return out;
}

// Expert that hands over at every segment end, exercising modular plumbing.
class ModularExpert : public Agent {
 public:
  std::string name() const override { return "modular-expert"; }
  bool modular() const override { return true; }
  void begin(const tasks::Episode& e) override {
    ep_ = &e;
    cursor_ = 0;
    segment_ = -1;
  }
  void enter_segment(S type) override {
    ++segment_;
    ASSERT_LT(std::size_t(segment_), ep_->segments.size());
    EXPECT_EQ(type, ep_->segments[std::size_t(segment_)].type);
  }
  world::Action act(const world::Observation&) override {
    if (segment_ < 0 || int(cursor_) >= ep_->segments[std::size_t(segment_)].action_end) return world::Action::stop();
    return ep_->actions[cursor_];
  }
  void commit(const world::Action&) override { ++cursor_; }

 private:
  const tasks::Episode* ep_ = nullptr;
  std::size_t cursor_ = 0;
  int segment_ = -1;
};

class CountingAgent : public StopAgent {
 public:
  void begin(const tasks::Episode&) override { commits = 0; }
  void commit(const world::Action&) override { ++commits; }
  int commits = 0;
};

SubgoalOutcome outcome(S type, bool success, int expert, int agent) {
  SubgoalOutcome o;
  o.type = type;
  o.success = success;
  o.expert_length = expert;
  o.agent_length = agent;
  o.end = success ? "success" : "stop";
  return o;
}

EpisodeResult result(std::string id, std::vector<SubgoalOutcome> subgoals, int completed, int total, int expert,
                     int agent) {
  EpisodeResult r;
  r.episode_id = std::move(id);
  r.task_type = "pick_place";
  r.subgoals = std::move(subgoals);
  for (std::size_t i = 0; i < r.subgoals.size(); ++i) r.subgoals[i].index = int(i);
  r.completed = completed;
  r.total = total;
  r.expert_length = expert;
  r.agent_length = agent;
  r.end = "stop";
  return r;
}

std::vector<EpisodeResult> hand_fixture() {
  return {
      result("e1", {outcome(S::GoTo, true, 10, 10), outcome(S::PickUp, true, 1, 1)}, 2, 2, 11, 11),
      result("e2", {outcome(S::GoTo, true, 10, 20), outcome(S::PickUp, false, 1, 3)}, 1, 2, 20, 40),
      result("e3", {outcome(S::GoTo, false, 6, 22), outcome(S::PickUp, true, 2, 4)}, 0, 2, 8, 30),
      result("e4", {outcome(S::GoTo, true, 4, 4)}, 1, 1, 4, 8),
      result("e5", {outcome(S::GoTo, true, 0, 0)}, 1, 1, 0, 0),
      result("e6", {outcome(S::GoTo, false, 3, 16)}, 0, 1, 3, 16),
  };
}

std::vector<std::string> ids(const std::vector<EpisodeResult>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.episode_id);
  return out;
}

}  // namespace

TEST(PathWeighted, Formula) {
  EXPECT_DOUBLE_EQ(path_weighted(true, 10, 10), 1.0);
  EXPECT_DOUBLE_EQ(path_weighted(true, 10, 20), 0.5);
  EXPECT_DOUBLE_EQ(path_weighted(true, 10, 4), 1.0);
  EXPECT_DOUBLE_EQ(path_weighted(false, 10, 10), 0.0);
  EXPECT_DOUBLE_EQ(path_weighted(false, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(path_weighted(true, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(path_weighted(true, 0, 3), 0.0);
  double prev = 1.0;
  for (int l = 0; l < 50; ++l) {
    const double w = path_weighted(true, 7, l);
    EXPECT_LE(w, prev);
    prev = w;
  }
  EXPECT_THROW(path_weighted(true, -1, 2), DomainError);
}

TEST(Harness, ExpertScoresFullMarksOnEverySplit) {
  ExpertAgent expert;
  ModularExpert modular;
  EvalOptions options;
  options.plan = PlanSource::Gold;
  for (const auto* ep : all_episodes()) {
    const auto r = evaluate_episode(expert, *ep, options);
    ASSERT_EQ(r.subgoals.size(), ep->segments.size());
    for (const auto& s : r.subgoals) {
      EXPECT_TRUE(s.success) << ep->id << " subgoal " << s.index;
      // Clean and Heat hold once the device is switched on, before the
      // trailing ToggleOff and Pickup of the demonstration.
      if (s.type == S::Clean || s.type == S::Heat) EXPECT_LE(s.agent_length, s.expert_length);
      else EXPECT_EQ(s.agent_length, s.expert_length) << ep->id << " " << world::name(s.type);
      EXPECT_DOUBLE_EQ(path_weighted(s.success, s.expert_length, s.agent_length), 1.0);
    }
    EXPECT_EQ(r.completed, r.total) << ep->id;
    EXPECT_DOUBLE_EQ(r.weighted_completion(), 1.0);
    EXPECT_TRUE(r.goal_reached);
    EXPECT_EQ(r.end, "stop");

    const auto m = eval_full_trajectory(modular, *ep, options);
    EXPECT_EQ(m.completed, m.total) << ep->id;
    EXPECT_EQ(m.agent_length, m.expert_length);
    EXPECT_EQ(m.plan, m.types);
  }
}

TEST(Harness, ImmediateStopScoresZeroOnNonVacuousSubgoals) {
  StopAgent stop;
  int vacuous = 0, pickups = 0;
  for (const auto* ep : all_episodes()) {
    const auto r = evaluate_episode(stop, *ep);
    int leading_vacuous = 0;
    bool prefix = true;
    for (const auto& s : r.subgoals) {
      EXPECT_EQ(s.agent_length, 0);
      const bool trivially_done = s.type == S::GoTo && s.expert_length == 0;
      EXPECT_EQ(s.success, trivially_done) << ep->id << " subgoal " << s.index;
      vacuous += trivially_done;
      if (s.type == S::PickUp) {
        ++pickups;
        EXPECT_FALSE(s.success);
      }
      if (prefix && trivially_done) ++leading_vacuous;
      else prefix = false;
    }
    EXPECT_EQ(r.agent_length, 0);
    EXPECT_LE(r.completed, leading_vacuous) << ep->id;
    EXPECT_FALSE(r.goal_reached);
  }
  EXPECT_GT(pickups, 100);
  (void)vacuous;
}

TEST(Harness, FirstSubgoalHasNoWarmUpAndScenesAreFresh) {
  CountingAgent counter;
  const auto& ep = dataset().valid_seen[0];
  eval_subgoal_independent(counter, ep, 0);
  EXPECT_EQ(counter.commits, 0);
  eval_subgoal_independent(counter, ep, 2);
  EXPECT_EQ(counter.commits, ep.segments[2].action_begin);

  ExpertAgent expert;
  std::vector<SubgoalOutcome> forward, backward;
  for (std::size_t i = 0; i < ep.segments.size(); ++i) forward.push_back(eval_subgoal_independent(expert, ep, i));
  for (std::size_t i = ep.segments.size(); i-- > 0;) backward.insert(backward.begin(), eval_subgoal_independent(expert, ep, i));
  EXPECT_EQ(forward, backward);
  EXPECT_THROW(eval_subgoal_independent(expert, ep, ep.segments.size()), IndexError);
}

TEST(Harness, BrokenExpertPrefixIsAHarnessError) {
  tasks::Episode ep = dataset().train[0];
  ep.actions[0] = world::Action::interact(world::ActionType::Put, 0);
  ExpertAgent expert;
  EXPECT_THROW(eval_subgoal_independent(expert, ep, 1), HarnessError);
}

TEST(Harness, ControllerPlanNeedsAController) {
  const auto model = policy::PolicyModel::init_modular(tasks::Vocabulary::from_episodes(dataset().train), {8, 8}, 1);
  PolicyAgent agent(model);
  EXPECT_THROW(eval_full_trajectory(agent, dataset().valid_seen[0]), ContractError);
}

TEST(Harness, ParallelEvaluationMatchesSerial) {
  const auto vocab = tasks::Vocabulary::from_episodes(dataset().train);
  const auto mono = policy::PolicyModel::init_monolithic(vocab, {}, 4);
  const auto mod = policy::init_modules_from_monolithic(mono);
  std::vector<const tasks::Episode*> eps;
  for (std::size_t i = 0; i < 12; ++i) eps.push_back(&dataset().valid_unseen[i]);
  EvalOptions options;
  options.plan = PlanSource::Gold;
  for (const auto* model : {&mono, &mod}) {
    AgentFactory f = [model] { return std::make_unique<PolicyAgent>(*model); };
    const auto serial = evaluate_episodes(f, eps, options, 1);
    const auto parallel = evaluate_episodes(f, eps, options, 3);
    EXPECT_EQ(serial, parallel);
    for (const auto& r : serial) {
      EXPECT_LE(r.agent_length, 2 * r.expert_length + 10 * r.total);
      for (const auto& s : r.subgoals) EXPECT_LE(s.agent_length, 2 * s.expert_length + 10);
    }
  }
}

TEST(Aggregate, HandFixture) {
  const auto rs = hand_fixture();
  const auto rep = aggregate(rs, ids(rs), "fixture", "hand");
  ASSERT_EQ(rep.cells.size(), 2u);
  const TypeCell* go = rep.cell(S::GoTo);
  const TypeCell* pick = rep.cell(S::PickUp);
  ASSERT_TRUE(go && pick);
  EXPECT_EQ(go->instances, 6);
  EXPECT_EQ(pick->instances, 3);
  EXPECT_NEAR(go->weighted, 100.0 * 3.5 / 6.0, 1e-12);
  EXPECT_NEAR(go->success, 100.0 * 4.0 / 6.0, 1e-12);
  EXPECT_NEAR(pick->weighted, 50.0, 1e-12);
  EXPECT_NEAR(pick->success, 100.0 * 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.average, (100.0 * 3.5 / 6.0 + 50.0) / 2.0, 1e-12);
  EXPECT_NEAR(rep.completion, 100.0 * 3.5 / 6.0, 1e-12);
  EXPECT_NEAR(rep.weighted_completion, 100.0 * 2.75 / 6.0, 1e-12);
  EXPECT_TRUE(go->low_count);
  EXPECT_EQ(rep.cell(S::Heat), nullptr);
  EXPECT_EQ(rep.episodes, 6);
}

TEST(Aggregate, AverageIsUnweightedOverTypes) {
  std::vector<EpisodeResult> rs{result("a", {outcome(S::Heat, true, 8, 10)}, 1, 1, 8, 10)};
  for (int i = 0; i < 5; ++i)
    rs.push_back(result("b" + std::to_string(i), {outcome(S::Cool, i < 2, 3, 3)}, 0, 1, 3, 3));
  const auto rep = aggregate(rs, ids(rs), "s", "m");
  EXPECT_NEAR(rep.cell(S::Heat)->weighted, 80.0, 1e-12);
  EXPECT_NEAR(rep.cell(S::Cool)->weighted, 40.0, 1e-12);
  EXPECT_NEAR(rep.average, 60.0, 1e-12);
}

TEST(Aggregate, CompletionAndAllSuccess) {
  const auto half = result("h", {}, 2, 4, 10, 10);
  EXPECT_DOUBLE_EQ(half.completion(), 0.5);
  EXPECT_NEAR(aggregate({half}, {"h"}, "s", "m").completion, 50.0, 1e-12);

  ExpertAgent expert;
  std::vector<EpisodeResult> rs;
  for (const auto& e : dataset().valid_seen) rs.push_back(evaluate_episode(expert, e, {PlanSource::Gold}));
  const auto rep = aggregate(rs, ids(rs), "valid_seen", "expert");
  for (const auto& c : rep.cells) {
    EXPECT_DOUBLE_EQ(c.weighted, 100.0);
    EXPECT_DOUBLE_EQ(c.success, 100.0);
  }
  EXPECT_DOUBLE_EQ(rep.average, 100.0);
  EXPECT_DOUBLE_EQ(rep.completion, 100.0);
  EXPECT_DOUBLE_EQ(rep.weighted_completion, 100.0);
}

TEST(Aggregate, ManifestChecks) {
  auto rs = hand_fixture();
  EXPECT_THROW(aggregate(rs, {}, "empty", "m"), ConfigError);
  auto manifest = ids(rs);
  manifest.pop_back();
  EXPECT_THROW(aggregate(rs, manifest, "s", "m"), DataError);
  manifest = ids(rs);
  manifest.push_back("missing");
  EXPECT_THROW(aggregate(rs, manifest, "s", "m"), DataError);
  rs.push_back(rs.front());
  EXPECT_THROW(aggregate(rs, ids(hand_fixture()), "s", "m"), DataError);
}

TEST(Aggregate, OrderIndependentAndReaggregatesExactly) {
  auto rs = hand_fixture();
  const auto a = aggregate(rs, ids(rs), "fixture", "hand");
  std::reverse(rs.begin(), rs.end());
  const auto b = aggregate(rs, ids(rs), "fixture", "hand");
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());

  const auto dir = std::filesystem::temp_directory_path() / "mif_eval_test";
  std::filesystem::create_directories(dir);
  write_results(dir / "results.jsonl", rs);
  const auto back = read_results(dir / "results.jsonl");
  EXPECT_EQ(back, rs);
  const auto c = aggregate(back, ids(back), "fixture", "hand");
  EXPECT_EQ(to_json(c).dump(), to_json(a).dump());
  EXPECT_EQ(to_json(report_from_json(Json::parse(to_json(a).dump()))).dump(), to_json(a).dump());
  std::filesystem::remove_all(dir);
}

TEST(Report, TableLayout) {
  const auto rs = hand_fixture();
  const auto rep = aggregate(rs, ids(rs), "fixture", "hand");
  const std::string table = format_table({rep});
  EXPECT_NE(table.find("Avg."), std::string::npos);
  EXPECT_NE(table.find("fixture (hand)"), std::string::npos);
  EXPECT_NE(table.find("58.3*"), std::string::npos);
  EXPECT_NE(table.find("50.0*"), std::string::npos);
  EXPECT_NE(table.find("54.2"), std::string::npos);
  EXPECT_NE(table.find("      -"), std::string::npos);
}

TEST(Results, MalformedLineNamesFileAndLine) {
  const auto path = std::filesystem::temp_directory_path() / "mif_bad_results.jsonl";
  write_file(path, to_json(hand_fixture()[0]).dump() + "\n{\"episode\": 3}\n");
  try {
    read_results(path);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("mif_bad_results.jsonl:2"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}
