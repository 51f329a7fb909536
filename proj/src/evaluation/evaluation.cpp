#include "mif/evaluation/evaluation.hpp"

#include "mif/errors.hpp"
#include "mif/io.hpp"
#include "mif/world/observation.hpp"
#include "mif/world/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace mif::evaluation {

double path_weighted(bool success, int expert_length, int agent_length) {
  if (expert_length < 0 || agent_length < 0) throw DomainError("path_weighted: negative path length");
  if (!success) return 0.0;
  const int longest = std::max(expert_length, agent_length);
  if (longest == 0) return 1.0;
  return double(expert_length) / double(longest);
}

double EpisodeResult::weighted_completion() const {
  if (completed == 0) return 0.0;
  return completion() * path_weighted(true, expert_length, agent_length);
}

PolicyAgent::PolicyAgent(const policy::PolicyModel& model) : model_(model) {}

std::string PolicyAgent::name() const { return std::string(policy::name(model_.kind)); }

bool PolicyAgent::modular() const { return model_.kind == policy::ModelKind::Modular; }

void PolicyAgent::begin(const Episode& episode) { runner_.emplace(model_, episode.tokens); }

void PolicyAgent::enter_segment(SubgoalType type) {
  if (modular()) runner_->select(int(type));
}

world::Action PolicyAgent::act(const world::Observation& observation) {
  if (!runner_) throw ContractError("PolicyAgent::act before begin");
  runner_->propose(observation);
  return runner_->greedy();
}

void PolicyAgent::commit(const world::Action& taken) { runner_->commit(taken.type); }

void ExpertAgent::begin(const Episode& episode) {
  episode_ = &episode;
  cursor_ = 0;
}

world::Action ExpertAgent::act(const world::Observation&) {
  if (!episode_ || cursor_ >= episode_->actions.size()) return world::Action::stop();
  return episode_->actions[cursor_];
}

void ExpertAgent::commit(const world::Action&) { ++cursor_; }

std::string_view name(PlanSource p) { return p == PlanSource::Gold ? "gold" : "controller"; }

namespace {

std::vector<SubgoalType> gold_types(const Episode& ep) {
  std::vector<SubgoalType> out;
  for (const auto& s : ep.segments) out.push_back(s.type);
  return out;
}

std::vector<SubgoalType> plan_types(const Episode& ep, PlanSource source, const EvalOptions& options) {
  if (source == PlanSource::Gold) return gold_types(ep);
  if (!options.controller) throw ContractError("controller plan requested without a controller");
  std::vector<SubgoalType> out;
  for (const auto& s : policy::controller_plan(*options.controller, ep).segments) out.push_back(s.type);
  return out;
}

// Prefix routing: the controller's types are used position by position when
// its plan has as many entries as the demonstration, else the gold types.
std::vector<SubgoalType> warmup_types(const Episode& ep, const EvalOptions& options) {
  if (options.warmup == PlanSource::Gold) return gold_types(ep);
  auto types = plan_types(ep, PlanSource::Controller, options);
  return types.size() == ep.segments.size() ? types : gold_types(ep);
}

world::Scene initial_scene(const Episode& ep, const EvalOptions& options) {
  return options.layouts ? ep.initial_scene(*options.layouts) : ep.initial_scene();
}

}  // namespace

SubgoalOutcome eval_subgoal_independent(Agent& agent, const Episode& ep, std::size_t index,
                                        const EvalOptions& options) {
  if (index >= ep.segments.size())
    throw IndexError("episode " + ep.id + " has no subgoal " + std::to_string(index));
  const auto route = agent.modular() ? warmup_types(ep, options) : gold_types(ep);
  world::Scene scene = initial_scene(ep, options);
  agent.begin(ep);
  for (std::size_t j = 0; j < index; ++j) {
    const auto& seg = ep.segments[j];
    agent.enter_segment(route[j]);
    for (int t = seg.action_begin; t < seg.action_end; ++t) {
      agent.act(world::observe(scene));
      const world::Action& a = ep.actions[std::size_t(t)];
      const world::StepResult r = world::step(scene, a);
      if (!r.ok)
        throw HarnessError("expert replay of " + ep.id + " failed at action " + std::to_string(t) + ": " +
                           std::string(world::name(r.reason)));
      agent.commit(a);
    }
  }
  const auto& seg = ep.segments[index];
  agent.enter_segment(route[index]);

  SubgoalOutcome out;
  out.index = int(index);
  out.type = seg.type;
  out.expert_length = seg.action_count();
  const world::Scene before = scene;
  if (world::subgoal_satisfied(before, scene, seg.spec)) {
    out.success = true;
    out.end = "success";
    return out;
  }
  const int limit = 2 * out.expert_length + 10;
  int failures = 0;
  out.end = "step_limit";
  while (out.agent_length < limit) {
    const world::Action a = agent.act(world::observe(scene));
    if (a.type == world::ActionType::Stop) {
      out.end = "stop";
      break;
    }
    const world::StepResult r = world::step(scene, a);
    agent.commit(a);
    ++out.agent_length;
    if (world::subgoal_satisfied(before, scene, seg.spec)) {
      out.success = true;
      out.end = "success";
      break;
    }
    if (!r.ok && ++failures >= options.max_failures) {
      out.end = "failure_budget";
      break;
    }
  }
  return out;
}

EpisodeResult eval_full_trajectory(Agent& agent, const Episode& ep, const EvalOptions& options) {
  EpisodeResult res;
  res.episode_id = ep.id;
  res.task_type = std::string(tasks::name(ep.task.type));
  res.types = gold_types(ep);
  res.total = int(ep.segments.size());
  res.expert_length = int(ep.actions.size());
  if (agent.modular()) {
    res.plan = plan_types(ep, options.plan, options);
    if (res.plan.empty()) throw HarnessError("empty execution plan for " + ep.id);
  }

  world::Scene scene = initial_scene(ep, options);
  world::Scene before = scene;
  auto credit = [&] {
    while (res.completed < res.total &&
           world::subgoal_satisfied(before, scene, ep.segments[std::size_t(res.completed)].spec)) {
      before = scene;
      ++res.completed;
    }
  };
  agent.begin(ep);
  std::size_t module = 0;
  if (agent.modular()) agent.enter_segment(res.plan[0]);
  credit();
  const int limit = 2 * res.expert_length + 10 * res.total;
  res.end = "step_limit";
  while (res.agent_length < limit) {
    const world::Action a = agent.act(world::observe(scene));
    if (a.type == world::ActionType::Stop) {
      if (agent.modular() && ++module < res.plan.size()) {
        agent.enter_segment(res.plan[module]);
        continue;
      }
      res.end = "stop";
      break;
    }
    const world::StepResult r = world::step(scene, a);
    agent.commit(a);
    ++res.agent_length;
    credit();
    if (!r.ok && ++res.failed_actions >= options.max_failures) {
      res.end = "failure_budget";
      break;
    }
  }
  res.goal_reached = tasks::goal_satisfied(scene, ep.task);
  return res;
}

EpisodeResult evaluate_episode(Agent& agent, const Episode& episode, const EvalOptions& options) {
  EpisodeResult res;
  if (options.full_trajectory) {
    res = eval_full_trajectory(agent, episode, options);
  } else {
    res.episode_id = episode.id;
    res.task_type = std::string(tasks::name(episode.task.type));
    res.types = gold_types(episode);
    res.total = int(episode.segments.size());
    res.expert_length = int(episode.actions.size());
    res.end = "skipped";
  }
  if (options.subgoals)
    for (std::size_t i = 0; i < episode.segments.size(); ++i)
      res.subgoals.push_back(eval_subgoal_independent(agent, episode, i, options));
  return res;
}

std::vector<EpisodeResult> evaluate_episodes(const AgentFactory& factory, const std::vector<const Episode*>& episodes,
                                             const EvalOptions& options, int workers) {
  std::vector<EpisodeResult> out(episodes.size());
  const int n = std::max(1, std::min<int>(workers, int(episodes.size())));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto run = [&](int w) {
    try {
      auto agent = factory();
      for (std::size_t i = std::size_t(w); i < episodes.size(); i += std::size_t(n))
        out[i] = evaluate_episode(*agent, *episodes[i], options);
    } catch (...) {
      errors[std::size_t(w)] = std::current_exception();
    }
  };
  if (n == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < n; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

const TypeCell* MetricsReport::cell(SubgoalType t) const {
  for (const auto& c : cells)
    if (c.type == t) return &c;
  return nullptr;
}

MetricsReport aggregate(const std::vector<EpisodeResult>& results, const std::vector<std::string>& manifest,
                        const std::string& split, const std::string& model) {
  if (manifest.empty()) throw ConfigError("split '" + split + "' is empty");
  const std::set<std::string> wanted(manifest.begin(), manifest.end());
  std::map<std::string, const EpisodeResult*> by_id;
  for (const auto& r : results) {
    if (!wanted.count(r.episode_id))
      throw DataError("result for " + r.episode_id + " is not in split '" + split + "'");
    if (!by_id.emplace(r.episode_id, &r).second) throw DataError("duplicate result for " + r.episode_id);
  }
  for (const auto& id : wanted)
    if (!by_id.count(id)) throw DataError("split '" + split + "' has no result for " + id);

  MetricsReport rep;
  rep.split = split;
  rep.model = model;
  rep.episodes = int(by_id.size());
  std::array<int, world::kNumSubgoalTypes> count{};
  std::array<double, world::kNumSubgoalTypes> success{}, weighted{};
  double completion = 0.0, weighted_completion = 0.0;
  int goals = 0;
  for (const auto& [id, r] : by_id) {
    for (const auto& s : r->subgoals) {
      const auto t = std::size_t(s.type);
      ++count[t];
      success[t] += s.success ? 1.0 : 0.0;
      weighted[t] += path_weighted(s.success, s.expert_length, s.agent_length);
    }
    completion += r->completion();
    weighted_completion += r->weighted_completion();
    goals += r->goal_reached ? 1 : 0;
  }
  double avg = 0.0, avg_unweighted = 0.0;
  for (int t = 0; t < world::kNumSubgoalTypes; ++t) {
    if (count[std::size_t(t)] == 0) continue;
    TypeCell c;
    c.type = SubgoalType(t);
    c.instances = count[std::size_t(t)];
    c.success = 100.0 * success[std::size_t(t)] / double(c.instances);
    c.weighted = 100.0 * weighted[std::size_t(t)] / double(c.instances);
    c.low_count = c.instances < kMinReportedInstances;
    avg += c.weighted;
    avg_unweighted += c.success;
    rep.cells.push_back(c);
  }
  if (!rep.cells.empty()) {
    rep.average = avg / double(rep.cells.size());
    rep.average_unweighted = avg_unweighted / double(rep.cells.size());
  }
  const double n = double(rep.episodes);
  rep.completion = 100.0 * completion / n;
  rep.weighted_completion = 100.0 * weighted_completion / n;
  rep.goal_success = 100.0 * double(goals) / n;
  return rep;
}

namespace {

SubgoalType type_from(const Json& j) {
  const auto t = world::parse_subgoal_type(j.get<std::string>());
  if (!t) throw DataError("unknown subgoal type '" + j.get<std::string>() + "'");
  return *t;
}

Json type_list(const std::vector<SubgoalType>& types) {
  Json out = Json::array();
  for (auto t : types) out.push_back(std::string(world::name(t)));
  return out;
}

std::vector<SubgoalType> types_from(const Json& j) {
  std::vector<SubgoalType> out;
  for (const auto& t : j) out.push_back(type_from(t));
  return out;
}

}  // namespace

Json to_json(const EpisodeResult& r) {
  Json subgoals = Json::array();
  for (const auto& s : r.subgoals) {
    subgoals.push_back({{"index", s.index},
                        {"type", std::string(world::name(s.type))},
                        {"success", s.success},
                        {"expert_length", s.expert_length},
                        {"agent_length", s.agent_length},
                        {"end", s.end}});
  }
  return {{"episode", r.episode_id},
          {"task", r.task_type},
          {"subgoals", subgoals},
          {"types", type_list(r.types)},
          {"plan", type_list(r.plan)},
          {"completed", r.completed},
          {"total", r.total},
          {"expert_length", r.expert_length},
          {"agent_length", r.agent_length},
          {"failed_actions", r.failed_actions},
          {"goal_reached", r.goal_reached},
          {"end", r.end}};
}

EpisodeResult episode_result_from_json(const Json& j) {
  EpisodeResult r;
  r.episode_id = j.at("episode").get<std::string>();
  r.task_type = j.at("task").get<std::string>();
  for (const auto& s : j.at("subgoals")) {
    SubgoalOutcome o;
    o.index = s.at("index").get<int>();
    o.type = type_from(s.at("type"));
    o.success = s.at("success").get<bool>();
    o.expert_length = s.at("expert_length").get<int>();
    o.agent_length = s.at("agent_length").get<int>();
    o.end = s.at("end").get<std::string>();
    r.subgoals.push_back(o);
  }
  r.types = types_from(j.at("types"));
  r.plan = types_from(j.at("plan"));
  r.completed = j.at("completed").get<int>();
  r.total = j.at("total").get<int>();
  r.expert_length = j.at("expert_length").get<int>();
  r.agent_length = j.at("agent_length").get<int>();
  r.failed_actions = j.at("failed_actions").get<int>();
  r.goal_reached = j.at("goal_reached").get<bool>();
  r.end = j.at("end").get<std::string>();
  if (r.completed < 0 || r.completed > r.total) throw DataError("completed count out of range for " + r.episode_id);
  return r;
}

void write_results(const std::filesystem::path& path, const std::vector<EpisodeResult>& results) {
  std::string text;
  for (const auto& r : results) text += to_json(r).dump() + '\n';
  write_file(path, text);
}

std::vector<EpisodeResult> read_results(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<EpisodeResult> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(episode_result_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Json to_json(const MetricsReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"type", std::string(world::name(c.type))},
                     {"instances", c.instances},
                     {"success", c.success},
                     {"path_weighted", c.weighted},
                     {"low_count", c.low_count}});
  }
  return {{"split", r.split},
          {"model", r.model},
          {"episodes", r.episodes},
          {"subgoal_success", cells},
          {"average", r.average},
          {"average_unweighted", r.average_unweighted},
          {"path_completion", r.completion},
          {"path_weighted_completion", r.weighted_completion},
          {"goal_success", r.goal_success},
          {"provenance", r.provenance}};
}

MetricsReport report_from_json(const Json& j) {
  MetricsReport r;
  r.split = j.at("split").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.episodes = j.at("episodes").get<int>();
  for (const auto& c : j.at("subgoal_success")) {
    TypeCell cell;
    cell.type = type_from(c.at("type"));
    cell.instances = c.at("instances").get<int>();
    cell.success = c.at("success").get<double>();
    cell.weighted = c.at("path_weighted").get<double>();
    cell.low_count = c.at("low_count").get<bool>();
    r.cells.push_back(cell);
  }
  r.average = j.at("average").get<double>();
  r.average_unweighted = j.at("average_unweighted").get<double>();
  r.completion = j.at("path_completion").get<double>();
  r.weighted_completion = j.at("path_weighted_completion").get<double>();
  r.goal_success = j.at("goal_success").get<double>();
  r.provenance = j.value("provenance", Json::object());
  return r;
}

std::string format_table(const std::vector<MetricsReport>& reports) {
  std::size_t label_width = 5;
  for (const auto& r : reports) label_width = std::max(label_width, r.split.size() + r.model.size() + 3);
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  std::string out = "split" + std::string(label_width - 5, ' ');
  for (int t = 0; t < world::kNumSubgoalTypes; ++t) out += pad(std::string(world::name(SubgoalType(t))), 8);
  out += pad("Avg.", 8) + pad("PC", 8) + pad("PW-PC", 8) + pad("Goal", 8) + '\n';
  for (const auto& r : reports) {
    std::string label = r.split + " (" + r.model + ")";
    out += label + std::string(label_width - label.size(), ' ');
    for (int t = 0; t < world::kNumSubgoalTypes; ++t) {
      const TypeCell* c = r.cell(SubgoalType(t));
      out += pad(c ? num(c->weighted) + (c->low_count ? "*" : "") : "-", 8);
    }
    out += pad(r.cells.empty() ? "-" : num(r.average), 8);
    out += pad(num(r.completion), 8) + pad(num(r.weighted_completion), 8) + pad(num(r.goal_success), 8) + '\n';
  }
  out += "* fewer than " + std::to_string(kMinReportedInstances) + " instances\n";
  return out;
}

}  // namespace mif::evaluation
