#include "mif/pipeline/pipeline.hpp"

#include "mif/errors.hpp"
#include "mif/io.hpp"
#include "mif/numerics/checkpoint.hpp"
#include "mif/world/layout.hpp"
#include "mif/world/observation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <set>

namespace mif::pipeline {
namespace fs = std::filesystem;
using world::Json;

namespace {

void say(const StageOptions& o, const std::string& line) {
  if (o.log) *o.log << line << std::endl;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Built-in pools unless the config names a layout file.
class Layouts {
 public:
  explicit Layouts(const ExperimentConfig& c) {
    if (!c.layouts.empty()) owned_ = std::make_unique<world::LayoutPools>(world::load_layouts(c.layouts));
  }
  const world::LayoutPools& get() const { return owned_ ? *owned_ : world::builtin_layouts(); }

 private:
  std::unique_ptr<world::LayoutPools> owned_;
};

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw NotFoundError("missing " + path.string() + "; run `mif " + producer + "` first");
}

void mismatch(const StageOptions& o, const std::string& message) {
  if (!o.force) throw ConfigError(message + " (pass --force to proceed anyway)");
  say(o, "warning: " + message);
}

Json provenance(const ExperimentConfig& c) {
  return {{"config_hash", config_hash(c)}, {"data_hash", data_hash(c)}, {"seed", c.seed}};
}

tasks::LoadedDataset load_checked(const ExperimentConfig& c, const StageOptions& o) {
  const RunLayout run(resolve_output_dir(c));
  require(run.data() / "manifest.json", "gen-data");
  tasks::LoadedDataset data = tasks::load_dataset(run.data());
  const std::string have = data.manifest.value("data_hash", std::string());
  if (have != data_hash(c))
    mismatch(o, "dataset in " + run.data().string() + " has data hash " + have + " but the config gives " +
                    data_hash(c));
  return data;
}

// Config text stored inside artifacts; the output location is not part of it.
std::string recorded_config(const ExperimentConfig& c) {
  std::string out;
  std::size_t pos = 0;
  const std::string text = to_text(c);
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos + 1);
    if (line.rfind("output_dir", 0) != 0) out += line;
    pos = end + 1;
  }
  return out;
}

void stamp(Checkpoint& ck, const ExperimentConfig& c, const std::string& train_split) {
  ck.metadata["config_hash"] = config_hash(c);
  ck.metadata["data_hash"] = data_hash(c);
  ck.metadata["seed"] = std::to_string(c.seed);
  ck.metadata["train_split"] = train_split;
}

// Checkpoint provenance against the current dataset and its training split.
void check_checkpoint(const Checkpoint& ck, const fs::path& path, const ExperimentConfig& c,
                      const tasks::LoadedDataset& data, const StageOptions& o) {
  const auto get = [&](const std::string& k) {
    auto it = ck.metadata.find(k);
    return it == ck.metadata.end() ? std::string("<none>") : it->second;
  };
  if (get("data_hash") != data_hash(c))
    mismatch(o, path.string() + " was trained on data hash " + get("data_hash") + ", the dataset has " +
                    data_hash(c));
  const std::string split = get("train_split");
  if (split == "<none>") return;
  const std::string expected = hex64(tasks::Vocabulary::from_episodes(data.split(split)).hash());
  if (get("vocabulary_hash") != expected)
    mismatch(o, path.string() + " has vocabulary hash " + get("vocabulary_hash") + " but split '" + split +
                    "' of the dataset gives " + expected);
}

void append_line(std::string& log, const Json& j) { log += j.dump() + "\n"; }

policy::PolicyModel load_policy(const fs::path& path, const std::string& producer, const ExperimentConfig& c,
                                const tasks::LoadedDataset& data, const StageOptions& o) {
  require(path, producer);
  const Checkpoint ck = load_checkpoint(path);
  check_checkpoint(ck, path, c, data, o);
  return policy::policy_from_checkpoint(ck, policy_dims(c));
}

void check_split_names(const tasks::LoadedDataset& data, const std::vector<std::string>& names) {
  for (const auto& n : names) (void)data.split(n);
}

}  // namespace

void gen_data(const ExperimentConfig& c, const StageOptions& o) {
  const RunLayout run(resolve_output_dir(c));
  const Layouts layouts(c);
  say(o, "generating " + std::to_string(c.train_episodes + c.valid_seen_episodes + c.valid_unseen_episodes) +
             " episodes (seed " + std::to_string(c.seed) + ")");
  const tasks::Dataset d = tasks::build_dataset(dataset_config(c), layouts.get(), o.workers);
  int checked = 0;
  for (const auto* split : {&d.train, &d.valid_seen, &d.valid_unseen})
    for (const auto& e : *split) {
      tasks::validate_episode(e, layouts.get());
      ++checked;
    }
  const tasks::SplitMap splits = tasks::build_generalization_splits(d);
  fs::create_directories(run.data());
  Json extra = provenance(c);
  extra["validated_episodes"] = checked;
  extra["config"] = recorded_config(c);
  tasks::write_dataset(run.data(), d, splits, extra);
  write_file(run.root / "config.txt", to_text(c));
  say(o, "wrote " + run.data().string() + " (" + std::to_string(d.stats.resamples) + " scene resamples)");
}

void train_controller_stage(const ExperimentConfig& c, const StageOptions& o) {
  const RunLayout run(resolve_output_dir(c));
  const auto data = load_checked(c, o);
  const auto train = data.split(c.controller_train_split);
  const auto valid = data.split(c.controller_valid_split);
  std::string log;
  controller::ControllerTrainingLog tl;
  say(o, "training controller on " + std::to_string(train.size()) + " episodes");
  const auto model = controller::train_controller(train, valid, controller_config(c), &tl,
                                                  [&](const controller::ControllerEpoch& e) {
                                                    say(o, "controller epoch " + std::to_string(e.epoch) +
                                                               " loss " + fixed(e.train_loss) + " exact " +
                                                               fixed(e.valid_exact));
                                                  });
  append_line(log, {{"epoch", 0}, {"train_loss", tl.initial_loss}});
  for (const auto& e : tl.epochs)
    append_line(log, {{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"valid_exact", e.valid_exact},
                      {"valid_type", e.valid_type}});
  Json summary = provenance(c);
  summary["best_epoch"] = tl.best_epoch;
  for (const std::string split : {"standard-seen", "standard-unseen"}) {
    const auto stats = controller::evaluate_controller(model, data.split(split));
    summary[split] = {{"episodes", stats.episodes},
                      {"exact_match", double(stats.exact) / double(stats.episodes)},
                      {"type_match", double(stats.type_only) / double(stats.episodes)}};
    say(o, split + " exact match " + fixed(double(stats.exact) / double(stats.episodes)));
  }
  Checkpoint ck = controller::controller_checkpoint(model, recorded_config(c));
  stamp(ck, c, c.controller_train_split);
  fs::create_directories(run.logs());
  save_checkpoint(run.controller(), ck);
  write_file(run.logs() / "controller.jsonl", log);
  write_file(run.logs() / "controller_eval.json", summary.dump(2) + "\n");
}

namespace {

void write_policy_log(const fs::path& path, const policy::PolicyTrainingLog& tl) {
  std::string log;
  append_line(log, {{"epoch", 0}, {"train_loss", tl.initial_train_loss}, {"valid_loss", tl.initial_valid_loss}});
  for (const auto& e : tl.epochs)
    append_line(log, {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_loss", e.valid_loss}});
  append_line(log, {{"best_epoch", tl.best_epoch}});
  write_file(path, log);
}

}  // namespace

void train_monolithic_stage(const ExperimentConfig& c, const StageOptions& o) {
  const RunLayout run(resolve_output_dir(c));
  const auto data = load_checked(c, o);
  const Layouts layouts(c);
  const auto train_eps = data.split(c.policy_train_split);
  const auto vocab = tasks::Vocabulary::from_episodes(train_eps);
  std::vector<policy::PolicyExample> train(train_eps.size()), valid;
  for (std::size_t i = 0; i < train_eps.size(); ++i) train[i] = policy::make_example(vocab, *train_eps[i], layouts.get());
  for (const auto* e : data.split(c.policy_valid_split)) valid.push_back(policy::make_example(vocab, *e, layouts.get()));
  say(o, "training monolithic policy on " + std::to_string(train.size()) + " episodes");
  policy::PolicyTrainingLog tl;
  const auto model = policy::train_monolithic(vocab, train, valid, policy_dims(c), policy_train_config(c, false), &tl,
                                              [&](const policy::PolicyEpoch& e) {
                                                say(o, "monolithic epoch " + std::to_string(e.epoch) + " train " +
                                                           fixed(e.train_loss) + " valid " + fixed(e.valid_loss));
                                              });
  Checkpoint ck = policy::policy_checkpoint(model, recorded_config(c));
  stamp(ck, c, c.policy_train_split);
  fs::create_directories(run.logs());
  save_checkpoint(run.monolithic(), ck);
  write_policy_log(run.logs() / "monolithic.jsonl", tl);
}

void finetune_modular_stage(const ExperimentConfig& c, const StageOptions& o) {
  const RunLayout run(resolve_output_dir(c));
  const auto data = load_checked(c, o);
  const Layouts layouts(c);
  const auto mono = load_policy(run.monolithic(), "train-monolithic", c, data, o);
  if (mono.kind != policy::ModelKind::Monolithic) throw CheckpointError(run.monolithic().string() + " is not monolithic");
  std::vector<policy::PolicyExample> train, valid;
  for (const auto* e : data.split(c.policy_train_split)) train.push_back(policy::make_example(mono.vocab, *e, layouts.get()));
  for (const auto* e : data.split(c.policy_valid_split)) valid.push_back(policy::make_example(mono.vocab, *e, layouts.get()));
  say(o, "fine-tuning modular policy on " + std::to_string(train.size()) + " episodes");
  policy::PolicyTrainingLog tl;
  const auto model = policy::finetune_modular(mono, train, valid, policy_train_config(c, true), &tl,
                                              [&](const policy::PolicyEpoch& e) {
                                                say(o, "modular epoch " + std::to_string(e.epoch) + " train " +
                                                           fixed(e.train_loss) + " valid " + fixed(e.valid_loss));
                                              });
  const auto stops = policy::stop_accuracy(model, valid);
  Json stop = provenance(c);
  for (int m = 0; m < policy::kNumModules; ++m) {
    const auto total = stops.total[std::size_t(m)];
    stop[std::string(world::name(world::SubgoalType(m)))] = {
        {"correct", stops.correct[std::size_t(m)]},
        {"total", total},
        {"accuracy", total ? double(stops.correct[std::size_t(m)]) / double(total) : 0.0}};
  }
  Checkpoint ck = policy::policy_checkpoint(model, recorded_config(c));
  stamp(ck, c, c.policy_train_split);
  fs::create_directories(run.logs());
  save_checkpoint(run.modular(), ck);
  write_policy_log(run.logs() / "modular.jsonl", tl);
  write_file(run.logs() / "modular_stop.json", stop.dump(2) + "\n");
}

void eval_stage(const ExperimentConfig& c, const StageOptions& o, const EvalRequest& request) {
  const RunLayout run(resolve_output_dir(c));
  const auto data = load_checked(c, o);
  const Layouts layouts(c);
  const std::vector<std::string> splits = request.splits.empty() ? c.eval_splits : request.splits;
  check_split_names(data, splits);

  // Each episode is evaluated once even when it sits in several splits.
  std::set<std::string> wanted;
  for (const auto& s : splits)
    for (const auto* e : data.split(s)) wanted.insert(e->id);
  const auto index = data.by_id();
  std::vector<const tasks::Episode*> episodes;
  for (const auto& id : wanted) episodes.push_back(index.at(id));

  std::optional<controller::ControllerModel> ctrl;
  std::string controller_hash = "<none>";
  for (const auto& model_name : request.models) {
    evaluation::EvalOptions eo;
    eo.plan = c.eval_plan;
    eo.warmup = c.warmup_plan;
    eo.max_failures = c.max_failures;
    eo.layouts = &layouts.get();
    std::optional<policy::PolicyModel> model;
    Json meta = provenance(c);
    meta["model"] = model_name;
    evaluation::AgentFactory factory;
    if (model_name == "expert") {
      factory = [] { return std::make_unique<evaluation::ExpertAgent>(); };
    } else if (model_name == "stop") {
      factory = [] { return std::make_unique<evaluation::StopAgent>(); };
    } else if (model_name == "monolithic" || model_name == "modular") {
      const bool modular = model_name == "modular";
      const fs::path path = modular ? run.modular() : run.monolithic();
      model = load_policy(path, modular ? "finetune-modular" : "train-monolithic", c, data, o);
      if ((model->kind == policy::ModelKind::Modular) != modular)
        throw CheckpointError(path.string() + " holds a " + std::string(policy::name(model->kind)) + " model");
      meta["checkpoint_fnv1a"] = hex64(fnv1a(read_file(path)));
      const bool needs_controller =
          modular && (c.eval_plan == evaluation::PlanSource::Controller ||
                      c.warmup_plan == evaluation::PlanSource::Controller);
      if (needs_controller && !ctrl) {
        require(run.controller(), "train-controller");
        const Checkpoint ck = load_checkpoint(run.controller());
        check_checkpoint(ck, run.controller(), c, data, o);
        ctrl = controller::controller_from_checkpoint(ck);
        controller_hash = hex64(fnv1a(read_file(run.controller())));
      }
      if (needs_controller) {
        eo.controller = &*ctrl;
        meta["controller_fnv1a"] = controller_hash;
      }
      const policy::PolicyModel* m = &*model;
      factory = [m] { return std::make_unique<evaluation::PolicyAgent>(*m); };
    } else {
      throw ConfigError("unknown model '" + model_name + "' (expected expert, stop, monolithic or modular)");
    }
    meta["plan"] = std::string(evaluation::name(eo.plan));
    meta["warmup"] = std::string(evaluation::name(eo.warmup));
    say(o, "evaluating " + model_name + " on " + std::to_string(episodes.size()) + " episodes");
    const auto results = evaluation::evaluate_episodes(factory, episodes, eo, o.workers);
    std::map<std::string, const evaluation::EpisodeResult*> by_id;
    for (const auto& r : results) by_id[r.episode_id] = &r;

    const fs::path dir = run.results() / model_name;
    fs::create_directories(dir);
    for (const auto& s : splits) {
      std::vector<evaluation::EpisodeResult> out;
      for (const auto* e : data.split(s)) out.push_back(*by_id.at(e->id));
      evaluation::write_results(dir / (s + ".jsonl"), out);
    }
    write_file(dir / "meta.json", meta.dump(2) + "\n");
  }
}

tasks::SplitMap read_splits(const fs::path& path) {
  const Json j = Json::parse(read_file(path));
  tasks::SplitMap out;
  for (const auto& [k, v] : j.items()) out[k] = v.get<std::vector<std::string>>();
  return out;
}

ReportFiles build_report(const fs::path& results_dir, const tasks::SplitMap& splits,
                         const std::vector<std::string>& split_order) {
  if (!fs::is_directory(results_dir)) throw NotFoundError("missing " + results_dir.string() + "; run `mif eval` first");
  std::vector<std::string> models;
  for (const auto& entry : fs::directory_iterator(results_dir))
    if (entry.is_directory()) models.push_back(entry.path().filename().string());
  const std::vector<std::string> preferred = {"expert", "stop", "monolithic", "modular"};
  std::sort(models.begin(), models.end(), [&](const std::string& a, const std::string& b) {
    const auto ia = std::find(preferred.begin(), preferred.end(), a) - preferred.begin();
    const auto ib = std::find(preferred.begin(), preferred.end(), b) - preferred.begin();
    return ia != ib ? ia < ib : a < b;
  });
  if (models.empty()) throw NotFoundError("no model results under " + results_dir.string() + "; run `mif eval` first");

  std::vector<evaluation::MetricsReport> reports;
  for (const auto& split : split_order) {
    auto manifest = splits.find(split);
    if (manifest == splits.end()) throw NotFoundError("split '" + split + "' is not in the split manifest");
    for (const auto& m : models) {
      const fs::path file = results_dir / m / (split + ".jsonl");
      if (!fs::exists(file)) continue;
      auto rep = evaluation::aggregate(evaluation::read_results(file), manifest->second, split, m);
      if (fs::exists(results_dir / m / "meta.json"))
        rep.provenance = Json::parse(read_file(results_dir / m / "meta.json"));
      reports.push_back(std::move(rep));
    }
  }
  if (reports.empty()) throw NotFoundError("no results for the requested splits under " + results_dir.string());
  Json j = Json::array();
  for (const auto& r : reports) j.push_back(evaluation::to_json(r));
  return {Json{{"reports", j}}.dump(2) + "\n", evaluation::format_table(reports)};
}

void report_stage(const ExperimentConfig& c, const StageOptions& o) {
  const RunLayout run(resolve_output_dir(c));
  require(run.data() / "splits.json", "gen-data");
  const auto files = build_report(run.results(), read_splits(run.data() / "splits.json"), c.eval_splits);
  fs::create_directories(run.reports());
  write_file(run.reports() / "report.json", files.json);
  write_file(run.reports() / "report.txt", files.text);
  say(o, files.text);
}

std::string inspect_episode(const ExperimentConfig& c, const std::string& id) {
  const RunLayout run(resolve_output_dir(c));
  require(run.data() / "manifest.json", "gen-data");
  const auto data = tasks::load_dataset(run.data());
  const auto index = data.by_id();
  const auto it = index.find(id);
  if (it == index.end()) throw NotFoundError("no episode '" + id + "' in " + run.data().string());
  const tasks::Episode& ep = *it->second;
  const Layouts layouts(c);
  const world::Scene scene = ep.initial_scene(layouts.get());

  std::string out = "episode " + ep.id + "\n";
  out += "task " + std::string(tasks::name(ep.task.type)) + ", " + std::string(world::name(ep.pool)) +
         " pool, scene seed " + std::to_string(ep.scene_seed) + "\n";
  out += "instruction:\n";
  for (std::size_t i = 0; i < ep.tokens.size(); ++i) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %3zu  %-14s %s\n", i, ep.tokens[i].c_str(),
                  std::string(world::name(ep.labels[i])).c_str());
    out += buf;
  }
  out += "segments:\n";
  for (std::size_t i = 0; i < ep.segments.size(); ++i) {
    const auto& s = ep.segments[i];
    char buf[192];
    std::snprintf(buf, sizeof buf, "  %zu  %-7s tokens %d-%d  actions %d-%d  %s\n", i,
                  std::string(world::name(s.type)).c_str(), s.tokens.begin, s.tokens.end, s.action_begin,
                  s.action_end, world::describe(s.spec, scene).c_str());
    out += buf;
  }
  out += "actions:\n";
  for (std::size_t t = 0; t < ep.actions.size(); ++t) {
    const auto& a = ep.actions[t];
    out += "  " + std::to_string(t) + "  " + std::string(world::name(a.type));
    if (a.target_slot >= 0) out += " slot " + std::to_string(a.target_slot);
    out += "\n";
  }
  return out;
}

std::string inspect_checkpoint(const fs::path& path) {
  require(path, "train-controller, train-monolithic or finetune-modular");
  const Checkpoint ck = load_checkpoint(path);
  std::string out = "checkpoint " + path.filename().string() + "\nkind " + ck.kind + "\n";
  for (const auto& [k, v] : ck.metadata) {
    if (k == "vocabulary") {
      out += "  vocabulary " + std::to_string(std::count(v.begin(), v.end(), '\n')) + " words\n";
      continue;
    }
    out += "  " + k + " " + v + "\n";
  }
  out += "tensors " + std::to_string(ck.params.size()) + "\n";
  for (ParamId p = 0; p < ck.params.size(); ++p) {
    out += "  " + ck.params.name(p) + " " + shape_string(ck.params.value(p).shape()) + "\n";
  }
  out += "scalars " + std::to_string(ck.params.scalar_count()) + "\n";
  return out;
}

void run_pipeline(const ExperimentConfig& c, const StageOptions& o) {
  gen_data(c, o);
  train_controller_stage(c, o);
  train_monolithic_stage(c, o);
  finetune_modular_stage(c, o);
  eval_stage(c, o);
  report_stage(c, o);
}

}  // namespace mif::pipeline
