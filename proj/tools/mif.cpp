#include "mif/errors.hpp"
#include "mif/io.hpp"
#include "mif/pipeline/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 1;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("-s,--set", c.overrides, "override a config key (key=value)");
  app->add_option("-w,--workers", c.workers, "worker threads for data generation and evaluation")
      ->check(CLI::PositiveNumber);
  app->add_flag("--force", c.force, "proceed past provenance mismatches");
  app->add_flag("-q,--quiet", c.quiet, "no progress output");
}

mif::pipeline::ExperimentConfig resolve(const Common& c) {
  auto cfg = c.config_path.empty() ? mif::pipeline::ExperimentConfig{} : mif::pipeline::load_config(c.config_path);
  mif::pipeline::apply_overrides(cfg, c.overrides);
  return cfg;
}

mif::pipeline::StageOptions stage(const Common& c) { return {c.workers, c.force, c.quiet ? nullptr : &std::cerr}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular instruction following: data, controller, policies, evaluation"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-data", "generate the episode dataset and split manifest");
  auto* ctrl = app.add_subcommand("train-controller", "train the CRF instruction segmenter");
  auto* mono = app.add_subcommand("train-monolithic", "train the monolithic policy");
  auto* mod = app.add_subcommand("finetune-modular", "initialise modules from the monolithic policy and fine-tune");
  auto* eval = app.add_subcommand("eval", "evaluate policies on the configured splits");
  auto* report = app.add_subcommand("report", "aggregate per-episode results into reports");
  auto* inspect = app.add_subcommand("inspect", "print an episode or a checkpoint");
  auto* config = app.add_subcommand("config", "print the resolved config and its hashes");
  for (auto* sub : {gen, ctrl, mono, mod, eval, report, inspect, config}) add_common(sub, common);

  mif::pipeline::EvalRequest request;
  eval->add_option("--model", request.models, "expert, stop, monolithic, modular")
      ->default_str("monolithic modular");
  eval->add_option("--split", request.splits, "splits to evaluate (default: eval_splits)");

  std::string results_dir, splits_file, out_dir;
  report->add_option("--results", results_dir, "per-episode results directory");
  report->add_option("--splits", splits_file, "split manifest (splits.json)");
  report->add_option("--out", out_dir, "directory for report.json and report.txt");

  std::string episode_id, checkpoint_path;
  auto* target = inspect->add_option_group("target", "exactly one of --episode, --checkpoint");
  auto* by_episode = target->add_option("--episode", episode_id, "episode id in the generated dataset");
  target->add_option("--checkpoint", checkpoint_path, "checkpoint file");
  target->require_option(1);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(common);
    const auto opts = stage(common);
    if (gen->parsed()) mif::pipeline::gen_data(cfg, opts);
    if (ctrl->parsed()) mif::pipeline::train_controller_stage(cfg, opts);
    if (mono->parsed()) mif::pipeline::train_monolithic_stage(cfg, opts);
    if (mod->parsed()) mif::pipeline::finetune_modular_stage(cfg, opts);
    if (eval->parsed()) {
      if (request.models.empty()) request.models = mif::pipeline::kEvalModels;
      mif::pipeline::eval_stage(cfg, opts, request);
    }
    if (report->parsed()) {
      if (results_dir.empty() && splits_file.empty() && out_dir.empty()) {
        mif::pipeline::report_stage(cfg, opts);
      } else {
        const mif::pipeline::RunLayout run(mif::pipeline::resolve_output_dir(cfg));
        const auto files = mif::pipeline::build_report(
            results_dir.empty() ? run.results() : std::filesystem::path(results_dir),
            mif::pipeline::read_splits(splits_file.empty() ? run.data() / "splits.json" : std::filesystem::path(splits_file)),
            cfg.eval_splits);
        const std::filesystem::path out = out_dir.empty() ? run.reports() : std::filesystem::path(out_dir);
        std::filesystem::create_directories(out);
        mif::write_file(out / "report.json", files.json);
        mif::write_file(out / "report.txt", files.text);
        if (!common.quiet) std::cout << files.text;
      }
    }
    if (inspect->parsed()) {
      std::cout << (by_episode->count() ? mif::pipeline::inspect_episode(cfg, episode_id)
                                        : mif::pipeline::inspect_checkpoint(checkpoint_path));
    }
    if (config->parsed()) {
      std::cout << mif::pipeline::to_text(cfg) << "# config_hash " << mif::pipeline::config_hash(cfg)
                << "\n# data_hash " << mif::pipeline::data_hash(cfg) << "\n# output "
                << mif::pipeline::resolve_output_dir(cfg).string() << "\n";
    }
  } catch (const mif::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
