#pragma once

#include "mif/pipeline/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mif::pipeline {

// Artifact locations under one output directory.
struct RunLayout {
  std::filesystem::path root;

  explicit RunLayout(std::filesystem::path r) : root(std::move(r)) {}
  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path controller() const { return root / "controller.ckpt"; }
  std::filesystem::path monolithic() const { return root / "monolithic.ckpt"; }
  std::filesystem::path modular() const { return root / "modular.ckpt"; }
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path results() const { return root / "results"; }
  std::filesystem::path reports() const { return root / "reports"; }
};

struct StageOptions {
  int workers = 1;
  // Proceed past provenance mismatches.
  bool force = false;
  // Progress lines; null is silent.
  std::ostream* log = nullptr;
};

// Stages read and write only files under resolve_output_dir(config).
void gen_data(const ExperimentConfig& config, const StageOptions& options = {});
void train_controller_stage(const ExperimentConfig& config, const StageOptions& options = {});
void train_monolithic_stage(const ExperimentConfig& config, const StageOptions& options = {});
void finetune_modular_stage(const ExperimentConfig& config, const StageOptions& options = {});

inline const std::vector<std::string> kEvalModels = {"monolithic", "modular"};

struct EvalRequest {
  // Any of expert, stop, monolithic, modular.
  std::vector<std::string> models = kEvalModels;
  // Empty: the config's eval_splits.
  std::vector<std::string> splits;
};
void eval_stage(const ExperimentConfig& config, const StageOptions& options = {}, const EvalRequest& request = {});

struct ReportFiles {
  std::string json;
  std::string text;
};
// Aggregates results/<model>/<split>.jsonl against the split manifest.
ReportFiles build_report(const std::filesystem::path& results_dir, const tasks::SplitMap& splits,
                         const std::vector<std::string>& split_order);
tasks::SplitMap read_splits(const std::filesystem::path& splits_json);
// Writes reports/report.json and reports/report.txt.
void report_stage(const ExperimentConfig& config, const StageOptions& options = {});

std::string inspect_episode(const ExperimentConfig& config, const std::string& episode_id);
std::string inspect_checkpoint(const std::filesystem::path& path);

// gen-data through report.
void run_pipeline(const ExperimentConfig& config, const StageOptions& options = {});

}  // namespace mif::pipeline
