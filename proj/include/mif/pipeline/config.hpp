#pragma once

#include "mif/controller/controller.hpp"
#include "mif/evaluation/evaluation.hpp"
#include "mif/policy/policy.hpp"
#include "mif/tasks/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mif::pipeline {

enum class Profile { Desk, PaperReference };
std::string_view name(Profile p);

struct ExperimentConfig {
  Profile profile = Profile::Desk;
  std::uint64_t seed = 1;

  // Data.
  int train_episodes = 3000;
  int valid_seen_episodes = 300;
  int valid_unseen_episodes = 300;
  double slice_probability = 0.25;
  std::string task_weights = "1,1,1,1,1,1,1";
  std::string layouts;  // empty: built-in floorplans

  // Controller.
  std::size_t controller_embedding_dim = 100;
  std::size_t controller_hidden_dim = 128;
  double controller_learning_rate = 1e-3;
  int controller_batch_size = 8;
  int controller_max_epochs = 20;
  int controller_patience = 3;
  std::string controller_train_split = "train";
  std::string controller_valid_split = "standard-seen";

  // Policies.
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 64;
  double learning_rate = 1e-4;
  int batch_size = 8;
  int max_epochs = 20;
  int patience = 3;
  double clip_norm = 5.0;
  double lstm_dropout = 0.3;
  double lang_dropout = 0.0;
  double vision_dropout = 0.0;
  double input_dropout = 0.0;
  double attn_dropout = 0.0;
  double actor_dropout = 0.0;
  double action_loss_weight = 1.0;
  double mask_loss_weight = 1.0;
  bool detach_handoff = false;
  bool freeze_encoder = false;
  std::string policy_train_split = "train";
  std::string policy_valid_split = "standard-seen";

  // Evaluation.
  std::vector<std::string> eval_splits = {"standard-seen", "standard-unseen", "pick2-seen",
                                          "pick2-unseen",  "stack-seen",      "stack-unseen"};
  evaluation::PlanSource eval_plan = evaluation::PlanSource::Controller;
  evaluation::PlanSource warmup_plan = evaluation::PlanSource::Gold;
  int max_failures = 10;

  std::string output_dir = "runs/default";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Defaults of a profile; paper-reference switches the policy to 100/512.
ExperimentConfig profile_defaults(Profile p);

// Parses `key = value` lines ('#' starts a comment). The profile key, if
// present, selects the defaults the remaining keys override. Unknown or
// repeated keys and malformed values raise ConfigError naming origin:line.
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies `key=value` overrides in order.
void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides);

// Canonical text with every key, in declaration order.
std::string to_text(const ExperimentConfig& config);
std::vector<std::string> config_keys();

// Over every key but output_dir.
std::string config_hash(const ExperimentConfig& config);
// Over the keys that determine the generated dataset.
std::string data_hash(const ExperimentConfig& config);

// output_dir unless MIF_OUTPUT_DIR is set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

tasks::DatasetConfig dataset_config(const ExperimentConfig& config);
controller::ControllerConfig controller_config(const ExperimentConfig& config);
policy::PolicyDims policy_dims(const ExperimentConfig& config);
policy::PolicyTrainConfig policy_train_config(const ExperimentConfig& config, bool modular);

}  // namespace mif::pipeline
