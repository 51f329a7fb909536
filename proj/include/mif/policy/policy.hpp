#pragma once

#include "mif/controller/controller.hpp"
#include "mif/numerics/adam.hpp"
#include "mif/numerics/checkpoint.hpp"
#include "mif/numerics/tape.hpp"
#include "mif/tasks/dataset.hpp"
#include "mif/tasks/vocabulary.hpp"
#include "mif/world/observation.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mif::policy {

using tasks::Episode;
using tasks::Vocabulary;
using world::SubgoalType;

// Environment actions are ActionType 0..7; index 8 of the action head is
// STOP. The action embedding table reuses row 8 as the start-of-episode
// previous action, since STOP itself is never fed back.
inline constexpr std::size_t kEnvActions = world::kNumActionTypes - 1;
inline constexpr std::size_t kActionLogits = world::kNumActionTypes;
inline constexpr int kStopIndex = int(world::ActionType::Stop);
inline constexpr int kStartAction = kStopIndex;

// Decoder indices: 0..7 are the subgoal modules, 8 the monolithic decoder.
inline constexpr int kNumModules = world::kNumSubgoalTypes;
inline constexpr int kMonolithic = kNumModules;

enum class ModelKind { Monolithic, Modular };
std::string_view name(ModelKind k);

struct PolicyDims {
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 64;
};

struct PolicyModel {
  ModelKind kind = ModelKind::Monolithic;
  PolicyDims dims;
  Vocabulary vocab;
  ParameterSet params;

  static PolicyModel init_monolithic(Vocabulary vocab, PolicyDims dims, std::uint64_t seed);
  // Fresh modular model with independently initialised decoders.
  static PolicyModel init_modular(Vocabulary vocab, PolicyDims dims, std::uint64_t seed);

  bool has_decoder(int decoder) const;
  // Width of e_t = [a_prev; o_t; x_hat].
  std::size_t step_input_dim() const;
};

std::string decoder_prefix(int decoder);

// Shared parts are carried over once; the monolithic attention projection
// and LSTM are copied into every module.
PolicyModel init_modules_from_monolithic(const PolicyModel& monolithic);

// Ordered (type, span) list produced by the controller; the runner keeps the
// current module index.
struct ExecutionPlan {
  std::vector<controller::LabeledSpan> segments;
  std::size_t size() const noexcept { return segments.size(); }
};

ExecutionPlan gold_plan(const Episode& episode);
ExecutionPlan controller_plan(const controller::ControllerModel& controller, const Episode& episode);

// Compact training view of an episode. Observation features are binary, so
// only the indices of ones are kept.
struct PolicyExample {
  std::string id;
  std::vector<int> tokens;
  std::vector<std::vector<std::uint16_t>> observations;  // actions.size() + 1 entries
  std::vector<world::Action> actions;
  struct Segment {
    SubgoalType type;
    int begin;
    int end;
  };
  std::vector<Segment> segments;
};

PolicyExample make_example(const Vocabulary& vocab, const Episode& episode,
                           const world::LayoutPools& layouts = world::builtin_layouts());
std::vector<PolicyExample> make_examples(const Vocabulary& vocab, const std::vector<const Episode*>& episodes,
                                         int workers = 1);
// The example restricted to one segment, starting from the start action.
PolicyExample slice_example(const PolicyExample& example, int segment);
Tensor observation_tensor(const std::vector<std::uint16_t>& active);

// Per-token encodings x (N x D) from the shared bidirectional encoder.
Var encode_instruction(Tape& tape, const PolicyModel& model, const std::vector<int>& token_ids);

struct Attention {
  Var attended;
  Var weights;
};
// z = (W_x h)^T x, alpha = softmax(z), x_hat = alpha^T x.
Attention attend(Tape& tape, const PolicyModel& model, int decoder, Var h_prev, Var x);

struct DecoderState {
  Var h;
  Var c;
  int prev_action = kStartAction;
};

struct StepOutput {
  DecoderState state;
  Var action_logits;
  Var target_logits;
  Var attention;
};

DecoderState initial_state(Tape& tape, const PolicyModel& model);
// `dropout` (may be null) multiplies h_t on its way into the heads.
StepOutput decode_step(Tape& tape, const PolicyModel& model, int decoder, const DecoderState& state,
                       const Tensor& observation, Var x, const Tensor* dropout = nullptr);

struct TeacherForcedOptions {
  bool modular = false;
  // Hidden states crossing segment boundaries become constants.
  bool detach_handoff = false;
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
  // If >= 0 only loss terms of that segment are counted.
  int only_segment = -1;
  double action_weight = 1.0;
  double target_weight = 1.0;
};

struct StepTrace {
  int time = 0;
  int decoder = 0;
  int segment = -1;
  bool stop = false;
  int expected_action = 0;
  Tensor action_logits;
  double action_loss = 0.0;
  double target_loss = 0.0;
};

// Sum of action cross-entropies plus target-slot cross-entropies on
// interaction steps. Monolithic mode supervises a single STOP after the last
// action; modular mode supervises STOP at the end of every segment, with the
// successor starting from the predecessor's last committed state.
Var teacher_forced_loss(Tape& tape, const PolicyModel& model, const PolicyExample& example,
                        const TeacherForcedOptions& options, std::vector<StepTrace>* trace = nullptr);

struct RolloutLimits {
  int max_steps = 100;
  int max_failures = 10;
};

enum class StopReason { Stop, StepLimit, FailureBudget };
std::string_view name(StopReason r);

struct Handoff {
  std::size_t plan_index = 0;
  int step = 0;
  Tensor h;
  Tensor c;
  int prev_action = kStartAction;
};

struct Trajectory {
  std::vector<world::Action> actions;
  std::vector<world::StepResult> results;
  world::Scene final_scene;
  StopReason reason = StopReason::Stop;
  int failures = 0;
  // Modular rollouts: state each module started from.
  std::vector<Handoff> handoffs;
};

// Greedy inference over one instruction; owns its tape.
class PolicyRunner {
 public:
  PolicyRunner(const PolicyModel& model, const std::vector<std::string>& tokens);

  void select(int decoder);
  int decoder() const noexcept { return decoder_; }
  // Computes (but does not commit) the step from the committed state.
  const StepOutput& propose(const world::Observation& observation);
  world::Action greedy() const;
  // Commits the last proposal with the action actually taken.
  void commit(world::ActionType taken);
  const DecoderState& state() const noexcept { return state_; }

 private:
  const PolicyModel& model_;
  Tape tape_;
  Var x_;
  DecoderState state_;
  StepOutput proposal_;
  bool has_proposal_ = false;
  int decoder_ = kMonolithic;
};

Trajectory rollout_monolithic(const PolicyModel& model, const std::vector<std::string>& tokens,
                              const world::Scene& scene, const RolloutLimits& limits);
Trajectory rollout_modular(const PolicyModel& model, const ExecutionPlan& plan, const std::vector<std::string>& tokens,
                           const world::Scene& scene, const RolloutLimits& limits);

struct PolicyTrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 8;
  int max_epochs = 20;
  int patience = 3;
  double clip_norm = 5.0;
  double dropout = 0.3;
  double action_weight = 1.0;
  double target_weight = 1.0;
  std::uint64_t seed = 1;
  bool detach_handoff = false;
  bool freeze_encoder = false;
};

struct PolicyEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct PolicyTrainingLog {
  double initial_train_loss = 0.0;
  double initial_valid_loss = 0.0;
  std::vector<PolicyEpoch> epochs;
  int best_epoch = 0;
};

using PolicyEpochCallback = std::function<void(const PolicyEpoch&)>;

// Mean per-example teacher-forced loss without dropout.
double mean_loss(const PolicyModel& model, const std::vector<PolicyExample>& examples, bool modular);

// One Adam step on the batch; returns the batch's summed loss.
double train_step(PolicyModel& model, AdamState& adam, const std::vector<const PolicyExample*>& batch,
                  const PolicyTrainConfig& config, std::uint64_t step_index);

// Adam on the teacher-forced loss with early stopping on validation loss.
// `model.kind` selects monolithic or modular supervision.
void fit_policy(PolicyModel& model, const std::vector<PolicyExample>& train, const std::vector<PolicyExample>& valid,
                const PolicyTrainConfig& config, PolicyTrainingLog* log = nullptr,
                const PolicyEpochCallback& on_epoch = {});

PolicyModel train_monolithic(const Vocabulary& vocab, const std::vector<PolicyExample>& train,
                             const std::vector<PolicyExample>& valid, PolicyDims dims,
                             const PolicyTrainConfig& config, PolicyTrainingLog* log = nullptr,
                             const PolicyEpochCallback& on_epoch = {});
PolicyModel finetune_modular(const PolicyModel& monolithic, const std::vector<PolicyExample>& train,
                             const std::vector<PolicyExample>& valid, const PolicyTrainConfig& config,
                             PolicyTrainingLog* log = nullptr, const PolicyEpochCallback& on_epoch = {});

struct StopAccuracy {
  std::array<int, kNumModules> correct{};
  std::array<int, kNumModules> total{};
};
// Teacher-forced argmax accuracy of the STOP prediction at segment ends, per module.
StopAccuracy stop_accuracy(const PolicyModel& modular, const std::vector<PolicyExample>& examples);
// Teacher-forced per-step argmax action accuracy (STOP steps included).
double action_accuracy(const PolicyModel& model, const std::vector<PolicyExample>& examples);

Checkpoint policy_checkpoint(const PolicyModel& model, const std::string& config_text);
// With `expected` set, the model is built at those dimensions and every
// mis-shaped tensor is reported.
PolicyModel policy_from_checkpoint(const Checkpoint& checkpoint, std::optional<PolicyDims> expected = std::nullopt);

}  // namespace mif::policy
