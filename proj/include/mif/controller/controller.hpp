#pragma once

#include "mif/numerics/checkpoint.hpp"
#include "mif/numerics/tape.hpp"
#include "mif/tasks/dataset.hpp"
#include "mif/tasks/vocabulary.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mif::controller {

using tasks::Episode;
using tasks::Vocabulary;
using world::SubgoalType;

inline constexpr std::size_t kNumLabels = world::kNumSubgoalTypes;

struct ControllerConfig {
  std::size_t embedding_dim = 100;
  std::size_t hidden_dim = 128;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_epochs = 20;
  // Epochs without a validation exact-match improvement before stopping.
  int patience = 3;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

// Token embeddings, a bidirectional LSTM, the unary projection U and the
// transition scores B plus a start vector.
struct ControllerModel {
  Vocabulary vocab;
  std::size_t embedding_dim = 0;
  std::size_t hidden_dim = 0;
  ParameterSet params;

  static ControllerModel init(Vocabulary vocab, const ControllerConfig& config);
};

// Maximal run of one label; `begin` inclusive, `end` exclusive.
struct LabeledSpan {
  int begin = 0;
  int end = 0;
  SubgoalType type = SubgoalType::GoTo;
  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

// N x K unary score matrix. Throws DomainError on an empty instruction.
Var unary_scores(Tape& tape, const ControllerModel& model, const std::vector<int>& token_ids);
Tensor unary_scores(const ControllerModel& model, const std::vector<std::string>& tokens);

Var controller_loss(Tape& tape, const ControllerModel& model, const Episode& episode);

std::vector<SubgoalType> predict_labels(const ControllerModel& model, const std::vector<std::string>& tokens);
std::vector<LabeledSpan> predict_segments(const ControllerModel& model, const std::vector<std::string>& tokens);

std::vector<LabeledSpan> segments_from_labels(const std::vector<SubgoalType>& labels);
std::vector<SubgoalType> labels_from_segments(const std::vector<LabeledSpan>& segments);
std::vector<LabeledSpan> gold_segments(const Episode& episode);

bool exact_match(const std::vector<LabeledSpan>& predicted, const std::vector<LabeledSpan>& gold);
// Only the sequence of types has to agree.
bool type_match(const std::vector<LabeledSpan>& predicted, const std::vector<LabeledSpan>& gold);

struct MatchStats {
  int episodes = 0;
  int exact = 0;
  int type_only = 0;
  double exact_accuracy() const { return episodes ? double(exact) / episodes : 0.0; }
  double type_accuracy() const { return episodes ? double(type_only) / episodes : 0.0; }
};

MatchStats corpus_match(const std::vector<std::vector<LabeledSpan>>& predicted,
                        const std::vector<std::vector<LabeledSpan>>& gold);
MatchStats evaluate_controller(const ControllerModel& model, const std::vector<const Episode*>& episodes);

struct ControllerEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_exact = 0.0;
  double valid_type = 0.0;
};

struct ControllerTrainingLog {
  double initial_loss = 0.0;
  std::vector<ControllerEpoch> epochs;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const ControllerEpoch&)>;

// Adam on mean CRF NLL; keeps the parameters of the epoch with the best
// validation exact match. Throws TrainingError on a non-finite loss.
ControllerModel train_controller(const std::vector<const Episode*>& train, const std::vector<const Episode*>& valid,
                                 const ControllerConfig& config, ControllerTrainingLog* log = nullptr,
                                 const EpochCallback& on_epoch = {});

Checkpoint controller_checkpoint(const ControllerModel& model, const std::string& config_text);
ControllerModel controller_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace mif::controller
