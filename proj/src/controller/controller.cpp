#include "mif/controller/controller.hpp"

#include "mif/controller/crf.hpp"
#include "mif/errors.hpp"
#include "mif/numerics/adam.hpp"
#include "mif/numerics/nn.hpp"
#include "mif/numerics/ops.hpp"

#include <cmath>

namespace mif::controller {
namespace {

struct Handles {
  ParamId embed;
  nn::LstmWeights fwd, bwd;
  nn::Linear unary;
  ParamId transitions, start;
};

Handles handles(const ControllerModel& m) {
  return {m.params.id("ctrl.embed"), nn::find_lstm(m.params, "ctrl.fwd"), nn::find_lstm(m.params, "ctrl.bwd"),
          nn::find_linear(m.params, "ctrl.unary"), m.params.id("ctrl.transitions"), m.params.id("ctrl.start")};
}

std::vector<int> label_ids(const std::vector<SubgoalType>& labels) {
  std::vector<int> out;
  for (auto l : labels) out.push_back(int(l));
  return out;
}

}  // namespace

ControllerModel ControllerModel::init(Vocabulary vocab, const ControllerConfig& config) {
  ControllerModel m;
  m.vocab = std::move(vocab);
  m.embedding_dim = config.embedding_dim;
  m.hidden_dim = config.hidden_dim;
  Rng rng(mix_seed(config.seed, 0xc0417));
  m.params.add("ctrl.embed", uniform_tensor({m.vocab.size(), config.embedding_dim}, 0.1, rng));
  nn::add_lstm(m.params, "ctrl.fwd", config.embedding_dim, config.hidden_dim, rng);
  nn::add_lstm(m.params, "ctrl.bwd", config.embedding_dim, config.hidden_dim, rng);
  nn::add_linear(m.params, "ctrl.unary", 2 * config.hidden_dim, kNumLabels, rng);
  m.params.add("ctrl.transitions", Tensor::zeros(kNumLabels, kNumLabels));
  m.params.add("ctrl.start", Tensor::zeros(kNumLabels));
  return m;
}

Var unary_scores(Tape& tape, const ControllerModel& model, const std::vector<int>& token_ids) {
  if (token_ids.empty()) throw DomainError("unary_scores: empty instruction");
  const Handles h = handles(model);
  Var table = tape.param(h.embed);
  std::vector<Var> inputs;
  inputs.reserve(token_ids.size());
  for (int id : token_ids) inputs.push_back(ops::row(table, std::size_t(id)));
  const auto features = nn::bilstm(tape, h.fwd, h.bwd, inputs);
  std::vector<Var> rows;
  rows.reserve(features.size());
  for (const auto& f : features) rows.push_back(nn::apply(tape, h.unary, f));
  return ops::stack_rows(rows);
}

Tensor unary_scores(const ControllerModel& model, const std::vector<std::string>& tokens) {
  Tape tape(&model.params, false);
  return unary_scores(tape, model, model.vocab.encode(tokens)).value();
}

Var controller_loss(Tape& tape, const ControllerModel& model, const Episode& episode) {
  const Handles h = handles(model);
  Var scores = unary_scores(tape, model, model.vocab.encode(episode.tokens));
  const auto gold = label_ids(episode.labels);
  return crf_nll(scores, tape.param(h.transitions), tape.param(h.start), gold);
}

std::vector<SubgoalType> predict_labels(const ControllerModel& model, const std::vector<std::string>& tokens) {
  const Handles h = handles(model);
  const Tensor scores = unary_scores(model, tokens);
  const CrfPath path = viterbi_decode(scores, model.params.value(h.transitions), model.params.value(h.start));
  std::vector<SubgoalType> out;
  for (int l : path.labels) out.push_back(SubgoalType(l));
  return out;
}

std::vector<LabeledSpan> predict_segments(const ControllerModel& model, const std::vector<std::string>& tokens) {
  return segments_from_labels(predict_labels(model, tokens));
}

std::vector<LabeledSpan> segments_from_labels(const std::vector<SubgoalType>& labels) {
  std::vector<LabeledSpan> out;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (out.empty() || out.back().type != labels[n]) {
      out.push_back({int(n), int(n) + 1, labels[n]});
    } else {
      out.back().end = int(n) + 1;
    }
  }
  return out;
}

std::vector<SubgoalType> labels_from_segments(const std::vector<LabeledSpan>& segments) {
  std::vector<SubgoalType> out;
  for (const auto& s : segments) out.insert(out.end(), std::size_t(s.end - s.begin), s.type);
  return out;
}

std::vector<LabeledSpan> gold_segments(const Episode& episode) {
  std::vector<LabeledSpan> out;
  for (const auto& s : episode.segments) out.push_back({s.tokens.begin, s.tokens.end, s.type});
  return out;
}

bool exact_match(const std::vector<LabeledSpan>& predicted, const std::vector<LabeledSpan>& gold) {
  return predicted == gold;
}

bool type_match(const std::vector<LabeledSpan>& predicted, const std::vector<LabeledSpan>& gold) {
  if (predicted.size() != gold.size()) return false;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (predicted[i].type != gold[i].type) return false;
  return true;
}

MatchStats corpus_match(const std::vector<std::vector<LabeledSpan>>& predicted,
                        const std::vector<std::vector<LabeledSpan>>& gold) {
  if (predicted.size() != gold.size()) throw ShapeError("corpus_match: prediction and gold counts differ");
  MatchStats s;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++s.episodes;
    s.exact += exact_match(predicted[i], gold[i]);
    s.type_only += type_match(predicted[i], gold[i]);
  }
  return s;
}

MatchStats evaluate_controller(const ControllerModel& model, const std::vector<const Episode*>& episodes) {
  std::vector<std::vector<LabeledSpan>> predicted, gold;
  for (const auto* e : episodes) {
    predicted.push_back(predict_segments(model, e->tokens));
    gold.push_back(gold_segments(*e));
  }
  return corpus_match(predicted, gold);
}

ControllerModel train_controller(const std::vector<const Episode*>& train, const std::vector<const Episode*>& valid,
                                 const ControllerConfig& config, ControllerTrainingLog* log,
                                 const EpochCallback& on_epoch) {
  if (train.empty()) throw ConfigError("train_controller: no training episodes");
  ControllerModel model = ControllerModel::init(Vocabulary::from_episodes(train), config);
  AdamState adam = AdamState::init(model.params, {config.learning_rate});
  Rng rng(mix_seed(config.seed, 0xc0b));

  auto mean_loss = [&](const std::vector<const Episode*>& eps) {
    double total = 0.0;
    for (const auto* e : eps) {
      Tape tape(&model.params, false);
      total += controller_loss(tape, model, *e).scalar();
    }
    return total / double(eps.size());
  };

  ControllerTrainingLog local;
  ControllerTrainingLog& out = log ? *log : local;
  out = {};
  out.initial_loss = mean_loss(train);

  ParameterSet best = model.params;
  double best_exact = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t step = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += std::size_t(config.batch_size)) {
      const std::size_t end = std::min(order.size(), b + std::size_t(config.batch_size));
      GradientTable grads = zero_gradients(model.params);
      double batch_loss = 0.0;
      for (std::size_t i = b; i < end; ++i) {
        Tape tape(&model.params);
        Var loss = controller_loss(tape, model, *train[order[i]]);
        batch_loss += loss.scalar();
        accumulate(grads, backward(tape, loss));
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("controller loss is not finite at step " + std::to_string(step));
      }
      scale(grads, 1.0 / double(end - b));
      clip_global_norm(grads, config.clip_norm);
      adam_step(model.params, grads, adam);
      epoch_loss += batch_loss;
      ++step;
    }
    ControllerEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / double(order.size());
    const MatchStats m = evaluate_controller(model, valid.empty() ? train : valid);
    rec.valid_exact = m.exact_accuracy();
    rec.valid_type = m.type_accuracy();
    out.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.valid_exact > best_exact) {
      best_exact = rec.valid_exact;
      best = model.params;
      out.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
    if (best_exact >= 1.0) break;
  }
  model.params = std::move(best);
  return model;
}

Checkpoint controller_checkpoint(const ControllerModel& model, const std::string& config_text) {
  Checkpoint c;
  c.kind = "controller";
  c.config_text = config_text;
  c.metadata["vocabulary"] = model.vocab.to_text();
  c.metadata["vocabulary_hash"] = hex64(model.vocab.hash());
  c.metadata["embedding_dim"] = std::to_string(model.embedding_dim);
  c.metadata["hidden_dim"] = std::to_string(model.hidden_dim);
  c.params = model.params;
  return c;
}

ControllerModel controller_from_checkpoint(const Checkpoint& checkpoint) {
  if (checkpoint.kind != "controller") {
    throw CheckpointError("expected a controller checkpoint, found kind '" + checkpoint.kind + "'");
  }
  auto meta = [&](const std::string& key) {
    const auto it = checkpoint.metadata.find(key);
    if (it == checkpoint.metadata.end()) throw CheckpointError("controller checkpoint lacks metadata '" + key + "'");
    return it->second;
  };
  ControllerConfig config;
  config.embedding_dim = std::stoul(meta("embedding_dim"));
  config.hidden_dim = std::stoul(meta("hidden_dim"));
  ControllerModel model = ControllerModel::init(Vocabulary::from_text(meta("vocabulary")), config);
  if (hex64(model.vocab.hash()) != meta("vocabulary_hash")) {
    throw CheckpointError("controller checkpoint vocabulary does not match its recorded hash");
  }
  assign_parameters(model.params, checkpoint.params);
  return model;
}

}  // namespace mif::controller
