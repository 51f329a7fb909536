#include "mif/policy/policy.hpp"

#include "mif/errors.hpp"
#include "mif/numerics/nn.hpp"
#include "mif/numerics/ops.hpp"
#include "mif/tasks/planner.hpp"

#include <cctype>
#include <cmath>
#include <thread>

namespace mif::policy {
namespace {

struct DecoderHandles {
  ParamId attn = 0;
  nn::LstmWeights lstm;
};

struct Handles {
  ParamId tokens, actions;
  nn::LstmWeights enc_fwd, enc_bwd;
  nn::Linear action_head, target_head;
  std::array<std::optional<DecoderHandles>, kNumModules + 1> decoders;
};

Handles handles(const PolicyModel& m) {
  Handles h{m.params.id("pol.tokens"),
            m.params.id("pol.actions"),
            nn::find_lstm(m.params, "pol.enc.fwd"),
            nn::find_lstm(m.params, "pol.enc.bwd"),
            nn::find_linear(m.params, "pol.head.action"),
            nn::find_linear(m.params, "pol.head.target"),
            {}};
  for (int d = 0; d <= kNumModules; ++d) {
    const std::string p = decoder_prefix(d);
    if (!m.params.contains(p + ".attn")) continue;
    h.decoders[std::size_t(d)] = DecoderHandles{m.params.id(p + ".attn"), nn::find_lstm(m.params, p + ".lstm")};
  }
  return h;
}

const DecoderHandles& decoder_of(const Handles& h, int decoder) {
  if (decoder < 0 || decoder > kNumModules || !h.decoders[std::size_t(decoder)]) {
    throw ContractError("policy has no decoder " + decoder_prefix(decoder));
  }
  return *h.decoders[std::size_t(decoder)];
}

void add_shared(ParameterSet& ps, const Vocabulary& vocab, PolicyDims dims, Rng& rng) {
  if (dims.hidden_dim % 2) throw ConfigError("policy hidden_dim must be even");
  ps.add("pol.tokens", uniform_tensor({vocab.size(), dims.embedding_dim}, 0.1, rng));
  nn::add_lstm(ps, "pol.enc.fwd", dims.embedding_dim, dims.hidden_dim / 2, rng);
  nn::add_lstm(ps, "pol.enc.bwd", dims.embedding_dim, dims.hidden_dim / 2, rng);
  ps.add("pol.actions", uniform_tensor({kActionLogits, dims.embedding_dim}, 0.1, rng));
}

std::size_t input_dim(PolicyDims dims) { return dims.embedding_dim + std::size_t(world::kObservationDim) + dims.hidden_dim; }

void add_decoder(ParameterSet& ps, int decoder, PolicyDims dims, Rng& rng) {
  const std::string p = decoder_prefix(decoder);
  ps.add(p + ".attn", xavier_uniform(dims.hidden_dim, dims.hidden_dim, rng));
  nn::add_lstm(ps, p + ".lstm", input_dim(dims), dims.hidden_dim, rng);
}

void add_heads(ParameterSet& ps, PolicyDims dims, Rng& rng) {
  nn::add_linear(ps, "pol.head.action", dims.hidden_dim + input_dim(dims), kActionLogits, rng);
  nn::add_linear(ps, "pol.head.target", dims.hidden_dim + input_dim(dims), std::size_t(world::kSlots), rng);
}

bool is_encoder_param(const std::string& name) {
  return name == "pol.tokens" || name.rfind("pol.enc.", 0) == 0;
}

Var encode(Tape& tape, const Handles& h, const std::vector<int>& ids) {
  if (ids.empty()) throw DomainError("encode_instruction: empty instruction");
  Var table = tape.param(h.tokens);
  std::vector<Var> inputs;
  inputs.reserve(ids.size());
  for (int id : ids) inputs.push_back(ops::row(table, std::size_t(id)));
  const auto rows = nn::bilstm(tape, h.enc_fwd, h.enc_bwd, inputs);
  return ops::stack_rows(rows);
}

Attention attend_with(Tape& tape, const DecoderHandles& d, Var h_prev, Var x) {
  Var query = ops::matvec(tape.param(d.attn), h_prev);
  Var weights = ops::softmax(ops::matvec(x, query));
  return {ops::matvec_t(x, weights), weights};
}

StepOutput step_with(Tape& tape, const Handles& h, int decoder, const DecoderState& state, const Tensor& observation,
                     Var x, const Tensor* dropout) {
  const DecoderHandles& d = decoder_of(h, decoder);
  if (observation.size() != std::size_t(world::kObservationDim)) {
    throw ShapeError("decode_step: observation has " + std::to_string(observation.size()) + " features, expected " +
                     std::to_string(world::kObservationDim));
  }
  Var prev = ops::row(tape.param(h.actions), std::size_t(state.prev_action));
  Attention att = attend_with(tape, d, state.h, x);
  Var e = ops::concat({prev, tape.constant(observation), att.attended});
  nn::LstmState next = nn::lstm_cell(tape, d.lstm, e, state.h, state.c);
  Var h_out = dropout ? ops::apply_mask(next.h, *dropout) : next.h;
  Var features = ops::concat({h_out, e});
  StepOutput out;
  out.state = {next.h, next.c, state.prev_action};
  out.action_logits = nn::apply(tape, h.action_head, features);
  out.target_logits = nn::apply(tape, h.target_head, features);
  out.attention = att.weights;
  return out;
}

int argmax(const Tensor& t) {
  int best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[std::size_t(best)]) best = int(i);
  return best;
}

void check_example(const PolicyExample& ex) {
  const int T = int(ex.actions.size());
  if (ex.observations.size() != ex.actions.size() + 1) {
    throw DataError("policy example " + ex.id + ": " + std::to_string(ex.observations.size()) +
                    " observations for " + std::to_string(T) + " actions");
  }
  int at = 0;
  for (const auto& s : ex.segments) {
    if (s.begin != at || s.end < s.begin) throw DataError("policy example " + ex.id + ": segments are not contiguous");
    at = s.end;
  }
  if (at != T) throw DataError("policy example " + ex.id + ": segments cover " + std::to_string(at) + " of " +
                               std::to_string(T) + " actions");
  if (ex.segments.empty()) throw DataError("policy example " + ex.id + ": no segments");
}

}  // namespace

std::string_view name(ModelKind k) { return k == ModelKind::Monolithic ? "monolithic" : "modular"; }

std::string_view name(StopReason r) {
  switch (r) {
    case StopReason::Stop: return "stop";
    case StopReason::StepLimit: return "step_limit";
    case StopReason::FailureBudget: return "failure_budget";
  }
  return "invalid";
}

std::string decoder_prefix(int decoder) {
  if (decoder == kMonolithic) return "pol.dec.mono";
  std::string n(world::name(SubgoalType(decoder)));
  for (auto& ch : n) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  return "pol.dec." + n;
}

PolicyModel PolicyModel::init_monolithic(Vocabulary vocab, PolicyDims dims, std::uint64_t seed) {
  PolicyModel m;
  m.kind = ModelKind::Monolithic;
  m.dims = dims;
  m.vocab = std::move(vocab);
  Rng rng(mix_seed(seed, 0x901));
  add_shared(m.params, m.vocab, dims, rng);
  add_decoder(m.params, kMonolithic, dims, rng);
  add_heads(m.params, dims, rng);
  return m;
}

PolicyModel PolicyModel::init_modular(Vocabulary vocab, PolicyDims dims, std::uint64_t seed) {
  PolicyModel m;
  m.kind = ModelKind::Modular;
  m.dims = dims;
  m.vocab = std::move(vocab);
  Rng rng(mix_seed(seed, 0x902));
  add_shared(m.params, m.vocab, dims, rng);
  for (int d = 0; d < kNumModules; ++d) add_decoder(m.params, d, dims, rng);
  add_heads(m.params, dims, rng);
  return m;
}

bool PolicyModel::has_decoder(int decoder) const {
  return decoder >= 0 && decoder <= kNumModules && params.contains(decoder_prefix(decoder) + ".attn");
}

std::size_t PolicyModel::step_input_dim() const { return input_dim(dims); }

PolicyModel init_modules_from_monolithic(const PolicyModel& mono) {
  if (mono.kind != ModelKind::Monolithic) throw ContractError("init_modules_from_monolithic needs a monolithic model");
  PolicyModel m;
  m.kind = ModelKind::Modular;
  m.dims = mono.dims;
  m.vocab = mono.vocab;
  const std::string src = decoder_prefix(kMonolithic);
  for (const auto& n : mono.params.names()) {
    if (n.rfind("pol.dec.", 0) == 0 || n.rfind("pol.head.", 0) == 0) continue;
    m.params.add(n, mono.params[n]);
  }
  for (int d = 0; d < kNumModules; ++d) {
    const std::string dst = decoder_prefix(d);
    for (const char* part : {".attn", ".lstm.W", ".lstm.b"}) m.params.add(dst + part, mono.params[src + part]);
  }
  for (const auto& n : mono.params.names())
    if (n.rfind("pol.head.", 0) == 0) m.params.add(n, mono.params[n]);
  return m;
}

ExecutionPlan gold_plan(const Episode& episode) { return {controller::gold_segments(episode)}; }

ExecutionPlan controller_plan(const controller::ControllerModel& ctrl, const Episode& episode) {
  return {controller::predict_segments(ctrl, episode.tokens)};
}

PolicyExample make_example(const Vocabulary& vocab, const Episode& episode, const world::LayoutPools& layouts) {
  PolicyExample ex;
  ex.id = episode.id;
  ex.tokens = vocab.encode(episode.tokens);
  ex.actions = episode.actions;
  const auto observations = tasks::replay_observations(episode.initial_scene(layouts), episode.actions);
  for (const auto& o : observations) {
    std::vector<std::uint16_t> active;
    for (std::size_t i = 0; i < o.features.size(); ++i) {
      if (o.features[i] == 1.0) {
        active.push_back(std::uint16_t(i));
      } else if (o.features[i] != 0.0) {
        throw DataError("episode " + episode.id + ": observation feature " + std::to_string(i) + " is not binary");
      }
    }
    ex.observations.push_back(std::move(active));
  }
  for (const auto& s : episode.segments) ex.segments.push_back({s.type, s.action_begin, s.action_end});
  check_example(ex);
  return ex;
}

std::vector<PolicyExample> make_examples(const Vocabulary& vocab, const std::vector<const Episode*>& episodes,
                                         int workers) {
  std::vector<PolicyExample> out(episodes.size());
  const int n = std::max(1, workers);
  if (n == 1) {
    for (std::size_t i = 0; i < episodes.size(); ++i) out[i] = make_example(vocab, *episodes[i]);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = std::size_t(w); i < episodes.size(); i += std::size_t(n))
          out[i] = make_example(vocab, *episodes[i]);
      } catch (...) {
        errors[std::size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

PolicyExample slice_example(const PolicyExample& ex, int segment) {
  const auto& s = ex.segments.at(std::size_t(segment));
  PolicyExample out;
  out.id = ex.id + "#" + std::to_string(segment);
  out.tokens = ex.tokens;
  out.actions.assign(ex.actions.begin() + s.begin, ex.actions.begin() + s.end);
  out.observations.assign(ex.observations.begin() + s.begin, ex.observations.begin() + s.end + 1);
  out.segments = {{s.type, 0, s.end - s.begin}};
  return out;
}

Tensor observation_tensor(const std::vector<std::uint16_t>& active) {
  Tensor t = Tensor::zeros(std::size_t(world::kObservationDim));
  for (auto i : active) t[i] = 1.0;
  return t;
}

Var encode_instruction(Tape& tape, const PolicyModel& model, const std::vector<int>& token_ids) {
  return encode(tape, handles(model), token_ids);
}

Attention attend(Tape& tape, const PolicyModel& model, int decoder, Var h_prev, Var x) {
  return attend_with(tape, decoder_of(handles(model), decoder), h_prev, x);
}

DecoderState initial_state(Tape& tape, const PolicyModel& model) {
  return {tape.constant(Tensor::zeros(model.dims.hidden_dim)), tape.constant(Tensor::zeros(model.dims.hidden_dim)),
          kStartAction};
}

StepOutput decode_step(Tape& tape, const PolicyModel& model, int decoder, const DecoderState& state,
                       const Tensor& observation, Var x, const Tensor* dropout) {
  return step_with(tape, handles(model), decoder, state, observation, x, dropout);
}

Var teacher_forced_loss(Tape& tape, const PolicyModel& model, const PolicyExample& ex,
                        const TeacherForcedOptions& options, std::vector<StepTrace>* trace) {
  check_example(ex);
  const Handles h = handles(model);
  Var x = encode(tape, h, ex.tokens);
  DecoderState state = initial_state(tape, model);
  Rng drop_rng(options.dropout_seed);
  std::vector<Var> terms;

  std::vector<PolicyExample::Segment> segments = ex.segments;
  if (!options.modular) segments = {{SubgoalType::GoTo, 0, int(ex.actions.size())}};

  auto run_step = [&](int decoder, int t, int si, int expected, const world::Action* action) {
    Tensor mask;
    const bool drop = options.dropout > 0.0;
    if (drop) mask = nn::dropout_mask(model.dims.hidden_dim, options.dropout, drop_rng);
    StepOutput out = step_with(tape, h, decoder, state, observation_tensor(ex.observations[std::size_t(t)]), x,
                               drop ? &mask : nullptr);
    const bool counted = options.only_segment < 0 || options.only_segment == si;
    StepTrace rec;
    rec.time = t;
    rec.decoder = decoder;
    rec.segment = si;
    rec.stop = action == nullptr;
    rec.expected_action = expected;
    Var a_loss = ops::cross_entropy(out.action_logits, std::size_t(expected));
    rec.action_loss = a_loss.scalar();
    if (counted) terms.push_back(options.action_weight == 1.0 ? a_loss : ops::scale(a_loss, options.action_weight));
    if (action && world::needs_target(action->type)) {
      if (action->target_slot < 0 || action->target_slot >= world::kSlots) {
        throw DataError("policy example " + ex.id + ": action " + std::to_string(t) + " has no valid target slot");
      }
      Var t_loss = ops::cross_entropy(out.target_logits, std::size_t(action->target_slot));
      rec.target_loss = t_loss.scalar();
      if (counted) terms.push_back(options.target_weight == 1.0 ? t_loss : ops::scale(t_loss, options.target_weight));
    }
    if (trace) {
      rec.action_logits = out.action_logits.value();
      trace->push_back(std::move(rec));
    }
    return out;
  };

  for (std::size_t si = 0; si < segments.size(); ++si) {
    const auto& seg = segments[si];
    const int decoder = options.modular ? int(seg.type) : kMonolithic;
    if (options.modular && si > 0 && options.detach_handoff) {
      state.h = tape.constant(state.h.value());
      state.c = tape.constant(state.c.value());
    }
    for (int t = seg.begin; t < seg.end; ++t) {
      const world::Action& a = ex.actions[std::size_t(t)];
      StepOutput out = run_step(decoder, t, int(si), int(a.type), &a);
      state = out.state;
      state.prev_action = int(a.type);
    }
    run_step(decoder, seg.end, int(si), kStopIndex, nullptr);
  }
  if (terms.empty()) return tape.constant(Tensor::vector({0.0}));
  return ops::sum(ops::concat(terms));
}

PolicyRunner::PolicyRunner(const PolicyModel& model, const std::vector<std::string>& tokens)
    : model_(model), tape_(&model.params, false) {
  x_ = encode_instruction(tape_, model_, model_.vocab.encode(tokens));
  state_ = initial_state(tape_, model_);
  select(model_.kind == ModelKind::Monolithic ? kMonolithic : 0);
}

void PolicyRunner::select(int decoder) {
  if (!model_.has_decoder(decoder)) throw ContractError("policy has no decoder " + decoder_prefix(decoder));
  decoder_ = decoder;
  has_proposal_ = false;
}

const StepOutput& PolicyRunner::propose(const world::Observation& observation) {
  proposal_ = decode_step(tape_, model_, decoder_, state_, Tensor::vector(observation.features), x_);
  double total = 0.0;
  for (double a : proposal_.attention.value().values()) total += a;
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("attention weights sum to " + std::to_string(total));
  has_proposal_ = true;
  return proposal_;
}

world::Action PolicyRunner::greedy() const {
  if (!has_proposal_) throw ContractError("PolicyRunner::greedy called without a proposal");
  const auto type = world::ActionType(argmax(proposal_.action_logits.value()));
  if (!world::needs_target(type)) return {type};
  return {type, argmax(proposal_.target_logits.value())};
}

void PolicyRunner::commit(world::ActionType taken) {
  if (!has_proposal_) throw ContractError("PolicyRunner::commit called without a proposal");
  state_ = proposal_.state;
  state_.prev_action = int(taken);
  has_proposal_ = false;
}

namespace {

template <class OnStop>
Trajectory run_rollout(PolicyRunner& runner, const world::Scene& scene, const RolloutLimits& limits, OnStop on_stop) {
  Trajectory traj;
  traj.final_scene = scene;
  int steps = 0;
  traj.reason = StopReason::StepLimit;
  while (steps < limits.max_steps) {
    runner.propose(world::observe(traj.final_scene));
    const world::Action a = runner.greedy();
    if (a.type == world::ActionType::Stop) {
      if (on_stop(traj)) continue;
      traj.reason = StopReason::Stop;
      break;
    }
    const world::StepResult r = world::step(traj.final_scene, a);
    traj.actions.push_back(a);
    traj.results.push_back(r);
    runner.commit(a.type);
    ++steps;
    if (!r.ok && ++traj.failures >= limits.max_failures) {
      traj.reason = StopReason::FailureBudget;
      break;
    }
  }
  return traj;
}

Handoff snapshot(const PolicyRunner& runner, std::size_t index, int step) {
  return {index, step, runner.state().h.value(), runner.state().c.value(), runner.state().prev_action};
}

}  // namespace

Trajectory rollout_monolithic(const PolicyModel& model, const std::vector<std::string>& tokens,
                              const world::Scene& scene, const RolloutLimits& limits) {
  PolicyRunner runner(model, tokens);
  runner.select(kMonolithic);
  return run_rollout(runner, scene, limits, [](const Trajectory&) { return false; });
}

Trajectory rollout_modular(const PolicyModel& model, const ExecutionPlan& plan, const std::vector<std::string>& tokens,
                           const world::Scene& scene, const RolloutLimits& limits) {
  if (plan.segments.empty()) throw ContractError("rollout_modular: empty plan");
  PolicyRunner runner(model, tokens);
  std::size_t index = 0;
  runner.select(int(plan.segments[0].type));
  std::vector<Handoff> handoffs{snapshot(runner, 0, 0)};
  Trajectory traj = run_rollout(runner, scene, limits, [&](const Trajectory& so_far) {
    if (++index >= plan.segments.size()) return false;
    runner.select(int(plan.segments[index].type));
    handoffs.push_back(snapshot(runner, index, int(so_far.actions.size())));
    return true;
  });
  traj.handoffs = std::move(handoffs);
  return traj;
}

double mean_loss(const PolicyModel& model, const std::vector<PolicyExample>& examples, bool modular) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  TeacherForcedOptions options;
  options.modular = modular;
  for (const auto& ex : examples) {
    Tape tape(&model.params, false);
    total += teacher_forced_loss(tape, model, ex, options).scalar();
  }
  return total / double(examples.size());
}

double train_step(PolicyModel& model, AdamState& adam, const std::vector<const PolicyExample*>& batch,
                  const PolicyTrainConfig& config, std::uint64_t step_index) {
  GradientTable grads = zero_gradients(model.params);
  double total = 0.0;
  TeacherForcedOptions options;
  options.modular = model.kind == ModelKind::Modular;
  options.detach_handoff = config.detach_handoff;
  options.dropout = config.dropout;
  options.action_weight = config.action_weight;
  options.target_weight = config.target_weight;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    options.dropout_seed = mix_seed(config.seed, (step_index << 8) + i);
    Tape tape(&model.params);
    Var loss = teacher_forced_loss(tape, model, *batch[i], options);
    total += loss.scalar();
    accumulate(grads, backward(tape, loss));
  }
  if (!std::isfinite(total)) throw TrainingError("policy loss is not finite at step " + std::to_string(step_index));
  scale(grads, 1.0 / double(batch.size()));
  if (config.freeze_encoder) {
    for (ParamId p = 0; p < model.params.size(); ++p)
      if (is_encoder_param(model.params.name(p))) grads[p].fill(0.0);
  }
  clip_global_norm(grads, config.clip_norm);
  adam_step(model.params, grads, adam);
  return total;
}

void fit_policy(PolicyModel& model, const std::vector<PolicyExample>& train, const std::vector<PolicyExample>& valid,
                const PolicyTrainConfig& config, PolicyTrainingLog* log, const PolicyEpochCallback& on_epoch) {
  if (train.empty()) throw ConfigError("fit_policy: no training examples");
  const bool modular = model.kind == ModelKind::Modular;
  PolicyTrainingLog local;
  PolicyTrainingLog& out = log ? *log : local;
  out = {};
  out.initial_train_loss = mean_loss(model, train, modular);
  out.initial_valid_loss = valid.empty() ? out.initial_train_loss : mean_loss(model, valid, modular);

  AdamState adam = AdamState::init(model.params, {config.learning_rate});
  Rng rng(mix_seed(config.seed, modular ? 0x9072 : 0x9071));
  ParameterSet best = model.params;
  double best_valid = out.initial_valid_loss;
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += std::size_t(config.batch_size)) {
      std::vector<const PolicyExample*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + std::size_t(config.batch_size)); ++i)
        batch.push_back(&train[order[i]]);
      epoch_loss += train_step(model, adam, batch, config, step++);
    }
    PolicyEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / double(train.size());
    rec.valid_loss = valid.empty() ? mean_loss(model, train, modular) : mean_loss(model, valid, modular);
    out.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.valid_loss < best_valid) {
      best_valid = rec.valid_loss;
      best = model.params;
      out.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.params = std::move(best);
}

PolicyModel train_monolithic(const Vocabulary& vocab, const std::vector<PolicyExample>& train,
                             const std::vector<PolicyExample>& valid, PolicyDims dims,
                             const PolicyTrainConfig& config, PolicyTrainingLog* log,
                             const PolicyEpochCallback& on_epoch) {
  PolicyModel model = PolicyModel::init_monolithic(vocab, dims, config.seed);
  fit_policy(model, train, valid, config, log, on_epoch);
  return model;
}

PolicyModel finetune_modular(const PolicyModel& monolithic, const std::vector<PolicyExample>& train,
                             const std::vector<PolicyExample>& valid, const PolicyTrainConfig& config,
                             PolicyTrainingLog* log, const PolicyEpochCallback& on_epoch) {
  PolicyModel model = init_modules_from_monolithic(monolithic);
  fit_policy(model, train, valid, config, log, on_epoch);
  return model;
}

StopAccuracy stop_accuracy(const PolicyModel& modular, const std::vector<PolicyExample>& examples) {
  StopAccuracy acc;
  TeacherForcedOptions options;
  options.modular = true;
  for (const auto& ex : examples) {
    Tape tape(&modular.params, false);
    std::vector<StepTrace> trace;
    teacher_forced_loss(tape, modular, ex, options, &trace);
    for (const auto& s : trace) {
      if (!s.stop) continue;
      ++acc.total[std::size_t(s.decoder)];
      acc.correct[std::size_t(s.decoder)] += argmax(s.action_logits) == kStopIndex;
    }
  }
  return acc;
}

double action_accuracy(const PolicyModel& model, const std::vector<PolicyExample>& examples) {
  int correct = 0, total = 0;
  TeacherForcedOptions options;
  options.modular = model.kind == ModelKind::Modular;
  for (const auto& ex : examples) {
    Tape tape(&model.params, false);
    std::vector<StepTrace> trace;
    teacher_forced_loss(tape, model, ex, options, &trace);
    for (const auto& s : trace) {
      ++total;
      correct += argmax(s.action_logits) == s.expected_action;
    }
  }
  return total ? double(correct) / total : 0.0;
}

Checkpoint policy_checkpoint(const PolicyModel& model, const std::string& config_text) {
  Checkpoint c;
  c.kind = "policy";
  c.config_text = config_text;
  c.metadata["model_kind"] = std::string(name(model.kind));
  c.metadata["embedding_dim"] = std::to_string(model.dims.embedding_dim);
  c.metadata["hidden_dim"] = std::to_string(model.dims.hidden_dim);
  c.metadata["vocabulary"] = model.vocab.to_text();
  c.metadata["vocabulary_hash"] = hex64(model.vocab.hash());
  c.params = model.params;
  return c;
}

PolicyModel policy_from_checkpoint(const Checkpoint& checkpoint, std::optional<PolicyDims> expected) {
  if (checkpoint.kind != "policy") throw CheckpointError("expected a policy checkpoint, found kind '" + checkpoint.kind + "'");
  auto meta = [&](const std::string& key) {
    const auto it = checkpoint.metadata.find(key);
    if (it == checkpoint.metadata.end()) throw CheckpointError("policy checkpoint lacks metadata '" + key + "'");
    return it->second;
  };
  PolicyDims dims{std::stoul(meta("embedding_dim")), std::stoul(meta("hidden_dim"))};
  if (expected) dims = *expected;
  Vocabulary vocab = Vocabulary::from_text(meta("vocabulary"));
  if (hex64(vocab.hash()) != meta("vocabulary_hash")) {
    throw CheckpointError("policy checkpoint vocabulary does not match its recorded hash");
  }
  const std::string kind = meta("model_kind");
  PolicyModel model;
  if (kind == "monolithic") {
    model = PolicyModel::init_monolithic(std::move(vocab), dims, 0);
  } else if (kind == "modular") {
    model = PolicyModel::init_modular(std::move(vocab), dims, 0);
  } else {
    throw CheckpointError("unknown policy model kind '" + kind + "'");
  }
  assign_parameters(model.params, checkpoint.params);
  return model;
}

}  // namespace mif::policy
