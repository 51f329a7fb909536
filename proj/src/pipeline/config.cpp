#include "mif/pipeline/config.hpp"

#include "mif/errors.hpp"
#include "mif/io.hpp"
#include "mif/numerics/checkpoint.hpp"
#include "mif/numerics/random.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mif::pipeline {

std::string_view name(Profile p) { return p == Profile::Desk ? "desk" : "paper-reference"; }

ExperimentConfig profile_defaults(Profile p) {
  ExperimentConfig c;
  c.profile = p;
  if (p == Profile::PaperReference) {
    c.embedding_dim = 100;
    c.hidden_dim = 512;
  }
  return c;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("'" + v + "' is not a valid number");
  return out;
}

template <class T>
std::string number_text(T v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("'" + v + "' is not true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list '" + v + "'");
    out.push_back(item);
  }
  return out;
}

evaluation::PlanSource parse_plan(const std::string& v) {
  if (v == "controller") return evaluation::PlanSource::Controller;
  if (v == "gold") return evaluation::PlanSource::Gold;
  throw ConfigError("'" + v + "' is not controller or gold");
}

struct Field {
  std::string key;
  bool data = false;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
Field number(std::string key, T ExperimentConfig::*member, bool data = false, T min = T(0)) {
  return {key, data, [member](const ExperimentConfig& c) { return number_text(c.*member); },
          [member, min, key](ExperimentConfig& c, const std::string& v) {
            const T x = parse_number<T>(v);
            if (x < min) throw ConfigError(key + " must be at least " + number_text(min));
            c.*member = x;
          }};
}

Field flag(std::string key, bool ExperimentConfig::*member) {
  return {key, false, [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member](ExperimentConfig& c, const std::string& v) { c.*member = parse_bool(v); }};
}

Field text(std::string key, std::string ExperimentConfig::*member, bool data = false) {
  return {key, data, [member](const ExperimentConfig& c) { return c.*member; },
          [member](ExperimentConfig& c, const std::string& v) { c.*member = v; }};
}

Field unsupported_dropout(std::string key, double ExperimentConfig::*member) {
  return {key, false, [member](const ExperimentConfig& c) { return number_text(c.*member); },
          [member, key](ExperimentConfig& c, const std::string& v) {
            const double x = parse_number<double>(v);
            if (x != 0.0) throw ConfigError(key + " is fixed at 0");
            c.*member = x;
          }};
}

Field plan(std::string key, evaluation::PlanSource ExperimentConfig::*member) {
  return {key, false, [member](const ExperimentConfig& c) { return std::string(evaluation::name(c.*member)); },
          [member](ExperimentConfig& c, const std::string& v) { c.*member = parse_plan(v); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    v.push_back({"profile", false, [](const C& c) { return std::string(name(c.profile)); },
                 [](C& c, const std::string& s) {
                   if (s == "desk") c.profile = Profile::Desk;
                   else if (s == "paper-reference") c.profile = Profile::PaperReference;
                   else throw ConfigError("unknown profile '" + s + "'");
                 }});
    v.push_back(number("seed", &C::seed, true));
    v.push_back(number("train_episodes", &C::train_episodes, true, 1));
    v.push_back(number("valid_seen_episodes", &C::valid_seen_episodes, true, 1));
    v.push_back(number("valid_unseen_episodes", &C::valid_unseen_episodes, true, 1));
    v.push_back(number("slice_probability", &C::slice_probability, true));
    v.push_back({"task_weights", true, [](const C& c) { return c.task_weights; },
                 [](C& c, const std::string& s) {
                   const auto items = split_list(s);
                   if (int(items.size()) != tasks::kNumTaskTypes)
                     throw ConfigError("task_weights needs " + std::to_string(tasks::kNumTaskTypes) + " entries");
                   for (const auto& i : items)
                     if (parse_number<double>(i) < 0) throw ConfigError("task_weights must be non-negative");
                   c.task_weights = s;
                 }});
    v.push_back(text("layouts", &C::layouts, true));
    v.push_back(number("controller_embedding_dim", &C::controller_embedding_dim, false, std::size_t(1)));
    v.push_back(number("controller_hidden_dim", &C::controller_hidden_dim, false, std::size_t(1)));
    v.push_back(number("controller_learning_rate", &C::controller_learning_rate));
    v.push_back(number("controller_batch_size", &C::controller_batch_size, false, 1));
    v.push_back(number("controller_max_epochs", &C::controller_max_epochs, false, 1));
    v.push_back(number("controller_patience", &C::controller_patience, false, 1));
    v.push_back(text("controller_train_split", &C::controller_train_split));
    v.push_back(text("controller_valid_split", &C::controller_valid_split));
    v.push_back(number("embedding_dim", &C::embedding_dim, false, std::size_t(1)));
    v.push_back(number("hidden_dim", &C::hidden_dim, false, std::size_t(2)));
    v.push_back(number("learning_rate", &C::learning_rate));
    v.push_back(number("batch_size", &C::batch_size, false, 1));
    v.push_back(number("max_epochs", &C::max_epochs, false, 1));
    v.push_back(number("patience", &C::patience, false, 1));
    v.push_back(number("clip_norm", &C::clip_norm));
    v.push_back(number("lstm_dropout", &C::lstm_dropout));
    v.push_back(unsupported_dropout("lang_dropout", &C::lang_dropout));
    v.push_back(unsupported_dropout("vision_dropout", &C::vision_dropout));
    v.push_back(unsupported_dropout("input_dropout", &C::input_dropout));
    v.push_back(unsupported_dropout("attn_dropout", &C::attn_dropout));
    v.push_back(unsupported_dropout("actor_dropout", &C::actor_dropout));
    v.push_back(number("action_loss_weight", &C::action_loss_weight));
    v.push_back(number("mask_loss_weight", &C::mask_loss_weight));
    v.push_back(flag("detach_handoff", &C::detach_handoff));
    v.push_back(flag("freeze_encoder", &C::freeze_encoder));
    v.push_back(text("policy_train_split", &C::policy_train_split));
    v.push_back(text("policy_valid_split", &C::policy_valid_split));
    v.push_back({"eval_splits", false,
                 [](const C& c) {
                   std::string s;
                   for (const auto& x : c.eval_splits) s += (s.empty() ? "" : ",") + x;
                   return s;
                 },
                 [](C& c, const std::string& s) { c.eval_splits = split_list(s); }});
    v.push_back(plan("eval_plan", &C::eval_plan));
    v.push_back(plan("warmup_plan", &C::warmup_plan));
    v.push_back(number("max_failures", &C::max_failures, false, 1));
    v.push_back(text("output_dir", &C::output_dir));
    return v;
  }();
  return f;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

void check(const ExperimentConfig& c) {
  if (c.lstm_dropout >= 1.0) throw ConfigError("lstm_dropout must be below 1");
  if (c.slice_probability > 1.0) throw ConfigError("slice_probability must be at most 1");
  if (c.hidden_dim % 2 != 0) throw ConfigError("hidden_dim must be even");
  if (c.eval_splits.empty()) throw ConfigError("eval_splits is empty");
}

std::string hash_of(const ExperimentConfig& c, bool data_only) {
  std::string s;
  for (const auto& f : fields()) {
    if (f.key == "output_dir" || (data_only && !f.data)) continue;
    s += f.key + " = " + f.get(c) + "\n";
  }
  return hex64(fnv1a(s));
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  struct Entry {
    int line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    Entry e{line_no, trim(body.substr(0, eq)), trim(body.substr(eq + 1))};
    if (!find_field(e.key)) throw ConfigError(where + "unknown key '" + e.key + "'");
    if (!seen.insert(e.key).second) throw ConfigError(where + "key '" + e.key + "' given twice");
    entries.push_back(std::move(e));
  }
  ExperimentConfig c;
  for (const auto& e : entries) {
    if (e.key != "profile") continue;
    try {
      find_field("profile")->set(c, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(origin + ":" + std::to_string(e.line) + ": " + err.what());
    }
  }
  c = profile_defaults(c.profile);
  for (const auto& e : entries) {
    try {
      find_field(e.key)->set(c, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(origin + ":" + std::to_string(e.line) + ": " + e.key + ": " + err.what());
    }
  }
  check(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = trim(o.substr(0, eq));
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown key '" + key + "'");
    if (key == "profile") {
      ExperimentConfig fresh;
      f->set(fresh, trim(o.substr(eq + 1)));
      const ExperimentConfig defaults = profile_defaults(fresh.profile);
      config.profile = fresh.profile;
      config.embedding_dim = defaults.embedding_dim;
      config.hidden_dim = defaults.hidden_dim;
      continue;
    }
    try {
      f->set(config, trim(o.substr(eq + 1)));
    } catch (const ConfigError& err) {
      throw ConfigError(key + ": " + err.what());
    }
  }
  check(config);
}

std::string to_text(const ExperimentConfig& config) {
  std::string s;
  for (const auto& f : fields()) s += f.key + " = " + f.get(config) + "\n";
  return s;
}

std::string config_hash(const ExperimentConfig& config) { return hash_of(config, false); }
std::string data_hash(const ExperimentConfig& config) { return hash_of(config, true); }

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("MIF_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

tasks::DatasetConfig dataset_config(const ExperimentConfig& c) {
  tasks::DatasetConfig d;
  d.train = c.train_episodes;
  d.valid_seen = c.valid_seen_episodes;
  d.valid_unseen = c.valid_unseen_episodes;
  d.master_seed = c.seed;
  d.slice_probability = c.slice_probability;
  const auto weights = split_list(c.task_weights);
  for (std::size_t i = 0; i < weights.size(); ++i) d.task_weights[i] = parse_number<double>(weights[i]);
  return d;
}

controller::ControllerConfig controller_config(const ExperimentConfig& c) {
  controller::ControllerConfig cc;
  cc.embedding_dim = c.controller_embedding_dim;
  cc.hidden_dim = c.controller_hidden_dim;
  cc.learning_rate = c.controller_learning_rate;
  cc.batch_size = c.controller_batch_size;
  cc.max_epochs = c.controller_max_epochs;
  cc.patience = c.controller_patience;
  cc.clip_norm = c.clip_norm;
  cc.seed = mix_seed(c.seed, 0xc001);
  return cc;
}

policy::PolicyDims policy_dims(const ExperimentConfig& c) { return {c.embedding_dim, c.hidden_dim}; }

policy::PolicyTrainConfig policy_train_config(const ExperimentConfig& c, bool modular) {
  policy::PolicyTrainConfig p;
  p.learning_rate = c.learning_rate;
  p.batch_size = c.batch_size;
  p.max_epochs = c.max_epochs;
  p.patience = c.patience;
  p.clip_norm = c.clip_norm;
  p.dropout = c.lstm_dropout;
  p.action_weight = c.action_loss_weight;
  p.target_weight = c.mask_loss_weight;
  p.seed = mix_seed(c.seed, modular ? 0x90d2 : 0x90d1);
  p.detach_handoff = c.detach_handoff;
  p.freeze_encoder = c.freeze_encoder;
  return p;
}

}  // namespace mif::pipeline
