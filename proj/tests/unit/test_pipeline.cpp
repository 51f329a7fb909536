#include "mif/errors.hpp"
#include "mif/io.hpp"
#include "mif/numerics/checkpoint.hpp"
#include "mif/pipeline/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <unistd.h>
#include <sys/wait.h>

using namespace mif;
using namespace mif::pipeline;
namespace fs = std::filesystem;
using mif::world::Json;

namespace {

const fs::path kGolden = MIF_TEST_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mif_pipeline_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny(const fs::path& dir, std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.seed = seed;
  c.train_episodes = 60;
  c.valid_seen_episodes = 40;
  c.valid_unseen_episodes = 40;
  c.controller_embedding_dim = 8;
  c.controller_hidden_dim = 8;
  c.controller_max_epochs = 1;
  c.embedding_dim = 8;
  c.hidden_dim = 8;
  c.max_epochs = 1;
  c.output_dir = dir.string();
  return c;
}

void train_all(const ExperimentConfig& c) {
  gen_data(c);
  train_controller_stage(c);
  train_monolithic_stage(c);
  finetune_modular_stage(c);
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(MIF_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

template <class E>
std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected exception";
  return {};
}

}  // namespace

TEST(Config, DefaultsAndProfiles) {
  const ExperimentConfig c;
  EXPECT_EQ(c.embedding_dim, 32u);
  EXPECT_EQ(c.hidden_dim, 64u);
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-4);
  EXPECT_EQ(c.batch_size, 8);
  EXPECT_DOUBLE_EQ(c.lstm_dropout, 0.3);
  EXPECT_EQ(c.train_episodes, 3000);
  const auto paper = parse_config("profile = paper-reference\n");
  EXPECT_EQ(paper.embedding_dim, 100u);
  EXPECT_EQ(paper.hidden_dim, 512u);
  // Explicit keys win over the profile regardless of order.
  const auto mixed = parse_config("hidden_dim = 128\nprofile = paper-reference\n");
  EXPECT_EQ(mixed.hidden_dim, 128u);
  EXPECT_EQ(mixed.embedding_dim, 100u);
}

TEST(Config, ParsingAndErrors) {
  const auto c = parse_config("# comment\n  seed = 9   # trailing\n\nlearning_rate=0.001\ndetach_handoff = true\n"
                              "eval_splits = standard-seen, stack-unseen\neval_plan = gold\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-3);
  EXPECT_TRUE(c.detach_handoff);
  EXPECT_EQ(c.eval_splits, (std::vector<std::string>{"standard-seen", "stack-unseen"}));
  EXPECT_EQ(c.eval_plan, evaluation::PlanSource::Gold);

  EXPECT_NE(message_of<ConfigError>([] { parse_config("seed = 1\nbogus = 2\n", "x.cfg"); }).find("x.cfg:2"),
            std::string::npos);
  EXPECT_NE(message_of<ConfigError>([] { parse_config("bogus = 2\n"); }).find("unknown key 'bogus'"), std::string::npos);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("batch_size = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("learning_rate = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("detach_handoff = yes\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
  EXPECT_THROW(parse_config("profile = laptop\n"), ConfigError);
  EXPECT_THROW(parse_config("attn_dropout = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("hidden_dim = 7\n"), ConfigError);
  EXPECT_THROW(parse_config("task_weights = 1,2\n"), ConfigError);
  EXPECT_NO_THROW(parse_config("attn_dropout = 0\n"));
}

TEST(Config, CanonicalTextRoundTripsAndHashes) {
  ExperimentConfig c;
  c.seed = 17;
  c.learning_rate = 3.5e-4;
  c.eval_splits = {"pick2-unseen"};
  c.freeze_encoder = true;
  EXPECT_EQ(parse_config(to_text(c)), c);
  const std::string text = to_text(c);
  EXPECT_EQ(config_keys().size(), std::size_t(std::count(text.begin(), text.end(), '\n')));

  ExperimentConfig moved = c;
  moved.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(moved), config_hash(c));
  ExperimentConfig retuned = c;
  retuned.learning_rate = 1e-3;
  EXPECT_NE(config_hash(retuned), config_hash(c));
  EXPECT_EQ(data_hash(retuned), data_hash(c));
  ExperimentConfig reseeded = c;
  reseeded.seed = 18;
  EXPECT_NE(data_hash(reseeded), data_hash(c));

  apply_overrides(c, {"seed=4", "profile=paper-reference", "max_epochs = 2"});
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.hidden_dim, 512u);
  EXPECT_EQ(c.max_epochs, 2);
  EXPECT_THROW(apply_overrides(c, {"nope=1"}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {"seed"}), ConfigError);
}

TEST(Config, OutputDirectoryEnvironmentOverride) {
  ExperimentConfig c;
  c.output_dir = "from-config";
  ::unsetenv("MIF_OUTPUT_DIR");
  EXPECT_EQ(resolve_output_dir(c), fs::path("from-config"));
  ::setenv("MIF_OUTPUT_DIR", "/tmp/from-env", 1);
  EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/from-env"));
  ::unsetenv("MIF_OUTPUT_DIR");
}

TEST(Pipeline, StagesProvenanceAndRefusals) {
  const fs::path dir = scratch("stages");
  const auto c = tiny(dir);
  const RunLayout run(dir);
  EXPECT_NE(message_of<NotFoundError>([&] { train_monolithic_stage(c); }).find("gen-data"), std::string::npos);
  gen_data(c);
  EXPECT_NE(message_of<NotFoundError>([&] { finetune_modular_stage(c); }).find("train-monolithic"), std::string::npos);
  train_controller_stage(c);
  train_monolithic_stage(c);
  finetune_modular_stage(c);
  eval_stage(c, {}, {{"expert", "stop", "monolithic", "modular"}, {}});
  report_stage(c);

  const auto manifest = Json::parse(read_file(run.data() / "manifest.json"));
  EXPECT_EQ(manifest["data_hash"], data_hash(c));
  EXPECT_EQ(manifest["config_hash"], config_hash(c));
  EXPECT_EQ(manifest["seed"], c.seed);
  for (const auto& p : {run.controller(), run.monolithic(), run.modular()}) {
    const auto ck = load_checkpoint(p);
    EXPECT_EQ(ck.metadata.at("config_hash"), config_hash(c));
    EXPECT_EQ(ck.metadata.at("seed"), std::to_string(c.seed));
    EXPECT_EQ(parse_config(ck.config_text).learning_rate, c.learning_rate);
    EXPECT_EQ(ck.config_text.find("output_dir"), std::string::npos);
  }
  const auto report = Json::parse(read_file(run.reports() / "report.json"));
  for (const auto& r : report["reports"]) {
    EXPECT_EQ(r["provenance"]["config_hash"], config_hash(c));
    if (r["model"] == "expert") {
      EXPECT_EQ(r["average"], 100.0);
      EXPECT_EQ(r["path_completion"], 100.0);
    }
  }
  EXPECT_TRUE(fs::exists(run.results() / "modular" / "stack-unseen.jsonl"));
  EXPECT_TRUE(fs::exists(run.logs() / "modular_stop.json"));

  // A dataset regenerated with another seed no longer matches the checkpoints.
  auto other = c;
  other.seed = 4;
  EXPECT_THROW(train_monolithic_stage(other), ConfigError);

  // Controller trained on a different vocabulary.
  const fs::path alt = scratch("alt");
  auto alt_cfg = tiny(alt, 11);
  gen_data(alt_cfg);
  train_controller_stage(alt_cfg);
  fs::copy_file(RunLayout(alt).controller(), run.controller(), fs::copy_options::overwrite_existing);
  const std::string refusal = message_of<ConfigError>([&] { eval_stage(c, {}, {{"modular"}, {}}); });
  EXPECT_NE(refusal.find("hash"), std::string::npos) << refusal;
  StageOptions forced;
  forced.force = true;
  EXPECT_NO_THROW(eval_stage(c, forced, {{"modular"}, {"standard-seen"}}));

  // Desk checkpoints do not load into a paper-reference evaluation.
  auto paper = c;
  apply_overrides(paper, {"profile=paper-reference"});
  const std::string shapes = message_of<CheckpointError>([&] { eval_stage(paper, {}, {{"monolithic"}, {}}); });
  EXPECT_NE(shapes.find("pol.tokens"), std::string::npos) << shapes;
  EXPECT_NE(shapes.find("pol.head.action.W"), std::string::npos) << shapes;

  EXPECT_THROW(eval_stage(c, {}, {{"oracle"}, {}}), ConfigError);
  EXPECT_THROW(eval_stage(c, {}, {{"expert"}, {"no-such-split"}}), NotFoundError);
}

TEST(Pipeline, InspectEpisodeMatchesGolden) {
  const fs::path dir = scratch("inspect");
  const auto c = tiny(dir);
  gen_data(c);
  EXPECT_EQ(inspect_episode(c, "train-00007"), read_file(kGolden / "inspect_train-00007.txt"));
  EXPECT_THROW(inspect_episode(c, "train-99999"), NotFoundError);
}

TEST(Pipeline, InspectCheckpointCountsTensors) {
  const fs::path dir = scratch("inspect_ck");
  const auto c = tiny(dir);
  train_all(c);
  const auto ck = load_checkpoint(RunLayout(dir).modular());
  const auto text = inspect_checkpoint(RunLayout(dir).modular());
  const auto model = policy::policy_from_checkpoint(ck);
  EXPECT_NE(text.find("tensors " + std::to_string(model.params.size()) + "\n"), std::string::npos) << text;
  EXPECT_NE(text.find("kind policy"), std::string::npos);
  EXPECT_NE(text.find("model_kind modular"), std::string::npos);
  EXPECT_THROW(inspect_checkpoint(dir / "missing.ckpt"), NotFoundError);
}

TEST(Report, GoldenResultsGiveGoldenReport) {
  const fs::path g = kGolden / "report";
  const auto files = build_report(g / "results", read_splits(g / "splits.json"), {"tiny-seen", "tiny-unseen"});
  EXPECT_EQ(files.json, read_file(g / "report.json"));
  EXPECT_EQ(files.text, read_file(g / "report.txt"));
  const auto j = Json::parse(files.json);
  // Monolithic tiny-seen GoTo: seven instances, path weights summing to 5.5.
  EXPECT_NEAR(j["reports"][0]["subgoal_success"][0]["path_weighted"].get<double>(), 100.0 * 5.5 / 7.0, 1e-12);
  EXPECT_NEAR(j["reports"][0]["path_completion"].get<double>(), 100.0 * 2.0 / 3.0, 1e-12);
}

TEST(Determinism, TinyPipelineRerunsBitIdentically) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const auto& d : {a, b}) {
    const auto c = tiny(d, 21);
    train_all(c);
    eval_stage(c);
    report_stage(c);
  }
  for (const std::string f : {"data/train.jsonl", "data/valid_seen.jsonl", "data/valid_unseen.jsonl",
                              "data/splits.json", "data/manifest.json", "controller.ckpt", "monolithic.ckpt",
                              "modular.ckpt", "results/modular/standard-unseen.jsonl", "reports/report.json",
                              "reports/report.txt", "logs/modular.jsonl"})
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
}

TEST(Cli, UsageAndErrors) {
  const fs::path dir = scratch("cli");
  EXPECT_NE(run_cli(""), 0);
  EXPECT_NE(run_cli("frobnicate"), 0);
  EXPECT_NE(run_cli("inspect --episode a --checkpoint b"), 0);
  EXPECT_NE(run_cli("inspect"), 0);
  EXPECT_EQ(run_cli("config --set seed=3"), 0);
  EXPECT_NE(run_cli("config --set bogus=3"), 0);
  const std::string out = "--set output_dir=" + dir.string();
  EXPECT_EQ(run_cli("eval " + out), 1);
  EXPECT_EQ(run_cli("gen-data -q " + out + " --set train_episodes=30 --set valid_seen_episodes=40 "
                    "--set valid_unseen_episodes=40 --workers 2"),
            0);
  EXPECT_EQ(run_cli("inspect " + out + " --episode valid_seen-00001"), 0);
  EXPECT_EQ(run_cli("report --results " + (kGolden / "report" / "results").string() + " --splits " +
                    (kGolden / "report" / "splits.json").string() + " --out " + (dir / "rep").string() +
                    " --set eval_splits=tiny-seen,tiny-unseen -q"),
            0);
  EXPECT_EQ(read_file(dir / "rep" / "report.txt"), read_file(kGolden / "report" / "report.txt"));
}
