#include "mif/controller/controller.hpp"
#include "mif/controller/crf.hpp"
#include "mif/errors.hpp"
#include "mif/numerics/grad_check.hpp"
#include "mif/numerics/ops.hpp"
#include "oracles/crf_enumeration.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

using namespace mif;
using namespace mif::controller;
using S = world::SubgoalType;

namespace {

struct Draw {
  Tensor U, B, start;
};

Draw random_crf(Rng& rng, std::size_t N, std::size_t K, double spread = 2.0) {
  Draw d{Tensor::zeros(N, K), Tensor::zeros(K, K), Tensor::zeros(K)};
  for (auto& v : d.U.values()) v = uniform(rng, -spread, spread);
  for (auto& v : d.B.values()) v = uniform(rng, -spread, spread);
  for (auto& v : d.start.values()) v = uniform(rng, -spread, spread);
  return d;
}

double nll_value(const Draw& d, const std::vector<int>& gold) {
  Tape tape;
  return crf_nll(tape.constant(d.U), tape.constant(d.B), tape.constant(d.start), gold).scalar();
}

const tasks::Dataset& small_dataset() {
  static const tasks::Dataset d = [] {
    tasks::DatasetConfig c;
    c.master_seed = 17;
    c.train = 200;
    c.valid_seen = 50;
    c.valid_unseen = 50;
    return tasks::build_dataset(c);
  }();
  return d;
}

std::vector<const tasks::Episode*> ptrs(const std::vector<tasks::Episode>& v, std::size_t n = SIZE_MAX) {
  std::vector<const tasks::Episode*> out;
  for (std::size_t i = 0; i < v.size() && i < n; ++i) out.push_back(&v[i]);
  return out;
}

}  // namespace

TEST(Crf, MatchesExhaustiveEnumeration) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  for (int draw = 0; draw < 200; ++draw) {
    const std::size_t N = 1 + uniform_index(rng, 6), K = 1 + uniform_index(rng, 4);
    const Draw d = random_crf(rng, N, K);
    const auto e = oracle::enumerate_crf(d.U, d.B, d.start);
    const CrfPath path = viterbi_decode(d.U, d.B, d.start);
    ASSERT_EQ(path.labels, e.best_path) << "draw " << draw;
    EXPECT_NEAR(path.score, e.best_score, 1e-8);
    const double log_z = log_partition(d.U, d.B, d.start);
    EXPECT_NEAR(log_z, e.log_z, 1e-8);
    for (std::size_t p = 0; p < e.paths.size(); ++p) {
      EXPECT_LE(e.scores[p], log_z + 1e-12);
      EXPECT_NEAR(sequence_score(d.U, d.B, d.start, e.paths[p]), e.scores[p], 1e-12);
    }
    const auto& gold = e.paths[uniform_index(rng, e.paths.size())];
    const double nll = nll_value(d, gold);
    EXPECT_GE(nll, 0.0);
    EXPECT_NEAR(nll, e.log_z - oracle::chain_score(d.U, d.B, d.start, gold), 1e-8);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
}

TEST(Crf, ProbabilitiesSumToOne) {
  Rng rng(5);
  for (int draw = 0; draw < 30; ++draw) {
    const Draw d = random_crf(rng, 1 + uniform_index(rng, 4), 1 + uniform_index(rng, 4));
    const auto e = oracle::enumerate_crf(d.U, d.B, d.start);
    double total = 0.0;
    for (const auto& p : e.paths) total += std::exp(-nll_value(d, p));
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(Crf, UniformSingleTokenLossIsLogK) {
  const Draw d{Tensor::zeros(1, 8), Tensor::zeros(8, 8), Tensor::zeros(8)};
  EXPECT_NEAR(nll_value(d, {3}), std::log(8.0), 1e-12);
  std::vector<int> one(1, 0);
  EXPECT_NEAR(log_partition(d.U, d.B, d.start), std::log(8.0), 1e-12);
}

TEST(Crf, TiesGoToLowestLabel) {
  const Draw d{Tensor::zeros(4, 3), Tensor::zeros(3, 3), Tensor::zeros(3)};
  EXPECT_EQ(viterbi_decode(d.U, d.B, d.start).labels, (std::vector<int>{0, 0, 0, 0}));
  Draw e = d;
  e.U.at(2, 1) = 1.0;
  EXPECT_EQ(viterbi_decode(e.U, e.B, e.start).labels, (std::vector<int>{0, 0, 1, 0}));
}

TEST(Crf, SingleTokenIsArgmaxOfStartPlusUnary) {
  Tensor U = Tensor::zeros(1, 3), B = Tensor::zeros(3, 3), start = Tensor::vector({0.5, 0.0, 0.2});
  U.at(0, 1) = 0.6;
  EXPECT_EQ(viterbi_decode(U, B, start).labels, (std::vector<int>{1}));
  U.at(0, 1) = 0.4;
  EXPECT_EQ(viterbi_decode(U, B, start).labels, (std::vector<int>{0}));
}

TEST(Crf, DecodeInvariantToUnaryShift) {
  Rng rng(8);
  for (int draw = 0; draw < 50; ++draw) {
    const Draw d = random_crf(rng, 5, 4);
    Draw shifted = d;
    const double c = uniform(rng, -10, 10);
    for (auto& v : shifted.U.values()) v += c;
    EXPECT_EQ(viterbi_decode(d.U, d.B, d.start).labels, viterbi_decode(shifted.U, shifted.B, shifted.start).labels);
  }
}

TEST(Crf, NllGradientMatchesFiniteDifferences) {
  Rng rng(31);
  for (int draw = 0; draw < 10; ++draw) {
    const std::size_t N = 2 + uniform_index(rng, 4), K = 2 + uniform_index(rng, 3);
    const Draw d = random_crf(rng, N, K, 1.0);
    std::vector<int> gold(N);
    for (auto& g : gold) g = int(uniform_index(rng, K));
    ParameterSet params;
    const auto iu = params.add("U", d.U), ib = params.add("B", d.B), is = params.add("start", d.start);
    const auto report = grad_check(
        [&](Tape& t) { return crf_nll(t.param(iu), t.param(ib), t.param(is), gold); }, params, 1e-4);
    EXPECT_TRUE(report.passed) << report.worst_block << " " << report.max_relative_error;
  }
}

TEST(Crf, ShapeErrors) {
  Tape tape;
  EXPECT_THROW(log_partition(Tensor::zeros(2, 3), Tensor::zeros(3, 2), Tensor::zeros(3)), ShapeError);
  EXPECT_THROW(log_partition(Tensor::zeros(2, 3), Tensor::zeros(3, 3), Tensor::zeros(2)), ShapeError);
  std::vector<int> gold{0};
  EXPECT_THROW(crf_nll(tape.constant(Tensor::zeros(2, 3)), tape.constant(Tensor::zeros(3, 3)),
                       tape.constant(Tensor::zeros(3)), gold),
               ShapeError);
}

TEST(Segments, FromLabels) {
  const auto segs = segments_from_labels({S::GoTo, S::GoTo, S::PickUp});
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0], (LabeledSpan{0, 2, S::GoTo}));
  EXPECT_EQ(segs[1], (LabeledSpan{2, 3, S::PickUp}));
  EXPECT_EQ(segments_from_labels({S::Put, S::Put, S::Put}).size(), 1u);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    std::vector<S> labels(1 + uniform_index(rng, 30));
    for (auto& l : labels) l = S(uniform_index(rng, 3));
    EXPECT_EQ(labels_from_segments(segments_from_labels(labels)), labels);
  }
}

TEST(Segments, ExactMatchIsStrict) {
  const std::vector<LabeledSpan> gold{{0, 4, S::GoTo}, {4, 9, S::PickUp}};
  EXPECT_TRUE(exact_match(gold, gold));
  const std::vector<LabeledSpan> off{{0, 5, S::GoTo}, {5, 9, S::PickUp}};
  EXPECT_FALSE(exact_match(off, gold));
  EXPECT_TRUE(type_match(off, gold));

  std::vector<std::vector<LabeledSpan>> predicted, golds;
  const bool expected_exact[10] = {true, false, true, true, false, true, true, true, false, true};
  for (int i = 0; i < 10; ++i) {
    golds.push_back(gold);
    predicted.push_back(expected_exact[i] ? gold : (i == 4 ? std::vector<LabeledSpan>{{0, 9, S::GoTo}} : off));
  }
  const MatchStats m = corpus_match(predicted, golds);
  EXPECT_EQ(m.episodes, 10);
  EXPECT_EQ(m.exact, 7);
  EXPECT_DOUBLE_EQ(m.exact_accuracy(), 0.7);
  EXPECT_DOUBLE_EQ(m.type_accuracy(), 0.9);
}

TEST(ControllerModel, UnaryScoresShapeAndDeterminism) {
  const auto& d = small_dataset();
  ControllerConfig config;
  const auto model = ControllerModel::init(tasks::Vocabulary::from_episodes(d.train), config);
  const Tensor one = unary_scores(model, {"walk"});
  EXPECT_EQ(one.shape(), (std::vector<std::size_t>{1, kNumLabels}));
  const auto& tokens = d.train[0].tokens;
  EXPECT_EQ(unary_scores(model, tokens), unary_scores(model, tokens));
  EXPECT_TRUE(unary_scores(model, tokens).all_finite());
  EXPECT_THROW(unary_scores(model, std::vector<std::string>{}), DomainError);
  EXPECT_EQ(unary_scores(model, {"zzz-not-a-word"}), unary_scores(model, {tasks::Vocabulary::kUnknownToken}));
}

TEST(ControllerModel, GradientsMatchFiniteDifferences) {
  const auto& d = small_dataset();
  ControllerConfig config;
  config.embedding_dim = 6;
  config.hidden_dim = 5;
  auto model = ControllerModel::init(tasks::Vocabulary::from_episodes(d.train), config);
  Rng rng(9);
  for (auto& v : model.params["ctrl.transitions"].values()) v = uniform(rng, -1, 1);
  tasks::Episode ep = d.train[0];
  ep.tokens.resize(7);
  ep.labels.resize(7);
  GradCheckOptions options;
  options.max_elements_per_block = 40;
  const auto sum_scores = grad_check(
      [&](Tape& t) { return ops::sum(ops::concat({ops::row(unary_scores(t, model, model.vocab.encode(ep.tokens)), 2)})); },
      model.params, 1e-4, options);
  EXPECT_TRUE(sum_scores.passed) << sum_scores.worst_block << " " << sum_scores.max_relative_error;
  const auto nll = grad_check([&](Tape& t) { return controller_loss(t, model, ep); }, model.params, 1e-4, options);
  EXPECT_TRUE(nll.passed) << nll.worst_block << " " << nll.max_relative_error;
}

TEST(ControllerTraining, OverfitsFiftyEpisodes) {
  const auto& d = small_dataset();
  const auto train = ptrs(d.train, 50);
  ControllerConfig config;
  config.max_epochs = 40;
  config.patience = 40;
  ControllerTrainingLog log;
  const auto model = train_controller(train, train, config, &log);
  ASSERT_FALSE(log.epochs.empty());
  EXPECT_LT(log.epochs.front().train_loss, log.initial_loss);
  EXPECT_DOUBLE_EQ(evaluate_controller(model, train).exact_accuracy(), 1.0);

  const auto reloaded = controller_from_checkpoint(decode_checkpoint(encode_checkpoint(controller_checkpoint(model, "x"))));
  EXPECT_EQ(reloaded.params, model.params);
  for (const auto* e : ptrs(d.valid_unseen, 10)) EXPECT_EQ(predict_labels(reloaded, e->tokens), predict_labels(model, e->tokens));
}

TEST(ControllerTraining, DeterministicGivenSeed) {
  const auto& d = small_dataset();
  const auto train = ptrs(d.train, 16);
  ControllerConfig config;
  config.embedding_dim = 12;
  config.hidden_dim = 10;
  config.max_epochs = 2;
  EXPECT_EQ(train_controller(train, train, config).params, train_controller(train, train, config).params);
}
