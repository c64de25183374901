#include "replykit/trigger.hpp"

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "replykit/errors.hpp"
#include "replykit/rng.hpp"
#include "support/gradcheck.hpp"

using namespace replykit;
namespace ts = replykit::testsupport;

namespace {

TokenizedMessage simple_message(std::vector<TokenList> sentences,
                                TokenList subject = {}) {
  TokenizedMessage m;
  m.body_sentences = std::move(sentences);
  m.subject_tokens = std::move(subject);
  m.normalized = true;
  return m;
}

TriggerConfig small_config() {
  TriggerConfig config;
  config.buckets = 1024;
  config.embed_dim = 8;
  config.hidden = {8, 8, 8};
  config.dropout = 0.0;
  config.epochs = 8;
  config.rng_seed = 9;
  return config;
}

// Linearly separable synthetic set: positives contain marker tokens,
// negatives contain promo tokens.
std::vector<TriggerExample> separable_examples(int per_class,
                                               std::uint32_t buckets,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TriggerExample> out;
  for (int i = 0; i < per_class * 2; ++i) {
    bool label = i % 2 == 0;
    TokenList sentence;
    for (int t = 0; t < 6; ++t) {
      if (label) {
        sentence.push_back("ping" + std::to_string(rng.below(8)));
      } else {
        sentence.push_back("promo" + std::to_string(rng.below(8)));
      }
    }
    RawMessage raw;
    raw.id = "m" + std::to_string(i);
    raw.sender_in_address_book = label;
    raw.replied = label;
    raw.reply_from_mobile = label;
    TriggerExample e;
    e.features = extract_features(simple_message({sentence}), raw, buckets);
    e.label = label;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST_CASE("feature extraction is deterministic and counts bigrams") {
  RawMessage raw;
  raw.id = "m";
  raw.sender_in_address_book = true;
  auto msg = simple_message({{"see", "you", "at", "noon"}, {"ok", "?"}},
                            {"plans"});
  auto a = extract_features(msg, raw, 4096);
  auto b = extract_features(msg, raw, 4096);
  CHECK(a.sparse == b.sparse);
  CHECK(a.dense == b.dense);

  CHECK(a.sparse[TriggerFeatures::kBodyUnigram].size() == 6);
  // Bigrams per sentence: (4-1) + (2-1).
  CHECK(a.sparse[TriggerFeatures::kBodyBigram].size() == 4);
  CHECK(a.sparse[TriggerFeatures::kSubjectUnigram].size() == 1);
  CHECK(a.dense[0] == 1.0);
  CHECK(a.dense[3] == 1.0);  // <= 10 body tokens
  for (std::uint32_t id : a.sparse[TriggerFeatures::kBodyUnigram]) {
    CHECK(id < 4096);
  }

  // A different hash seed relocates features.
  auto c = extract_features(msg, raw, 4096, 123456);
  CHECK(a.sparse != c.sparse);
}

TEST_CASE("empty body still has dense features") {
  RawMessage raw;
  raw.id = "m";
  auto f = extract_features(simple_message({}), raw, 1024);
  CHECK(f.sparse[TriggerFeatures::kBodyUnigram].empty());
  CHECK(f.sparse[TriggerFeatures::kBodyBigram].empty());
  CHECK(f.dense.sum() == 1.0);  // only the shortest length bucket
}

TEST_CASE("zero-initialized model scores one half") {
  TriggerModel model(small_config());
  RawMessage raw;
  raw.id = "m";
  auto f = extract_features(simple_message({{"any", "text"}}), raw, 1024);
  CHECK(model.score(f) == doctest::Approx(0.5));
}

TEST_CASE("a positive-weight feature raises the score monotonically") {
  TriggerConfig config = small_config();
  TriggerModel model(config);
  Rng rng(3);
  auto& flat = model.params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = rng.uniform(0.001, 0.05);  // all-positive weights
  }
  RawMessage raw;
  raw.id = "m";
  auto one = extract_features(simple_message({{"hello"}}), raw, config.buckets);
  auto two =
      extract_features(simple_message({{"hello", "hello"}}), raw, config.buckets);
  CHECK(model.score(two) > model.score(one));
}

TEST_CASE("trigger gradients match central finite differences") {
  TriggerConfig config = small_config();
  TriggerModel model(config);
  Rng rng(17);
  auto& flat = model.params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = rng.uniform(-0.3, 0.3);
  }
  auto examples = separable_examples(1, config.buckets, 5);
  std::vector<TriggerFeatures> features = {examples[0].features,
                                           examples[1].features};
  std::vector<bool> labels = {examples[0].label, examples[1].label};

  TensorPack grad = model.params().zeros_like();
  model.batch_loss(features, labels, &grad);
  auto result = ts::gradient_check(
      model.params().flat(), grad.flat(),
      [&] { return model.batch_loss(features, labels, nullptr); });
  CHECK(result.rel_error < 1e-3);
}

TEST_CASE("training separates separable data") {
  TriggerConfig config = small_config();
  config.dropout = 0.2;
  config.epochs = 12;
  auto examples = separable_examples(150, config.buckets, 21);
  auto trained = train_trigger(examples, config);
  CHECK(trained.stats.balanced_positives == trained.stats.balanced_negatives);

  auto held_out = separable_examples(100, config.buckets, 1234);
  int correct = 0;
  double pos_mean = 0.0, neg_mean = 0.0;
  int pos_n = 0, neg_n = 0;
  for (const auto& e : held_out) {
    double s = trained.model->score(e.features);
    if ((s > 0.5) == e.label) ++correct;
    if (e.label) {
      pos_mean += s;
      ++pos_n;
    } else {
      neg_mean += s;
      ++neg_n;
    }
  }
  CHECK(static_cast<double>(correct) / held_out.size() >= 0.99);
  CHECK(pos_mean / pos_n > neg_mean / neg_n);
}

TEST_CASE("downsampling balances lopsided classes") {
  TriggerConfig config = small_config();
  config.epochs = 1;
  auto examples = separable_examples(50, config.buckets, 2);
  // Drop most positives so negatives dominate.
  std::vector<TriggerExample> lopsided;
  int pos_kept = 0;
  for (const auto& e : examples) {
    if (e.label && pos_kept >= 10) continue;
    if (e.label) ++pos_kept;
    lopsided.push_back(e);
  }
  auto trained = train_trigger(lopsided, config);
  CHECK(trained.stats.balanced_positives == 10);
  CHECK(trained.stats.balanced_negatives == 10);
}

TEST_CASE("single-class data is rejected") {
  TriggerConfig config = small_config();
  auto examples = separable_examples(5, config.buckets, 2);
  std::vector<TriggerExample> positives_only;
  for (const auto& e : examples) {
    if (e.label) positives_only.push_back(e);
  }
  CHECK_THROWS_AS(static_cast<void>(train_trigger(positives_only, config)),
                  Error);
}

TEST_CASE("inference is deterministic with dropout trained in") {
  TriggerConfig config = small_config();
  config.dropout = 0.4;
  auto examples = separable_examples(40, config.buckets, 31);
  auto trained = train_trigger(examples, config);
  double a = trained.model->score(examples[0].features);
  double b = trained.model->score(examples[0].features);
  CHECK(a == b);
  CHECK(a > 0.0);
  CHECK(a < 1.0);
}

TEST_CASE("should_trigger is strict") {
  CHECK(should_trigger(0.9, 0.5));
  CHECK_FALSE(should_trigger(0.5, 0.5));
  CHECK_FALSE(should_trigger(0.2, 0.5));
}

TEST_CASE("calibration hits the target fraction") {
  Rng rng(83);
  std::vector<double> scores;
  for (int i = 0; i < 2000; ++i) scores.push_back(rng.uniform(0.01, 0.99));
  double threshold = calibrate_threshold(scores, 0.11);
  int triggered = 0;
  for (double s : scores) {
    if (should_trigger(s, threshold)) ++triggered;
  }
  double fraction = static_cast<double>(triggered) / scores.size();
  CHECK(std::abs(fraction - 0.11) <= 0.01);

  CHECK(calibrate_threshold({0.5, 0.4}, 0.0) == 0.5);
  CHECK(calibrate_threshold({0.5, 0.4}, 1.0) == doctest::Approx(0.2));
}

TEST_CASE("trigger model round-trips through its file") {
  TriggerConfig config = small_config();
  auto examples = separable_examples(30, config.buckets, 7);
  auto trained = train_trigger(examples, config);
  trained.model->set_threshold(0.37);
  trained.model->save("trigger_a.rfsm", 42);

  auto loaded = TriggerModel::load("trigger_a.rfsm", 42);
  CHECK(loaded->threshold() == 0.37);
  loaded->save("trigger_b.rfsm", 42);
  auto read_all = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(read_all("trigger_a.rfsm") == read_all("trigger_b.rfsm"));
  // Feature hashing is persisted: same ids, close scores after the f32 trip.
  double before = trained.model->score(examples[0].features);
  double after = loaded->score(examples[0].features);
  CHECK(before == doctest::Approx(after).epsilon(1e-4));

  CHECK_THROWS_AS(static_cast<void>(TriggerModel::load("trigger_a.rfsm", 43)),
                  Error);
}

TEST_CASE("corpus labeling uses mobile replies vs unreplied") {
  std::vector<RawMessage> corpus;
  auto add = [&](const char* id, bool replied, bool mobile) {
    RawMessage m;
    m.id = id;
    m.body = "can you see it and let me know what you think ?";
    m.replied = replied;
    m.reply_from_mobile = mobile;
    corpus.push_back(m);
  };
  add("pos", true, true);
  add("desktop", true, false);  // excluded
  add("neg", false, false);
  Vocabulary vocab = build_vocab({tokenize(corpus[0].body)}, 100);
  TriggerConfig config = small_config();
  auto examples = trigger_examples_from_corpus(corpus, vocab, config);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].label);
  CHECK_FALSE(examples[1].label);
}
