#include "replykit/eval_harness.hpp"

#include <cmath>

#include "doctest.h"
#include "replykit/errors.hpp"
#include "replykit/rng.hpp"
#include "support/scorer_fixtures.hpp"
#include "support/synth_corpus.hpp"

using namespace replykit;
namespace ts = replykit::testsupport;

TEST_CASE("uniform perplexity equals the vocabulary size exactly") {
  Vocabulary vocab({"a", "b", "c"});  // 10 with specials
  UniformScorer model(vocab);
  std::vector<TokenizedPair> test = {
      {vocab.ids_of({"a"}), vocab.ids_of({"b", "c"})},
      {vocab.ids_of({"b"}), vocab.ids_of({"a"})},
  };
  CHECK(std::abs(perplexity(model, test) - 10.0) < 1e-9);
  CHECK_THROWS_AS(static_cast<void>(perplexity(model, {})), Error);
}

TEST_CASE("perplexity is a strict monotone transform of mean likelihood") {
  Vocabulary vocab({"a", "b"});
  std::vector<TokenizedPair> pairs;
  for (int i = 0; i < 20; ++i) {
    pairs.push_back({vocab.ids_of({"a"}), vocab.ids_of({"a", "b"})});
  }
  auto katz = train_katz(pairs, vocab, {});
  UniformScorer uniform(vocab);
  double katz_mean = 0.0;
  double uniform_mean = 0.0;
  for (const auto& p : pairs) {
    katz_mean += score_response(*katz, p.original_ids, p.response_ids);
    uniform_mean += score_response(uniform, p.original_ids, p.response_ids);
  }
  REQUIRE(katz_mean > uniform_mean);  // higher likelihood...
  CHECK(perplexity(*katz, pairs) < perplexity(uniform, pairs));  // ...lower ppl
}

TEST_CASE("mrr and precision_at_k follow their formulas") {
  std::vector<int> ranks = {1, 2, 4};
  CHECK(mrr(ranks) == doctest::Approx(0.5833333333).epsilon(1e-9));
  std::vector<int> ones = {1, 1, 1};
  CHECK(mrr(ones) == 1.0);
  CHECK_THROWS_AS(static_cast<void>(mrr(std::vector<int>{})), Error);

  std::vector<int> pk = {1, 5, 30};
  CHECK(precision_at_k(pk, 10) == doctest::Approx(2.0 / 3.0));
  CHECK(precision_at_k(pk, 30) == 1.0);
  for (int k = 1; k < 40; ++k) {
    CHECK(precision_at_k(pk, k + 1) >= precision_at_k(pk, k));
  }
}

TEST_CASE("rank_of_true_response uses the optimistic tie convention") {
  ResponseSet set;
  set.entries.push_back({{"aa", "bb"}, "i0", Polarity::kNeutral, -1, false, 1});
  set.entries.push_back({{"cc", "dd"}, "i1", Polarity::kNeutral, -1, false, 1});
  set.entries.push_back({{"ee"}, "i2", Polarity::kNeutral, -1, false, 1});
  Vocabulary vocab = ts::response_set_vocab(set);
  UniformScorer uniform(vocab);

  // Both two-token entries tie; the shorter entry strictly beats them.
  TokenizedPair pair{vocab.ids_of({"ee"}), vocab.ids_of({"cc", "dd"})};
  CHECK(rank_of_true_response(uniform, pair, set) == 2);
  TokenizedPair shortest{vocab.ids_of({"ee"}), vocab.ids_of({"ee"})};
  CHECK(rank_of_true_response(uniform, shortest, set) == 1);

  TokenizedPair missing{vocab.ids_of({"ee"}), vocab.ids_of({"aa"})};
  CHECK_THROWS_AS(static_cast<void>(rank_of_true_response(uniform, missing, set)),
                  Error);

  ResponseSet single;
  single.entries.push_back({{"zz"}, "i", Polarity::kNeutral, -1, false, 1});
  Vocabulary v1 = ts::response_set_vocab(single);
  UniformScorer u1(v1);
  TokenizedPair only{{}, v1.ids_of({"zz"})};
  CHECK(rank_of_true_response(u1, only, single) == 1);
}

TEST_CASE("frequency baseline ranks by prior, random is seed-stable") {
  ResponseSet set;
  set.entries.push_back({{"no"}, "a", Polarity::kNegative, std::log(2.0 / 7.0),
                         false, 2});
  set.entries.push_back({{"yes"}, "b", Polarity::kPositive, std::log(5.0 / 7.0),
                         false, 5});
  auto freq = baseline_frequency_ranking(set);
  CHECK(freq == std::vector<std::int32_t>{1, 0});

  Rng r1(42), r2(42);
  CHECK(baseline_random_ranking(10, r1) == baseline_random_ranking(10, r2));
}

TEST_CASE("frequency beats random MRR on a Zipf fixture") {
  ts::SynthSpec spec;
  spec.num_pairs = 600;
  spec.templates = 16;
  spec.seed = 5;
  auto synth = ts::make_patterned_corpus(spec);
  ResponseSet set = template_response_set(synth);
  IngestOptions opts;
  opts.vocab_size = 2000;
  auto ingest = ingest_corpus(synth.corpus, opts);
  auto pairs = tokenize_pairs(ingest.pairs, ingest.vocab);
  REQUIRE(pairs.size() == static_cast<std::size_t>(spec.num_pairs));

  auto freq_ranking = baseline_frequency_ranking(set);
  std::vector<int> freq_ranks, random_ranks;
  Rng rng(9);
  for (const auto& pair : pairs) {
    freq_ranks.push_back(rank_in_ranking(freq_ranking, pair, set, ingest.vocab));
    auto random_ranking = baseline_random_ranking(set.entries.size(), rng);
    random_ranks.push_back(
        rank_in_ranking(random_ranking, pair, set, ingest.vocab));
  }
  CHECK(mrr(freq_ranks) > mrr(random_ranks));
}

TEST_CASE("random baseline precision matches k/|R| within 3 sigma") {
  ResponseSet set = ts::random_response_set(50, 3);
  Vocabulary vocab = ts::response_set_vocab(set);
  const int trials = 10000;
  const int k = 10;
  Rng rng(1);
  // The "true" response for each trial is entry 0.
  TokenizedPair pair{{}, vocab.ids_of(set.entries[0].text)};
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    auto ranking = baseline_random_ranking(set.entries.size(), rng);
    if (rank_in_ranking(ranking, pair, set, vocab) <= k) ++hits;
  }
  double p = static_cast<double>(k) / static_cast<double>(set.entries.size());
  double sigma = std::sqrt(p * (1.0 - p) / trials);
  CHECK(std::abs(static_cast<double>(hits) / trials - p) <= 3.0 * sigma);
}

TEST_CASE("untrained multiclass bow is uniform over the set") {
  ResponseSet set = ts::random_response_set(8, 2);
  Vocabulary vocab = ts::response_set_vocab(set);
  MulticlassBow model({}, set.entries.size(), vocab);
  auto logp = model.class_log_probs(vocab.ids_of({"yes", "no"}));
  for (Eigen::Index i = 0; i < logp.size(); ++i) {
    CHECK(std::exp(logp[i]) == doctest::Approx(1.0 / 8.0));
  }
}

TEST_CASE("multiclass bow separates a 3-class toy") {
  // Three intents selected by a marker token in the original.
  ResponseSet set;
  set.entries.push_back({{"alpha", "."}, "a", Polarity::kNeutral, -1, false, 1});
  set.entries.push_back({{"beta", "."}, "b", Polarity::kNeutral, -1, false, 1});
  set.entries.push_back({{"gamma", "."}, "c", Polarity::kNeutral, -1, false, 1});
  std::vector<TokenList> lists = {{"ma"}, {"mb"}, {"mc"}};
  for (const auto& e : set.entries) lists.push_back(e.text);
  Vocabulary vocab = build_vocab(lists, 100);

  Rng rng(4);
  std::vector<TokenizedPair> pairs;
  for (int i = 0; i < 300; ++i) {
    int cls = static_cast<int>(rng.below(3));
    const char* marker = cls == 0 ? "ma" : cls == 1 ? "mb" : "mc";
    pairs.push_back({vocab.ids_of({marker}),
                     vocab.ids_of(set.entries[cls].text)});
  }
  BowConfig config;
  config.epochs = 12;
  auto model = train_multiclass_bow(pairs, set, vocab, config);

  int correct = 0;
  for (int i = 0; i < 60; ++i) {
    int cls = static_cast<int>(rng.below(3));
    const char* marker = cls == 0 ? "ma" : cls == 1 ? "mb" : "mc";
    auto logp = model.class_log_probs(vocab.ids_of({marker}));
    Eigen::Index best;
    logp.maxCoeff(&best);
    if (best == cls) ++correct;
  }
  CHECK(correct >= 57);  // >= 95%

  CHECK_THROWS_AS(static_cast<void>(train_multiclass_bow(
                      {pairs[0]}, set, vocab, config)),
                  Error);
}

TEST_CASE("auc handles the standard cases") {
  std::vector<double> perfect = {0.9, 0.8, 0.2, 0.1};
  std::vector<bool> labels = {true, true, false, false};
  CHECK(auc(perfect, labels) == 1.0);

  std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  CHECK(auc(flat, labels) == 0.5);

  // Hand-counted: 8 of 9 pairs concordant.
  std::vector<double> hand = {0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
  std::vector<bool> hand_labels = {true, true, false, true, false, false};
  CHECK(auc(hand, hand_labels) == doctest::Approx(8.0 / 9.0));

  CHECK_THROWS_AS(static_cast<void>(auc(perfect, {true, true, true, true})),
                  Error);
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(6);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (int i = 0; i < 200; ++i) {
    scores.push_back(rng.uniform(-3.0, 3.0));
    labels.push_back(rng.uniform() < 0.4);
  }
  double base = auc(scores, labels);
  std::vector<double> transformed;
  for (double s : scores) transformed.push_back(std::exp(0.5 * s) + 7.0);
  CHECK(auc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("temporal split keeps order") {
  std::vector<TokenizedPair> pairs(10);
  for (int i = 0; i < 10; ++i) pairs[i].original_ids = {i};
  auto split = temporal_split(pairs, 0.8);
  CHECK(split.train.size() == 8);
  CHECK(split.test.size() == 2);
  CHECK(split.test[0].original_ids[0] == 8);
  for (const auto& tr : split.train) {
    for (const auto& te : split.test) {
      CHECK(tr.original_ids[0] < te.original_ids[0]);
    }
  }
}

TEST_CASE("report renders JSON and a table") {
  EvalReport report;
  report.rankings["random"] = {0.01, 0.02, 0.004, 100};
  report.rankings["frequency"] = {0.3, 0.4, 0.15, 100};
  report.perplexities["uniform"] = 250.0;
  report.has_auc = true;
  report.trigger_auc = 0.854;
  report.beam_curve = {{1, 0.4}, {16, 0.9}};
  std::string json = report.to_json();
  CHECK(json.find("\"auc\": 0.854") != std::string::npos);
  CHECK(json.find("frequency") != std::string::npos);
  std::string table = report.to_table();
  CHECK(table.find("Precision@10") != std::string::npos);
  CHECK(table.find("b=16") != std::string::npos);
}
