#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "replykit/hash.hpp"
#include "replykit/response_space.hpp"
#include "replykit/scoring.hpp"
#include "replykit/search.hpp"
#include "replykit/tensor_pack.hpp"

namespace replykit {

// exp(-(1/W) * sum log P(r | o)) with W the total response token count
// including each terminal EOM. Throws Error(kZeroProbability) naming the
// offending sample.
double perplexity(const ScorerModel& model,
                  const std::vector<TokenizedPair>& test);

// 1-based rank of the pair's response among all entries, scored by the model.
// Ties take the optimistic minimum rank. Throws Error(kResponseNotInSet).
int rank_of_true_response(const ScorerModel& model, const TokenizedPair& pair,
                          const ResponseSet& set);

double mrr(std::span<const int> ranks);
double precision_at_k(std::span<const int> ranks, int k);

// Message-independent baseline rankings (entry indices, best first).
std::vector<std::int32_t> baseline_random_ranking(std::size_t entry_count,
                                                  Rng& rng);
std::vector<std::int32_t> baseline_frequency_ranking(const ResponseSet& set);

// Position of the pair's response in a fixed ranking.
int rank_in_ranking(const std::vector<std::int32_t>& ranking,
                    const TokenizedPair& pair, const ResponseSet& set,
                    const Vocabulary& vocab);

// Index of the entry whose text matches the response, if any.
std::optional<std::int32_t> entry_of_response(const TokenizedPair& pair,
                                              const ResponseSet& set,
                                              const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Multiclass bag-of-words baseline: hashed unigrams of the original message,
// summed embeddings, three ReLU layers, softmax over the response set.

struct BowConfig {
  std::uint32_t buckets = 1u << 12;
  int embed_dim = 16;
  std::array<int, 3> hidden = {32, 32, 16};
  int epochs = 10;
  double learning_rate = 0.1;
  std::uint64_t rng_seed = 11;
  std::uint64_t hash_seed = kDefaultHashSeed;
};

class MulticlassBow {
 public:
  MulticlassBow(BowConfig config, std::size_t num_classes,
                const Vocabulary& vocab);

  std::vector<std::uint32_t> featurize(std::span<const TokenId> original) const;
  Eigen::VectorXd class_log_probs(std::span<const TokenId> original) const;

  TensorPack& params() { return params_; }
  std::size_t num_classes() const { return num_classes_; }

 private:
  friend MulticlassBow train_multiclass_bow(
      const std::vector<TokenizedPair>& pairs, const ResponseSet& set,
      const Vocabulary& vocab, const BowConfig& config);

  BowConfig config_;
  std::size_t num_classes_;
  const Vocabulary* vocab_;
  TensorPack params_;
};

// Trains only on pairs whose response is in the set. Throws
// Error(kSingleClassData) with fewer than two observed classes.
MulticlassBow train_multiclass_bow(const std::vector<TokenizedPair>& pairs,
                                   const ResponseSet& set,
                                   const Vocabulary& vocab,
                                   const BowConfig& config);

// ---------------------------------------------------------------------------

// Mann-Whitney AUC with midrank tie handling. Throws Error(kSingleClassData).
double auc(std::span<const double> scores, const std::vector<bool>& labels);

// Temporal split: the first `train_fraction` of pairs (file order is
// delivery order) train, the rest test.
struct EvalSplit {
  std::vector<TokenizedPair> train;
  std::vector<TokenizedPair> test;
};
EvalSplit temporal_split(const std::vector<TokenizedPair>& pairs,
                         double train_fraction = 0.8);

// ---------------------------------------------------------------------------

struct RankingMetrics {
  double p_at_10 = 0.0;
  double p_at_20 = 0.0;
  double mrr = 0.0;
  std::size_t samples = 0;
};

RankingMetrics ranking_metrics(std::span<const int> ranks);

struct EvalReport {
  std::map<std::string, RankingMetrics> rankings;
  std::map<std::string, double> perplexities;
  bool has_auc = false;
  double trigger_auc = 0.0;
  std::vector<std::pair<std::size_t, double>> beam_curve;

  std::string to_json() const;
  std::string to_table() const;
};

}  // namespace replykit
