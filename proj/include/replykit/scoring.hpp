#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "replykit/corpus_ingest.hpp"
#include "replykit/tensor_pack.hpp"
#include "replykit/vocab.hpp"

namespace replykit {

// Stepwise conditional response model P(r | o). start_state consumes the
// original message followed by the end-of-message token and yields the
// distribution for the first response token; each step consumes one response
// token and yields the distribution for the next. Every log_probs vector is a
// normalized log-distribution over the vocabulary.
class ScorerModel {
 public:
  struct State {
    virtual ~State() = default;
  };
  using StatePtr = std::shared_ptr<const State>;

  struct Decode {
    Eigen::VectorXd log_probs;
    StatePtr state;
  };

  virtual ~ScorerModel() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual Decode start_state(std::span<const TokenId> original) const = 0;
  virtual Decode step(const StatePtr& state, TokenId token) const = 0;
  virtual std::string kind() const = 0;
};

// Sum of stepwise log-probabilities of `response`, including the terminal
// end-of-message step. Throws Error(kEmptyResponse) on an empty response.
double score_response(const ScorerModel& model,
                      std::span<const TokenId> original,
                      std::span<const TokenId> response);

// Ancestral sampling until EOM or max_len tokens; the returned list excludes
// the terminal EOM. Deterministic for a fixed rng_seed.
std::vector<TokenId> sample_response(const ScorerModel& model,
                                     std::span<const TokenId> original,
                                     std::uint64_t rng_seed,
                                     std::size_t max_len);

// Maximum-entropy baseline: every token equally likely at every step.
class UniformScorer : public ScorerModel {
 public:
  explicit UniformScorer(const Vocabulary& vocab);
  const Vocabulary& vocab() const override { return vocab_; }
  Decode start_state(std::span<const TokenId> original) const override;
  Decode step(const StatePtr& state, TokenId token) const override;
  std::string kind() const override { return "uniform"; }

 private:
  Vocabulary vocab_;
  Eigen::VectorXd log_probs_;
};

// ---------------------------------------------------------------------------
// Recurrent scorer

struct RecurrentConfig {
  int embed_dim = 16;
  int hidden_dim = 32;
  int projection_dim = 16;
  int epochs = 10;
  double learning_rate = 0.1;
  double clip_value = 1.0;
  std::uint64_t rng_seed = 1;
};

// Single gated recurrent cell (input/forget/output gates) with a linear
// recurrent projection feeding both the recurrence and the softmax. The same
// cell encodes the original message and decodes the response.
class RecurrentScorer : public ScorerModel {
 public:
  RecurrentScorer(Vocabulary vocab, RecurrentConfig config);

  const Vocabulary& vocab() const override { return vocab_; }
  Decode start_state(std::span<const TokenId> original) const override;
  Decode step(const StatePtr& state, TokenId token) const override;
  std::string kind() const override { return "recurrent"; }

  const RecurrentConfig& config() const { return config_; }
  TensorPack& params() { return params_; }
  const TensorPack& params() const { return params_; }

  // Loss and gradient of -log P(response | original) for one pair; exposed
  // for the trainer and for finite-difference checks.
  double pair_loss(std::span<const TokenId> original,
                   std::span<const TokenId> response,
                   TensorPack* grad) const;

  void save(const std::string& path) const;
  static std::unique_ptr<RecurrentScorer> load(const std::string& path,
                                               const Vocabulary& vocab);

 private:
  struct CellState;
  Decode advance(const Eigen::VectorXd& c_prev, const Eigen::VectorXd& p_prev,
                 TokenId token) const;

  Vocabulary vocab_;
  RecurrentConfig config_;
  TensorPack params_;
};

struct TrainStats {
  std::vector<double> epoch_token_loss;  // mean loss per predicted token
  double max_post_clip_norm = 0.0;
  double min_accumulator_delta = 0.0;  // most negative step-to-step change
};

struct TrainedRecurrent {
  std::unique_ptr<RecurrentScorer> model;
  TrainStats stats;
};

// AdaGrad over rng_seed-shuffled pairs, one pair per update, global-norm clip
// at config.clip_value. Throws kEmptyCorpus / kDivergedLoss.
TrainedRecurrent train_recurrent(const std::vector<TokenizedPair>& pairs,
                                 const Vocabulary& vocab,
                                 const RecurrentConfig& config);

// ---------------------------------------------------------------------------
// Katz back-off n-gram model over response token streams

struct NgramConfig {
  int order = 5;
  int gt_max_count = 5;  // Good-Turing discounting applies to counts <= this
};

class KatzScorer : public ScorerModel {
 public:
  // Counts are built by train_katz; the constructor derives discounts and
  // per-context back-off weights.
  struct CountTable {
    // context token ids (n-1 tokens) -> continuations
    std::unordered_map<std::string, std::vector<std::pair<TokenId, std::uint64_t>>>
        continuations;
    std::unordered_map<std::string, std::uint64_t> context_totals;
  };

  KatzScorer(Vocabulary vocab, NgramConfig config,
             std::vector<CountTable> tables);

  const Vocabulary& vocab() const override { return vocab_; }
  Decode start_state(std::span<const TokenId> original) const override;
  Decode step(const StatePtr& state, TokenId token) const override;
  std::string kind() const override { return "katz"; }

  const NgramConfig& config() const { return config_; }

  // P(w | context) for every w; context is the up-to-(order-1) most recent
  // response tokens. Sums to 1 within 1e-6 for any context.
  Eigen::VectorXd distribution(std::span<const TokenId> context) const;

  double discount(int order, std::uint64_t count) const;

  void save(const std::string& path) const;
  static std::unique_ptr<KatzScorer> load(const std::string& path,
                                          const Vocabulary& vocab);

 private:
  Eigen::VectorXd unigram_probs() const;

  Vocabulary vocab_;
  NgramConfig config_;
  std::vector<CountTable> tables_;  // index 0 = unigrams, 1 = bigrams, ...
  std::vector<std::vector<double>> discounts_;  // per order, for r = 1..k
  Eigen::VectorXd unigrams_;
};

// Counts over response streams only (the original message is ignored), each
// response terminated with EOM, contexts truncated at the response start.
std::unique_ptr<KatzScorer> train_katz(const std::vector<TokenizedPair>& pairs,
                                       const Vocabulary& vocab,
                                       const NgramConfig& config = {});

std::string encode_ngram_key(std::span<const TokenId> ids);

}  // namespace replykit
