#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "replykit/corpus_ingest.hpp"
#include "replykit/hash.hpp"
#include "replykit/tensor_pack.hpp"

namespace replykit {

// Sparse feature families are hashed token ids; the dense block carries the
// social flags and body-length buckets.
struct TriggerFeatures {
  enum Family { kBodyUnigram = 0, kBodyBigram = 1, kSubjectUnigram = 2 };
  static constexpr int kFamilyCount = 3;
  static constexpr int kDenseDim = 7;

  std::array<std::vector<std::uint32_t>, kFamilyCount> sparse;
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(kDenseDim);
};

TriggerFeatures extract_features(const TokenizedMessage& msg,
                                 const RawMessage& raw, std::uint32_t buckets,
                                 std::uint64_t hash_seed = kDefaultHashSeed);

struct TriggerConfig {
  std::uint32_t buckets = 1u << 18;
  int embed_dim = 16;
  std::array<int, 3> hidden = {64, 32, 16};
  double dropout = 0.2;
  int epochs = 10;
  double learning_rate = 0.1;
  std::uint64_t rng_seed = 7;
  std::uint64_t hash_seed = kDefaultHashSeed;
};

// Summed embeddings per family, concatenated with the dense block, through
// three ReLU layers to a sigmoid. Inference never applies dropout.
class TriggerModel {
 public:
  explicit TriggerModel(TriggerConfig config);

  double score(const TriggerFeatures& features) const;

  // Mean logistic loss over a batch, with dense gradients for checking.
  // Dropout masks are not applied here.
  double batch_loss(const std::vector<TriggerFeatures>& features,
                    const std::vector<bool>& labels, TensorPack* grad) const;

  const TriggerConfig& config() const { return config_; }
  TensorPack& params() { return params_; }
  const TensorPack& params() const { return params_; }

  double threshold() const { return threshold_; }
  void set_threshold(double t) { threshold_ = t; }

  void save(const std::string& path, std::uint64_t vocab_fingerprint) const;
  static std::unique_ptr<TriggerModel> load(const std::string& path,
                                            std::uint64_t vocab_fingerprint);

 private:
  friend struct TriggerTrainer;
  Eigen::VectorXd pooled_input(const TriggerFeatures& features) const;

  TriggerConfig config_;
  TensorPack params_;
  double threshold_ = 0.5;
};

struct TriggerExample {
  TriggerFeatures features;
  bool label = false;
};

struct TriggerTrainStats {
  std::vector<double> epoch_loss;
  std::size_t balanced_positives = 0;
  std::size_t balanced_negatives = 0;
};

struct TrainedTrigger {
  std::unique_ptr<TriggerModel> model;
  TriggerTrainStats stats;
};

// Balances the classes by downsampling the larger one, then runs AdaGrad on
// logistic loss with dropout after each hidden layer. Throws
// Error(kSingleClassData) / Error(kDivergedLoss).
TrainedTrigger train_trigger(const std::vector<TriggerExample>& examples,
                             const TriggerConfig& config);

// Strictly above the threshold.
bool should_trigger(double score, double threshold);

// Threshold at which `target_fraction` of the calibration scores trigger.
double calibrate_threshold(std::vector<double> scores, double target_fraction);

// Labels per the triggering data rule: positives are messages replied to from
// mobile; negatives are unreplied messages.
std::vector<TriggerExample> trigger_examples_from_corpus(
    const std::vector<RawMessage>& corpus, const Vocabulary& vocab,
    const TriggerConfig& config, const PreprocessOptions& preprocess_opts = {});

}  // namespace replykit
