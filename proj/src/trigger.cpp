#include "replykit/trigger.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "replykit/errors.hpp"
#include "replykit/model_io.hpp"
#include "replykit/rng.hpp"

namespace replykit {

namespace {

constexpr char kBigramSep = '\x1f';

std::uint32_t bucket_of(const std::string& key, std::uint64_t seed,
                        std::uint32_t buckets) {
  return static_cast<std::uint32_t>(fnv1a64_seeded(key, seed) % buckets);
}

const char* embed_name(int family) {
  static const char* kNames[] = {"embed_body_unigram", "embed_body_bigram",
                                 "embed_subject_unigram"};
  return kNames[family];
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Keeps scores inside the open interval even when the logit saturates.
double clamp_probability(double p) {
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

}  // namespace

TriggerFeatures extract_features(const TokenizedMessage& msg,
                                 const RawMessage& raw, std::uint32_t buckets,
                                 std::uint64_t hash_seed) {
  TriggerFeatures f;
  std::size_t body_tokens = 0;
  for (const auto& sentence : msg.body_sentences) {
    body_tokens += sentence.size();
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      f.sparse[TriggerFeatures::kBodyUnigram].push_back(
          bucket_of(sentence[i], hash_seed, buckets));
      if (i + 1 < sentence.size()) {
        f.sparse[TriggerFeatures::kBodyBigram].push_back(bucket_of(
            sentence[i] + kBigramSep + sentence[i + 1], hash_seed, buckets));
      }
    }
  }
  for (const auto& tok : msg.subject_tokens) {
    f.sparse[TriggerFeatures::kSubjectUnigram].push_back(
        bucket_of(tok, hash_seed, buckets));
  }
  f.dense[0] = raw.sender_in_address_book ? 1.0 : 0.0;
  f.dense[1] = raw.sender_in_social_network ? 1.0 : 0.0;
  f.dense[2] = raw.recipient_replied_before ? 1.0 : 0.0;
  int bucket = body_tokens <= 10 ? 3 : body_tokens <= 50 ? 4
                                   : body_tokens <= 200 ? 5 : 6;
  f.dense[bucket] = 1.0;
  return f;
}

TriggerModel::TriggerModel(TriggerConfig config) : config_(config) {
  if (config_.buckets == 0 || config_.embed_dim < 1 || config_.dropout < 0.0 ||
      config_.dropout >= 1.0) {
    throw Error(Error::Code::kBadConfig, "invalid trigger configuration");
  }
  const Eigen::Index input_dim =
      TriggerFeatures::kFamilyCount * config_.embed_dim +
      TriggerFeatures::kDenseDim;
  for (int fam = 0; fam < TriggerFeatures::kFamilyCount; ++fam) {
    params_.add(embed_name(fam), config_.embed_dim, config_.buckets);
  }
  Eigen::Index prev = input_dim;
  for (int layer = 0; layer < 3; ++layer) {
    params_.add("w_" + std::to_string(layer + 1), config_.hidden[layer], prev);
    params_.add("b_" + std::to_string(layer + 1), config_.hidden[layer], 1);
    prev = config_.hidden[layer];
  }
  params_.add("w_out", 1, prev);
  params_.add("b_out", 1, 1);
}

Eigen::VectorXd TriggerModel::pooled_input(
    const TriggerFeatures& features) const {
  const Eigen::Index e = config_.embed_dim;
  Eigen::VectorXd input = Eigen::VectorXd::Zero(
      TriggerFeatures::kFamilyCount * e + TriggerFeatures::kDenseDim);
  for (int fam = 0; fam < TriggerFeatures::kFamilyCount; ++fam) {
    auto table = params_.mat(embed_name(fam));
    for (std::uint32_t id : features.sparse[fam]) {
      input.segment(fam * e, e) += table.col(id);
    }
  }
  input.tail(TriggerFeatures::kDenseDim) = features.dense;
  return input;
}

double TriggerModel::score(const TriggerFeatures& features) const {
  Eigen::VectorXd h = pooled_input(features);
  for (int layer = 1; layer <= 3; ++layer) {
    h = (params_.mat("w_" + std::to_string(layer)) * h +
         params_.vec("b_" + std::to_string(layer)))
            .cwiseMax(0.0);
  }
  double logit = (params_.mat("w_out") * h)(0) + params_.vec("b_out")(0);
  return clamp_probability(sigmoid(logit));
}

double TriggerModel::batch_loss(const std::vector<TriggerFeatures>& features,
                                const std::vector<bool>& labels,
                                TensorPack* grad) const {
  if (features.size() != labels.size() || features.empty()) {
    throw Error(Error::Code::kEmptyInput, "bad trigger batch");
  }
  const Eigen::Index e = config_.embed_dim;
  double total = 0.0;
  for (std::size_t n = 0; n < features.size(); ++n) {
    Eigen::VectorXd input = pooled_input(features[n]);
    std::array<Eigen::VectorXd, 4> acts;  // input, h1, h2, h3
    acts[0] = input;
    for (int layer = 1; layer <= 3; ++layer) {
      acts[layer] = (params_.mat("w_" + std::to_string(layer)) * acts[layer - 1] +
                     params_.vec("b_" + std::to_string(layer)))
                        .cwiseMax(0.0);
    }
    double logit =
        (params_.mat("w_out") * acts[3])(0) + params_.vec("b_out")(0);
    double p = sigmoid(logit);
    double y = labels[n] ? 1.0 : 0.0;
    total -= y * std::log(std::max(p, 1e-300)) +
             (1.0 - y) * std::log(std::max(1.0 - p, 1e-300));
    if (grad == nullptr) continue;

    double d_logit = (p - y) / static_cast<double>(features.size());
    grad->mat("w_out").noalias() += d_logit * acts[3].transpose();
    grad->vec("b_out")(0) += d_logit;
    Eigen::VectorXd d_h = params_.mat("w_out").transpose() * d_logit;
    for (int layer = 3; layer >= 1; --layer) {
      Eigen::VectorXd d_pre =
          (acts[layer].array() > 0.0).select(d_h.array(), 0.0);
      grad->mat("w_" + std::to_string(layer)).noalias() +=
          d_pre * acts[layer - 1].transpose();
      grad->vec("b_" + std::to_string(layer)).noalias() += d_pre;
      d_h = params_.mat("w_" + std::to_string(layer)).transpose() * d_pre;
    }
    for (int fam = 0; fam < TriggerFeatures::kFamilyCount; ++fam) {
      auto table = grad->mat(embed_name(fam));
      for (std::uint32_t id : features[n].sparse[fam]) {
        table.col(id) += d_h.segment(fam * e, e);
      }
    }
  }
  return total / static_cast<double>(features.size());
}

// ---------------------------------------------------------------------------
// Training

struct TriggerTrainer {
  TriggerModel& model;
  const TriggerConfig& config;
  Rng rng;

  // Dense AdaGrad state for the MLP block, sparse per-column state for the
  // embedding tables (touching 2^18 buckets per step would swamp training).
  Eigen::VectorXd mlp_accum;
  std::array<Eigen::MatrixXd, TriggerFeatures::kFamilyCount> embed_accum;

  explicit TriggerTrainer(TriggerModel& m)
      : model(m), config(m.config()), rng(m.config().rng_seed) {
    Eigen::Index mlp_size = 0;
    for (const auto& spec : model.params().specs()) {
      if (spec.name.rfind("embed_", 0) != 0) mlp_size += spec.rows * spec.cols;
    }
    mlp_accum = Eigen::VectorXd::Zero(mlp_size);
    for (int fam = 0; fam < TriggerFeatures::kFamilyCount; ++fam) {
      embed_accum[fam] =
          Eigen::MatrixXd::Zero(config.embed_dim, config.buckets);
    }
  }

  double example_update(const TriggerFeatures& features, bool label) {
    const Eigen::Index e = config.embed_dim;
    TensorPack& params = model.params();

    Eigen::VectorXd input = model.pooled_input(features);
    std::array<Eigen::VectorXd, 4> acts;
    std::array<Eigen::VectorXd, 4> masks;  // dropout, layers 1..3
    acts[0] = input;
    for (int layer = 1; layer <= 3; ++layer) {
      acts[layer] = (params.mat("w_" + std::to_string(layer)) * acts[layer - 1] +
                     params.vec("b_" + std::to_string(layer)))
                        .cwiseMax(0.0);
      if (config.dropout > 0.0) {
        masks[layer] = Eigen::VectorXd::Zero(acts[layer].size());
        for (Eigen::Index i = 0; i < masks[layer].size(); ++i) {
          masks[layer][i] = rng.uniform() >= config.dropout
                                ? 1.0 / (1.0 - config.dropout)
                                : 0.0;
        }
        acts[layer].array() *= masks[layer].array();
      }
    }
    double logit = (params.mat("w_out") * acts[3])(0) + params.vec("b_out")(0);
    double p = sigmoid(logit);
    double y = label ? 1.0 : 0.0;
    double loss = -(y * std::log(std::max(p, 1e-300)) +
                    (1.0 - y) * std::log(std::max(1.0 - p, 1e-300)));

    // Backward pass with AdaGrad applied inline; embeddings sparsely.
    double d_logit = p - y;
    Eigen::VectorXd d_h = params.mat("w_out").transpose() * d_logit;
    apply_dense("w_out", (d_logit * acts[3].transpose()).eval());
    apply_dense("b_out", Eigen::MatrixXd::Constant(1, 1, d_logit));
    for (int layer = 3; layer >= 1; --layer) {
      if (config.dropout > 0.0) d_h.array() *= masks[layer].array();
      Eigen::VectorXd d_pre =
          (acts[layer].array() > 0.0).select(d_h.array(), 0.0);
      d_h = params.mat("w_" + std::to_string(layer)).transpose() * d_pre;
      apply_dense("w_" + std::to_string(layer),
                  (d_pre * acts[layer - 1].transpose()).eval());
      apply_dense("b_" + std::to_string(layer), d_pre);
    }
    for (int fam = 0; fam < TriggerFeatures::kFamilyCount; ++fam) {
      // Repeated ids accumulate before the update.
      std::map<std::uint32_t, double> counts;
      for (std::uint32_t id : features.sparse[fam]) counts[id] += 1.0;
      auto table = params.mat(embed_name(fam));
      for (const auto& [id, count] : counts) {
        Eigen::VectorXd g = count * d_h.segment(fam * e, e);
        auto acc = embed_accum[fam].col(id);
        acc.array() += g.array().square();
        table.col(id).array() -=
            config.learning_rate * g.array() / (acc.array().sqrt() + 1e-8);
      }
    }
    return loss;
  }

  void apply_dense(const std::string& name, const Eigen::MatrixXd& grad) {
    TensorPack& params = model.params();
    // Locate the accumulator slice for this tensor.
    Eigen::Index offset = 0;
    for (const auto& spec : params.specs()) {
      if (spec.name.rfind("embed_", 0) == 0) continue;
      if (spec.name == name) break;
      offset += spec.rows * spec.cols;
    }
    auto m = params.mat(name);
    auto acc = mlp_accum.segment(offset, grad.size());
    Eigen::Map<const Eigen::VectorXd> g(grad.data(), grad.size());
    acc.array() += g.array().square();
    Eigen::Map<Eigen::VectorXd> flat(m.data(), m.size());
    flat.array() -=
        config.learning_rate * g.array() / (acc.array().sqrt() + 1e-8);
  }
};

TrainedTrigger train_trigger(const std::vector<TriggerExample>& examples,
                             const TriggerConfig& config) {
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].label ? positives : negatives).push_back(i);
  }
  if (positives.empty() || negatives.empty()) {
    throw Error(Error::Code::kSingleClassData,
                "trigger training needs both classes");
  }

  TrainedTrigger out;
  out.model = std::make_unique<TriggerModel>(config);
  TriggerTrainer trainer(*out.model);

  // Balance by downsampling the larger class.
  std::size_t keep = std::min(positives.size(), negatives.size());
  std::vector<std::size_t> pos_kept = trainer.rng.sample(positives, keep);
  std::vector<std::size_t> neg_kept = trainer.rng.sample(negatives, keep);
  out.stats.balanced_positives = pos_kept.size();
  out.stats.balanced_negatives = neg_kept.size();

  std::vector<std::size_t> order;
  order.insert(order.end(), pos_kept.begin(), pos_kept.end());
  order.insert(order.end(), neg_kept.begin(), neg_kept.end());

  // Initialization keeps the spirit of sigmoid(0) = 0.5: small weights.
  auto& flat = out.model->params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = trainer.rng.uniform(-0.05, 0.05);
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    trainer.rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      total += trainer.example_update(examples[idx].features,
                                      examples[idx].label);
    }
    double mean = total / static_cast<double>(order.size());
    if (!std::isfinite(mean)) {
      throw Error(Error::Code::kDivergedLoss,
                  "trigger loss diverged at epoch " + std::to_string(epoch));
    }
    out.stats.epoch_loss.push_back(mean);
  }
  return out;
}

bool should_trigger(double score, double threshold) {
  return score > threshold;
}

double calibrate_threshold(std::vector<double> scores, double target_fraction) {
  if (scores.empty()) {
    throw Error(Error::Code::kEmptyInput, "calibration needs scores");
  }
  std::sort(scores.begin(), scores.end(), std::greater<>());
  const std::size_t n = scores.size();
  std::size_t k = static_cast<std::size_t>(
      std::llround(target_fraction * static_cast<double>(n)));
  if (k == 0) return scores.front();
  if (k >= n) return scores.back() / 2.0;
  return 0.5 * (scores[k - 1] + scores[k]);
}

std::vector<TriggerExample> trigger_examples_from_corpus(
    const std::vector<RawMessage>& corpus, const Vocabulary& vocab,
    const TriggerConfig& config, const PreprocessOptions& preprocess_opts) {
  std::vector<TriggerExample> out;
  for (const auto& msg : corpus) {
    // Positive: replied from mobile. Negative: unreplied. Desktop-only
    // replies are ambiguous and excluded.
    bool label;
    if (msg.reply_from_mobile) {
      label = true;
    } else if (!msg.replied) {
      label = false;
    } else {
      continue;
    }
    PreprocessResult pre = preprocess(msg, vocab, preprocess_opts);
    if (!pre.ok()) continue;
    TriggerExample example;
    example.features =
        extract_features(pre.message, msg, config.buckets, config.hash_seed);
    example.label = label;
    out.push_back(std::move(example));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void TriggerModel::save(const std::string& path,
                        std::uint64_t vocab_fingerprint) const {
  ModelFile file;
  file.kind = "trigger";
  file.vocab_fingerprint = vocab_fingerprint;
  nlohmann::ordered_json meta;
  meta["buckets"] = config_.buckets;
  meta["embed_dim"] = config_.embed_dim;
  meta["hidden"] = config_.hidden;
  meta["dropout"] = config_.dropout;
  meta["epochs"] = config_.epochs;
  meta["learning_rate"] = config_.learning_rate;
  meta["rng_seed"] = config_.rng_seed;
  meta["hash"] = "fnv1a64";
  meta["hash_seed"] = config_.hash_seed;
  meta["threshold"] = threshold_;
  file.meta_json = meta.dump();
  for (const auto& spec : params_.specs()) {
    TensorBlob blob;
    blob.name = spec.name;
    blob.shape = {static_cast<std::uint64_t>(spec.rows),
                  static_cast<std::uint64_t>(spec.cols)};
    auto m = params_.mat(spec.name);
    blob.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index row = 0; row < m.rows(); ++row) {
      for (Eigen::Index col = 0; col < m.cols(); ++col) {
        blob.data.push_back(static_cast<float>(m(row, col)));
      }
    }
    file.tensors.push_back(std::move(blob));
  }
  write_model_file(path, file);
}

std::unique_ptr<TriggerModel> TriggerModel::load(
    const std::string& path, std::uint64_t vocab_fingerprint) {
  ModelFile file = read_model_file(path);
  check_model_header(file, "trigger", vocab_fingerprint);
  nlohmann::json meta = nlohmann::json::parse(file.meta_json);
  TriggerConfig config;
  config.buckets = meta.at("buckets").get<std::uint32_t>();
  config.embed_dim = meta.at("embed_dim").get<int>();
  config.hidden = meta.at("hidden").get<std::array<int, 3>>();
  config.dropout = meta.at("dropout").get<double>();
  config.epochs = meta.at("epochs").get<int>();
  config.learning_rate = meta.at("learning_rate").get<double>();
  config.rng_seed = meta.at("rng_seed").get<std::uint64_t>();
  config.hash_seed = meta.at("hash_seed").get<std::uint64_t>();
  if (meta.at("hash").get<std::string>() != "fnv1a64") {
    throw Error(Error::Code::kBadModelFile, "unknown feature hash");
  }
  auto model = std::make_unique<TriggerModel>(config);
  model->set_threshold(meta.at("threshold").get<double>());
  for (const auto& spec : model->params_.specs()) {
    const TensorBlob& blob = file.tensor(spec.name);
    if (blob.shape.size() != 2 ||
        blob.shape[0] != static_cast<std::uint64_t>(spec.rows) ||
        blob.shape[1] != static_cast<std::uint64_t>(spec.cols)) {
      throw Error(Error::Code::kBadModelFile,
                  "tensor " + spec.name + " has unexpected shape");
    }
    auto m = model->params_.mat(spec.name);
    std::size_t k = 0;
    for (Eigen::Index row = 0; row < m.rows(); ++row) {
      for (Eigen::Index col = 0; col < m.cols(); ++col) {
        m(row, col) = static_cast<double>(blob.data[k++]);
      }
    }
  }
  return model;
}

}  // namespace replykit
