#include "replykit/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "replykit/errors.hpp"
#include "replykit/rng.hpp"

namespace replykit {

double perplexity(const ScorerModel& model,
                  const std::vector<TokenizedPair>& test) {
  if (test.empty()) {
    throw Error(Error::Code::kEmptyInput, "perplexity needs test pairs");
  }
  double total = 0.0;
  std::size_t words = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    double lp = score_response(model, test[i].original_ids,
                               test[i].response_ids);
    if (!std::isfinite(lp)) {
      throw Error(Error::Code::kZeroProbability,
                  "zero-probability response at test sample " +
                      std::to_string(i));
    }
    total += lp;
    words += test[i].response_ids.size() + 1;  // terminal EOM counts
  }
  return std::exp(-total / static_cast<double>(words));
}

std::optional<std::int32_t> entry_of_response(const TokenizedPair& pair,
                                              const ResponseSet& set,
                                              const Vocabulary& vocab) {
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    if (vocab.ids_of(set.entries[i].text) == pair.response_ids) {
      return static_cast<std::int32_t>(i);
    }
  }
  return std::nullopt;
}

int rank_of_true_response(const ScorerModel& model, const TokenizedPair& pair,
                          const ResponseSet& set) {
  auto entry = entry_of_response(pair, set, model.vocab());
  if (!entry.has_value()) {
    throw Error(Error::Code::kResponseNotInSet,
                "true response is not a response-set entry");
  }
  auto ranking = exhaustive_rank(model, pair.original_ids, set);
  double true_score = 0.0;
  for (const auto& r : ranking) {
    if (r.entry_index == *entry) {
      true_score = r.logp;
      break;
    }
  }
  int better = 0;
  for (const auto& r : ranking) {
    if (r.logp > true_score) ++better;
  }
  return better + 1;  // optimistic: ties share the minimum rank
}

double mrr(std::span<const int> ranks) {
  if (ranks.empty()) throw Error(Error::Code::kEmptyInput, "no ranks");
  double sum = 0.0;
  for (int r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

double precision_at_k(std::span<const int> ranks, int k) {
  if (ranks.empty()) throw Error(Error::Code::kEmptyInput, "no ranks");
  if (k < 1) throw Error(Error::Code::kBadConfig, "k must be >= 1");
  std::size_t hits = 0;
  for (int r : ranks) {
    if (r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::vector<std::int32_t> baseline_random_ranking(std::size_t entry_count,
                                                  Rng& rng) {
  std::vector<std::int32_t> ranking(entry_count);
  std::iota(ranking.begin(), ranking.end(), 0);
  rng.shuffle(ranking);
  return ranking;
}

std::vector<std::int32_t> baseline_frequency_ranking(const ResponseSet& set) {
  std::vector<std::int32_t> ranking(set.entries.size());
  std::iota(ranking.begin(), ranking.end(), 0);
  std::sort(ranking.begin(), ranking.end(),
            [&](std::int32_t a, std::int32_t b) {
              double pa = set.entries[a].prior_logp;
              double pb = set.entries[b].prior_logp;
              if (pa != pb) return pa > pb;
              return join_tokens(set.entries[a].text) <
                     join_tokens(set.entries[b].text);
            });
  return ranking;
}

int rank_in_ranking(const std::vector<std::int32_t>& ranking,
                    const TokenizedPair& pair, const ResponseSet& set,
                    const Vocabulary& vocab) {
  auto entry = entry_of_response(pair, set, vocab);
  if (!entry.has_value()) {
    throw Error(Error::Code::kResponseNotInSet,
                "true response is not a response-set entry");
  }
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i] == *entry) return static_cast<int>(i) + 1;
  }
  throw Error(Error::Code::kResponseNotInSet, "entry missing from ranking");
}

// ---------------------------------------------------------------------------
// Multiclass bag-of-words baseline

MulticlassBow::MulticlassBow(BowConfig config, std::size_t num_classes,
                             const Vocabulary& vocab)
    : config_(config), num_classes_(num_classes), vocab_(&vocab) {
  params_.add("embed", config_.embed_dim, config_.buckets);
  Eigen::Index prev = config_.embed_dim;
  for (int layer = 0; layer < 3; ++layer) {
    params_.add("w_" + std::to_string(layer + 1), config_.hidden[layer], prev);
    params_.add("b_" + std::to_string(layer + 1), config_.hidden[layer], 1);
    prev = config_.hidden[layer];
  }
  params_.add("w_out", static_cast<Eigen::Index>(num_classes_), prev);
  params_.add("b_out", static_cast<Eigen::Index>(num_classes_), 1);
}

std::vector<std::uint32_t> MulticlassBow::featurize(
    std::span<const TokenId> original) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(original.size());
  for (TokenId tok : original) {
    ids.push_back(static_cast<std::uint32_t>(
        fnv1a64_seeded(vocab_->token_of(tok), config_.hash_seed) %
        config_.buckets));
  }
  return ids;
}

Eigen::VectorXd MulticlassBow::class_log_probs(
    std::span<const TokenId> original) const {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(config_.embed_dim);
  auto embed = params_.mat("embed");
  for (std::uint32_t id : featurize(original)) h += embed.col(id);
  for (int layer = 1; layer <= 3; ++layer) {
    h = (params_.mat("w_" + std::to_string(layer)) * h +
         params_.vec("b_" + std::to_string(layer)))
            .cwiseMax(0.0);
  }
  Eigen::VectorXd logits = params_.mat("w_out") * h + params_.vec("b_out");
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

MulticlassBow train_multiclass_bow(const std::vector<TokenizedPair>& pairs,
                                   const ResponseSet& set,
                                   const Vocabulary& vocab,
                                   const BowConfig& config) {
  // Restrict to pairs whose response is in the set.
  std::unordered_map<std::string, std::int32_t> text_to_entry;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    text_to_entry[join_tokens(set.entries[i].text)] =
        static_cast<std::int32_t>(i);
  }
  std::vector<std::pair<const TokenizedPair*, std::int32_t>> train;
  std::vector<bool> class_seen(set.entries.size(), false);
  for (const auto& pair : pairs) {
    auto it = text_to_entry.find(join_tokens(vocab.tokens_of(pair.response_ids)));
    if (it == text_to_entry.end()) continue;
    train.emplace_back(&pair, it->second);
    class_seen[it->second] = true;
  }
  std::size_t distinct = 0;
  for (bool seen : class_seen) distinct += seen ? 1 : 0;
  if (distinct < 2) {
    throw Error(Error::Code::kSingleClassData,
                "multiclass baseline needs at least two observed classes");
  }

  MulticlassBow model(config, set.entries.size(), vocab);
  Rng rng(config.rng_seed);
  auto& flat = model.params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = rng.uniform(-0.05, 0.05);
  }

  AdaGrad opt(flat.size(), config.learning_rate, /*clip_value=*/0.0);
  TensorPack grad = model.params().zeros_like();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto& [pair, target] = train[idx];
      grad.flat().setZero();

      // Forward with caches.
      auto features = model.featurize(pair->original_ids);
      std::array<Eigen::VectorXd, 4> acts;
      acts[0] = Eigen::VectorXd::Zero(config.embed_dim);
      auto embed = model.params().mat("embed");
      for (std::uint32_t id : features) acts[0] += embed.col(id);
      for (int layer = 1; layer <= 3; ++layer) {
        acts[layer] =
            (model.params().mat("w_" + std::to_string(layer)) * acts[layer - 1] +
             model.params().vec("b_" + std::to_string(layer)))
                .cwiseMax(0.0);
      }
      Eigen::VectorXd logits = model.params().mat("w_out") * acts[3] +
                               model.params().vec("b_out");
      double m = logits.maxCoeff();
      double lse = m + std::log((logits.array() - m).exp().sum());
      Eigen::VectorXd probs = (logits.array() - lse).exp();

      Eigen::VectorXd d_logits = probs;
      d_logits[target] -= 1.0;
      grad.mat("w_out").noalias() += d_logits * acts[3].transpose();
      grad.vec("b_out").noalias() += d_logits;
      Eigen::VectorXd d_h = model.params().mat("w_out").transpose() * d_logits;
      for (int layer = 3; layer >= 1; --layer) {
        Eigen::VectorXd d_pre =
            (acts[layer].array() > 0.0).select(d_h.array(), 0.0).matrix();
        grad.mat("w_" + std::to_string(layer)).noalias() +=
            d_pre * acts[layer - 1].transpose();
        grad.vec("b_" + std::to_string(layer)).noalias() += d_pre;
        d_h = model.params().mat("w_" + std::to_string(layer)).transpose() *
              d_pre;
      }
      auto g_embed = grad.mat("embed");
      for (std::uint32_t id : features) g_embed.col(id) += d_h;

      opt.apply(flat, grad.flat());
    }
  }
  return model;
}

// ---------------------------------------------------------------------------

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error(Error::Code::kEmptyInput, "auc needs scores and labels");
  }
  std::size_t positives = 0;
  for (bool l : labels) positives += l ? 1 : 0;
  std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(Error::Code::kSingleClassData, "auc needs both classes");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Midranks over tied score runs.
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    double mid = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k]) pos_rank_sum += rank[k];
  }
  double p = static_cast<double>(positives);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) /
         (p * static_cast<double>(negatives));
}

EvalSplit temporal_split(const std::vector<TokenizedPair>& pairs,
                         double train_fraction) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw Error(Error::Code::kBadConfig, "train fraction must be in (0, 1)");
  }
  EvalSplit split;
  std::size_t cut = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(pairs.size())));
  split.train.assign(pairs.begin(), pairs.begin() + cut);
  split.test.assign(pairs.begin() + cut, pairs.end());
  return split;
}

RankingMetrics ranking_metrics(std::span<const int> ranks) {
  RankingMetrics m;
  m.p_at_10 = precision_at_k(ranks, 10);
  m.p_at_20 = precision_at_k(ranks, 20);
  m.mrr = mrr(ranks);
  m.samples = ranks.size();
  return m;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json models;
  for (const auto& [name, metrics] : rankings) {
    nlohmann::ordered_json jm;
    jm["p_at_10"] = metrics.p_at_10;
    jm["p_at_20"] = metrics.p_at_20;
    jm["mrr"] = metrics.mrr;
    jm["samples"] = metrics.samples;
    models[name] = std::move(jm);
  }
  j["models"] = std::move(models);
  nlohmann::ordered_json ppl;
  for (const auto& [name, value] : perplexities) ppl[name] = value;
  j["perplexity"] = std::move(ppl);
  if (has_auc) j["auc"] = trigger_auc;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& [b, rate] : beam_curve) {
    curve.push_back(nlohmann::ordered_json::array({b, rate}));
  }
  j["beam_curve"] = std::move(curve);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << "Model               Precision@10  Precision@20  MRR\n";
  out << "-----               ------------  ------------  ---\n";
  auto row = [&](const std::string& name, const RankingMetrics& m) {
    out << name;
    for (std::size_t pad = name.size(); pad < 20; ++pad) out << ' ';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-14.4g%-14.4g%.4g\n", m.p_at_10,
                  m.p_at_20, m.mrr);
    out << buf;
  };
  for (const auto& [name, metrics] : rankings) row(name, metrics);
  if (!perplexities.empty()) {
    out << "\nPerplexity\n";
    for (const auto& [name, value] : perplexities) {
      out << "  " << name << ": " << value << "\n";
    }
  }
  if (has_auc) out << "\nTrigger AUC: " << trigger_auc << "\n";
  if (!beam_curve.empty()) {
    out << "\nBeam match rate\n";
    for (const auto& [b, rate] : beam_curve) {
      out << "  b=" << b << ": " << rate << "\n";
    }
  }
  return out.str();
}

}  // namespace replykit
