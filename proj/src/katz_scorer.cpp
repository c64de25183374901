#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "json.hpp"
#include "replykit/errors.hpp"
#include "replykit/model_io.hpp"
#include "replykit/scoring.hpp"

namespace replykit {

namespace {

struct KatzState : ScorerModel::State {
  std::vector<TokenId> context;  // most recent response tokens, oldest first
};

}  // namespace

std::string encode_ngram_key(std::span<const TokenId> ids) {
  std::string key;
  key.reserve(ids.size() * 4);
  for (TokenId id : ids) {
    for (int i = 0; i < 4; ++i) {
      key.push_back(static_cast<char>((static_cast<std::uint32_t>(id) >>
                                       (8 * i)) &
                                      0xff));
    }
  }
  return key;
}

KatzScorer::KatzScorer(Vocabulary vocab, NgramConfig config,
                       std::vector<CountTable> tables)
    : vocab_(std::move(vocab)), config_(config), tables_(std::move(tables)) {
  if (config_.order < 1 || static_cast<int>(tables_.size()) != config_.order) {
    throw Error(Error::Code::kBadConfig, "katz: order/table mismatch");
  }

  // Good-Turing discount ratios per order for counts 1..k; counts above k and
  // degenerate count-of-count statistics keep d = 1.
  const int k = config_.gt_max_count;
  discounts_.assign(tables_.size(), std::vector<double>(k + 1, 1.0));
  for (std::size_t n = 0; n < tables_.size(); ++n) {
    std::vector<double> count_of_counts(k + 2, 0.0);
    for (const auto& [ctx, conts] : tables_[n].continuations) {
      for (const auto& [w, c] : conts) {
        if (c <= static_cast<std::uint64_t>(k + 1)) {
          count_of_counts[c] += 1.0;
        }
      }
    }
    double n1 = count_of_counts[1];
    if (n1 <= 0.0) continue;
    double base = (k + 1) * count_of_counts[k + 1] / n1;
    if (base >= 1.0) continue;
    for (int r = 1; r <= k; ++r) {
      if (count_of_counts[r] <= 0.0 || count_of_counts[r + 1] <= 0.0) continue;
      double r_star = (r + 1) * count_of_counts[r + 1] / count_of_counts[r];
      double d = (r_star / r - base) / (1.0 - base);
      if (d > 0.0 && d <= 1.0) discounts_[n][r] = d;
    }
  }
  unigrams_ = unigram_probs();
}

double KatzScorer::discount(int order, std::uint64_t count) const {
  if (count == 0) return 0.0;
  if (count > static_cast<std::uint64_t>(config_.gt_max_count)) return 1.0;
  return discounts_[order - 1][count];
}

Eigen::VectorXd KatzScorer::unigram_probs() const {
  const Eigen::Index V = static_cast<Eigen::Index>(vocab_.size());
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(V);
  auto it = tables_[0].continuations.find(std::string());
  if (it == tables_[0].continuations.end() || it->second.empty()) {
    // Untrained table: fall back to uniform.
    probs.setConstant(1.0 / static_cast<double>(V));
    return probs;
  }
  double total = static_cast<double>(tables_[0].context_totals.at(std::string()));
  double seen_mass = 0.0;
  std::size_t seen = 0;
  for (const auto& [w, c] : it->second) {
    probs[w] = discount(1, c) * static_cast<double>(c) / total;
    seen_mass += probs[w];
    ++seen;
  }
  std::size_t unseen = static_cast<std::size_t>(V) - seen;
  double leftover = 1.0 - seen_mass;
  if (unseen > 0 && leftover > 0.0) {
    double share = leftover / static_cast<double>(unseen);
    for (Eigen::Index w = 0; w < V; ++w) {
      if (probs[w] == 0.0) probs[w] = share;
    }
  } else {
    probs /= probs.sum();
  }
  return probs;
}

Eigen::VectorXd KatzScorer::distribution(std::span<const TokenId> context) const {
  Eigen::VectorXd probs = unigrams_;
  const std::size_t max_ctx =
      std::min<std::size_t>(context.size(), config_.order - 1);
  for (std::size_t len = 1; len <= max_ctx; ++len) {
    std::span<const TokenId> ctx = context.subspan(context.size() - len, len);
    const CountTable& table = tables_[len];
    auto it = table.continuations.find(encode_ngram_key(ctx));
    // An unseen context at this order is unseen at every longer order too.
    if (it == table.continuations.end()) break;
    double total =
        static_cast<double>(table.context_totals.at(encode_ngram_key(ctx)));
    double discounted_mass = 0.0;
    double backoff_seen = 0.0;
    for (const auto& [w, c] : it->second) {
      discounted_mass +=
          discount(static_cast<int>(len) + 1, c) * static_cast<double>(c) / total;
      backoff_seen += probs[w];
    }
    double leftover = 1.0 - discounted_mass;
    double denom = 1.0 - backoff_seen;
    double alpha =
        (leftover > 1e-12 && denom > 1e-12) ? leftover / denom : 0.0;
    probs *= alpha;
    for (const auto& [w, c] : it->second) {
      probs[w] = discount(static_cast<int>(len) + 1, c) *
                 static_cast<double>(c) / total;
    }
  }
  return probs;
}

ScorerModel::Decode KatzScorer::start_state(
    std::span<const TokenId> original) const {
  (void)original;  // language model over responses only
  auto state = std::make_shared<KatzState>();
  Decode d;
  d.log_probs = distribution(state->context).array().log();
  d.state = std::move(state);
  return d;
}

ScorerModel::Decode KatzScorer::step(const StatePtr& state,
                                     TokenId token) const {
  const auto& s = dynamic_cast<const KatzState&>(*state);
  auto next = std::make_shared<KatzState>();
  next->context = s.context;
  next->context.push_back(token);
  if (next->context.size() > static_cast<std::size_t>(config_.order - 1)) {
    next->context.erase(next->context.begin());
  }
  Decode d;
  d.log_probs = distribution(next->context).array().log();
  d.state = std::move(next);
  return d;
}

std::unique_ptr<KatzScorer> train_katz(const std::vector<TokenizedPair>& pairs,
                                       const Vocabulary& vocab,
                                       const NgramConfig& config) {
  if (pairs.empty()) {
    throw Error(Error::Code::kEmptyCorpus, "no training pairs");
  }
  if (config.order < 1) {
    throw Error(Error::Code::kBadConfig, "katz order must be >= 1");
  }
  const TokenId eom = vocab.specials().eom;
  std::vector<std::map<std::string, std::map<TokenId, std::uint64_t>>> raw(
      config.order);
  for (const auto& pair : pairs) {
    std::vector<TokenId> stream = pair.response_ids;
    stream.push_back(eom);
    for (std::size_t t = 0; t < stream.size(); ++t) {
      for (int n = 1; n <= config.order; ++n) {
        if (t + 1 < static_cast<std::size_t>(n)) break;
        std::span<const TokenId> ctx(stream.data() + (t + 1 - n),
                                     static_cast<std::size_t>(n - 1));
        ++raw[n - 1][encode_ngram_key(ctx)][stream[t]];
      }
    }
  }
  std::vector<KatzScorer::CountTable> tables(config.order);
  for (int n = 0; n < config.order; ++n) {
    for (auto& [ctx, conts] : raw[n]) {
      auto& vec = tables[n].continuations[ctx];
      std::uint64_t total = 0;
      vec.reserve(conts.size());
      for (auto& [w, c] : conts) {
        vec.emplace_back(w, c);
        total += c;
      }
      tables[n].context_totals[ctx] = total;
    }
  }
  return std::make_unique<KatzScorer>(vocab, config, std::move(tables));
}

void KatzScorer::save(const std::string& path) const {
  ModelFile file;
  file.kind = "katz";
  file.vocab_fingerprint = vocab_.fingerprint();
  nlohmann::ordered_json meta;
  meta["order"] = config_.order;
  meta["gt_max_count"] = config_.gt_max_count;
  file.meta_json = meta.dump();

  for (int n = 1; n <= config_.order; ++n) {
    const CountTable& table = tables_[n - 1];
    // Rows sorted by context bytes then token id for a stable file image.
    std::vector<std::pair<std::string, const std::vector<std::pair<TokenId, std::uint64_t>>*>>
        contexts;
    contexts.reserve(table.continuations.size());
    for (const auto& [ctx, conts] : table.continuations) {
      contexts.emplace_back(ctx, &conts);
    }
    std::sort(contexts.begin(), contexts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    TensorBlob blob;
    blob.name = "ngrams." + std::to_string(n);
    std::uint64_t rows = 0;
    for (const auto& [ctx, conts] : contexts) rows += conts->size();
    blob.shape = {rows, static_cast<std::uint64_t>(n + 1)};
    blob.data.reserve(rows * (n + 1));
    for (const auto& [ctx, conts] : contexts) {
      std::vector<std::pair<TokenId, std::uint64_t>> sorted = *conts;
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [w, c] : sorted) {
        for (int i = 0; i < n - 1; ++i) {
          std::uint32_t id;
          std::memcpy(&id, ctx.data() + 4 * i, 4);
          blob.data.push_back(static_cast<float>(id));
        }
        blob.data.push_back(static_cast<float>(w));
        blob.data.push_back(static_cast<float>(c));
      }
    }
    file.tensors.push_back(std::move(blob));
  }
  write_model_file(path, file);
}

std::unique_ptr<KatzScorer> KatzScorer::load(const std::string& path,
                                             const Vocabulary& vocab) {
  ModelFile file = read_model_file(path);
  check_model_header(file, "katz", vocab.fingerprint());
  nlohmann::json meta = nlohmann::json::parse(file.meta_json);
  NgramConfig config;
  config.order = meta.at("order").get<int>();
  config.gt_max_count = meta.at("gt_max_count").get<int>();

  std::vector<CountTable> tables(config.order);
  for (int n = 1; n <= config.order; ++n) {
    const TensorBlob& blob = file.tensor("ngrams." + std::to_string(n));
    if (blob.shape.size() != 2 ||
        blob.shape[1] != static_cast<std::uint64_t>(n + 1)) {
      throw Error(Error::Code::kBadModelFile,
                  blob.name + " has unexpected shape");
    }
    for (std::uint64_t row = 0; row < blob.shape[0]; ++row) {
      const float* cells = blob.data.data() + row * (n + 1);
      std::vector<TokenId> ctx(static_cast<std::size_t>(n - 1));
      for (int i = 0; i < n - 1; ++i) ctx[i] = static_cast<TokenId>(cells[i]);
      TokenId w = static_cast<TokenId>(cells[n - 1]);
      std::uint64_t c = static_cast<std::uint64_t>(cells[n]);
      std::string key = encode_ngram_key(ctx);
      tables[n - 1].continuations[key].emplace_back(w, c);
      tables[n - 1].context_totals[key] += c;
    }
  }
  return std::make_unique<KatzScorer>(vocab, config, std::move(tables));
}

}  // namespace replykit
