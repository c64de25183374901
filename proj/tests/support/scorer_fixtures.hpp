#pragma once

// Scorers and response sets for search/diversity tests.

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "replykit/response_space.hpp"
#include "replykit/rng.hpp"
#include "replykit/scoring.hpp"

namespace replykit::testsupport {

// Random-weight recurrent scorer: a fixed, deterministic, nontrivial
// distribution without any training.
inline std::unique_ptr<RecurrentScorer> random_scorer(const Vocabulary& vocab,
                                                      std::uint64_t seed,
                                                      double scale = 0.6) {
  RecurrentConfig config;
  config.embed_dim = 8;
  config.hidden_dim = 12;
  config.projection_dim = 8;
  RecurrentScorer* model = new RecurrentScorer(vocab, config);
  Rng rng(seed);
  auto& flat = model->params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = rng.uniform(-scale, scale);
  }
  return std::unique_ptr<RecurrentScorer>(model);
}

// `count` entries over a small token pool with heavy prefix sharing.
inline ResponseSet random_response_set(std::size_t count, std::uint64_t seed,
                                       std::size_t max_len = 6) {
  Rng rng(seed);
  std::vector<std::string> pool = {"yes", "no", "ok",   "we",   "can",
                                   "see", "it", "soon", "later", "maybe"};
  ResponseSet set;
  std::set<std::string> seen;
  while (set.entries.size() < count) {
    TokenList text;
    std::size_t len = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < len; ++i) {
      text.push_back(pool[rng.below(pool.size())]);
    }
    if (!seen.insert(join_tokens(text)).second) continue;
    ResponseEntry e;
    e.text = std::move(text);
    e.intent_id = "intent" + std::to_string(set.entries.size() % 17);
    e.prior_logp = -1.0 - rng.uniform() * 4.0;
    set.entries.push_back(std::move(e));
  }
  tag_polarity(set);
  return set;
}

inline Vocabulary response_set_vocab(const ResponseSet& set,
                                     std::vector<std::string> extra = {}) {
  std::vector<TokenList> lists;
  for (const auto& e : set.entries) lists.push_back(e.text);
  lists.push_back(std::move(extra));
  return build_vocab(lists, 1000);
}

}  // namespace replykit::testsupport
