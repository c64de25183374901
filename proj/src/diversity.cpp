#include "replykit/diversity.hpp"

#include <algorithm>
#include <unordered_set>

#include "replykit/errors.hpp"

namespace replykit {

std::vector<ScoredResponse> normalize_scores(std::vector<ScoredResponse> ranked,
                                             const ResponseSet& set,
                                             double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw Error(Error::Code::kBadConfig, "lambda must be in [0, 1]");
  }
  for (auto& r : ranked) {
    r.normalized_score = r.logp - lambda * set.entries[r.entry_index].prior_logp;
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredResponse& a, const ScoredResponse& b) {
                     if (a.normalized_score != b.normalized_score) {
                       return a.normalized_score > b.normalized_score;
                     }
                     return a.entry_index < b.entry_index;
                   });
  return ranked;
}

std::vector<ScoredResponse> dedupe_by_intent(
    const std::vector<ScoredResponse>& ranked, const ResponseSet& set) {
  std::vector<ScoredResponse> out;
  std::unordered_set<std::string> covered;
  for (const auto& r : ranked) {
    if (covered.insert(set.entries[r.entry_index].intent_id).second) {
      out.push_back(r);
    }
  }
  return out;
}

namespace {

// Best entry of the requested polarity whose intent is not yet covered.
std::optional<ScoredResponse> restricted_best(
    const ScorerModel& scorer, const ResponseTrie& trie, const ResponseSet& set,
    std::span<const TokenId> original, std::size_t b, std::size_t max_len,
    double lambda, Polarity polarity,
    const std::unordered_set<std::string>& covered_intents) {
  std::vector<ScoredResponse> results;
  try {
    results = beam_search(scorer, original, trie, b, max_len, polarity);
  } catch (const Error& e) {
    if (e.code() == Error::Code::kEmptyTrieAfterFilter) return std::nullopt;
    throw;
  }
  results = normalize_scores(std::move(results), set, lambda);
  for (const auto& r : results) {
    if (covered_intents.count(set.entries[r.entry_index].intent_id) == 0) {
      return r;
    }
  }
  return std::nullopt;
}

bool any_polarity(const std::vector<ScoredResponse>& items,
                  const ResponseSet& set, Polarity polarity, std::size_t limit) {
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
    if (set.entries[items[i].entry_index].polarity == polarity) return true;
  }
  return false;
}

}  // namespace

SuggestionList enforce_polarity(const std::vector<ScoredResponse>& deduped,
                                const ScorerModel& scorer,
                                const ResponseTrie& trie,
                                const ResponseSet& set,
                                std::span<const TokenId> original,
                                std::size_t b, std::size_t max_len,
                                double lambda) {
  SuggestionList list;
  list.items.assign(deduped.begin(),
                    deduped.begin() + std::min<std::size_t>(3, deduped.size()));
  if (list.items.size() < 2) return list;

  bool positive_in_top2 = any_polarity(list.items, set, Polarity::kPositive, 2);
  bool negative_in_top3 = any_polarity(list.items, set, Polarity::kNegative, 3);
  bool negative_in_top2 = any_polarity(list.items, set, Polarity::kNegative, 2);
  bool positive_in_top3 = any_polarity(list.items, set, Polarity::kPositive, 3);

  std::optional<Polarity> wanted;
  if (positive_in_top2 && !negative_in_top3) {
    wanted = Polarity::kNegative;
  } else if (negative_in_top2 && !positive_in_top3) {
    wanted = Polarity::kPositive;
  }
  if (!wanted.has_value()) return list;

  std::unordered_set<std::string> covered;
  covered.insert(set.entries[list.items[0].entry_index].intent_id);
  covered.insert(set.entries[list.items[1].entry_index].intent_id);
  auto replacement = restricted_best(scorer, trie, set, original, b, max_len,
                                     lambda, *wanted, covered);
  if (!replacement.has_value()) return list;

  if (list.items.size() < 3) {
    list.items.push_back(*replacement);
  } else {
    list.items[2] = *replacement;
  }
  return list;
}

SuggestionList select_suggestions(const ScorerModel& scorer,
                                  const ResponseTrie& trie,
                                  const ResponseSet& set,
                                  std::span<const TokenId> original,
                                  std::size_t b, std::size_t max_len,
                                  double lambda) {
  std::vector<ScoredResponse> ranked =
      beam_search(scorer, original, trie, b, max_len);
  if (ranked.empty()) {
    throw Error(Error::Code::kNoCandidates, "beam search found no responses");
  }
  ranked = normalize_scores(std::move(ranked), set, lambda);
  ranked = dedupe_by_intent(ranked, set);
  return enforce_polarity(ranked, scorer, trie, set, original, b, max_len,
                          lambda);
}

}  // namespace replykit
