#pragma once

#include <optional>
#include <span>
#include <vector>

#include "replykit/response_space.hpp"
#include "replykit/search.hpp"

namespace replykit {

// Up to three suggestions, pairwise-distinct intents, descending normalized
// score except for a polarity-enforced third slot.
struct SuggestionList {
  std::vector<ScoredResponse> items;
};

// normalized_score = logp - lambda * prior_logp, re-sorted descending.
// lambda = 0 leaves the incoming order intact.
std::vector<ScoredResponse> normalize_scores(std::vector<ScoredResponse> ranked,
                                             const ResponseSet& set,
                                             double lambda);

// Keeps the highest-scored representative of each intent, order preserved.
std::vector<ScoredResponse> dedupe_by_intent(
    const std::vector<ScoredResponse>& ranked, const ResponseSet& set);

// The enforcement rule: if the top two (after dedup) contain a positive and
// none of the top three is negative, the third slot becomes the best negative
// from a second, polarity-restricted search pass (and symmetrically for
// all-negative lists). The replacement must not duplicate the intents of
// slots one and two; if the restricted pass yields nothing usable the list is
// returned unchanged. Lists with fewer than two items are never enforced; a
// two-item list gains the enforced response as its third slot.
SuggestionList enforce_polarity(const std::vector<ScoredResponse>& deduped,
                                const ScorerModel& scorer,
                                const ResponseTrie& trie,
                                const ResponseSet& set,
                                std::span<const TokenId> original,
                                std::size_t b, std::size_t max_len,
                                double lambda);

// beam_search -> normalize_scores -> dedupe_by_intent -> enforce_polarity.
// Throws Error(kNoCandidates) when the beam completes nothing.
SuggestionList select_suggestions(const ScorerModel& scorer,
                                  const ResponseTrie& trie,
                                  const ResponseSet& set,
                                  std::span<const TokenId> original,
                                  std::size_t b, std::size_t max_len,
                                  double lambda);

}  // namespace replykit
