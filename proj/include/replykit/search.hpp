#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replykit/response_space.hpp"
#include "replykit/scoring.hpp"
#include "replykit/vocab.hpp"

namespace replykit {

struct TrieBuildResult;

// Token trie over the response set. Every root-to-terminal path spells one
// entry; subtree polarity masks let a search restrict itself to one polarity
// without touching the structure.
class ResponseTrie {
 public:
  struct Node {
    std::map<TokenId, std::int32_t> children;  // ordered: deterministic walks
    std::int32_t entry = -1;                   // terminal marker
    Polarity entry_polarity = Polarity::kNeutral;
    std::uint8_t polarity_mask = 0;            // bit per Polarity in subtree
  };

  static TrieBuildResult build(const ResponseSet& set, const Vocabulary& vocab);

  const Node& node(std::int32_t id) const { return nodes_[id]; }
  std::int32_t root() const { return 0; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t terminal_count() const { return terminal_count_; }
  bool empty() const { return nodes_[0].children.empty() && terminal_count_ == 0; }

  // Entry index spelled by `tokens`, if present.
  std::optional<std::int32_t> find(std::span<const TokenId> tokens) const;

  static std::uint8_t polarity_bit(Polarity p) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p));
  }

 private:
  std::vector<Node> nodes_{1, Node{}};
  std::size_t terminal_count_ = 0;
};

struct TrieBuildResult {
  ResponseTrie trie;
  std::vector<std::string> warnings;  // duplicate entries (first one kept)
};

struct ScoredResponse {
  std::int32_t entry_index = -1;
  double logp = 0.0;
  double normalized_score = 0.0;  // filled by the diversity pass
};

struct BeamStats {
  std::size_t step_calls = 0;
  std::size_t max_pool = 0;
  std::size_t levels = 0;
};

struct BeamTraceRow {
  std::size_t level;
  std::string prefix;
  double cum_logp;
};

// Left-to-right beam search that only extends prefixes present in the trie.
// Completed responses (terminal reached, EOM step added) compete for beam
// slots at the level where they complete; up to b completed responses come
// back sorted by logp, ties by entry index. With `restrict` set, terminals of
// any other polarity are unreachable. Scorer cost is at most one step() per
// surviving hypothesis per level, so b * max_len overall.
std::vector<ScoredResponse> beam_search(
    const ScorerModel& scorer, std::span<const TokenId> original,
    const ResponseTrie& trie, std::size_t b, std::size_t max_len,
    std::optional<Polarity> restrict_polarity = std::nullopt,
    BeamStats* stats = nullptr, std::vector<BeamTraceRow>* trace = nullptr);

// Scores every entry: the oracle the beam approximates.
std::vector<ScoredResponse> exhaustive_rank(const ScorerModel& scorer,
                                            std::span<const TokenId> original,
                                            const ResponseSet& set);

// Fraction of messages whose beam top-1 matches the exhaustive top-1, per
// beam size.
std::vector<std::pair<std::size_t, double>> beam_match_rate(
    const ScorerModel& scorer,
    const std::vector<std::vector<TokenId>>& messages, const ResponseSet& set,
    const std::vector<std::size_t>& beam_sizes, std::size_t max_len = 30);

void write_beam_trace_tsv(const std::string& path,
                          const std::vector<BeamTraceRow>& trace);

}  // namespace replykit
