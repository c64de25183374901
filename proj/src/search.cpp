#include "replykit/search.hpp"

#include <algorithm>
#include <fstream>

#include "replykit/errors.hpp"

namespace replykit {

TrieBuildResult ResponseTrie::build(const ResponseSet& set,
                                    const Vocabulary& vocab) {
  TrieBuildResult out;
  ResponseTrie& trie = out.trie;
  for (std::size_t idx = 0; idx < set.entries.size(); ++idx) {
    const ResponseEntry& entry = set.entries[idx];
    std::int32_t node = trie.root();
    for (const auto& token : entry.text) {
      TokenId id = vocab.id_of(token);
      auto it = trie.nodes_[node].children.find(id);
      if (it == trie.nodes_[node].children.end()) {
        std::int32_t child = static_cast<std::int32_t>(trie.nodes_.size());
        trie.nodes_.push_back(Node{});
        trie.nodes_[node].children.emplace(id, child);
        node = child;
      } else {
        node = it->second;
      }
    }
    if (trie.nodes_[node].entry >= 0) {
      out.warnings.push_back("duplicate response entry kept once: " +
                             join_tokens(entry.text));
      continue;
    }
    trie.nodes_[node].entry = static_cast<std::int32_t>(idx);
    trie.nodes_[node].entry_polarity = entry.polarity;
    ++trie.terminal_count_;
  }

  // Subtree polarity masks, children before parents (children have larger
  // ids than their parent by construction).
  for (std::size_t i = trie.nodes_.size(); i-- > 0;) {
    Node& n = trie.nodes_[i];
    if (n.entry >= 0) {
      n.polarity_mask |= polarity_bit(set.entries[n.entry].polarity);
    }
    for (const auto& [tok, child] : n.children) {
      n.polarity_mask |= trie.nodes_[child].polarity_mask;
    }
  }
  return out;
}

std::optional<std::int32_t> ResponseTrie::find(
    std::span<const TokenId> tokens) const {
  std::int32_t node = root();
  for (TokenId id : tokens) {
    auto it = nodes_[node].children.find(id);
    if (it == nodes_[node].children.end()) return std::nullopt;
    node = it->second;
  }
  if (nodes_[node].entry < 0) return std::nullopt;
  return nodes_[node].entry;
}

namespace {

struct OpenHypothesis {
  std::int32_t node;
  double logp;
  ScorerModel::Decode decode;
  std::vector<TokenId> prefix;  // kept only when tracing
};

struct Expansion {
  std::size_t parent;
  TokenId token;
  std::int32_t child;
  double logp;
};

}  // namespace

std::vector<ScoredResponse> beam_search(
    const ScorerModel& scorer, std::span<const TokenId> original,
    const ResponseTrie& trie, std::size_t b, std::size_t max_len,
    std::optional<Polarity> restrict_polarity, BeamStats* stats,
    std::vector<BeamTraceRow>* trace) {
  if (b < 1) throw Error(Error::Code::kBadConfig, "beam size must be >= 1");
  const std::uint8_t mask = restrict_polarity.has_value()
                                ? ResponseTrie::polarity_bit(*restrict_polarity)
                                : 0xff;
  if ((trie.node(trie.root()).polarity_mask & mask) == 0) {
    throw Error(Error::Code::kEmptyTrieAfterFilter,
                "no responses remain under the polarity filter");
  }
  const TokenId eom = scorer.vocab().specials().eom;
  const Vocabulary& vocab = scorer.vocab();

  std::vector<OpenHypothesis> beam;
  beam.push_back({trie.root(), 0.0, scorer.start_state(original), {}});

  std::vector<ScoredResponse> completed;
  for (std::size_t level = 0; level < max_len && !beam.empty(); ++level) {
    if (stats != nullptr) stats->levels = level + 1;

    std::vector<Expansion> pool;
    for (std::size_t h = 0; h < beam.size(); ++h) {
      const OpenHypothesis& hyp = beam[h];
      for (const auto& [token, child] : trie.node(hyp.node).children) {
        if ((trie.node(child).polarity_mask & mask) == 0) continue;
        pool.push_back(
            {h, token, child, hyp.logp + hyp.decode.log_probs[token]});
      }
    }
    if (stats != nullptr) stats->max_pool = std::max(stats->max_pool, pool.size());
    if (pool.empty()) break;

    // Top-b expansions; ties resolved by trie node id (insertion order).
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Expansion& a, const Expansion& b2) {
                       if (a.logp != b2.logp) return a.logp > b2.logp;
                       return a.child < b2.child;
                     });
    if (pool.size() > b) pool.resize(b);

    std::vector<OpenHypothesis> next;
    next.reserve(pool.size());
    for (const Expansion& e : pool) {
      const OpenHypothesis& parent = beam[e.parent];
      ScorerModel::Decode decode = scorer.step(parent.decode.state, e.token);
      if (stats != nullptr) ++stats->step_calls;

      std::vector<TokenId> prefix;
      if (trace != nullptr) {
        prefix = parent.prefix;
        prefix.push_back(e.token);
        std::string text;
        for (TokenId t : prefix) {
          if (!text.empty()) text.push_back(' ');
          text += vocab.token_of(t);
        }
        trace->push_back({level + 1, text, e.logp});
      }

      const ResponseTrie::Node& child = trie.node(e.child);
      // The subtree mask admits the path; the terminal itself must match the
      // filter too (a positive entry can prefix a negative one).
      if (child.entry >= 0 &&
          (!restrict_polarity.has_value() ||
           child.entry_polarity == *restrict_polarity)) {
        completed.push_back({child.entry, e.logp + decode.log_probs[eom], 0.0});
      }
      bool has_live_children = false;
      for (const auto& [tok, grandchild] : child.children) {
        if ((trie.node(grandchild).polarity_mask & mask) != 0) {
          has_live_children = true;
          break;
        }
      }
      if (has_live_children) {
        next.push_back({e.child, e.logp, std::move(decode), std::move(prefix)});
      }
    }
    beam = std::move(next);
  }

  std::sort(completed.begin(), completed.end(),
            [](const ScoredResponse& a, const ScoredResponse& b2) {
              if (a.logp != b2.logp) return a.logp > b2.logp;
              return a.entry_index < b2.entry_index;
            });
  if (completed.size() > b) completed.resize(b);
  return completed;
}

std::vector<ScoredResponse> exhaustive_rank(const ScorerModel& scorer,
                                            std::span<const TokenId> original,
                                            const ResponseSet& set) {
  if (set.entries.empty()) {
    throw Error(Error::Code::kEmptyInput, "response set is empty");
  }
  std::vector<ScoredResponse> out;
  out.reserve(set.entries.size());
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    std::vector<TokenId> ids = scorer.vocab().ids_of(set.entries[i].text);
    out.push_back({static_cast<std::int32_t>(i),
                   score_response(scorer, original, ids), 0.0});
  }
  std::sort(out.begin(), out.end(),
            [](const ScoredResponse& a, const ScoredResponse& b) {
              if (a.logp != b.logp) return a.logp > b.logp;
              return a.entry_index < b.entry_index;
            });
  return out;
}

std::vector<std::pair<std::size_t, double>> beam_match_rate(
    const ScorerModel& scorer,
    const std::vector<std::vector<TokenId>>& messages, const ResponseSet& set,
    const std::vector<std::size_t>& beam_sizes, std::size_t max_len) {
  if (messages.empty()) {
    throw Error(Error::Code::kEmptyInput, "no messages to evaluate");
  }
  auto built = ResponseTrie::build(set, scorer.vocab());
  std::vector<std::int32_t> oracle_top;
  oracle_top.reserve(messages.size());
  for (const auto& msg : messages) {
    oracle_top.push_back(exhaustive_rank(scorer, msg, set)[0].entry_index);
  }
  std::vector<std::pair<std::size_t, double>> curve;
  for (std::size_t b : beam_sizes) {
    std::size_t matches = 0;
    for (std::size_t m = 0; m < messages.size(); ++m) {
      auto results = beam_search(scorer, messages[m], built.trie, b, max_len);
      if (!results.empty() && results[0].entry_index == oracle_top[m]) {
        ++matches;
      }
    }
    curve.emplace_back(
        b, static_cast<double>(matches) / static_cast<double>(messages.size()));
  }
  return curve;
}

void write_beam_trace_tsv(const std::string& path,
                          const std::vector<BeamTraceRow>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  out << "step\tprefix\tcum_logp\n";
  for (const auto& row : trace) {
    out << row.level << '\t' << row.prefix << '\t' << row.cum_logp << '\n';
  }
}

}  // namespace replykit
