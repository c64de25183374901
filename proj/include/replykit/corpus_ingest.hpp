#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replykit/vocab.hpp"

namespace replykit {

// One email as it arrives. Social flags feed the triggering features;
// `replied` / `reply_from_mobile` are the triggering labels.
struct RawMessage {
  std::string id;
  std::string subject;
  std::string body;
  std::string sender;
  std::string recipient;
  bool replied = false;
  bool reply_from_mobile = false;
  bool sender_in_address_book = false;
  bool sender_in_social_network = false;
  bool recipient_replied_before = false;
};

struct TokenizedMessage {
  TokenList subject_tokens;
  std::vector<TokenList> body_sentences;
  bool normalized = false;
};

struct MessagePair {
  TokenizedMessage original;
  TokenList response_tokens;  // non-empty; EOM is appended by the scorers
};

// ---------------------------------------------------------------------------
// Text operations. All deterministic; empty input maps to empty output.

// Lowercased word/punctuation tokens. Apostrophe clitics ('s 'll n't ...)
// split off; emails, URLs, phone numbers, numbers and the special-token
// literals survive as single tokens so normalization can see them whole.
TokenList tokenize(const std::string& text);

// As `tokenize` but with original casing preserved (PERSON detection needs
// to see capitalization before it is lost).
TokenList tokenize_cased(const std::string& text);

// Split at terminal punctuation (. ! ?) followed by whitespace, and at
// newlines. No empty sentences.
std::vector<std::string> segment_sentences(const std::string& body);

// Entity tokens -> EMAIL/URL/PHONE/NUM specials; capitalized OOV tokens ->
// PERSON; remaining OOV -> UNK. Length preserved. Accepts cased tokens;
// survivors are lowercased.
TokenList normalize_tokens(const TokenList& tokens, const Vocabulary& vocab);

// Drop ">"-quoted lines and everything following a forward/reply marker
// ("On ... wrote:", "-- Forwarded message --").
std::string strip_quotation(const std::string& body);

// Drop a leading salutation line (hi/hello/hey/dear + optional name) and
// trailing close lines (best/regards/cheers/..., "thanks, <name>", and any
// signature block after a "--" separator).
std::string strip_salutation_close(const std::string& body);

// Top `max_size` tokens by frequency, ties broken lexicographically;
// specials appended. An empty corpus yields a specials-only vocabulary.
Vocabulary build_vocab(const std::vector<TokenList>& corpus,
                       std::size_t max_size);

// ---------------------------------------------------------------------------
// Full preprocessing as applied to each message.

enum class PreprocessStatus { kOk, kNonEnglish, kEmptyAfterStripping };

struct PreprocessOptions {
  // Fraction of alphabetic tokens that must be English stopwords.
  double language_threshold = 0.15;
  // The check applies to incoming messages; the response side of a pair
  // inherits its language from the original.
  bool language_check = true;
};

struct PreprocessResult {
  PreprocessStatus status = PreprocessStatus::kOk;
  TokenizedMessage message;
  bool ok() const { return status == PreprocessStatus::kOk; }
};

// language check -> strip_quotation -> strip_salutation_close ->
// segment_sentences -> tokenize -> normalize_tokens, in that order.
PreprocessResult preprocess(const RawMessage& msg, const Vocabulary& vocab,
                            const PreprocessOptions& opts = {});

// Flat token stream of a preprocessed message (subject first when asked).
TokenList flatten(const TokenizedMessage& msg, bool include_subject);

std::string join_tokens(const TokenList& tokens);
TokenList split_tokens(const std::string& text);

// ---------------------------------------------------------------------------
// Corpus files (JSONL, one RawMessage per line; absent booleans are false).

std::vector<RawMessage> read_corpus_jsonl(const std::string& path);
std::vector<RawMessage> read_corpus_jsonl(std::istream& in);
void write_corpus_jsonl(const std::string& path,
                        const std::vector<RawMessage>& messages);

struct PairRecord {
  std::string original_id;
  std::string original_text;  // preprocess-rendered (space-joined tokens)
  std::string response_text;
};

std::vector<PairRecord> read_pairs_jsonl(const std::string& path);
void write_pairs_jsonl(const std::string& path,
                       const std::vector<PairRecord>& pairs);

// Reply linkage: the response to a replied-to message is the next message in
// file order with sender/recipient swapped. File order is delivery order.
struct LinkedPair {
  std::size_t original_index;
  std::size_t response_index;
};
std::vector<LinkedPair> link_reply_pairs(const std::vector<RawMessage>& corpus);

struct IngestOptions {
  std::size_t vocab_size = 5000;
  bool include_subject = true;
  PreprocessOptions preprocess;
};

struct IngestOutput {
  Vocabulary vocab;
  std::vector<PairRecord> pairs;
  std::size_t discarded_non_english = 0;
  std::size_t discarded_empty = 0;
};

// Two passes: count tokens over stripped text to build the vocabulary, then
// preprocess each linked pair against it.
IngestOutput ingest_corpus(const std::vector<RawMessage>& corpus,
                           const IngestOptions& opts);

// Pairs file -> id sequences for scorer training/eval.
struct TokenizedPair {
  std::vector<TokenId> original_ids;
  std::vector<TokenId> response_ids;  // without the terminal EOM
};
std::vector<TokenizedPair> tokenize_pairs(const std::vector<PairRecord>& pairs,
                                          const Vocabulary& vocab);

}  // namespace replykit
