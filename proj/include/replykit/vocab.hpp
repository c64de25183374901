#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace replykit {

using TokenId = std::int32_t;
using TokenList = std::vector<std::string>;

// Dense 0-based token ids: frequent tokens first, then the special tokens in
// a fixed order. Read-only after build; serialization round-trips the id
// assignment exactly.
class Vocabulary {
 public:
  struct Specials {
    TokenId eom = -1;
    TokenId unk = -1;
    TokenId person = -1;
    TokenId url = -1;
    TokenId email = -1;
    TokenId phone = -1;
    TokenId num = -1;
  };

  static constexpr const char* kEom = "<eom>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kPerson = "<person>";
  static constexpr const char* kUrl = "<url>";
  static constexpr const char* kEmail = "<email>";
  static constexpr const char* kPhone = "<phone>";
  static constexpr const char* kNum = "<num>";

  Vocabulary() = default;

  // `tokens` must not contain the special token strings; specials are
  // appended after them.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t regular_size() const { return tokens_.size() - 7; }

  const std::vector<std::string>& tokens() const { return tokens_; }
  const Specials& specials() const { return specials_; }

  bool contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
  }

  // UNK for out-of-vocabulary tokens.
  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const { return tokens_.at(id); }

  bool is_special(TokenId id) const {
    return id >= static_cast<TokenId>(regular_size());
  }

  std::vector<TokenId> ids_of(const TokenList& tokens) const;
  TokenList tokens_of(const std::vector<TokenId>& ids) const;

  // Fingerprint carried by model files; a mismatch at load time is an error.
  std::uint64_t fingerprint() const;

  std::string to_json() const;
  static Vocabulary from_json(const std::string& text);

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  Specials specials_;
};

}  // namespace replykit
