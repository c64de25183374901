#include "replykit/vocab.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "replykit/errors.hpp"
#include "replykit/hash.hpp"

namespace replykit {

namespace {

const char* kSpecialOrder[7] = {
    Vocabulary::kEom,   Vocabulary::kUnk,   Vocabulary::kPerson,
    Vocabulary::kUrl,   Vocabulary::kEmail, Vocabulary::kPhone,
    Vocabulary::kNum,
};

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  token_to_id_.reserve(tokens_.size() + 7);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] =
        token_to_id_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(Error::Code::kMalformedInput,
                  "duplicate vocabulary token: " + tokens_[i]);
    }
  }
  for (const char* s : kSpecialOrder) {
    if (token_to_id_.count(s) > 0) {
      throw Error(Error::Code::kMalformedInput,
                  std::string("special token present in regular tokens: ") + s);
    }
    TokenId id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(s);
    token_to_id_.emplace(s, id);
  }
  specials_.eom = token_to_id_.at(kEom);
  specials_.unk = token_to_id_.at(kUnk);
  specials_.person = token_to_id_.at(kPerson);
  specials_.url = token_to_id_.at(kUrl);
  specials_.email = token_to_id_.at(kEmail);
  specials_.phone = token_to_id_.at(kPhone);
  specials_.num = token_to_id_.at(kNum);
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? specials_.unk : it->second;
}

std::vector<TokenId> Vocabulary::ids_of(const TokenList& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

TokenList Vocabulary::tokens_of(const std::vector<TokenId>& ids) const {
  TokenList out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token_of(id));
  return out;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

std::string Vocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = "v1";
  j["tokens"] = std::vector<std::string>(tokens_.begin(),
                                         tokens_.end() - 7);
  nlohmann::ordered_json sp;
  sp["eom"] = kEom;
  sp["unk"] = kUnk;
  sp["person"] = kPerson;
  sp["url"] = kUrl;
  sp["email"] = kEmail;
  sp["phone"] = kPhone;
  sp["num"] = kNum;
  j["specials"] = sp;
  return j.dump(2) + "\n";
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Code::kMalformedInput,
                std::string("vocabulary file is not valid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"] != "v1") {
    throw Error(Error::Code::kMalformedInput,
                "vocabulary file: unsupported or missing version");
  }
  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    throw Error(Error::Code::kMalformedInput,
                "vocabulary file: missing tokens array");
  }
  return Vocabulary(j["tokens"].get<std::vector<std::string>>());
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  out << to_json();
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Code::kIo, "could not open for read: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace replykit
