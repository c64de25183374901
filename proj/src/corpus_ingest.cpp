#include "replykit/corpus_ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "replykit/errors.hpp"

namespace replykit {

namespace {

bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_word_char(char c) {
  return is_ascii_alpha(c) || is_digit(c) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::string ascii_lower(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  lines.push_back(cur);
  return lines;
}

const std::array<const char*, 7> kSpecialLiterals = {
    Vocabulary::kEom,   Vocabulary::kUnk,   Vocabulary::kPerson,
    Vocabulary::kUrl,   Vocabulary::kEmail, Vocabulary::kPhone,
    Vocabulary::kNum,
};

// Common English function words; used both for the language heuristic and
// nowhere else (canonicalization has its own lexicon).
const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kSet = {
      "the",  "a",     "an",    "and",   "or",    "but",   "if",    "then",
      "i",    "you",   "he",    "she",   "it",    "we",    "they",  "me",
      "him",  "her",   "us",    "them",  "my",    "your",  "his",   "its",
      "our",  "their", "this",  "that",  "these", "those", "is",    "are",
      "was",  "were",  "be",    "been",  "being", "am",    "do",    "does",
      "did",  "will",  "would", "can",   "could", "shall", "should", "may",
      "might", "must", "have",  "has",   "had",   "not",   "no",    "yes",
      "to",   "of",    "in",    "on",    "at",    "by",    "for",   "with",
      "from", "about", "as",    "into",  "up",    "down",  "out",   "over",
      "so",   "just",  "too",   "very",  "there", "here",  "what",  "when",
      "where", "who",  "how",   "why",   "which", "all",   "any",   "some",
      "see",  "let",   "get",   "go",    "know",  "think", "time",  "please",
      "thanks", "ok",  "okay",  "sure",  "also",  "now",   "than",  "more",
      "'s",   "'ll",   "'re",   "'ve",   "'m",    "'d",    "n't",
  };
  return kSet;
}

// --- token scanners -------------------------------------------------------

bool is_local_part_char(char c) {
  return is_ascii_alpha(c) || is_digit(c) || c == '.' || c == '_' ||
         c == '%' || c == '+' || c == '-';
}
bool is_domain_char(char c) {
  return is_ascii_alpha(c) || is_digit(c) || c == '.' || c == '-';
}

// Length of an email address starting at `pos`, 0 if none.
std::size_t scan_email(const std::string& s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size() && is_local_part_char(s[i])) ++i;
  if (i == pos || i >= s.size() || s[i] != '@') return 0;
  std::size_t at = i++;
  std::size_t domain_start = i;
  bool has_dot = false;
  while (i < s.size() && is_domain_char(s[i])) {
    if (s[i] == '.') has_dot = true;
    ++i;
  }
  // Trailing dot belongs to the sentence, not the address.
  while (i > domain_start && s[i - 1] == '.') {
    --i;
    has_dot = (s.find('.', domain_start) < i);
  }
  if (i <= at + 1 || !has_dot) return 0;
  return i - pos;
}

std::size_t scan_url(const std::string& s, std::size_t pos) {
  auto starts_with = [&](const char* p) {
    std::size_t n = std::char_traits<char>::length(p);
    if (pos + n > s.size()) return false;
    for (std::size_t k = 0; k < n; ++k) {
      char c = s[pos + k];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (c != p[k]) return false;
    }
    return true;
  };
  bool scheme = starts_with("http://") || starts_with("https://");
  bool www = starts_with("www.");
  if (!scheme && !www) return 0;
  std::size_t i = pos;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  // Leave terminal punctuation to the tokenizer.
  while (i > pos && (s[i - 1] == '.' || s[i - 1] == ',' || s[i - 1] == '!' ||
                     s[i - 1] == '?' || s[i - 1] == ';' || s[i - 1] == ')')) {
    --i;
  }
  std::size_t len = i - pos;
  if (scheme && len <= 8) return 0;
  if (www && (len <= 6 || s.find('.', pos + 4) >= i)) return 0;
  return len;
}

bool is_phone_char(char c) {
  return is_digit(c) || c == '+' || c == '-' || c == '(' || c == ')';
}

std::size_t scan_phone(const std::string& s, std::size_t pos) {
  std::size_t i = pos;
  std::size_t digits = 0;
  while (i < s.size() && is_phone_char(s[i])) {
    if (is_digit(s[i])) ++digits;
    ++i;
  }
  while (i > pos && !is_digit(s[i - 1])) --i;
  if (digits < 7) return 0;
  return i - pos;
}

std::size_t scan_number(const std::string& s, std::size_t pos) {
  if (!is_digit(s[pos])) return 0;
  std::size_t i = pos;
  while (i < s.size() && is_digit(s[i])) ++i;
  while (i + 1 < s.size() && (s[i] == '.' || s[i] == ',' || s[i] == ':') &&
         is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  return i - pos;
}

std::size_t scan_special_literal(const std::string& s, std::size_t pos) {
  if (s[pos] != '<') return 0;
  for (const char* lit : kSpecialLiterals) {
    std::size_t n = std::char_traits<char>::length(lit);
    if (s.compare(pos, n, lit) == 0) return n;
  }
  return 0;
}

// Word run with internal apostrophes ("tomorrow's", "o'clock").
std::size_t scan_word(const std::string& s, std::size_t pos) {
  if (!is_word_char(s[pos]) && s[pos] != '\'') return 0;
  std::size_t i = pos;
  while (i < s.size()) {
    if (is_word_char(s[i])) {
      ++i;
    } else if (s[i] == '\'' && i + 1 < s.size() && is_word_char(s[i + 1]) &&
               (i > pos || true)) {
      ++i;
    } else {
      break;
    }
  }
  return i - pos;
}

// Split clitics off a scanned word: "tomorrow's" -> tomorrow 's,
// "can't" -> ca n't. Unrecognized apostrophes stay put ("o'clock").
void emit_word(const std::string& word, TokenList& out) {
  auto lower_suffix = [&](std::size_t from) {
    return ascii_lower(word.substr(from));
  };
  if (word.size() > 3) {
    std::string tail3 = lower_suffix(word.size() - 3);
    if (tail3 == "n't") {
      out.push_back(word.substr(0, word.size() - 3));
      out.push_back(word.substr(word.size() - 3));
      return;
    }
  }
  static const std::array<const char*, 6> kClitics = {"'s", "'ll", "'re",
                                                      "'ve", "'m", "'d"};
  for (const char* clitic : kClitics) {
    std::size_t n = std::char_traits<char>::length(clitic);
    if (word.size() > n &&
        ascii_lower(word.substr(word.size() - n)) == clitic) {
      out.push_back(word.substr(0, word.size() - n));
      out.push_back(word.substr(word.size() - n));
      return;
    }
  }
  out.push_back(word);
}

TokenList tokenize_impl(const std::string& text, bool lowercase) {
  TokenList out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::size_t n = scan_special_literal(text, i)) {
      out.push_back(text.substr(i, n));
      i += n;
      continue;
    }
    if (is_local_part_char(c)) {
      if (std::size_t n = scan_email(text, i)) {
        out.push_back(text.substr(i, n));
        i += n;
        continue;
      }
    }
    if (is_ascii_alpha(c)) {
      if (std::size_t n = scan_url(text, i)) {
        out.push_back(text.substr(i, n));
        i += n;
        continue;
      }
    }
    if (c == '+' || c == '(' || is_digit(c)) {
      if (std::size_t n = scan_phone(text, i)) {
        out.push_back(text.substr(i, n));
        i += n;
        continue;
      }
    }
    if (std::size_t n = scan_number(text, i)) {
      out.push_back(text.substr(i, n));
      i += n;
      continue;
    }
    if (std::size_t n = scan_word(text, i)) {
      emit_word(text.substr(i, n), out);
      i += n;
      continue;
    }
    out.push_back(std::string(1, c));
    ++i;
  }
  if (lowercase) {
    for (auto& t : out) t = ascii_lower(t);
  }
  return out;
}

bool looks_like_email(const std::string& t) {
  return scan_email(t, 0) == t.size() && t.size() > 0;
}
bool looks_like_url(const std::string& t) {
  return !t.empty() && scan_url(t, 0) == t.size();
}
bool looks_like_phone(const std::string& t) {
  return !t.empty() && scan_phone(t, 0) == t.size();
}
bool looks_like_number(const std::string& t) {
  return !t.empty() && scan_number(t, 0) == t.size();
}
bool is_special_literal(const std::string& t) {
  return !t.empty() && scan_special_literal(t, 0) == t.size();
}

// --- salutation / close lexicons -------------------------------------------

const std::unordered_set<std::string>& salutation_words() {
  static const std::unordered_set<std::string> kSet = {"hi", "hello", "hey",
                                                       "dear"};
  return kSet;
}

const std::unordered_set<std::string>& plain_closes() {
  static const std::unordered_set<std::string> kSet = {
      "best",      "best regards", "best wishes",     "kind regards",
      "warm regards", "regards",   "cheers",          "sincerely",
      "sincerely yours",
  };
  return kSet;
}

const std::unordered_set<std::string>& named_closes() {
  // These require ", <name>" after them ("thanks" alone is a response, not
  // a close).
  static const std::unordered_set<std::string> kSet = {
      "best",    "best regards", "best wishes", "kind regards",
      "warm regards", "regards", "cheers",      "sincerely",
      "thanks",  "thank you",    "many thanks",
  };
  return kSet;
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty()) {
    char c = s.back();
    if (c == '.' || c == ',' || c == '!' || c == ';' || c == ':') {
      s.pop_back();
    } else {
      break;
    }
  }
  return trim(s);
}

std::size_t word_count(const std::string& s) {
  std::istringstream in(s);
  std::string w;
  std::size_t n = 0;
  while (in >> w) ++n;
  return n;
}

bool is_salutation_line(const std::string& line) {
  std::string t = ascii_lower(strip_trailing_punct(trim(line)));
  if (t.empty()) return false;
  std::size_t sp = t.find_first_of(" ,");
  std::string head = sp == std::string::npos ? t : t.substr(0, sp);
  if (salutation_words().count(head) == 0) return false;
  std::string rest = sp == std::string::npos ? "" : trim(t.substr(sp + 1));
  if (!rest.empty() && rest.front() == ',') rest = trim(rest.substr(1));
  return word_count(rest) <= 2;
}

bool is_close_line(const std::string& line) {
  std::string t = ascii_lower(trim(line));
  if (t.empty()) return false;
  std::string no_punct = strip_trailing_punct(t);
  if (plain_closes().count(no_punct) > 0) return true;
  std::size_t comma = t.find(',');
  if (comma == std::string::npos) return false;
  std::string head = strip_trailing_punct(trim(t.substr(0, comma)));
  std::string tail = strip_trailing_punct(trim(t.substr(comma + 1)));
  if (named_closes().count(head) == 0) return false;
  std::size_t words = word_count(tail);
  return words >= 1 && words <= 2;
}

bool is_signature_separator(const std::string& line) {
  std::string t = trim(line);
  return t == "--" || t == "---";
}

bool is_forward_marker(const std::string& line) {
  std::string t = ascii_lower(trim(line));
  if (t.find("forwarded message") != std::string::npos &&
      t.find('-') != std::string::npos) {
    return true;
  }
  return t.rfind("on ", 0) == 0 && t.size() >= 6 &&
         t.compare(t.size() - 6, 6, "wrote:") == 0;
}

// Fraction of alphabetic tokens that are English stopwords.
double stopword_ratio(const std::string& body) {
  std::size_t alpha = 0, hits = 0;
  for (const auto& t : tokenize_impl(body, /*lowercase=*/true)) {
    if (!t.empty() && (is_ascii_alpha(t[0]) ||
                       static_cast<unsigned char>(t[0]) >= 0x80)) {
      ++alpha;
      if (stopwords().count(t) > 0) ++hits;
    }
  }
  return alpha == 0 ? 0.0
                    : static_cast<double>(hits) / static_cast<double>(alpha);
}

}  // namespace

// ---------------------------------------------------------------------------

TokenList tokenize(const std::string& text) {
  return tokenize_impl(text, /*lowercase=*/true);
}

TokenList tokenize_cased(const std::string& text) {
  return tokenize_impl(text, /*lowercase=*/false);
}

std::vector<std::string> segment_sentences(const std::string& body) {
  std::vector<std::string> sentences;
  std::string cur;
  auto flush = [&] {
    std::string t = trim(cur);
    if (!t.empty()) sentences.push_back(t);
    cur.clear();
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '\n') {
      flush();
      continue;
    }
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      while (i + 1 < body.size() &&
             (body[i + 1] == '.' || body[i + 1] == '!' || body[i + 1] == '?')) {
        cur.push_back(body[++i]);
      }
      if (i + 1 >= body.size() ||
          std::isspace(static_cast<unsigned char>(body[i + 1]))) {
        flush();
      }
    }
  }
  flush();
  return sentences;
}

TokenList normalize_tokens(const TokenList& tokens, const Vocabulary& vocab) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (is_special_literal(tok)) {
      out.push_back(tok);
    } else if (looks_like_email(tok)) {
      out.push_back(Vocabulary::kEmail);
    } else if (looks_like_url(tok)) {
      out.push_back(Vocabulary::kUrl);
    } else if (looks_like_phone(tok)) {
      out.push_back(Vocabulary::kPhone);
    } else if (looks_like_number(tok)) {
      out.push_back(Vocabulary::kNum);
    } else {
      std::string lower = ascii_lower(tok);
      if (vocab.contains(lower)) {
        out.push_back(lower);
      } else if (tok[0] >= 'A' && tok[0] <= 'Z') {
        out.push_back(Vocabulary::kPerson);
      } else {
        out.push_back(Vocabulary::kUnk);
      }
    }
  }
  return out;
}

std::string strip_quotation(const std::string& body) {
  std::vector<std::string> kept;
  for (const auto& line : split_lines(body)) {
    if (is_forward_marker(line)) break;
    std::string t = trim(line);
    if (!t.empty() && t[0] == '>') continue;
    kept.push_back(line);
  }
  while (!kept.empty() && trim(kept.back()).empty()) kept.pop_back();
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out.push_back('\n');
    out += kept[i];
  }
  return out;
}

std::string strip_salutation_close(const std::string& body) {
  std::vector<std::string> lines = split_lines(body);

  // Signature block.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_signature_separator(lines[i])) {
      lines.resize(i);
      break;
    }
  }

  // Leading salutation.
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first < lines.size() && is_salutation_line(lines[first])) {
    lines.erase(lines.begin(), lines.begin() + first + 1);
  }

  // Trailing closes.
  while (!lines.empty()) {
    std::string t = trim(lines.back());
    if (t.empty() || is_close_line(t)) {
      lines.pop_back();
    } else {
      break;
    }
  }

  std::string out;
  bool any = false;
  for (const auto& line : lines) {
    if (any) out.push_back('\n');
    out += line;
    any = true;
  }
  return trim(out);
}

Vocabulary build_vocab(const std::vector<TokenList>& corpus,
                       std::size_t max_size) {
  if (max_size == 0) {
    throw Error(Error::Code::kMalformedInput, "vocab max_size must be > 0");
  }
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& toks : corpus) {
    for (const auto& t : toks) {
      if (is_special_literal(t)) continue;
      ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> items(counts.begin(),
                                                           counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > max_size) items.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(items.size());
  for (auto& [tok, n] : items) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens));
}

PreprocessResult preprocess(const RawMessage& msg, const Vocabulary& vocab,
                            const PreprocessOptions& opts) {
  PreprocessResult res;
  if (opts.language_check &&
      stopword_ratio(msg.body) < opts.language_threshold) {
    res.status = PreprocessStatus::kNonEnglish;
    return res;
  }

  std::string body = strip_salutation_close(strip_quotation(msg.body));
  for (const auto& sentence : segment_sentences(body)) {
    TokenList norm = normalize_tokens(tokenize_cased(sentence), vocab);
    if (!norm.empty()) res.message.body_sentences.push_back(std::move(norm));
  }
  if (res.message.body_sentences.empty()) {
    res.status = PreprocessStatus::kEmptyAfterStripping;
    return res;
  }

  // Subject: drop reply/forward prefixes, then the same token treatment.
  std::string subject = trim(msg.subject);
  for (;;) {
    std::string lower = ascii_lower(subject);
    bool stripped = false;
    for (const char* prefix : {"re:", "fw:", "fwd:"}) {
      std::size_t n = std::char_traits<char>::length(prefix);
      if (lower.rfind(prefix, 0) == 0) {
        subject = trim(subject.substr(n));
        stripped = true;
        break;
      }
    }
    if (!stripped) break;
  }
  res.message.subject_tokens =
      normalize_tokens(tokenize_cased(subject), vocab);
  res.message.normalized = true;
  return res;
}

TokenList flatten(const TokenizedMessage& msg, bool include_subject) {
  TokenList out;
  if (include_subject) {
    out.insert(out.end(), msg.subject_tokens.begin(),
               msg.subject_tokens.end());
  }
  for (const auto& s : msg.body_sentences) {
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

TokenList split_tokens(const std::string& text) {
  TokenList out;
  std::istringstream in(text);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus / pairs files

namespace {

RawMessage parse_raw_message(const nlohmann::json& j, std::size_t line_no) {
  auto context = [line_no] {
    return "corpus line " + std::to_string(line_no) + ": ";
  };
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
    throw Error(Error::Code::kMalformedInput, context() + "missing id");
  }
  RawMessage m;
  m.id = j["id"].get<std::string>();
  auto str = [&](const char* key) {
    return j.contains(key) ? j[key].get<std::string>() : std::string();
  };
  auto flag = [&](const char* key) {
    return j.contains(key) && j[key].get<bool>();
  };
  m.subject = str("subject");
  m.body = str("body");
  m.sender = str("sender");
  m.recipient = str("recipient");
  m.replied = flag("replied");
  m.reply_from_mobile = flag("reply_from_mobile");
  m.sender_in_address_book = flag("sender_in_address_book");
  m.sender_in_social_network = flag("sender_in_social_network");
  m.recipient_replied_before = flag("recipient_replied_before");
  if (!m.replied && m.reply_from_mobile) {
    throw Error(Error::Code::kMalformedInput,
                context() + "reply_from_mobile set on unreplied message");
  }
  return m;
}

}  // namespace

std::vector<RawMessage> read_corpus_jsonl(std::istream& in) {
  std::vector<RawMessage> out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Error::Code::kMalformedInput,
                  "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    RawMessage m = parse_raw_message(j, line_no);
    if (!seen_ids.insert(m.id).second) {
      throw Error(Error::Code::kMalformedInput,
                  "corpus line " + std::to_string(line_no) +
                      ": duplicate id " + m.id);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<RawMessage> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Code::kIo, "could not open for read: " + path);
  return read_corpus_jsonl(in);
}

void write_corpus_jsonl(const std::string& path,
                        const std::vector<RawMessage>& messages) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  for (const auto& m : messages) {
    nlohmann::ordered_json j;
    j["id"] = m.id;
    j["subject"] = m.subject;
    j["body"] = m.body;
    j["sender"] = m.sender;
    j["recipient"] = m.recipient;
    j["replied"] = m.replied;
    j["reply_from_mobile"] = m.reply_from_mobile;
    j["sender_in_address_book"] = m.sender_in_address_book;
    j["sender_in_social_network"] = m.sender_in_social_network;
    j["recipient_replied_before"] = m.recipient_replied_before;
    out << j.dump() << "\n";
  }
}

std::vector<PairRecord> read_pairs_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Code::kIo, "could not open for read: " + path);
  std::vector<PairRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      PairRecord p;
      p.original_id = j.at("original_id").get<std::string>();
      p.original_text = j.at("original_text").get<std::string>();
      p.response_text = j.at("response_text").get<std::string>();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Error::Code::kMalformedInput,
                  "pairs line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_pairs_jsonl(const std::string& path,
                       const std::vector<PairRecord>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["original_id"] = p.original_id;
    j["original_text"] = p.original_text;
    j["response_text"] = p.response_text;
    out << j.dump() << "\n";
  }
}

std::vector<LinkedPair> link_reply_pairs(
    const std::vector<RawMessage>& corpus) {
  // Positions indexed by (sender, recipient) for the reverse-direction probe.
  std::map<std::pair<std::string, std::string>, std::deque<std::size_t>>
      by_route;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_route[{corpus[i].sender, corpus[i].recipient}].push_back(i);
  }
  std::vector<LinkedPair> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].replied) continue;
    auto it = by_route.find({corpus[i].recipient, corpus[i].sender});
    if (it == by_route.end()) continue;
    auto& queue = it->second;
    while (!queue.empty() && queue.front() <= i) queue.pop_front();
    if (queue.empty()) continue;
    out.push_back({i, queue.front()});
    queue.pop_front();
  }
  return out;
}

IngestOutput ingest_corpus(const std::vector<RawMessage>& corpus,
                           const IngestOptions& opts) {
  IngestOutput out;

  // Pass 1: vocabulary over stripped, tokenized text of English messages.
  std::vector<TokenList> token_lists;
  for (const auto& msg : corpus) {
    if (opts.preprocess.language_check &&
        stopword_ratio(msg.body) < opts.preprocess.language_threshold) {
      continue;
    }
    std::string body = strip_salutation_close(strip_quotation(msg.body));
    token_lists.push_back(tokenize(msg.subject));
    token_lists.push_back(tokenize(body));
  }
  out.vocab = build_vocab(token_lists, opts.vocab_size);

  // Pass 2: preprocess linked pairs.
  PreprocessOptions original_opts = opts.preprocess;
  PreprocessOptions response_opts = opts.preprocess;
  response_opts.language_check = false;
  for (const auto& link : link_reply_pairs(corpus)) {
    const RawMessage& original = corpus[link.original_index];
    const RawMessage& response = corpus[link.response_index];
    PreprocessResult orig = preprocess(original, out.vocab, original_opts);
    if (orig.status == PreprocessStatus::kNonEnglish) {
      ++out.discarded_non_english;
      continue;
    }
    if (orig.status == PreprocessStatus::kEmptyAfterStripping) {
      ++out.discarded_empty;
      continue;
    }
    PreprocessResult resp = preprocess(response, out.vocab, response_opts);
    if (!resp.ok()) {
      ++out.discarded_empty;
      continue;
    }
    PairRecord rec;
    rec.original_id = original.id;
    rec.original_text =
        join_tokens(flatten(orig.message, opts.include_subject));
    rec.response_text =
        join_tokens(flatten(resp.message, /*include_subject=*/false));
    if (rec.response_text.empty()) {
      ++out.discarded_empty;
      continue;
    }
    out.pairs.push_back(std::move(rec));
  }
  return out;
}

std::vector<TokenizedPair> tokenize_pairs(const std::vector<PairRecord>& pairs,
                                          const Vocabulary& vocab) {
  std::vector<TokenizedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    TokenizedPair tp;
    tp.original_ids = vocab.ids_of(split_tokens(p.original_text));
    tp.response_ids = vocab.ids_of(split_tokens(p.response_text));
    if (tp.response_ids.empty()) continue;
    out.push_back(std::move(tp));
  }
  return out;
}

}  // namespace replykit
