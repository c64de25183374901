#include "replykit/corpus_ingest.hpp"

#include <sstream>

#include "doctest.h"
#include "replykit/errors.hpp"

using namespace replykit;

namespace {

Vocabulary tiny_vocab(std::vector<std::string> tokens) {
  return Vocabulary(std::move(tokens));
}

RawMessage message_with_body(const std::string& body) {
  RawMessage m;
  m.id = "m1";
  m.body = body;
  return m;
}

}  // namespace

TEST_CASE("tokenize splits words, punctuation and clitics") {
  CHECK(tokenize("Can you join tomorrow's meeting?") ==
        TokenList{"can", "you", "join", "tomorrow", "'s", "meeting", "?"});
  CHECK(tokenize("") == TokenList{});
  CHECK(tokenize("Thanks!!") == TokenList{"thanks", "!", "!"});
  CHECK(tokenize("can't do it") == TokenList{"ca", "n't", "do", "it"});
  CHECK(tokenize("I'll be there.") == TokenList{"i", "'ll", "be", "there", "."});
  CHECK(tokenize("o'clock") == TokenList{"o'clock"});
}

TEST_CASE("tokenize keeps entities whole") {
  CHECK(tokenize("email me at bob@x.com") ==
        TokenList{"email", "me", "at", "bob@x.com"});
  CHECK(tokenize("call 5551234567") == TokenList{"call", "5551234567"});
  CHECK(tokenize("see https://x.co/a now") ==
        TokenList{"see", "https://x.co/a", "now"});
  CHECK(tokenize("at 5.") == TokenList{"at", "5", "."});
  CHECK(tokenize("price is 3.50") == TokenList{"price", "is", "3.50"});
  CHECK(tokenize("<person> says hi") == TokenList{"<person>", "says", "hi"});
}

TEST_CASE("tokenize is deterministic") {
  const std::string text = "Hello Bob, are we on for 6:30? Visit www.x.org/a!";
  CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("segment_sentences splits at terminal punctuation and newlines") {
  CHECK(segment_sentences("I can come. See you!") ==
        std::vector<std::string>{"I can come.", "See you!"});
  CHECK(segment_sentences("One line no punct") ==
        std::vector<std::string>{"One line no punct"});
  CHECK(segment_sentences("A.\nB?") == std::vector<std::string>{"A.", "B?"});
  CHECK(segment_sentences("") == std::vector<std::string>{});
  CHECK(segment_sentences("Wait... what?") ==
        std::vector<std::string>{"Wait...", "what?"});
}

TEST_CASE("normalize_tokens replaces entities and OOV tokens") {
  Vocabulary vocab = tiny_vocab({"email", "me", "at", "call"});
  CHECK(normalize_tokens({"email", "me", "at", "bob@x.com"}, vocab) ==
        TokenList{"email", "me", "at", Vocabulary::kEmail});
  CHECK(normalize_tokens({"call", "5551234567"}, vocab) ==
        TokenList{"call", Vocabulary::kPhone});
  CHECK(normalize_tokens({"email", "me"}, vocab) == TokenList{"email", "me"});
  // Capitalized OOV -> PERSON, lowercase OOV -> UNK.
  CHECK(normalize_tokens({"call", "Zranthor"}, vocab) ==
        TokenList{"call", Vocabulary::kPerson});
  CHECK(normalize_tokens({"call", "zranthor"}, vocab) ==
        TokenList{"call", Vocabulary::kUnk});
  // In-vocab word keeps its identity regardless of casing.
  CHECK(normalize_tokens({"Call", "me"}, vocab) == TokenList{"call", "me"});
  // Length preserved.
  CHECK(normalize_tokens({"a", "b", "c"}, vocab).size() == 3);
}

TEST_CASE("strip_quotation removes quoted lines and forwarded blocks") {
  CHECK(strip_quotation("Yes!\n> original text") == "Yes!");
  CHECK(strip_quotation("no markers here") == "no markers here");
  CHECK(strip_quotation("Ok\nOn Mon, Al wrote:\nhi") == "Ok");
  CHECK(strip_quotation("Sure\n---------- Forwarded message ----------\nx") ==
        "Sure");
}

TEST_CASE("strip_salutation_close removes greetings, closes, signatures") {
  CHECK(strip_salutation_close("Hi John\nSee you then\nBest regards, Mary") ==
        "See you then");
  CHECK(strip_salutation_close("See you then") == "See you then");
  CHECK(strip_salutation_close("Dear Bob\nOk") == "Ok");
  CHECK(strip_salutation_close("Done\n--\nAl Smith\nSomeCorp") == "Done");
  CHECK(strip_salutation_close("On my way!\nCheers") == "On my way!");
  CHECK(strip_salutation_close("Got it\nThanks, Mary") == "Got it");
  // "Thanks!" alone is a response, not a close.
  CHECK(strip_salutation_close("Thanks!") == "Thanks!");
  // A greeting with a long tail is content, not a salutation.
  CHECK(strip_salutation_close("hi how are you doing these days") ==
        "hi how are you doing these days");
}

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  std::vector<TokenList> corpus = {{"a", "a", "a", "b", "c"}, {"a", "a", "b"}};
  Vocabulary v = build_vocab(corpus, 2);
  CHECK(v.regular_size() == 2);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK_FALSE(v.contains("c"));
  CHECK(v.contains(Vocabulary::kEom));

  // Tie broken lexicographically.
  Vocabulary tie = build_vocab({{"b", "a"}}, 1);
  CHECK(tie.contains("a"));
  CHECK_FALSE(tie.contains("b"));

  Vocabulary empty = build_vocab({}, 5);
  CHECK(empty.regular_size() == 0);
  CHECK(empty.size() == 7);
}

TEST_CASE("vocabulary ids are dense and stable across serialization") {
  Vocabulary v = build_vocab({{"x", "y", "x"}}, 10);
  Vocabulary back = Vocabulary::from_json(v.to_json());
  CHECK(back == v);
  CHECK(back.fingerprint() == v.fingerprint());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(back.id_of(v.token_of(static_cast<TokenId>(i))) ==
          static_cast<TokenId>(i));
  }
}

TEST_CASE("preprocess composes the pipeline steps") {
  Vocabulary vocab = build_vocab(
      {{"can", "you", "join", "the", "meeting", "we", "will", "be", "there",
        "see", "then", "at", "i", "think", "so", "'s", "tomorrow", "?", "."}},
      100);
  RawMessage m;
  m.id = "m1";
  m.subject = "Re: meeting";
  m.body = "Hi John\nCan you join tomorrow's meeting? I think so.\n"
           "> earlier thread\nBest regards, Mary";
  PreprocessResult r = preprocess(m, vocab);
  REQUIRE(r.ok());
  CHECK(r.message.normalized);
  CHECK(r.message.subject_tokens == TokenList{"meeting"});
  REQUIRE(r.message.body_sentences.size() == 2);
  CHECK(r.message.body_sentences[0] ==
        TokenList{"can", "you", "join", "tomorrow", "'s", "meeting", "?"});
  CHECK(r.message.body_sentences[1] == TokenList{"i", "think", "so", "."});
}

TEST_CASE("preprocess rejects non-English and empty messages") {
  Vocabulary vocab = build_vocab({{"ok"}}, 10);
  RawMessage quoted = message_with_body("> the whole body is a quote\n> more");
  CHECK(preprocess(quoted, vocab).status ==
        PreprocessStatus::kEmptyAfterStripping);

  RawMessage foreign = message_with_body(
      "czy mozesz dolaczyc do jutrzejszego spotkania zespolu projektowego");
  CHECK(preprocess(foreign, vocab).status == PreprocessStatus::kNonEnglish);
}

TEST_CASE("preprocess is idempotent on its own rendering") {
  Vocabulary vocab = build_vocab(
      {{"can", "you", "join", "the", "meeting", "i", "will", "be", "there",
        "at", "we", "see", "'s", "tomorrow", "?", ".", "think", "so"}},
      100);
  RawMessage m;
  m.id = "m1";
  m.body = "Can you join tomorrow's meeting at 6? I will be there.";
  PreprocessResult first = preprocess(m, vocab);
  REQUIRE(first.ok());
  TokenList flat = flatten(first.message, /*include_subject=*/false);

  RawMessage again;
  again.id = "m2";
  again.body = join_tokens(flat);
  PreprocessResult second = preprocess(again, vocab);
  REQUIRE(second.ok());
  CHECK(flatten(second.message, false) == flat);
}

TEST_CASE("normalization closure: nothing outside vocab and specials") {
  Vocabulary vocab = build_vocab({{"we", "the", "a"}}, 3);
  RawMessage m = message_with_body(
      "We saw the new Designs at 5 and a note from kz@x.io about "
      "www.example.org today");
  PreprocessResult r = preprocess(m, vocab);
  REQUIRE(r.ok());
  for (const auto& sentence : r.message.body_sentences) {
    for (const auto& tok : sentence) {
      CHECK(vocab.contains(tok));
    }
  }
}

TEST_CASE("corpus jsonl round-trips and validates") {
  std::vector<RawMessage> corpus;
  RawMessage a;
  a.id = "a";
  a.subject = "s";
  a.body = "b";
  a.sender = "x@x";
  a.recipient = "y@y";
  a.replied = true;
  a.reply_from_mobile = true;
  corpus.push_back(a);
  RawMessage b;
  b.id = "b";
  b.body = "hello";
  corpus.push_back(b);

  write_corpus_jsonl("corpus_roundtrip.jsonl", corpus);
  auto back = read_corpus_jsonl("corpus_roundtrip.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].reply_from_mobile);
  CHECK_FALSE(back[1].replied);

  std::istringstream dup(R"({"id":"x"}
{"id":"x"})");
  CHECK_THROWS_AS(read_corpus_jsonl(dup), Error);

  std::istringstream bad_flags(R"({"id":"x","reply_from_mobile":true})");
  CHECK_THROWS_AS(read_corpus_jsonl(bad_flags), Error);
}

TEST_CASE("link_reply_pairs uses sender/recipient swap in file order") {
  auto msg = [](const char* id, const char* from, const char* to,
                bool replied) {
    RawMessage m;
    m.id = id;
    m.sender = from;
    m.recipient = to;
    m.replied = replied;
    m.body = "x";
    return m;
  };
  std::vector<RawMessage> corpus = {
      msg("1", "a", "b", true),
      msg("2", "c", "d", false),
      msg("3", "b", "a", false),  // reply to 1
      msg("4", "a", "b", true),
      msg("5", "b", "a", false),  // reply to 4
  };
  auto links = link_reply_pairs(corpus);
  REQUIRE(links.size() == 2);
  CHECK(links[0].original_index == 0);
  CHECK(links[0].response_index == 2);
  CHECK(links[1].original_index == 3);
  CHECK(links[1].response_index == 4);
}

TEST_CASE("ingest_corpus produces normalized pairs and a vocabulary") {
  auto msg = [](const char* id, const char* from, const char* to, bool replied,
                const char* body) {
    RawMessage m;
    m.id = id;
    m.sender = from;
    m.recipient = to;
    m.replied = replied;
    m.body = body;
    return m;
  };
  std::vector<RawMessage> corpus = {
      msg("1", "a@x", "b@x", true, "Can you be there at the meeting?"),
      msg("1r", "b@x", "a@x", false, "Yes I can be there."),
      msg("2", "a@x", "b@x", true, "Will you see it and let me know?"),
      msg("2r", "b@x", "a@x", false, "I will see it."),
  };
  IngestOptions opts;
  opts.vocab_size = 100;
  IngestOutput out = ingest_corpus(corpus, opts);
  REQUIRE(out.pairs.size() == 2);
  CHECK(out.pairs[0].original_text == "can you be there at the meeting ?");
  CHECK(out.pairs[0].response_text == "yes i can be there .");
  CHECK(out.pairs[1].response_text == "i will see it .");

  auto tokenized = tokenize_pairs(out.pairs, out.vocab);
  REQUIRE(tokenized.size() == 2);
  CHECK(tokenized[0].response_ids.size() == 6);
  for (TokenId id : tokenized[0].response_ids) {
    CHECK(id != out.vocab.specials().unk);
  }
}
