#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "hydroie/corpus.hpp"
#include "support.hpp"

using namespace hydroie;
using hydroie::testing::synthetic_text;
using hydroie::testing::TempDir;

namespace {

// Windows of `size` starting at every multiple of `stride` below the word
// count, derived by sliding over the word list one position at a time.
std::vector<std::pair<std::size_t, std::size_t>> sliding_oracle(std::size_t words, std::size_t size,
                                                                 std::size_t overlap) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t stride = size - overlap;
  std::size_t next_start = 0;
  for (std::size_t pos = 0; pos < words; ++pos) {
    if (pos != next_start) continue;
    std::size_t end = pos;
    while (end < words && end - pos < size) ++end;
    out.emplace_back(pos, end);
    next_start += stride;
  }
  return out;
}

std::vector<std::string> split_count_oracle(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

void write(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(Tokenize, CollapsesWhitespaceRuns) {
  EXPECT_EQ(tokenize_words("a  b\nc"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(tokenize_words("").empty());
  EXPECT_TRUE(tokenize_words(" \t\n ").empty());
}

TEST(Tokenize, MatchesSplitOracleOnSyntheticText) {
  const auto text = synthetic_text(1000, 3);
  EXPECT_EQ(tokenize_words(text).size(), 1000u);
  EXPECT_EQ(tokenize_words(text), split_count_oracle(text));
}

TEST(Tokenize, UnicodeSpacesSeparateWords) {
  // NBSP, ideographic space, line separator.
  EXPECT_EQ(tokenize_words("a\xC2\xA0" "b\xE3\x80\x80" "c\xE2\x80\xA8" "d"), (std::vector<std::string>{"a", "b", "c", "d"}));
  // Non-space multibyte characters stay inside words.
  EXPECT_EQ(tokenize_words("café °F"), (std::vector<std::string>{"café", "°F"}));
}

TEST(Chunking, RejectsDegenerateParameters) {
  EXPECT_THROW((ChunkingParams{200, 200}.validate()), ConfigError);
  EXPECT_THROW((ChunkingParams{100, 300}.validate()), ConfigError);
  EXPECT_THROW((ChunkingParams{0, 0}.validate()), ConfigError);
  EXPECT_NO_THROW((ChunkingParams{1, 0}.validate()));
  const auto doc = make_document("d", synthetic_text(10));
  EXPECT_THROW(chunk_document(doc, {5, 5}), ConfigError);
}

TEST(Chunking, ShortDocumentIsOneChunk) {
  const auto doc = make_document("d", synthetic_text(500));
  const auto chunks = chunk_document(doc);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].start_word, 0u);
  EXPECT_EQ(chunks[0].end_word, 500u);
  EXPECT_EQ(chunks[0].chunk_id, "d#0");
}

TEST(Chunking, NamedWordCounts) {
  const auto starts = [](std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& c : chunk_document(make_document("d", synthetic_text(n)))) out.emplace_back(c.start_word, c.end_word);
    return out;
  };
  using V = std::vector<std::pair<std::size_t, std::size_t>>;
  EXPECT_EQ(starts(2600), (V{{0, 1000}, {800, 1800}, {1600, 2600}, {2400, 2600}}));
  EXPECT_EQ(starts(1001), (V{{0, 1000}, {800, 1001}}));
  EXPECT_TRUE(starts(0).empty());
}

TEST(Chunking, MatchesSlidingOracleForEveryLengthUpTo5000) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < 5000; ++i) words.push_back("w" + std::to_string(i));
  std::string text;
  for (std::size_t n = 1; n <= 5000; ++n) {
    if (n > 1) text += ' ';
    text += words[n - 1];
    SourceDocument doc{"d", "", text, n};
    const auto chunks = chunk_document(doc);
    const auto expected = sliding_oracle(n, 1000, 200);
    ASSERT_EQ(chunks.size(), expected.size()) << "n=" << n;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      ASSERT_EQ(chunks[i].start_word, expected[i].first) << "n=" << n;
      ASSERT_EQ(chunks[i].end_word, expected[i].second) << "n=" << n;
    }
  }
}

TEST(Chunking, CoverageOverlapAndTextReconstruction) {
  for (std::size_t n : {1u, 199u, 999u, 1000u, 1001u, 1800u, 2599u, 2600u, 4321u}) {
    for (const ChunkingParams p : {ChunkingParams{}, ChunkingParams{7, 3}, ChunkingParams{50, 0}}) {
      const auto doc = make_document("d", synthetic_text(n, static_cast<unsigned>(n)));
      const auto words = split_count_oracle(doc.text);
      const auto chunks = chunk_document(doc, p);
      std::vector<bool> covered(n, false);
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto& c = chunks[i];
        EXPECT_LE(c.end_word - c.start_word, p.chunk_size_words);
        EXPECT_EQ(c.index, i);
        std::string expect;
        for (std::size_t w = c.start_word; w < c.end_word; ++w) {
          covered[w] = true;
          expect += (w == c.start_word ? "" : " ") + words[w];
        }
        EXPECT_EQ(c.text, expect);
        if (i + 1 < chunks.size()) {
          EXPECT_EQ(chunks[i + 1].start_word, c.start_word + p.stride());
          if (c.end_word - c.start_word == p.chunk_size_words && p.overlap_words > 0) {
            const auto a = tokenize_words(c.text);
            const auto b = tokenize_words(chunks[i + 1].text);
            const auto k = std::min<std::size_t>(p.overlap_words, b.size());
            EXPECT_TRUE(std::equal(a.end() - static_cast<long>(p.overlap_words),
                                   a.end() - static_cast<long>(p.overlap_words) + static_cast<long>(k), b.begin()));
          }
        }
      }
      EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) << "n=" << n;
    }
  }
}

TEST(Corpus, LoadsDirectorySortedByPath) {
  TempDir dir;
  write(dir / "b.txt", synthetic_text(500));
  write(dir / "a.txt", synthetic_text(500, 9));
  write(dir / "notes.md", "ignored");
  const auto corpus = load_corpus({dir.path()});
  ASSERT_EQ(corpus.documents.size(), 2u);
  EXPECT_EQ(corpus.documents[0].doc_id, "a");
  EXPECT_EQ(corpus.documents[1].doc_id, "b");
  ASSERT_EQ(corpus.chunks.size(), 2u);
  EXPECT_EQ(corpus.chunks[0].chunk_id, "a#0");
  EXPECT_NE(corpus.find_chunk("b#0"), nullptr);
  EXPECT_EQ(corpus.find_chunk("c#0"), nullptr);
}

TEST(Corpus, LongFileYieldsFourChunks) {
  TempDir dir;
  write(dir / "long.txt", synthetic_text(2600));
  EXPECT_EQ(load_corpus({dir / "long.txt"}).chunks.size(), 4u);
}

TEST(Corpus, EmptyFileWarns) {
  TempDir dir;
  write(dir / "empty.txt", "");
  const auto corpus = load_corpus({dir / "empty.txt"});
  ASSERT_EQ(corpus.documents.size(), 1u);
  EXPECT_EQ(corpus.documents[0].word_count, 0u);
  EXPECT_TRUE(corpus.chunks.empty());
  ASSERT_EQ(corpus.warnings.size(), 1u);
  EXPECT_NE(corpus.warnings[0].find("empty"), std::string::npos);
}

TEST(Corpus, ErrorsNameTheFile) {
  TempDir dir;
  try {
    load_corpus({dir / "missing.txt"});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.txt"), std::string::npos);
  }
  write(dir / "bad.txt", std::string("ok \xC3\x28 bad"));
  EXPECT_THROW(load_corpus({dir / "bad.txt"}), InputError);
}

TEST(Corpus, DuplicateDocIdsRejected) {
  std::vector<SourceDocument> docs = {make_document("x", "a b"), make_document("x", "c d")};
  EXPECT_THROW(build_corpus(docs), InputError);
}

TEST(Corpus, JsonRoundTripIsDeterministic) {
  const auto corpus = build_corpus({make_document("b", synthetic_text(1200)), make_document("a", "one two")});
  const auto text = dump_pretty(corpus_to_json(corpus));
  const auto back = corpus_from_json(json::parse(text));
  EXPECT_EQ(back.chunks, corpus.chunks);
  EXPECT_EQ(dump_pretty(corpus_to_json(back)), text);
  EXPECT_EQ(json::parse(text).at("format_version"), 1);
  EXPECT_EQ(back.chunks.front().doc_id, "a");
}
