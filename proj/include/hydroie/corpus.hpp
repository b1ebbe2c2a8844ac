#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hydroie/util.hpp"

namespace hydroie {

struct ChunkingParams {
  std::size_t chunk_size_words = 1000;
  std::size_t overlap_words = 200;

  std::size_t stride() const { return chunk_size_words - overlap_words; }
  // Throws ConfigError unless chunk_size_words > overlap_words.
  void validate() const;
};

struct SourceDocument {
  std::string doc_id;
  std::string path;
  std::string text;
  std::size_t word_count = 0;
};

struct DocumentChunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t index = 0;
  std::size_t start_word = 0;
  std::size_t end_word = 0;  // exclusive
  std::string text;

  bool operator==(const DocumentChunk&) const = default;
};

struct Corpus {
  ChunkingParams params;
  std::vector<SourceDocument> documents;
  std::vector<DocumentChunk> chunks;  // ordered by (doc_id, index)
  std::vector<std::string> warnings;

  const DocumentChunk* find_chunk(std::string_view chunk_id) const;
};

// Splits on runs of Unicode whitespace. Input is assumed to be UTF-8;
// invalid bytes are treated as word characters.
std::vector<std::string> tokenize_words(std::string_view text);

std::string make_chunk_id(std::string_view doc_id, std::size_t index);

// Window i covers words [i*stride, min(i*stride + size, word_count)) for every
// i with i*stride < word_count.
std::vector<DocumentChunk> chunk_document(const SourceDocument& doc, const ChunkingParams& params = {});

SourceDocument make_document(std::string doc_id, std::string text, std::string path = {});

// One document per file (doc_id = file stem), ordered by path. Directories
// are expanded to the *.txt files they contain.
Corpus load_corpus(const std::vector<std::filesystem::path>& paths, const ChunkingParams& params = {});

// Builds a corpus from in-memory documents; documents are sorted by doc_id.
Corpus build_corpus(std::vector<SourceDocument> documents, const ChunkingParams& params = {});

// Corpus manifest (format_version 1).
json corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const json& j);

}  // namespace hydroie
