#include "hydroie/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>

namespace hydroie {

namespace {

// Length in bytes of a whitespace code point starting at `i`, or 0.
std::size_t whitespace_len(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return 1;
  if (c < 0x80) return 0;
  auto at = [&](std::size_t k) -> unsigned {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  // U+0085, U+00A0
  if (c == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
  // U+1680
  if (c == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
  if (c == 0xE2 && at(1) == 0x80) {
    const auto t = at(2);
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if ((t >= 0x80 && t <= 0x8A) || t == 0xA8 || t == 0xA9 || t == 0xAF) return 3;
  }
  // U+205F
  if (c == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;
  // U+3000
  if (c == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
  return 0;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

void ChunkingParams::validate() const {
  if (chunk_size_words < 1) throw ConfigError("chunk_size_words must be at least 1");
  if (chunk_size_words <= overlap_words) {
    throw ConfigError("chunk_size_words (" + std::to_string(chunk_size_words) + ") must exceed overlap_words (" +
                      std::to_string(overlap_words) + ")");
  }
}

const DocumentChunk* Corpus::find_chunk(std::string_view chunk_id) const {
  for (const auto& c : chunks) {
    if (c.chunk_id == chunk_id) return &c;
  }
  return nullptr;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < text.size()) {
    const auto ws = whitespace_len(text, i);
    if (ws > 0) {
      if (start != std::string_view::npos) {
        words.emplace_back(text.substr(start, i - start));
        start = std::string_view::npos;
      }
      i += ws;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) words.emplace_back(text.substr(start));
  return words;
}

std::string make_chunk_id(std::string_view doc_id, std::size_t index) {
  return std::string(doc_id) + "#" + std::to_string(index);
}

std::vector<DocumentChunk> chunk_document(const SourceDocument& doc, const ChunkingParams& params) {
  params.validate();
  const auto words = tokenize_words(doc.text);
  const auto n = words.size();
  const auto stride = params.stride();
  std::vector<DocumentChunk> chunks;
  for (std::size_t i = 0, start = 0; start < n; ++i, start += stride) {
    DocumentChunk c;
    c.doc_id = doc.doc_id;
    c.index = i;
    c.chunk_id = make_chunk_id(doc.doc_id, i);
    c.start_word = start;
    c.end_word = std::min(start + params.chunk_size_words, n);
    c.text = join_words(words, c.start_word, c.end_word);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

SourceDocument make_document(std::string doc_id, std::string text, std::string path) {
  SourceDocument d;
  d.doc_id = std::move(doc_id);
  d.path = std::move(path);
  d.word_count = tokenize_words(text).size();
  d.text = std::move(text);
  return d;
}

Corpus build_corpus(std::vector<SourceDocument> documents, const ChunkingParams& params) {
  params.validate();
  std::stable_sort(documents.begin(), documents.end(),
                   [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  Corpus corpus;
  corpus.params = params;
  std::set<std::string> seen;
  for (auto& doc : documents) {
    if (!seen.insert(doc.doc_id).second) throw InputError("duplicate doc_id: " + doc.doc_id);
    if (doc.word_count == 0) corpus.warnings.push_back("document '" + doc.doc_id + "' is empty; no chunks");
    auto chunks = chunk_document(doc, params);
    corpus.chunks.insert(corpus.chunks.end(), std::make_move_iterator(chunks.begin()),
                         std::make_move_iterator(chunks.end()));
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::vector<std::filesystem::path>& paths, const ChunkingParams& params) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());

  std::vector<SourceDocument> docs;
  for (const auto& f : files) {
    auto text = read_file(f);
    if (!is_valid_utf8(text)) throw InputError("file is not valid UTF-8: " + f.string());
    docs.push_back(make_document(f.stem().string(), std::move(text), f.generic_string()));
  }
  return build_corpus(std::move(docs), params);
}

json corpus_to_json(const Corpus& corpus) {
  json docs = json::array();
  for (const auto& d : corpus.documents) {
    docs.push_back({{"doc_id", d.doc_id}, {"path", d.path}, {"word_count", d.word_count}});
  }
  json chunks = json::array();
  for (const auto& c : corpus.chunks) {
    chunks.push_back({{"chunk_id", c.chunk_id},
                      {"doc_id", c.doc_id},
                      {"index", c.index},
                      {"start_word", c.start_word},
                      {"end_word", c.end_word},
                      {"text", c.text}});
  }
  return {{"format_version", 1},
          {"chunk_size_words", corpus.params.chunk_size_words},
          {"overlap_words", corpus.params.overlap_words},
          {"documents", std::move(docs)},
          {"chunks", std::move(chunks)},
          {"warnings", corpus.warnings}};
}

Corpus corpus_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) throw InputError("unsupported corpus manifest format_version");
    Corpus corpus;
    corpus.params.chunk_size_words = j.at("chunk_size_words").get<std::size_t>();
    corpus.params.overlap_words = j.at("overlap_words").get<std::size_t>();
    std::set<std::string> ids;
    for (const auto& d : j.at("documents")) {
      SourceDocument doc;
      doc.doc_id = d.at("doc_id").get<std::string>();
      doc.path = d.value("path", "");
      doc.word_count = d.at("word_count").get<std::size_t>();
      ids.insert(doc.doc_id);
      corpus.documents.push_back(std::move(doc));
    }
    for (const auto& c : j.at("chunks")) {
      DocumentChunk chunk;
      chunk.chunk_id = c.at("chunk_id").get<std::string>();
      chunk.doc_id = c.at("doc_id").get<std::string>();
      chunk.index = c.at("index").get<std::size_t>();
      chunk.start_word = c.at("start_word").get<std::size_t>();
      chunk.end_word = c.at("end_word").get<std::size_t>();
      chunk.text = c.at("text").get<std::string>();
      if (!ids.contains(chunk.doc_id)) throw InputError("chunk references unknown document: " + chunk.doc_id);
      corpus.chunks.push_back(std::move(chunk));
    }
    if (j.contains("warnings")) corpus.warnings = j.at("warnings").get<std::vector<std::string>>();
    return corpus;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed corpus manifest: ") + e.what());
  }
}

}  // namespace hydroie
