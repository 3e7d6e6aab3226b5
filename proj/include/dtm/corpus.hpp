#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtm/sparse.hpp"

namespace dtm {

struct TokenizerConfig {
  std::size_t min_length = 2;
  std::size_t min_df = 2;
  /// Empty means the built-in English list.
  std::optional<std::filesystem::path> stopwords_path;
  /// Drop everything up to the first blank line (mail/news headers). Files
  /// without a blank line are kept whole.
  bool strip_headers = false;
  // Hooks only; no implementation ships.
  bool stemming = false;
  std::size_t ngram_max = 1;
};

/// Raw term-frequency corpus. counts is v × N; column d is document d.
struct Corpus {
  std::vector<std::string> vocabulary;
  SparseMatrix counts;
  std::optional<std::vector<std::uint32_t>> labels;
  /// Name of each label id; empty when labels are absent.
  std::vector<std::string> label_names;
  std::vector<std::string> doc_ids;
  /// Document-frequency floor applied when a sub-corpus is re-pruned.
  std::size_t min_df = 1;
  /// Files that could not be read during ingestion.
  std::vector<std::string> warnings;

  std::size_t num_docs() const noexcept { return counts.cols(); }
  std::size_t vocab_size() const noexcept { return counts.rows(); }
  std::size_t num_labels() const noexcept { return label_names.size(); }

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct TfidfMatrix {
  SparseMatrix matrix;  // v × N
  std::vector<double> idf;
  bool normalized = true;
};

/// UCI bag-of-words: docword has three header lines (N, v, nnz) followed by
/// 1-based `docID wordID count` triples; vocab has one word per line.
Corpus ingest_uci_bow(const std::filesystem::path& docword_path,
                      const std::filesystem::path& vocab_path);

/// Directory of label subdirectories containing plain-text files.
Corpus ingest_text_dir(const std::filesystem::path& root, const TokenizerConfig& config = {});

/// Lowercased ASCII-letter runs of at least `min_length` characters, minus stopwords.
std::vector<std::string> tokenize(std::string_view text, std::size_t min_length,
                                  const std::vector<std::string>& sorted_stopwords);

/// The built-in English stopword list, sorted.
const std::vector<std::string>& default_stopwords();

/// tf(w,d) · ln(N / df(w)), then unit L2 norm per nonzero column.
TfidfMatrix tfidf(const Corpus& corpus, bool normalize = true);

/// Documents whose gold label is among `c` labels drawn without replacement.
/// Labels are re-indexed 0..c-1 in draw order and the vocabulary is re-pruned
/// to words with df >= corpus.min_df inside the subset.
Corpus subsample_topics(const Corpus& corpus, std::size_t c, std::uint64_t seed);

/// Keeps only words whose document frequency is at least min_df.
Corpus prune_vocabulary(const Corpus& corpus, std::size_t min_df);

// Persisted form: counts.mtx, vocab.txt, labels.txt, docs.txt, manifest.txt.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                 const TokenizerConfig* tokenizer = nullptr);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace dtm
