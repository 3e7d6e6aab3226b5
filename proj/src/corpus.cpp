#include "dtm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dtm/error.hpp"
#include "dtm/keyvalue.hpp"

namespace dtm {

namespace fs = std::filesystem;

void Corpus::validate() const {
  if (vocabulary.size() != counts.rows()) {
    throw std::invalid_argument("vocabulary has " + std::to_string(vocabulary.size()) +
                                " words but counts has " + std::to_string(counts.rows()) + " rows");
  }
  std::set<std::string_view> seen;
  for (const auto& w : vocabulary) {
    if (w.empty()) throw std::invalid_argument("empty vocabulary entry");
    if (!seen.insert(w).second) throw std::invalid_argument("duplicate vocabulary entry '" + w + "'");
  }
  for (double v : counts.values()) {
    if (v < 0.0 || v != std::floor(v)) throw std::invalid_argument("counts must be nonnegative integers");
  }
  if (doc_ids.size() != counts.cols()) throw std::invalid_argument("doc_ids length differs from N");
  if (labels) {
    if (labels->size() != counts.cols()) throw std::invalid_argument("labels length differs from N");
    std::vector<bool> used(label_names.size(), false);
    for (auto l : *labels) {
      if (l >= label_names.size()) throw std::invalid_argument("label id out of range");
      used[l] = true;
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
      throw std::invalid_argument("label ids are not contiguous from 0");
    }
  }
}

// ---------------------------------------------------------------------------
// UCI bag-of-words

Corpus ingest_uci_bow(const fs::path& docword_path, const fs::path& vocab_path) {
  std::ifstream in(docword_path);
  if (!in) throw InputError("cannot open " + docword_path.string());
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> InputError {
    return InputError(docword_path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string line;
  std::size_t header[3];
  for (auto& h : header) {
    if (!std::getline(in, line)) throw fail("missing header line");
    ++line_no;
    std::istringstream ss(line);
    std::string extra;
    if (!(ss >> h) || (ss >> extra)) throw fail("malformed header line");
  }
  const auto [n_docs, n_words, nnz] = header;

  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long long doc = 0, word = 0;
    double count = 0;
    std::string extra;
    if (!(ss >> doc >> word >> count) || (ss >> extra)) throw fail("malformed triple");
    if (doc < 1 || static_cast<std::size_t>(doc) > n_docs) {
      throw fail("docID " + std::to_string(doc) + " outside 1.." + std::to_string(n_docs));
    }
    if (word < 1 || static_cast<std::size_t>(word) > n_words) {
      throw fail("wordID " + std::to_string(word) + " outside 1.." + std::to_string(n_words));
    }
    if (count < 0 || count != std::floor(count)) throw fail("count must be a nonnegative integer");
    triplets.push_back({static_cast<Index>(word - 1), static_cast<Index>(doc - 1), count});
  }
  if (triplets.size() != nnz) {
    throw fail("declared " + std::to_string(nnz) + " triples, found " + std::to_string(triplets.size()));
  }

  Corpus corpus;
  try {
    corpus.counts = SparseMatrix::from_triplets(n_words, n_docs, std::move(triplets));
  } catch (const std::invalid_argument& e) {
    throw InputError(docword_path.string() + ": " + e.what());
  }

  std::ifstream vin(vocab_path);
  if (!vin) throw InputError("cannot open " + vocab_path.string());
  while (std::getline(vin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    corpus.vocabulary.push_back(line);
  }
  if (corpus.vocabulary.size() != n_words) {
    throw InputError(vocab_path.string() + ": expected " + std::to_string(n_words) + " words, found " +
                     std::to_string(corpus.vocabulary.size()));
  }
  corpus.doc_ids.reserve(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) corpus.doc_ids.push_back(std::to_string(d + 1));
  try {
    corpus.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(vocab_path.string() + ": " + e.what());
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Raw text directories

std::vector<std::string> tokenize(std::string_view text, std::size_t min_length,
                                  const std::vector<std::string>& sorted_stopwords) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= min_length &&
        !std::binary_search(sorted_stopwords.begin(), sorted_stopwords.end(), cur)) {
      tokens.push_back(cur);
    }
    cur.clear();
  };
  for (char ch : text) {
    if (ch >= 'A' && ch <= 'Z') {
      cur.push_back(static_cast<char>(ch - 'A' + 'a'));
    } else if (ch >= 'a' && ch <= 'z') {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      flush();
    }
  }
  if (!cur.empty()) flush();
  return tokens;
}

namespace {

std::vector<std::string> load_stopwords(const TokenizerConfig& config) {
  if (!config.stopwords_path) return default_stopwords();
  std::ifstream in(*config.stopwords_path);
  if (!in) throw InputError("cannot open stopword list " + config.stopwords_path->string());
  std::vector<std::string> words;
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    words.push_back(w);
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

std::string_view body_of(std::string_view text, bool strip_headers) {
  if (!strip_headers) return text;
  for (std::string_view sep : {"\n\n", "\r\n\r\n"}) {
    auto pos = text.find(sep);
    if (pos != std::string_view::npos) return text.substr(pos + sep.size());
  }
  return text;  // no header block
}

}  // namespace

Corpus ingest_text_dir(const fs::path& root, const TokenizerConfig& config) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw InputError("not a directory: " + root.string());
  if (config.stemming || config.ngram_max > 1) {
    throw InputError("stemming and n-grams are not supported by this tokenizer");
  }
  const auto stopwords = load_stopwords(config);

  std::vector<fs::path> label_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) label_dirs.push_back(entry.path());
  }
  std::sort(label_dirs.begin(), label_dirs.end());

  Corpus corpus;
  corpus.min_df = config.min_df;
  std::vector<std::uint32_t> labels;
  std::vector<std::map<std::string, double>> doc_counts;
  for (const auto& dir : label_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    const auto label = static_cast<std::uint32_t>(corpus.label_names.size());
    corpus.label_names.push_back(dir.filename().string());
    for (const auto& file : files) {
      const std::string doc_id = fs::relative(file, root).generic_string();
      std::ifstream in(file, std::ios::binary);
      std::stringstream ss;
      if (in) ss << in.rdbuf();
      if (!in || in.bad()) {
        corpus.warnings.push_back("unreadable file skipped: " + doc_id);
        continue;
      }
      std::map<std::string, double> bag;
      for (auto& tok : tokenize(body_of(ss.str(), config.strip_headers), config.min_length, stopwords)) {
        bag[std::move(tok)] += 1.0;
      }
      if (bag.empty()) corpus.warnings.push_back("document has no tokens: " + doc_id);
      doc_counts.push_back(std::move(bag));
      labels.push_back(label);
      corpus.doc_ids.push_back(doc_id);
    }
  }
  if (doc_counts.empty()) throw InputError("empty corpus: no documents under " + root.string());

  std::map<std::string, std::size_t> df;
  for (const auto& bag : doc_counts)
    for (const auto& [w, n] : bag) ++df[w];
  std::unordered_map<std::string, Index> word_index;
  for (const auto& [w, f] : df) {
    if (f >= config.min_df) {
      word_index.emplace(w, static_cast<Index>(corpus.vocabulary.size()));
      corpus.vocabulary.push_back(w);
    }
  }
  if (corpus.vocabulary.empty()) {
    throw InputError("empty corpus: no word under " + root.string() + " reaches min_df=" +
                     std::to_string(config.min_df));
  }

  std::vector<Triplet> triplets;
  for (std::size_t d = 0; d < doc_counts.size(); ++d) {
    for (const auto& [w, n] : doc_counts[d]) {
      auto it = word_index.find(w);
      if (it != word_index.end()) triplets.push_back({it->second, static_cast<Index>(d), n});
    }
  }
  corpus.counts = SparseMatrix::from_triplets(corpus.vocabulary.size(), doc_counts.size(),
                                              std::move(triplets));
  corpus.labels = std::move(labels);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
  return corpus;
}

// ---------------------------------------------------------------------------
// TF-IDF

TfidfMatrix tfidf(const Corpus& corpus, bool normalize) {
  const std::size_t n = corpus.num_docs();
  if (n == 0) throw std::invalid_argument("tfidf: empty corpus");
  const auto& counts = corpus.counts;

  std::vector<std::size_t> df(counts.rows(), 0);
  for (std::size_t p = 0; p < counts.nnz(); ++p) {
    if (counts.values()[p] > 0.0) ++df[counts.row_idx()[p]];
  }
  TfidfMatrix out;
  out.normalized = normalize;
  out.idf.resize(counts.rows(), 0.0);
  for (std::size_t w = 0; w < df.size(); ++w) {
    if (df[w] > 0) out.idf[w] = std::log(static_cast<double>(n) / static_cast<double>(df[w]));
  }

  std::vector<std::size_t> ptr(n + 1, 0);
  std::vector<Index> idx;
  std::vector<double> val;
  idx.reserve(counts.nnz());
  val.reserve(counts.nnz());
  for (std::size_t d = 0; d < n; ++d) {
    auto rows = counts.col_indices(d);
    auto tf = counts.col_values(d);
    const std::size_t start = val.size();
    double sq = 0.0;
    for (std::size_t p = 0; p < rows.size(); ++p) {
      const double x = tf[p] * out.idf[rows[p]];
      if (x == 0.0) continue;
      idx.push_back(rows[p]);
      val.push_back(x);
      sq += x * x;
    }
    if (normalize && sq > 0.0) {
      const double norm = std::sqrt(sq);
      for (std::size_t p = start; p < val.size(); ++p) val[p] /= norm;
    }
    ptr[d + 1] = val.size();
  }
  out.matrix = SparseMatrix::from_csc(counts.rows(), n, std::move(ptr), std::move(idx), std::move(val));
  return out;
}

// ---------------------------------------------------------------------------
// Topic subsampling

Corpus prune_vocabulary(const Corpus& corpus, std::size_t min_df) {
  std::vector<std::size_t> df(corpus.vocab_size(), 0);
  for (std::size_t p = 0; p < corpus.counts.nnz(); ++p) {
    if (corpus.counts.values()[p] > 0.0) ++df[corpus.counts.row_idx()[p]];
  }
  std::vector<std::size_t> keep;
  for (std::size_t w = 0; w < df.size(); ++w)
    if (df[w] >= min_df) keep.push_back(w);

  Corpus out = corpus;
  out.counts = corpus.counts.select_rows(keep);
  out.vocabulary.clear();
  for (auto w : keep) out.vocabulary.push_back(corpus.vocabulary[w]);
  return out;
}

Corpus subsample_topics(const Corpus& corpus, std::size_t c, std::uint64_t seed) {
  if (!corpus.labels) throw InputError("subsample_topics: corpus has no gold labels");
  const std::size_t total = corpus.num_labels();
  if (c == 0 || c > total) {
    throw InputError("subsample_topics: cannot draw " + std::to_string(c) + " topics from " +
                     std::to_string(total));
  }
  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < c; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  constexpr auto kUnused = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> relabel(total, kUnused);
  Corpus sub;
  for (std::size_t i = 0; i < c; ++i) {
    relabel[order[i]] = static_cast<std::uint32_t>(i);
    sub.label_names.push_back(corpus.label_names[order[i]]);
  }

  std::vector<std::size_t> docs;
  std::vector<std::uint32_t> labels;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    const auto l = relabel[(*corpus.labels)[d]];
    if (l == kUnused) continue;
    docs.push_back(d);
    labels.push_back(l);
    sub.doc_ids.push_back(corpus.doc_ids[d]);
  }
  sub.counts = corpus.counts.select_cols(docs);
  sub.vocabulary = corpus.vocabulary;
  sub.labels = std::move(labels);
  sub.min_df = corpus.min_df;
  return prune_vocabulary(sub, corpus.min_df);
}

// ---------------------------------------------------------------------------
// Persistence

void save_corpus(const Corpus& corpus, const fs::path& dir, const TokenizerConfig* tokenizer) {
  fs::create_directories(dir);
  write_matrix_market(dir / "counts.mtx", corpus.counts);
  {
    std::ofstream out(dir / "vocab.txt");
    for (const auto& w : corpus.vocabulary) out << w << '\n';
  }
  {
    std::ofstream out(dir / "docs.txt");
    for (const auto& d : corpus.doc_ids) out << d << '\n';
  }
  if (corpus.labels) {
    std::ofstream out(dir / "labels.txt");
    for (auto l : *corpus.labels) out << l << '\n';
  }
  KeyValues m;
  m.set("N", corpus.num_docs());
  m.set("v", corpus.vocab_size());
  m.set("has_labels", corpus.labels.has_value());
  m.set("num_labels", corpus.num_labels());
  for (std::size_t i = 0; i < corpus.label_names.size(); ++i) {
    m.set("label." + std::to_string(i), corpus.label_names[i]);
  }
  m.set("min_df", corpus.min_df);
  if (tokenizer) {
    m.set("tokenizer.min_length", tokenizer->min_length);
    m.set("tokenizer.min_df", tokenizer->min_df);
    m.set("tokenizer.stopwords",
          tokenizer->stopwords_path ? tokenizer->stopwords_path->string() : std::string("builtin-en"));
    m.set("tokenizer.strip_headers", tokenizer->strip_headers);
  }
  m.write(dir / "manifest.txt");
}

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InputError("invalid " + what + ": '" + s + "'");
  }
}

}  // namespace

Corpus load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("corpus directory not found: " + dir.string());
  const auto m = KeyValues::read(dir / "manifest.txt");
  Corpus corpus;
  corpus.counts = read_matrix_market_sparse(dir / "counts.mtx");
  corpus.vocabulary = read_lines(dir / "vocab.txt");
  corpus.doc_ids = read_lines(dir / "docs.txt");
  corpus.min_df = parse_count(m.get("min_df").value_or("1"), "min_df");
  if (m.get("has_labels").value_or("false") == "true") {
    const auto n_labels = parse_count(m.require("num_labels"), "num_labels");
    for (std::size_t i = 0; i < n_labels; ++i) {
      corpus.label_names.push_back(m.require("label." + std::to_string(i)));
    }
    std::vector<std::uint32_t> labels;
    for (const auto& l : read_lines(dir / "labels.txt")) {
      labels.push_back(static_cast<std::uint32_t>(parse_count(l, "label")));
    }
    corpus.labels = std::move(labels);
  }
  if (parse_count(m.require("N"), "N") != corpus.num_docs() ||
      parse_count(m.require("v"), "v") != corpus.vocab_size()) {
    throw InputError(dir.string() + ": manifest shape disagrees with counts.mtx");
  }
  try {
    corpus.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(dir.string() + ": " + e.what());
  }
  return corpus;
}

}  // namespace dtm
