#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "dtm/error.hpp"
#include "dtm/sparse.hpp"

namespace dtm {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  return out;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

struct Header {
  std::string format;    // coordinate | array
  std::string field;     // real | integer | pattern
  std::string symmetry;  // general | symmetric
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw InputError("cannot open " + path.string());
  }

  Header header() {
    std::string line;
    if (!std::getline(in_, line)) fail("empty file");
    ++line_no_;
    std::istringstream ss(line);
    std::string banner, object;
    Header h;
    ss >> banner >> object >> h.format >> h.field >> h.symmetry;
    if (banner != "%%MatrixMarket" || lower(object) != "matrix") fail("missing %%MatrixMarket banner");
    h.format = lower(h.format);
    h.field = lower(h.field);
    h.symmetry = lower(h.symmetry);
    if (h.format != "coordinate" && h.format != "array") fail("unsupported format " + h.format);
    if (h.field != "real" && h.field != "integer" && h.field != "double" && h.field != "pattern") {
      fail("unsupported field " + h.field);
    }
    if (h.symmetry != "general" && h.symmetry != "symmetric") {
      fail("unsupported symmetry " + h.symmetry);
    }
    return h;
  }

  // Next non-comment, non-blank line.
  bool next(std::istringstream& ss) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '%') continue;
      ss = std::istringstream(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (std::size_t c = 0; c < m.cols(); ++c) {
    auto idx = m.col_indices(c);
    auto val = m.col_values(c);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      out << (idx[p] + 1) << ' ' << (c + 1) << ' ' << format_real(val[p]) << '\n';
    }
  }
  if (!out) throw InputError("write failed for " + path.string());
}

void write_matrix_market(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) out << format_real(m(r, c)) << '\n';
  if (!out) throw InputError("write failed for " + path.string());
}

SparseMatrix read_matrix_market_sparse(const std::filesystem::path& path) {
  Reader reader(path);
  const Header h = reader.header();
  if (h.format != "coordinate") reader.fail("expected coordinate format");
  std::istringstream ss;
  if (!reader.next(ss)) reader.fail("missing size line");
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(ss >> rows >> cols >> nnz)) reader.fail("malformed size line");
  std::vector<Triplet> triplets;
  triplets.reserve(h.symmetry == "symmetric" ? 2 * nnz : nnz);
  for (std::size_t e = 0; e < nnz; ++e) {
    if (!reader.next(ss)) reader.fail("expected " + std::to_string(nnz) + " entries");
    std::size_t r = 0, c = 0;
    double v = 1.0;
    if (!(ss >> r >> c)) reader.fail("malformed entry");
    if (h.field != "pattern" && !(ss >> v)) reader.fail("malformed value");
    if (r == 0 || c == 0 || r > rows || c > cols) reader.fail("index out of bounds");
    triplets.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), v});
    if (h.symmetry == "symmetric" && r != c) {
      triplets.push_back({static_cast<Index>(c - 1), static_cast<Index>(r - 1), v});
    }
  }
  try {
    return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
  } catch (const std::invalid_argument& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

DenseMatrix read_matrix_market_dense(const std::filesystem::path& path) {
  Reader reader(path);
  const Header h = reader.header();
  if (h.format != "array") reader.fail("expected array format");
  if (h.field == "pattern") reader.fail("pattern field is invalid for array format");
  std::istringstream ss;
  if (!reader.next(ss)) reader.fail("missing size line");
  std::size_t rows = 0, cols = 0;
  if (!(ss >> rows >> cols)) reader.fail("malformed size line");
  DenseMatrix m(rows, cols);
  const bool sym = h.symmetry == "symmetric";
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = sym ? c : 0; r < rows; ++r) {
      if (!reader.next(ss)) reader.fail("too few values");
      double v = 0.0;
      if (!(ss >> v)) reader.fail("malformed value");
      m(r, c) = v;
      if (sym) m(c, r) = v;
    }
  }
  return m;
}

}  // namespace dtm
