#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "dtm/sparse.hpp"

namespace dtm::test {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("dtm_test_" + std::to_string(::getpid()) + "_" + std::to_string(stamp) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// max_j ‖A v_j − λ_j v_j‖₂
inline double max_eig_residual(const DenseMatrix& a, const SymEigs& e) {
  double worst = 0.0;
  for (std::size_t j = 0; j < e.values.size(); ++j) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double av = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) av += a(i, p) * e.vectors(p, j);
      const double d = av - e.values[j] * e.vectors(i, j);
      r += d * d;
    }
    worst = std::max(worst, std::sqrt(r));
  }
  return worst;
}

/// max |VᵀV − I|
inline double orthonormality_error(const DenseMatrix& v) {
  double worst = 0.0;
  for (std::size_t a = 0; a < v.cols(); ++a)
    for (std::size_t b = 0; b < v.cols(); ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.rows(); ++i) dot += v(i, a) * v(i, b);
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace dtm::test
