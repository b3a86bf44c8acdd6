#include "mvembed/common.hpp"

#include <cmath>
#include <numbers>

namespace mvembed {

double Rng::uniform() {
  // 53 random bits -> [0, 1) with full double resolution.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // Box-Muller, cosine branch. u1 shifted into (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Index Rng::uniform_index(Index n) {
  if (n <= 0) throw Error("rng", "uniform_index needs a positive range");
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  // Rejection sampling over the largest multiple of `range` below 2^64.
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % range;
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return static_cast<Index>(draw % range);
}

Matrix Rng::gaussian_matrix(Index rows, Index cols) {
  Matrix out(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) out(r, c) = normal();
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, const std::string& stream, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ fnv1a(stream)) ^ index);
}

void fix_column_signs(Matrix& m) {
  for (Index c = 0; c < m.cols(); ++c) {
    Index pivot = 0;
    double best = -1.0;
    for (Index r = 0; r < m.rows(); ++r) {
      const double mag = std::abs(m(r, c));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (m(pivot, c) < 0.0) m.col(c) = -m.col(c);
  }
}

Matrix stack_rows(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix(0, 0);
  Index rows = 0;
  const Index cols = blocks.front().cols();
  for (const Matrix& b : blocks) {
    if (b.cols() != cols) throw Error("stack", "row blocks disagree on column count");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Matrix& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

std::vector<Matrix> split_rows(const Matrix& stacked, const std::vector<Index>& heights) {
  Index total = 0;
  for (const Index h : heights) total += h;
  if (total != stacked.rows()) throw Error("stack", "row block heights do not sum to matrix height");
  std::vector<Matrix> out;
  out.reserve(heights.size());
  Index at = 0;
  for (const Index h : heights) {
    out.push_back(stacked.middleRows(at, h));
    at += h;
  }
  return out;
}

}  // namespace mvembed
