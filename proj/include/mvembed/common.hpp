#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvembed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Runtime failure tagged with the pipeline phase that raised it. The CLI
// prints the phase so a failing run can be localised without a debugger.
class Error : public std::runtime_error {
public:
  Error(std::string phase, const std::string& message)
      : std::runtime_error("[" + phase + "] " + message), phase_(std::move(phase)) {}

  const std::string& phase() const { return phase_; }

private:
  std::string phase_;
};

// Command-line misuse (bad flag value, unknown method). Exits with a
// different status than runtime failures.
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& message) : std::runtime_error(message) {}
};

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// the standard); uniform/normal/shuffle are implemented here rather than via
// std::*_distribution, whose output is implementation defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double normal();   // standard normal via Box-Muller, one value per call
  Index uniform_index(Index n);  // uniform over {0, ..., n-1}

  // Fisher-Yates; every permutation equally likely under a perfect source.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (Index i = static_cast<Index>(items.size()) - 1; i > 0; --i) {
      const Index j = uniform_index(i + 1);
      std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]);
    }
  }

  Matrix gaussian_matrix(Index rows, Index cols);

private:
  std::mt19937_64 engine_;
};

// Named substream derivation: one user-visible seed, independent streams for
// split/cv/permute/synth consumers. FNV-1a over the name, mixed with the base
// seed and index through splitmix64 finalisers.
std::uint64_t derive_seed(std::uint64_t base, const std::string& stream, std::uint64_t index = 0);

// Canonical column sign: the entry of largest magnitude (first such row on
// ties) is made positive. Applied to every eigenvector/loading matrix the
// library returns so repeated runs are comparable entry-wise.
void fix_column_signs(Matrix& m);

// Vertical concatenation of per-view blocks.
Matrix stack_rows(const std::vector<Matrix>& blocks);

// Splits a stacked matrix back into row blocks of the given heights.
std::vector<Matrix> split_rows(const Matrix& stacked, const std::vector<Index>& heights);

}  // namespace mvembed
