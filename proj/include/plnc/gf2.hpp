#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace plnc {

/// Thrown when operands have incompatible lengths or shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-length binary vector, bit-packed into 64-bit blocks.
///
/// Bit `i` lives in block `i / 64` at position `i % 64`. Padding bits past
/// `size()` are kept at zero so that block-wise comparison and popcount are
/// exact.
class BitWord {
 public:
  BitWord() = default;
  explicit BitWord(std::size_t length);

  /// Parses a string of '0'/'1' characters, index 0 first.
  static BitWord from_string(std::string_view bits);
  static BitWord from_bits(std::span<const std::uint8_t> bits);

  [[nodiscard]] std::size_t size() const { return length_; }
  [[nodiscard]] bool empty() const { return length_ == 0; }

  [[nodiscard]] bool get(std::size_t i) const {
    return (blocks_[i >> 6] >> (i & 63)) & 1U;
  }
  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value) {
      blocks_[i >> 6] |= mask;
    } else {
      blocks_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) { blocks_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  BitWord& operator^=(const BitWord& other);
  friend BitWord operator^(BitWord lhs, const BitWord& rhs) {
    lhs ^= rhs;
    return lhs;
  }
  friend bool operator==(const BitWord&, const BitWord&) = default;
  friend auto operator<=>(const BitWord&, const BitWord&) = default;

  /// Hamming weight.
  [[nodiscard]] std::size_t weight() const;
  [[nodiscard]] bool is_zero() const;
  /// Index of the lowest set bit, or size() if none.
  [[nodiscard]] std::size_t first_set() const;
  /// Inner product over GF(2).
  [[nodiscard]] bool dot(const BitWord& other) const;

  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] std::span<const std::uint64_t> blocks() const { return blocks_; }
  [[nodiscard]] std::span<std::uint64_t> blocks() { return blocks_; }

 private:
  std::size_t length_ = 0;
  std::vector<std::uint64_t> blocks_;
};

/// Dense GF(2) matrix stored as packed rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols);
  explicit BitMatrix(std::vector<BitWord> rows, std::size_t cols);

  static BitMatrix identity(std::size_t n);
  /// One string per row, e.g. {"1010", "0110"}.
  static BitMatrix from_strings(const std::vector<std::string>& rows);

  [[nodiscard]] std::size_t n_rows() const { return rows_.size(); }
  [[nodiscard]] std::size_t n_cols() const { return cols_; }

  [[nodiscard]] bool get(std::size_t r, std::size_t c) const { return rows_[r].get(c); }
  void set(std::size_t r, std::size_t c, bool v) { rows_[r].set(c, v); }

  [[nodiscard]] const BitWord& row(std::size_t r) const { return rows_[r]; }
  [[nodiscard]] BitWord& row(std::size_t r) { return rows_[r]; }
  [[nodiscard]] const std::vector<BitWord>& rows() const { return rows_; }

  void append_row(BitWord row);
  void swap_rows(std::size_t a, std::size_t b) { std::swap(rows_[a], rows_[b]); }

  [[nodiscard]] BitMatrix transpose() const;
  [[nodiscard]] BitWord column(std::size_t c) const;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<BitWord> rows_;
};

/// Matrix product over GF(2).
BitMatrix multiply(const BitMatrix& lhs, const BitMatrix& rhs);
/// Row vector times matrix: returns v * M.
BitWord multiply(const BitWord& v, const BitMatrix& m);

struct RrefResult {
  BitMatrix rref;
  BitMatrix transform;  // rref == transform * input
  std::size_t rank = 0;
  std::vector<std::size_t> pivot_cols;
};

/// XOR of the words whose coefficient bit is set.
BitWord xor_accumulate(std::span<const BitWord> words, const BitWord& coefficients);

/// Reduced row echelon form by Gauss-Jordan elimination over GF(2).
RrefResult rref(const BitMatrix& m);

[[nodiscard]] std::size_t rank(const BitMatrix& m);

[[nodiscard]] bool is_rref(const BitMatrix& m);

/// Pivot columns of rows whose only nonzero entry is the pivot. Throws
/// std::logic_error if the input is not in reduced row echelon form.
std::vector<std::size_t> recoverable_indices(const BitMatrix& rref_matrix);

struct SolveResult {
  std::map<std::size_t, BitWord> unknowns;
  /// Rows reducing to 0 = nonzero word, i.e. inconsistent equations.
  std::size_t conflicts = 0;
  std::size_t rank = 0;
};

/// Solves A * U = W for the rows of U that the system determines uniquely,
/// by elimination on the augmented matrix [A | W].
SolveResult solve_combinations(const BitMatrix& a, const BitMatrix& w);

/// Length-d word whose bit k is the k-th least significant bit of i.
BitWord binary_expansion(std::uint64_t i, std::size_t d);
std::uint64_t binary_index(const BitWord& a);

}  // namespace plnc
