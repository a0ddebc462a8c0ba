#include "plnc/gf2.hpp"

#include <algorithm>
#include <bit>

namespace plnc {

namespace {

constexpr std::size_t blocks_for(std::size_t bits) { return (bits + 63) / 64; }

}  // namespace

BitWord::BitWord(std::size_t length) : length_(length), blocks_(blocks_for(length), 0) {}

BitWord BitWord::from_string(std::string_view bits) {
  BitWord w(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      w.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("bit string must contain only '0' and '1'");
    }
  }
  return w;
}

BitWord BitWord::from_bits(std::span<const std::uint8_t> bits) {
  BitWord w(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) w.set(i, bits[i] != 0);
  return w;
}

BitWord& BitWord::operator^=(const BitWord& other) {
  if (other.length_ != length_) throw DimensionError("BitWord xor: length mismatch");
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] ^= other.blocks_[b];
  return *this;
}

std::size_t BitWord::weight() const {
  std::size_t w = 0;
  for (auto b : blocks_) w += static_cast<std::size_t>(std::popcount(b));
  return w;
}

bool BitWord::is_zero() const {
  return std::all_of(blocks_.begin(), blocks_.end(), [](auto b) { return b == 0; });
}

std::size_t BitWord::first_set() const {
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b] != 0) return b * 64 + static_cast<std::size_t>(std::countr_zero(blocks_[b]));
  }
  return length_;
}

bool BitWord::dot(const BitWord& other) const {
  if (other.length_ != length_) throw DimensionError("BitWord dot: length mismatch");
  std::uint64_t acc = 0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) acc ^= blocks_[b] & other.blocks_[b];
  return (std::popcount(acc) & 1) != 0;
}

std::string BitWord::to_string() const {
  std::string s(length_, '0');
  for (std::size_t i = 0; i < length_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols) : cols_(cols), rows_(rows, BitWord(cols)) {}

BitMatrix::BitMatrix(std::vector<BitWord> rows, std::size_t cols) : cols_(cols), rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    if (r.size() != cols_) throw DimensionError("BitMatrix: row length differs from column count");
  }
}

BitMatrix BitMatrix::identity(std::size_t n) {
  BitMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
  return m;
}

BitMatrix BitMatrix::from_strings(const std::vector<std::string>& rows) {
  if (rows.empty()) return {};
  std::vector<BitWord> words;
  words.reserve(rows.size());
  for (const auto& r : rows) words.push_back(BitWord::from_string(r));
  const std::size_t cols = words.front().size();
  return BitMatrix(std::move(words), cols);
}

void BitMatrix::append_row(BitWord row) {
  if (rows_.empty() && cols_ == 0) cols_ = row.size();
  if (row.size() != cols_) throw DimensionError("BitMatrix::append_row: length mismatch");
  rows_.push_back(std::move(row));
}

BitMatrix BitMatrix::transpose() const {
  BitMatrix t(cols_, rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      if (rows_[r].get(c)) t.set(c, r, true);
    }
  }
  return t;
}

BitWord BitMatrix::column(std::size_t c) const {
  BitWord col(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) col.set(r, rows_[r].get(c));
  return col;
}

BitMatrix multiply(const BitMatrix& lhs, const BitMatrix& rhs) {
  if (lhs.n_cols() != rhs.n_rows()) throw DimensionError("multiply: inner dimensions differ");
  BitMatrix out(lhs.n_rows(), rhs.n_cols());
  for (std::size_t r = 0; r < lhs.n_rows(); ++r) out.row(r) = multiply(lhs.row(r), rhs);
  return out;
}

BitWord multiply(const BitWord& v, const BitMatrix& m) {
  if (v.size() != m.n_rows()) throw DimensionError("multiply: vector length differs from row count");
  BitWord out(m.n_cols());
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    if (v.get(r)) out ^= m.row(r);
  }
  return out;
}

BitWord xor_accumulate(std::span<const BitWord> words, const BitWord& coefficients) {
  if (coefficients.size() != words.size()) {
    throw DimensionError("xor_accumulate: coefficient count differs from word count");
  }
  if (words.empty()) return {};
  BitWord acc(words.front().size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() != acc.size()) throw DimensionError("xor_accumulate: word lengths differ");
    if (coefficients.get(i)) acc ^= words[i];
  }
  return acc;
}

RrefResult rref(const BitMatrix& m) {
  RrefResult res{m, BitMatrix::identity(m.n_rows()), 0, {}};
  auto& a = res.rref;
  auto& t = res.transform;
  std::size_t pivot_row = 0;
  for (std::size_t col = 0; col < a.n_cols() && pivot_row < a.n_rows(); ++col) {
    std::size_t sel = pivot_row;
    while (sel < a.n_rows() && !a.get(sel, col)) ++sel;
    if (sel == a.n_rows()) continue;
    a.swap_rows(sel, pivot_row);
    t.swap_rows(sel, pivot_row);
    for (std::size_t r = 0; r < a.n_rows(); ++r) {
      if (r != pivot_row && a.get(r, col)) {
        a.row(r) ^= a.row(pivot_row);
        t.row(r) ^= t.row(pivot_row);
      }
    }
    res.pivot_cols.push_back(col);
    ++pivot_row;
  }
  res.rank = pivot_row;
  return res;
}

std::size_t rank(const BitMatrix& m) { return rref(m).rank; }

bool is_rref(const BitMatrix& m) {
  std::size_t prev_pivot = 0;
  bool seen_zero_row = false;
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const std::size_t p = m.row(r).first_set();
    if (p == m.n_cols()) {
      seen_zero_row = true;
      continue;
    }
    if (seen_zero_row) return false;  // zero rows must be at the bottom
    if (r > 0 && p <= prev_pivot) return false;
    for (std::size_t other = 0; other < m.n_rows(); ++other) {
      if (other != r && m.get(other, p)) return false;
    }
    prev_pivot = p;
  }
  return true;
}

std::vector<std::size_t> recoverable_indices(const BitMatrix& rref_matrix) {
  if (!is_rref(rref_matrix)) throw std::logic_error("recoverable_indices: input is not in RREF");
  std::vector<std::size_t> out;
  for (const auto& row : rref_matrix.rows()) {
    if (row.weight() == 1) out.push_back(row.first_set());
  }
  return out;
}

SolveResult solve_combinations(const BitMatrix& a, const BitMatrix& w) {
  if (a.n_rows() != w.n_rows()) throw DimensionError("solve_combinations: row counts differ");
  SolveResult out;
  if (a.n_rows() == 0) return out;
  auto red = rref(a);
  const BitMatrix w_red = multiply(red.transform, w);
  out.rank = red.rank;
  for (std::size_t r = 0; r < red.rref.n_rows(); ++r) {
    const auto& row = red.rref.row(r);
    if (row.is_zero()) {
      if (!w_red.row(r).is_zero()) ++out.conflicts;
    } else if (row.weight() == 1) {
      out.unknowns.emplace(row.first_set(), w_red.row(r));
    }
  }
  return out;
}

BitWord binary_expansion(std::uint64_t i, std::size_t d) {
  if (d == 0 || d >= 64 || i == 0 || i >= (std::uint64_t{1} << d)) {
    throw std::domain_error("binary_expansion: index out of range 1..2^d-1");
  }
  BitWord a(d);
  a.blocks()[0] = i;
  return a;
}

std::uint64_t binary_index(const BitWord& a) {
  if (a.size() >= 64) throw DimensionError("binary_index: word too long");
  return a.empty() ? 0 : a.blocks()[0];
}

}  // namespace plnc
