#include "plnc/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#ifdef __AVX2__
#include <immintrin.h>
#endif

namespace plnc {

extern const char* const kDefaultCodeAlist;

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::string_view text) : in_(std::string(text)) {}

  long next(const char* what) {
    long v = 0;
    if (!(in_ >> v)) throw ParseError(std::string("alist: unexpected end of input reading ") + what);
    return v;
  }

  long peek_or(long fallback) {
    const auto pos = in_.tellg();
    long v = 0;
    if (!(in_ >> v)) {
      in_.clear();
      in_.seekg(pos);
      return fallback;
    }
    in_.seekg(pos);
    return v;
  }

 private:
  std::istringstream in_;
};

std::vector<std::vector<std::size_t>> read_lists(TokenReader& rd, const std::vector<long>& degrees,
                                                 long max_degree, long index_limit, const char* what) {
  std::vector<std::vector<std::size_t>> lists(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    for (long j = 0; j < degrees[i]; ++j) {
      const long idx = rd.next(what);
      if (idx < 1 || idx > index_limit) throw ParseError(std::string("alist: index out of range in ") + what);
      lists[i].push_back(static_cast<std::size_t>(idx - 1));
    }
    // Optional zero padding up to the maximum degree.
    for (long j = degrees[i]; j < max_degree && rd.peek_or(-1) == 0; ++j) rd.next(what);
  }
  return lists;
}

/// phi(x) = ln((e^x + 1) / (e^x - 1)), an involution on (0, inf).
///
/// Tabulated on a log-spaced grid read straight off the float bit pattern:
/// 128 segments per octave over [2^-24, 2^6), linear interpolation inside a
/// segment. Arguments outside the grid are clamped to it, which bounds
/// check-to-variable magnitudes at phi(2^-24) ~ 17.3.
class PhiTable {
 public:
  static const PhiTable& instance() {
    static const PhiTable table;
    return table;
  }

  float operator()(float x) const {
    const std::uint32_t bits = std::clamp(std::bit_cast<std::uint32_t>(x), kLoBits, kHiBits - 1);
    const std::uint32_t offset = bits - kLoBits;
    const std::uint32_t i = offset >> kFracBits;
    const float frac = static_cast<float>(offset & kFracMask) * (1.0F / static_cast<float>(kFracMask + 1));
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

#ifdef __AVX2__
  /// Eight lanes of operator(), with identical arithmetic.
  __m256 eval8(__m256 x) const {
    __m256i bits = _mm256_castps_si256(x);
    bits = _mm256_min_epi32(_mm256_max_epi32(bits, _mm256_set1_epi32(static_cast<int>(kLoBits))),
                            _mm256_set1_epi32(static_cast<int>(kHiBits - 1)));
    const __m256i offset = _mm256_sub_epi32(bits, _mm256_set1_epi32(static_cast<int>(kLoBits)));
    const __m256i i = _mm256_srli_epi32(offset, kFracBits);
    const __m256 frac = _mm256_mul_ps(
        _mm256_cvtepi32_ps(_mm256_and_si256(offset, _mm256_set1_epi32(static_cast<int>(kFracMask)))),
        _mm256_set1_ps(1.0F / static_cast<float>(kFracMask + 1)));
    const __m256 v0 = _mm256_i32gather_ps(values_.data(), i, 4);
    const __m256 v1 = _mm256_i32gather_ps(values_.data() + 1, i, 4);
    return _mm256_add_ps(v0, _mm256_mul_ps(frac, _mm256_sub_ps(v1, v0)));
  }
#endif

  static double exact(double x) { return std::log1p(2.0 / std::expm1(x)); }

 private:
  static constexpr std::uint32_t kFracBits = 16;  // keeps 7 of the 23 mantissa bits as index
  static constexpr std::uint32_t kFracMask = (1U << kFracBits) - 1;
  static constexpr std::uint32_t kLoBits = std::bit_cast<std::uint32_t>(0x1p-24F);
  static constexpr std::uint32_t kHiBits = std::bit_cast<std::uint32_t>(0x1p6F);

  PhiTable() {
    const std::size_t count = ((kHiBits - kLoBits) >> kFracBits) + 1;
    values_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = std::bit_cast<float>(kLoBits + static_cast<std::uint32_t>(i << kFracBits));
      values_[i] = static_cast<float>(exact(static_cast<double>(x)));
    }
  }

  std::vector<float> values_;
};

}  // namespace

LdpcCode LdpcCode::from_alist(std::string_view text) {
  TokenReader rd(text);
  const long n = rd.next("dimensions");
  const long m = rd.next("dimensions");
  if (n <= 0 || m <= 0 || m >= n) throw ParseError("alist: invalid dimensions");
  const long max_col = rd.next("max degrees");
  const long max_row = rd.next("max degrees");
  std::vector<long> col_deg(static_cast<std::size_t>(n));
  std::vector<long> row_deg(static_cast<std::size_t>(m));
  for (auto& d : col_deg) {
    d = rd.next("column degrees");
    if (d < 0 || d > max_col) throw ParseError("alist: column degree exceeds declared maximum");
  }
  for (auto& d : row_deg) {
    d = rd.next("row degrees");
    if (d < 0 || d > max_row) throw ParseError("alist: row degree exceeds declared maximum");
  }
  const auto cols = read_lists(rd, col_deg, max_col, m, "column lists");
  const auto rows = read_lists(rd, row_deg, max_row, n, "row lists");

  BitMatrix h(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (auto r : cols[c]) {
      if (h.get(r, c)) throw ParseError("alist: repeated entry in column list");
      h.set(r, c, true);
    }
  }
  std::size_t row_entries = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (auto c : rows[r]) {
      if (!h.get(r, c)) throw ParseError("alist: row and column lists disagree");
      ++row_entries;
    }
  }
  std::size_t col_entries = 0;
  for (const auto& c : cols) col_entries += c.size();
  if (row_entries != col_entries) throw ParseError("alist: row and column lists disagree");
  return from_parity_check(h);
}

LdpcCode LdpcCode::from_alist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("alist: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_alist(ss.str());
}

LdpcCode LdpcCode::from_parity_check(const BitMatrix& h) {
  LdpcCode code;
  code.n_ = h.n_cols();
  code.h_ = h;
  const auto red = rref(h);
  if (red.rank != h.n_rows()) {
    throw CodeError("parity-check matrix has rank " + std::to_string(red.rank) + ", expected " +
                    std::to_string(h.n_rows()));
  }
  code.k_ = code.n_ - red.rank;

  std::vector<bool> is_pivot(code.n_, false);
  for (auto c : red.pivot_cols) is_pivot[c] = true;
  for (std::size_t c = 0; c < code.n_; ++c) {
    if (!is_pivot[c]) code.info_pos_.push_back(c);
  }
  code.parity_pos_ = red.pivot_cols;
  for (std::size_t r = 0; r < red.rank; ++r) {
    BitWord restricted(code.k_);
    for (std::size_t j = 0; j < code.k_; ++j) restricted.set(j, red.rref.get(r, code.info_pos_[j]));
    code.parity_rows_.push_back(std::move(restricted));
  }

  // Edges are numbered variable-major so that the variable update walks
  // contiguous memory; checks address their edges through check_edges_.
  std::vector<std::vector<std::uint32_t>> per_check(h.n_rows());
  code.var_start_.push_back(0);
  for (std::size_t c = 0; c < code.n_; ++c) {
    for (std::size_t r = 0; r < h.n_rows(); ++r) {
      if (h.get(r, c)) {
        const auto e = static_cast<std::uint32_t>(code.edge_check_.size());
        per_check[r].push_back(e);
        code.edge_check_.push_back(static_cast<std::uint32_t>(r));
        code.edge_var_.push_back(static_cast<std::uint32_t>(c));
      }
    }
    code.var_start_.push_back(static_cast<std::uint32_t>(code.edge_check_.size()));
  }
  code.check_start_.push_back(0);
  for (const auto& edges : per_check) {
    code.check_edges_.insert(code.check_edges_.end(), edges.begin(), edges.end());
    code.check_start_.push_back(static_cast<std::uint32_t>(code.check_edges_.size()));
  }
  return code;
}

const LdpcCode& LdpcCode::default_code() {
  static const LdpcCode code = from_alist(kDefaultCodeAlist);
  return code;
}

BitWord LdpcCode::encode(const BitWord& msg) const {
  if (msg.size() != k_) throw DimensionError("encode: message length differs from k");
  BitWord cw(n_);
  for (std::size_t j = 0; j < k_; ++j) cw.set(info_pos_[j], msg.get(j));
  for (std::size_t r = 0; r < parity_pos_.size(); ++r) cw.set(parity_pos_[r], parity_rows_[r].dot(msg));
  return cw;
}

BitWord LdpcCode::syndrome(const BitWord& word) const {
  if (word.size() != n_) throw DimensionError("syndrome: word length differs from n");
  BitWord s(h_.n_rows());
  for (std::size_t r = 0; r < h_.n_rows(); ++r) s.set(r, h_.row(r).dot(word));
  return s;
}

bool LdpcCode::syndrome_ok(const BitWord& word) const {
  if (word.size() != n_) throw DimensionError("syndrome: word length differs from n");
  for (const auto& row : h_.rows()) {
    if (row.dot(word)) return false;
  }
  return true;
}

std::string LdpcCode::to_alist() const {
  std::ostringstream out;
  const std::size_t m = h_.n_rows();
  std::size_t max_col = 0;
  std::size_t max_row = 0;
  for (std::size_t v = 0; v < n_; ++v) max_col = std::max<std::size_t>(max_col, var_start_[v + 1] - var_start_[v]);
  for (std::size_t c = 0; c < m; ++c) max_row = std::max<std::size_t>(max_row, check_start_[c + 1] - check_start_[c]);
  out << n_ << ' ' << m << '\n' << max_col << ' ' << max_row << '\n';
  for (std::size_t v = 0; v < n_; ++v) out << (v ? " " : "") << var_start_[v + 1] - var_start_[v];
  out << '\n';
  for (std::size_t c = 0; c < m; ++c) out << (c ? " " : "") << check_start_[c + 1] - check_start_[c];
  out << '\n';
  for (std::size_t v = 0; v < n_; ++v) {
    std::vector<std::size_t> checks;
    for (std::size_t r = 0; r < m; ++r) {
      if (h_.get(r, v)) checks.push_back(r + 1);
    }
    checks.resize(max_col, 0);
    for (std::size_t i = 0; i < checks.size(); ++i) out << (i ? " " : "") << checks[i];
    out << '\n';
  }
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<std::size_t> vars;
    for (std::size_t v = 0; v < n_; ++v) {
      if (h_.get(c, v)) vars.push_back(v + 1);
    }
    vars.resize(max_row, 0);
    for (std::size_t i = 0; i < vars.size(); ++i) out << (i ? " " : "") << vars[i];
    out << '\n';
  }
  return out.str();
}

BpDecoder::BpDecoder(const LdpcCode& code)
    : code_(&code),
      channel_(code.n()),
      posterior_(code.n()),
      v2c_(code.n_edges()),
      c2v_(code.n_edges()),
      mag_(code.n_edges()),
      check_total_(code.n_checks()),
      check_sign_(code.n_checks()) {}

void BpDecoder::magnitudes() {
  const PhiTable& phi = PhiTable::instance();
  const std::size_t n_edges = v2c_.size();
  std::size_t e = 0;
#ifdef __AVX2__
  const __m256 abs_mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
  for (; e + 8 <= n_edges; e += 8) {
    const __m256 x = _mm256_and_ps(_mm256_loadu_ps(&v2c_[e]), abs_mask);
    _mm256_storeu_ps(&mag_[e], phi.eval8(x));
  }
#endif
  for (; e < n_edges; ++e) mag_[e] = phi(std::fabs(v2c_[e]));
}

void BpDecoder::check_messages() {
  constexpr std::uint32_t kSignBit = 0x80000000U;
  const PhiTable& phi = PhiTable::instance();
  const std::size_t n_edges = v2c_.size();
  const std::uint32_t* edge_check = code_->edge_check_.data();
  std::size_t e = 0;
#ifdef __AVX2__
  const __m256i sign_mask = _mm256_set1_epi32(static_cast<int>(kSignBit));
  for (; e + 8 <= n_edges; e += 8) {
    const __m256i checks = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(edge_check + e));
    const __m256 total = _mm256_i32gather_ps(check_total_.data(), checks, 4);
    const __m256i sign = _mm256_i32gather_epi32(reinterpret_cast<const int*>(check_sign_.data()), checks, 4);
    const __m256 rest = _mm256_max_ps(_mm256_sub_ps(total, _mm256_loadu_ps(&mag_[e])), _mm256_setzero_ps());
    const __m256i own = _mm256_and_si256(_mm256_castps_si256(_mm256_loadu_ps(&v2c_[e])), sign_mask);
    const __m256i m = _mm256_castps_si256(phi.eval8(rest));
    _mm256_storeu_ps(&c2v_[e], _mm256_castsi256_ps(_mm256_or_si256(m, _mm256_xor_si256(sign, own))));
  }
#endif
  for (; e < n_edges; ++e) {
    const std::uint32_t c = edge_check[e];
    const float m = phi(std::max(check_total_[c] - mag_[e], 0.0F));
    const std::uint32_t s = check_sign_[c] ^ (std::bit_cast<std::uint32_t>(v2c_[e]) & kSignBit);
    c2v_[e] = std::bit_cast<float>(std::bit_cast<std::uint32_t>(m) | s);
  }
}

DecodeOutcome BpDecoder::decode(std::span<const double> llr, int max_iter) {
  const LdpcCode& code = *code_;
  const std::size_t n = code.n();
  if (llr.size() != n) throw DimensionError("bp_decode: LLR length differs from n");
  if (max_iter < 1) throw std::invalid_argument("bp_decode: max_iter must be at least 1");

  constexpr auto clip = static_cast<float>(kLlrClip);
  const std::size_t n_checks = code.n_checks();
  const std::uint32_t* var_start = code.var_start_.data();
  const std::uint32_t* check_start = code.check_start_.data();
  const std::uint32_t* check_edges = code.check_edges_.data();
  const std::uint32_t* edge_var = code.edge_var_.data();
  const std::size_t n_edges = code.n_edges();

  for (std::size_t v = 0; v < n; ++v) {
    channel_[v] = static_cast<float>(std::clamp(llr[v], -kLlrClip, kLlrClip));
    for (auto e = var_start[v]; e < var_start[v + 1]; ++e) v2c_[e] = channel_[v];
  }

  DecodeOutcome out{BitWord(n), false, 0};
  auto word_blocks = out.word.blocks();

  for (int iter = 1; iter <= max_iter; ++iter) {
    // Check update in the log-magnitude domain:
    // |c2v| = phi(sum over other edges of phi(|v2c|)), sign = product of other signs.
    magnitudes();
    for (std::size_t c = 0; c < n_checks; ++c) {
      float total = 0.0F;
      std::uint32_t sign = 0;
      for (auto i = check_start[c]; i < check_start[c + 1]; ++i) {
        const auto e = check_edges[i];
        total += mag_[e];
        sign ^= std::bit_cast<std::uint32_t>(v2c_[e]);
      }
      check_total_[c] = total;
      check_sign_[c] = sign & 0x80000000U;
    }
    check_messages();
    // Variable update and hard decision; a posterior of exactly 0 decides bit 0.
    for (std::size_t v = 0; v < n; ++v) {
      float sum = channel_[v];
      for (auto e = var_start[v]; e < var_start[v + 1]; ++e) sum += c2v_[e];
      posterior_[v] = sum;
    }
    for (std::size_t e = 0; e < n_edges; ++e) {
      v2c_[e] = std::min(std::max(posterior_[edge_var[e]] - c2v_[e], -clip), clip);
    }
    for (std::size_t b = 0; b < word_blocks.size(); ++b) {
      std::uint64_t bits = 0;
      const std::size_t end = std::min(n, (b + 1) * 64);
      for (std::size_t v = b * 64; v < end; ++v) bits |= static_cast<std::uint64_t>(posterior_[v] < 0.0F) << (v & 63);
      word_blocks[b] = bits;
    }
    out.iterations_used = iter;
    if (code.syndrome_ok(out.word)) {
      out.syndrome_ok = true;
      break;
    }
  }
  return out;
}

DecodeOutcome bp_decode(const LdpcCode& code, std::span<const double> llr, int max_iter) {
  BpDecoder dec(code);
  return dec.decode(llr, max_iter);
}

}  // namespace plnc
