#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "plnc/gf2.hpp"

namespace plnc {

/// Channel log-likelihood ratios ln p(y|0)/p(y|1); positive favors bit 0.
using LlrVector = std::vector<double>;

/// Magnitude bound applied to channel LLRs and decoder messages.
inline constexpr double kLlrClip = 30.0;
inline constexpr int kDefaultBpIterations = 100;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecodeOutcome {
  BitWord word;
  bool syndrome_ok = false;
  int iterations_used = 0;
};

/// Binary LDPC code: sparse parity-check structure plus a systematic encoder
/// obtained by Gauss-Jordan elimination of H.
///
/// Message bits are placed at the non-pivot columns of rref(H) in increasing
/// order; each pivot column carries the parity of its reduced row.
class LdpcCode {
 public:
  /// Parses the alist format (1-based indices, zero padding allowed).
  static LdpcCode from_alist(std::string_view text);
  static LdpcCode from_alist_file(const std::string& path);
  static LdpcCode from_parity_check(const BitMatrix& h);

  /// The built-in rate-1/2 (128,64) short-block code.
  static const LdpcCode& default_code();

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] std::size_t k() const { return k_; }
  [[nodiscard]] std::size_t n_checks() const { return h_.n_rows(); }
  [[nodiscard]] std::size_t n_edges() const { return edge_check_.size(); }
  [[nodiscard]] const BitMatrix& parity_check() const { return h_; }
  /// Codeword positions holding message bits, in message order.
  [[nodiscard]] const std::vector<std::size_t>& info_positions() const { return info_pos_; }

  [[nodiscard]] BitWord encode(const BitWord& msg) const;
  [[nodiscard]] BitWord syndrome(const BitWord& word) const;
  [[nodiscard]] bool syndrome_ok(const BitWord& word) const;

  [[nodiscard]] std::string to_alist() const;

 private:
  friend class BpDecoder;

  std::size_t n_ = 0;
  std::size_t k_ = 0;
  BitMatrix h_;
  // Tanner graph. Edges are numbered variable-major: variable v owns edges
  // [var_start_[v], var_start_[v + 1]); check c owns the edge ids listed in
  // check_edges_[check_start_[c] .. check_start_[c + 1]).
  std::vector<std::uint32_t> var_start_;
  std::vector<std::uint32_t> edge_check_;
  std::vector<std::uint32_t> edge_var_;
  std::vector<std::uint32_t> check_start_;
  std::vector<std::uint32_t> check_edges_;

  // Encoder: rows of rref(H) restricted to information positions.
  std::vector<std::size_t> info_pos_;
  std::vector<std::size_t> parity_pos_;
  std::vector<BitWord> parity_rows_;  // length k, one per parity position
};

/// Flooding sum-product decoder with reusable working buffers. One instance
/// per thread; the code it references must outlive it.
class BpDecoder {
 public:
  explicit BpDecoder(const LdpcCode& code);

  DecodeOutcome decode(std::span<const double> llr, int max_iter = kDefaultBpIterations);

 private:
  void magnitudes();
  void check_messages();

  const LdpcCode* code_;
  std::vector<float> channel_;
  std::vector<float> posterior_;
  std::vector<float> v2c_;
  std::vector<float> c2v_;
  std::vector<float> mag_;
  std::vector<float> check_total_;
  std::vector<std::uint32_t> check_sign_;
};

/// Convenience wrapper allocating a fresh decoder.
DecodeOutcome bp_decode(const LdpcCode& code, std::span<const double> llr,
                        int max_iter = kDefaultBpIterations);

}  // namespace plnc
