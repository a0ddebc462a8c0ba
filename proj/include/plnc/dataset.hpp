#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "plnc/gf2.hpp"
#include "plnc/phy.hpp"

namespace plnc {

/// One channel realization and the per-combination decoding outcomes.
/// Gains are sorted by decreasing |h|; label bit i-1 belongs to the weight
/// vector binary_expansion(i, d) over that sorted order.
struct TrainingSample {
  std::vector<double> gains;
  BitWord labels;
};

struct DatasetHeader {
  std::size_t degree = 0;
  double snr_db = 0.0;
  FadingSpec fading;
  std::uint64_t seed = 0;
  int max_iter = kDefaultBpIterations;
};

struct Dataset {
  DatasetHeader header;
  std::vector<TrainingSample> samples;

  [[nodiscard]] std::size_t degree() const { return header.degree; }
  [[nodiscard]] std::size_t n_outputs() const { return (std::size_t{1} << header.degree) - 1; }
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text format: one '#'-prefixed header line
///   # plnc-dataset v1 degree=<d> samples=<N> snr_db=<x> fading=<spec> seed=<s> max_iter=<m>
/// then one tab-separated record per sample: d gains (shortest round-trip
/// decimal) followed by the 2^d - 1 label bits as a 0/1 string.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace plnc
