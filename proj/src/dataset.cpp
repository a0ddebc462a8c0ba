#include "plnc/dataset.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace plnc {

namespace {

constexpr std::string_view kMagic = "plnc-dataset";
constexpr std::string_view kVersion = "v1";

double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError(std::string("dataset: cannot parse ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError(std::string("dataset: cannot parse ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const auto& h = data.header;
  out << "# " << kMagic << ' ' << kVersion << " degree=" << h.degree << " samples=" << data.samples.size()
      << " snr_db=" << format_double(h.snr_db) << " fading=" << h.fading.to_string() << " seed=" << h.seed
      << " max_iter=" << h.max_iter << '\n';
  for (const auto& s : data.samples) {
    for (double g : s.gains) out << format_double(g) << '\t';
    out << s.labels.to_string() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset: empty input");
  std::istringstream head(line);
  std::string hash, magic, version;
  head >> hash >> magic >> version;
  if (hash != "#" || magic != kMagic) throw FormatError("dataset: missing header");
  if (version != kVersion) throw FormatError("dataset: unsupported version '" + version + "'");
  std::map<std::string, std::string> fields;
  for (std::string kv; head >> kv;) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw FormatError("dataset: malformed header field '" + kv + "'");
    fields[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  for (const char* key : {"degree", "samples", "snr_db", "fading", "seed", "max_iter"}) {
    if (!fields.contains(key)) throw FormatError(std::string("dataset: header lacks ") + key);
  }
  Dataset data;
  data.header.degree = parse_uint(fields["degree"], "degree");
  if (data.header.degree == 0 || data.header.degree > 16) throw FormatError("dataset: degree out of range");
  data.header.snr_db = parse_double(fields["snr_db"], "snr_db");
  try {
    data.header.fading = FadingSpec::parse(fields["fading"]);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  data.header.seed = parse_uint(fields["seed"], "seed");
  data.header.max_iter = static_cast<int>(parse_uint(fields["max_iter"], "max_iter"));
  const auto count = parse_uint(fields["samples"], "samples");

  const std::size_t d = data.header.degree;
  const std::size_t outputs = data.n_outputs();
  data.samples.reserve(count);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TrainingSample s;
    std::string_view rest = line;
    for (std::size_t i = 0; i < d; ++i) {
      const auto tab = rest.find('\t');
      if (tab == std::string_view::npos) throw FormatError("dataset: record has too few fields");
      s.gains.push_back(parse_double(rest.substr(0, tab), "gain"));
      rest.remove_prefix(tab + 1);
    }
    if (rest.size() != outputs) throw FormatError("dataset: label width differs from 2^d - 1");
    try {
      s.labels = BitWord::from_string(rest);
    } catch (const std::invalid_argument&) {
      throw FormatError("dataset: labels must be 0/1");
    }
    data.samples.push_back(std::move(s));
  }
  if (data.samples.size() != count) throw FormatError("dataset: record count differs from header");
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(out, data);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset(in);
}

}  // namespace plnc
