#include "plnc/harness.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "plnc/parallel.hpp"
#include "plnc/traffic.hpp"

namespace plnc {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<BitWord> random_messages(std::size_t count, std::size_t k, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<BitWord> out;
  for (std::size_t i = 0; i < count; ++i) {
    BitWord m(k);
    for (std::size_t b = 0; b < k; ++b) m.set(b, coin(rng));
    out.push_back(std::move(m));
  }
  return out;
}

// Stream key shared by every policy at one (r, T_f) point.
std::uint64_t point_key(std::uint64_t seed, std::size_t replicas, std::size_t slots_per_frame) {
  return mix_seed(seed, replicas, slots_per_frame, static_cast<std::uint64_t>(StreamRole::kTraffic));
}

}  // namespace

void ResultTable::add_config(std::string key, std::string value) { config_.emplace_back(std::move(key), std::move(value)); }

void ResultTable::add(ResultRow row) { rows_.push_back(std::move(row)); }

void ResultTable::add_rate(const std::string& point, const std::string& metric, std::size_t hits, std::size_t n) {
  const double p = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  const double se = n ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0;
  add({point, metric, p, n, se});
}

void ResultTable::add_count(const std::string& point, const std::string& metric, std::size_t count, std::size_t n) {
  add({point, metric, static_cast<double>(count), n, std::sqrt(static_cast<double>(count))});
}

const ResultRow* ResultTable::find(const std::string& point, const std::string& metric) const {
  for (const auto& r : rows_) {
    if (r.point == point && r.metric == metric) return &r;
  }
  return nullptr;
}

void ResultTable::write(std::ostream& out) const {
  for (const auto& [k, v] : config_) out << "# " << k << '=' << v << '\n';
  out << "point,metric,value,samples,stderr\n";
  for (const auto& r : rows_) {
    out << r.point << ',' << r.metric << ',' << format_double(r.value) << ',' << r.samples << ','
        << format_double(r.std_error) << '\n';
  }
}

std::string ResultTable::to_string() const {
  std::ostringstream s;
  write(s);
  return s.str();
}

void ResultTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool operator==(const ResultTable& a, const ResultTable& b) { return a.to_string() == b.to_string(); }

double MeanAccumulator::std_error() const {
  if (n < 2) return 0.0;
  const double m = mean();
  const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}

void SlotHistogramConfig::validate() const {
  if (collision < 1 || collision > decoder.max_degree) {
    throw std::invalid_argument("collision degree must lie in [1, " + std::to_string(decoder.max_degree) + "]");
  }
  if (decoder.max_rounds < 1) throw std::invalid_argument("max rounds must be at least 1");
}

std::size_t SlotHistogram::iteration_total(std::size_t iteration, bool genie_counts) const {
  const auto& table = genie_counts ? genie : syndrome;
  if (iteration < 1 || iteration > table.size()) return 0;
  std::size_t total = 0;
  for (auto c : table[iteration - 1]) total += c;
  return total;
}

SlotHistogram simulate_slot_histogram(const SlotHistogramConfig& cfg, const LdpcCode& code, const PredictorBank* bank) {
  cfg.validate();
  const double power = power_from_snr_db(cfg.snr_db);
  const std::size_t d = cfg.collision;
  std::vector<SlotResult> results(cfg.slots);
  parallel_for(cfg.slots, cfg.threads, [&](std::size_t i) {
    Rng gain_rng = derive_seed(cfg.seed, 0, i, StreamRole::kGains);
    Rng msg_rng = derive_seed(cfg.seed, 0, i, StreamRole::kMessages);
    Rng noise_rng = derive_seed(cfg.seed, 0, i, StreamRole::kNoise);
    auto gains = sample_gains(cfg.fading, d, gain_rng);
    std::vector<BitWord> codewords;
    for (const auto& m : random_messages(d, code.k(), msg_rng)) codewords.push_back(code.encode(m));
    std::vector<std::size_t> users(d);
    for (std::size_t l = 0; l < d; ++l) users[l] = l;
    const auto obs = synth_slot(std::move(codewords), std::move(gains), std::move(users), power, noise_rng);
    results[i] = decode_slot_iterative(obs, code, cfg.policy, bank, cfg.decoder);
  });

  SlotHistogram h;
  h.slots = cfg.slots;
  h.collision = d;
  h.rounds = cfg.decoder.max_rounds;
  h.genie.assign(h.rounds, std::vector<std::size_t>(d, 0));
  h.syndrome = h.genie;
  for (const auto& r : results) {
    h.attempts.add(static_cast<double>(r.attempts));
    for (const auto& c : r.decoded) {
      const auto deg = c.weights.weight();
      ++h.syndrome[c.iteration - 1][deg - 1];
      if (c.genie_correct) {
        ++h.genie[c.iteration - 1][deg - 1];
      } else {
        ++h.undetected_errors;
      }
    }
  }
  for (const auto& r : results) {
    if (!r.round_attempts.empty()) h.first_round_attempts += r.round_attempts.front();
  }
  return h;
}

ResultTable run_slot_histogram(const SlotHistogramConfig& cfg, const LdpcCode& code, const PredictorBank* bank) {
  const auto h = simulate_slot_histogram(cfg, code, bank);
  ResultTable t;
  t.add_config("experiment", "slot_histogram");
  t.add_config("collision", std::to_string(cfg.collision));
  t.add_config("slots", std::to_string(cfg.slots));
  t.add_config("snr_db", format_double(cfg.snr_db));
  t.add_config("fading", cfg.fading.to_string());
  t.add_config("policy", cfg.policy.to_string());
  t.add_config("max_rounds", std::to_string(cfg.decoder.max_rounds));
  t.add_config("max_iter", std::to_string(cfg.decoder.max_iter));
  t.add_config("propagate", cfg.decoder.propagate ? "1" : "0");
  t.add_config("seed", std::to_string(cfg.seed));
  for (std::size_t it = 1; it <= h.rounds; ++it) {
    for (std::size_t deg = 1; deg <= h.collision; ++deg) {
      const auto point = "iter=" + std::to_string(it) + ";degree=" + std::to_string(deg);
      t.add_count(point, "genie_success", h.genie[it - 1][deg - 1], h.slots);
      t.add_count(point, "syndrome_success", h.syndrome[it - 1][deg - 1], h.slots);
    }
  }
  t.add({"all", "attempts_per_slot", h.attempts.mean(), h.slots, h.attempts.std_error()});
  t.add_count("all", "undetected_errors", h.undetected_errors, h.slots);
  return t;
}

void FrameSweepConfig::validate() const {
  if (replicas.empty() || slots_per_frame.empty() || policies.empty()) {
    throw std::invalid_argument("frame sweep needs at least one r, T_f and policy");
  }
  for (auto r : replicas) {
    if (r < 1) throw std::invalid_argument("replicas must be at least 1");
  }
  for (auto tf : slots_per_frame) {
    if (tf < 1) throw std::invalid_argument("slots per frame must be at least 1");
  }
  if (active > total_users) throw std::invalid_argument("active users exceed total users");
  if (active < 1) throw std::invalid_argument("active users must be at least 1");
}

std::string FramePoint::label() const {
  return "r=" + std::to_string(replicas) + ";tf=" + std::to_string(slots_per_frame) + ";policy=" + policy.to_string();
}

double FramePoint::loss_std_error() const {
  if (loss.total == 0) return 0.0;
  const double p = loss.rate();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(loss.total));
}

FrameOutcome simulate_frame(const FrameSweepConfig& cfg, std::size_t replicas, std::size_t slots_per_frame,
                            const SelectionPolicy& policy, std::uint64_t frame, const LdpcCode& code,
                            const PredictorBank* bank) {
  const std::uint64_t key = point_key(cfg.seed, replicas, slots_per_frame);
  const double power = power_from_snr_db(cfg.snr_db);

  FrameConfig fc;
  fc.slots_per_frame = slots_per_frame;
  fc.replicas = replicas;
  fc.total_users = cfg.total_users;
  fc.active_count = cfg.active;
  Rng traffic_rng = derive_seed(key, frame, 0, StreamRole::kTraffic);
  const auto schedule = draw_frame(fc, traffic_rng);

  Rng msg_rng = derive_seed(key, frame, 0, StreamRole::kMessages);
  std::vector<BitWord> truth;
  for (const auto& m : random_messages(schedule.active.size(), code.k(), msg_rng)) truth.push_back(code.encode(m));

  FrameOutcome out;
  std::vector<SlotDecodes> slots;
  for (std::size_t s = 0; s < slots_per_frame; ++s) {
    const auto users = slot_transmitters(schedule, s);
    if (users.empty()) continue;
    Rng gain_rng = derive_seed(key, frame, s, StreamRole::kGains);
    Rng noise_rng = derive_seed(key, frame, s, StreamRole::kNoise);
    auto gains = sample_gains(cfg.fading, users.size(), gain_rng);
    std::vector<BitWord> codewords;
    for (auto u : users) {
      const auto pos = static_cast<std::size_t>(std::ranges::lower_bound(schedule.active, u) - schedule.active.begin());
      codewords.push_back(truth[pos]);
    }
    const auto obs = synth_slot(std::move(codewords), std::move(gains), users, power, noise_rng);
    auto res = decode_slot_iterative(obs, code, policy, bank, cfg.decoder);
    out.attempts += res.attempts;
    if (res.capacity_exceeded) ++out.capacity_skips;
    for (auto& c : res.decoded) c.slot = s;
    slots.push_back({users, std::move(res.decoded)});
  }
  out.slots = slots_per_frame;
  const auto sys = assemble(slots, schedule.active, code.n());
  out.result = recover(sys.a, sys.w_hat);
  out.loss = packet_loss(out.result, truth);
  for (const auto& [pos, word] : out.result.recovered) {
    if (word != truth[pos]) ++out.wrong_recoveries;
  }
  return out;
}

std::vector<FramePoint> simulate_frame_sweep(const FrameSweepConfig& cfg, const LdpcCode& code,
                                             const PredictorBank* bank) {
  cfg.validate();
  for (const auto& p : cfg.policies) {
    if (p.uses_predictor() && bank == nullptr) {
      throw std::invalid_argument("policy " + p.to_string() + " needs predictor models");
    }
  }
  std::vector<FramePoint> points;
  for (auto r : cfg.replicas) {
    for (auto tf : cfg.slots_per_frame) {
      if (r > tf) continue;
      for (const auto& policy : cfg.policies) {
        FramePoint pt;
        pt.replicas = r;
        pt.slots_per_frame = tf;
        pt.policy = policy;
        pt.frames = cfg.frames;
        std::vector<FrameOutcome> outcomes(cfg.frames);
        parallel_for(cfg.frames, cfg.threads,
                     [&](std::size_t f) { outcomes[f] = simulate_frame(cfg, r, tf, policy, f, code, bank); });
        for (const auto& o : outcomes) {
          pt.loss += o.loss;
          pt.attempts_per_slot.add(static_cast<double>(o.attempts) / static_cast<double>(o.slots));
          pt.conflicts += o.result.conflicts;
          pt.wrong_recoveries += o.wrong_recoveries;
          pt.capacity_skips += o.capacity_skips;
        }
        points.push_back(std::move(pt));
      }
    }
  }
  return points;
}

ResultTable run_frame_sweep(const FrameSweepConfig& cfg, const LdpcCode& code, const PredictorBank* bank) {
  ResultTable t;
  t.add_config("experiment", "frame_sweep");
  t.add_config("active", std::to_string(cfg.active));
  t.add_config("total_users", std::to_string(cfg.total_users));
  t.add_config("replicas", join_sizes(cfg.replicas));
  t.add_config("slots_per_frame", join_sizes(cfg.slots_per_frame));
  std::string policies;
  for (std::size_t i = 0; i < cfg.policies.size(); ++i) policies += (i ? "," : "") + cfg.policies[i].to_string();
  t.add_config("policies", policies);
  t.add_config("frames", std::to_string(cfg.frames));
  t.add_config("snr_db", format_double(cfg.snr_db));
  t.add_config("fading", cfg.fading.to_string());
  t.add_config("max_rounds", std::to_string(cfg.decoder.max_rounds));
  t.add_config("max_iter", std::to_string(cfg.decoder.max_iter));
  t.add_config("propagate", cfg.decoder.propagate ? "1" : "0");
  t.add_config("seed", std::to_string(cfg.seed));
  if (cfg.frames == 0) return t;
  for (const auto& pt : simulate_frame_sweep(cfg, code, bank)) {
    const auto label = pt.label();
    t.add_rate(label, "packet_loss", pt.loss.lost, pt.loss.total);
    t.add({label, "attempts_per_slot", pt.attempts_per_slot.mean(), pt.attempts_per_slot.n,
           pt.attempts_per_slot.std_error()});
    t.add_count(label, "conflicts", pt.conflicts, pt.frames);
    t.add_count(label, "wrong_recoveries", pt.wrong_recoveries, pt.frames);
    t.add_count(label, "capacity_skips", pt.capacity_skips, pt.frames);
  }
  return t;
}

ResultTable classifier_table(const ClassifierMetrics& m, std::size_t degree, double tau) {
  ResultTable t;
  t.add_config("experiment", "classifier_eval");
  t.add_config("degree", std::to_string(degree));
  t.add_config("tau", format_double(tau));
  const auto point = "degree=" + std::to_string(degree);
  auto rate_row = [&](const std::string& metric, std::optional<double> rate, std::size_t hits, std::size_t n) {
    if (rate) {
      t.add_rate(point, metric, hits, n);
    } else {
      t.add({point, metric, std::nan(""), 0, std::nan("")});
    }
  };
  rate_row("p_fa", m.p_fa(), m.false_positive, m.negatives());
  rate_row("p_md", m.p_md(), m.false_negative, m.positives());
  t.add_count(point, "true_positive", m.true_positive, m.positives());
  t.add_count(point, "false_negative", m.false_negative, m.positives());
  t.add_count(point, "false_positive", m.false_positive, m.negatives());
  t.add_count(point, "true_negative", m.true_negative, m.negatives());
  return t;
}

}  // namespace plnc
