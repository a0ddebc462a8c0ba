#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plnc/datagen.hpp"
#include "plnc/harness.hpp"
#include "plnc/ldpc.hpp"
#include "plnc/predictor.hpp"
#include "plnc/slot_decoder.hpp"
#include "plnc/traffic.hpp"

namespace {

using namespace plnc;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct ConfigFailure : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key=value lines; '#' starts a comment.
std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFailure("cannot read config file " + path);
  std::vector<std::string> args;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigFailure(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

// Moves "--config <path>" / "--config=<path>" out of argv and splices the
// file's settings in right after the subcommand name, so that flags given
// on the command line come later and win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigFailure("--config needs a file name");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  const auto extra = config_file_args(path);
  std::size_t at = 0;
  while (at < args.size() && args[at].starts_with("-")) ++at;
  if (at < args.size()) ++at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
  return args;
}

std::size_t resolve_thread_flag(const CLI::Option* opt, std::size_t flag_value) {
  if (opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("PLNC_RA_THREADS"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigFailure(std::string("PLNC_RA_THREADS must be a non-negative integer, got '") + env + "'");
  }
  return flag_value;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    std::size_t v = 0;
    try {
      v = std::stoul(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigFailure(std::string("bad ") + what + " '" + text + "'");
    return v;
  };
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (const auto colon = item.find(':'); colon != std::string::npos) {
      const auto lo = number(item.substr(0, colon));
      const auto hi = number(item.substr(colon + 1));
      if (lo > hi) throw ConfigFailure(std::string("empty range in ") + what);
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(number(item));
    }
  }
  if (out.empty()) throw ConfigFailure(std::string("empty ") + what);
  return out;
}

FadingSpec parse_fading(const std::string& text) {
  try {
    return FadingSpec::parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigFailure(e.what());
  }
}

SelectionPolicy parse_policy(const std::string& text) {
  try {
    return SelectionPolicy::parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigFailure(e.what());
  }
}

void echo_config(const CLI::App& sub, std::optional<std::size_t> threads, std::ostream& out) {
  out << "# command=" << sub.get_name() << '\n';
  for (const auto* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--help-all") continue;
    std::string value;
    if (opt->get_name() == "--threads" && threads) {
      value = std::to_string(*threads);
    } else if (opt->get_expected_min() == 0) {
      value = opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      value = res.empty() ? "" : res.back();
    } else {
      value = opt->get_default_str();
    }
    out << "# " << opt->get_name().substr(2) << '=' << value << '\n';
  }
}

PredictorBank load_bank(const std::string& dir) {
  if (dir.empty()) throw ConfigFailure("this policy needs --models <dir>");
  if (!std::filesystem::is_directory(dir)) throw ConfigFailure("models directory " + dir + " does not exist");
  auto bank = PredictorBank::load_dir(dir);
  if (bank.degrees().empty()) throw ConfigFailure("no m<d>.model files in " + dir);
  return bank;
}

struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string out;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c, bool with_threads = true) {
  sub->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  if (with_threads) {
    c.threads_opt = sub->add_option("--threads", c.threads,
                                    "Worker threads (0 = all cores; falls back to PLNC_RA_THREADS)")
                        ->capture_default_str();
  }
  sub->add_option("--out", c.out, "Output file")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded random access simulator with learned decoding decisions"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Help for every command");
  std::string alist;
  app.add_option("--code", alist, "Parity-check matrix in alist format (default: built-in (128,64) code)");

  // gen-data
  DatagenConfig gen;
  std::string gen_fading = "rician:0.9";
  Common gen_c;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labeled training or validation dataset");
  gen_cmd->add_option("--degree", gen.degree, "Collision degree d")->capture_default_str();
  gen_cmd->add_option("--samples", gen.samples, "Number of channel realizations")->capture_default_str();
  gen_cmd->add_option("--snr-db", gen.snr_db, "Average receive SNR per user in dB")->capture_default_str();
  gen_cmd->add_option("--fading", gen_fading, "rayleigh or rician:<factor>")->capture_default_str();
  gen_cmd->add_option("--max-iter", gen.max_iter, "BP iteration limit")->capture_default_str();
  add_common(gen_cmd, gen_c);

  // train
  TrainHyperparams hyper;
  std::string train_data;
  std::size_t train_degree = 0;
  Common train_c;
  auto* train_cmd = app.add_subcommand("train", "Train a success predictor for one collision degree");
  train_cmd->add_option("--data", train_data, "Training dataset")->required();
  train_cmd->add_option("--degree", train_degree, "Expected degree (0 = take it from the data)")->capture_default_str();
  train_cmd->add_option("--steps", hyper.steps, "Adam steps")->capture_default_str();
  train_cmd->add_option("--batch", hyper.batch_size, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--lr", hyper.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--init-var", hyper.init_variance, "Initial weight variance")->capture_default_str();
  add_common(train_cmd, train_c, false);

  // eval-model
  std::string eval_models;
  std::string eval_model;
  std::string eval_data;
  double eval_tau = 0.5;
  Common eval_c;
  auto* eval_cmd = app.add_subcommand("eval-model", "False-alarm and missed-detection rates on a dataset");
  eval_cmd->add_option("--data", eval_data, "Labeled dataset")->required();
  eval_cmd->add_option("--model", eval_model, "Model file");
  eval_cmd->add_option("--models", eval_models, "Directory of m<d>.model files");
  eval_cmd->add_option("--tau", eval_tau, "Decision threshold")->capture_default_str();
  add_common(eval_cmd, eval_c, false);

  // sim-slot
  SlotHistogramConfig slot;
  std::string slot_fading = "rayleigh";
  std::string slot_policy = "exhaustive";
  std::string slot_models;
  Common slot_c;
  auto* slot_cmd = app.add_subcommand("sim-slot", "Per-degree, per-round success counts for fixed-degree collisions");
  slot_cmd->add_option("--collision", slot.collision, "Number of colliding users")->capture_default_str();
  slot_cmd->add_option("--slots", slot.slots, "Number of slots")->capture_default_str();
  slot_cmd->add_option("--snr-db", slot.snr_db, "Average receive SNR per user in dB")->capture_default_str();
  slot_cmd->add_option("--fading", slot_fading, "rayleigh or rician:<factor>")->capture_default_str();
  slot_cmd->add_option("--policy", slot_policy, "exhaustive, sic, dnn:<tau> or top:<nu>")->capture_default_str();
  slot_cmd->add_option("--models", slot_models, "Directory of m<d>.model files");
  slot_cmd->add_option("--max-rounds", slot.decoder.max_rounds, "Decoding rounds per slot")->capture_default_str();
  slot_cmd->add_option("--max-iter", slot.decoder.max_iter, "BP iteration limit")->capture_default_str();
  slot_cmd->add_flag("--propagate", slot.decoder.propagate, "Derive codewords from accepted combinations");
  add_common(slot_cmd, slot_c);

  // sim-frame
  FrameSweepConfig frame;
  std::string frame_reps = "2";
  std::string frame_tf = "2:20";
  std::string frame_policy = "exhaustive";
  std::string frame_fading = "rician:0.9";
  std::string frame_models;
  Common frame_c;
  auto* frame_cmd = app.add_subcommand("sim-frame", "Packet loss over a sweep of repetitions and frame lengths");
  frame_cmd->add_option("--active", frame.active, "Active users per frame")->capture_default_str();
  frame_cmd->add_option("--users", frame.total_users, "Total user population")->capture_default_str();
  frame_cmd->add_option("--reps", frame_reps, "Repetition counts r, e.g. 2,3,4")->capture_default_str();
  frame_cmd->add_option("--tf", frame_tf, "Frame lengths, e.g. 2:20 or 4,8,12")->capture_default_str();
  frame_cmd->add_option("--frames", frame.frames, "Frames per point")->capture_default_str();
  frame_cmd->add_option("--policy", frame_policy, "Comma-separated policies")->capture_default_str();
  frame_cmd->add_option("--models", frame_models, "Directory of m<d>.model files");
  frame_cmd->add_option("--snr-db", frame.snr_db, "Average receive SNR per user in dB")->capture_default_str();
  frame_cmd->add_option("--fading", frame_fading, "rayleigh or rician:<factor>")->capture_default_str();
  frame_cmd->add_option("--max-rounds", frame.decoder.max_rounds, "Decoding rounds per slot")->capture_default_str();
  frame_cmd->add_option("--max-iter", frame.decoder.max_iter, "BP iteration limit")->capture_default_str();
  frame_cmd->add_flag("--propagate", frame.decoder.propagate, "Derive codewords from accepted combinations");
  add_common(frame_cmd, frame_c);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ConfigFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    const LdpcCode code = alist.empty() ? LdpcCode::default_code() : LdpcCode::from_alist_file(alist);
    std::optional<std::size_t> threads;
    for (const auto& [cmd, c] : {std::pair{gen_cmd, &gen_c}, std::pair{slot_cmd, &slot_c}, std::pair{frame_cmd, &frame_c}}) {
      if (cmd == active) threads = resolve_thread_flag(c->threads_opt, c->threads);
    }
    echo_config(*active, threads, std::cout);

    if (active == gen_cmd) {
      gen.fading = parse_fading(gen_fading);
      gen.seed = gen_c.seed;
      gen.threads = *threads;
      try {
        gen.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigFailure(e.what());
      }
      const auto data = generate_dataset(gen, code);
      save_dataset(gen_c.out, data);
      std::size_t ones = 0;
      for (const auto& s : data.samples) ones += s.labels.weight();
      std::cout << "samples=" << data.samples.size() << " positive_rate="
                << static_cast<double>(ones) / static_cast<double>(data.samples.size() * data.n_outputs()) << '\n';
    } else if (active == train_cmd) {
      hyper.seed = train_c.seed;
      try {
        hyper.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigFailure(e.what());
      }
      const auto data = load_dataset(train_data);
      if (train_degree != 0 && train_degree != data.degree()) {
        throw ConfigFailure("--degree " + std::to_string(train_degree) + " but the data hold degree " +
                            std::to_string(data.degree()));
      }
      if (data.samples.empty()) throw ConfigFailure("training data set is empty");
      TrainReport report;
      const auto model = train(data, hyper, &report);
      save_model(train_c.out, model);
      for (std::size_t i = 0; i < report.losses.size(); ++i) {
        std::cout << "checkpoint " << i << " loss " << format_double(report.losses[i]) << '\n';
      }
    } else if (active == eval_cmd) {
      if (eval_model.empty() == eval_models.empty()) throw ConfigFailure("give exactly one of --model and --models");
      if (!(eval_tau > 0.0 && eval_tau < 1.0)) throw ConfigFailure("--tau must lie in (0, 1)");
      const auto data = load_dataset(eval_data);
      PredictorBank bank;
      if (!eval_model.empty()) {
        bank.add(load_model(eval_model));
      } else {
        bank = load_bank(eval_models);
      }
      if (!bank.has(data.degree())) {
        throw ConfigFailure("no model for degree " + std::to_string(data.degree()));
      }
      const auto metrics = evaluate(bank, data, eval_tau);
      const auto table = classifier_table(metrics, data.degree(), eval_tau);
      table.save(eval_c.out);
      std::cout << table.to_string();
    } else if (active == slot_cmd) {
      slot.fading = parse_fading(slot_fading);
      slot.policy = parse_policy(slot_policy);
      slot.seed = slot_c.seed;
      slot.threads = *threads;
      try {
        slot.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigFailure(e.what());
      }
      PredictorBank bank;
      if (slot.policy.uses_predictor()) bank = load_bank(slot_models);
      const auto table = run_slot_histogram(slot, code, slot.policy.uses_predictor() ? &bank : nullptr);
      table.save(slot_c.out);
    } else if (active == frame_cmd) {
      frame.replicas = parse_list(frame_reps, "--reps");
      frame.slots_per_frame = parse_list(frame_tf, "--tf");
      frame.policies.clear();
      std::stringstream ss(frame_policy);
      for (std::string p; std::getline(ss, p, ',');) frame.policies.push_back(parse_policy(trim(p)));
      frame.fading = parse_fading(frame_fading);
      frame.seed = frame_c.seed;
      frame.threads = *threads;
      try {
        frame.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigFailure(e.what());
      }
      const bool needs_bank = std::ranges::any_of(frame.policies, [](const auto& p) { return p.uses_predictor(); });
      PredictorBank bank;
      if (needs_bank) bank = load_bank(frame_models);
      const auto table = run_frame_sweep(frame, code, needs_bank ? &bank : nullptr);
      table.save(frame_c.out);
    }
  } catch (const ConfigFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
