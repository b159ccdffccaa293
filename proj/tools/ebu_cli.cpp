// Command-line front end: training runs, the chain figure, operator checks,
// the maze benchmark and IDX file inspection.
//
// Exit codes: 0 success, 1 config error, 2 runtime failure, 3 verification failure.

#include <CLI11.hpp>

#include <array>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>

#include "ebu/config.hpp"
#include "ebu/error.hpp"
#include "ebu/harness.hpp"
#include "ebu/idx.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kVerificationFailed = 3;

/// Turns trailing `--section.key value` (or `--section.key=value`) pairs into config lines.
std::string overrides_as_text(const std::vector<std::string>& extras) {
  std::string text;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw ebu::ConfigError("unexpected argument " + arg);
    std::string key = arg.substr(2);
    std::string value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw ebu::ConfigError("missing value for " + arg);
      value = extras[++i];
    }
    text += key + " = " + value + "\n";
  }
  return text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ebu::ConfigError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_rows(const std::string& path, const std::vector<ebu::MetricRow>& rows) {
  if (path.empty() || path == "-") {
    ebu::write_csv(std::cout, rows);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ebu::Error("cannot write " + path);
  ebu::write_csv(out, rows);
}

int cmd_train(const std::string& path, const std::vector<std::string>& extras) {
  ebu::RunConfig config = ebu::parse_config(read_file(path) + "\n" + overrides_as_text(extras));
  auto result = ebu::run_experiment(config);
  write_rows(config.run.output, result.rows);
  return kOk;
}

int cmd_verify(std::uint64_t seed, std::size_t draws, std::size_t fp_draws) {
  ebu::OperatorCheckSettings settings;
  settings.contraction_draws = draws;
  settings.fixed_point_draws = fp_draws;
  ebu::Rng rng(seed);
  auto report = ebu::verify_operator(settings, rng);
  ebu::print_operator_report(std::cout, report);
  return report.passed() ? kOk : kVerificationFailed;
}

int cmd_fig1(std::size_t max_updates, std::size_t trials, std::uint64_t seed) {
  ebu::Rng rng(seed);
  auto curve = ebu::fig1_probability_curve(max_updates, trials, rng);
  std::cout << "updates,ebu,uniform\n";
  for (std::size_t k = 0; k < curve.updates.size(); ++k)
    std::cout << curve.updates[k] << ',' << curve.ebu[k] << ',' << curve.uniform[k] << '\n';
  return kOk;
}

int cmd_maze_bench(const std::string& path, const std::vector<std::string>& extras) {
  // Overrides are appended as text so bench.* keys share the file's validation.
  std::string text = read_file(path) + "\n" + overrides_as_text(extras);
  auto [config, settings] = ebu::parse_maze_bench(text);
  auto result = ebu::run_maze_bench(config, settings);
  ebu::print_maze_bench(std::cout, result);
  if (!config.run.output.empty()) write_rows(config.run.output, result.rows);
  return kOk;
}

int cmd_idx_inspect(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ebu::Error("cannot open " + path);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 4) throw ebu::FormatError("file too short for an IDX header");
  std::uint32_t magic = (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                        (std::uint32_t{bytes[2]} << 8) | bytes[3];
  if (magic == ebu::kIdxImageMagic) {
    auto set = ebu::parse_idx_images(bytes);
    std::cout << "kind=images\ncount=" << set.count << "\nrows=" << set.rows << "\ncols=" << set.cols << '\n';
    if (set.count > 0) {
      double sum = 0.0;
      for (auto p : set.pixels) sum += p;
      std::cout << "mean_pixel=" << std::fixed << std::setprecision(3) << sum / static_cast<double>(set.pixels.size())
                << '\n';
    }
  } else if (magic == ebu::kIdxLabelMagic) {
    auto labels = ebu::parse_idx_labels(bytes);
    std::array<std::size_t, 256> hist{};
    for (auto l : labels) ++hist[l];
    std::cout << "kind=labels\ncount=" << labels.size() << '\n';
    for (std::size_t i = 0; i < hist.size(); ++i)
      if (hist[i]) std::cout << "label_" << i << '=' << hist[i] << '\n';
  } else {
    throw ebu::FormatError("unknown IDX magic number");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Episodic backward update experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train on a config file; writes metric CSV");
  train->add_option("config", config_path, "Config file")->required();
  train->allow_extras();

  std::uint64_t seed = 0;
  std::size_t draws = 200;
  std::size_t fp_draws = 50;
  auto* verify = app.add_subcommand("verify-operator", "Check contraction and fixed point of the backward operator");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--draws", draws, "Random contraction draws");
  verify->add_option("--fixed-point-draws", fp_draws, "Random fixed-point MDPs");

  std::size_t max_updates = 60;
  std::size_t trials = 10000;
  auto* fig1 = app.add_subcommand("fig1", "Optimal-policy probability on the chain versus update count");
  fig1->add_option("--max-updates", max_updates, "Largest update count");
  fig1->add_option("--trials", trials, "Monte-Carlo trials for uniform sampling");
  fig1->add_option("--seed", seed, "RNG seed");

  auto* bench = app.add_subcommand("maze-bench", "Relative path length of each learner on generated mazes");
  bench->add_option("config", config_path, "Config file")->required();
  bench->allow_extras();

  std::string idx_path;
  auto* idx = app.add_subcommand("idx-inspect", "Print the header and summary of an IDX file");
  idx->add_option("file", idx_path, "IDX file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return cmd_train(config_path, train->remaining());
    if (*verify) return cmd_verify(seed, draws, fp_draws);
    if (*fig1) return cmd_fig1(max_updates, trials, seed);
    if (*bench) return cmd_maze_bench(config_path, bench->remaining());
    if (*idx) return cmd_idx_inspect(idx_path);
  } catch (const ebu::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
