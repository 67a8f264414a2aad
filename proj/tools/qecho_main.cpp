#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qecho/config.hpp"
#include "qecho/csv.hpp"
#include "qecho/oracle_check.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out-dir", flags.out_dir, "output directory (overrides [run] out_dir)");
  cmd->add_option("--threads", flags.threads, "worker threads (overrides [run] threads)");
  cmd->add_option("--seed", flags.seed, "random-profile seed (overrides [run] seed)");
}

qecho::Config effective_config(const CommonFlags& flags) {
  qecho::Config config = qecho::load_config(flags.config_path);
  if (flags.out_dir) config.out_dir = *flags.out_dir;
  if (flags.threads) config.options.threads = *flags.threads;
  if (flags.seed) config.seed = *flags.seed;
  return config;
}

std::string prepare_out_dir(const qecho::Config& config) {
  std::filesystem::create_directories(config.out_dir);
  return config.out_dir;
}

int run_quench(const CommonFlags& flags) {
  const qecho::Config config = effective_config(flags);
  const qecho::QuenchProtocol protocol = qecho::build_protocol(config);
  const qecho::SeriesBundle bundle = qecho::run_series(protocol, config.options);
  const std::string dir = prepare_out_dir(config);
  qecho::write_series_csv(dir + "/series.csv", bundle.records);
  qecho::write_spectrum_csv(dir + "/spectrum.csv", bundle.spectrum);
  if (config.options.detect)
    qecho::write_transitions_csv(dir + "/transitions.csv", bundle.transitions);
  std::cout << "wrote " << bundle.records.size() << " series rows and " << bundle.spectrum.size()
            << " spectrum rows to " << dir << "\n";
  if (config.options.detect)
    std::cout << "detected " << bundle.transitions.size() << " transition(s)\n";
  return 0;
}

int run_loschmidt(const CommonFlags& flags) {
  const qecho::Config config = effective_config(flags);
  const qecho::QuenchProtocol protocol = qecho::build_protocol(config);
  const qecho::RunOptions& options = config.options;
  if (options.time_steps < 2 || options.time_max <= 0.0)
    qecho::fail(qecho::Errc::config_invalid, "grid: need time_steps >= 2 and time_max > 0");

  std::vector<qecho::LoschmidtPoint> points(options.time_steps + 1);
  const double dt = options.time_max / options.time_steps;
  const bool uniform = protocol.pre.uniform() && protocol.post.uniform();
  if (uniform) {
    qecho::LoschmidtProduct product(protocol);
    for (size_t i = 0; i < points.size(); ++i)
      points[i] = product.at(i * dt, options.detector.gamma_cap);
  } else {
    qecho::LoschmidtGeneral general(protocol);
    for (size_t i = 0; i < points.size(); ++i)
      points[i] = general.at(i * dt, options.detector.gamma_cap);
  }
  const std::string dir = prepare_out_dir(config);
  qecho::write_loschmidt_csv(dir + "/loschmidt.csv", points);
  std::cout << "wrote " << points.size() << " rows to " << dir << "/loschmidt.csv\n";
  return 0;
}

int run_transitions(const CommonFlags& flags, const std::string& series_path) {
  const qecho::Config config = effective_config(flags);
  const qecho::QuenchProtocol protocol = qecho::build_protocol(config);
  const std::vector<qecho::SeriesRecord> records = qecho::read_series_csv(series_path);
  if (records.size() < 3)
    qecho::fail(qecho::Errc::config_invalid, series_path + ": need at least three rows");
  const double dt = records[1].t - records[0].t;
  for (size_t i = 0; i + 1 < records.size(); ++i)
    if (std::abs(records[i + 1].t - records[i].t - dt) > 1e-9 * (1.0 + std::abs(dt)))
      qecho::fail(qecho::Errc::config_invalid, series_path + ": time grid must be uniform");
  if (records[0].t != 0.0)
    qecho::fail(qecho::Errc::config_invalid, series_path + ": time grid must start at 0");

  qecho::RunOptions options = config.options;
  options.time_steps = static_cast<int>(records.size()) - 1;
  options.time_max = records.back().t;
  options.detect = true;
  options.loschmidt = qecho::Toggle::off;
  const qecho::SeriesBundle bundle = qecho::run_series(protocol, options);
  const std::string dir = prepare_out_dir(config);
  qecho::write_transitions_csv(dir + "/transitions.csv", bundle.transitions);
  std::cout << "detected " << bundle.transitions.size() << " transition(s) on the "
            << records.size() << "-point grid of " << series_path << "\n";
  return 0;
}

int run_oracle_check(const CommonFlags& flags) {
  qecho::QuenchProtocol protocol;
  qecho::OracleCheckOptions options;
  if (!flags.config_path.empty()) {
    qecho::Config config = effective_config(flags);
    protocol = qecho::build_protocol(config);
    options.time_count = config.options.time_steps + 1;
    options.time_max = config.options.time_max;
    options.eps_deg = config.options.detector.eps_deg;
  } else {
    protocol = qecho::default_oracle_protocol();
  }
  if (protocol.pre.length > 8)
    qecho::fail(qecho::Errc::config_invalid, "oracle-check supports length <= 8");
  const qecho::OracleCheckReport report = qecho::run_oracle_check(protocol, options);
  std::printf("echo        max dev %.3e over %d points  (tol %.1e)\n", report.max_echo_dev,
              report.echo_points, options.echo_tol);
  if (report.degenerate_echo_points > 0)
    std::printf("echo (deg)  max dev %.3e over %d points\n", report.max_echo_dev_degenerate,
                report.degenerate_echo_points);
  std::printf("entropy     max dev %.3e over %d points  (tol %.1e)\n", report.max_entropy_dev,
              report.points, options.entropy_tol);
  std::printf("variance    max dev %.3e over %d points  (tol %.1e)\n", report.max_variance_dev,
              report.points, options.variance_tol);
  std::printf("correlation max dev %.3e over %d points  (tol %.1e)\n",
              report.max_correlation_dev, report.points, options.correlation_tol);
  std::printf("%s\n", report.passed ? "PASS" : "FAIL");
  return report.passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subsystem entanglement dynamics for two-band quenches"};
  app.require_subcommand(1);

  CommonFlags quench_flags, loschmidt_flags, transition_flags, oracle_flags;
  std::string series_path;

  CLI::App* quench = app.add_subcommand("quench", "run a quench and write the series CSVs");
  add_common_flags(quench, quench_flags, true);

  CLI::App* loschmidt = app.add_subcommand("loschmidt", "compute the return amplitude series");
  add_common_flags(loschmidt, loschmidt_flags, true);

  CLI::App* transitions =
      app.add_subcommand("transitions", "re-run transition detection for an existing series");
  add_common_flags(transitions, transition_flags, true);
  transitions->add_option("--series", series_path, "existing series.csv")->required();

  CLI::App* oracle = app.add_subcommand("oracle-check", "compare against the exact many-body solver");
  add_common_flags(oracle, oracle_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (quench->parsed()) return run_quench(quench_flags);
    if (loschmidt->parsed()) return run_loschmidt(loschmidt_flags);
    if (transitions->parsed()) return run_transitions(transition_flags, series_path);
    if (oracle->parsed()) return run_oracle_check(oracle_flags);
  } catch (const qecho::Error& error) {
    std::cerr << "error [" << qecho::errc_name(error.code()) << "]: " << error.what() << "\n";
    return error.code() == qecho::Errc::config_invalid ? 2 : 3;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 3;
  }
  return 0;
}
