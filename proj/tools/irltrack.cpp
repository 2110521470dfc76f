// irltrack: run / ablate / plot front end. Exit codes: 0 ok, 2 config or
// I/O error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "irltrack/cli.hpp"
#include "irltrack/errors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigOrIo = 2;
constexpr int kNumerical = 3;

void print_summary(const irltrack::Metrics& m) {
  std::printf("rows %zu  max|u| %.6g  final |g-g_hat| %.4g  critic settling %.3g s\n", m.rows, m.max_abs_u,
              m.final_g_tilde_norm, m.critic_settling_time);
  for (const auto& s : m.segments)
    std::printf("  segment [%g, %g): mean |x1-x1d| %.4g  mean |g-g_hat| %.4g\n", s.start, s.end, s.tracking_error,
                s.g_tilde);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identifier-critic IRL tracking controller simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, variants_path, run_dir;

  auto* run = app.add_subcommand("run", "Simulate one configuration");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (default: output.dir from the config)");

  auto* ablate = app.add_subcommand("ablate", "Run named variants of a base config in parallel (IRLTRACK_WORKERS)");
  ablate->add_option("--config", config_path, "Base experiment config (JSON)")->required();
  ablate->add_option("--variants", variants_path, "Variants file (JSON)")->required();
  ablate->add_option("--out", out_dir, "Output directory")->required();

  auto* plot = app.add_subcommand("plot", "Write a matplotlib script for a finished run");
  plot->add_option("--run", run_dir, "Run directory containing run.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigOrIo;
  }

  try {
    if (*run) {
      const auto cfg = irltrack::parse_config_file(config_path);
      const std::string dir = out_dir.empty() ? cfg.output.dir : out_dir;
      print_summary(irltrack::cmd_run(cfg, dir));
      std::printf("wrote %s\n", dir.c_str());
    } else if (*ablate) {
      const auto base = irltrack::parse_config_file(config_path);
      const auto variants = irltrack::parse_variants_file(variants_path);
      const auto rows = irltrack::cmd_ablate(base, variants, out_dir, irltrack::worker_count());
      bool any_ok = false, any_numerical = false;
      for (const auto& r : rows) {
        std::printf("%-24s %s%s%s\n", r.variant.c_str(), r.status.c_str(), r.message.empty() ? "" : ": ",
                    r.message.c_str());
        any_ok = any_ok || r.status == "ok";
        any_numerical = any_numerical || r.status == "numerical_failure";
      }
      std::printf("wrote %s/table.csv\n", out_dir.c_str());
      if (!any_ok) return any_numerical ? kNumerical : kConfigOrIo;
    } else if (*plot) {
      std::printf("wrote %s\n", irltrack::cmd_plot(run_dir).c_str());
    }
  } catch (const irltrack::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const irltrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigOrIo;
  } catch (const irltrack::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kConfigOrIo;
  } catch (const irltrack::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigOrIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
