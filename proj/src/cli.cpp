#include "irltrack/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "irltrack/errors.hpp"

namespace irltrack {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  out += buf;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir + ": cannot create output directory");
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(p.string() + ": cannot open for writing");
  return out;
}

void write_json(const fs::path& p, const json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
  if (!out) throw IoError(p.string() + ": write failed");
}

std::string join_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    append_number(s, v[i]);
  }
  return s;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots for one irltrack run. Usage: python plot_run.py [run.csv] [out.png]"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "run.csv")
target = sys.argv[2] if len(sys.argv) > 2 else os.path.join(here, "run.png")

with open(path, newline="") as fh:
    reader = csv.reader(fh)
    header = next(reader)
    cols = {name: [] for name in header}
    for row in reader:
        for name, value in zip(header, row):
            cols[name].append(float(value))

t = cols["t"]
critic = [c for c in header if c.startswith("W") and c[1:].isdigit()]
ident = [c for c in header if c.startswith("Wi") and c[2:].isdigit()]

fig, axes = plt.subplots(5, 1, figsize=(8, 14), sharex=True)
for c in critic:
    axes[0].plot(t, cols[c], label=c)
axes[0].set_title("Critic NN weights")
axes[0].legend(ncol=4, fontsize="small")
for c in ident:
    axes[1].plot(t, cols[c], label=c)
axes[1].set_title("Identifier NN weights")
axes[1].legend(ncol=4, fontsize="small")
axes[2].plot(t, cols["g_tilde_norm"])
axes[2].set_title("Difference between actual and identified control coupling dynamics")
axes[3].plot(t, cols["x1"], label="x1")
axes[3].plot(t, cols["x2"], label="x2")
axes[3].plot(t, cols["x1d"], "--", label="x1d")
axes[3].set_title("States")
axes[3].legend()
axes[4].plot(t, cols["u"])
axes[4].set_title("Control Profile")
axes[4].set_xlabel("t [s]")
fig.tight_layout()
fig.savefig(target, dpi=120)
print(target)
)PY";

}  // namespace

std::vector<std::string> csv_columns(int n_critic, int n_identifier) {
  std::vector<std::string> c{"t", "x1", "x2", "x1d", "x2d", "u", "z1", "z2", "e_hjb", "sigma", "xi"};
  for (int i = 1; i <= n_critic; ++i) c.push_back("W" + std::to_string(i));
  for (int i = 1; i <= n_identifier; ++i) c.push_back("Wi" + std::to_string(i));
  c.push_back("g_tilde_norm");
  c.push_back("lambda_min_P");
  return c;
}

std::string csv_header(int n_critic, int n_identifier) {
  std::string s;
  for (const auto& c : csv_columns(n_critic, n_identifier)) {
    if (!s.empty()) s += ',';
    s += c;
  }
  return s;
}

std::string csv_row(const RunRow& r) {
  std::string s;
  s.reserve(512);
  auto put = [&](double v) {
    if (!s.empty()) s += ',';
    append_number(s, v);
  };
  for (double v : {r.t, r.x1, r.x2, r.x1d, r.x2d, r.u, r.z1, r.z2, r.e_hjb, r.sigma}) put(v);
  put(static_cast<double>(r.xi));
  for (Eigen::Index i = 0; i < r.W.size(); ++i) put(r.W(i));
  for (Eigen::Index i = 0; i < r.W_id.rows(); ++i)
    for (Eigen::Index j = 0; j < r.W_id.cols(); ++j) put(r.W_id(i, j));
  put(r.g_tilde_norm);
  put(r.lambda_min_P);
  return s;
}

json metrics_json(const Metrics& m) {
  json segs = json::array();
  for (const auto& s : m.segments)
    segs.push_back({{"start", s.start}, {"end", s.end}, {"tracking_error", s.tracking_error}, {"g_tilde", s.g_tilde}});
  json j = {{"rows", m.rows},
            {"max_abs_u", m.max_abs_u},
            {"final_g_tilde_norm", m.final_g_tilde_norm},
            {"segments", segs},
            {"critic_settling_time", m.critic_settling_time},
            {"max_W_norm", m.max_W_norm},
            {"W_dot_mean_first", m.W_dot_mean_first},
            {"W_dot_mean_last", m.W_dot_mean_last},
            {"max_phi_norm", m.max_phi_norm},
            {"max_theta_bar_norm", m.max_theta_bar_norm},
            {"normalizer_violations", m.normalizer_violations},
            {"snapshots_accepted", m.snapshots_accepted},
            {"lambda_monotonicity_violations", m.lambda_monotonicity_violations},
            {"max_pi_asymmetry", m.max_pi_asymmetry},
            {"min_pi_eig", m.min_pi_eig},
            {"pi_monitor_trips", m.pi_monitor_trips},
            {"indicator_violations", m.indicator_violations},
            {"max_dtheta_identity_gap", m.max_dtheta_identity_gap},
            {"final_W_id_error", m.final_W_id_error}};
  j["W_id_converged_at"] = m.W_id_converged_at ? json(*m.W_id_converged_at) : json(nullptr);
  return j;
}

Metrics cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const fs::path dir = ensure_dir(out_dir);
  write_json(dir / "config.json", serialize(cfg));

  std::ofstream csv;
  RowSink sink;
  std::string line;
  if (cfg.output.csv) {
    csv = open_out(dir / "run.csv");
    const auto basis = IdentifierBasis::from_id(cfg.sim.identifier.basis);
    const int n_id = basis.regressor_dim() * basis.state_dim();
    csv << csv_header(static_cast<int>(cfg.sim.critic.gains.K1.size()), n_id) << '\n';
    sink = [&](const RunRow& r) {
      line = csv_row(r);
      line += '\n';
      csv.write(line.data(), static_cast<std::streamsize>(line.size()));
    };
  }
  const Metrics m = run(cfg.sim, sink);
  if (cfg.output.csv) {
    csv.flush();
    if (!csv) throw IoError((dir / "run.csv").string() + ": write failed");
  }
  write_json(dir / "metrics.json", metrics_json(m));
  if (cfg.output.plots && cfg.output.csv) cmd_plot(dir.string());
  return m;
}

std::size_t worker_count() {
  const char* env = std::getenv("IRLTRACK_WORKERS");
  if (env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError(std::string("IRLTRACK_WORKERS: expected a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& base, const std::vector<Variant>& variants,
                                    const std::string& out_dir, std::size_t workers) {
  const fs::path dir = ensure_dir(out_dir);
  std::vector<Variant> list = variants;
  if (list.empty()) list.push_back({base.name, json::object()});

  std::vector<AblationRow> rows(list.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < list.size(); i = next++) {
      AblationRow& row = rows[i];
      row.variant = list[i].name;
      try {
        const ExperimentConfig cfg = apply_variant(base, list[i]);
        row.metrics = cmd_run(cfg, (dir / list[i].name).string());
        row.status = "ok";
      } catch (const ConfigError& e) {
        row.status = "config_error";
        row.message = e.what();
      } catch (const NumericalFailure& e) {
        row.status = "numerical_failure";
        row.message = e.what();
      } catch (const IoError& e) {
        row.status = "io_error";
        row.message = e.what();
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, list.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto out = open_out(dir / "table.csv");
  out << "variant,status,steady_state_error,final_g_tilde_norm,critic_settling_time,max_abs_u,"
         "segment_tracking_errors,segment_g_tilde,message\n";
  for (const auto& row : rows) {
    std::string line = csv_escape(row.variant) + "," + row.status + ",";
    if (row.metrics) {
      const Metrics& m = *row.metrics;
      std::vector<double> track, gt;
      for (const auto& s : m.segments) {
        track.push_back(s.tracking_error);
        gt.push_back(s.g_tilde);
      }
      double mean = 0.0;
      for (double v : track) mean += v;
      if (!track.empty()) mean /= static_cast<double>(track.size());
      append_number(line, mean);
      line += ',';
      append_number(line, m.final_g_tilde_norm);
      line += ',';
      append_number(line, m.critic_settling_time);
      line += ',';
      append_number(line, m.max_abs_u);
      line += "," + join_list(track) + "," + join_list(gt) + ",";
    } else {
      line += ",,,,,,";
    }
    line += csv_escape(row.message);
    out << line << '\n';
  }
  if (!out) throw IoError((dir / "table.csv").string() + ": write failed");
  return rows;
}

std::string cmd_plot(const std::string& run_dir) {
  const fs::path csv_path = fs::path(run_dir) / "run.csv";
  std::ifstream in(csv_path);
  if (!in) throw IoError(csv_path.string() + ": not found");
  std::string header, first;
  if (!std::getline(in, header) || header.empty()) throw IoError(csv_path.string() + ": empty CSV");
  if (!std::getline(in, first) || first.empty()) throw IoError(csv_path.string() + ": CSV has no data rows");

  std::vector<std::string> have;
  std::stringstream ss(header);
  for (std::string c; std::getline(ss, c, ',');) have.push_back(c);
  std::vector<std::string> missing;
  for (const char* need : {"t", "x1", "x2", "x1d", "u", "g_tilde_norm", "W1", "Wi1"})
    if (std::find(have.begin(), have.end(), need) == have.end()) missing.push_back(need);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError(csv_path.string() + ": missing columns: " + list);
  }

  const fs::path script = fs::path(run_dir) / "plot_run.py";
  auto out = open_out(script);
  out << kPlotScript;
  if (!out) throw IoError(script.string() + ": write failed");
  return script.string();
}

}  // namespace irltrack
