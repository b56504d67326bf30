// rowsim: run, verify, size and sweep AI-row power scenarios.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rowsim/error.hpp"
#include "rowsim/report.hpp"
#include "rowsim/runner.hpp"
#include "rowsim/scenario.hpp"
#include "rowsim/sizing.hpp"
#include "rowsim/waveform_log.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kError = 2;

std::string out_root() {
  const char* env = std::getenv("ROWSIM_OUT");
  return env && *env ? env : "rowsim-out";
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw rowsim::Error(rowsim::ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<double> parse_list(const std::string& text, std::string_view dim) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    out.push_back(rowsim::parse_quantity(item, dim));
  }
  return out;
}

int cmd_run(const std::string& path, std::string out_dir, bool quiet) {
  const rowsim::Scenario sc = rowsim::load_scenario(path);
  if (out_dir.empty()) out_dir = (std::filesystem::path(out_root()) / sc.name).string();
  const rowsim::RunOutcome o = rowsim::run_scenario(sc);
  rowsim::write_artifacts(o, out_dir);
  if (!quiet) std::cout << rowsim::compliance_to_text(o.report);
  std::cout << "artifacts: " << out_dir << "\n";
  return o.report.pass ? kPass : kFail;
}

int cmd_verify(const std::string& log_path, const std::string& captures, const std::string& scenario, double v_nom,
               bool json) {
  rowsim::ContractLimits limits;
  std::optional<rowsim::LoopParams> loop;
  if (!scenario.empty()) {
    const rowsim::Scenario sc = rowsim::load_scenario(scenario);
    limits = sc.limits;
    v_nom = sc.bus.v_nom_v;
    if (sc.bank.n_shelves > 0) {
      loop = rowsim::LoopParams{rowsim::equivalent_droop_ohm(sc.shelf, sc.bank.n_shelves), sc.bus.c_bus_mf * 1e-3,
                                sc.shelf.loop_bw_hz};
    }
  }
  rowsim::WaveformLog log = rowsim::log_from_csv(read_text(log_path), v_nom);
  if (!captures.empty()) rowsim::captures_from_csv(read_text(captures), log);
  const auto rep = rowsim::verify(log, limits, loop);
  std::cout << (json ? rowsim::compliance_to_json(rep) : rowsim::compliance_to_text(rep));
  return rep.pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rowsim - AI-row power architecture simulator and contract verifier"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Simulate a scenario, write log, events and compliance report");
  std::string run_path;
  std::string run_out;
  bool run_quiet = false;
  run->add_option("scenario", run_path, "Scenario file (JSON)")->required();
  run->add_option("-o,--out", run_out, "Output directory (default $ROWSIM_OUT/<name>)");
  run->add_flag("-q,--quiet", run_quiet, "Only print the artifact location");

  auto* ver = app.add_subcommand("verify", "Check a logged waveform against the voltage contract");
  std::string ver_log;
  std::string ver_captures;
  std::string ver_scenario;
  double ver_vnom = 800.0;
  bool ver_json = false;
  ver->add_option("log", ver_log, "Waveform CSV")->required();
  ver->add_option("--captures", ver_captures, "Full-rate capture CSV");
  ver->add_option("--scenario", ver_scenario, "Scenario supplying limits, v_nom and loop parameters");
  ver->add_option("--v-nom", ver_vnom, "Nominal bus voltage in V");
  ver->add_flag("--json", ver_json, "Emit JSON");

  auto* size = app.add_subcommand("size", "Size the DRU bank, bus capacitance and bridge energy");
  std::string s_pavg = "1 MW";
  std::string s_alpha = "0.25";
  std::string s_tsurge = "60 s";
  std::string s_step;
  std::string s_latency = "75 us";
  std::string s_dv = "0.02";
  std::string s_bridge = "3 s";
  std::string s_scenario;
  double s_life = rowsim::kDefaultLifecycle;
  bool s_json = false;
  size->add_option("--p-avg", s_pavg, "Row average power");
  size->add_option("--alpha", s_alpha, "Burst overage fraction");
  size->add_option("--t-surge", s_tsurge, "Surge duration");
  size->add_option("--dp-step", s_step, "Largest load step (default alpha * p_avg)");
  size->add_option("--latency", s_latency, "DRU engagement latency");
  size->add_option("--dv", s_dv, "Allowed first dip as a fraction");
  size->add_option("--t-bridge", s_bridge, "Bridging time");
  size->add_option("--lifecycle", s_life, "Lifecycle multiplier");
  size->add_option("--scenario", s_scenario, "Take envelope and shelf from a scenario");
  size->add_flag("--json", s_json, "Emit JSON");

  auto* sweep = app.add_subcommand("sweep", "Grid over burst alpha and surge length, or pod utilization");
  std::string w_path;
  std::string w_alpha;
  std::string w_tsurge;
  std::string w_u;
  bool w_keep = false;
  unsigned w_threads = 0;
  sweep->add_option("scenario", w_path, "Template scenario (required for alpha/t-surge grids)");
  sweep->add_option("--alpha", w_alpha, "Comma list of alpha values");
  sweep->add_option("--t-surge", w_tsurge, "Comma list of surge durations with units");
  sweep->add_option("--u", w_u, "Comma list of pod utilizations (oversubscription sweep)");
  sweep->add_flag("--keep-bank", w_keep, "Do not re-size the bank per cell");
  sweep->add_option("-j,--threads", w_threads, "Concurrent cells (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kError;
  }

  try {
    if (*run) return cmd_run(run_path, run_out, run_quiet);
    if (*ver) return cmd_verify(ver_log, ver_captures, ver_scenario, ver_vnom, ver_json);
    if (*size) {
      rowsim::SizingInputs in;
      if (!s_scenario.empty()) {
        const auto sc = rowsim::load_scenario(s_scenario);
        in.env = sc.env;
        in.shelf = sc.shelf;
        in.v_bus_v = sc.bus.v_nom_v;
        in.latency_us = sc.bus.dru_latency_us;
        in.t_bridge_s = sc.pod.t_bridge_s;
      } else {
        in.env.p_avg_kw = rowsim::parse_quantity(s_pavg, "power");
        in.env.alpha_max = rowsim::parse_quantity(s_alpha, "fraction");
        in.env.t_surge_s = rowsim::parse_quantity(s_tsurge, "time");
        in.latency_us = rowsim::parse_quantity(s_latency, "time_us");
        in.t_bridge_s = rowsim::parse_quantity(s_bridge, "time");
      }
      in.dv_frac = rowsim::parse_quantity(s_dv, "fraction");
      if (!s_step.empty()) in.dp_step_kw = rowsim::parse_quantity(s_step, "power");
      in.lifecycle = s_life;
      const auto rep = rowsim::size_row(in);
      std::cout << (s_json ? rowsim::sizing_to_json(rep) : rowsim::sizing_to_text(rep));
      return rep.pass() ? kPass : kFail;
    }
    if (*sweep) {
      if (!w_u.empty()) {
        rowsim::PodConfig pod;
        if (!w_path.empty()) pod = rowsim::load_scenario(w_path).pod;
        std::cout << rowsim::oversub_table(rowsim::sweep_oversubscription(pod, parse_list(w_u, "fraction")));
        return kPass;
      }
      rowsim::SweepGrid grid;
      grid.alpha = parse_list(w_alpha, "fraction");
      grid.t_surge_s = parse_list(w_tsurge, "time");
      grid.resize = !w_keep;
      if (grid.alpha.empty() || grid.t_surge_s.empty()) {
        std::cout << rowsim::sweep_table({});
        return kPass;
      }
      if (w_path.empty()) throw rowsim::Error(rowsim::ErrorCode::InvalidArgument, "sweep needs a template scenario");
      const auto rows = rowsim::sweep_bursts(rowsim::load_scenario(w_path), grid, w_threads);
      const std::string table = rowsim::sweep_table(rows);
      std::cout << table;
      const auto dir = std::filesystem::path(out_root());
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "sweep.csv") << table;
      const bool all = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
      return all ? kPass : kFail;
    }
  } catch (const std::exception& e) {
    std::cerr << "rowsim: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
