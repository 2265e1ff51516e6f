#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qet/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

void write_text(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::fputs(body.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qet::cli::ConfigError("cannot open output file: " + path);
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qet;

  CLI::App app{"Quantum energy teleportation experiment runner"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print help");
  app.set_version_flag("--version", std::string(cli::kToolVersion));

  // ---- run ----
  auto* run_cmd = app.add_subcommand("run", "Run one experiment and write its report");
  run_cmd->set_help_flag("--help", "Print help");
  std::string config_path, variant, profile = "none", phi_mode = "closed_form";
  std::string output, format;
  double h = 0, k = 0, phi_value = 0;
  std::uint64_t shots = 0, seed = 0;
  bool mitigation = false;
  run_cmd->add_option("--config", config_path, "config file (key = value lines)");
  run_cmd->add_option("--variant", variant, "minimal | miso | simo");
  run_cmd->add_option("--h", h, "transverse field strength");
  run_cmd->add_option("--k", k, "coupling strength");
  run_cmd->add_option("--shots", shots, "shots per observable circuit");
  run_cmd->add_option("--seed", seed, "sampler seed");
  run_cmd->add_option("--profile", profile, "readout profile name or file ('none')");
  run_cmd->add_flag("--mitigation", mitigation, "apply calibration-matrix mitigation");
  std::string mitigation_method = "nnls";
  run_cmd->add_option("--mitigation-method", mitigation_method,
                      "nnls | inverse (clip negatives, renormalize)");
  run_cmd->add_option("--phi-mode", phi_mode, "closed_form | optimized | explicit:<radians>");
  run_cmd->add_option("--output", output, "output path (default stdout)");
  run_cmd->add_option("--format", format, "csv | json");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "Optimal-phi summaries over an (h, k) grid");
  sweep_cmd->set_help_flag("--help", "Print help");
  std::string sweep_variant = "simo", sweep_h, sweep_k, sweep_out, sweep_fmt = "csv";
  sweep_cmd->add_option("--variant", sweep_variant, "minimal | miso | simo");
  sweep_cmd->add_option("--h", sweep_h, "comma-separated h values")->required();
  sweep_cmd->add_option("--k", sweep_k, "comma-separated k values")->required();
  sweep_cmd->add_option("--output", sweep_out, "output path (default stdout)");
  sweep_cmd->add_option("--format", sweep_fmt, "csv | json");

  // ---- compare ----
  auto* compare_cmd =
      app.add_subcommand("compare", "Merge report files into a comparison table");
  std::vector<std::string> report_paths;
  std::string paper_csv = "data/paper_table1.csv", compare_out, compare_fmt = "csv";
  compare_cmd->add_option("reports", report_paths, "report files (.json or .csv)")->required();
  compare_cmd->add_option("--reference", paper_csv, "published-values CSV");
  compare_cmd->add_option("--output", compare_out, "output path (default stdout)");
  compare_cmd->add_option("--format", compare_fmt, "csv | json");

  // ---- profiles ----
  auto* profiles_cmd = app.add_subcommand("profiles", "Readout profile utilities");
  auto* profiles_list = profiles_cmd->add_subcommand("list", "List bundled profiles");

  // ---- selftest ----
  auto* selftest_cmd = app.add_subcommand("selftest", "Quick invariant check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      cli::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = cli::load_config_file(config_path);
      if (run_cmd->count("--variant")) cfg.variant = variant;
      if (run_cmd->count("--h")) cfg.h = h;
      if (run_cmd->count("--k")) cfg.k = k;
      if (run_cmd->count("--shots")) cfg.shots = shots;
      if (run_cmd->count("--seed")) cfg.seed = seed;
      if (run_cmd->count("--profile")) cfg.backend_profile = profile;
      if (run_cmd->count("--mitigation")) cfg.mitigation = mitigation;
      if (run_cmd->count("--mitigation-method")) cfg.mitigation_method = mitigation_method;
      if (run_cmd->count("--phi-mode")) {
        if (phi_mode == "closed_form") cfg.phi_mode = cli::PhiMode::ClosedForm;
        else if (phi_mode == "optimized") cfg.phi_mode = cli::PhiMode::Optimized;
        else if (phi_mode.rfind("explicit:", 0) == 0) {
          cfg.phi_mode = cli::PhiMode::Explicit;
          cfg.phi_value = std::stod(phi_mode.substr(9));
        } else throw cli::ConfigError("bad --phi-mode: " + phi_mode);
      }
      if (run_cmd->count("--output")) cfg.output = output;
      if (run_cmd->count("--format")) cfg.format = format;
      // re-validate merged config through the parser path
      std::ostringstream echo;
      echo << "variant = " << cfg.variant << "\nh = " << cfg.h << "\nk = " << cfg.k
           << "\nshots = " << cfg.shots << "\nseed = " << cfg.seed << "\nformat = "
           << cfg.format << "\n";
      cli::parse_config(echo.str());
      (void)phi_value;
      cli::write_report(cli::run_experiment(cfg));
      return kExitOk;
    }
    if (*sweep_cmd) {
      cli::SweepConfig cfg;
      cfg.variant = sweep_variant;
      cfg.hs = parse_list(sweep_h);
      cfg.ks = parse_list(sweep_k);
      cfg.output = sweep_out;
      cfg.format = sweep_fmt;
      const auto rep = cli::run_sweep(cfg);
      write_text(cfg.output, cfg.format == "json" ? cli::sweep_to_json(rep)
                                                  : cli::sweep_to_csv(rep));
      return kExitOk;
    }
    if (*compare_cmd) {
      std::vector<cli::ExperimentReport> reports;
      for (const auto& path : report_paths) {
        std::ifstream in(path);
        if (!in) throw cli::ConfigError("cannot open report: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        reports.push_back(path.size() > 5 && path.substr(path.size() - 5) == ".json"
                              ? cli::report_from_json(ss.str())
                              : cli::report_from_csv(ss.str()));
      }
      const auto table = cli::compare_table(reports, paper_csv);
      for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
      write_text(compare_out, compare_fmt == "json" ? cli::compare_to_json(table)
                                                    : cli::compare_to_csv(table));
      return kExitOk;
    }
    if (*profiles_cmd || *profiles_list) {
      for (const auto& p : noise::builtin_profiles()) std::fputs(
          noise::serialize_profile(p).c_str(), stdout);
      return kExitOk;
    }
    if (*selftest_cmd) {
      const auto failures = cli::selftest();
      if (failures.empty()) {
        std::puts("selftest: all checks passed");
        return kExitOk;
      }
      for (const auto& f : failures) std::cerr << "selftest failure: " << f << "\n";
      return kExitInvariant;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cli::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
