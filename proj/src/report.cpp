#include "qet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qet::cli {

using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

protocol::ProtocolVariant variant_from_string(const std::string& s) {
  if (s == "minimal") return protocol::ProtocolVariant::Minimal;
  if (s == "miso") return protocol::ProtocolVariant::Miso;
  if (s == "simo") return protocol::ProtocolVariant::Simo;
  throw ConfigError("unknown variant: " + s);
}

model::ModelInstance build_model(const ExperimentConfig& cfg) {
  model::ModelParams params;
  params.h = cfg.h;
  params.k = cfg.k;
  if (cfg.variant == "minimal") {
    params.variant = model::Variant::Minimal2;
    return model::build_minimal(params);
  }
  params.variant = model::Variant::Extended3;
  return model::build_extended(params);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

//=========================================================================
// Config
//=========================================================================

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto notspace = line.find_first_not_of(" \t\r");
    if (notspace == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "variant") cfg.variant = value;
      else if (key == "h") cfg.h = std::stod(value);
      else if (key == "k") cfg.k = std::stod(value);
      else if (key == "shots") cfg.shots = std::stoull(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "backend_profile") cfg.backend_profile = value;
      else if (key == "mitigation") {
        if (value != "true" && value != "false")
          throw ConfigError("mitigation must be true or false");
        cfg.mitigation = value == "true";
      } else if (key == "phi_mode") {
        if (value == "closed_form") cfg.phi_mode = PhiMode::ClosedForm;
        else if (value == "optimized") cfg.phi_mode = PhiMode::Optimized;
        else if (value.rfind("explicit:", 0) == 0) {
          cfg.phi_mode = PhiMode::Explicit;
          cfg.phi_value = std::stod(value.substr(9));
        } else throw ConfigError("phi_mode must be closed_form, optimized or explicit:<value>");
      } else if (key == "mitigation_method") {
        if (value != "nnls" && value != "inverse")
          throw ConfigError("mitigation_method must be nnls or inverse");
        cfg.mitigation_method = value;
      } else if (key == "output") cfg.output = value;
      else if (key == "format") cfg.format = value;
      else throw ConfigError("unknown config key: " + key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  // schema validation
  variant_from_string(cfg.variant);
  if (!(cfg.h > 0) || !(cfg.k > 0)) throw ConfigError("h and k must be positive");
  if (cfg.shots < 1) throw ConfigError("shots must be positive");
  if (cfg.format != "csv" && cfg.format != "json")
    throw ConfigError("format must be csv or json");
  if (cfg.phi_mode == PhiMode::Explicit && !std::isfinite(cfg.phi_value))
    throw ConfigError("explicit phi must be finite");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

//=========================================================================
// Pipeline
//=========================================================================

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto variant = variant_from_string(cfg.variant);
  const model::ModelInstance m = build_model(cfg);

  const model::ProtocolAngles angles = protocol::closed_form_angles(m, variant);
  double phi = angles.phi;
  model::SignConvention sc = angles.sign_convention;
  if (cfg.phi_mode == PhiMode::Optimized) {
    const auto opt = protocol::optimize_phi(m, variant);
    phi = opt.phi;
    sc = opt.sign_convention;
  } else if (cfg.phi_mode == PhiMode::Explicit) {
    phi = cfg.phi_value;
  }

  const protocol::ProtocolResult analytic = protocol::run(m, variant, phi, sc);
  const circuit::ProtocolCircuits circuits =
      circuit::build_protocol_circuits(m, variant, phi, sc);

  std::optional<noise::ReadoutProfile> profile;
  if (cfg.backend_profile != "none" && !cfg.backend_profile.empty()) {
    profile = noise::find_builtin(cfg.backend_profile);
    if (!profile) profile = noise::load_profile_file(cfg.backend_profile);
  }

  ExperimentReport rep;
  rep.config = cfg;

  for (const auto& [name, spec] : circuits.observables) {
    ObservableRow row;
    row.name = name;

    // analytic value from the density-matrix path
    if (name[0] == 'H') {
      row.analytic = analytic.h_terms.at(name[1] - '0');
    } else {
      const auto& pair = spec.terms.at(0).paulis;
      row.analytic = analytic.v_terms.at({pair[0].first, pair[1].first});
    }

    const circuit::Circuit& deferred = circuits.deferred.at(name);
    const auto exact = circuit::simulate_exact(deferred);
    row.exact_circuit =
        circuit::estimate_observable_exact(exact.distribution, deferred.n_classical_bits, spec);
    if (std::abs(row.exact_circuit - row.analytic) > kAlgebraTol)
      throw InvariantViolation("exact circuit estimate disagrees with the analytic value for " +
                               name);

    const auto hist = circuit::sample(deferred, cfg.shots, cfg.seed);
    row.sampled = circuit::estimate_observable(hist, spec);
    row.sampled_stderr = circuit::estimate_stderr(hist, spec);

    if (profile) {
      const auto noisy = noise::apply_readout_noise(hist, *profile, cfg.seed ^ 0x5eedu);
      row.noisy = circuit::estimate_observable(noisy, spec);
      if (cfg.mitigation) {
        const auto M = noise::build_calibration_matrix(*profile, deferred.n_classical_bits);
        const auto method = cfg.mitigation_method == "inverse"
                                ? noise::MitigationMethod::PlainInverse
                                : noise::MitigationMethod::NonnegativeLeastSquares;
        const auto quasi = noise::mitigate(noisy, M, method);
        row.mitigated = circuit::estimate_observable_exact(
            quasi.clipped, deferred.n_classical_bits, spec);
      }
    }
    rep.rows.push_back(std::move(row));
  }

  rep.summary.e_deposit_alice = analytic.e_deposit_alice;
  rep.summary.e_deposit_charlie = analytic.e_deposit_charlie;
  rep.summary.e_receiver = analytic.e_receiver;
  rep.summary.efficiency_v_only = analytic.efficiency_v_only;
  rep.summary.phi_used = phi;
  rep.summary.sign_convention =
      sc == model::SignConvention::PlusEta ? "plus_eta" : "minus_eta";
  rep.summary.xi = angles.xi;
  rep.summary.eta = angles.eta;
  rep.summary.trace_total = analytic.trace_total;
  return rep;
}

//=========================================================================
// Serialization
//=========================================================================

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["variant"] = c.variant;
  j["h"] = c.h;
  j["k"] = c.k;
  j["shots"] = c.shots;
  j["seed"] = c.seed;
  j["backend_profile"] = c.backend_profile;
  j["mitigation"] = c.mitigation;
  j["mitigation_method"] = c.mitigation_method;
  j["phi_mode"] = c.phi_mode == PhiMode::ClosedForm
                      ? "closed_form"
                      : (c.phi_mode == PhiMode::Optimized ? "optimized" : "explicit");
  j["phi_value"] = c.phi_value;
  j["format"] = c.format;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.variant = j.at("variant").get<std::string>();
  c.h = j.at("h").get<double>();
  c.k = j.at("k").get<double>();
  c.shots = j.at("shots").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.backend_profile = j.at("backend_profile").get<std::string>();
  c.mitigation = j.at("mitigation").get<bool>();
  if (j.contains("mitigation_method"))
    c.mitigation_method = j.at("mitigation_method").get<std::string>();
  const std::string pm = j.at("phi_mode").get<std::string>();
  c.phi_mode = pm == "closed_form" ? PhiMode::ClosedForm
                                   : (pm == "optimized" ? PhiMode::Optimized : PhiMode::Explicit);
  c.phi_value = j.at("phi_value").get<double>();
  c.format = j.at("format").get<std::string>();
  return c;
}

}  // namespace

std::string to_json(const ExperimentReport& r) {
  json j;
  j["tool_version"] = r.tool_version;
  j["config"] = config_to_json(r.config);
  j["rows"] = json::array();
  for (const auto& row : r.rows) {
    json jr;
    jr["name"] = row.name;
    jr["analytic"] = row.analytic;
    jr["exact_circuit"] = row.exact_circuit;
    jr["sampled"] = row.sampled;
    jr["sampled_stderr"] = row.sampled_stderr;
    if (row.noisy) jr["noisy"] = *row.noisy;
    if (row.mitigated) jr["mitigated"] = *row.mitigated;
    j["rows"].push_back(jr);
  }
  json s;
  s["e_deposit_alice"] = r.summary.e_deposit_alice;
  if (r.summary.e_deposit_charlie) s["e_deposit_charlie"] = *r.summary.e_deposit_charlie;
  s["e_receiver"] = r.summary.e_receiver;
  s["efficiency_v_only"] = r.summary.efficiency_v_only;
  s["phi_used"] = r.summary.phi_used;
  s["sign_convention"] = r.summary.sign_convention;
  s["xi"] = r.summary.xi;
  s["eta"] = r.summary.eta;
  s["trace_total"] = r.summary.trace_total;
  j["summary"] = s;
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentReport r;
  r.tool_version = j.at("tool_version").get<std::string>();
  r.config = config_from_json(j.at("config"));
  for (const auto& jr : j.at("rows")) {
    ObservableRow row;
    row.name = jr.at("name").get<std::string>();
    row.analytic = jr.at("analytic").get<double>();
    row.exact_circuit = jr.at("exact_circuit").get<double>();
    row.sampled = jr.at("sampled").get<double>();
    row.sampled_stderr = jr.at("sampled_stderr").get<double>();
    if (jr.contains("noisy")) row.noisy = jr.at("noisy").get<double>();
    if (jr.contains("mitigated")) row.mitigated = jr.at("mitigated").get<double>();
    r.rows.push_back(std::move(row));
  }
  const json& s = j.at("summary");
  r.summary.e_deposit_alice = s.at("e_deposit_alice").get<double>();
  if (s.contains("e_deposit_charlie"))
    r.summary.e_deposit_charlie = s.at("e_deposit_charlie").get<double>();
  r.summary.e_receiver = s.at("e_receiver").get<double>();
  r.summary.efficiency_v_only = s.at("efficiency_v_only").get<double>();
  r.summary.phi_used = s.at("phi_used").get<double>();
  r.summary.sign_convention = s.at("sign_convention").get<std::string>();
  r.summary.xi = s.at("xi").get<double>();
  r.summary.eta = s.at("eta").get<double>();
  r.summary.trace_total = s.at("trace_total").get<double>();
  return r;
}

std::string to_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "type,name,analytic,exact_circuit,sampled,sampled_stderr,noisy,mitigated\n";
  for (const auto& row : r.rows) {
    out << "observable," << csv_quote(row.name) << "," << fmt(row.analytic) << ","
        << fmt(row.exact_circuit) << "," << fmt(row.sampled) << ","
        << fmt(row.sampled_stderr) << "," << (row.noisy ? fmt(*row.noisy) : "") << ","
        << (row.mitigated ? fmt(*row.mitigated) : "") << "\n";
  }
  const auto kv = [&](const std::string& key, const std::string& value) {
    out << "meta," << csv_quote(key) << "," << csv_quote(value) << ",,,,,\n";
  };
  kv("e_deposit_alice", fmt(r.summary.e_deposit_alice));
  if (r.summary.e_deposit_charlie) kv("e_deposit_charlie", fmt(*r.summary.e_deposit_charlie));
  kv("e_receiver", fmt(r.summary.e_receiver));
  kv("efficiency_v_only", fmt(r.summary.efficiency_v_only));
  kv("phi_used", fmt(r.summary.phi_used));
  kv("sign_convention", r.summary.sign_convention);
  kv("xi", fmt(r.summary.xi));
  kv("eta", fmt(r.summary.eta));
  kv("trace_total", fmt(r.summary.trace_total));
  kv("variant", r.config.variant);
  kv("h", fmt(r.config.h));
  kv("k", fmt(r.config.k));
  kv("shots", std::to_string(r.config.shots));
  kv("seed", std::to_string(r.config.seed));
  kv("backend_profile", r.config.backend_profile);
  kv("mitigation", r.config.mitigation ? "true" : "false");
  kv("mitigation_method", r.config.mitigation_method);
  kv("format", r.config.format);
  kv("phi_value", fmt(r.config.phi_value));
  kv("phi_mode", r.config.phi_mode == PhiMode::ClosedForm
                     ? "closed_form"
                     : (r.config.phi_mode == PhiMode::Optimized ? "optimized" : "explicit"));
  kv("tool_version", r.tool_version);
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

ExperimentReport report_from_csv(const std::string& text) {
  ExperimentReport r;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, std::string> meta;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.at(0) == "observable") {
      ObservableRow row;
      row.name = f.at(1);
      row.analytic = std::stod(f.at(2));
      row.exact_circuit = std::stod(f.at(3));
      row.sampled = std::stod(f.at(4));
      row.sampled_stderr = std::stod(f.at(5));
      if (!f.at(6).empty()) row.noisy = std::stod(f.at(6));
      if (!f.at(7).empty()) row.mitigated = std::stod(f.at(7));
      r.rows.push_back(std::move(row));
    } else if (f.at(0) == "meta") {
      meta[f.at(1)] = f.at(2);
    } else {
      throw ConfigError("unknown report row type: " + f.at(0));
    }
  }
  const auto need = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ConfigError("report is missing meta key: " + key);
    return it->second;
  };
  r.summary.e_deposit_alice = std::stod(need("e_deposit_alice"));
  if (meta.count("e_deposit_charlie"))
    r.summary.e_deposit_charlie = std::stod(meta.at("e_deposit_charlie"));
  r.summary.e_receiver = std::stod(need("e_receiver"));
  r.summary.efficiency_v_only = std::stod(need("efficiency_v_only"));
  r.summary.phi_used = std::stod(need("phi_used"));
  r.summary.sign_convention = need("sign_convention");
  r.summary.xi = std::stod(need("xi"));
  r.summary.eta = std::stod(need("eta"));
  r.summary.trace_total = std::stod(need("trace_total"));
  r.config.variant = need("variant");
  r.config.h = std::stod(need("h"));
  r.config.k = std::stod(need("k"));
  r.config.shots = std::stoull(need("shots"));
  r.config.seed = std::stoull(need("seed"));
  r.config.backend_profile = need("backend_profile");
  r.config.mitigation = need("mitigation") == "true";
  r.config.mitigation_method = need("mitigation_method");
  r.config.format = need("format");
  r.config.phi_value = std::stod(need("phi_value"));
  const std::string pm = need("phi_mode");
  r.config.phi_mode = pm == "closed_form" ? PhiMode::ClosedForm
                                          : (pm == "optimized" ? PhiMode::Optimized
                                                               : PhiMode::Explicit);
  r.tool_version = need("tool_version");
  return r;
}

std::string render_report(const ExperimentReport& r) {
  return r.config.format == "json" ? to_json(r) : to_csv(r);
}

void write_report(const ExperimentReport& r) {
  const std::string body = render_report(r);
  if (r.config.output.empty()) {
    std::fputs(body.c_str(), stdout);
    return;
  }
  std::ofstream out(r.config.output, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + r.config.output);
  out << body;
}

//=========================================================================
// Sweep
//=========================================================================

SweepReport run_sweep(const SweepConfig& cfg) {
  if (cfg.hs.empty() || cfg.ks.empty()) throw ConfigError("sweep grid is empty");
  const auto variant = variant_from_string(cfg.variant);

  SweepReport rep;
  rep.config = cfg;
  std::vector<std::pair<double, double>> grid;
  for (double h : cfg.hs)
    for (double k : cfg.ks) {
      if (std::find(grid.begin(), grid.end(), std::make_pair(h, k)) != grid.end()) {
        rep.warnings.push_back("duplicate grid point (" + fmt(h) + ", " + fmt(k) +
                               ") skipped");
        continue;
      }
      grid.emplace_back(h, k);
    }

  rep.all_points_pass = true;
  for (const auto& [h, k] : grid) {
    model::ModelParams params;
    params.h = h;
    params.k = k;
    params.variant = variant == protocol::ProtocolVariant::Minimal
                         ? model::Variant::Minimal2
                         : model::Variant::Extended3;
    const model::ModelInstance m = variant == protocol::ProtocolVariant::Minimal
                                       ? model::build_minimal(params)
                                       : model::build_extended(params);
    const auto opt = protocol::optimize_phi(m, variant);
    const auto res = protocol::run(m, variant, opt.phi, opt.sign_convention);

    SweepPoint pt;
    pt.h = h;
    pt.k = k;
    pt.phi_star = opt.phi;
    pt.e_receiver = res.e_receiver;
    pt.e_deposit = res.total_deposit();
    pt.efficiency_v_only = res.efficiency_v_only;
    pt.all_receiver_v_nonpositive = true;
    for (const auto& [pair, val] : res.v_terms) {
      const bool receiver_edge =
          variant == protocol::ProtocolVariant::Minimal ||
          (variant == protocol::ProtocolVariant::Miso && pair.second == 2) ||
          (variant == protocol::ProtocolVariant::Simo && pair.first == 0);
      if (!receiver_edge) continue;
      const std::string key = "V" + std::to_string(pair.first) + std::to_string(pair.second);
      pt.v_terms[key] = val;
      if (val > kAlgebraTol) pt.all_receiver_v_nonpositive = false;
    }
    rep.all_points_pass = rep.all_points_pass && pt.all_receiver_v_nonpositive;
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

std::string sweep_to_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "h,k,phi_star,e_deposit,e_receiver,efficiency_v_only,v_terms,all_v_nonpositive\n";
  for (const auto& pt : r.points) {
    std::string vt;
    for (const auto& [k, v] : pt.v_terms) {
      if (!vt.empty()) vt += ";";
      vt += k + "=" + fmt(v);
    }
    out << fmt(pt.h) << "," << fmt(pt.k) << "," << fmt(pt.phi_star) << ","
        << fmt(pt.e_deposit) << "," << fmt(pt.e_receiver) << ","
        << fmt(pt.efficiency_v_only) << "," << csv_quote(vt) << ","
        << (pt.all_receiver_v_nonpositive ? "true" : "false") << "\n";
  }
  out << "# all_points_pass," << (r.all_points_pass ? "true" : "false") << "\n";
  for (const auto& w : r.warnings) out << "# warning," << csv_quote(w) << "\n";
  return out.str();
}

std::string sweep_to_json(const SweepReport& r) {
  json j;
  j["variant"] = r.config.variant;
  j["all_points_pass"] = r.all_points_pass;
  j["warnings"] = r.warnings;
  j["points"] = json::array();
  for (const auto& pt : r.points) {
    json jp;
    jp["h"] = pt.h;
    jp["k"] = pt.k;
    jp["phi_star"] = pt.phi_star;
    jp["e_deposit"] = pt.e_deposit;
    jp["e_receiver"] = pt.e_receiver;
    jp["efficiency_v_only"] = pt.efficiency_v_only;
    jp["v_terms"] = pt.v_terms;
    jp["all_v_nonpositive"] = pt.all_receiver_v_nonpositive;
    j["points"].push_back(jp);
  }
  return j.dump(2) + "\n";
}

//=========================================================================
// Comparison table
//=========================================================================

CompareTable compare_table(const std::vector<ExperimentReport>& reports,
                           const std::string& paper_values_csv_path) {
  if (reports.empty()) throw ConfigError("compare needs at least one report");
  CompareTable table;

  // paper reference file: variant,h,k,observable,source,value
  std::map<std::string, double> paper;
  std::ifstream in(paper_values_csv_path);
  if (!in) {
    table.warnings.push_back("reference value file not found (" + paper_values_csv_path +
                             "); paper_value column omitted");
  } else {
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto f = split_csv_line(line);
      if (f.size() < 6) continue;
      if (f.at(4) != "analytic") continue;
      paper[f.at(0) + "/" + f.at(1) + "/" + f.at(2) + "/" + f.at(3)] = std::stod(f.at(5));
    }
  }

  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      const std::string key = rep.config.variant + "/" + fmt(rep.config.h) + "/" +
                              fmt(rep.config.k) + "/" + row.name;
      CompareRow* target = nullptr;
      for (auto& existing : table.rows) {
        if (existing.variant == rep.config.variant && existing.h == rep.config.h &&
            existing.k == rep.config.k && existing.observable == row.name) {
          if (std::abs(existing.analytic - row.analytic) > 1e-12)
            throw ConfigError("inconsistent reports: analytic values differ for " + key);
          target = &existing;
          break;
        }
      }
      if (!target) {
        CompareRow nr;
        nr.variant = rep.config.variant;
        nr.h = rep.config.h;
        nr.k = rep.config.k;
        nr.observable = row.name;
        nr.analytic = row.analytic;
        nr.simulator = row.sampled;
        const auto it = paper.find(key);
        if (it != paper.end()) {
          nr.paper_value = it->second;
          nr.delta = row.analytic - it->second;
        }
        table.rows.push_back(std::move(nr));
        target = &table.rows.back();
      }
      if (rep.config.backend_profile != "none" && row.noisy)
        target->unmitigated[rep.config.backend_profile] = *row.noisy;
      if (rep.config.backend_profile != "none" && row.mitigated)
        target->mitigated[rep.config.backend_profile] = *row.mitigated;
    }
  }
  return table;
}

std::string compare_to_csv(const CompareTable& t) {
  std::set<std::string> profiles;
  for (const auto& r : t.rows) {
    for (const auto& [p, _] : r.mitigated) profiles.insert(p);
    for (const auto& [p, _] : r.unmitigated) profiles.insert(p);
  }
  const bool have_paper =
      std::any_of(t.rows.begin(), t.rows.end(), [](const auto& r) { return r.paper_value.has_value(); });

  std::ostringstream out;
  out << "variant,h,k,observable,analytic,simulator";
  for (const auto& p : profiles) out << "," << p << "_mitigated," << p << "_unmitigated";
  if (have_paper) out << ",paper_value,delta";
  out << "\n";
  for (const auto& r : t.rows) {
    out << r.variant << "," << fmt(r.h) << "," << fmt(r.k) << "," << csv_quote(r.observable)
        << "," << fmt(r.analytic) << "," << fmt(r.simulator);
    for (const auto& p : profiles) {
      out << ",";
      if (r.mitigated.count(p)) out << fmt(r.mitigated.at(p));
      out << ",";
      if (r.unmitigated.count(p)) out << fmt(r.unmitigated.at(p));
    }
    if (have_paper) {
      out << ",";
      if (r.paper_value) out << fmt(*r.paper_value);
      out << ",";
      if (r.delta) out << fmt(*r.delta);
    }
    out << "\n";
  }
  for (const auto& w : t.warnings) out << "# warning," << csv_quote(w) << "\n";
  return out.str();
}

std::string compare_to_json(const CompareTable& t) {
  json j;
  j["warnings"] = t.warnings;
  j["rows"] = json::array();
  for (const auto& r : t.rows) {
    json jr;
    jr["variant"] = r.variant;
    jr["h"] = r.h;
    jr["k"] = r.k;
    jr["observable"] = r.observable;
    jr["analytic"] = r.analytic;
    jr["simulator"] = r.simulator;
    jr["mitigated"] = r.mitigated;
    jr["unmitigated"] = r.unmitigated;
    if (r.paper_value) jr["paper_value"] = *r.paper_value;
    if (r.delta) jr["delta"] = *r.delta;
    j["rows"].push_back(jr);
  }
  return j.dump(2) + "\n";
}

//=========================================================================
// Selftest
//=========================================================================

std::vector<std::string> selftest() {
  std::vector<std::string> failures;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  try {
    model::ModelParams mp{1.0, 1.5, model::Variant::Minimal2};
    const auto m = model::build_minimal(mp);
    expect(std::abs(expectation(m.ground, m.total)) < kAlgebraTol, "minimal zero mean");
    const auto angles = protocol::closed_form_angles(m, protocol::ProtocolVariant::Minimal);
    const auto res = protocol::run_minimal(m, angles.phi, angles.sign_convention);
    const double closed =
        0.5 * (angles.xi - std::hypot(angles.xi, angles.eta));
    expect(std::abs(res.e_receiver - closed) < kAlgebraTol, "closed-form receiver energy");

    model::ModelParams ep{1.0, 3.0, model::Variant::Extended3};
    const auto ext = model::build_extended(ep);
    expect(eigh(ext.total).eigenvalues.front() > -kAlgebraTol, "extended positive semidefinite");

    const auto circuits = circuit::build_protocol_circuits(
        ext, protocol::ProtocolVariant::Simo, angles.phi, angles.sign_convention);
    for (const auto& [name, mid] : circuits.mid) {
      const auto a = circuit::simulate_exact(mid);
      const auto b = circuit::simulate_exact(circuits.deferred.at(name));
      double diff = 0;
      for (std::size_t i = 0; i < a.distribution.size(); ++i)
        diff = std::max(diff, std::abs(a.distribution[i] - b.distribution[i]));
      expect(diff < 1e-12, "deferred equivalence for " + name);
    }

    const auto profile = *noise::find_builtin("ibm_kyiv");
    const auto M = noise::build_calibration_matrix(profile, 3);
    for (std::size_t j = 0; j < M.dim; ++j) {
      double col = 0;
      for (std::size_t i = 0; i < M.dim; ++i) col += M.at(i, j);
      expect(std::abs(col - 1.0) < 1e-12, "calibration column stochastic");
    }
  } catch (const std::exception& e) {
    failures.push_back(std::string("exception: ") + e.what());
  }
  return failures;
}

}  // namespace qet::cli
