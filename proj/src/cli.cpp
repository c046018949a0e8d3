#include "kgen/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "kgen/bounds.hpp"
#include "kgen/config.hpp"
#include "kgen/dmd.hpp"
#include "kgen/env.hpp"
#include "kgen/error.hpp"
#include "kgen/format.hpp"
#include "kgen/trajectory.hpp"

namespace kgen {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

fs::path sibling(const fs::path& p, const std::string& replacement_ext) {
  fs::path out = p;
  out.replace_extension(replacement_ext);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

class Manifest {
 public:
  Manifest(std::string command, const CommonOptions* common) {
    m_.command = std::move(command);
    m_.started_at = utc_now();
    if (common && common->config) {
      m_.config_path = common->config->string();
      input(*common->config);
    }
  }
  void seed(std::uint64_t s) { m_.seed = s; }
  void input(const fs::path& p) { m_.inputs.push_back({p.string(), sha256_file(p)}); }
  void output(const fs::path& p) { m_.outputs.push_back({p.string(), sha256_file(p)}); }
  void write(const fs::path& primary_out) {
    m_.finished_at = utc_now();
    nlohmann::json j = m_;
    write_text(with_suffix(primary_out, ".manifest.json"), j.dump(2) + "\n");
  }

 private:
  RunManifest m_;
};

Config load_config(const CommonOptions& o) { return o.config ? Config::load(*o.config) : Config{}; }

void apply_common(Config& c, const CommonOptions& o) {
  if (o.seed) c.set("sim.seed", std::to_string(*o.seed));
  if (o.gamma) c.set("analysis.gamma", format_real(*o.gamma));
  if (o.gamma_d) c.set("analysis.gamma_d", format_real(*o.gamma_d));
  if (o.rank_tol) c.set("analysis.rank_tol", format_real(*o.rank_tol));
  if (o.grid_points) c.set("analysis.grid_points", std::to_string(*o.grid_points));
}

void apply_sim(Config& c, const SimulateOptions& o) {
  apply_common(c, o);
  if (o.env) c.set("sim.env", *o.env);
  if (o.runs) c.set("sim.runs", std::to_string(*o.runs));
  if (o.horizon) c.set("sim.horizon", std::to_string(*o.horizon));
  if (o.policy) c.set("sim.policy", *o.policy);
}

TrajectoryEnsemble simulate_ensemble(const Config& c, const SimSettings& sim,
                                     const std::optional<Eigen::MatrixXd>& disturbance = std::nullopt) {
  if (sim.env == "linear") return linear_ensemble(linear_config(c), sim.runs, sim.seed, disturbance);
  return uav_ensemble(uav_config(c), sim.policy, sim.horizon, sim.runs, sim.seed, disturbance);
}

Eigen::Index env_state_dim(const Config& c, const SimSettings& sim) {
  return sim.env == "linear" ? linear_config(c).state_dim() : uav_config(c).state_dim();
}

KoopmanModel load_model(const fs::path& path) {
  try {
    return read_json(path).get<KoopmanModel>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": malformed model document: " + e.what(), 0);
  }
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InternalError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

std::string cell(const std::optional<double>& v) {
  std::string s;
  if (v) append_real(s, *v);
  return s;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw InternalError("SHA-256 initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void to_json(nlohmann::json& j, const RunManifest& m) {
  auto files = [](const std::vector<ManifestFile>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  j = nlohmann::json{
      {"command", m.command},
      {"config", m.config_path ? nlohmann::json(*m.config_path) : nlohmann::json(nullptr)},
      {"seed", m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr)},
      {"tool_version", m.tool_version},
      {"inputs", files(m.inputs)},
      {"outputs", files(m.outputs)},
      {"started_at", m.started_at},
      {"finished_at", m.finished_at},
  };
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  m.command = j.at("command").get<std::string>();
  if (!j.at("config").is_null()) m.config_path = j.at("config").get<std::string>();
  if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
  m.tool_version = j.at("tool_version").get<std::string>();
  for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
  for (const auto& f : j.at("outputs")) m.outputs.push_back({f.at("path"), f.at("sha256")});
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
}

std::string config_help() {
  std::ostringstream out;
  out << "Configuration keys (file lines 'key = value', '#' comments):\n";
  for (const auto& k : config_key_docs()) {
    out << "  " << std::left << std::setw(28) << k.key << k.meaning << " [default: " << k.default_value << "]\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Config c = load_config(o);
    apply_sim(c, o);
    const auto sim = sim_settings(c);
    const fs::path out = o.out.value_or("trajectories.csv");
    Manifest manifest("simulate", &o);
    manifest.seed(sim.seed);

    const auto ensemble = simulate_ensemble(c, sim);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_trajectories(out, ensemble);
    manifest.output(out);
    manifest.write(out);
    log << "simulate: " << sim.runs << " run(s) of " << sim.horizon << " steps (" << sim.env << ", n="
        << ensemble.state_dim() << ", m=" << ensemble.action_dim() << ") -> " << out.string() << "\n";
    return kExitOk;
  });
}

int cmd_fit(const FitOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Config c = load_config(o);
    apply_common(c, o);
    const auto analysis = analysis_settings(c);
    const fs::path out = o.out.value_or("model.json");
    Manifest manifest("fit", &o);

    TrajectoryEnsemble ensemble = [&] {
      try {
        return load_trajectories(o.input);
      } catch (const Error& e) {
        throw DataError(o.input.string() + ": " + e.what());
      }
    }();
    manifest.input(o.input);

    const auto mean = ensemble_mean(ensemble);
    const auto model = fit_koopman_model(mean, analysis.rank_tol);
    nlohmann::json j = model;
    // With a linear surrogate config the true A is known; report the recovery error.
    if (o.config && c.get_string("sim.env", "linear") == "linear" && c.has("linear.A")) {
      const auto lin = linear_config(c);
      if (lin.a.rows() == model.state_dim()) {
        const double scale = lin.a.norm();
        const double miss = (model.state_operator - lin.a).norm();
        j["residuals"]["oracle_state_relative"] = scale > 0.0 ? miss / scale : miss;
      }
    }
    write_text(out, j.dump(2) + "\n");
    manifest.output(out);
    manifest.write(out);
    log << "fit: rank " << model.state_dmd.rank << ", state residual " << format_real(model.state_dmd.residual)
        << " -> " << out.string() << "\n";
    return kExitOk;
  });
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Config c = load_config(o);
    apply_common(c, o);
    const auto analysis = analysis_settings(c);
    const fs::path out = o.out.value_or("analysis.json");
    Manifest manifest("analyze", &o);

    const auto model = load_model(o.model);
    manifest.input(o.model);
    const auto lipschitz = o.lipschitz ? o.lipschitz : analysis.lipschitz;
    BoundReport report = analyze_model(model, analysis.gamma, analysis.gamma_d, lipschitz, analysis.grid_points,
                                       analysis.refinement_tol);
    report.label = o.label.value_or(o.model.stem().string());

    nlohmann::json j = report;
    j["model"] = o.model.string();
    write_text(out, j.dump(2) + "\n");
    manifest.output(out);
    manifest.write(out);
    if (report.norms.state.infinite()) {
      log << "warning: state operator has spectral radius " << format_real(report.norms.state.spectral_radius)
          << " >= 1; H-infinity norm is infinite and the bounds are vacuous\n";
    } else if (report.norms.state.ill_conditioned) {
      log << "warning: spectral radius within 1e-6 of the unit circle\n";
    }
    log << "analyze: T_hinf=" << format_real(report.t_hinf()) << " Kf_hinf=" << format_real(report.kf_hinf())
        << " M=" << format_real(report.m) << " N=" << format_real(report.n) << " -> " << out.string() << "\n";
    return kExitOk;
  });
}

int cmd_verify(const VerifyOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Config c = load_config(o);
    apply_sim(c, o);
    const auto sim = sim_settings(c);
    const auto analysis = analysis_settings(c);
    if (sim.runs < 2) throw ParameterError("verify needs at least 2 runs to estimate Q and C");
    const fs::path out = o.out.value_or("verify.json");
    const fs::path table = o.table.value_or(sibling(out, ".deviations.csv"));
    Manifest manifest("verify", &o);
    manifest.seed(sim.seed);

    const auto model = load_model(o.model);
    manifest.input(o.model);
    const Eigen::Index n = env_state_dim(c, sim);
    if (model.state_dim() != n) {
      throw DimensionError("model has n=" + std::to_string(model.state_dim()) + " but the " + sim.env +
                           " environment has n=" + std::to_string(n));
    }

    DisturbanceSpec spec = disturbance_spec(c);
    if (o.gamma) spec.gamma = *o.gamma;
    spec.horizon = sim.horizon;
    spec.dim = static_cast<int>(n);
    const Eigen::MatrixXd w = generate_disturbance(spec);
    const int grid = spec.grid_points > 0 ? spec.grid_points : default_admissibility_grid(sim.horizon);
    const auto adm = disturbance_admissible(w, spec.gamma, grid);
    if (!adm.admissible) {
      throw InternalError("generated disturbance is inadmissible at gamma=" + format_real(spec.gamma) +
                          " (sup " + format_real(adm.sup_value) + ")");
    }

    // Common random numbers: both ensembles use the same master seed.
    const auto nominal = simulate_ensemble(c, sim);
    const auto disturbed = simulate_ensemble(c, sim, w);
    if (model.action_dim() != nominal.action_dim()) {
      throw DimensionError("model has m=" + std::to_string(model.action_dim()) + " but the environment has m=" +
                           std::to_string(nominal.action_dim()));
    }
    const auto nominal_mean = ensemble_mean(nominal);
    const auto disturbed_mean = ensemble_mean(disturbed);

    RewardDescriptor reward;
    reward.max_pairs = analysis.lipschitz_pairs;
    reward.seed = sim.seed;
    reward.analytic_lipschitz = analysis.lipschitz;
    if (!reward.analytic_lipschitz && sim.env == "linear") reward.analytic_lipschitz = linear_config(c).reward_lipschitz();

    const auto norms = model_norms(model, analysis.grid_points, analysis.refinement_tol);
    BoundReport report = verify_bounds(nominal_mean, disturbed_mean, nominal, disturbed, norms, spec.gamma,
                                       analysis.gamma_d, reward);
    report.label = o.label.value_or(sim.env == "uav" ? "uav/" + to_string(sim.policy) : std::string("linear"));

    nlohmann::json j = report;
    j["env"] = sim.env;
    if (sim.env == "uav") j["policy"] = to_string(sim.policy);
    j["seed"] = sim.seed;
    j["model"] = o.model.string();
    j["disturbance"] = {
        {"kind", to_string(spec.kind)},     {"gamma", spec.gamma},          {"seed", spec.seed},
        {"grid_points", grid},              {"sup_value", adm.sup_value},   {"energy", adm.energy},
        {"max_step_norm", adm.max_step_norm}, {"admissible", adm.admissible},
    };
    if (sim.env == "uav" && !report.violations.empty()) {
      j["notes"]["violations"] = "model-approximation effect: the fitted operator is not the true closed loop";
    }
    write_text(out, j.dump(2) + "\n");
    {
      if (table.has_parent_path()) fs::create_directories(table.parent_path());
      std::ofstream t(table, std::ios::binary);
      if (!t) throw DataError("cannot write " + table.string());
      write_deviation_table(t, report);
    }
    manifest.output(out);
    manifest.output(table);
    manifest.write(out);
    log << "verify: " << report.violations.size() << " violation(s) of " << report.checks
        << " checks, reward impact " << format_real(report.empirical->reward_impact_pct()) << "% -> "
        << out.string() << "\n";
    return kExitOk;
  });
}

int cmd_report(const ReportOptions& o, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (o.inputs.empty()) throw EmptyInputError("report needs at least one bound report");
    const fs::path out = o.out.value_or("report.csv");
    const fs::path json_out = sibling(out, ".json");
    Manifest manifest("report", nullptr);

    std::vector<BoundReport> reports;
    for (const auto& p : o.inputs) {
      try {
        reports.push_back(read_json(p).get<BoundReport>());
      } catch (const Error& e) {
        throw ParseError(p.string() + ": " + e.what(), 0);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(p.string() + ": " + e.what(), 0);
      }
      if (reports.back().label.empty()) reports.back().label = p.stem().string();
      manifest.input(p);
    }
    std::stable_sort(reports.begin(), reports.end(),
                     [](const BoundReport& a, const BoundReport& b) { return a.t_hinf() < b.t_hinf(); });

    std::string csv =
        "label,gamma,gamma_d,T_hinf,Kf_hinf,M,N,L,Q,C,state_energy_bound,state_max_bound,action_energy_bound,"
        "action_max_bound,reward_impact_bound,generalization_error_bound,reward_gap,reward_impact_pct,"
        "violation_rate\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : reports) {
      const auto& e = r.empirical;
      const std::vector<std::optional<double>> values = {
          r.gamma, r.gamma_d, r.t_hinf(), r.kf_hinf(), r.m, r.n, r.lipschitz, r.q, r.c,
          r.state_bound.energy, r.state_bound.max, r.action_bound.energy, r.action_bound.max,
          r.reward_impact_bound, r.generalization_error_bound,
          e ? std::optional<double>(e->reward_gap) : std::nullopt,
          e ? std::optional<double>(e->reward_impact_pct()) : std::nullopt,
          e ? std::optional<double>(r.violation_rate()) : std::nullopt,
      };
      csv += r.label;
      for (const auto& v : values) {
        csv += ',';
        csv += cell(v);
      }
      csv += '\n';

      nlohmann::json full = r;
      nlohmann::json row = {{"label", r.label}};
      for (const char* k : {"gamma", "gamma_d", "T_hinf", "Kf_hinf", "M", "N", "L", "Q", "C", "bounds"}) {
        row[k] = full[k];
      }
      if (e) {
        row["reward_gap"] = e->reward_gap;
        row["reward_impact_pct"] = e->reward_impact_pct();
        row["violation_rate"] = r.violation_rate();
      }
      rows.push_back(row);
    }
    write_text(out, csv);
    write_text(json_out, nlohmann::json{{"format", "kgen.comparison"}, {"rows", rows}}.dump(2) + "\n");
    manifest.output(out);
    manifest.output(json_out);
    manifest.write(out);
    log << "report: " << reports.size() << " row(s) -> " << out.string() << ", " << json_out.string() << "\n";
    return kExitOk;
  });
}

}  // namespace kgen
