#include "kgen/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include <unsupported/Eigen/FFT>

#include "kgen/error.hpp"
#include "kgen/format.hpp"

namespace kgen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd unit_direction(const DisturbanceSpec& spec) {
  if (spec.direction.size() == 0) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(spec.dim);
    e(0) = 1.0;
    return e;
  }
  if (spec.direction.size() != spec.dim) {
    throw DimensionError("disturbance direction has " + std::to_string(spec.direction.size()) +
                         " entries, expected " + std::to_string(spec.dim));
  }
  const double norm = spec.direction.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ParameterError("disturbance direction must be nonzero and finite");
  return spec.direction / norm;
}

// Squared magnitude ||ŵ(2πp/P)||² at every grid point.
std::vector<double> spectrum_power(const Eigen::MatrixXd& w, int grid_points) {
  Eigen::FFT<double> fft;
  std::vector<double> power(static_cast<std::size_t>(grid_points), 0.0);
  std::vector<double> in(static_cast<std::size_t>(grid_points));
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    std::fill(in.begin(), in.end(), 0.0);
    for (Eigen::Index k = 0; k < w.cols(); ++k) in[static_cast<std::size_t>(k)] = w(i, k);
    fft.fwd(out, in);
    for (std::size_t p = 0; p < power.size(); ++p) power[p] += std::norm(out[p]);
  }
  return power;
}

void check_inputs_nonnegative(std::initializer_list<double> values, const char* what) {
  for (double v : values) {
    if (std::isnan(v) || v < 0.0) throw ParameterError(std::string(what) + ": inputs must be non-negative");
  }
}

void check_gamma_d(double gamma_d) {
  if (std::isnan(gamma_d) || gamma_d < 0.0) throw ParameterError("gamma_d must be non-negative");
}

double norm_sum(const Eigen::MatrixXd& m, std::vector<double>* per_column = nullptr) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    const double v = m.col(k).norm();
    total += v * v;
    if (per_column) per_column->push_back(v);
  }
  return total;
}

bool exceeds(double measured, double limit) {
  if (!std::isfinite(limit)) return false;
  return measured > limit * (1.0 + kViolationRelTol) + 1e-12;
}

void check_pair_dims(const MeanTrajectory& a, const MeanTrajectory& b) {
  if (a.mean_states.rows() != b.mean_states.rows() || a.mean_actions.rows() != b.mean_actions.rows() ||
      a.horizon() != b.horizon()) {
    throw DimensionError("nominal and disturbed means differ in n, m or K");
  }
}

void check_ensemble_matches(const TrajectoryEnsemble& e, const MeanTrajectory& mean, const char* which) {
  if (e.state_dim() != mean.mean_states.rows() || e.action_dim() != mean.mean_actions.rows() ||
      e.horizon() != mean.horizon()) {
    throw DimensionError(std::string(which) + " ensemble does not match its mean trajectory");
  }
}

}  // namespace

DisturbanceKind parse_disturbance_kind(const std::string& name) {
  if (name == "impulse") return DisturbanceKind::impulse;
  if (name == "constant_direction") return DisturbanceKind::constant_direction;
  if (name == "scaled_gaussian_projected") return DisturbanceKind::scaled_gaussian_projected;
  if (name == "single_tone") return DisturbanceKind::single_tone;
  throw ParameterError("unknown disturbance kind '" + name + "'");
}

std::string to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::impulse: return "impulse";
    case DisturbanceKind::constant_direction: return "constant_direction";
    case DisturbanceKind::scaled_gaussian_projected: return "scaled_gaussian_projected";
    case DisturbanceKind::single_tone: return "single_tone";
  }
  return "impulse";
}

int default_admissibility_grid(int horizon) {
  const long target = std::max<long>(16, 8L * std::max(horizon, 1));
  for (long p = target;; ++p) {
    long r = p;
    for (long f : {2L, 3L, 5L}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return static_cast<int>(p);
  }
}

Eigen::MatrixXd generate_disturbance(const DisturbanceSpec& spec) {
  if (std::isnan(spec.gamma) || spec.gamma < 0.0 || !std::isfinite(spec.gamma)) {
    throw ParameterError("disturbance gamma must be finite and >= 0");
  }
  if (spec.horizon < 1) throw ParameterError("disturbance horizon must be >= 1");
  if (spec.dim < 1) throw ParameterError("disturbance dimension must be >= 1");

  const Eigen::Index n = spec.dim;
  const Eigen::Index k = spec.horizon;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, k);
  if (spec.gamma == 0.0) return w;

  const Eigen::VectorXd d = unit_direction(spec);
  bool normalize = false;
  switch (spec.kind) {
    case DisturbanceKind::impulse:
      if (spec.impulse_step < 0 || spec.impulse_step >= k) {
        throw ParameterError("impulse step must lie in [0, K)");
      }
      w.col(spec.impulse_step) = spec.gamma * d;
      break;
    case DisturbanceKind::constant_direction:
      w = (spec.gamma / static_cast<double>(k)) * d.replicate(1, k);
      break;
    case DisturbanceKind::scaled_gaussian_projected: {
      std::mt19937_64 rng(spec.seed);
      std::normal_distribution<double> normal;
      if (spec.direction.size() == 0) {
        for (Eigen::Index j = 0; j < k; ++j)
          for (Eigen::Index i = 0; i < n; ++i) w(i, j) = normal(rng);
      } else {
        for (Eigen::Index j = 0; j < k; ++j) w.col(j) = normal(rng) * d;
      }
      normalize = true;
      break;
    }
    case DisturbanceKind::single_tone:
      if (!std::isfinite(spec.frequency)) throw ParameterError("tone frequency must be finite");
      for (Eigen::Index j = 0; j < k; ++j) w.col(j) = std::cos(spec.frequency * static_cast<double>(j)) * d;
      normalize = true;
      break;
  }

  const int grid = spec.grid_points > 0 ? spec.grid_points : default_admissibility_grid(spec.horizon);
  const auto power = spectrum_power(w, grid);
  const double sup = std::sqrt(*std::max_element(power.begin(), power.end()));
  if (sup == 0.0) return Eigen::MatrixXd::Zero(n, k);
  if (normalize || sup > spec.gamma) w *= spec.gamma / sup;
  return w;
}

Admissibility disturbance_admissible(const Eigen::MatrixXd& w, double gamma, int grid_points) {
  if (w.cols() == 0 || w.rows() == 0) throw EmptyInputError("disturbance sequence is empty");
  if (std::isnan(gamma) || gamma < 0.0) throw ParameterError("gamma must be >= 0");
  if (grid_points < 4 * w.cols()) throw ParameterError("grid_points must be at least 4K");
  if (!w.allFinite()) throw DataError("disturbance sequence contains non-finite entries");

  Admissibility a;
  a.grid_points = grid_points;
  std::vector<double> step_norms;
  a.energy = norm_sum(w, &step_norms);
  a.max_step_norm = *std::max_element(step_norms.begin(), step_norms.end());

  const double slack = 1.0 + kAdmissibilityRelTol;
  a.energy_condition = a.energy <= gamma * gamma * slack;
  a.step_condition = a.max_step_norm <= gamma * slack;

  const auto power = spectrum_power(w, grid_points);
  const auto it = std::max_element(power.begin(), power.end());
  a.sup_value = std::sqrt(*it);
  a.omega_star = 2.0 * std::numbers::pi * static_cast<double>(it - power.begin()) / grid_points;
  a.admissible = a.energy_condition && a.step_condition && a.sup_value <= gamma * slack;
  return a;
}

EnergyMaxBound theorem2_bounds(double t_hinf, double gamma) {
  check_inputs_nonnegative({t_hinf, gamma}, "theorem2_bounds");
  const double m = t_hinf * gamma;
  return {m * m, m};
}

EnergyMaxBound corollary1_bounds(double kf_hinf, double t_hinf, double gamma) {
  check_inputs_nonnegative({kf_hinf, t_hinf, gamma}, "corollary1_bounds");
  const double n = kf_hinf * t_hinf * gamma;
  return {n * n, n};
}

double corollary2_bound(const BoundInputs& in) {
  check_inputs_nonnegative({in.gamma, in.t_hinf, in.kf_hinf, in.lipschitz, in.q, in.c}, "corollary2_bound");
  check_gamma_d(in.gamma_d);
  if (in.lipschitz == 0.0) return 0.0;
  const double per_step = in.lipschitz * (in.q + in.m() + in.n());
  if (!in.horizon) {
    if (in.gamma_d >= 1.0) throw DivergenceError("infinite-horizon bound diverges for gamma_d >= 1");
    return per_step / (1.0 - in.gamma_d);
  }
  if (*in.horizon < 0) throw ParameterError("horizon must be >= 0");
  const double terms = static_cast<double>(*in.horizon) + 1.0;
  if (in.gamma_d == 1.0) return per_step * terms;
  return per_step * (1.0 - std::pow(in.gamma_d, terms)) / (1.0 - in.gamma_d);
}

double corollary3_bound(const BoundInputs& in) {
  check_inputs_nonnegative({in.gamma, in.t_hinf, in.kf_hinf, in.lipschitz, in.q, in.c}, "corollary3_bound");
  check_gamma_d(in.gamma_d);
  if (in.gamma_d >= 1.0) throw DivergenceError("generalization-error bound diverges for gamma_d >= 1");
  if (in.lipschitz == 0.0) return 0.0;
  return (in.lipschitz * (in.q + in.m() + in.n()) + in.lipschitz * in.c) / (1.0 - in.gamma_d);
}

std::vector<RewardSample> reward_samples(const TrajectoryEnsemble& ensemble) {
  std::vector<RewardSample> out;
  out.reserve(ensemble.size() * static_cast<std::size_t>(ensemble.horizon()));
  for (const auto& t : ensemble.trajectories()) {
    for (Eigen::Index k = 0; k < t.horizon(); ++k) {
      out.push_back({t.states.col(k + 1), t.actions.col(k), t.rewards(k)});
    }
  }
  return out;
}

double estimate_lipschitz(std::span<const RewardSample> samples, std::size_t max_pairs, std::uint64_t seed) {
  if (samples.size() < 2) throw InsufficientDataError("Lipschitz estimate needs at least 2 samples");
  constexpr double kMinSeparation = 1e-12;
  double best = 0.0;
  bool any = false;
  auto visit = [&](const RewardSample& a, const RewardSample& b) {
    const double den = (a.x - b.x).norm() + (a.u - b.u).norm();
    if (den < kMinSeparation) return;
    any = true;
    best = std::max(best, std::abs(a.r - b.r) / den);
  };

  const std::size_t s = samples.size();
  const double total_pairs = 0.5 * static_cast<double>(s) * static_cast<double>(s - 1);
  if (max_pairs == 0 || total_pairs <= static_cast<double>(max_pairs)) {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j) visit(samples[i], samples[j]);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, s - 1);
    for (std::size_t p = 0; p < max_pairs; ++p) {
      const std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      if (i == j) j = (j + 1) % s;
      visit(samples[i], samples[j]);
    }
  }
  if (!any) throw InsufficientDataError("Lipschitz estimate needs at least 2 distinct samples");
  return best;
}

std::vector<double> dispersion_profile(const TrajectoryEnsemble& ensemble, const MeanTrajectory& mean) {
  if (ensemble.size() < 2) throw InsufficientDataError("dispersion estimate needs at least 2 runs");
  check_ensemble_matches(ensemble, mean, "dispersion");
  const Eigen::Index k_max = mean.horizon();
  std::vector<double> profile(static_cast<std::size_t>(k_max), 0.0);
  for (Eigen::Index k = 0; k < k_max; ++k) {
    double sum = 0.0;
    for (const auto& t : ensemble.trajectories()) {
      sum += (t.states.col(k + 1) - mean.mean_states.col(k + 1)).norm() +
             (t.actions.col(k) - mean.mean_actions.col(k)).norm();
    }
    profile[static_cast<std::size_t>(k)] = sum / static_cast<double>(ensemble.size());
  }
  return profile;
}

double estimate_q(const TrajectoryEnsemble& disturbed, const MeanTrajectory& disturbed_mean) {
  const auto p = dispersion_profile(disturbed, disturbed_mean);
  return p.empty() ? 0.0 : *std::max_element(p.begin(), p.end());
}

double estimate_c(const TrajectoryEnsemble& nominal, const MeanTrajectory& nominal_mean) {
  return estimate_q(nominal, nominal_mean);
}

ModelNorms model_norms(const KoopmanModel& model, int grid_points, double refinement_tol) {
  ModelNorms out;
  out.state = hinf_norm(TransferFunction::resolvent(model.state_operator), grid_points, refinement_tol);
  out.action = hinf_norm(TransferFunction::constant(model.action_operator), grid_points, refinement_tol);
  return out;
}

namespace {

BoundReport base_report(const ModelNorms& norms, double gamma, double gamma_d) {
  if (std::isnan(gamma) || gamma < 0.0) throw ParameterError("gamma must be >= 0");
  check_gamma_d(gamma_d);
  if (gamma_d >= 1.0) throw ParameterError("gamma_d must lie in [0, 1)");
  BoundReport r;
  r.gamma = gamma;
  r.gamma_d = gamma_d;
  r.norms = norms;
  const double t = norms.state.value;
  const double kf = norms.action.value;
  // An infinite norm with γ = 0 still means no certified bound.
  r.m = std::isfinite(t) ? t * gamma : kInf;
  r.n = std::isfinite(t) ? kf * t * gamma : kInf;
  if (std::isfinite(t)) {
    r.state_bound = theorem2_bounds(t, gamma);
    r.action_bound = corollary1_bounds(kf, t, gamma);
  } else {
    r.state_bound = {kInf, kInf};
    r.action_bound = {kInf, kInf};
  }
  return r;
}

void fill_reward_bounds(BoundReport& r) {
  if (!r.lipschitz || !r.q || !r.c) return;
  if (!std::isfinite(r.m)) {
    r.reward_impact_bound = kInf;
    r.generalization_error_bound = kInf;
    return;
  }
  BoundInputs in;
  in.gamma = r.gamma;
  in.t_hinf = r.t_hinf();
  in.kf_hinf = r.kf_hinf();
  in.lipschitz = *r.lipschitz;
  in.q = *r.q;
  in.c = *r.c;
  in.gamma_d = r.gamma_d;
  in.horizon = r.horizon;
  r.reward_impact_bound = corollary2_bound(in);
  r.generalization_error_bound = corollary3_bound(in);
}

}  // namespace

BoundReport analyze_model(const KoopmanModel& model, double gamma, double gamma_d,
                          std::optional<double> analytic_lipschitz, int grid_points, double refinement_tol) {
  BoundReport r = base_report(model_norms(model, grid_points, refinement_tol), gamma, gamma_d);
  if (analytic_lipschitz) {
    check_inputs_nonnegative({*analytic_lipschitz}, "analyze_model");
    r.lipschitz = analytic_lipschitz;
    r.lipschitz_source = "analytic";
  }
  return r;
}

BoundReport verify_bounds(const MeanTrajectory& nominal_mean, const MeanTrajectory& disturbed_mean,
                          const TrajectoryEnsemble& nominal, const TrajectoryEnsemble& disturbed,
                          const ModelNorms& norms, double gamma, double gamma_d,
                          const RewardDescriptor& reward) {
  check_pair_dims(nominal_mean, disturbed_mean);
  check_ensemble_matches(nominal, nominal_mean, "nominal");
  check_ensemble_matches(disturbed, disturbed_mean, "disturbed");

  BoundReport r = base_report(norms, gamma, gamma_d);
  r.horizon = static_cast<long>(nominal_mean.horizon());
  r.runs = std::min(nominal.size(), disturbed.size());

  if (reward.analytic_lipschitz) {
    check_inputs_nonnegative({*reward.analytic_lipschitz}, "verify_bounds");
    r.lipschitz = reward.analytic_lipschitz;
    r.lipschitz_source = "analytic";
  } else {
    std::vector<RewardSample> samples = reward_samples(nominal);
    auto more = reward_samples(disturbed);
    samples.insert(samples.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    r.lipschitz = estimate_lipschitz(samples, reward.max_pairs, reward.seed);
    r.lipschitz_source = "estimated-L";
  }
  r.q = estimate_q(disturbed, disturbed_mean);
  r.c = estimate_c(nominal, nominal_mean);
  fill_reward_bounds(r);

  const Eigen::MatrixXd dx = nominal_mean.mean_states - disturbed_mean.mean_states;
  const Eigen::MatrixXd du = nominal_mean.mean_actions - disturbed_mean.mean_actions;
  std::vector<double> state_dev;
  std::vector<double> action_dev;
  EmpiricalLhs e;
  e.state_energy = norm_sum(dx, &state_dev);
  e.action_energy = norm_sum(du, &action_dev);
  e.state_max = state_dev.empty() ? 0.0 : *std::max_element(state_dev.begin(), state_dev.end());
  e.action_max = action_dev.empty() ? 0.0 : *std::max_element(action_dev.begin(), action_dev.end());

  double discount = 1.0;
  double gap = 0.0;
  for (Eigen::Index k = 0; k < nominal_mean.horizon(); ++k) {
    e.nominal_return += discount * nominal_mean.mean_rewards(k);
    e.disturbed_return += discount * disturbed_mean.mean_rewards(k);
    gap += discount * (disturbed_mean.mean_rewards(k) - nominal_mean.mean_rewards(k));
    discount *= gamma_d;
  }
  e.reward_gap = std::abs(gap);
  if (nominal_mean.horizon() > 0) {
    e.nominal_mean_reward = nominal_mean.mean_rewards.mean();
    e.disturbed_mean_reward = disturbed_mean.mean_rewards.mean();
  }
  r.empirical = e;

  auto check = [&](const char* name, double measured, double limit) {
    ++r.checks;
    if (exceeds(measured, limit)) r.violations.push_back({name, measured, limit});
  };
  check("state_energy", e.state_energy, r.state_bound.energy);
  check("state_max", e.state_max, r.state_bound.max);
  check("action_energy", e.action_energy, r.action_bound.energy);
  check("action_max", e.action_max, r.action_bound.max);
  check("reward_impact", e.reward_gap, *r.reward_impact_bound);
  check("generalization_error", e.reward_gap, *r.generalization_error_bound);

  for (Eigen::Index k = 0; k <= nominal_mean.horizon(); ++k) {
    DeviationRow row;
    row.k = static_cast<long>(k);
    row.state_dev = state_dev[static_cast<std::size_t>(k)];
    if (k < nominal_mean.horizon()) {
      row.action_dev = action_dev[static_cast<std::size_t>(k)];
      row.reward_nominal_mean = nominal_mean.mean_rewards(k);
      row.reward_disturbed_mean = disturbed_mean.mean_rewards(k);
    }
    r.deviations.push_back(row);
  }
  return r;
}

BoundReport verify_bounds(const MeanTrajectory& nominal_mean, const MeanTrajectory& disturbed_mean,
                          const TrajectoryEnsemble& nominal, const TrajectoryEnsemble& disturbed,
                          const KoopmanModel& model, double gamma, double gamma_d,
                          const RewardDescriptor& reward) {
  if (model.state_dim() != nominal_mean.mean_states.rows() ||
      model.action_dim() != nominal_mean.mean_actions.rows()) {
    throw DimensionError("model dimensions do not match the trajectories");
  }
  return verify_bounds(nominal_mean, disturbed_mean, nominal, disturbed, model_norms(model), gamma, gamma_d,
                       reward);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kPending = "pending verification data";

nlohmann::json real_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(std::string("bound report is missing field '") + field + "'", 0);
  const auto& v = j.at(field);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ParseError(std::string("field '") + field + "' is not a number", 0);
  }
  if (!v.is_number()) throw ParseError(std::string("field '") + field + "' is not a number", 0);
  return v.get<double>();
}

nlohmann::json optional_real(const std::optional<double>& v) {
  return v ? real_or_inf(*v) : nlohmann::json(kPending);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(std::string("bound report is missing field '") + field + "'", 0);
  const auto& v = j.at(field);
  if (v.is_string() && v.get<std::string>() == kPending) return std::nullopt;
  return real_from(j, field);
}

}  // namespace

void to_json(nlohmann::json& j, const BoundReport& r) {
  j = nlohmann::json::object();
  j["format"] = "kgen.bound_report";
  j["version"] = 1;
  j["label"] = r.label;
  j["gamma"] = r.gamma;
  j["gamma_d"] = r.gamma_d;
  j["K"] = r.horizon;
  j["runs"] = r.runs;
  j["hinf"] = {{"state", r.norms.state}, {"action", r.norms.action}};
  j["T_hinf"] = real_or_inf(r.t_hinf());
  j["Kf_hinf"] = real_or_inf(r.kf_hinf());
  j["M"] = real_or_inf(r.m);
  j["N"] = real_or_inf(r.n);
  j["L"] = optional_real(r.lipschitz);
  j["L_source"] = r.lipschitz ? nlohmann::json(r.lipschitz_source) : nlohmann::json(kPending);
  j["Q"] = optional_real(r.q);
  j["C"] = optional_real(r.c);
  j["bounds"] = {
      {"state_energy", real_or_inf(r.state_bound.energy)},
      {"state_max", real_or_inf(r.state_bound.max)},
      {"action_energy", real_or_inf(r.action_bound.energy)},
      {"action_max", real_or_inf(r.action_bound.max)},
      {"reward_impact", optional_real(r.reward_impact_bound)},
      {"generalization_error", optional_real(r.generalization_error_bound)},
  };
  nlohmann::json notes = nlohmann::json::object();
  if (r.q) notes["Q"] = "a posteriori: estimated from the disturbed rollouts the bound is checked against";
  if (r.lipschitz && r.lipschitz_source == "estimated-L") {
    notes["L"] = "sampled estimate, a lower bound on the true constant; reward bounds are not certified";
  }
  if (r.norms.state.infinite()) notes["T_hinf"] = "state operator has spectral radius >= 1; bounds are vacuous";
  if (r.norms.state.ill_conditioned) notes["T_hinf_conditioning"] = "spectral radius within 1e-6 of the unit circle";
  j["notes"] = notes;

  if (r.empirical) {
    const auto& e = *r.empirical;
    j["empirical"] = {
        {"state_energy", e.state_energy},   {"state_max", e.state_max},
        {"action_energy", e.action_energy}, {"action_max", e.action_max},
        {"reward_gap", e.reward_gap},       {"nominal_return", e.nominal_return},
        {"disturbed_return", e.disturbed_return},
        {"nominal_mean_reward", e.nominal_mean_reward},
        {"disturbed_mean_reward", e.disturbed_mean_reward},
        {"reward_impact_pct", e.reward_impact_pct()},
    };
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : r.violations) {
      v.push_back({{"bound", x.bound}, {"measured", x.measured}, {"limit", real_or_inf(x.limit)}});
    }
    j["violations"] = v;
    j["checks"] = r.checks;
    j["violation_rate"] = r.violation_rate();
  }
}

void from_json(const nlohmann::json& j, BoundReport& r) {
  if (!j.is_object()) throw ParseError("bound report must be a JSON object", 0);
  if (j.value("format", std::string()) != "kgen.bound_report") {
    throw ParseError("field 'format' must be \"kgen.bound_report\"", 0);
  }
  r = BoundReport{};
  r.label = j.value("label", std::string());
  r.gamma = real_from(j, "gamma");
  r.gamma_d = real_from(j, "gamma_d");
  r.horizon = j.value("K", 0L);
  r.runs = j.value("runs", std::size_t{0});
  if (!j.contains("hinf")) throw ParseError("bound report is missing field 'hinf'", 0);
  r.norms.state = j.at("hinf").at("state").get<HinfReport>();
  r.norms.action = j.at("hinf").at("action").get<HinfReport>();
  r.m = real_from(j, "M");
  r.n = real_from(j, "N");
  r.lipschitz = optional_from(j, "L");
  if (r.lipschitz) r.lipschitz_source = j.at("L_source").get<std::string>();
  r.q = optional_from(j, "Q");
  r.c = optional_from(j, "C");
  if (!j.contains("bounds")) throw ParseError("bound report is missing field 'bounds'", 0);
  const auto& b = j.at("bounds");
  r.state_bound = {real_from(b, "state_energy"), real_from(b, "state_max")};
  r.action_bound = {real_from(b, "action_energy"), real_from(b, "action_max")};
  r.reward_impact_bound = optional_from(b, "reward_impact");
  r.generalization_error_bound = optional_from(b, "generalization_error");
  if (j.contains("empirical")) {
    const auto& e = j.at("empirical");
    EmpiricalLhs lhs;
    lhs.state_energy = real_from(e, "state_energy");
    lhs.state_max = real_from(e, "state_max");
    lhs.action_energy = real_from(e, "action_energy");
    lhs.action_max = real_from(e, "action_max");
    lhs.reward_gap = real_from(e, "reward_gap");
    lhs.nominal_return = real_from(e, "nominal_return");
    lhs.disturbed_return = real_from(e, "disturbed_return");
    lhs.nominal_mean_reward = real_from(e, "nominal_mean_reward");
    lhs.disturbed_mean_reward = real_from(e, "disturbed_mean_reward");
    r.empirical = lhs;
    for (const auto& v : j.value("violations", nlohmann::json::array())) {
      r.violations.push_back({v.at("bound").get<std::string>(), real_from(v, "measured"), real_from(v, "limit")});
    }
    r.checks = j.value("checks", std::size_t{0});
  }
}

void write_deviation_table(std::ostream& out, const BoundReport& r) {
  std::string line = "k,state_dev,action_dev,reward_nominal_mean,reward_disturbed_mean\n";
  out << line;
  for (const auto& row : r.deviations) {
    line.clear();
    line += std::to_string(row.k);
    line += ',';
    append_real(line, row.state_dev);
    for (const auto& v : {row.action_dev, row.reward_nominal_mean, row.reward_disturbed_mean}) {
      line += ',';
      if (v) append_real(line, *v);
    }
    line += '\n';
    out << line;
  }
}

}  // namespace kgen
