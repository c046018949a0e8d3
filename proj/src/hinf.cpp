#include "kgen/hinf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kgen/error.hpp"

namespace kgen {

namespace {

using cd = std::complex<double>;

Eigen::VectorXcd eigenvalues_of(const Eigen::MatrixXd& k) {
  if (k.size() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(k, false);
  if (es.info() != Eigen::Success) throw DataError("eigenvalue computation failed");
  return es.eigenvalues();
}

// σ_max of B = (e^{jω}I - K)⁻¹ as sqrt(λ_max(BᴴB)); the largest eigenvalue of a
// Hermitian matrix is relatively accurate, so peaks keep full precision.
class ResolventGain {
 public:
  explicit ResolventGain(const Eigen::MatrixXd& k) : k_(k.cast<cd>()), eig_(eigenvalues_of(k)) {}

  const Eigen::VectorXcd& eigenvalues() const { return eig_; }

  double operator()(double omega) const {
    const cd z = std::polar(1.0, omega);
    check_poles(z);
    Eigen::MatrixXcd a = -k_;
    a.diagonal().array() += z;
    const Eigen::MatrixXcd b = a.partialPivLu().inverse();
    if (!b.allFinite()) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b.adjoint() * b, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }

  void check_poles(cd z) const {
    for (Eigen::Index i = 0; i < eig_.size(); ++i) {
      if (std::abs(z - eig_(i)) <= kPoleProximity) {
        throw PoleProximityError("frequency response evaluated at a pole", eig_(i));
      }
    }
  }

 private:
  Eigen::MatrixXcd k_;
  Eigen::VectorXcd eig_;
};

double sigma_max(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

struct Peak {
  double omega = 0.0;
  double value = -1.0;
};

// Golden-section search for a maximum of f on [lo, hi]; returns the best point seen.
template <typename F>
Peak golden_max(const F& f, double lo, double hi, double tol, Peak best) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  auto consider = [&](double w, double v) {
    if (v > best.value) best = {w, v};
  };
  consider(c, fc);
  consider(d, fd);
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
      consider(c, fc);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
      consider(d, fd);
    }
  }
  return best;
}

}  // namespace

TransferFunction TransferFunction::resolvent(Eigen::MatrixXd k) {
  if (k.rows() != k.cols()) throw DimensionError("resolvent transfer function needs a square matrix");
  if (!k.allFinite()) throw DataError("transfer function matrix contains non-finite entries");
  return TransferFunction(Resolvent{std::move(k)});
}

TransferFunction TransferFunction::constant(Eigen::MatrixXd m) {
  if (!m.allFinite()) throw DataError("transfer function matrix contains non-finite entries");
  return TransferFunction(Constant{std::move(m)});
}

const Eigen::MatrixXd& TransferFunction::matrix() const {
  return std::visit([](const auto& v) -> const Eigen::MatrixXd& {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Resolvent>) {
      return v.k;
    } else {
      return v.m;
    }
  }, kind_);
}

double spectral_radius(const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols()) throw DimensionError("spectral_radius needs a square matrix");
  if (!k.allFinite()) throw DataError("spectral_radius: non-finite entries");
  const auto ev = eigenvalues_of(k);
  return ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
}

FrequencyResponse frequency_response(const TransferFunction& tf, double omega) {
  const auto& m = tf.matrix();
  if (!tf.is_resolvent()) {
    return {m.cast<cd>(), sigma_max(m)};
  }
  const ResolventGain gain(m);
  const cd z = std::polar(1.0, omega);
  gain.check_poles(z);
  Eigen::MatrixXcd a = -m.cast<cd>();
  a.diagonal().array() += z;
  FrequencyResponse out;
  out.value = a.partialPivLu().inverse();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.value);
  out.sigma_max = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return out;
}

HinfReport hinf_norm(const TransferFunction& tf, int grid_points, double refinement_tol) {
  if (grid_points < 16) throw ParameterError("hinf_norm: grid_points must be >= 16");
  if (!(refinement_tol > 0.0)) throw ParameterError("hinf_norm: refinement_tol must be > 0");

  HinfReport report;
  report.grid_points = grid_points;
  report.refinement_tol = refinement_tol;
  const auto& m = tf.matrix();

  if (!tf.is_resolvent()) {
    report.resolvent = false;
    report.value = sigma_max(m);
    report.omega_star = 0.0;
    report.spectral_radius = 0.0;
    report.converged = true;
    return report;
  }

  const ResolventGain gain(m);
  const auto& ev = gain.eigenvalues();
  report.spectral_radius = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  if (ev.size() == 0) {
    report.converged = true;
    return report;
  }
  if (report.spectral_radius >= 1.0) {
    Eigen::Index arg = 0;
    ev.cwiseAbs().maxCoeff(&arg);
    report.value = std::numeric_limits<double>::infinity();
    report.omega_star = std::abs(std::arg(ev(arg)));
    report.converged = false;
    return report;
  }
  report.ill_conditioned = report.spectral_radius >= 1.0 - kIllConditionedBand;

  try {
    const double step = std::numbers::pi / (grid_points - 1);
    std::vector<double> values(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) values[i] = gain(i * step);

    Peak best;
    for (int i = 0; i < grid_points; ++i) {
      if (values[i] > best.value) best = {i * step, values[i]};
    }

    // Local maxima of the grid, strongest first.
    std::vector<int> local;
    for (int i = 0; i < grid_points; ++i) {
      const bool left_ok = i == 0 || values[i] >= values[i - 1];
      const bool right_ok = i == grid_points - 1 || values[i] >= values[i + 1];
      if (left_ok && right_ok) local.push_back(i);
    }
    std::sort(local.begin(), local.end(), [&](int a, int b) { return values[a] > values[b]; });
    constexpr std::size_t kMaxGridSeeds = 8;
    if (local.size() > kMaxGridSeeds) local.resize(kMaxGridSeeds);

    std::vector<double> seeds;
    for (int i : local) seeds.push_back(i * step);
    for (Eigen::Index i = 0; i < ev.size(); ++i) seeds.push_back(std::abs(std::arg(ev(i))));
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end(),
                            [&](double a, double b) { return b - a < 0.5 * step; }),
                seeds.end());

    for (double s : seeds) {
      const double lo = std::max(0.0, s - step);
      const double hi = std::min(std::numbers::pi, s + step);
      best = golden_max(gain, lo, hi, refinement_tol, best);
    }
    report.value = best.value;
    report.omega_star = best.omega;
    report.converged = std::isfinite(best.value);
  } catch (const PoleProximityError& e) {
    report.value = std::numeric_limits<double>::infinity();
    report.omega_star = std::abs(std::arg(e.eigenvalue()));
    report.converged = false;
  }
  return report;
}

void to_json(nlohmann::json& j, const HinfReport& r) {
  j = nlohmann::json{
      {"kind", r.resolvent ? "resolvent" : "constant"},
      {"omega_star", r.omega_star},
      {"spectral_radius", r.spectral_radius},
      {"grid_points", r.grid_points},
      {"refinement_tol", r.refinement_tol},
      {"converged", r.converged},
      {"ill_conditioned", r.ill_conditioned},
  };
  if (r.infinite()) {
    j["value"] = "inf";
  } else {
    j["value"] = r.value;
  }
}

void from_json(const nlohmann::json& j, HinfReport& r) {
  r.resolvent = j.at("kind").get<std::string>() == "resolvent";
  const auto& v = j.at("value");
  if (v.is_string()) {
    if (v.get<std::string>() != "inf") throw ParseError("H-infinity value must be a number or \"inf\"", 0);
    r.value = std::numeric_limits<double>::infinity();
  } else {
    r.value = v.get<double>();
  }
  r.omega_star = j.at("omega_star").get<double>();
  r.spectral_radius = j.at("spectral_radius").get<double>();
  r.grid_points = j.at("grid_points").get<int>();
  r.refinement_tol = j.at("refinement_tol").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.ill_conditioned = j.value("ill_conditioned", false);
}

}  // namespace kgen
