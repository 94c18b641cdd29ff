#include "levcav/sim.hpp"

#include <Eigen/Dense>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"

namespace levcav {

double default_time_step(const BackactionModel& m) {
  return 0.04 / std::max(m.omega0, m.kappa);
}

namespace {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Dimensionless state (u, w, br, bi): x = x_th u, v = Ω0 x_th w, a = (G x_th/Ω0) b.
Mat4 drift(const BackactionModel& m) {
  Mat4 a = Mat4::Zero();
  const double w0 = m.omega0;
  a(0, 1) = w0;
  a(1, 0) = -w0;
  a(1, 1) = -m.gamma_m;
  a(1, 2) = 2.0 * m.coupling * m.coupling / w0;
  a(2, 2) = -m.kappa / 2.0;
  a(2, 3) = m.detuning;
  a(3, 0) = w0;
  a(3, 2) = -m.detuning;
  a(3, 3) = -m.kappa / 2.0;
  return a;
}

struct Discretization {
  Mat4 transition;
  Mat4 noise_factor;  // L with L Lᵀ = Q
};

// Van Loan: exp([[-A, BBᵀ],[0, Aᵀ]] dt) yields e^{A dt} and the step noise covariance.
Discretization discretize(const Mat4& a, double diffusion, double dt) {
  Eigen::Matrix<double, 8, 8> c = Eigen::Matrix<double, 8, 8>::Zero();
  c.topLeftCorner<4, 4>() = -a * dt;
  c.topRightCorner<4, 4>()(1, 1) = diffusion * dt;
  c.bottomRightCorner<4, 4>() = a.transpose() * dt;
  const Eigen::Matrix<double, 8, 8> e = c.exp();
  Discretization d;
  d.transition = e.bottomRightCorner<4, 4>().transpose();
  Mat4 q = d.transition * e.topRightCorner<4, 4>();
  q = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Mat4> es(q);
  Vec4 ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  d.noise_factor = es.eigenvectors() * ev.asDiagonal();
  return d;
}

}  // namespace

TimeSeries simulate(const SimConfig& cfg, const BackactionModel& m) {
  validate(m);
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_time_step(m);
  if (!(dt * m.omega0 < 0.05)) {
    std::ostringstream os;
    os << "time step too coarse: dt*Omega0 = " << dt * m.omega0 << " (must be < 0.05)";
    throw DomainError(os.str());
  }
  if (cfg.decimation == 0) throw DomainError("decimation must be >= 1");
  if (!(cfg.duration > 0.0)) throw DomainError("duration must be positive");
  // Static stability; throws InstabilityError for an anti-restoring spring.
  (void)backaction(m, 0.0);

  const double x_th =
      std::sqrt(PhysicalConstants::kB * m.bath_temperature / (m.mass * m.omega0 * m.omega0));
  const double xgs = std::sqrt(PhysicalConstants::hbar / (m.mass * m.omega0));

  const Discretization d = discretize(drift(m), cfg.thermal_noise ? 2.0 * m.gamma_m : 0.0, dt);

  const double transient = cfg.transient > 0.0 ? cfg.transient : 10.0 / m.gamma_m;
  const auto skip = static_cast<std::size_t>(std::ceil(transient / dt));
  const auto samples = static_cast<std::size_t>(std::llround(cfg.duration / (dt * cfg.decimation)));

  TimeSeries ts;
  ts.dt = dt * static_cast<double>(cfg.decimation);
  ts.field_coupling = m.coupling / xgs;
  ts.kappa = m.kappa;
  ts.detuning = m.detuning;
  ts.seed = cfg.seed;
  ts.x.reserve(samples);
  ts.response_re.reserve(samples);
  ts.response_im.reserve(samples);

  boost::random::mt19937_64 rng(cfg.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  Vec4 y(cfg.initial_displacement / x_th, 0.0, 0.0, 0.0);
  const double limit = 100.0 * std::max(1.0, std::abs(y[0]));
  const double response_scale = x_th / m.omega0;
  const std::size_t total = skip + samples * cfg.decimation;
  for (std::size_t step = 0; step < total; ++step) {
    if (cfg.thermal_noise) {
      const Vec4 xi(normal(rng), normal(rng), normal(rng), normal(rng));
      y = d.transition * y + d.noise_factor * xi;
    } else {
      y = d.transition * y;
    }
    if (!(std::abs(y[0]) < limit)) {
      std::ostringstream os;
      os << "trajectory diverged at t=" << dt * static_cast<double>(step)
         << " s (|x| > 100 thermal amplitudes); detuning=" << m.detuning
         << " rad/s, coupling=" << m.coupling << " rad/s";
      throw InstabilityError(os.str());
    }
    if (step >= skip && (step - skip + 1) % cfg.decimation == 0) {
      ts.x.push_back(x_th * y[0]);
      ts.response_re.push_back(response_scale * y[2]);
      ts.response_im.push_back(response_scale * y[3]);
    }
  }
  return ts;
}

std::vector<double> synth_heterodyne(const TimeSeries& ts, const HeterodyneReadout& r) {
  if (!(r.kappa > 0.0)) throw DomainError("readout kappa must be positive");
  if (ts.response_re.size() != ts.size() || ts.response_im.size() != ts.size())
    throw DomainError("time series carries no field response");
  const double gain = std::sqrt(r.kappa) * r.zeta_c * r.alpha_c;
  const double c = std::cos(r.theta), s = std::sin(r.theta);
  std::vector<double> out(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i)
    out[i] = 2.0 * gain * (ts.response_re[i] * c - ts.response_im[i] * s);
  if (r.detection_noise > 0.0) {
    // one-sided level N (units/√Hz) -> per-sample std N sqrt(fs/2)
    const double sigma = r.detection_noise * std::sqrt(0.5 / ts.dt);
    boost::random::mt19937_64 rng(r.noise_seed);
    boost::random::normal_distribution<double> normal(0.0, sigma);
    for (double& v : out) v += normal(rng);
  }
  return out;
}

}  // namespace levcav
