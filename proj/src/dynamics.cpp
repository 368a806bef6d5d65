#include "lambda_echo/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lambda_echo {

namespace {

constexpr int kG = 0;
constexpr int kS = 1;
constexpr int kE = 2;

Matrix3 hermitize(const Matrix3& m) {
  Matrix3 out;
  for (int i = 0; i < 3; ++i) {
    out(i, i) = Complex(m(i, i).real(), 0.0);
    for (int j = i + 1; j < 3; ++j) {
      out(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
      out(j, i) = std::conj(out(i, j));
    }
  }
  return out;
}

// Total population decay rate out of each level.
std::array<double, 3> outflow(const DecayParams& d) {
  return {0.0, d.gamma21, d.gamma31 + d.gamma32};
}

double coherence_damping(int i, int j, const DecayParams& d) {
  const auto out = outflow(d);
  double pure = 0.0;
  if ((i == kG && j == kE) || (i == kE && j == kG)) pure = d.dephasing13;
  if ((i == kS && j == kE) || (i == kE && j == kS)) pure = d.dephasing23;
  if ((i == kG && j == kS) || (i == kS && j == kG)) pure = d.dephasing12;
  return 0.5 * (out[i] + out[j]) + pure;
}

// (exp(-a t) - exp(-b t)) / (b - a), stable as b -> a.
double decay_transfer(double a, double b, double t) {
  const double x = (b - a) * t;
  if (std::abs(x) < 1e-12) return t * std::exp(-a * t);
  return std::exp(-a * t) * (-std::expm1(-x)) / (b - a);
}

}  // namespace

DensityMatrix DensityMatrix::pure(Level level) {
  Matrix3 m = Matrix3::Zero();
  const int k = static_cast<int>(level);
  m(k, k) = 1.0;
  return DensityMatrix(m);
}

double DensityMatrix::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix3> solver(m_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DecayParams::validate() const {
  const std::array<std::pair<const char*, double>, 6> rates{{
      {"gamma31", gamma31},
      {"gamma32", gamma32},
      {"gamma21", gamma21},
      {"dephasing13", dephasing13},
      {"dephasing23", dephasing23},
      {"dephasing12", dephasing12},
  }};
  for (const auto& [name, value] : rates) {
    if (!std::isfinite(value) || value < 0.0) {
      throw std::invalid_argument(std::string("decay rate ") + name +
                                  " must be finite and >= 0");
    }
  }
}

bool DecayParams::is_zero() const {
  return gamma31 == 0.0 && gamma32 == 0.0 && gamma21 == 0.0 &&
         dephasing13 == 0.0 && dephasing23 == 0.0 && dephasing12 == 0.0;
}

Matrix3 build_hamiltonian(const DriveState& drive) {
  Matrix3 h = Matrix3::Zero();
  if (drive.model == DetuningModel::OpticalOnly) {
    h(kG, kG) = -drive.delta;
  } else {
    h(kE, kE) = drive.delta;
  }
  h(kG, kE) = -0.5 * drive.omega_probe;
  h(kE, kG) = std::conj(h(kG, kE));
  h(kS, kE) = -0.5 * drive.omega_coupling;
  h(kE, kS) = std::conj(h(kS, kE));
  return h;
}

Matrix3 master_rhs(const Matrix3& rho, const DriveState& drive,
                   const DecayParams& decays) {
  const Matrix3 h = build_hamiltonian(drive);
  const Complex minus_i(0.0, -1.0);
  Matrix3 d = minus_i * (h * rho - rho * h);

  if (decays.is_zero()) return d;

  const double p2 = rho(kS, kS).real();
  const double p3 = rho(kE, kE).real();
  d(kG, kG) += decays.gamma31 * p3 + decays.gamma21 * p2;
  d(kS, kS) += decays.gamma32 * p3 - decays.gamma21 * p2;
  d(kE, kE) -= (decays.gamma31 + decays.gamma32) * p3;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) d(i, j) -= coherence_damping(i, j, decays) * rho(i, j);
    }
  }
  return d;
}

DensityMatrix step_fixed(const DensityMatrix& rho, const DriveState& drive,
                         const DecayParams& decays, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_fixed: dt must be > 0");
  const Matrix3& y = rho.matrix();
  const Matrix3 k1 = master_rhs(y, drive, decays);
  const Matrix3 k2 = master_rhs(y + (0.5 * dt) * k1, drive, decays);
  const Matrix3 k3 = master_rhs(y + (0.5 * dt) * k2, drive, decays);
  const Matrix3 k4 = master_rhs(y + dt * k3, drive, decays);
  const Matrix3 next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return DensityMatrix(hermitize(next));
}

double precession_rate(Level i, Level j, double delta, DetuningModel model) {
  DriveState drive;
  drive.delta = delta;
  drive.model = model;
  const Matrix3 h = build_hamiltonian(drive);
  const int a = static_cast<int>(i);
  const int b = static_cast<int>(j);
  return -(h(a, a).real() - h(b, b).real());
}

DensityMatrix free_flight(const DensityMatrix& rho, const DriveState& drive,
                          const DecayParams& decays, double dt) {
  if (!drive.undriven()) {
    throw std::invalid_argument("free_flight: drives must be off");
  }
  if (!(dt >= 0.0)) throw std::invalid_argument("free_flight: dt must be >= 0");

  const Matrix3& m = rho.matrix();
  Matrix3 out = Matrix3::Zero();

  const double p1 = m(kG, kG).real();
  const double p2 = m(kS, kS).real();
  const double p3 = m(kE, kE).real();
  const double g3 = decays.gamma31 + decays.gamma32;
  const double p3t = p3 * std::exp(-g3 * dt);
  const double p2t = p2 * std::exp(-decays.gamma21 * dt) +
                     decays.gamma32 * p3 * decay_transfer(g3, decays.gamma21, dt);
  out(kG, kG) = (p1 + p2 + p3) - p2t - p3t;
  out(kS, kS) = p2t;
  out(kE, kE) = p3t;

  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double rate = precession_rate(static_cast<Level>(i),
                                          static_cast<Level>(j), drive.delta,
                                          drive.model);
      const Complex factor =
          std::exp(Complex(-coherence_damping(i, j, decays) * dt, rate * dt));
      out(i, j) = m(i, j) * factor;
      out(j, i) = std::conj(out(i, j));
    }
  }
  return DensityMatrix(out);
}

double generalized_rabi(const DriveState& drive) {
  return std::sqrt(std::norm(drive.omega_probe) +
                   std::norm(drive.omega_coupling) +
                   drive.delta * drive.delta);
}

}  // namespace lambda_echo
