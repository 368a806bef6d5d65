#pragma once

// Single-subgroup dynamics of a Lambda-type three-level atom.
//
// Basis order is |1> (ground), |2> (spin / metastable), |3> (excited).
// Times are in microseconds and all rates and Rabi frequencies in rad/us.
// The probe field drives |1>-|3>, the coupling field drives |2>-|3>.
//
// Sign convention: rho13 denotes <1|rho|3>. Between pulses it precesses as
// exp(+i*delta*t), and a resonant real probe started from |1><1| gives
// d(rho13)/dt = -i*Omega/2 (equivalently d(rho31)/dt = +i*Omega/2).

#include <complex>

#include <Eigen/Core>

namespace lambda_echo {

using Complex = std::complex<double>;
using Matrix3 = Eigen::Matrix3cd;

enum class Level : int { Ground = 0, Spin = 1, Excited = 2 };

/// Where the inhomogeneous optical detuning of a subgroup lives.
///
/// OpticalOnly puts delta on |1>, so |2>-|3> stays resonant for every
/// subgroup but the spin coherence rho12 also precesses at delta.
/// SharedUpper puts delta on |3>: both optical transitions are detuned
/// equally and the spin transition is homogeneous.
enum class DetuningModel { OpticalOnly, SharedUpper };

/// 3x3 Hermitian, unit-trace state of one detuning subgroup.
class DensityMatrix {
 public:
  DensityMatrix() : m_(Matrix3::Zero()) {}
  explicit DensityMatrix(const Matrix3& m) : m_(m) {}

  static DensityMatrix pure(Level level);

  const Matrix3& matrix() const { return m_; }

  Complex operator()(Level row, Level col) const {
    return m_(static_cast<int>(row), static_cast<int>(col));
  }
  double population(Level level) const {
    return m_(static_cast<int>(level), static_cast<int>(level)).real();
  }

  double trace() const { return m_.trace().real(); }
  /// Largest |rho(i,j) - conj(rho(j,i))|.
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  Matrix3 m_;
};

/// Phenomenological relaxation rates, all in 1/us. Defaults to no decay.
struct DecayParams {
  double gamma31 = 0.0;  ///< population decay |3> -> |1>
  double gamma32 = 0.0;  ///< population decay |3> -> |2>
  double gamma21 = 0.0;  ///< spin population decay |2> -> |1>
  double dephasing13 = 0.0;
  double dephasing23 = 0.0;
  double dephasing12 = 0.0;

  /// Throws std::invalid_argument if any rate is negative or not finite.
  void validate() const;
  bool is_zero() const;
};

struct DriveState {
  Complex omega_probe{0.0, 0.0};     ///< Rabi frequency on |1>-|3>
  Complex omega_coupling{0.0, 0.0};  ///< Rabi frequency on |2>-|3>
  double delta = 0.0;                ///< optical detuning of the subgroup
  DetuningModel model = DetuningModel::OpticalOnly;

  bool undriven() const {
    return omega_probe == Complex{} && omega_coupling == Complex{};
  }
};

/// Rotating-wave Hamiltonian: H(1,3) = -omega_p/2, H(2,3) = -omega_c/2,
/// conjugates mirrored, detuning on the diagonal as selected by the model.
Matrix3 build_hamiltonian(const DriveState& drive);

/// d(rho)/dt = -i[H, rho] + relaxation. Output is Hermitian and traceless.
Matrix3 master_rhs(const Matrix3& rho, const DriveState& drive,
                   const DecayParams& decays);

/// One classical RK4 step of length dt with a constant generator.
/// The result is re-Hermitized as (M + M^dagger)/2.
DensityMatrix step_fixed(const DensityMatrix& rho, const DriveState& drive,
                         const DecayParams& decays, double dt);

/// Exact propagation over dt with both drives off.
/// Throws std::invalid_argument if a drive is on or dt < 0.
DensityMatrix free_flight(const DensityMatrix& rho, const DriveState& drive,
                          const DecayParams& decays, double dt);

/// Free precession rate of rho(i,j), i.e. -(H(i,i) - H(j,j)).
double precession_rate(Level i, Level j, double delta, DetuningModel model);

/// Largest generalized Rabi frequency of the drive, used for step control.
double generalized_rabi(const DriveState& drive);

}  // namespace lambda_echo
