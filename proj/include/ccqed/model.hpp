#pragma once

#include "ccqed/operator_core.hpp"

#include <string>
#include <vector>

namespace ccqed {

/// Physical parameters in units of the atom-cavity coupling g (time in 1/g).
/// The symmetric choices g_L = g_R, Omega_1 = Omega_2, omega_1 = -omega_2,
/// J_L = J_R, kappa_1 = kappa_2 and gamma_1 = gamma_2 are built in.
struct ModelParams {
  double g = 1.0;
  double Omega = 0.0;  ///< optical drive Rabi frequency
  double omega = 0.0;  ///< microwave Rabi frequency
  double Delta = 1.0;  ///< optical detuning
  double delta = 0.0;  ///< cavity two-photon detuning
  double J = 0.0;      ///< photon hopping
  double kappa = 0.0;  ///< cavity decay rate
  double gamma = 0.0;  ///< atomic decay rate

  /// Throws std::invalid_argument on negative or non-finite rates.
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

/// Detuning that makes the dominant dressed state resonant:
/// (g^2 + sqrt(g^4 + 4 J^2 Delta^2)) / (2 Delta).
double delta_star(double g, double J, double Delta);

SparseOperator build_H0(const ModelParams& p, const StateSpace& space);
SparseOperator build_Hg(const ModelParams& p, const StateSpace& space);

struct Drive {
  SparseOperator Vplus;
  SparseOperator Vminus;
};
Drive build_drive(const ModelParams& p, const StateSpace& space);

/// H0 + Hg + V+ + V-
SparseOperator build_H_full(const ModelParams& p, const StateSpace& space);

struct DelocalizedModes {
  SparseOperator cL1;  ///< (aL1 - aL2)/sqrt2
  SparseOperator cL2;  ///< (aL1 + aL2)/sqrt2
  SparseOperator cR1;  ///< (aR1 - aR2)/sqrt2
  SparseOperator cR2;  ///< (aR1 + aR2)/sqrt2
};
DelocalizedModes delocalized_modes(const StateSpace& space);

/// Jump operator with the rate already folded in (L = sqrt(rate) * X).
struct CollapseChannel {
  std::string label;
  SparseOperator op;
};

/// Cavity loss on the four delocalized modes and atomic spontaneous emission
/// (atom 1: e0 -> gL, ga, gR at gamma/3 each; atom 2: eL -> gL, g0 and
/// eR -> gR, g0 at gamma/2 each). Zero-rate channels are omitted.
std::vector<CollapseChannel> build_collapse_channels(const ModelParams& p,
                                                     const StateSpace& space);

struct TargetStates {
  StateVector T1;  ///< (|gLgR> + |gRgL> + |gag0>)/sqrt3
  StateVector T2;  ///< (|gLgR> + |gRgL> - 2|gag0>)/sqrt6
  StateVector T3;  ///< (|gLgR> - |gRgL>)/sqrt2
};
TargetStates target_states(const StateSpace& space);

/// |a1 a2> with vacuum photons.
StateVector ground_ket(const StateSpace& space, AtomLevel a1, AtomLevel a2);

/// Indices of the nine ground states with atom 1 in {gL, gR, ga} and atom 2 in
/// {gL, g0, gR}. Atom-1 g0 and atom-2 ga are never populated from this sector
/// and form separate invariant blocks.
std::vector<int> scheme_sector(const StateSpace& space);

}  // namespace ccqed
