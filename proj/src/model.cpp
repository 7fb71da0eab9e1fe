#include "ccqed/model.hpp"

#include <cmath>
#include <stdexcept>

namespace ccqed {

using L = AtomLevel;

void ModelParams::validate() const {
  const double values[] = {g, Omega, omega, Delta, delta, J, kappa, gamma};
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("ModelParams: non-finite parameter");
  }
  if (kappa < 0.0) throw std::invalid_argument("ModelParams: kappa must be >= 0");
  if (gamma < 0.0) throw std::invalid_argument("ModelParams: gamma must be >= 0");
}

double delta_star(double g, double J, double Delta) {
  if (Delta <= 0.0) throw std::invalid_argument("delta_star: Delta must be > 0");
  const double g2 = g * g;
  return (g2 + std::sqrt(g2 * g2 + 4.0 * J * J * Delta * Delta)) / (2.0 * Delta);
}

SparseOperator build_H0(const ModelParams& p, const StateSpace& space) {
  p.validate();
  const int dim = space.dimension();
  const auto aL1 = lift_mode_annihilator(space, Mode::aL1);
  const auto aL2 = lift_mode_annihilator(space, Mode::aL2);
  const auto aR1 = lift_mode_annihilator(space, Mode::aR1);
  const auto aR2 = lift_mode_annihilator(space, Mode::aR2);

  SparseOperator h(dim);
  for (const auto* a : {&aL1, &aL2, &aR1, &aR2}) h = h + p.delta * (a->adjoint() * *a);

  // Atom lowering acts before photon creation so the truncated product is exact.
  const auto s1_gL_e0 = lift_atom_op(space, Atom::first, L::gL, L::e0);
  const auto s1_gR_e0 = lift_atom_op(space, Atom::first, L::gR, L::e0);
  const auto s2_g0_eR = lift_atom_op(space, Atom::second, L::g0, L::eR);
  const auto s2_g0_eL = lift_atom_op(space, Atom::second, L::g0, L::eL);
  SparseOperator coupling = aL1.adjoint() * s1_gL_e0 + aL2.adjoint() * s2_g0_eR +
                            aR1.adjoint() * s1_gR_e0 + aR2.adjoint() * s2_g0_eL;
  coupling = p.g * coupling;
  h = h + coupling + coupling.adjoint();

  h = h + p.Delta * (lift_atom_op(space, Atom::first, L::e0, L::e0) +
                     lift_atom_op(space, Atom::second, L::eL, L::eL) +
                     lift_atom_op(space, Atom::second, L::eR, L::eR));

  const SparseOperator hop = p.J * (aL1.adjoint() * aL2 + aR1.adjoint() * aR2);
  return h + hop + hop.adjoint();
}

SparseOperator build_Hg(const ModelParams& p, const StateSpace& space) {
  p.validate();
  const double omega1 = p.omega;
  const double omega2 = -p.omega;
  const SparseOperator half =
      omega1 * (lift_atom_op(space, Atom::first, L::gL, L::ga) +
                lift_atom_op(space, Atom::first, L::gR, L::ga)) +
      omega2 * (lift_atom_op(space, Atom::second, L::gL, L::g0) +
                lift_atom_op(space, Atom::second, L::gR, L::g0));
  return half + half.adjoint();
}

Drive build_drive(const ModelParams& p, const StateSpace& space) {
  p.validate();
  SparseOperator vplus = p.Omega * (lift_atom_op(space, Atom::first, L::e0, L::ga) +
                                    lift_atom_op(space, Atom::second, L::eL, L::gL) +
                                    lift_atom_op(space, Atom::second, L::eR, L::gR));
  SparseOperator vminus = vplus.adjoint();
  return {std::move(vplus), std::move(vminus)};
}

SparseOperator build_H_full(const ModelParams& p, const StateSpace& space) {
  const Drive drive = build_drive(p, space);
  return build_H0(p, space) + build_Hg(p, space) + drive.Vplus + drive.Vminus;
}

DelocalizedModes delocalized_modes(const StateSpace& space) {
  const double r = 1.0 / std::sqrt(2.0);
  const auto aL1 = lift_mode_annihilator(space, Mode::aL1);
  const auto aL2 = lift_mode_annihilator(space, Mode::aL2);
  const auto aR1 = lift_mode_annihilator(space, Mode::aR1);
  const auto aR2 = lift_mode_annihilator(space, Mode::aR2);
  return {r * (aL1 - aL2), r * (aL1 + aL2), r * (aR1 - aR2), r * (aR1 + aR2)};
}

std::vector<CollapseChannel> build_collapse_channels(const ModelParams& p,
                                                     const StateSpace& space) {
  p.validate();
  std::vector<CollapseChannel> channels;
  if (p.kappa > 0.0) {
    const double s = std::sqrt(p.kappa);
    const DelocalizedModes c = delocalized_modes(space);
    channels.push_back({"kappa.cL1", s * c.cL1});
    channels.push_back({"kappa.cL2", s * c.cL2});
    channels.push_back({"kappa.cR1", s * c.cR1});
    channels.push_back({"kappa.cR2", s * c.cR2});
  }
  if (p.gamma > 0.0) {
    const double s1 = std::sqrt(p.gamma / 3.0);
    const double s2 = std::sqrt(p.gamma / 2.0);
    channels.push_back({"gamma1.gL", s1 * lift_atom_op(space, Atom::first, L::gL, L::e0)});
    channels.push_back({"gamma1.ga", s1 * lift_atom_op(space, Atom::first, L::ga, L::e0)});
    channels.push_back({"gamma1.gR", s1 * lift_atom_op(space, Atom::first, L::gR, L::e0)});
    channels.push_back({"gamma2.gL", s2 * lift_atom_op(space, Atom::second, L::gL, L::eL)});
    channels.push_back({"gamma2.g0_from_eL", s2 * lift_atom_op(space, Atom::second, L::g0, L::eL)});
    channels.push_back({"gamma2.gR", s2 * lift_atom_op(space, Atom::second, L::gR, L::eR)});
    channels.push_back({"gamma2.g0_from_eR", s2 * lift_atom_op(space, Atom::second, L::g0, L::eR)});
  }
  return channels;
}

StateVector ground_ket(const StateSpace& space, AtomLevel a1, AtomLevel a2) {
  return basis_vector(space, BasisState{a1, a2, {}});
}

TargetStates target_states(const StateSpace& space) {
  const StateVector lr = ground_ket(space, L::gL, L::gR);
  const StateVector rl = ground_ket(space, L::gR, L::gL);
  const StateVector a0 = ground_ket(space, L::ga, L::g0);
  return {(lr + rl + a0) / std::sqrt(3.0), (lr + rl - 2.0 * a0) / std::sqrt(6.0),
          (lr - rl) / std::sqrt(2.0)};
}

std::vector<int> scheme_sector(const StateSpace& space) {
  std::vector<int> out;
  for (int i = 0; i < space.dimension(); ++i) {
    const auto& s = space.state(i);
    if (s.excitation() != 0) continue;
    if (s.atom1 == L::g0 || s.atom2 == L::ga) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace ccqed
