#include "ccqed/effective.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace ccqed {

using L = AtomLevel;

namespace {

std::string describe(const ModelParams& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "g=%.6g Omega=%.6g omega=%.6g Delta=%.6g delta=%.6g J=%.6g kappa=%.6g gamma=%.6g",
                p.g, p.Omega, p.omega, p.Delta, p.delta, p.J, p.kappa, p.gamma);
  return buf;
}

double norm1(const Eigen::MatrixXcd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

// Dense helper over the 16-dim ground basis used by the closed forms.
class GroundAlgebra {
 public:
  explicit GroundAlgebra(const StateSpace& basis) : basis_(basis) {
    const TargetStates t = target_states(basis);
    T1 = t.T1;
    T2 = t.T2;
    T3 = t.T3;
  }
  StateVector ket(L a1, L a2) const { return ground_ket(basis_, a1, a2); }
  static Eigen::MatrixXcd outer(const StateVector& x, const StateVector& y) { return x * y.adjoint(); }
  Eigen::MatrixXcd diag(L a1, L a2) const {
    const StateVector k = ket(a1, a2);
    return outer(k, k);
  }
  Eigen::MatrixXcd zero() const {
    return Eigen::MatrixXcd::Zero(basis_.dimension(), basis_.dimension());
  }

  StateVector T1, T2, T3;

 private:
  const StateSpace& basis_;
};

}  // namespace

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::numeric:
      return "numeric";
    case Provenance::closed_form_gamma:
      return "closed_form_gamma";
    case Provenance::closed_form_kappa:
      return "closed_form_kappa";
  }
  return "unknown";
}

SubspaceSplit split_by_excitation(const StateSpace& space) {
  SubspaceSplit split;
  for (int i = 0; i < space.dimension(); ++i) {
    (space.state(i).excitation() == 0 ? split.ground : split.excited).push_back(i);
  }
  return split;
}

ClosedFormContext ClosedFormContext::from(const ModelParams& p) {
  const cplx i(0.0, 1.0);
  ClosedFormContext c;
  c.J2_tilde = p.J * p.J - p.delta * p.delta;
  c.Delta_tilde = p.Delta - i * p.gamma / 2.0;
  c.delta_tilde = p.delta - i * p.kappa / 2.0;
  c.J2_tilde_prime = p.J * p.J - c.delta_tilde * c.delta_tilde;
  return c;
}

SparseOperator build_H_NH(const ModelParams& p, const StateSpace& space) {
  SparseOperator h = build_H0(p, space);
  SparseOperator loss(space.dimension());
  for (const auto& ch : build_collapse_channels(p, space)) loss = loss + ch.op.adjoint() * ch.op;
  return h + cplx(0.0, -0.5) * loss;
}

EffectiveModel reduce_effective(const ModelParams& p, const StateSpace& space,
                                const ReductionOptions& options) {
  const SubspaceSplit split = split_by_excitation(space);
  const SparseOperator h_nh = build_H_NH(p, space);
  const Drive drive = build_drive(p, space);
  const auto channels = build_collapse_channels(p, space);

  // Excitation-1 states connected to the image of V+ through H_NH.
  const int dim = space.dimension();
  std::vector<char> in_block(static_cast<std::size_t>(dim), 0);
  std::queue<int> frontier;
  const auto seed_matrix = drive.Vplus.matrix();
  for (int r = 0; r < dim; ++r) {
    if (space.state(r).excitation() != 1) continue;
    for (SparseOperator::Matrix::InnerIterator it(seed_matrix, r); it; ++it) {
      if (space.state(static_cast<int>(it.col())).excitation() == 0 && !in_block[r]) {
        in_block[r] = 1;
        frontier.push(r);
      }
    }
  }
  const SparseOperator::Matrix h_sym = h_nh.matrix() + SparseOperator::Matrix(h_nh.matrix().transpose());
  while (!frontier.empty()) {
    const int r = frontier.front();
    frontier.pop();
    for (SparseOperator::Matrix::InnerIterator it(h_sym, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (!in_block[c] && space.state(c).excitation() == 1) {
        in_block[c] = 1;
        frontier.push(c);
      }
    }
  }
  std::vector<int> block;
  for (int i = 0; i < dim; ++i) {
    if (in_block[i]) block.push_back(i);
  }

  EffectiveModel model{ground_manifold(space), SparseOperator(static_cast<int>(split.ground.size())),
                       {}, Provenance::numeric, 0.0};
  const int n_ground = static_cast<int>(split.ground.size());

  Eigen::MatrixXcd h_inv;
  if (!block.empty()) {
    Eigen::MatrixXcd b(block.size(), block.size());
    for (std::size_t r = 0; r < block.size(); ++r) {
      for (std::size_t c = 0; c < block.size(); ++c) b(r, c) = h_nh.coeff(block[r], block[c]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(b);
    h_inv = lu.inverse();
    const double condition = norm1(b) * norm1(h_inv);
    model.condition = condition;
    if (!std::isfinite(condition) || condition > options.max_condition) {
      throw SingularBlockError("reduce_effective: near-singular excited block (condition " +
                                   std::to_string(condition) + ") at " + describe(p),
                               condition);
    }
  }

  auto dense_block = [&](const SparseOperator& op, const std::vector<int>& rows,
                         const std::vector<int>& cols) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = op.coeff(rows[r], cols[c]);
    }
    return m;
  };

  const Eigen::MatrixXcd hg = dense_block(build_Hg(p, space), split.ground, split.ground);
  if (block.empty()) {
    model.H_eff = SparseOperator::from_dense(hg);
    for (const auto& ch : channels) model.jumps.push_back({ch.label, SparseOperator(n_ground)});
    return model;
  }

  const Eigen::MatrixXcd vplus = dense_block(drive.Vplus, block, split.ground);
  const Eigen::MatrixXcd propagated = h_inv * vplus;
  Eigen::MatrixXcd h_eff =
      -0.5 * (vplus.adjoint() * propagated + vplus.adjoint() * h_inv.adjoint() * vplus) + hg;
  // Both halves are adjoints of each other; symmetrize away rounding.
  h_eff = 0.5 * (h_eff + h_eff.adjoint()).eval();
  model.H_eff = SparseOperator::from_dense(h_eff);

  for (const auto& ch : channels) {
    const Eigen::MatrixXcd l = dense_block(ch.op, split.ground, block);
    model.jumps.push_back({ch.label, SparseOperator::from_dense(l * propagated)});
  }
  return model;
}

EffectiveModel closed_form_gamma(const ModelParams& p, const StateSpace& space) {
  p.validate();
  if (p.kappa != 0.0) throw std::invalid_argument("closed_form_gamma: requires kappa = 0");
  EffectiveModel model{ground_manifold(space), SparseOperator(0), {}, Provenance::closed_form_gamma, 0.0};
  const GroundAlgebra G(model.basis);
  const auto ctx = ClosedFormContext::from(p);
  const double g = p.g, g2 = g * g, W = p.Omega, W2 = W * W, J = p.J, d = p.delta;
  const cplx Jt = ctx.J2_tilde, Dt = ctx.Delta_tilde;

  const cplx single = -Jt / (g2 * d + Jt * Dt);
  const cplx pair = -Jt / (2.0 * g2 * d + Jt * Dt);
  const cplx den = 2.0 * g2 * g2 - 3.0 * g2 * d * Dt - Jt * Dt * Dt;

  Eigen::MatrixXcd h = G.zero();
  h += W2 * single.real() * (G.diag(L::gL, L::gL) + G.diag(L::gR, L::gR) + G.outer(G.T3, G.T3));
  h += W2 * (pair + single).real() * (G.diag(L::ga, L::gL) + G.diag(L::ga, L::gR));
  h += W2 / 3.0 * ((g2 * (4.0 * J + 5.0 * d) + 3.0 * Jt * Dt) / den).real() * G.outer(G.T1, G.T1);
  h += W2 / 3.0 * ((-4.0 * g2 * (J - d) + 3.0 * Jt * Dt) / den).real() * G.outer(G.T2, G.T2);
  h += std::sqrt(2.0) * W2 / 3.0 * ((-g2 * (J - d)) / den).real() *
       (G.outer(G.T1, G.T2) + G.outer(G.T2, G.T1));
  h += build_Hg(p, model.basis).dense();
  model.H_eff = SparseOperator::from_dense(h);

  if (p.gamma == 0.0) return model;
  const double gm = p.gamma;

  // Atom 1 decays from e0 into gL, ga, gR.
  const cplx c_pair = std::sqrt(gm / 3.0) * W * Jt / (2.0 * g2 * d + Jt * Dt);
  const cplx c_t1 = std::sqrt(gm) * W / 3.0 * (-g2 * (2.0 * J + d) - Jt * Dt) / den;
  const cplx c_t2 = std::sqrt(2.0 * gm) * W / 3.0 * (-g2 * (J - d) + Jt * Dt) / den;
  for (auto [name, level] : {std::pair{"gamma1.gL", L::gL}, {"gamma1.ga", L::ga}, {"gamma1.gR", L::gR}}) {
    Eigen::MatrixXcd l = c_pair * (G.outer(G.ket(level, L::gL), G.ket(L::ga, L::gL)) +
                                   G.outer(G.ket(level, L::gR), G.ket(L::ga, L::gR)));
    l += c_t1 * G.outer(G.ket(level, L::g0), G.T1);
    l += c_t2 * G.outer(G.ket(level, L::g0), G.T2);
    model.jumps.push_back({name, SparseOperator::from_dense(l)});
  }

  // Atom 2 decays from eL/eR.
  const cplx a_t1 = std::sqrt(6.0 * gm) * W / 6.0 * (-g2 * (J + 2.0 * d) - Jt * Dt) / den;
  const cplx a_t2 = std::sqrt(3.0 * gm) * W / 6.0 * (2.0 * g2 * (J - d) - Jt * Dt) / den;
  const cplx a_res = std::sqrt(2.0 * gm) * W / 2.0 * Jt / (g2 * d + Jt * Dt);
  const double r2 = 1.0 / std::sqrt(2.0);
  struct Side {
    const char* name;
    L own;
    L other;
    double t3_sign;
  };
  for (const Side side : {Side{"gamma2.gL", L::gL, L::gR, -1.0}, Side{"gamma2.gR", L::gR, L::gL, 1.0}}) {
    const StateVector swapped = G.ket(side.other, side.own);
    Eigen::MatrixXcd l = a_t1 * G.outer(swapped, G.T1) + a_t2 * G.outer(swapped, G.T2);
    l += a_res * (G.diag(side.own, side.own) + G.diag(L::ga, side.own) +
                  side.t3_sign * r2 * G.outer(swapped, G.T3));
    model.jumps.push_back({side.name, SparseOperator::from_dense(l)});
  }
  {
    const StateVector l0 = G.ket(L::gL, L::g0), r0 = G.ket(L::gR, L::g0), a0 = G.ket(L::ga, L::g0);
    Eigen::MatrixXcd l =
        a_res * (G.outer(l0, G.ket(L::gL, L::gL)) + G.outer(a0, G.ket(L::ga, L::gL)) +
                 G.outer(a0, G.ket(L::ga, L::gR)) + G.outer(r0, G.ket(L::gR, L::gR)) +
                 r2 * G.outer(l0 - r0, G.T3));
    l += a_t1 * G.outer(l0 + r0, G.T1) + a_t2 * G.outer(l0 + r0, G.T2);
    model.jumps.push_back({"gamma2.g0", SparseOperator::from_dense(l)});
  }
  return model;
}

EffectiveModel closed_form_kappa(const ModelParams& p, const StateSpace& space) {
  p.validate();
  if (p.gamma != 0.0) throw std::invalid_argument("closed_form_kappa: requires gamma = 0");
  EffectiveModel model{ground_manifold(space), SparseOperator(0), {}, Provenance::closed_form_kappa, 0.0};
  const GroundAlgebra G(model.basis);
  const auto ctx = ClosedFormContext::from(p);
  const double g = p.g, g2 = g * g, W = p.Omega, W2 = W * W, J = p.J, D = p.Delta;
  const cplx Jp = ctx.J2_tilde_prime, dt = ctx.delta_tilde;

  const cplx single = -Jp / (g2 * dt + D * Jp);
  const cplx pair = -Jp / (2.0 * g2 * dt + D * Jp);
  const cplx den = 2.0 * g2 * g2 - 3.0 * g2 * dt * D - Jp * D * D;

  Eigen::MatrixXcd h = G.zero();
  h += W2 * single.real() * (G.diag(L::gL, L::gL) + G.diag(L::gR, L::gR) + G.outer(G.T3, G.T3));
  h += W2 * (single + pair).real() * (G.diag(L::ga, L::gL) + G.diag(L::ga, L::gR));
  h += W2 / 3.0 * ((g2 * (4.0 * J + 5.0 * dt) + 3.0 * Jp * D) / den).real() * G.outer(G.T1, G.T1);
  h += W2 / 3.0 * ((-4.0 * g2 * (J - dt) + 3.0 * Jp * D) / den).real() * G.outer(G.T2, G.T2);
  h += std::sqrt(2.0) * W2 / 3.0 * ((-g2 * (J - dt)) / den).real() *
       (G.outer(G.T1, G.T2) + G.outer(G.T2, G.T1));
  h += build_Hg(p, model.basis).dense();
  model.H_eff = SparseOperator::from_dense(h);

  if (p.kappa == 0.0) return model;
  const double k = p.kappa;
  const double r2 = 1.0 / std::sqrt(2.0);
  const cplx sk2 = std::sqrt(2.0 * k) * W / 2.0;
  const cplx sk6 = std::sqrt(6.0 * k) * W / 6.0;
  const cplx sk3 = std::sqrt(3.0 * k) * W / 6.0;

  // own: the polarisation of the decaying mode; other: the opposite one.
  struct Side {
    const char* name;
    L own;
    L other;
    double t3_sign;
  };
  // Odd (antisymmetric) combinations cL1, cR1.
  for (const Side side : {Side{"kappa.cL1", L::gL, L::gR, 1.0}, Side{"kappa.cR1", L::gR, L::gL, -1.0}}) {
    const StateVector own0 = G.ket(side.own, L::g0);
    const cplx pump = sk2 * g * (J + dt) / (2.0 * g2 * dt + D * Jp);
    const cplx res = -sk2 * g * (J + dt) / (g2 * dt + D * Jp);
    Eigen::MatrixXcd l = pump * (G.outer(G.ket(side.own, L::gL), G.ket(L::ga, L::gL)) +
                                 G.outer(G.ket(side.own, L::gR), G.ket(L::ga, L::gR)));
    l += res * (G.outer(G.ket(L::ga, L::g0), G.ket(L::ga, side.other)) +
                G.outer(G.ket(side.other, L::g0), G.ket(side.other, side.other)) +
                side.t3_sign * r2 * G.outer(own0, G.T3));
    l += -sk6 * g * g2 / den * G.outer(own0, G.T1);
    l += sk3 * g * (-4.0 * g2 + 3.0 * D * (J + dt)) / den * G.outer(own0, G.T2);
    model.jumps.push_back({side.name, SparseOperator::from_dense(l)});
  }
  // Even combinations cL2, cR2.
  for (const Side side : {Side{"kappa.cL2", L::gL, L::gR, 1.0}, Side{"kappa.cR2", L::gR, L::gL, -1.0}}) {
    const StateVector own0 = G.ket(side.own, L::g0);
    const cplx pump = -sk2 * g * (J - dt) / (2.0 * g2 * dt + D * Jp);
    const cplx res = -sk2 * g * (J - dt) / (g2 * dt + D * Jp);
    Eigen::MatrixXcd l = pump * (G.outer(G.ket(side.own, L::gL), G.ket(L::ga, L::gL)) +
                                 G.outer(G.ket(side.own, L::gR), G.ket(L::ga, L::gR)));
    l += res * (G.outer(G.ket(L::ga, L::g0), G.ket(L::ga, side.other)) +
                G.outer(G.ket(side.other, L::g0), G.ket(side.other, side.other)) +
                side.t3_sign * r2 * G.outer(own0, G.T3));
    l += sk6 * g * (3.0 * g2 + 2.0 * D * (J - dt)) / den * G.outer(own0, G.T1);
    l += -sk3 * g * D * (J - dt) / den * G.outer(own0, G.T2);
    model.jumps.push_back({side.name, SparseOperator::from_dense(l)});
  }
  return model;
}

OracleComparison compare_models(const EffectiveModel& numeric, const EffectiveModel& closed, double rel,
                                double abs_floor) {
  if (!(numeric.basis == closed.basis)) throw DimensionMismatch("compare_models: different bases");
  std::vector<int> keep;
  for (int i = 0; i < numeric.basis.dimension(); ++i) {
    const BasisState& s = numeric.basis.state(i);
    if (s.atom1 != L::g0 && s.atom2 != L::ga) keep.push_back(i);
  }
  auto find = [&](const std::string& label) -> const SparseOperator* {
    for (const auto& ch : numeric.jumps) {
      if (ch.label == label) return &ch.op;
    }
    return nullptr;
  };

  OracleComparison out;
  auto compare = [&](const std::string& label, const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    for (int r : keep) {
      for (int c : keep) {
        const double d = std::abs(a(r, c) - b(r, c));
        const double scale = std::max(std::abs(a(r, c)), std::abs(b(r, c)));
        const double ratio = d / std::max(abs_floor, rel * scale);
        ++out.compared;
        out.max_abs_difference = std::max(out.max_abs_difference, d);
        if (ratio > out.worst_ratio) {
          out.worst_ratio = ratio;
          out.worst_label = label;
        }
      }
    }
  };
  compare("H_eff", numeric.H_eff.dense(), closed.H_eff.dense());
  for (const auto& ch : closed.jumps) {
    Eigen::MatrixXcd a;
    if (const SparseOperator* op = find(ch.label)) {
      a = op->dense();
    } else if (ch.label == "gamma2.g0" && find("gamma2.g0_from_eL") && find("gamma2.g0_from_eR")) {
      a = find("gamma2.g0_from_eL")->dense() + find("gamma2.g0_from_eR")->dense();
    } else {
      throw std::invalid_argument("compare_models: numeric model lacks channel " + ch.label);
    }
    compare(ch.label, a, ch.op.dense());
  }
  return out;
}

PrunedModel dominant_channels(const EffectiveModel& model, double cutoff) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("dominant_channels: cutoff must be > 0");
  PrunedModel out{EffectiveModel{model.basis, model.H_eff, {}, model.provenance, model.condition},
                  {}, 0.0, 0.0, 0.0};

  // Locate the largest coefficient (first in channel/row-major order on ties).
  std::size_t best_channel = 0;
  int best_row = -1, best_col = -1;
  for (std::size_t k = 0; k < model.jumps.size(); ++k) {
    for (const auto& e : model.jumps[k].op.entries()) {
      if (std::abs(e.value) > out.max_retained) {
        out.max_retained = std::abs(e.value);
        best_channel = k;
        best_row = e.row;
        best_col = e.col;
      }
    }
  }
  const double threshold = cutoff * out.max_retained;
  const bool single = cutoff >= 1.0;

  for (std::size_t k = 0; k < model.jumps.size(); ++k) {
    std::vector<SparseOperator::Entry> kept;
    for (const auto& e : model.jumps[k].op.entries()) {
      const bool keep = single ? (k == best_channel && e.row == best_row && e.col == best_col)
                               : std::abs(e.value) >= threshold;
      if (keep) {
        kept.push_back(e);
      } else {
        out.max_discarded = std::max(out.max_discarded, std::abs(e.value));
        out.discarded_weight += std::norm(e.value);
      }
    }
    if (kept.empty()) {
      out.dropped_channels.push_back(model.jumps[k].label);
    } else {
      out.model.jumps.push_back({model.jumps[k].label, SparseOperator(model.jumps[k].op.dimension(), kept)});
    }
  }
  return out;
}

bool RegimeDiagnostics::all_satisfied() const {
  return std::all_of(items.begin(), items.end(), [](const RegimeItem& i) { return i.satisfied; });
}

RegimeDiagnostics regime_check(const ModelParams& p) {
  constexpr double kMuchGreater = 10.0;
  const double inf = std::numeric_limits<double>::infinity();
  auto ratio = [inf](double num, double den) { return den == 0.0 ? (num == 0.0 ? 0.0 : inf) : num / den; };
  RegimeDiagnostics d;
  auto lower = [&](std::string name, double value, double threshold) {
    d.items.push_back({std::move(name), value, threshold, false, value >= threshold});
  };
  lower("Delta/gamma", ratio(p.Delta, p.gamma), kMuchGreater);
  lower("delta*Delta/(2g^2)", ratio(p.delta * p.Delta, 2.0 * p.g * p.g), 1.0);
  lower("omega/Omega^2", ratio(p.omega, p.Omega * p.Omega), kMuchGreater);
  lower("delta/kappa", ratio(p.delta, p.kappa), kMuchGreater);
  if (p.Delta > 0.0) {
    const double star = delta_star(p.g, p.J, p.Delta);
    const double dev = std::abs(p.delta - star) / star;
    d.items.push_back({"|delta-delta_star|/delta_star", dev, 1e-3, true, dev <= 1e-3});
  }
  return d;
}

void write_coefficient_csv(const EffectiveModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_coefficient_csv: cannot open " + path.string());
  out << "label,row_state,col_state,real,imag\n";
  char buf[64];
  auto emit = [&](const std::string& name, const SparseOperator& op) {
    for (const auto& e : op.entries()) {
      out << name << ",\"" << label(model.basis.state(e.row)) << "\",\""
          << label(model.basis.state(e.col)) << "\",";
      std::snprintf(buf, sizeof buf, "%.12g,%.12g", e.value.real(), e.value.imag());
      out << buf << '\n';
    }
  };
  emit("H_eff", model.H_eff);
  for (const auto& ch : model.jumps) emit(ch.label, ch.op);
  if (!out) throw std::runtime_error("write_coefficient_csv: write failed for " + path.string());
}

}  // namespace ccqed
