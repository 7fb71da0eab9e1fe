#include "ccqed/dynamics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccqed {

using L = AtomLevel;

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("IntegratorConfig: step must be > 0");
  if (!(t_final >= step)) throw std::invalid_argument("IntegratorConfig: t_final must be >= step");
  if (record_every < 1) throw std::invalid_argument("IntegratorConfig: record_every must be >= 1");
  if (!(trace_tolerance > 0.0)) throw std::invalid_argument("IntegratorConfig: trace_tolerance must be > 0");
  if (steady_samples < 1) throw std::invalid_argument("IntegratorConfig: steady_samples must be >= 1");
}

long long IntegratorConfig::step_count() const {
  return static_cast<long long>(std::ceil(t_final / step - 1e-9));
}

ObservableSet ObservableSet::standard(const StateSpace& space) {
  const TargetStates t = target_states(space);
  ObservableSet set;
  set.add("T1", t.T1);
  set.add("T2", t.T2);
  set.add("T3", t.T3);
  set.add("gLg0", ground_ket(space, L::gL, L::g0));
  set.add("gRg0", ground_ket(space, L::gR, L::g0));
  set.add("gagL", ground_ket(space, L::ga, L::gL));
  return set;
}

void ObservableSet::add(std::string label, StateVector state) {
  if (!items.empty() && items.front().state.size() != state.size()) {
    throw DimensionMismatch("ObservableSet: observable '" + label + "' has a different dimension");
  }
  items.push_back({std::move(label), std::move(state)});
}

const std::vector<double>& Trajectory::population(std::string_view label) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return populations[k];
  }
  throw std::out_of_range("Trajectory: no observable '" + std::string(label) + "'");
}

// ---------------------------------------------------------------------------
// Feedback

void FeedbackScheme::assign(const std::string& channel, SparseOperator unitary) {
  const auto id = SparseOperator::identity(unitary.dimension());
  const double err = max_abs_difference(unitary * unitary.adjoint(), id);
  if (err > 1e-12) {
    throw std::invalid_argument("FeedbackScheme: operator for '" + channel +
                                "' is not unitary (error " + std::to_string(err) + ")");
  }
  unitaries_.insert_or_assign(channel, std::move(unitary));
}

const SparseOperator* FeedbackScheme::find(const std::string& channel) const {
  auto it = unitaries_.find(channel);
  return it == unitaries_.end() ? nullptr : &it->second;
}

std::string_view to_string(FeedbackKind kind) {
  return kind == FeedbackKind::sigma_x1 ? "sigma-x1" : "sigma-x2";
}

SparseOperator build_feedback_unitary(FeedbackKind which, const StateSpace& space) {
  const L partner = which == FeedbackKind::sigma_x1 ? L::gR : L::eR;
  const cplx i(0.0, 1.0);
  std::vector<SparseOperator::Entry> entries;
  for (int j = 0; j < space.dimension(); ++j) {
    BasisState s = space.state(j);
    if (s.atom2 != L::g0 && s.atom2 != partner) {
      entries.push_back({j, j, 1.0});
      continue;
    }
    s.atom2 = s.atom2 == L::g0 ? partner : L::g0;
    if (auto k = space.index_of(s)) {
      entries.push_back({*k, j, i});
    } else {
      entries.push_back({j, j, 1.0});
    }
  }
  return SparseOperator(space.dimension(), entries);
}

std::vector<CollapseChannel> effective_feedback_channels(const EffectiveModel& model,
                                                         FeedbackKind which,
                                                         const std::string& channel) {
  if (which != FeedbackKind::sigma_x1) {
    throw std::invalid_argument(
        "effective_feedback_channels: sigma-x2 moves ground population into eR and is only "
        "available on the full model");
  }
  const SparseOperator u = build_feedback_unitary(which, model.basis);
  std::vector<CollapseChannel> out;
  bool found = false;
  for (const auto& ch : model.jumps) {
    if (ch.label == channel) {
      out.push_back({ch.label, u * ch.op});
      found = true;
    } else {
      out.push_back(ch);
    }
  }
  if (!found) throw std::invalid_argument("effective_feedback_channels: no channel '" + channel + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Generators

DensityMatrix lindblad_rhs(const SparseOperator& H, std::span<const CollapseChannel> channels,
                           const DensityMatrix& rho) {
  return feedback_rhs(H, channels, FeedbackScheme::identity(), rho);
}

DensityMatrix feedback_rhs(const SparseOperator& H, std::span<const CollapseChannel> channels,
                           const FeedbackScheme& feedback, const DensityMatrix& rho) {
  const int n = H.dimension();
  if (rho.rows() != n || rho.cols() != n) throw DimensionMismatch("lindblad_rhs: rho dimension");
  const cplx i(0.0, 1.0);
  DensityMatrix out = -i * (H.matrix() * rho - rho * H.matrix());
  for (const auto& ch : channels) {
    if (ch.op.dimension() != n) throw DimensionMismatch("lindblad_rhs: channel " + ch.label);
    const auto& l = ch.op.matrix();
    const SparseOperator::Matrix ldag = l.adjoint();
    const SparseOperator::Matrix ldl = ldag * l;
    DensityMatrix jump = (l * rho) * ldag;
    if (const SparseOperator* u = feedback.find(ch.label)) {
      jump = (u->matrix() * jump) * SparseOperator::Matrix(u->matrix().adjoint());
    }
    out += jump - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

namespace {

using ColMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

// Precomputed form used by the integrator:
//   rhs = A + A^dagger + sum_j J rho J^dagger,  A = -i H_NH rho,
// valid for Hermitian rho, with J = U L the post-feedback jump.
class Generator {
 public:
  Generator(const SparseOperator& H, std::span<const CollapseChannel> channels,
            const FeedbackScheme& feedback)
      : dim_(H.dimension()) {
    SparseOperator::Matrix loss(dim_, dim_);
    for (const auto& ch : channels) {
      if (ch.op.dimension() != dim_) throw DimensionMismatch("evolve: channel " + ch.label);
      const auto& l = ch.op.matrix();
      loss += SparseOperator::Matrix(l.adjoint() * l);
      SparseOperator::Matrix j = l;
      if (const SparseOperator* u = feedback.find(ch.label)) {
        if (u->dimension() != dim_) throw DimensionMismatch("evolve: feedback for " + ch.label);
        j = u->matrix() * l;
      }
      if (j.nonZeros() == 0) continue;
      jumps_.push_back(j);
      jumps_dag_.push_back(ColMatrix(j.adjoint()));
    }
    h_nh_ = H.matrix() - cplx(0.0, 0.5) * loss;
    h_nh_.makeCompressed();
  }

  int dimension() const { return dim_; }

  void apply(const DensityMatrix& rho, DensityMatrix& out) const {
    const cplx mi(0.0, -1.0);
    tmp_.noalias() = h_nh_ * rho;
    tmp_ *= mi;
    out = tmp_ + tmp_.adjoint();
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      tmp_.noalias() = jumps_[k] * rho;
      out.noalias() += tmp_ * jumps_dag_[k];
    }
  }

 private:
  int dim_;
  SparseOperator::Matrix h_nh_;
  std::vector<SparseOperator::Matrix> jumps_;
  std::vector<ColMatrix> jumps_dag_;
  mutable DensityMatrix tmp_;
};

// Bases with at most this many states integrate through the dense RK4
// propagator  P(hL) = 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24,
// which is exactly one classical RK4 step of the linear generator.
constexpr int kPropagatorMaxDim = 20;

Eigen::MatrixXcd superoperator(const Generator& gen) {
  const int n = gen.dimension();
  Eigen::MatrixXcd sup(n * n, n * n);
  DensityMatrix basis = DensityMatrix::Zero(n, n), out(n, n);
  // Hermitian-input form: feed Hermitian pairs and split them.
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) {
      // L(E_rc) = (L(E_rc + E_cr) - i L(i E_rc - i E_cr)) / 2
      basis.setZero();
      basis(r, c) += 1.0;
      basis(c, r) += 1.0;
      gen.apply(basis, out);
      DensityMatrix sym = out;
      basis.setZero();
      basis(r, c) += cplx(0.0, 1.0);
      basis(c, r) += cplx(0.0, -1.0);
      gen.apply(basis, out);
      DensityMatrix anti = out;
      DensityMatrix col = r == c ? DensityMatrix(0.5 * sym) : DensityMatrix(0.5 * (sym - cplx(0.0, 1.0) * anti));
      sup.col(c * n + r) = Eigen::Map<const Eigen::VectorXcd>(col.data(), n * n);
    }
  }
  return sup;
}

Eigen::MatrixXcd matrix_power(Eigen::MatrixXcd base, long long exponent) {
  Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(base.rows(), base.cols());
  while (exponent > 0) {
    if (exponent & 1) result = (result * base).eval();
    exponent >>= 1;
    if (exponent > 0) base = (base * base).eval();
  }
  return result;
}

class Recorder {
 public:
  Recorder(const IntegratorConfig& config, const ObservableSet& observables, Trajectory& traj)
      : config_(config), observables_(observables), traj_(traj) {
    for (const auto& o : observables.items) traj_.labels.push_back(o.label);
    traj_.populations.assign(observables.items.size(), {});
  }

  void record(double t, const DensityMatrix& rho, double rhs_max, bool last) {
    if (!rho.allFinite()) throw IntegrationError("evolve: non-finite density matrix at t=" + std::to_string(t), t);
    const double drift = std::abs(rho.trace() - cplx(1.0)) ;
    if (drift > config_.trace_tolerance) {
      throw IntegrationError("evolve: trace drift " + std::to_string(drift) + " exceeds tolerance at t=" +
                                 std::to_string(t) + " (step too large?)",
                             t);
    }
    const std::size_t sample = traj_.times.size();
    traj_.times.push_back(t);
    traj_.trace_drift.push_back(drift);
    traj_.hermiticity.push_back(hermiticity_error(rho));
    for (std::size_t k = 0; k < observables_.items.size(); ++k) {
      const auto& v = observables_.items[k].state;
      traj_.populations[k].push_back((v.adjoint() * rho * v)(0, 0).real());
    }
    traj_.fidelity.push_back(traj_.populations.empty() ? 0.0 : traj_.populations[0].back());
    if (config_.positivity_every > 0 && (sample % static_cast<std::size_t>(config_.positivity_every) == 0 || last)) {
      traj_.min_eigenvalues.emplace_back(sample, min_eigenvalue(rho));
    }
    if (!traj_.steady_time) {
      if (rhs_max < config_.steady_threshold) {
        if (quiet_run_++ == 0) quiet_start_ = t;
        if (quiet_run_ >= config_.steady_samples) traj_.steady_time = quiet_start_;
      } else {
        quiet_run_ = 0;
      }
    }
  }

 private:
  const IntegratorConfig& config_;
  const ObservableSet& observables_;
  Trajectory& traj_;
  int quiet_run_ = 0;
  double quiet_start_ = 0.0;
};

}  // namespace

Trajectory evolve(const DensityMatrix& rho0, const SparseOperator& H,
                  std::span<const CollapseChannel> channels, const IntegratorConfig& config,
                  const ObservableSet& observables) {
  return evolve_with_feedback(rho0, H, channels, FeedbackScheme::identity(), config, observables);
}

Trajectory evolve_with_feedback(const DensityMatrix& rho0, const SparseOperator& H,
                                std::span<const CollapseChannel> channels,
                                const FeedbackScheme& feedback, const IntegratorConfig& config,
                                const ObservableSet& observables) {
  config.validate();
  const int n = H.dimension();
  if (rho0.rows() != n || rho0.cols() != n) throw DimensionMismatch("evolve: rho0 dimension");
  for (const auto& o : observables.items) {
    if (o.state.size() != n) throw DimensionMismatch("evolve: observable " + o.label);
  }
  const Generator gen(H, channels, feedback);
  Trajectory traj;
  Recorder recorder(config, observables, traj);
  const long long steps = config.step_count();
  const double h = config.step;
  DensityMatrix rho = rho0;
  DensityMatrix deriv(n, n);

  auto rhs_max = [&](const DensityMatrix& r) {
    gen.apply(r, deriv);
    return deriv.cwiseAbs().maxCoeff();
  };
  recorder.record(0.0, rho, rhs_max(rho), false);

  if (n <= kPropagatorMaxDim) {
    const Eigen::MatrixXcd sup = superoperator(gen);
    const Eigen::MatrixXcd hl = h * sup;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n * n, n * n);
    const Eigen::MatrixXcd step_map = id + hl * (id + hl * (id / 2.0 + hl * (id / 6.0 + hl / 24.0)));
    const Eigen::MatrixXcd chunk = matrix_power(step_map, config.record_every);
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), n * n);
    long long done = 0;
    while (done < steps) {
      const long long todo = std::min<long long>(config.record_every, steps - done);
      v = todo == config.record_every ? Eigen::VectorXcd(chunk * v)
                                      : Eigen::VectorXcd(matrix_power(step_map, todo) * v);
      done += todo;
      rho = Eigen::Map<const DensityMatrix>(v.data(), n, n);
      recorder.record(static_cast<double>(done) * h, rho, rhs_max(rho), done == steps);
    }
  } else {
    DensityMatrix k1(n, n), k2(n, n), k3(n, n), k4(n, n), stage(n, n);
    for (long long s = 1; s <= steps; ++s) {
      gen.apply(rho, k1);
      stage = rho + (0.5 * h) * k1;
      gen.apply(stage, k2);
      stage = rho + (0.5 * h) * k2;
      gen.apply(stage, k3);
      stage = rho + h * k3;
      gen.apply(stage, k4);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (s % config.record_every == 0 || s == steps) {
        recorder.record(static_cast<double>(s) * h, rho, rhs_max(rho), s == steps);
      }
    }
  }
  traj.final_state = rho;
  return traj;
}

double fidelity(const DensityMatrix& rho, const StateVector& target) {
  if (rho.rows() != target.size()) throw DimensionMismatch("fidelity: dimension");
  const cplx f = (target.adjoint() * rho * target)(0, 0);
  if (std::abs(f.imag()) > 1e-10) {
    throw std::runtime_error("fidelity: imaginary part " + std::to_string(f.imag()) + " exceeds 1e-10");
  }
  return f.real();
}

// ---------------------------------------------------------------------------
// Steady state

SteadyState steady_state_direct(const SparseOperator& H, std::span<const CollapseChannel> channels,
                                std::span<const int> sector) {
  const int full = H.dimension();
  std::vector<int> idx(sector.begin(), sector.end());
  if (idx.empty()) {
    idx.resize(static_cast<std::size_t>(full));
    std::iota(idx.begin(), idx.end(), 0);
  }
  std::vector<char> inside(static_cast<std::size_t>(full), 0);
  for (int i : idx) inside.at(static_cast<std::size_t>(i)) = 1;

  auto check_closed = [&](const SparseOperator& op, const std::string& name) {
    for (const auto& e : op.entries()) {
      if (inside[e.col] && !inside[e.row]) {
        throw std::invalid_argument("steady_state_direct: " + name + " leaks out of the sector");
      }
    }
  };
  check_closed(H, "Hamiltonian");
  std::vector<CollapseChannel> local;
  for (const auto& ch : channels) {
    check_closed(ch.op, ch.label);
    local.push_back({ch.label, restrict_to(ch.op, idx, idx)});
  }
  const SparseOperator h_local = restrict_to(H, idx, idx);
  const Generator gen(h_local, local, FeedbackScheme::identity());
  const int n = gen.dimension();
  const Eigen::MatrixXcd sup = superoperator(gen);

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(sup, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double scale = std::max(1.0, sv(0));
  const double tol = 1e-10 * scale;
  int null_dim = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) <= tol) ++null_dim;
  }
  if (null_dim > 1) {
    throw DegenerateSteadyState("steady_state_direct: null space has dimension " + std::to_string(null_dim),
                                null_dim);
  }
  const Eigen::VectorXcd v = svd.matrixV().col(n * n - 1);
  DensityMatrix r = Eigen::Map<const DensityMatrix>(v.data(), n, n);
  r = 0.5 * (r + r.adjoint()).eval();
  r /= r.trace();

  SteadyState out;
  DensityMatrix residual(n, n);
  gen.apply(r, residual);
  out.residual = residual.cwiseAbs().maxCoeff();
  out.gap = sv.size() > 1 ? sv(sv.size() - 2) : 0.0;
  out.rho = DensityMatrix::Zero(full, full);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) out.rho(idx[a], idx[b]) = r(a, b);
  }
  return out;
}

SteadyState steady_state_direct(const EffectiveModel& model, std::span<const int> sector) {
  return steady_state_direct(model.H_eff, model.jumps, sector);
}

double effective_step(const ModelParams& p, const EffectiveModel& model) {
  double rate = std::max(p.Omega * p.Omega, model.H_eff.max_abs());
  for (const auto& ch : model.jumps) {
    const Eigen::MatrixXcd l = ch.op.dense();
    rate = std::max(rate, l.colwise().squaredNorm().maxCoeff());
  }
  if (!(rate > 0.0)) throw std::invalid_argument("effective_step: model has no dynamics");
  return 1.0 / (50.0 * p.g * rate);
}

}  // namespace ccqed
