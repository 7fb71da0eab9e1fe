#include "ccqed/dynamics.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace ccqed;
using L = AtomLevel;

namespace {

ModelParams fig2() {
  ModelParams p;
  p.Omega = 0.01;
  p.omega = 0.002;
  p.gamma = 0.04;
  p.J = 6.0;
  p.delta = delta_star(1.0, 6.0, 1.0);
  return p;
}

ObservableSet single(const std::string& label, StateVector v) {
  ObservableSet set;
  set.add(label, std::move(v));
  return set;
}

StateVector unit(int n, int k) {
  StateVector v = StateVector::Zero(n);
  v(k) = 1.0;
  return v;
}

DensityMatrix random_density(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("integrator config validation") {
  IntegratorConfig c;
  CHECK_NOTHROW(c.validate());
  c.step = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.step = 2.0;
  c.t_final = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.t_final = 10.0;
  CHECK(c.step_count() == 5);
}

TEST_CASE("lindblad_rhs trivial cases") {
  const int n = 4;
  const auto rho = random_density(n, 3);
  CHECK(lindblad_rhs(SparseOperator(n), {}, rho).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXcd h = random_density(n, 4);
  const auto out = lindblad_rhs(SparseOperator::from_dense(h), {}, rho);
  CHECK(std::abs(out.trace()) < 1e-15);
  CHECK((out - cplx(0, -1) * (h * rho - rho * h)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(lindblad_rhs(SparseOperator(3), {}, rho), DimensionMismatch);
}

TEST_CASE("lindblad_rhs is trace-free and Hermitian on the full model") {
  ModelParams p = fig2();
  p.kappa = 0.05;
  const auto space = build_state_space(1, 1);
  const auto h = build_H_full(p, space);
  const auto channels = build_collapse_channels(p, space);
  for (unsigned seed : {11u, 12u}) {
    const auto out = lindblad_rhs(h, channels, random_density(space.dimension(), seed));
    CHECK(std::abs(out.trace()) < 1e-14);
    CHECK(hermiticity_error(out) < 1e-14);
  }
}

TEST_CASE("two-level decay matches the exponential law") {
  const double kappa = 0.3;
  const std::vector<CollapseChannel> ch{{"decay", SparseOperator(2, {{0, 1, std::sqrt(kappa)}})}};
  IntegratorConfig c;
  c.step = 0.01;
  c.t_final = 10.0;
  c.record_every = 50;
  const auto traj = evolve(projector(unit(2, 1)), SparseOperator(2), ch, c, single("excited", unit(2, 1)));
  REQUIRE(traj.size() == 21);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(std::abs(traj.fidelity[i] - std::exp(-kappa * traj.times[i])) <= 1e-8);
  }
}

TEST_CASE("same decay law through the sparse path") {
  // 24 levels: above the dense-propagator threshold.
  const int n = 24;
  const double kappa = 0.2;
  const std::vector<CollapseChannel> ch{{"decay", SparseOperator(n, {{0, 1, std::sqrt(kappa)}})}};
  IntegratorConfig c;
  c.step = 0.01;
  c.t_final = 5.0;
  c.record_every = 100;
  const auto traj = evolve(projector(unit(n, 1)), SparseOperator(n), ch, c, single("excited", unit(n, 1)));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(std::abs(traj.fidelity[i] - std::exp(-kappa * traj.times[i])) <= 1e-8);
  }
}

TEST_CASE("no dynamics leaves rho unchanged") {
  for (int n : {3, 30}) {
    const auto rho = random_density(n, 5);
    IntegratorConfig c;
    c.step = 0.1;
    c.t_final = 2.0;
    const auto traj = evolve(rho, SparseOperator(n), {}, c, single("e0", unit(n, 0)));
    CHECK((traj.final_state - rho).cwiseAbs().maxCoeff() == 0.0);
    for (double f : traj.fidelity) CHECK(f == rho(0, 0).real());
  }
}

TEST_CASE("trajectory bookkeeping") {
  const auto space = build_state_space(1, 1);
  const auto model = reduce_effective(fig2(), space);
  IntegratorConfig c;
  c.step = 5.0;
  c.t_final = 2000.0;
  c.record_every = 4;
  const auto obs = ObservableSet::standard(model.basis);
  const auto rho0 = projector(ground_ket(model.basis, L::ga, L::gL));
  const auto traj = evolve(rho0, model.H_eff, model.jumps, c, obs);
  CHECK(traj.labels.size() == 6);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(2000.0));
  for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);
  for (const auto& series : traj.populations) CHECK(series.size() == traj.size());
  CHECK(traj.trace_drift.size() == traj.size());
  CHECK(traj.population("gagL").front() == 1.0);
  CHECK(traj.fidelity == traj.population("T1"));
  CHECK_THROWS_AS(traj.population("nope"), std::out_of_range);
  CHECK_FALSE(traj.min_eigenvalues.empty());
  for (const auto& [sample, value] : traj.min_eigenvalues) CHECK(value >= -1e-8);
}

TEST_CASE("oversized step aborts on trace drift") {
  const auto space = build_state_space(1, 1);
  const auto p = fig2();
  // RK4 keeps the trace of a trace-free generator, so only divergence trips it.
  IntegratorConfig c;
  c.step = 2.0;
  c.t_final = 400.0;
  const auto rho0 = projector(ground_ket(space, L::ga, L::gL));
  CHECK_THROWS_AS(evolve(rho0, build_H_full(p, space), build_collapse_channels(p, space), c,
                         ObservableSet::standard(space)),
                  IntegrationError);
}

TEST_CASE("identity feedback reproduces evolve") {
  ModelParams p = fig2();
  p.kappa = 0.1;
  p.gamma = 0.0;
  const auto space = build_state_space(1, 1);
  const auto h = build_H_full(p, space);
  const auto channels = build_collapse_channels(p, space);
  FeedbackScheme fb;
  for (const auto& ch : channels) fb.assign(ch.label, SparseOperator::identity(space.dimension()));
  IntegratorConfig c;
  c.t_final = 20.0;
  c.record_every = 100;
  const auto rho0 = projector(ground_ket(space, L::ga, L::gL));
  const auto obs = ObservableSet::standard(space);
  const auto a = evolve(rho0, h, channels, c, obs);
  const auto b = evolve_with_feedback(rho0, h, channels, fb, c, obs);
  CHECK((a.final_state - b.final_state).cwiseAbs().maxCoeff() <= 1e-12);
  const auto rho = random_density(space.dimension(), 9);
  CHECK((lindblad_rhs(h, channels, rho) - feedback_rhs(h, channels, fb, rho)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("feedback unitaries") {
  const auto space = build_state_space(1, 1);
  for (auto kind : {FeedbackKind::sigma_x1, FeedbackKind::sigma_x2}) {
    const auto u = build_feedback_unitary(kind, space);
    CHECK(max_abs_difference(u * u.adjoint(), SparseOperator::identity(space.dimension())) <= 1e-12);
    // U^2 is diagonal with entries +-1, so populations are unchanged.
    const auto u2 = u * u;
    for (const auto& e : u2.entries()) {
      CHECK(e.row == e.col);
      CHECK(std::abs(std::abs(e.value) - 1.0) < 1e-15);
    }
  }
  const auto u = build_feedback_unitary(FeedbackKind::sigma_x1, space);
  const auto g0 = ground_ket(space, L::gL, L::g0);
  CHECK((u.apply(g0) - cplx(0, 1) * ground_ket(space, L::gL, L::gR)).norm() < 1e-15);
  const auto gl = ground_ket(space, L::gR, L::gL);
  CHECK((u.apply(gl) - gl).norm() == 0.0);

  FeedbackScheme fb;
  CHECK_THROWS_AS(fb.assign("x", 2.0 * SparseOperator::identity(4)), std::invalid_argument);
  CHECK(fb.empty());
}

TEST_CASE("effective feedback supports sigma_x1 only") {
  ModelParams p = fig2();
  p.kappa = 0.1;
  p.gamma = 0.0;
  const auto model = reduce_effective(p, build_state_space(1, 1));
  const auto fb = effective_feedback_channels(model, FeedbackKind::sigma_x1);
  CHECK(fb.size() == model.jumps.size());
  CHECK_THROWS_AS(effective_feedback_channels(model, FeedbackKind::sigma_x2), std::invalid_argument);
  CHECK_THROWS_AS(effective_feedback_channels(model, FeedbackKind::sigma_x1, "gamma1.gL"), std::invalid_argument);
}

TEST_CASE("fidelity values") {
  const auto space = ground_manifold(build_state_space(1, 1));
  const auto t = target_states(space);
  CHECK(fidelity(projector(t.T1), t.T1) == doctest::Approx(1.0));
  CHECK(fidelity(projector(ground_ket(space, L::ga, L::gL)), t.T1) == 0.0);
  const DensityMatrix mixed = DensityMatrix::Identity(16, 16) / 16.0;
  CHECK(fidelity(mixed, t.T1) == doctest::Approx(1.0 / 16.0));
  DensityMatrix bad = mixed;
  bad(0, 1) = cplx(0, 0.3);
  StateVector v = StateVector::Zero(16);
  v(0) = 1.0;
  v(1) = 1.0;
  CHECK_THROWS(fidelity(bad, v / std::sqrt(2.0)));
}

TEST_CASE("steady state of a detailed-balance toy") {
  const double up = 0.2, down = 0.6, deph = 0.5;
  const std::vector<CollapseChannel> ch{
      {"down", SparseOperator(2, {{0, 1, std::sqrt(down)}})},
      {"up", SparseOperator(2, {{1, 0, std::sqrt(up)}})},
      {"dephase", SparseOperator(2, {{0, 0, std::sqrt(deph)}, {1, 1, -std::sqrt(deph)}})}};
  const auto ss = steady_state_direct(SparseOperator(2), ch);
  CHECK(std::abs(ss.rho(0, 0) - cplx(down / (up + down))) <= 1e-10);
  CHECK(std::abs(ss.rho(1, 1) - cplx(up / (up + down))) <= 1e-10);
  CHECK(std::abs(ss.rho(0, 1)) <= 1e-10);
  CHECK(ss.residual <= 1e-12);
  CHECK(ss.gap > 0.1);
}

TEST_CASE("degenerate fixed points are reported") {
  const std::vector<CollapseChannel> ch{{"dephase", SparseOperator(2, {{0, 0, 1.0}, {1, 1, -1.0}})}};
  CHECK_THROWS_AS(steady_state_direct(SparseOperator(2), ch), DegenerateSteadyState);
  const auto model = reduce_effective(fig2(), build_state_space(1, 1));
  CHECK_THROWS_AS(steady_state_direct(model), DegenerateSteadyState);
}

TEST_CASE("steady state agrees with long-time evolution") {
  const auto model = reduce_effective(fig2(), build_state_space(1, 1));
  const auto ss = steady_state_direct(model, scheme_sector(model.basis));
  CHECK(ss.residual <= 1e-10);
  IntegratorConfig c;
  c.step = effective_step(fig2(), model);
  c.t_final = 60000.0;
  c.record_every = std::max(1, static_cast<int>(10.0 / c.step));
  const auto traj = evolve(projector(ground_ket(model.basis, L::ga, L::gL)), model.H_eff, model.jumps, c,
                           ObservableSet::standard(model.basis));
  const double f_ss = fidelity(ss.rho, target_states(model.basis).T1);
  CHECK(std::abs(traj.fidelity.back() - f_ss) <= 0.02);
  CHECK(traj.steady_time.has_value());
}

TEST_CASE("sector must be invariant") {
  const auto model = reduce_effective(fig2(), build_state_space(1, 1));
  const std::vector<int> leaky{0, 1};
  CHECK_THROWS_AS(steady_state_direct(model, leaky), std::invalid_argument);
}

TEST_CASE("T1 starts as the attractor of the effective dynamics") {
  const auto model = reduce_effective(fig2(), build_state_space(1, 1));
  IntegratorConfig c;
  c.step = effective_step(fig2(), model);
  c.t_final = 20000.0;
  c.record_every = 10;
  const auto t1 = target_states(model.basis).T1;
  const auto traj = evolve(projector(t1), model.H_eff, model.jumps, c, ObservableSet::standard(model.basis));
  for (double f : traj.fidelity) CHECK(f >= 0.98);
}

TEST_CASE("halving the effective step leaves F(t_final) unchanged") {
  const auto model = reduce_effective(fig2(), build_state_space(1, 1));
  IntegratorConfig c;
  c.t_final = 5000.0;
  c.step = c.t_final / std::ceil(c.t_final / effective_step(fig2(), model));
  c.record_every = 10;
  const auto rho0 = projector(ground_ket(model.basis, L::ga, L::gL));
  const auto obs = ObservableSet::standard(model.basis);
  const double coarse = evolve(rho0, model.H_eff, model.jumps, c, obs).fidelity.back();
  c.step /= 2.0;
  c.record_every *= 2;
  const double fine = evolve(rho0, model.H_eff, model.jumps, c, obs).fidelity.back();
  CHECK(std::abs(coarse - fine) <= 1e-6);
}

TEST_CASE("effective step heuristic") {
  const auto model = reduce_effective(fig2(), build_state_space(1, 1));
  const double h = effective_step(fig2(), model);
  CHECK(h > 0.0);
  CHECK(h <= 1.0 / (50.0 * 0.01 * 0.01));
}

}  // TEST_SUITE
