#include "ccqed/model.hpp"

#include "doctest.h"

#include <random>

using namespace ccqed;
using L = AtomLevel;

namespace {

ModelParams fig2_params() {
  ModelParams p;
  p.Omega = 0.01;
  p.omega = 0.002;
  p.gamma = 0.04;
  p.J = 6.0;
  p.delta = delta_star(1.0, 6.0, 1.0);
  return p;
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

DensityMatrix dissipator(const std::vector<SparseOperator>& ops, const DensityMatrix& rho) {
  DensityMatrix out = DensityMatrix::Zero(rho.rows(), rho.cols());
  for (const auto& op : ops) {
    const Eigen::MatrixXcd l = op.dense();
    out += l * rho * l.adjoint() - 0.5 * (l.adjoint() * l * rho + rho * l.adjoint() * l);
  }
  return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("delta_star closed values") {
  CHECK(delta_star(1.0, 6.0, 1.0) == doctest::Approx(6.520797289396148).epsilon(1e-14));
  CHECK(delta_star(1.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(delta_star(1.0, 1.0, 1.0) == doctest::Approx(1.618033988749895).epsilon(1e-14));
  CHECK_THROWS_AS(delta_star(1.0, 6.0, 0.0), std::invalid_argument);
}

TEST_CASE("delta_star solves delta^2 Delta - g^2 delta - J^2 Delta = 0") {
  for (double J : {0.5, 2.0, 5.0, 6.0, 7.0}) {
    for (double Delta : {0.5, 1.0, 2.0}) {
      const double d = delta_star(1.0, J, Delta);
      CHECK(d * d * Delta - d - J * J * Delta == doctest::Approx(0.0).scale(10.0));
      CHECK(d > 0.0);
    }
  }
}

TEST_CASE("negative rates are rejected") {
  ModelParams p = fig2_params();
  p.kappa = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.kappa = 0.0;
  p.gamma = std::nan("");
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("Hamiltonians are Hermitian and H0 conserves excitation") {
  const auto space = build_state_space(1, 1);
  const auto p = fig2_params();
  const auto h0 = build_H0(p, space);
  CHECK(hermiticity_error(h0) < 1e-15);
  CHECK(hermiticity_error(build_Hg(p, space)) < 1e-15);
  CHECK(hermiticity_error(build_H_full(p, space)) < 1e-15);
  CHECK(commutator(h0, excitation_number_op(space)).max_abs() < 1e-14);

  const auto bigger = build_state_space(2, 2);
  CHECK(commutator(build_H0(p, bigger), excitation_number_op(bigger)).max_abs() < 1e-14);
}

TEST_CASE("drive raises excitation by one and V- is its adjoint") {
  const auto space = build_state_space(1, 1);
  const auto d = build_drive(fig2_params(), space);
  CHECK(max_abs_difference(d.Vminus, d.Vplus.adjoint()) == 0.0);
  for (const auto& e : d.Vplus.entries()) {
    CHECK(space.state(e.row).excitation() == space.state(e.col).excitation() + 1);
    CHECK(e.value == cplx(0.01));
  }
  CHECK(d.Vplus.nonzeros() > 0);
}

TEST_CASE("T1 is dark under Hg while T2 is not") {
  const auto space = build_state_space(1, 1);
  const auto t = target_states(space);
  const auto hg = build_Hg(fig2_params(), space);
  CHECK(hg.apply(t.T1).norm() < 1e-15);
  CHECK(hg.apply(t.T2).norm() > 1e-3);
  CHECK(t.T1.norm() == doctest::Approx(1.0));
  CHECK(std::abs(t.T1.dot(t.T2)) < 1e-15);
  CHECK(std::abs(t.T1.dot(t.T3)) < 1e-15);
  CHECK(std::abs(t.T2.dot(t.T3)) < 1e-15);
}

TEST_CASE("collapse channel counts follow the active rates") {
  const auto space = build_state_space(1, 1);
  ModelParams p = fig2_params();
  CHECK(build_collapse_channels(p, space).size() == 7);
  p.kappa = 0.05;
  CHECK(build_collapse_channels(p, space).size() == 11);
  p.gamma = 0.0;
  const auto kappa_only = build_collapse_channels(p, space);
  CHECK(kappa_only.size() == 4);
  CHECK(kappa_only.front().label == "kappa.cL1");
}

TEST_CASE("spontaneous emission branches carry gamma/3 and gamma/2") {
  const auto space = build_state_space(1, 1);
  const auto channels = build_collapse_channels(fig2_params(), space);
  for (const auto& ch : channels) {
    const double expected = ch.label.starts_with("gamma1") ? std::sqrt(0.04 / 3) : std::sqrt(0.04 / 2);
    CHECK(ch.op.max_abs() == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("delocalized modes preserve the total photon number") {
  const auto space = build_state_space(2, 2);
  const auto c = delocalized_modes(space);
  SparseOperator n_c = c.cL1.adjoint() * c.cL1 + c.cL2.adjoint() * c.cL2 + c.cR1.adjoint() * c.cR1 +
                       c.cR2.adjoint() * c.cR2;
  SparseOperator n_a(space.dimension());
  for (int m = 0; m < kModes; ++m) {
    const auto a = lift_mode_annihilator(space, static_cast<Mode>(m));
    n_a = n_a + a.adjoint() * a;
  }
  CHECK(max_abs_difference(n_a, n_c) < 1e-14);
}

TEST_CASE("cavity dissipator is invariant under local-to-delocalized mixing") {
  const auto space = build_state_space(1, 1);
  const double kappa = 0.07;
  const auto c = delocalized_modes(space);
  std::vector<SparseOperator> local, deloc;
  for (int m = 0; m < kModes; ++m) {
    local.push_back(std::sqrt(kappa) * lift_mode_annihilator(space, static_cast<Mode>(m)));
  }
  for (const auto* op : {&c.cL1, &c.cL2, &c.cR1, &c.cR2}) deloc.push_back(std::sqrt(kappa) * *op);
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto rho = random_density(space.dimension(), seed);
    CHECK((dissipator(local, rho) - dissipator(deloc, rho)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("atom-1 g0 and atom-2 ga are inert") {
  ModelParams p = fig2_params();
  p.kappa = 0.05;
  const auto space = build_state_space(1, 1);
  std::vector<SparseOperator> ops{build_H_full(p, space)};
  for (auto& ch : build_collapse_channels(p, space)) ops.push_back(ch.op);
  for (const auto& op : ops) {
    for (const auto& e : op.entries()) {
      const auto& row = space.state(e.row);
      const auto& col = space.state(e.col);
      CHECK((row.atom1 == L::g0) == (col.atom1 == L::g0));
      CHECK((row.atom2 == L::ga) == (col.atom2 == L::ga));
    }
  }
  const auto sector = scheme_sector(space);
  CHECK(sector.size() == 9);
  for (int i : sector) CHECK(space.state(i).excitation() == 0);
}

TEST_CASE("ground_ket picks the vacuum state") {
  const auto space = build_state_space(1, 1);
  const auto v = ground_ket(space, L::ga, L::gL);
  BasisState s;
  s.atom1 = L::ga;
  s.atom2 = L::gL;
  CHECK(v(*space.index_of(s)) == cplx(1.0));
  CHECK(v.norm() == doctest::Approx(1.0));
}

}  // TEST_SUITE
