#include "ccqed/dynamics.hpp"
#include "ccqed/effective.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>

using namespace ccqed;
using L = AtomLevel;

namespace {

ModelParams params(double Omega, double ratio, double kappa, double gamma, double J = 6.0) {
  ModelParams p;
  p.Omega = Omega;
  p.omega = ratio * Omega;
  p.kappa = kappa;
  p.gamma = gamma;
  p.J = J;
  p.delta = delta_star(1.0, J, 1.0);
  return p;
}

const ModelParams kFig2 = params(0.01, 0.2, 0.0, 0.04);
const ModelParams kFig3 = params(0.03, 0.05, 0.05, 0.0);
const ModelParams kFig8 = params(0.02, 0.4, 2.65 / 750.0, 3.5 / 750.0);

double steady_fidelity(const ModelParams& p) {
  const auto space = build_state_space(1, 1);
  const auto model = reduce_effective(p, space);
  const auto sector = scheme_sector(model.basis);
  const auto ss = steady_state_direct(model, sector);
  return fidelity(ss.rho, target_states(model.basis).T1);
}

}  // namespace

TEST_SUITE("effective") {

TEST_CASE("split by excitation") {
  const auto space = build_state_space(1, 1);
  const auto split = split_by_excitation(space);
  CHECK(split.ground.size() == 16);
  CHECK(split.excited.size() == 88);
}

TEST_CASE("numeric reduction yields a Hermitian ground-manifold generator") {
  const auto space = build_state_space(1, 1);
  const auto m = reduce_effective(kFig2, space);
  CHECK(m.basis.dimension() == 16);
  CHECK(m.H_eff.dimension() == 16);
  CHECK(hermiticity_error(m.H_eff) < 1e-16);
  CHECK(m.jumps.size() == 7);
  CHECK(m.provenance == Provenance::numeric);
  CHECK(m.condition > 1.0);
  CHECK(m.condition < 1e12);
  for (const auto& ch : m.jumps) CHECK(ch.op.dimension() == 16);
}

TEST_CASE("numeric and closed-form models agree: spontaneous-emission case") {
  const auto space = build_state_space(1, 1);
  const auto numeric = reduce_effective(kFig2, space);
  const auto closed = closed_form_gamma(kFig2, space);
  CHECK(closed.provenance == Provenance::closed_form_gamma);
  const auto cmp = compare_models(numeric, closed);
  INFO("worst ", cmp.worst_label, " ratio ", cmp.worst_ratio);
  CHECK(cmp.passed());
  CHECK(cmp.compared > 0);
}

TEST_CASE("numeric and closed-form models agree: cavity-decay case") {
  const auto space = build_state_space(1, 1);
  const auto numeric = reduce_effective(kFig3, space);
  const auto closed = closed_form_kappa(kFig3, space);
  const auto cmp = compare_models(numeric, closed);
  INFO("worst ", cmp.worst_label, " ratio ", cmp.worst_ratio);
  CHECK(cmp.passed());
}

TEST_CASE("closed-form agreement holds off the figure parameters") {
  const auto space = build_state_space(1, 1);
  for (double J : {2.0, 5.0, 7.5}) {
    for (double Delta : {0.8, 1.5}) {
      ModelParams pg = params(0.02, 0.3, 0.0, 0.03, J);
      pg.Delta = Delta;
      pg.delta = delta_star(1.0, J, Delta) * 1.01;
      CHECK(compare_models(reduce_effective(pg, space), closed_form_gamma(pg, space)).passed());
      ModelParams pk = params(0.02, 0.3, 0.08, 0.0, J);
      pk.Delta = Delta;
      pk.delta = delta_star(1.0, J, Delta) * 0.99;
      CHECK(compare_models(reduce_effective(pk, space), closed_form_kappa(pk, space)).passed());
    }
  }
}

TEST_CASE("comparison detects a perturbed coefficient") {
  const auto space = build_state_space(1, 1);
  const auto numeric = reduce_effective(kFig2, space);
  auto closed = closed_form_gamma(kFig2, space);
  closed.jumps.front().op = cplx(1.0 + 1e-5) * closed.jumps.front().op;
  CHECK_FALSE(compare_models(numeric, closed).passed());
}

TEST_CASE("closed forms refuse the other dissipation case") {
  const auto space = build_state_space(1, 1);
  CHECK_THROWS_AS(closed_form_gamma(kFig3, space), std::invalid_argument);
  CHECK_THROWS_AS(closed_form_kappa(kFig2, space), std::invalid_argument);
}

TEST_CASE("lossless resonant point is singular") {
  const auto space = build_state_space(1, 1);
  const auto p = params(0.03, 0.2, 0.0, 0.0);
  CHECK_THROWS_AS(reduce_effective(p, space), SingularBlockError);
}

TEST_CASE("dominant channels at the spontaneous-emission point") {
  const auto space = build_state_space(1, 1);
  const auto pruned = dominant_channels(reduce_effective(kFig2, space));
  for (const auto& label : {"gamma1.gL", "gamma1.ga", "gamma1.gR"}) {
    CHECK(std::find(pruned.dropped_channels.begin(), pruned.dropped_channels.end(), label) !=
          pruned.dropped_channels.end());
  }
  CHECK(pruned.model.jumps.size() == 4);
  CHECK(pruned.max_discarded / pruned.max_retained <= 0.05);
  for (const auto& ch : pruned.model.jumps) CHECK(ch.label.starts_with("gamma2"));

  const auto single = dominant_channels(reduce_effective(kFig2, space), 1.0);
  Eigen::Index total = 0;
  for (const auto& ch : single.model.jumps) total += ch.op.nonzeros();
  CHECK(total == 1);
  CHECK_THROWS_AS(dominant_channels(reduce_effective(kFig2, space), 0.0), std::invalid_argument);
}

TEST_CASE("regime diagnostics") {
  const auto fig2 = regime_check(kFig2);
  CHECK(fig2.all_satisfied());
  CHECK(fig2.items.size() == 5);
  const auto fig3 = regime_check(kFig3);
  CHECK_FALSE(fig3.all_satisfied());
  for (const auto& item : fig3.items) {
    if (item.name == "omega/Omega^2") {
      CHECK(item.value == doctest::Approx(0.05 / 0.03));
      CHECK_FALSE(item.satisfied);
    }
  }
  ModelParams off = kFig2;
  off.delta *= 1.1;
  CHECK_FALSE(regime_check(off).all_satisfied());
}

TEST_CASE("frozen steady-state fidelities") {
  // Reference values from an independent dense implementation.
  CHECK(steady_fidelity(kFig2) == doctest::Approx(0.9829370137679506).epsilon(1e-8));
  CHECK(steady_fidelity(kFig8) == doctest::Approx(0.9932845039215137).epsilon(1e-8));
  CHECK(steady_fidelity(params(0.02, 0.4, 2.65 / 750.0, 3.5 / 750.0, 5.0)) ==
        doctest::Approx(0.9929585768389615).epsilon(1e-8));
  CHECK(steady_fidelity(params(0.02, 0.4, 2.65 / 750.0, 3.5 / 750.0, 7.0)) ==
        doctest::Approx(0.9935050684624701).epsilon(1e-8));
}

TEST_CASE("cavity-decay fixed point keeps the g0 states populated") {
  const auto space = build_state_space(1, 1);
  const auto model = reduce_effective(kFig3, space);
  const auto ss = steady_state_direct(model, scheme_sector(model.basis));
  const double pop = fidelity(ss.rho, ground_ket(model.basis, L::gL, L::g0));
  CHECK(pop == doctest::Approx(0.49422963856367813).epsilon(1e-6));
  CHECK(fidelity(ss.rho, ground_ket(model.basis, L::gR, L::g0)) > 0.10);
}

TEST_CASE("coefficient CSV dump") {
  const auto space = build_state_space(1, 1);
  const auto path = std::filesystem::temp_directory_path() / "ccqed_coefficients.csv";
  write_coefficient_csv(reduce_effective(kFig2, space), path);
  std::ifstream f(path);
  std::string header, row;
  std::getline(f, header);
  std::getline(f, row);
  CHECK(header == "label,row_state,col_state,real,imag");
  CHECK(row.starts_with("H_eff,"));
  std::filesystem::remove(path);
}

}  // TEST_SUITE
