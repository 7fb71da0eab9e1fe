#pragma once

#include "ccqed/model.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccqed {

/// Raised when the decaying block of H_NH cannot be inverted reliably.
class SingularBlockError : public std::runtime_error {
 public:
  SingularBlockError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

struct SubspaceSplit {
  std::vector<int> ground;   ///< excitation 0
  std::vector<int> excited;  ///< excitation >= 1
};
SubspaceSplit split_by_excitation(const StateSpace& space);

enum class Provenance { numeric, closed_form_gamma, closed_form_kappa };
std::string_view to_string(Provenance provenance);

/// Effective jump operators map ground states to ground states.
using EffectiveChannel = CollapseChannel;

/// Effective generator on the ground manifold.
struct EffectiveModel {
  StateSpace basis;  ///< the excitation-0 states of the parent space
  SparseOperator H_eff;
  std::vector<EffectiveChannel> jumps;
  Provenance provenance = Provenance::numeric;
  double condition = 0.0;  ///< condition estimate of the inverted block (numeric only)
};

/// Complex scalars entering the closed forms.
struct ClosedFormContext {
  cplx J2_tilde;        ///< J^2 - delta^2
  cplx Delta_tilde;     ///< Delta - i gamma / 2
  cplx J2_tilde_prime;  ///< J^2 - delta_tilde^2
  cplx delta_tilde;     ///< delta - i kappa / 2
  static ClosedFormContext from(const ModelParams& p);
};

/// H0 - (i/2) sum_j L_j^dagger L_j over all collapse channels.
SparseOperator build_H_NH(const ModelParams& p, const StateSpace& space);

struct ReductionOptions {
  double max_condition = 1e12;
};

/// Second-order elimination of the excited manifold:
///   H_eff = -1/2 V- (H_NH^-1 + (H_NH^-1)^dagger) V+ + Hg,
///   L_eff = L H_NH^-1 V+.
/// H_NH is inverted on the excitation-1 states connected to the image of V+.
EffectiveModel reduce_effective(const ModelParams& p, const StateSpace& space,
                                const ReductionOptions& options = {});

/// Closed-form effective model for a lossless cavity (kappa = 0).
/// Channel "gamma2.g0" is the coherent sum of the two g0-branching channels.
EffectiveModel closed_form_gamma(const ModelParams& p, const StateSpace& space);

/// Closed-form effective model without spontaneous emission (gamma = 0).
EffectiveModel closed_form_kappa(const ModelParams& p, const StateSpace& space);

/// Elementwise agreement between a numeric and a closed-form model on the
/// ground states outside the inert blocks (atom-1 g0, atom-2 ga). The merged
/// closed-form channel "gamma2.g0" is compared with the sum of the numeric
/// g0 channels. An element passes when |a - b| <= max(abs_floor, rel * max(|a|, |b|)).
struct OracleComparison {
  double worst_ratio = 0.0;  ///< max |a - b| / max(abs_floor, rel * scale); <= 1 passes
  double max_abs_difference = 0.0;
  std::string worst_label;
  int compared = 0;
  bool passed() const { return worst_ratio <= 1.0; }
};

OracleComparison compare_models(const EffectiveModel& numeric, const EffectiveModel& closed,
                                double rel = 1e-6, double abs_floor = 1e-10);

struct PrunedModel {
  EffectiveModel model;
  std::vector<std::string> dropped_channels;
  double max_discarded = 0.0;   ///< largest discarded coefficient magnitude
  double max_retained = 0.0;    ///< largest coefficient overall
  double discarded_weight = 0.0;  ///< sum of |c|^2 over discarded coefficients
};

inline constexpr double kDefaultDominantCutoff = 0.2;

/// Keeps jump coefficients with |c| >= cutoff * max|c|. For cutoff >= 1 only
/// the single largest coefficient survives. Empty channels are removed.
PrunedModel dominant_channels(const EffectiveModel& model, double cutoff = kDefaultDominantCutoff);

struct RegimeItem {
  std::string name;
  double value;
  double threshold;
  bool upper_bound;  ///< satisfied when value <= threshold instead of >=
  bool satisfied;
};

struct RegimeDiagnostics {
  std::vector<RegimeItem> items;
  bool all_satisfied() const;
};

/// Advisory checks: Delta >> gamma, delta*Delta >= 2 g^2, Omega^2 << omega,
/// delta >> kappa, delta close to delta_star. "Much greater" means a factor 10.
RegimeDiagnostics regime_check(const ModelParams& p);

/// CSV with columns label,row_state,col_state,real,imag. The Hamiltonian
/// appears under label "H_eff".
void write_coefficient_csv(const EffectiveModel& model, const std::filesystem::path& path);

}  // namespace ccqed
