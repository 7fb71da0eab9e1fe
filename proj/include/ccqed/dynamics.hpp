#pragma once

#include "ccqed/effective.hpp"
#include "ccqed/model.hpp"

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccqed {

struct IntegratorConfig {
  double step = 0.02;  ///< units of 1/g
  double t_final = 1.0;
  int record_every = 1;
  double trace_tolerance = 1e-6;
  double positivity_tolerance = 1e-8;
  int positivity_every = 10;  ///< samples between eigenvalue checks; 0 disables
  double steady_threshold = 1e-9;  ///< max |d rho/dt| for steady detection
  int steady_samples = 100;        ///< consecutive samples below threshold

  void validate() const;
  long long step_count() const;
};

/// Raised when an integration leaves the physical manifold.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct Observable {
  std::string label;
  StateVector state;
};

struct ObservableSet {
  std::vector<Observable> items;

  /// T1, T2, T3, gLg0, gRg0, gagL on the given space (vacuum photons).
  static ObservableSet standard(const StateSpace& space);
  void add(std::string label, StateVector state);
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> fidelity;  ///< overlap with the first observable
  std::vector<std::string> labels;
  std::vector<std::vector<double>> populations;  ///< [observable][sample]
  std::vector<double> trace_drift;
  std::vector<double> hermiticity;
  std::vector<std::pair<std::size_t, double>> min_eigenvalues;  ///< (sample, value)
  std::optional<double> steady_time;
  DensityMatrix final_state;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& population(std::string_view label) const;
};

/// Per-channel post-jump unitaries; channels without an entry use identity.
class FeedbackScheme {
 public:
  static FeedbackScheme identity() { return {}; }

  /// Throws std::invalid_argument unless U U^dagger = 1 to 1e-12.
  void assign(const std::string& channel, SparseOperator unitary);
  const SparseOperator* find(const std::string& channel) const;
  bool empty() const { return unitaries_.empty(); }
  const std::map<std::string, SparseOperator>& unitaries() const { return unitaries_; }

 private:
  std::map<std::string, SparseOperator> unitaries_;
};

enum class FeedbackKind { sigma_x1, sigma_x2 };
std::string_view to_string(FeedbackKind kind);

inline constexpr const char* kDefaultFeedbackChannel = "kappa.cR1";

/// exp(i pi sigma / 2) with sigma = |g0><x| + |x><g0| on atom 2, x = gR for
/// sigma_x1 and eR for sigma_x2. Pairs with both partners in the space become
/// i * swap; states whose partner is truncated away are left unchanged.
SparseOperator build_feedback_unitary(FeedbackKind which, const StateSpace& space);

/// Jump operators of an effective model with feedback folded in as U L_eff.
/// Only unitaries that keep the ground manifold invariant are representable.
std::vector<CollapseChannel> effective_feedback_channels(const EffectiveModel& model,
                                                         FeedbackKind which,
                                                         const std::string& channel = kDefaultFeedbackChannel);

/// -i[H, rho] + sum_j (L rho L^dagger - {L^dagger L, rho}/2)
DensityMatrix lindblad_rhs(const SparseOperator& H, std::span<const CollapseChannel> channels,
                           const DensityMatrix& rho);

/// Same generator with the jump sandwich replaced by U L rho L^dagger U^dagger.
DensityMatrix feedback_rhs(const SparseOperator& H, std::span<const CollapseChannel> channels,
                           const FeedbackScheme& feedback, const DensityMatrix& rho);

/// Classical fixed-step fourth-order Runge-Kutta integration of the master
/// equation. Aborts with IntegrationError on trace drift or non-finite values.
Trajectory evolve(const DensityMatrix& rho0, const SparseOperator& H,
                  std::span<const CollapseChannel> channels, const IntegratorConfig& config,
                  const ObservableSet& observables);

Trajectory evolve_with_feedback(const DensityMatrix& rho0, const SparseOperator& H,
                                std::span<const CollapseChannel> channels,
                                const FeedbackScheme& feedback, const IntegratorConfig& config,
                                const ObservableSet& observables);

/// Re <target|rho|target>; throws if the imaginary part exceeds 1e-10.
double fidelity(const DensityMatrix& rho, const StateVector& target);

class DegenerateSteadyState : public std::runtime_error {
 public:
  DegenerateSteadyState(const std::string& what, int dimension)
      : std::runtime_error(what), dimension_(dimension) {}
  int null_dimension() const { return dimension_; }

 private:
  int dimension_;
};

struct SteadyState {
  DensityMatrix rho;  ///< on the full basis of the generator, zero outside the sector
  double residual = 0.0;  ///< max |L rho|
  double gap = 0.0;       ///< smallest non-null singular value of the Liouvillian
};

/// Null vector of the vectorized Liouvillian restricted to an invariant
/// sector (empty span = whole basis).
SteadyState steady_state_direct(const SparseOperator& H, std::span<const CollapseChannel> channels,
                                std::span<const int> sector = {});
SteadyState steady_state_direct(const EffectiveModel& model, std::span<const int> sector = {});

/// Step size for effective-model runs: 1 / (50 * fastest effective rate).
double effective_step(const ModelParams& p, const EffectiveModel& model);

}  // namespace ccqed
