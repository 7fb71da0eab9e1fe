#include "ccqed/operator_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccqed {

namespace {

constexpr std::array<std::string_view, kAtomLevels> kLevelNames = {"gL", "g0", "gR", "ga",
                                                                   "eL", "e0", "eR"};
constexpr std::array<std::string_view, kModes> kModeNames = {"aL1", "aL2", "aR1", "aR2"};

void require_same_dimension(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

std::string_view to_string(AtomLevel level) { return kLevelNames[static_cast<int>(level)]; }

std::optional<AtomLevel> parse_atom_level(std::string_view name) {
  for (int i = 0; i < kAtomLevels; ++i) {
    if (kLevelNames[i] == name) return static_cast<AtomLevel>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Mode mode) { return kModeNames[static_cast<int>(mode)]; }

int BasisState::photon_count() const { return std::accumulate(photons.begin(), photons.end(), 0); }

int BasisState::excitation() const {
  return static_cast<int>(is_excited(atom1)) + static_cast<int>(is_excited(atom2)) +
         photon_count();
}

std::string label(const BasisState& state) {
  std::string out(to_string(state.atom1));
  out += ',';
  out += to_string(state.atom2);
  if (!state.is_vacuum()) {
    out += ",";
    for (int m = 0; m < kModes; ++m) out += std::to_string(state.photons[m]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// StateSpace

std::uint64_t StateSpace::key(const BasisState& state) {
  std::uint64_t k = static_cast<std::uint64_t>(state.atom1);
  k = k * kAtomLevels + static_cast<std::uint64_t>(state.atom2);
  for (int n : state.photons) k = (k << 12) | static_cast<std::uint64_t>(n);
  return k;
}

void StateSpace::rebuild_index() {
  index_.clear();
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(key(states_[i]), static_cast<int>(i));
}

std::optional<int> StateSpace::index_of(const BasisState& state) const {
  auto it = index_.find(key(state));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StateSpace StateSpace::from_states(std::vector<BasisState> states, int max_excitation,
                                   int per_mode_cap) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  StateSpace space;
  space.states_ = std::move(states);
  space.max_excitation_ = max_excitation;
  space.per_mode_cap_ = per_mode_cap;
  space.rebuild_index();
  return space;
}

StateSpace build_state_space(int max_excitation, int per_mode_cap) {
  if (max_excitation < 1) {
    throw std::invalid_argument("build_state_space: max_excitation must be >= 1");
  }
  if (per_mode_cap < 1) {
    throw std::invalid_argument("build_state_space: per_mode_cap must be >= 1");
  }
  StateSpace space;
  space.max_excitation_ = max_excitation;
  space.per_mode_cap_ = per_mode_cap;
  const int cap = std::min(per_mode_cap, max_excitation);
  for (int a1 = 0; a1 < kAtomLevels; ++a1) {
    for (int a2 = 0; a2 < kAtomLevels; ++a2) {
      BasisState s{static_cast<AtomLevel>(a1), static_cast<AtomLevel>(a2), {}};
      // odometer over the photon tuple, last mode fastest
      std::array<int, kModes> n{};
      while (true) {
        s.photons = n;
        if (s.excitation() <= max_excitation) space.states_.push_back(s);
        int m = kModes - 1;
        while (m >= 0 && n[m] == cap) n[m--] = 0;
        if (m < 0) break;
        ++n[m];
      }
    }
  }
  space.rebuild_index();
  return space;
}

StateSpace ground_manifold(const StateSpace& space) {
  std::vector<BasisState> ground;
  for (const auto& s : space.states()) {
    if (s.excitation() == 0) ground.push_back(s);
  }
  return StateSpace::from_states(std::move(ground), 0, space.per_mode_cap());
}

// ---------------------------------------------------------------------------
// SparseOperator

SparseOperator::SparseOperator(int dimension) : matrix_(dimension, dimension) {}

SparseOperator::SparseOperator(int dimension, const std::vector<Entry>& entries)
    : matrix_(dimension, dimension) {
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= dimension || e.col < 0 || e.col >= dimension) {
      throw std::out_of_range("SparseOperator: entry outside dimension");
    }
    triplets.emplace_back(e.row, e.col, e.value);
  }
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  canonicalize();
}

SparseOperator::SparseOperator(Matrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw DimensionMismatch("SparseOperator: not square");
  canonicalize();
}

SparseOperator SparseOperator::identity(int dimension) {
  Matrix m(dimension, dimension);
  m.setIdentity();
  return SparseOperator(std::move(m));
}

SparseOperator SparseOperator::from_dense(const Eigen::MatrixXcd& dense) {
  if (dense.rows() != dense.cols()) throw DimensionMismatch("from_dense: not square");
  return SparseOperator(Matrix(dense.sparseView(cplx(0.0), 1.0)));
}

void SparseOperator::canonicalize() {
  matrix_.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) >= kZeroDrop; });
  matrix_.makeCompressed();
}

std::vector<SparseOperator::Entry> SparseOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) {
      out.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
    }
  }
  return out;
}

SparseOperator SparseOperator::adjoint() const { return SparseOperator(Matrix(matrix_.adjoint())); }

StateVector SparseOperator::apply(const StateVector& vector) const {
  require_same_dimension(dimension(), static_cast<int>(vector.size()), "apply");
  return matrix_ * vector;
}

double SparseOperator::max_abs() const {
  double best = 0.0;
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) best = std::max(best, std::abs(it.value()));
  }
  return best;
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
  require_same_dimension(a.dimension(), b.dimension(), "add");
  return SparseOperator(SparseOperator::Matrix(a.matrix() + b.matrix()));
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
  require_same_dimension(a.dimension(), b.dimension(), "subtract");
  return SparseOperator(SparseOperator::Matrix(a.matrix() - b.matrix()));
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
  require_same_dimension(a.dimension(), b.dimension(), "mul");
  return SparseOperator(SparseOperator::Matrix(a.matrix() * b.matrix()));
}

SparseOperator operator*(cplx z, const SparseOperator& a) {
  return SparseOperator(SparseOperator::Matrix(z * a.matrix()));
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
  return a * b - b * a;
}

double max_abs_difference(const SparseOperator& a, const SparseOperator& b) {
  require_same_dimension(a.dimension(), b.dimension(), "max_abs_difference");
  SparseOperator::Matrix diff = a.matrix() - b.matrix();
  double best = 0.0;
  for (int r = 0; r < diff.outerSize(); ++r) {
    for (SparseOperator::Matrix::InnerIterator it(diff, r); it; ++it) {
      best = std::max(best, std::abs(it.value()));
    }
  }
  return best;
}

double hermiticity_error(const SparseOperator& a) { return max_abs_difference(a, a.adjoint()); }

// ---------------------------------------------------------------------------
// Lifts

SparseOperator lift_atom_op(const StateSpace& space, Atom atom, AtomLevel bra, AtomLevel ket) {
  std::vector<SparseOperator::Entry> entries;
  for (int j = 0; j < space.dimension(); ++j) {
    BasisState s = space.state(j);
    if (s.level(atom) != ket) continue;
    s.level(atom) = bra;
    if (auto i = space.index_of(s)) entries.push_back({*i, j, 1.0});
  }
  return SparseOperator(space.dimension(), entries);
}

SparseOperator lift_mode_annihilator(const StateSpace& space, Mode mode) {
  const int m = static_cast<int>(mode);
  std::vector<SparseOperator::Entry> entries;
  for (int j = 0; j < space.dimension(); ++j) {
    BasisState s = space.state(j);
    const int n = s.photons[m];
    if (n == 0) continue;
    s.photons[m] = n - 1;
    if (auto i = space.index_of(s)) entries.push_back({*i, j, std::sqrt(static_cast<double>(n))});
  }
  return SparseOperator(space.dimension(), entries);
}

SparseOperator excitation_number_op(const StateSpace& space) {
  std::vector<SparseOperator::Entry> entries;
  for (int i = 0; i < space.dimension(); ++i) {
    entries.push_back({i, i, static_cast<double>(space.state(i).excitation())});
  }
  return SparseOperator(space.dimension(), entries);
}

SparseOperator restrict_to(const SparseOperator& op, std::span<const int> rows,
                           std::span<const int> cols) {
  if (rows.size() != cols.size()) {
    throw DimensionMismatch("restrict_to: row and column index sets must have equal size");
  }
  std::vector<int> row_pos(static_cast<std::size_t>(op.dimension()), -1);
  std::vector<int> col_pos(static_cast<std::size_t>(op.dimension()), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) row_pos.at(static_cast<std::size_t>(rows[k])) = static_cast<int>(k);
  for (std::size_t k = 0; k < cols.size(); ++k) col_pos.at(static_cast<std::size_t>(cols[k])) = static_cast<int>(k);
  std::vector<SparseOperator::Entry> entries;
  for (const auto& e : op.entries()) {
    const int r = row_pos[static_cast<std::size_t>(e.row)];
    const int c = col_pos[static_cast<std::size_t>(e.col)];
    if (r >= 0 && c >= 0) entries.push_back({r, c, e.value});
  }
  return SparseOperator(static_cast<int>(rows.size()), entries);
}

// ---------------------------------------------------------------------------
// Dense helpers

cplx expectation(const SparseOperator& a, const DensityMatrix& rho) {
  require_same_dimension(a.dimension(), static_cast<int>(rho.rows()), "expectation");
  cplx sum = 0.0;
  const auto& m = a.matrix();
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
      sum += it.value() * rho(it.col(), it.row());
    }
  }
  return sum;
}

StateVector basis_vector(const StateSpace& space, const BasisState& state) {
  auto i = space.index_of(state);
  if (!i) throw std::out_of_range("basis_vector: state " + label(state) + " not in space");
  StateVector v = StateVector::Zero(space.dimension());
  v(*i) = 1.0;
  return v;
}

DensityMatrix projector(const StateVector& v) { return v * v.adjoint(); }

double hermiticity_error(const DensityMatrix& rho) {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const DensityMatrix& rho) {
  const DensityMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace ccqed
