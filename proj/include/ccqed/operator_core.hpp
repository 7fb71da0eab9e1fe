#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <complex>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ccqed {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Internal levels of one atom. Ordinals fix the basis ordering.
enum class AtomLevel : std::uint8_t { gL = 0, g0, gR, ga, eL, e0, eR };
inline constexpr int kAtomLevels = 7;

constexpr bool is_excited(AtomLevel level) {
  return static_cast<int>(level) >= static_cast<int>(AtomLevel::eL);
}
std::string_view to_string(AtomLevel level);
std::optional<AtomLevel> parse_atom_level(std::string_view name);

/// Local cavity modes: L/R polarisation in cavity 1 and 2.
enum class Mode : std::uint8_t { aL1 = 0, aL2, aR1, aR2 };
inline constexpr int kModes = 4;
std::string_view to_string(Mode mode);

enum class Atom : std::uint8_t { first = 1, second = 2 };

struct BasisState {
  AtomLevel atom1 = AtomLevel::gL;
  AtomLevel atom2 = AtomLevel::gL;
  std::array<int, kModes> photons{};

  int photon_count() const;
  int excitation() const;
  bool is_vacuum() const { return photon_count() == 0; }
  AtomLevel level(Atom atom) const { return atom == Atom::first ? atom1 : atom2; }
  AtomLevel& level(Atom atom) { return atom == Atom::first ? atom1 : atom2; }

  // Lexicographic in (atom1, atom2, photon tuple).
  auto operator<=>(const BasisState&) const = default;
};

std::string label(const BasisState& state);

/// Truncated product basis of two atoms and four modes. Immutable once built.
class StateSpace {
 public:
  int dimension() const { return static_cast<int>(states_.size()); }
  int max_excitation() const { return max_excitation_; }
  int per_mode_cap() const { return per_mode_cap_; }
  std::span<const BasisState> states() const { return states_; }
  const BasisState& state(int index) const { return states_.at(static_cast<std::size_t>(index)); }
  std::optional<int> index_of(const BasisState& state) const;

  /// Sub-basis of the given states in canonical order. Used for the
  /// ground manifold and for restricted sectors.
  static StateSpace from_states(std::vector<BasisState> states, int max_excitation,
                                int per_mode_cap);

  bool operator==(const StateSpace& other) const { return states_ == other.states_; }

 private:
  StateSpace() = default;
  friend StateSpace build_state_space(int max_excitation, int per_mode_cap);

  std::vector<BasisState> states_;
  std::unordered_map<std::uint64_t, int> index_;
  int max_excitation_ = 0;
  int per_mode_cap_ = 0;

  static std::uint64_t key(const BasisState& state);
  void rebuild_index();
};

StateSpace build_state_space(int max_excitation, int per_mode_cap);

/// Excitation-0 sub-basis (ground atoms, vacuum photons).
StateSpace ground_manifold(const StateSpace& space);

/// Complex sparse matrix in compressed-row form. Entries with magnitude
/// below kZeroDrop are removed on construction.
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
  struct Entry {
    int row;
    int col;
    cplx value;
  };

  static constexpr double kZeroDrop = 1e-14;

  explicit SparseOperator(int dimension = 0);
  SparseOperator(int dimension, const std::vector<Entry>& entries);
  explicit SparseOperator(Matrix matrix);

  static SparseOperator identity(int dimension);
  static SparseOperator from_dense(const Eigen::MatrixXcd& dense);

  int dimension() const { return static_cast<int>(matrix_.rows()); }
  Eigen::Index nonzeros() const { return matrix_.nonZeros(); }
  const Matrix& matrix() const { return matrix_; }
  cplx coeff(int row, int col) const { return matrix_.coeff(row, col); }
  std::vector<Entry> entries() const;
  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix_); }
  bool is_zero() const { return matrix_.nonZeros() == 0; }

  SparseOperator adjoint() const;
  StateVector apply(const StateVector& vector) const;

  /// Largest entrywise magnitude.
  double max_abs() const;

 private:
  Matrix matrix_;
  void canonicalize();
};

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator*(cplx z, const SparseOperator& a);

inline SparseOperator add(const SparseOperator& a, const SparseOperator& b) { return a + b; }
inline SparseOperator scale(cplx z, const SparseOperator& a) { return z * a; }
inline SparseOperator mul(const SparseOperator& a, const SparseOperator& b) { return a * b; }
inline SparseOperator adjoint(const SparseOperator& a) { return a.adjoint(); }
SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);

/// max |a_ij - b_ij|
double max_abs_difference(const SparseOperator& a, const SparseOperator& b);
double hermiticity_error(const SparseOperator& a);

/// |bra><ket| on one atom, identity elsewhere, restricted to the space.
SparseOperator lift_atom_op(const StateSpace& space, Atom atom, AtomLevel bra, AtomLevel ket);

/// Bosonic annihilator of a local mode with sqrt(n) elements. A product of
/// lifted operators is only exact when the lowering factor is applied first,
/// since intermediate states above the cap are not represented.
SparseOperator lift_mode_annihilator(const StateSpace& space, Mode mode);

/// Diagonal operator counting excited atoms plus photons.
SparseOperator excitation_number_op(const StateSpace& space);

/// Restriction of an operator to rows/cols given by index lists.
SparseOperator restrict_to(const SparseOperator& op, std::span<const int> rows,
                           std::span<const int> cols);

cplx expectation(const SparseOperator& a, const DensityMatrix& rho);

StateVector basis_vector(const StateSpace& space, const BasisState& state);
DensityMatrix projector(const StateVector& v);

double hermiticity_error(const DensityMatrix& rho);
double min_eigenvalue(const DensityMatrix& rho);

}  // namespace ccqed
