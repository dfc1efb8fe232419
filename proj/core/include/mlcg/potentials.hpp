#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mlcg/lattice.hpp"

namespace mlcg {

struct NearestNeighbor {
  double K = 0.0;
};

// Mean-field coupling J/N between every pair of sites.
struct CurieWeiss {
  double J = 0.0;
  std::size_t sites = 1;
};

// J(r) = N^-1 v (r/N)^-3/2.
struct KacAlgebraic {
  double v = 0.0;
  std::size_t sites = 1;
};

// J(r) = J0 (exp(-(r/r_a)^2) - chi exp(-(r/r_r)^2)).
struct MorseGaussian {
  double J0 = 1.0;
  double r_a = 1.0;
  double r_r = 1.0;
  double chi = 0.0;
};

// Values keyed by squared lattice distance; missing keys are zero.
struct Tabulated {
  std::map<long, double> by_squared_distance;
};

// Isotropic pair coupling restricted to the window inner < r <= cutoff.
// An infinite cutoff means the coupling reaches every site of the torus.
class PairPotential {
 public:
  using Kind = std::variant<NearestNeighbor, CurieWeiss, KacAlgebraic, MorseGaussian, Tabulated>;

  PairPotential(Kind kind, double cutoff);

  static PairPotential nearest_neighbor(double K);
  static PairPotential curie_weiss(double J, const LatticeGeometry& geom);
  static PairPotential kac_algebraic(double v, const LatticeGeometry& geom);
  static PairPotential morse_gaussian(double J0, double r_a, double r_r, double chi, double cutoff);
  static PairPotential tabulated(std::map<long, double> by_squared_distance);

  double eval(double r) const;

  double cutoff() const { return cutoff_; }
  double inner() const { return inner_; }
  bool full_range() const { return cutoff_ == std::numeric_limits<double>::infinity(); }
  const Kind& kind() const { return kind_; }
  std::string name() const;

  PairPotential with_cutoff(double cutoff) const;
  PairPotential windowed(double inner, double cutoff) const;

 private:
  double raw(double r) const;

  Kind kind_;
  double inner_ = 0.0;
  double cutoff_ = std::numeric_limits<double>::infinity();
};

struct SplitPotential {
  PairPotential short_part;
  PairPotential long_part;
  double range = 1.0;  // S
};

SplitPotential split(const PairPotential& pot, double range);

// Amplitude v such that the Kac coupling sums to J0 over all nonzero
// minimal-image displacements of the lattice.
double normalize_kac(double J0, const LatticeGeometry& geom);
PairPotential make_kac(double J0, const LatticeGeometry& geom);

// Kac-scaled smooth coupling J(r) = c L^-d V(r/L), V(s) = (1 - s^2)^2 on
// [0, 1), with c fixed so the lattice sum equals J0.
PairPotential make_smooth_kac(double J0, double range, const LatticeGeometry& geom);

// Smallest integer L with |J(r)| < tol for every r > L.
int cutoff_range(const PairPotential& pot, double tol);

// a*p + b*q evaluated on every lattice distance of the torus.
PairPotential combine(double a, const PairPotential& p, double b, const PairPotential& q, const LatticeGeometry& geom);

// Coupling tabulated by minimal-image displacement for one geometry.
class PotentialTable {
 public:
  PotentialTable(const PairPotential& pot, const LatticeGeometry& geom);

  // Entrywise sum on the wider of the two stencils.
  static PotentialTable sum(const PotentialTable& a, const PotentialTable& b);

  const LatticeGeometry& geometry() const { return geom_; }
  const Stencil& stencil() const { return stencil_; }
  // Couplings in stencil visiting order; the centre entry is zero.
  const std::vector<double>& couplings() const { return couplings_; }
  double between(Site x, Site y) const { return by_residue_[residue(x, y)]; }
  int half_width() const { return half_width_; }
  bool is_zero() const { return zero_; }

 private:
  PotentialTable() = default;
  std::size_t residue(Site x, Site y) const;

  LatticeGeometry geom_;
  Stencil stencil_;
  int half_width_ = 0;
  std::vector<double> couplings_;
  std::vector<double> by_residue_;
  bool zero_ = true;
};

// Cell-averaged couplings J̄(k,l), translation invariant over the coarse
// torus, with the self-coupling J̄(k,k) stored separately.
struct CoarsePotential {
  LatticeGeometry coarse_lattice;
  Stencil stencil;
  std::vector<double> couplings;  // stencil order, centre entry zero
  std::vector<double> by_residue;  // off-diagonal, indexed by coarse displacement
  double diag = 0.0;

  double between(Cell k, Cell l) const;
};

CoarsePotential coarsen(const PotentialTable& table, const CoarseGeometry& cg);
CoarsePotential coarsen(const PairPotential& pot, const CoarseGeometry& cg);
CoarsePotential operator+(const CoarsePotential& a, const CoarsePotential& b);

std::vector<double> coarsen_field(const std::vector<double>& field, const CoarseGeometry& cg);

// J_c(x,y) = J(x-y) - J̄(cell(x), cell(y)) for |x-y| <= L_c. Depends on the
// position of x inside its cell, so one row is stored per position.
struct CorrectionPotential {
  double cutoff = 0.0;
  Stencil stencil;
  std::vector<std::vector<double>> by_position;

  double max_abs() const;
};

std::size_t position_in_cell(const CoarseGeometry& cg, Site x);

CorrectionPotential correction_potential(const PotentialTable& table, const CoarsePotential& coarse,
                                         const CoarseGeometry& cg, double cutoff);

// CSV "r,J" over distinct lattice distances in (0, cutoff].
void write_potential_csv(std::ostream& out, const PairPotential& pot, const LatticeGeometry& geom);
// CSV "r,J,J_bar,J_c" along the +col axis from the first site of cell 0.
void write_correction_csv(std::ostream& out, const PotentialTable& table, const CoarsePotential& coarse,
                          const CoarseGeometry& cg, int max_r);

}  // namespace mlcg
