#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mlcg/lattice.hpp"
#include "mlcg/potentials.hpp"

namespace mlcg {

// Neighbour visits spent in energy differences, split by table.
struct OpCounts {
  std::uint64_t long_range = 0;
  std::uint64_t short_range = 0;
  std::uint64_t coarse = 0;
};

struct EnergyParts {
  double short_range = 0.0;
  double long_range = 0.0;
  double field = 0.0;

  double total() const { return short_range + long_range + field; }
};

// Sum of n doubles by recursive halving over blocks of 64.
double pairwise_sum(const double* values, std::size_t n);

// H_N(σ) = -1/2 Σ_x Σ_{y≠x} J(x-y) σ(x) σ(y) + Σ_x h(x) σ(x).
//
// An unsplit Hamiltonian keeps its whole coupling in the long-range slot.
// A split one keeps K (r <= S) and J (r > S) separately and also their sum,
// which is what the total energy and the full compression use.
class Hamiltonian {
 public:
  Hamiltonian(const LatticeGeometry& geom, const PairPotential& pot, std::vector<double> field, double beta);
  Hamiltonian(const LatticeGeometry& geom, const SplitPotential& pot, std::vector<double> field, double beta);

  static std::vector<double> uniform_field(const LatticeGeometry& geom, double h) {
    return std::vector<double>(geom.sites, h);
  }

  Hamiltonian with_field(std::vector<double> field) const;
  Hamiltonian with_beta(double beta) const;

  const LatticeGeometry& geometry() const { return geom_; }
  double beta() const { return beta_; }
  const std::vector<double>& field() const { return field_; }
  bool is_split() const { return short_ != nullptr; }
  std::optional<double> split_range() const { return split_range_; }

  const PotentialTable& full_table() const { return *full_; }
  const PotentialTable& long_table() const { return *long_; }
  // Null when not split.
  const PotentialTable* short_table() const { return short_.get(); }

  double energy(const MicroConfig& sigma) const;
  EnergyParts energy_parts(const MicroConfig& sigma) const;

  EnergyParts delta_flip(const MicroConfig& sigma, Site x, OpCounts* ops = nullptr) const;
  // ΔH_s only; zero when not split.
  double delta_flip_short(const MicroConfig& sigma, Site x, OpCounts* ops = nullptr) const;
  EnergyParts delta_exchange(const MicroConfig& sigma, Site x, Site y, OpCounts* ops = nullptr) const;

 private:
  LatticeGeometry geom_;
  std::shared_ptr<const PotentialTable> full_;
  std::shared_ptr<const PotentialTable> long_;
  std::shared_ptr<const PotentialTable> short_;
  std::optional<double> split_range_;
  std::vector<double> field_;
  double beta_ = 1.0;
};

double energy_micro(const Hamiltonian& H, const MicroConfig& sigma);
// (H_s, H_l, field); throws ConfigError without a split potential.
EnergyParts energy_split(const Hamiltonian& H, const MicroConfig& sigma);
double delta_flip(const Hamiltonian& H, const MicroConfig& sigma, Site x, OpCounts* ops = nullptr);
double delta_exchange(const Hamiltonian& H, const MicroConfig& sigma, Site x, Site y, OpCounts* ops = nullptr);

enum class Compression { full, long_only };

// H̄(η) = -1/2 Σ_k Σ_{l≠k} J̄(k,l) η(k) η(l) - 1/2 J̄(0,0) Σ_k η(k)(η(k)-1) + Σ_k h̄(k) η(k).
class CoarseHamiltonian {
 public:
  CoarseHamiltonian(const CoarseGeometry& cg, CoarsePotential pot, std::vector<double> hbar, double beta);

  // Compresses the full coupling, or only the long-range part J, together
  // with the cell-averaged field.
  static CoarseHamiltonian compress(const Hamiltonian& H, const CoarseGeometry& cg, Compression what);

  CoarseHamiltonian with_field(std::vector<double> hbar) const;

  const CoarseGeometry& geometry() const { return *cg_; }
  const CoarsePotential& potential() const { return *pot_; }
  const std::vector<double>& field() const { return hbar_; }
  double beta() const { return beta_; }

  double energy(const CoarseConfig& eta) const;
  // η(k) -> η(k) + dir, dir = ±1.
  double delta(const CoarseConfig& eta, Cell k, int dir, OpCounts* ops = nullptr) const;
  // One particle from cell `from` to cell `to`.
  double delta_transfer(const CoarseConfig& eta, Cell from, Cell to, OpCounts* ops = nullptr) const;

 private:
  double neighbour_sum(const CoarseConfig& eta, Cell k) const;

  std::shared_ptr<const CoarseGeometry> cg_;
  std::shared_ptr<const CoarsePotential> pot_;
  std::vector<double> hbar_;
  double beta_ = 1.0;
};

double energy_coarse(const CoarseHamiltonian& Hbar, const CoarseConfig& eta);
double delta_coarse(const CoarseHamiltonian& Hbar, const CoarseConfig& eta, Cell k, int dir, OpCounts* ops = nullptr);

// ΔH_N(σ,σ^x) - ΔH̄(η,η^k) with η = Tσ and k the cell of x.
double delta_correction(const Hamiltonian& H, const CoarseHamiltonian& Hbar, const MicroConfig& sigma,
                        const CoarseConfig& eta, Site x);
// Same quantity through a tabulated J_c restricted to |x-y| <= L_c, plus the
// field difference. Exact only when J_c vanishes beyond L_c.
double delta_correction(const Hamiltonian& H, const CoarseHamiltonian& Hbar, const CorrectionPotential& jc,
                        const MicroConfig& sigma, Site x);

// Estimate ε = β ‖∇V‖₁ q / L of the compression error, with ‖∇V‖₁ taken
// as the total variation of r -> L^d J(r) on a grid of step 1/64.
double compression_epsilon(const PairPotential& pot, int dim, double beta, int q, double range);

}  // namespace mlcg
