#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlcg/energy.hpp"
#include "mlcg/lattice.hpp"
#include "mlcg/rng.hpp"
#include "mlcg/samplers.hpp"

namespace mlcg {

// Dense kernels hold 2^N x 2^N matrices; beyond this they are refused.
inline constexpr int kMaxKernelSites = 14;

// Probabilities over an enumerated state list, with their logarithms.
struct MeasureVector {
  std::vector<double> p;
  std::vector<double> log_p;

  std::size_t size() const { return p.size(); }
};

// Normalizes log weights with a single log-sum-exp.
MeasureVector from_log_weights(const std::vector<double>& log_weights);

// Bitmask states (bit x = σ(x)) of all configurations, or of those with a
// fixed particle number, in ascending order.
std::vector<std::uint64_t> all_states(const LatticeGeometry& geom);
std::vector<std::uint64_t> shell_states(const LatticeGeometry& geom, int particles);

// μ ∝ exp(-β H_N) P_N over the given states (default: all 2^N).
MeasureVector exact_gibbs(const Hamiltonian& H);
MeasureVector exact_gibbs(const Hamiltonian& H, const std::vector<std::uint64_t>& states);
// μ̄ = μ ∘ T^{-1} over coarse states in coarse_index order; μ over all states.
MeasureVector exact_marginal(const MeasureVector& mu, const CoarseGeometry& cg);
// μ̄(0) ∝ exp(-β H̄(0)) P̄_M over coarse states in coarse_index order.
MeasureVector exact_coarse_gibbs(const CoarseHamiltonian& Hbar);
// μ(0) ∝ exp(-β [H_s(σ) + H̄(Tσ)]) P_N, the target of approximate_cg.
MeasureVector exact_approximate_target(const Hamiltonian& H, const CoarseHamiltonian& Hbar,
                                       const std::vector<std::uint64_t>& states);

struct DenseKernel {
  std::vector<std::uint64_t> states;
  std::unordered_map<std::uint64_t, std::size_t> index;
  Eigen::MatrixXd matrix;

  std::size_t size() const { return states.size(); }
  // max_i |Σ_j K(i,j) - 1|
  double row_sum_error() const;
  double min_entry() const;
};

DenseKernel build_mh_kernel(const Hamiltonian& H);
DenseKernel build_two_level_kernel(const TwoLevelRule& rule, RejectionPolicy policy = RejectionPolicy::stay);
// Kernels of the microcanonical chains restricted to one coverage shell.
DenseKernel build_mh_exchange_kernel(const Hamiltonian& H, int particles);
DenseKernel build_two_level_exchange_kernel(const TwoLevelRule& rule, int particles);

double check_detailed_balance(const DenseKernel& K, const MeasureVector& mu);
double stationarity_residual(const DenseKernel& K, const MeasureVector& mu);

// Eigenvalues of D^{1/2} K D^{-1/2}, ascending.
Eigen::VectorXd symmetrized_spectrum(const DenseKernel& K, const MeasureVector& mu);
// 1 - (second largest eigenvalue). Refuses when detailed balance fails by
// more than db_tol.
double spectral_gap(const DenseKernel& K, const MeasureVector& mu, double db_tol = 1e-10);
// E(f,f) / Var_μ(f).
double rayleigh_quotient(const DenseKernel& K, const MeasureVector& mu, const Eigen::VectorXd& f);
double min_random_rayleigh(const DenseKernel& K, const MeasureVector& mu, int trials, Rng& rng);

enum class ABClass { C1, C2, C3, C4 };
std::string to_string(ABClass c);

// Everything needed for one pair σ -> σ' with η = Tσ, η' = Tσ'.
struct ABInputs {
  double mu_from = 0.0;
  double mu_to = 0.0;
  double mubar_from = 0.0;  // μ̄(0)(η)
  double mubar_to = 0.0;
  double rho = 0.0;         // ρ(σ,σ')
  double rhobar_fwd = 0.0;  // ρ̄(η,η')
  double rhobar_rev = 0.0;  // ρ̄(η',η)
  double mur_fwd = 0.0;     // μ_r(σ'|η')
  double mur_rev = 0.0;     // μ_r(σ|η)
};

struct ABEntry {
  double A = 1.0;
  double B = 1.0;
  ABClass cls = ABClass::C1;
  double alpha = 1.0;
  double alpha_cg = 1.0;
  double alpha_f = 1.0;
  // The case formula for A; equals A outside C4.
  double lemma_A = 1.0;
};

// With a = μ̄(η')ρ̄(η',η) / (μ̄(η)ρ̄(η,η')) and r = μ(σ')/μ(σ):
// α = min(1,r), α_CG = min(1,a), α_f = min(1, r q_rev / (q_fwd a)) where
// q = ρ̄ μ_r. B = q_fwd/ρ when α_f = 1, else q_rev/ρ, and A = K_CG/(B K_c).
// For symmetric ρ̄ this is the case analysis with classes C1..C4.
ABEntry decompose_AB(const ABInputs& in);

struct ABTable {
  struct Item {
    std::size_t from;
    std::size_t to;
    ABEntry entry;
  };
  std::vector<Item> items;
  double A_inf = 1.0;
  double B_min = 1.0;
  double B_max = 1.0;
  std::size_t class_count[4] = {0, 0, 0, 0};
  double max_lemma_deviation = 0.0;  // max |A - lemma_A| outside C4
};

// Single-flip pairs of the adsorption/desorption two-level chain against
// uniform-flip MH, from exact measures only. μ over all states, μ̄(0) over
// coarse states.
ABTable build_ab_table(const CoarseGeometry& cg, const MeasureVector& mu, const MeasureVector& mubar0);

// max over σ != σ' of |K_CG - A B K_c|, with A B K_c taken as 0 off the table.
double verify_factorization(const DenseKernel& Kcg, const DenseKernel& Kc, const ABTable& table);

struct GapReport {
  std::size_t N = 0;
  int q = 1;
  double beta = 0.0;
  double K = 0.0;
  double J = 0.0;
  double lambda_c = 0.0;
  double lambda_cg = 0.0;
  double A_inf = 1.0;
  double gamma_lo = 1.0;
  double gamma_hi = 1.0;
  bool sandwich_ok = false;
};

// A_inf γ_lo λ_c <= λ_CG <= γ_hi λ_c within tol. Sets sandwich_ok; throws
// std::runtime_error naming the values when either side fails.
bool verify_gap_sandwich(GapReport& report, double tol = 1e-10);

void write_gap_csv_header(std::ostream& out);
void write_gap_csv_row(std::ostream& out, const GapReport& r);

// N^{-1} Σ μ̄0 log(μ̄0/μ̄). Refuses zero entries.
double relative_entropy_specific(const MeasureVector& mubar0, const MeasureVector& mubar, std::size_t N);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

struct MixingTimes {
  double spectral_radius = 0.0;  // largest |eigenvalue| below the unit one
  std::uint64_t bound = 0;       // smallest n with radius^n / (2 sqrt(min μ)) <= 1/4
  std::uint64_t exact = 0;       // smallest n with max_σ ||K^n(σ,.) - μ||_TV <= 1/4
  bool exact_found = false;
};

MixingTimes mixing_time_bound(const DenseKernel& K, const MeasureVector& mu, double lambda,
                              std::uint64_t max_steps = 100000);
// max_σ ||K^n(σ,.) - μ||_TV for n = 0..steps.
std::vector<double> tv_decay(const DenseKernel& K, const MeasureVector& mu, std::uint64_t steps);

}  // namespace mlcg
