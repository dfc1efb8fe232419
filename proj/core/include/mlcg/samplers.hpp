#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlcg/energy.hpp"
#include "mlcg/lattice.hpp"
#include "mlcg/rng.hpp"

namespace mlcg {

enum class Method { mh, cgmc, two_level };
enum class Strategy { corrections, splitting, approximate_cg };
enum class Ensemble { canonical, microcanonical };
enum class RejectionPolicy { stay, retry };

// uniform_flip: pick x uniformly and propose σ^x.
// coarse_adsorb_desorb: pick a cell uniformly, adsorb with probability
//   (Q-η(k))/Q, otherwise desorb.
// uniform_exchange: pick x uniformly and one of its 2d neighbours.
// coarse_particle_move: pick an ordered pair of adjacent cells and move one
//   particle across it.
enum class ProposalKernel { uniform_flip, coarse_adsorb_desorb, uniform_exchange, coarse_particle_move };

std::string to_string(Method m);
std::string to_string(Strategy s);
std::string to_string(Ensemble e);
std::string to_string(RejectionPolicy p);
Method parse_method(const std::string& text);
Strategy parse_strategy(const std::string& text);
Ensemble parse_ensemble(const std::string& text);
RejectionPolicy parse_policy(const std::string& text);

// Counters of one chain. For mh the coarse level is counted as always
// accepted; for cgmc the fine level is. So m_coarse_accepted equals
// n_fine_proposed for every method.
struct AcceptanceStats {
  std::uint64_t n_coarse_proposed = 0;
  std::uint64_t m_coarse_accepted = 0;
  std::uint64_t n_fine_proposed = 0;
  std::uint64_t n_fine_accepted = 0;
  OpCounts ops;

  AcceptanceStats& operator+=(const AcceptanceStats& other);
};

struct AcceptanceRates {
  double coarse = 0.0;
  double fine = 0.0;
  double total = 0.0;
};

// Throws std::domain_error when nothing was proposed at a level.
AcceptanceRates average_acceptance(const AcceptanceStats& stats);

struct ChainState {
  MicroConfig sigma;
  CoarseConfig eta;
  Rng rng;
  AcceptanceStats stats;

  ChainState(const CoarseGeometry& cg, MicroConfig initial, Rng stream);
};

// Which coupling the coarse level sees: the full one for corrections, only
// the long-range part for splitting and approximate_cg.
Compression compression_for(Strategy s);

// Acceptance exponents of the two-level chain. Used by the samplers and by
// the dense kernel builders, so both describe the same chain.
//
//   coarse:  -β ΔH̄
//   fine:    -β (ΔH_N - ΔH̄)   corrections, splitting   (target μ)
//            -β ΔH_s           approximate_cg           (target μ(0))
class TwoLevelRule {
 public:
  TwoLevelRule(const Hamiltonian& H, const CoarseHamiltonian& Hbar, Strategy strategy);

  const Hamiltonian& fine() const { return *H_; }
  const CoarseHamiltonian& coarse() const { return *Hbar_; }
  Strategy strategy() const { return strategy_; }

  double coarse_log_ratio(double dHbar) const { return -H_->beta() * dHbar; }
  double fine_log_ratio_flip(const MicroConfig& sigma, Site x, double dHbar, OpCounts* ops = nullptr) const;
  // Exchange of σ(x) != σ(y); dHbar is zero when both sites share a cell.
  double fine_log_ratio_exchange(const MicroConfig& sigma, Site x, Site y, double dHbar,
                                 OpCounts* ops = nullptr) const;

 private:
  const Hamiltonian* H_;
  const CoarseHamiltonian* Hbar_;
  Strategy strategy_;
};

// Metropolis test on a log acceptance ratio. Draws only when it is negative.
bool metropolis_accept(double log_ratio, Rng& rng);

void mh_step(ChainState& state, const Hamiltonian& H, const CoarseGeometry& cg, ProposalKernel kernel);
// Coarse-only chain targeting μ̄(0). σ is carried along by uniform
// single-site reconstruction so that coverage and snapshots stay defined.
void cgmc_step(ChainState& state, const CoarseHamiltonian& Hbar, Ensemble ensemble);
void two_level_step(ChainState& state, const TwoLevelRule& rule, RejectionPolicy policy);
void two_level_exchange_step(ChainState& state, const TwoLevelRule& rule);

struct SamplerConfig {
  Method method = Method::mh;
  Strategy strategy = Strategy::corrections;
  Ensemble ensemble = Ensemble::canonical;
  std::uint64_t iterations = 0;
  std::uint64_t burn_in = 0;
  std::optional<std::uint64_t> seed;
  RejectionPolicy policy = RejectionPolicy::stay;
  // Steps between observable rows; 0 picks iterations / 100.
  std::uint64_t stride = 0;

  bool operator==(const SamplerConfig&) const = default;
};

// Chain dynamics bound to one Hamiltonian pair.
class Sampler {
 public:
  Sampler(SamplerConfig config, Hamiltonian H, const CoarseGeometry& cg,
          std::optional<CoarseHamiltonian> Hbar = std::nullopt);

  // Builds the coarse Hamiltonian that the method and strategy call for.
  static Sampler make(SamplerConfig config, Hamiltonian H, const CoarseGeometry& cg);

  const SamplerConfig& config() const { return config_; }
  const Hamiltonian& hamiltonian() const { return H_; }
  const CoarseHamiltonian* coarse_hamiltonian() const { return Hbar_ ? &*Hbar_ : nullptr; }
  const CoarseGeometry& geometry() const { return *cg_; }

  Sampler with_field(const std::vector<double>& field) const;

  void step(ChainState& state) const;

 private:
  SamplerConfig config_;
  Hamiltonian H_;
  std::shared_ptr<const CoarseGeometry> cg_;
  std::optional<CoarseHamiltonian> Hbar_;
};

struct ObservableRow {
  std::uint64_t step = 0;
  double h = 0.0;
  double coverage = 0.0;
  double energy = 0.0;
  double coarse_acc_rate = 0.0;
  double fine_acc_rate = 0.0;
  std::uint64_t ops_long = 0;
  std::uint64_t ops_short = 0;
  std::uint64_t ops_coarse = 0;
};

struct ChainResult {
  std::vector<ObservableRow> rows;
  AcceptanceStats stats;
  MicroConfig final_state;
};

// Called with the step number and σ every `every` steps after burn-in.
struct SnapshotHook {
  std::uint64_t every = 0;
  std::function<void(std::uint64_t, const MicroConfig&)> fn;
};

// Runs burn_in steps, resets the counters, then `iterations` steps with a
// row every stride. `h_label` is written to the h column as given.
ChainResult run_chain(const Sampler& sampler, MicroConfig initial, double h_label = 0.0,
                      const SnapshotHook& hook = {});

void write_observable_header(std::ostream& out);
void write_observable_row(std::ostream& out, const ObservableRow& row);

}  // namespace mlcg
