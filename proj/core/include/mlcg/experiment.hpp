#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlcg/config.hpp"
#include "mlcg/energy.hpp"
#include "mlcg/kernel_analysis.hpp"
#include "mlcg/lattice.hpp"
#include "mlcg/samplers.hpp"

namespace mlcg {

struct Model {
  Geometry geometry;
  Hamiltonian H;  // per-site field field_sign * ensemble.h
  int cutoff = 0;  // half width of the long (or only) table
  std::optional<SplitPotential> split;
};

// Lattice, potential and Hamiltonian described by a config.
Model build_model(const ExperimentConfig& config);
Sampler build_sampler(const ExperimentConfig& config, const Model& model);
// Starting configuration: fixed coverage c0 for microcanonical runs, the
// phase favoured at the low end of a sweep, otherwise uniform.
MicroConfig initial_state(const ExperimentConfig& config, const LatticeGeometry& lat, std::uint64_t seed, bool sweep);

// Operation counts expected from n, m and the stencil sizes, for the
// canonical chains. `table_formula` is n (2L+1)^d / Q + m (2S+1)^d.
struct OpsPrediction {
  bool available = false;
  OpCounts ops;
  double table_formula = 0.0;
};

struct StencilSizes {
  std::size_t long_range = 0;
  std::size_t short_range = 0;
  std::size_t coarse = 0;
};

StencilSizes stencil_sizes(const Sampler& sampler);
OpsPrediction predict_ops(const Sampler& sampler, const AcceptanceStats& stats);

// Worker count for independent replicas, from MLCG_WORKERS (default 1).
unsigned worker_count();

// Writes the run artifacts under config.output.dir (created if missing):
// the CSV stream, hysteresis.csv for sweeps, PGM snapshots, stats.json and
// manifest.json. Every file is written to a temporary name and renamed.
// Returns a process exit status; diagnostics go to `log`.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

// Exact measures and kernels of one small instance, two-level chain with
// the given strategy against uniform-flip MH.
struct InstanceCheck {
  std::string potential;
  Strategy strategy = Strategy::corrections;
  double detailed_balance = 0.0;
  double stationarity = 0.0;
  double factorization = 0.0;
  double lemma_deviation = 0.0;
  double B_min = 1.0;
  double B_max = 1.0;
  std::size_t class_count[4] = {0, 0, 0, 0};
  GapReport gap;
  std::string gap_error;  // empty when the sandwich holds
};

InstanceCheck check_instance(const Hamiltonian& H, const CoarseGeometry& cg, Strategy strategy,
                             const std::string& potential_name);

// Instances of the verify section: every size, q dividing it, potential and
// β, 1D. Benchmark instances are checked under corrections and splitting,
// smooth Kac under corrections.
std::vector<InstanceCheck> verification_matrix(const ExperimentConfig& config);

// Exact kernel checks over the verify matrix: detailed balance,
// stationarity, the A B factorization and the gap sandwich. Writes
// gap_report.csv. Returns 0 iff every check passes.
int run_verification(const ExperimentConfig& config, std::ostream& log);

// Prints n, m and predicted vs measured operation counts from the
// stats.json of a finished run. Returns 0 iff the counts agree.
int report_ops(const std::string& run_dir, std::ostream& out);

// Writes `content` to `path` via a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace mlcg
