#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "mlcg/lattice.hpp"

namespace mlcg {

class Sampler;

double coverage(const MicroConfig& sigma);

enum class Branch { up, down };

struct CurvePoint {
  double h = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct HysteresisCurve {
  Branch branch = Branch::up;
  std::vector<CurvePoint> points;
};

struct SweepConfig {
  // Ascending field values; the down branch runs them in reverse.
  std::vector<double> schedule;
  std::uint64_t burn_in = 0;  // steps at each field value before sampling
  std::uint64_t samples = 1000;
  std::uint64_t sample_stride = 1;  // steps between samples
  std::uint64_t seed = 0;
  // The applied per-site field is field_sign * h.
  double field_sign = 1.0;
};

// Warm-started sweep: the up branch starts from `initial`, the down branch
// from the last state of the up branch. Standard errors from batch means.
std::pair<HysteresisCurve, HysteresisCurve> hysteresis_sweep(const Sampler& sampler, const SweepConfig& config,
                                                             MicroConfig initial);

// sqrt(Σ_h (c - c_ref)^2); throws std::invalid_argument on different grids.
double l2_error(const HysteresisCurve& curve, const HysteresisCurve& reference);
// Same over both branches of a loop.
double l2_error(const std::pair<HysteresisCurve, HysteresisCurve>& loop,
                const std::pair<HysteresisCurve, HysteresisCurve>& reference);

void write_hysteresis_csv(std::ostream& out, const std::pair<HysteresisCurve, HysteresisCurve>& loop);

enum class Phase { occupied, vacant };

// The phase covering fewer sites (occupied on ties).
Phase minority_phase(const MicroConfig& sigma);

struct PatternStats {
  std::size_t feature_count = 0;
  bool defined = false;  // false when there are no features
  double mean_diameter = 0.0;
  double std_diameter = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<std::size_t> areas;
};

// 4-connected components of `phase` on the torus. Diameter of a feature is
// 2 sqrt(area/π); the interval is a 95% t-interval over features.
PatternStats pattern_stats(const LatticeGeometry& geom, const MicroConfig& sigma, Phase phase);

struct BatchMeans {
  double mean = 0.0;
  double std = 0.0;  // standard deviation of the batch means
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// 95% interval mean ± t(0.975, b-1) std / sqrt(b) over b equal batches;
// trailing samples that do not fill a batch are dropped.
BatchMeans batch_means_ci(const std::vector<double>& samples, std::size_t batches);

}  // namespace mlcg
