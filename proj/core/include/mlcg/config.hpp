#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlcg/samplers.hpp"

namespace mlcg {

struct LatticeSection {
  int d = 1;
  int n = 8;
  int q = 1;

  bool operator==(const LatticeSection&) const = default;
};

// kind: nearest_neighbor (K), curie_weiss (J), benchmark (K short, J
// mean-field long, S = 1), kac (J0), smooth_kac (J0, range),
// morse_gaussian (J0, r_a, r_r, chi).
struct PotentialSection {
  std::string kind = "nearest_neighbor";
  double K = 1.0;
  double J = 0.0;
  double J0 = 1.0;
  double range = 8.0;
  double r_a = 4.47;
  double r_r = 10.0;
  double chi = 0.1;
  std::optional<double> cutoff;  // explicit L; otherwise from cutoff_tol
  double cutoff_tol = 1e-6;
  std::optional<double> S;
  std::optional<double> L_c;

  bool operator==(const PotentialSection&) const = default;
};

struct EnsembleSection {
  Ensemble kind = Ensemble::canonical;
  double beta = 1.0;
  // +1 uses H_N + h Σσ, -1 uses H_N - h Σσ.
  double field_sign = 1.0;
  double h = 0.0;
  std::vector<double> h_schedule;  // empty: single run at h
  double c0 = 0.5;

  bool operator==(const EnsembleSection&) const = default;
};

struct SamplerSection {
  SamplerConfig chain;
  std::uint64_t samples = 1000;      // per sweep point
  std::uint64_t sample_stride = 0;   // 0: one sweep (N steps)
  std::uint64_t replicas = 1;

  bool operator==(const SamplerSection&) const = default;
};

struct OutputSection {
  std::string dir = "out";
  std::string csv = "observables.csv";
  std::uint64_t snapshot_stride = 0;  // 0: final snapshot only
  std::string format = "csv";

  bool operator==(const OutputSection&) const = default;
};

// Instance matrix of `mlcg verify`.
struct VerifySection {
  std::vector<int> sizes{4, 6, 8};
  std::vector<int> q{1, 2};
  std::vector<double> beta{0.2, 1.0};
  std::vector<std::string> potentials{"benchmark", "smooth_kac"};

  bool operator==(const VerifySection&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  LatticeSection lattice;
  PotentialSection potential;
  EnsembleSection ensemble;
  SamplerSection sampler;
  OutputSection output;
  VerifySection verify;

  bool operator==(const ExperimentConfig&) const = default;
};

// YAML text with the sections above. Unknown keys, type mismatches and
// inconsistent values raise ConfigError carrying "line N" and the key.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);
// FNV-1a over the serialized form.
std::uint64_t config_hash(const ExperimentConfig& config);

std::vector<std::string> preset_names();
// Throws ConfigError for an unknown name.
std::string preset_text(const std::string& name);

}  // namespace mlcg
