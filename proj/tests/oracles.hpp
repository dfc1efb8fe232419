#pragma once

// Independent reference computations for the tests. Nothing here goes
// through the stencil tables, the coarse tables or the kernel builders.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "mlcg/lattice.hpp"

namespace oracle {

using Coupling = std::function<double(double r)>;

// Plain double loop over all ordered pairs.
inline double energy(const mlcg::LatticeGeometry& lat, const Coupling& J, const std::vector<double>& field,
                     const mlcg::MicroConfig& s) {
  double e = 0.0;
  for (std::size_t x = 0; x < lat.sites; ++x) {
    if (!s[x]) continue;
    e += field[x];
    for (std::size_t y = 0; y < lat.sites; ++y) {
      if (y != x && s[y]) e -= 0.5 * J(lat.torus_distance(x, y));
    }
  }
  return e;
}

// Cell averages computed from the member lists.
inline double coarse_coupling(const mlcg::CoarseGeometry& cg, const Coupling& J, std::size_t k, std::size_t l) {
  double sum = 0.0;
  std::size_t count = 0;
  for (auto x : cg.members[k]) {
    for (auto y : cg.members[l]) {
      if (x == y) continue;
      sum += J(cg.fine.torus_distance(x, y));
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

inline double coarse_energy(const mlcg::CoarseGeometry& cg, const Coupling& J, const std::vector<double>& hbar,
                            const mlcg::CoarseConfig& eta) {
  double e = 0.0;
  for (std::size_t k = 0; k < cg.cells; ++k) {
    e += hbar[k] * eta[k];
    for (std::size_t l = 0; l < cg.cells; ++l) {
      const double jkl = coarse_coupling(cg, J, k, l);
      if (l == k) {
        e -= 0.5 * jkl * eta[k] * (eta[k] - 1);
      } else {
        e -= 0.5 * jkl * eta[k] * eta[l];
      }
    }
  }
  return e;
}

// Gibbs weights exp(-β H)·2^-N over all 2^N states, normalized.
inline std::vector<double> gibbs(const mlcg::LatticeGeometry& lat, const Coupling& J, const std::vector<double>& field,
                                 double beta) {
  const std::size_t n = std::size_t{1} << lat.sites;
  std::vector<double> logw(n);
  double top = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = -beta * energy(lat, J, field, mlcg::config_from_index(i, lat.sites));
    top = std::max(top, logw[i]);
  }
  double z = 0.0;
  for (auto& w : logw) z += (w = std::exp(w - top));
  for (auto& w : logw) w /= z;
  return logw;
}

inline double mean_coverage(const std::vector<double>& p, std::size_t sites) {
  double c = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c += p[i] * mlcg::occupied_count(mlcg::config_from_index(i, sites)) / static_cast<double>(sites);
  }
  return c;
}

// Periodic 1D nearest-neighbour lattice gas H = -K Σ σ_i σ_{i+1} + h Σ σ_i:
// <σ_0> = Tr(D T^N) / Tr(T^N) with the symmetric 2x2 transfer matrix.
inline double transfer_matrix_coverage(int n, double K, double h, double beta) {
  Eigen::Matrix2d T;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) T(a, b) = std::exp(beta * K * a * b - 0.5 * beta * h * (a + b));
  }
  Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
  for (int i = 0; i < n; ++i) P = P * T;
  return P(1, 1) / P.trace();
}

}  // namespace oracle
