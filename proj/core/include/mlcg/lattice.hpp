#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "mlcg/rng.hpp"

namespace mlcg {

using Site = std::size_t;
using Cell = std::size_t;

// Occupancy per site, values in {0,1}. Row-major site order.
using MicroConfig = std::vector<std::uint8_t>;
// Particle count per coarse cell, values in {0..Q}. Row-major cell order.
using CoarseConfig = std::vector<int>;

// Raised for inconsistent geometry, potential or sampler settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Periodic square lattice of side n in d = 1 or 2 dimensions.
struct LatticeGeometry {
  int dim = 1;
  int side = 2;
  std::size_t sites = 2;

  LatticeGeometry() = default;
  LatticeGeometry(int d, int n);

  // (row, col); row is always 0 in 1D.
  std::array<int, 2> coords(Site x) const {
    if (dim == 1) return {0, static_cast<int>(x)};
    return {static_cast<int>(x / side), static_cast<int>(x % side)};
  }
  int wrap(int a) const {
    a %= side;
    return a < 0 ? a + side : a;
  }
  Site site_at(int row, int col) const {
    if (dim == 1) return static_cast<Site>(wrap(col));
    return static_cast<Site>(wrap(row)) * side + static_cast<Site>(wrap(col));
  }
  // Minimal-image displacement y - x, each component in [-side/2, side/2].
  std::array<int, 2> displacement(Site x, Site y) const;
  long squared_distance(Site x, Site y) const;
  double torus_distance(Site x, Site y) const;

  // Nearest neighbours of x in the order +col, -col, +row, -row.
  std::vector<Site> neighbors(Site x) const;
  int coordination() const { return 2 * dim; }

  bool operator==(const LatticeGeometry&) const = default;
};

// Partition of the fine lattice into M = (n/q)^d cells of Q = q^d sites.
struct CoarseGeometry {
  int q = 1;
  std::size_t cell_size = 1;  // Q
  std::size_t cells = 1;      // M
  LatticeGeometry fine;
  LatticeGeometry coarse;
  std::vector<Cell> cell_of;
  std::vector<std::vector<Site>> members;  // row-major inside each cell
};

struct Geometry {
  LatticeGeometry lattice;
  CoarseGeometry coarse;
};

Geometry build_geometry(int d, int n, int q);

double torus_distance(const LatticeGeometry& geom, Site x, Site y);

// Offsets -w..w along each axis, clamped to the distinct residues of the
// torus when 2w+1 exceeds the side. Entries are visited row-major, so a
// stencil of size s^d costs exactly s^d neighbour visits.
struct Stencil {
  int dim = 1;
  std::vector<int> axis_offsets;

  Stencil() = default;
  Stencil(const LatticeGeometry& geom, int half_width);

  std::size_t width() const { return axis_offsets.size(); }
  std::size_t size() const { return dim == 1 ? width() : width() * width(); }
  bool covers_torus(const LatticeGeometry& geom) const {
    return static_cast<int>(width()) == geom.side;
  }
};

// Calls f(entry, y) for every stencil entry around x, including x itself.
template <class F>
inline void for_each_in_stencil(const LatticeGeometry& geom, const Stencil& st, Site x, F&& f) {
  const auto [row, col] = geom.coords(x);
  std::size_t entry = 0;
  if (geom.dim == 1) {
    for (int a : st.axis_offsets) f(entry++, static_cast<Site>(geom.wrap(col + a)));
    return;
  }
  const auto n = static_cast<Site>(geom.side);
  for (int a : st.axis_offsets) {
    const Site base = static_cast<Site>(geom.wrap(row + a)) * n;
    for (int b : st.axis_offsets) f(entry++, base + static_cast<Site>(geom.wrap(col + b)));
  }
}

CoarseConfig project(const CoarseGeometry& cg, const MicroConfig& sigma);

MicroConfig spin_flip(const MicroConfig& sigma, Site x);
MicroConfig spin_exchange(const MicroConfig& sigma, Site x, Site y);

// Uniform placement of eta(k) particles inside every cell.
MicroConfig reconstruct_uniform(const CoarseGeometry& cg, const CoarseConfig& eta, Rng& rng);

// Random configuration with exactly round(c0 * N) particles.
MicroConfig random_config_with_coverage(const LatticeGeometry& geom, double c0, Rng& rng);
MicroConfig random_config(const LatticeGeometry& geom, Rng& rng);

inline constexpr int kMaxEnumerationSites = 20;

// All 2^N configurations; configuration i has sigma(x) = bit x of i.
std::vector<MicroConfig> enumerate_configs(const LatticeGeometry& geom);
std::uint64_t config_index(const MicroConfig& sigma);
MicroConfig config_from_index(std::uint64_t index, std::size_t sites);

// Coarse states in mixed radix (Q+1), cell 0 least significant.
std::uint64_t coarse_index(const CoarseConfig& eta, std::size_t cell_size);
CoarseConfig coarse_from_index(std::uint64_t index, std::size_t cells, std::size_t cell_size);
std::uint64_t coarse_state_count(std::size_t cells, std::size_t cell_size);

int occupied_count(const MicroConfig& sigma);

// PGM "P2" (maxval 1) for 2D, one line of space-separated values for 1D.
void write_snapshot(std::ostream& out, const LatticeGeometry& geom, const MicroConfig& sigma);

}  // namespace mlcg
