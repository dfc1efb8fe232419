#include "mlcg/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace mlcg {

LatticeGeometry::LatticeGeometry(int d, int n) : dim(d), side(n) {
  if (d != 1 && d != 2) throw ConfigError("lattice dimension must be 1 or 2, got " + std::to_string(d));
  if (n < 2) throw ConfigError("lattice side must be at least 2, got " + std::to_string(n));
  sites = d == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
}

std::array<int, 2> LatticeGeometry::displacement(Site x, Site y) const {
  const auto a = coords(x);
  const auto b = coords(y);
  std::array<int, 2> d{};
  for (int i = 0; i < 2; ++i) {
    int v = wrap(b[i] - a[i]);
    if (2 * v > side) v -= side;
    d[i] = v;
  }
  return d;
}

long LatticeGeometry::squared_distance(Site x, Site y) const {
  const auto d = displacement(x, y);
  return static_cast<long>(d[0]) * d[0] + static_cast<long>(d[1]) * d[1];
}

double LatticeGeometry::torus_distance(Site x, Site y) const {
  return std::sqrt(static_cast<double>(squared_distance(x, y)));
}

std::vector<Site> LatticeGeometry::neighbors(Site x) const {
  const auto [row, col] = coords(x);
  std::vector<Site> out{site_at(row, col + 1), site_at(row, col - 1)};
  if (dim == 2) {
    out.push_back(site_at(row + 1, col));
    out.push_back(site_at(row - 1, col));
  }
  return out;
}

double torus_distance(const LatticeGeometry& geom, Site x, Site y) { return geom.torus_distance(x, y); }

Geometry build_geometry(int d, int n, int q) {
  Geometry g;
  g.lattice = LatticeGeometry(d, n);
  if (q < 1 || n % q != 0) {
    throw ConfigError("coarse side q=" + std::to_string(q) + " must divide lattice side n=" + std::to_string(n));
  }
  CoarseGeometry& cg = g.coarse;
  cg.q = q;
  cg.fine = g.lattice;
  const int m = n / q;
  cg.coarse.dim = d;
  cg.coarse.side = m;
  cg.coarse.sites = d == 1 ? static_cast<std::size_t>(m) : static_cast<std::size_t>(m) * m;
  cg.cells = cg.coarse.sites;
  cg.cell_size = d == 1 ? static_cast<std::size_t>(q) : static_cast<std::size_t>(q) * q;
  cg.cell_of.resize(g.lattice.sites);
  cg.members.assign(cg.cells, {});
  for (Site x = 0; x < g.lattice.sites; ++x) {
    const auto [row, col] = g.lattice.coords(x);
    const Cell k = d == 1 ? static_cast<Cell>(col / q)
                          : static_cast<Cell>(row / q) * m + static_cast<Cell>(col / q);
    cg.cell_of[x] = k;
    cg.members[k].push_back(x);
  }
  return g;
}

Stencil::Stencil(const LatticeGeometry& geom, int half_width) : dim(geom.dim) {
  if (half_width < 0) half_width = 0;
  if (2 * half_width + 1 >= geom.side) {
    const int lo = -((geom.side - 1) / 2);
    for (int a = lo; a < lo + geom.side; ++a) axis_offsets.push_back(a);
  } else {
    for (int a = -half_width; a <= half_width; ++a) axis_offsets.push_back(a);
  }
}

CoarseConfig project(const CoarseGeometry& cg, const MicroConfig& sigma) {
  CoarseConfig eta(cg.cells, 0);
  for (Site x = 0; x < sigma.size(); ++x) eta[cg.cell_of[x]] += sigma[x];
  return eta;
}

MicroConfig spin_flip(const MicroConfig& sigma, Site x) {
  MicroConfig out = sigma;
  out[x] = static_cast<std::uint8_t>(1 - out[x]);
  return out;
}

MicroConfig spin_exchange(const MicroConfig& sigma, Site x, Site y) {
  if (x == y) throw std::invalid_argument("spin_exchange requires two distinct sites");
  MicroConfig out = sigma;
  std::swap(out[x], out[y]);
  return out;
}

MicroConfig reconstruct_uniform(const CoarseGeometry& cg, const CoarseConfig& eta, Rng& rng) {
  MicroConfig sigma(cg.fine.sites, 0);
  std::vector<Site> pool;
  for (Cell k = 0; k < cg.cells; ++k) {
    pool = cg.members[k];
    const auto count = static_cast<std::size_t>(eta[k]);
    // Partial Fisher-Yates: the first eta(k) entries form a uniform subset.
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      sigma[pool[i]] = 1;
    }
  }
  return sigma;
}

MicroConfig random_config_with_coverage(const LatticeGeometry& geom, double c0, Rng& rng) {
  const auto particles = static_cast<std::size_t>(std::llround(c0 * static_cast<double>(geom.sites)));
  std::vector<Site> pool(geom.sites);
  std::iota(pool.begin(), pool.end(), Site{0});
  MicroConfig sigma(geom.sites, 0);
  for (std::size_t i = 0; i < particles; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    sigma[pool[i]] = 1;
  }
  return sigma;
}

MicroConfig random_config(const LatticeGeometry& geom, Rng& rng) {
  MicroConfig sigma(geom.sites, 0);
  for (auto& s : sigma) s = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  return sigma;
}

std::vector<MicroConfig> enumerate_configs(const LatticeGeometry& geom) {
  if (geom.sites > static_cast<std::size_t>(kMaxEnumerationSites)) {
    throw std::length_error("refusing to enumerate 2^" + std::to_string(geom.sites) + " configurations (limit N <= " +
                            std::to_string(kMaxEnumerationSites) + ")");
  }
  const std::uint64_t count = std::uint64_t{1} << geom.sites;
  std::vector<MicroConfig> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(config_from_index(i, geom.sites));
  return out;
}

std::uint64_t config_index(const MicroConfig& sigma) {
  std::uint64_t index = 0;
  for (std::size_t x = 0; x < sigma.size(); ++x) index |= static_cast<std::uint64_t>(sigma[x]) << x;
  return index;
}

MicroConfig config_from_index(std::uint64_t index, std::size_t sites) {
  MicroConfig sigma(sites);
  for (std::size_t x = 0; x < sites; ++x) sigma[x] = static_cast<std::uint8_t>((index >> x) & 1U);
  return sigma;
}

std::uint64_t coarse_index(const CoarseConfig& eta, std::size_t cell_size) {
  std::uint64_t index = 0;
  for (std::size_t k = eta.size(); k-- > 0;) index = index * (cell_size + 1) + static_cast<std::uint64_t>(eta[k]);
  return index;
}

CoarseConfig coarse_from_index(std::uint64_t index, std::size_t cells, std::size_t cell_size) {
  CoarseConfig eta(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    eta[k] = static_cast<int>(index % (cell_size + 1));
    index /= cell_size + 1;
  }
  return eta;
}

std::uint64_t coarse_state_count(std::size_t cells, std::size_t cell_size) {
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < cells; ++k) count *= cell_size + 1;
  return count;
}

int occupied_count(const MicroConfig& sigma) {
  return std::accumulate(sigma.begin(), sigma.end(), 0);
}

void write_snapshot(std::ostream& out, const LatticeGeometry& geom, const MicroConfig& sigma) {
  if (geom.dim == 1) {
    for (Site x = 0; x < sigma.size(); ++x) out << (x ? " " : "") << static_cast<int>(sigma[x]);
    out << '\n';
    return;
  }
  out << "P2\n" << geom.side << ' ' << geom.side << "\n1\n";
  for (int r = 0; r < geom.side; ++r) {
    for (int c = 0; c < geom.side; ++c) {
      out << (c ? " " : "") << static_cast<int>(sigma[geom.site_at(r, c)]);
    }
    out << '\n';
  }
}

}  // namespace mlcg
