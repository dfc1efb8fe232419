#include "mlcg/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <stdexcept>

namespace mlcg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDistanceEps = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Distinct squared minimal-image distances on the torus, ascending.
std::set<long> lattice_squared_distances(const LatticeGeometry& geom) {
  std::set<long> out;
  for (Site y = 1; y < geom.sites; ++y) out.insert(geom.squared_distance(0, y));
  return out;
}

}  // namespace

PairPotential::PairPotential(Kind kind, double cutoff) : kind_(std::move(kind)), cutoff_(cutoff) {
  if (!(cutoff >= 0.0)) throw ConfigError("potential cutoff must be nonnegative");
}

PairPotential PairPotential::nearest_neighbor(double K) { return {NearestNeighbor{K}, 1.0}; }

PairPotential PairPotential::curie_weiss(double J, const LatticeGeometry& geom) {
  return {CurieWeiss{J, geom.sites}, kInf};
}

PairPotential PairPotential::kac_algebraic(double v, const LatticeGeometry& geom) {
  return {KacAlgebraic{v, geom.sites}, kInf};
}

PairPotential PairPotential::morse_gaussian(double J0, double r_a, double r_r, double chi, double cutoff) {
  if (r_a <= 0.0 || r_r <= 0.0) throw ConfigError("morse_gaussian length scales must be positive");
  return {MorseGaussian{J0, r_a, r_r, chi}, cutoff};
}

PairPotential PairPotential::tabulated(std::map<long, double> by_squared_distance) {
  double cutoff = 0.0;
  for (const auto& [r2, value] : by_squared_distance) {
    if (r2 <= 0) throw ConfigError("tabulated potential keys must be positive squared distances");
    if (value != 0.0) cutoff = std::max(cutoff, std::sqrt(static_cast<double>(r2)));
  }
  return {Tabulated{std::move(by_squared_distance)}, cutoff};
}

double PairPotential::raw(double r) const {
  return std::visit(
      Overloaded{
          [&](const NearestNeighbor& p) { return std::abs(r - 1.0) < kDistanceEps ? p.K : 0.0; },
          [&](const CurieWeiss& p) { return p.J / static_cast<double>(p.sites); },
          [&](const KacAlgebraic& p) {
            const double n = static_cast<double>(p.sites);
            return p.v / n * std::pow(r / n, -1.5);
          },
          [&](const MorseGaussian& p) {
            const double a = r / p.r_a;
            const double b = r / p.r_r;
            return p.J0 * (std::exp(-a * a) - p.chi * std::exp(-b * b));
          },
          [&](const Tabulated& p) {
            const double r2 = r * r;
            const long key = std::lround(r2);
            if (std::abs(r2 - static_cast<double>(key)) > 1e-6) return 0.0;
            const auto it = p.by_squared_distance.find(key);
            return it == p.by_squared_distance.end() ? 0.0 : it->second;
          },
      },
      kind_);
}

double PairPotential::eval(double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("pair potential evaluated at r <= 0 (self-interaction is excluded)");
  if (r <= inner_ + kDistanceEps || r > cutoff_ + kDistanceEps) return 0.0;
  return raw(r);
}

std::string PairPotential::name() const {
  return std::visit(Overloaded{
                        [](const NearestNeighbor&) { return std::string("nearest_neighbor"); },
                        [](const CurieWeiss&) { return std::string("curie_weiss"); },
                        [](const KacAlgebraic&) { return std::string("kac_algebraic"); },
                        [](const MorseGaussian&) { return std::string("morse_gaussian"); },
                        [](const Tabulated&) { return std::string("tabulated"); },
                    },
                    kind_);
}

PairPotential PairPotential::with_cutoff(double cutoff) const { return windowed(inner_, cutoff); }

PairPotential PairPotential::windowed(double inner, double cutoff) const {
  PairPotential out = *this;
  out.inner_ = std::max(0.0, inner);
  out.cutoff_ = std::max(0.0, cutoff);
  return out;
}

SplitPotential split(const PairPotential& pot, double range) {
  if (range < 1.0) throw ConfigError("split range S must be at least 1");
  const double outer = pot.cutoff();
  SplitPotential sp{pot.windowed(pot.inner(), std::min(range, outer)), pot.windowed(std::max(range, pot.inner()), outer),
                    range};
  return sp;
}

double normalize_kac(double J0, const LatticeGeometry& geom) {
  if (geom.sites < 4) throw ConfigError("Kac normalization needs at least 4 sites");
  const double n = static_cast<double>(geom.sites);
  double mass = 0.0;
  for (Site y = 1; y < geom.sites; ++y) mass += std::pow(geom.torus_distance(0, y) / n, -1.5) / n;
  return J0 / mass;
}

PairPotential make_kac(double J0, const LatticeGeometry& geom) {
  return PairPotential::kac_algebraic(normalize_kac(J0, geom), geom);
}

PairPotential make_smooth_kac(double J0, double range, const LatticeGeometry& geom) {
  if (range <= 0.0) throw ConfigError("smooth Kac range must be positive");
  const double scale = std::pow(range, -geom.dim);
  auto shape = [&](double r) {
    const double s = r / range;
    return s < 1.0 ? scale * (1.0 - s * s) * (1.0 - s * s) : 0.0;
  };
  double mass = 0.0;
  for (Site y = 1; y < geom.sites; ++y) mass += shape(geom.torus_distance(0, y));
  if (mass == 0.0) throw ConfigError("smooth Kac range shorter than one lattice spacing");
  std::map<long, double> table;
  for (long r2 : lattice_squared_distances(geom)) {
    const double value = J0 / mass * shape(std::sqrt(static_cast<double>(r2)));
    if (value != 0.0) table[r2] = value;
  }
  return PairPotential::tabulated(std::move(table));
}

int cutoff_range(const PairPotential& pot, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("cutoff tolerance must be positive");
  auto as_range = [&](double r_last) {
    if (r_last <= 0.0) return 0;
    return static_cast<int>(std::ceil(std::min(r_last, pot.cutoff()) - 1e-12));
  };
  return std::visit(
      Overloaded{
          [&](const NearestNeighbor& p) { return std::abs(p.K) >= tol && pot.cutoff() >= 1.0 ? 1 : 0; },
          [&](const CurieWeiss&) -> int {
            throw ConfigError("curie_weiss coupling does not decay; its range is the whole lattice");
          },
          [&](const KacAlgebraic& p) {
            const double n = static_cast<double>(p.sites);
            const double r_t = n * std::pow(std::abs(p.v) / (n * tol), 2.0 / 3.0);
            return as_range(r_t);
          },
          [&](const MorseGaussian& p) {
            // |J| is a difference of Gaussians; beyond this radius both terms
            // are below tol on their own.
            const double amp = std::abs(p.J0) * (1.0 + std::abs(p.chi));
            const double bound =
                std::max(p.r_a, p.r_r) * std::sqrt(std::max(0.0, std::log(std::max(amp, tol) / tol)) + 1.0) + 1.0;
            const double step = 1e-3;
            double last = 0.0;
            for (double r = step; r <= bound; r += step) {
              if (std::abs(pot.eval(r)) >= tol) last = r;
            }
            if (last == 0.0) return 0;
            double lo = last;
            double hi = last + step;
            for (int it = 0; it < 60; ++it) {
              const double mid = 0.5 * (lo + hi);
              (std::abs(pot.eval(mid)) >= tol ? lo : hi) = mid;
            }
            return as_range(hi);
          },
          [&](const Tabulated& p) {
            double last = 0.0;
            for (const auto& [r2, value] : p.by_squared_distance) {
              const double r = std::sqrt(static_cast<double>(r2));
              if (std::abs(pot.eval(r)) >= tol) last = std::max(last, r);
            }
            return as_range(last);
          },
      },
      pot.kind());
}

PairPotential combine(double a, const PairPotential& p, double b, const PairPotential& q,
                      const LatticeGeometry& geom) {
  std::map<long, double> table;
  for (long r2 : lattice_squared_distances(geom)) {
    const double r = std::sqrt(static_cast<double>(r2));
    const double value = a * p.eval(r) + b * q.eval(r);
    if (value != 0.0) table[r2] = value;
  }
  return PairPotential::tabulated(std::move(table));
}

PotentialTable::PotentialTable(const PairPotential& pot, const LatticeGeometry& geom) : geom_(geom) {
  half_width_ = pot.full_range() ? geom.side : static_cast<int>(std::floor(pot.cutoff() + kDistanceEps));
  stencil_ = Stencil(geom, half_width_);
  const int rows = geom.dim == 1 ? 1 : geom.side;
  by_residue_.assign(static_cast<std::size_t>(rows) * geom.side, 0.0);
  for (Site y = 1; y < geom.sites; ++y) {
    by_residue_[y] = pot.eval(geom.torus_distance(0, y));
    if (by_residue_[y] != 0.0) zero_ = false;
  }
  couplings_.reserve(stencil_.size());
  for_each_in_stencil(geom, stencil_, 0, [&](std::size_t, Site y) { couplings_.push_back(by_residue_[y]); });
}

PotentialTable PotentialTable::sum(const PotentialTable& a, const PotentialTable& b) {
  if (!(a.geom_ == b.geom_)) throw ConfigError("adding potential tables of different lattices");
  PotentialTable out;
  out.geom_ = a.geom_;
  out.half_width_ = std::max(a.half_width_, b.half_width_);
  out.stencil_ = a.stencil_.size() >= b.stencil_.size() ? a.stencil_ : b.stencil_;
  out.by_residue_.resize(a.by_residue_.size());
  for (std::size_t i = 0; i < out.by_residue_.size(); ++i) {
    out.by_residue_[i] = a.by_residue_[i] + b.by_residue_[i];
    if (out.by_residue_[i] != 0.0) out.zero_ = false;
  }
  out.couplings_.reserve(out.stencil_.size());
  for_each_in_stencil(out.geom_, out.stencil_, 0,
                      [&](std::size_t, Site y) { out.couplings_.push_back(out.by_residue_[y]); });
  return out;
}

std::size_t PotentialTable::residue(Site x, Site y) const {
  const auto a = geom_.coords(x);
  const auto b = geom_.coords(y);
  const auto dr = static_cast<std::size_t>(geom_.wrap(b[0] - a[0]));
  const auto dc = static_cast<std::size_t>(geom_.wrap(b[1] - a[1]));
  return dr * static_cast<std::size_t>(geom_.side) + dc;
}

double CoarsePotential::between(Cell k, Cell l) const {
  if (k == l) return diag;
  const auto a = coarse_lattice.coords(k);
  const auto b = coarse_lattice.coords(l);
  const auto dr = static_cast<std::size_t>(coarse_lattice.wrap(b[0] - a[0]));
  const auto dc = static_cast<std::size_t>(coarse_lattice.wrap(b[1] - a[1]));
  return by_residue[dr * static_cast<std::size_t>(coarse_lattice.side) + dc];
}

CoarsePotential coarsen(const PotentialTable& table, const CoarseGeometry& cg) {
  if (!(table.geometry() == cg.fine)) throw ConfigError("potential table and coarse geometry disagree");
  CoarsePotential out;
  out.coarse_lattice = cg.coarse;
  const int half = table.half_width() >= cg.fine.side ? cg.coarse.side
                                                       : (table.half_width() + cg.q - 1) / cg.q;
  out.stencil = Stencil(cg.coarse, half);
  const int rows = cg.coarse.dim == 1 ? 1 : cg.coarse.side;
  out.by_residue.assign(static_cast<std::size_t>(rows) * cg.coarse.side, 0.0);

  const double Q = static_cast<double>(cg.cell_size);
  const auto& home = cg.members[0];
  double self = 0.0;
  for (Site x : home) {
    for (Site y : home) {
      if (x != y) self += table.between(x, y);
    }
  }
  out.diag = cg.cell_size > 1 ? self / (Q * (Q - 1.0)) : 0.0;

  for_each_in_stencil(cg.coarse, out.stencil, 0, [&](std::size_t, Cell l) {
    if (l == 0) return;
    double sum = 0.0;
    for (Site x : home) {
      for (Site y : cg.members[l]) sum += table.between(x, y);
    }
    out.by_residue[l] = sum / (Q * Q);
  });
  out.couplings.reserve(out.stencil.size());
  for_each_in_stencil(cg.coarse, out.stencil, 0,
                      [&](std::size_t, Cell l) { out.couplings.push_back(l == 0 ? 0.0 : out.by_residue[l]); });
  return out;
}

CoarsePotential coarsen(const PairPotential& pot, const CoarseGeometry& cg) {
  return coarsen(PotentialTable(pot, cg.fine), cg);
}

CoarsePotential operator+(const CoarsePotential& a, const CoarsePotential& b) {
  if (!(a.coarse_lattice == b.coarse_lattice)) throw ConfigError("adding coarse potentials of different lattices");
  const CoarsePotential& wide = a.stencil.size() >= b.stencil.size() ? a : b;
  CoarsePotential out = wide;
  out.diag = a.diag + b.diag;
  for (std::size_t i = 0; i < out.by_residue.size(); ++i) out.by_residue[i] = a.by_residue[i] + b.by_residue[i];
  out.couplings.clear();
  for_each_in_stencil(out.coarse_lattice, out.stencil, 0,
                      [&](std::size_t, Cell l) { out.couplings.push_back(l == 0 ? 0.0 : out.by_residue[l]); });
  return out;
}

std::vector<double> coarsen_field(const std::vector<double>& field, const CoarseGeometry& cg) {
  std::vector<double> out(cg.cells, 0.0);
  for (Cell k = 0; k < cg.cells; ++k) {
    double sum = 0.0;
    for (Site x : cg.members[k]) sum += field[x];
    out[k] = sum / static_cast<double>(cg.cell_size);
  }
  return out;
}

std::size_t position_in_cell(const CoarseGeometry& cg, Site x) {
  const auto [row, col] = cg.fine.coords(x);
  if (cg.fine.dim == 1) return static_cast<std::size_t>(col % cg.q);
  return static_cast<std::size_t>(row % cg.q) * cg.q + static_cast<std::size_t>(col % cg.q);
}

double CorrectionPotential::max_abs() const {
  double m = 0.0;
  for (const auto& row : by_position) {
    for (double v : row) m = std::max(m, std::abs(v));
  }
  return m;
}

CorrectionPotential correction_potential(const PotentialTable& table, const CoarsePotential& coarse,
                                         const CoarseGeometry& cg, double cutoff) {
  CorrectionPotential out;
  out.cutoff = cutoff;
  out.stencil = Stencil(cg.fine, static_cast<int>(std::floor(cutoff + kDistanceEps)));
  out.by_position.assign(cg.cell_size, {});
  for (Site x : cg.members[0]) {
    auto& row = out.by_position[position_in_cell(cg, x)];
    row.reserve(out.stencil.size());
    for_each_in_stencil(cg.fine, out.stencil, x, [&](std::size_t, Site y) {
      if (y == x || cg.fine.torus_distance(x, y) > cutoff + kDistanceEps) {
        row.push_back(0.0);
        return;
      }
      row.push_back(table.between(x, y) - coarse.between(cg.cell_of[x], cg.cell_of[y]));
    });
  }
  return out;
}

void write_potential_csv(std::ostream& out, const PairPotential& pot, const LatticeGeometry& geom) {
  out << "r,J\n" << std::setprecision(12);
  for (long r2 : lattice_squared_distances(geom)) {
    const double r = std::sqrt(static_cast<double>(r2));
    if (r > pot.cutoff() + kDistanceEps) break;
    out << r << ',' << pot.eval(r) << '\n';
  }
}

void write_correction_csv(std::ostream& out, const PotentialTable& table, const CoarsePotential& coarse,
                          const CoarseGeometry& cg, int max_r) {
  out << "r,J,J_bar,J_c\n" << std::setprecision(12);
  const Site x = cg.members[0].front();
  for (int r = 1; r <= std::min(max_r, cg.fine.side / 2); ++r) {
    const Site y = cg.fine.site_at(0, r);
    const double j = table.between(x, y);
    const double jbar = coarse.between(cg.cell_of[x], cg.cell_of[y]);
    out << r << ',' << j << ',' << jbar << ',' << j - jbar << '\n';
  }
}

}  // namespace mlcg
