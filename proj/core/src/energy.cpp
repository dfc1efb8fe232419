#include "mlcg/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace mlcg {

namespace {

void check_config(const LatticeGeometry& geom, const MicroConfig& sigma) {
  if (sigma.size() != geom.sites) throw std::invalid_argument("configuration size does not match the lattice");
}

double local_field(const PotentialTable& table, const MicroConfig& sigma, Site x) {
  const auto& J = table.couplings();
  double s = 0.0;
  for_each_in_stencil(table.geometry(), table.stencil(), x, [&](std::size_t e, Site y) { s += J[e] * sigma[y]; });
  return s;
}

double pair_energy(const PotentialTable& table, const MicroConfig& sigma) {
  const std::size_t n = sigma.size();
  std::vector<double> per_site(n, 0.0);
  for (Site x = 0; x < n; ++x) {
    if (sigma[x]) per_site[x] = -0.5 * local_field(table, sigma, x);
  }
  return pairwise_sum(per_site.data(), n);
}

}  // namespace

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

Hamiltonian::Hamiltonian(const LatticeGeometry& geom, const PairPotential& pot, std::vector<double> field,
                         double beta)
    : geom_(geom), field_(std::move(field)), beta_(beta) {
  if (field_.size() != geom.sites) throw ConfigError("field size does not match the lattice");
  long_ = std::make_shared<const PotentialTable>(pot, geom);
  full_ = long_;
}

Hamiltonian::Hamiltonian(const LatticeGeometry& geom, const SplitPotential& pot, std::vector<double> field,
                         double beta)
    : geom_(geom), split_range_(pot.range), field_(std::move(field)), beta_(beta) {
  if (field_.size() != geom.sites) throw ConfigError("field size does not match the lattice");
  short_ = std::make_shared<const PotentialTable>(pot.short_part, geom);
  long_ = std::make_shared<const PotentialTable>(pot.long_part, geom);
  full_ = std::make_shared<const PotentialTable>(PotentialTable::sum(*short_, *long_));
}

Hamiltonian Hamiltonian::with_field(std::vector<double> field) const {
  if (field.size() != geom_.sites) throw ConfigError("field size does not match the lattice");
  Hamiltonian out = *this;
  out.field_ = std::move(field);
  return out;
}

Hamiltonian Hamiltonian::with_beta(double beta) const {
  Hamiltonian out = *this;
  out.beta_ = beta;
  return out;
}

double Hamiltonian::energy(const MicroConfig& sigma) const {
  check_config(geom_, sigma);
  const std::size_t n = sigma.size();
  std::vector<double> per_site(n, 0.0);
  for (Site x = 0; x < n; ++x) {
    if (sigma[x]) per_site[x] = -0.5 * local_field(*full_, sigma, x) + field_[x];
  }
  return pairwise_sum(per_site.data(), n);
}

EnergyParts Hamiltonian::energy_parts(const MicroConfig& sigma) const {
  check_config(geom_, sigma);
  EnergyParts out;
  out.long_range = pair_energy(*long_, sigma);
  if (short_) out.short_range = pair_energy(*short_, sigma);
  std::vector<double> per_site(sigma.size(), 0.0);
  for (Site x = 0; x < sigma.size(); ++x) per_site[x] = sigma[x] ? field_[x] : 0.0;
  out.field = pairwise_sum(per_site.data(), per_site.size());
  return out;
}

EnergyParts Hamiltonian::delta_flip(const MicroConfig& sigma, Site x, OpCounts* ops) const {
  const double d = 1.0 - 2.0 * sigma[x];
  EnergyParts out;
  // The centre entry of every table is zero, so σ(x) itself drops out.
  out.long_range = -d * local_field(*long_, sigma, x);
  if (ops) ops->long_range += long_->stencil().size();
  if (short_) {
    out.short_range = -d * local_field(*short_, sigma, x);
    if (ops) ops->short_range += short_->stencil().size();
  }
  out.field = d * field_[x];
  return out;
}

double Hamiltonian::delta_flip_short(const MicroConfig& sigma, Site x, OpCounts* ops) const {
  if (!short_) return 0.0;
  if (ops) ops->short_range += short_->stencil().size();
  return -(1.0 - 2.0 * sigma[x]) * local_field(*short_, sigma, x);
}

EnergyParts Hamiltonian::delta_exchange(const MicroConfig& sigma, Site x, Site y, OpCounts* ops) const {
  if (x == y) throw std::invalid_argument("delta_exchange requires two distinct sites");
  if (sigma[x] == sigma[y]) return {};
  // Two flips; the second sees the first through the single bond J(x-y).
  const EnergyParts a = delta_flip(sigma, x, ops);
  const EnergyParts b = delta_flip(sigma, y, ops);
  EnergyParts out;
  out.long_range = a.long_range + b.long_range + long_->between(x, y);
  if (short_) out.short_range = a.short_range + b.short_range + short_->between(x, y);
  out.field = a.field + b.field;
  return out;
}

double energy_micro(const Hamiltonian& H, const MicroConfig& sigma) { return H.energy(sigma); }

EnergyParts energy_split(const Hamiltonian& H, const MicroConfig& sigma) {
  if (!H.is_split()) throw ConfigError("energy_split requires a split potential");
  return H.energy_parts(sigma);
}

double delta_flip(const Hamiltonian& H, const MicroConfig& sigma, Site x, OpCounts* ops) {
  return H.delta_flip(sigma, x, ops).total();
}

double delta_exchange(const Hamiltonian& H, const MicroConfig& sigma, Site x, Site y, OpCounts* ops) {
  return H.delta_exchange(sigma, x, y, ops).total();
}

CoarseHamiltonian::CoarseHamiltonian(const CoarseGeometry& cg, CoarsePotential pot, std::vector<double> hbar,
                                     double beta)
    : cg_(std::make_shared<const CoarseGeometry>(cg)),
      pot_(std::make_shared<const CoarsePotential>(std::move(pot))),
      hbar_(std::move(hbar)),
      beta_(beta) {
  if (hbar_.size() != cg.cells) throw ConfigError("coarse field size does not match the coarse lattice");
  if (!(pot_->coarse_lattice == cg.coarse)) throw ConfigError("coarse potential built for another coarse lattice");
}

CoarseHamiltonian CoarseHamiltonian::compress(const Hamiltonian& H, const CoarseGeometry& cg, Compression what) {
  const PotentialTable& table = what == Compression::full ? H.full_table() : H.long_table();
  return {cg, coarsen(table, cg), coarsen_field(H.field(), cg), H.beta()};
}

CoarseHamiltonian CoarseHamiltonian::with_field(std::vector<double> hbar) const {
  if (hbar.size() != cg_->cells) throw ConfigError("coarse field size does not match the coarse lattice");
  CoarseHamiltonian out = *this;
  out.hbar_ = std::move(hbar);
  return out;
}

double CoarseHamiltonian::neighbour_sum(const CoarseConfig& eta, Cell k) const {
  const auto& J = pot_->couplings;
  double s = 0.0;
  for_each_in_stencil(cg_->coarse, pot_->stencil, k, [&](std::size_t e, Cell l) { s += J[e] * eta[l]; });
  return s;
}

double CoarseHamiltonian::energy(const CoarseConfig& eta) const {
  if (eta.size() != cg_->cells) throw std::invalid_argument("coarse configuration size does not match");
  const double diag = pot_->diag;
  std::vector<double> per_cell(eta.size(), 0.0);
  for (Cell k = 0; k < eta.size(); ++k) {
    if (eta[k] == 0) continue;
    const double s = neighbour_sum(eta, k) + diag * (eta[k] - 1);
    per_cell[k] = eta[k] * (-0.5 * s) + eta[k] * hbar_[k];
  }
  return pairwise_sum(per_cell.data(), per_cell.size());
}

double CoarseHamiltonian::delta(const CoarseConfig& eta, Cell k, int dir, OpCounts* ops) const {
  if (dir != 1 && dir != -1) throw std::invalid_argument("coarse move direction must be +1 or -1");
  const int next = eta[k] + dir;
  if (next < 0 || next > static_cast<int>(cg_->cell_size)) {
    throw std::invalid_argument("coarse move leaves the range 0..Q");
  }
  if (ops) ops->coarse += pot_->stencil.size();
  const double s = neighbour_sum(eta, k);
  return -dir * s - 0.5 * pot_->diag * dir * (2.0 * eta[k] + dir - 1.0) + dir * hbar_[k];
}

double CoarseHamiltonian::delta_transfer(const CoarseConfig& eta, Cell from, Cell to, OpCounts* ops) const {
  if (from == to) throw std::invalid_argument("coarse transfer requires two distinct cells");
  return delta(eta, from, -1, ops) + delta(eta, to, +1, ops) + pot_->between(from, to);
}

double energy_coarse(const CoarseHamiltonian& Hbar, const CoarseConfig& eta) { return Hbar.energy(eta); }

double delta_coarse(const CoarseHamiltonian& Hbar, const CoarseConfig& eta, Cell k, int dir, OpCounts* ops) {
  return Hbar.delta(eta, k, dir, ops);
}

double delta_correction(const Hamiltonian& H, const CoarseHamiltonian& Hbar, const MicroConfig& sigma,
                        const CoarseConfig& eta, Site x) {
  const Cell k = Hbar.geometry().cell_of[x];
  const int dir = sigma[x] ? -1 : 1;
  return H.delta_flip(sigma, x).total() - Hbar.delta(eta, k, dir);
}

double delta_correction(const Hamiltonian& H, const CoarseHamiltonian& Hbar, const CorrectionPotential& jc,
                        const MicroConfig& sigma, Site x) {
  const CoarseGeometry& cg = Hbar.geometry();
  const auto& row = jc.by_position[position_in_cell(cg, x)];
  double s = 0.0;
  for_each_in_stencil(cg.fine, jc.stencil, x, [&](std::size_t e, Site y) { s += row[e] * sigma[y]; });
  const double d = 1.0 - 2.0 * sigma[x];
  return -d * s + d * (H.field()[x] - Hbar.field()[cg.cell_of[x]]);
}

double compression_epsilon(const PairPotential& pot, int dim, double beta, int q, double range) {
  if (range <= 0.0) throw std::invalid_argument("compression_epsilon needs a positive range");
  const double scale = std::pow(range, dim);
  const double stop = pot.full_range() ? range : std::max(range, pot.cutoff());
  const double step = 1.0 / 64.0;
  double tv = 0.0;
  double prev = scale * pot.eval(1.0);
  for (double r = 1.0 + step; r <= stop + 1.0; r += step) {
    const double v = scale * pot.eval(r);
    tv += std::abs(v - prev);
    prev = v;
  }
  return beta * tv * q / range;
}

}  // namespace mlcg
