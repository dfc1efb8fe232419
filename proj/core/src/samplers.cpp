#include "mlcg/samplers.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "mlcg/observables.hpp"

namespace mlcg {

namespace {

constexpr std::uint64_t kMaxRetries = 1U << 20;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// The `rank`-th site of C_k (row-major) whose value is `value`.
Site nth_site_with_value(const CoarseGeometry& cg, const MicroConfig& sigma, Cell k, std::uint8_t value,
                         std::uint64_t rank) {
  for (Site x : cg.members[k]) {
    if (sigma[x] == value && rank-- == 0) return x;
  }
  throw std::logic_error("cell occupancy does not match the block spin");
}

void apply_flip(ChainState& s, const CoarseGeometry& cg, Site x) {
  s.eta[cg.cell_of[x]] += s.sigma[x] ? -1 : 1;
  s.sigma[x] = static_cast<std::uint8_t>(1 - s.sigma[x]);
}

void apply_exchange(ChainState& s, const CoarseGeometry& cg, Site x, Site y) {
  apply_flip(s, cg, x);
  apply_flip(s, cg, y);
}

// Uniformly chosen ordered pair of adjacent cells, or nullopt when the
// coarse lattice is too small for the chosen direction to leave the cell.
std::optional<std::pair<Cell, Cell>> adjacent_cells(const CoarseGeometry& cg, Rng& rng) {
  const Cell k = rng.below(cg.cells);
  const auto nb = cg.coarse.neighbors(k);
  const Cell l = nb[rng.below(nb.size())];
  if (l == k) return std::nullopt;
  return std::make_pair(k, l);
}

// One uniform site of C_k and one of C_l; a proposal only if the first is
// occupied and the second vacant, which happens w.p. η(k)(Q-η(l))/Q^2.
std::optional<std::pair<Site, Site>> transfer_sites(const CoarseGeometry& cg, const MicroConfig& sigma, Cell k,
                                                    Cell l, Rng& rng) {
  const Site x = cg.members[k][rng.below(cg.cell_size)];
  const Site y = cg.members[l][rng.below(cg.cell_size)];
  if (sigma[x] != 1 || sigma[y] != 0) return std::nullopt;
  return std::make_pair(x, y);
}

double short_exchange_delta(const Hamiltonian& H, const MicroConfig& sigma, Site x, Site y, OpCounts* ops) {
  const PotentialTable* K = H.short_table();
  if (!K) return 0.0;
  return H.delta_flip_short(sigma, x, ops) + H.delta_flip_short(sigma, y, ops) + K->between(x, y);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::mh: return "mh";
    case Method::cgmc: return "cgmc";
    case Method::two_level: return "two_level";
  }
  return "?";
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::corrections: return "corrections";
    case Strategy::splitting: return "splitting";
    case Strategy::approximate_cg: return "approximate_cg";
  }
  return "?";
}

std::string to_string(Ensemble e) { return e == Ensemble::canonical ? "canonical" : "microcanonical"; }

std::string to_string(RejectionPolicy p) { return p == RejectionPolicy::stay ? "stay" : "retry"; }

Method parse_method(const std::string& text) {
  const auto t = lower(text);
  if (t == "mh") return Method::mh;
  if (t == "cgmc") return Method::cgmc;
  if (t == "two_level") return Method::two_level;
  throw ConfigError("unknown method '" + text + "' (expected mh, cgmc, two_level)");
}

Strategy parse_strategy(const std::string& text) {
  const auto t = lower(text);
  if (t == "corrections") return Strategy::corrections;
  if (t == "splitting") return Strategy::splitting;
  if (t == "approximate_cg") return Strategy::approximate_cg;
  throw ConfigError("unknown strategy '" + text + "' (expected corrections, splitting, approximate_cg)");
}

Ensemble parse_ensemble(const std::string& text) {
  const auto t = lower(text);
  if (t == "canonical") return Ensemble::canonical;
  if (t == "microcanonical") return Ensemble::microcanonical;
  throw ConfigError("unknown ensemble '" + text + "' (expected canonical, microcanonical)");
}

RejectionPolicy parse_policy(const std::string& text) {
  const auto t = lower(text);
  if (t == "stay") return RejectionPolicy::stay;
  if (t == "retry") return RejectionPolicy::retry;
  throw ConfigError("unknown rejection policy '" + text + "' (expected stay, retry)");
}

AcceptanceStats& AcceptanceStats::operator+=(const AcceptanceStats& o) {
  n_coarse_proposed += o.n_coarse_proposed;
  m_coarse_accepted += o.m_coarse_accepted;
  n_fine_proposed += o.n_fine_proposed;
  n_fine_accepted += o.n_fine_accepted;
  ops.long_range += o.ops.long_range;
  ops.short_range += o.ops.short_range;
  ops.coarse += o.ops.coarse;
  return *this;
}

AcceptanceRates average_acceptance(const AcceptanceStats& s) {
  if (s.n_coarse_proposed == 0) throw std::domain_error("acceptance rate undefined: no coarse proposals");
  if (s.n_fine_proposed == 0) throw std::domain_error("acceptance rate undefined: no fine proposals");
  AcceptanceRates r;
  r.coarse = static_cast<double>(s.m_coarse_accepted) / static_cast<double>(s.n_coarse_proposed);
  r.fine = static_cast<double>(s.n_fine_accepted) / static_cast<double>(s.n_fine_proposed);
  r.total = static_cast<double>(s.n_fine_accepted) / static_cast<double>(s.n_coarse_proposed);
  return r;
}

ChainState::ChainState(const CoarseGeometry& cg, MicroConfig initial, Rng stream)
    : sigma(std::move(initial)), eta(project(cg, sigma)), rng(stream) {
  if (sigma.size() != cg.fine.sites) throw std::invalid_argument("initial configuration does not match the lattice");
}

Compression compression_for(Strategy s) {
  return s == Strategy::corrections ? Compression::full : Compression::long_only;
}

TwoLevelRule::TwoLevelRule(const Hamiltonian& H, const CoarseHamiltonian& Hbar, Strategy strategy)
    : H_(&H), Hbar_(&Hbar), strategy_(strategy) {
  if (strategy != Strategy::corrections && !H.is_split()) {
    throw ConfigError("strategy " + to_string(strategy) + " needs a split potential (set potential.S)");
  }
  if (!(Hbar.geometry().fine == H.geometry())) throw ConfigError("coarse Hamiltonian built for another lattice");
}

double TwoLevelRule::fine_log_ratio_flip(const MicroConfig& sigma, Site x, double dHbar, OpCounts* ops) const {
  if (strategy_ == Strategy::approximate_cg) return -H_->beta() * H_->delta_flip_short(sigma, x, ops);
  return -H_->beta() * (H_->delta_flip(sigma, x, ops).total() - dHbar);
}

double TwoLevelRule::fine_log_ratio_exchange(const MicroConfig& sigma, Site x, Site y, double dHbar,
                                             OpCounts* ops) const {
  if (strategy_ == Strategy::approximate_cg) return -H_->beta() * short_exchange_delta(*H_, sigma, x, y, ops);
  return -H_->beta() * (H_->delta_exchange(sigma, x, y, ops).total() - dHbar);
}

bool metropolis_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  return rng.uniform() < std::exp(log_ratio);
}

void mh_step(ChainState& s, const Hamiltonian& H, const CoarseGeometry& cg, ProposalKernel kernel) {
  auto& st = s.stats;
  ++st.n_coarse_proposed;
  ++st.m_coarse_accepted;
  ++st.n_fine_proposed;
  const Site x = s.rng.below(cg.fine.sites);
  if (kernel == ProposalKernel::uniform_flip) {
    const double dH = H.delta_flip(s.sigma, x, &st.ops).total();
    if (metropolis_accept(-H.beta() * dH, s.rng)) {
      apply_flip(s, cg, x);
      ++st.n_fine_accepted;
    }
    return;
  }
  if (kernel != ProposalKernel::uniform_exchange) throw ConfigError("mh_step needs uniform_flip or uniform_exchange");
  const auto nb = cg.fine.neighbors(x);
  const Site y = nb[s.rng.below(nb.size())];
  if (s.sigma[x] == s.sigma[y]) {
    ++st.n_fine_accepted;
    return;
  }
  const double dH = H.delta_exchange(s.sigma, x, y, &st.ops).total();
  if (metropolis_accept(-H.beta() * dH, s.rng)) {
    apply_exchange(s, cg, x, y);
    ++st.n_fine_accepted;
  }
}

void cgmc_step(ChainState& s, const CoarseHamiltonian& Hbar, Ensemble ensemble) {
  const CoarseGeometry& cg = Hbar.geometry();
  auto& st = s.stats;
  const double beta = Hbar.beta();
  if (ensemble == Ensemble::canonical) {
    const Cell k = s.rng.below(cg.cells);
    const auto free = cg.cell_size - static_cast<std::size_t>(s.eta[k]);
    const bool adsorb = s.rng.below(cg.cell_size) < free;
    const int dir = adsorb ? 1 : -1;
    ++st.n_coarse_proposed;
    // The binomial prior and the proposal asymmetry cancel exactly.
    const double dHbar = Hbar.delta(s.eta, k, dir, &st.ops);
    if (!metropolis_accept(-beta * dHbar, s.rng)) return;
    ++st.m_coarse_accepted;
    ++st.n_fine_proposed;
    ++st.n_fine_accepted;
    const Site x = adsorb ? nth_site_with_value(cg, s.sigma, k, 0, s.rng.below(free))
                          : nth_site_with_value(cg, s.sigma, k, 1, s.rng.below(s.eta[k]));
    apply_flip(s, cg, x);
    return;
  }
  const auto pair = adjacent_cells(cg, s.rng);
  if (!pair) return;
  const auto sites = transfer_sites(cg, s.sigma, pair->first, pair->second, s.rng);
  if (!sites) return;
  ++st.n_coarse_proposed;
  const double dHbar = Hbar.delta_transfer(s.eta, pair->first, pair->second, &st.ops);
  if (!metropolis_accept(-beta * dHbar, s.rng)) return;
  ++st.m_coarse_accepted;
  ++st.n_fine_proposed;
  ++st.n_fine_accepted;
  apply_exchange(s, cg, sites->first, sites->second);
}

void two_level_step(ChainState& s, const TwoLevelRule& rule, RejectionPolicy policy) {
  const CoarseHamiltonian& Hbar = rule.coarse();
  const CoarseGeometry& cg = Hbar.geometry();
  auto& st = s.stats;
  for (std::uint64_t attempt = 0;; ++attempt) {
    const Cell k = s.rng.below(cg.cells);
    const auto free = cg.cell_size - static_cast<std::size_t>(s.eta[k]);
    const bool adsorb = s.rng.below(cg.cell_size) < free;
    const int dir = adsorb ? 1 : -1;
    ++st.n_coarse_proposed;
    const double dHbar = Hbar.delta(s.eta, k, dir, &st.ops);
    if (!metropolis_accept(rule.coarse_log_ratio(dHbar), s.rng)) {
      if (policy == RejectionPolicy::retry && attempt + 1 < kMaxRetries) continue;
      return;
    }
    ++st.m_coarse_accepted;
    const Site x = adsorb ? nth_site_with_value(cg, s.sigma, k, 0, s.rng.below(free))
                          : nth_site_with_value(cg, s.sigma, k, 1, s.rng.below(s.eta[k]));
    ++st.n_fine_proposed;
    if (metropolis_accept(rule.fine_log_ratio_flip(s.sigma, x, dHbar, &st.ops), s.rng)) {
      apply_flip(s, cg, x);
      ++st.n_fine_accepted;
    }
    return;
  }
}

// With probability 1/2 a particle moves between adjacent cells, otherwise a
// nearest-neighbour exchange is tried. Null proposals (no particle to move)
// leave the state unchanged and are not counted.
void two_level_exchange_step(ChainState& s, const TwoLevelRule& rule) {
  const CoarseHamiltonian& Hbar = rule.coarse();
  const CoarseGeometry& cg = Hbar.geometry();
  auto& st = s.stats;

  Site x = 0;
  Site y = 0;
  double dHbar = 0.0;
  bool coarse_test = true;
  if (s.rng.below(2) == 0) {
    const auto pair = adjacent_cells(cg, s.rng);
    if (!pair) return;
    const auto sites = transfer_sites(cg, s.sigma, pair->first, pair->second, s.rng);
    if (!sites) return;
    std::tie(x, y) = *sites;
  } else {
    x = s.rng.below(cg.fine.sites);
    const auto nb = cg.fine.neighbors(x);
    y = nb[s.rng.below(nb.size())];
    if (s.sigma[x] == s.sigma[y]) return;
    if (s.sigma[x] == 0) std::swap(x, y);
    coarse_test = cg.cell_of[x] != cg.cell_of[y];
  }

  ++st.n_coarse_proposed;
  if (coarse_test) {
    dHbar = Hbar.delta_transfer(s.eta, cg.cell_of[x], cg.cell_of[y], &st.ops);
    if (!metropolis_accept(rule.coarse_log_ratio(dHbar), s.rng)) return;
  }
  ++st.m_coarse_accepted;
  ++st.n_fine_proposed;
  if (metropolis_accept(rule.fine_log_ratio_exchange(s.sigma, x, y, dHbar, &st.ops), s.rng)) {
    apply_exchange(s, cg, x, y);
    ++st.n_fine_accepted;
  }
}

Sampler::Sampler(SamplerConfig config, Hamiltonian H, const CoarseGeometry& cg, std::optional<CoarseHamiltonian> Hbar)
    : config_(config), H_(std::move(H)), cg_(std::make_shared<const CoarseGeometry>(cg)), Hbar_(std::move(Hbar)) {
  if (!(cg.fine == H_.geometry())) throw ConfigError("coarse geometry does not refine the Hamiltonian lattice");
  if (config_.method != Method::mh && !Hbar_) {
    throw ConfigError("method " + to_string(config_.method) + " needs a coarse Hamiltonian");
  }
  if (config_.method == Method::two_level) TwoLevelRule(H_, *Hbar_, config_.strategy);
}

Sampler Sampler::make(SamplerConfig config, Hamiltonian H, const CoarseGeometry& cg) {
  std::optional<CoarseHamiltonian> Hbar;
  if (config.method == Method::cgmc) Hbar = CoarseHamiltonian::compress(H, cg, Compression::full);
  if (config.method == Method::two_level) Hbar = CoarseHamiltonian::compress(H, cg, compression_for(config.strategy));
  return {config, std::move(H), cg, std::move(Hbar)};
}

Sampler Sampler::with_field(const std::vector<double>& field) const {
  Sampler out = *this;
  out.H_ = H_.with_field(field);
  if (Hbar_) out.Hbar_ = Hbar_->with_field(coarsen_field(field, *cg_));
  return out;
}

void Sampler::step(ChainState& state) const {
  const bool canonical = config_.ensemble == Ensemble::canonical;
  switch (config_.method) {
    case Method::mh:
      mh_step(state, H_, *cg_, canonical ? ProposalKernel::uniform_flip : ProposalKernel::uniform_exchange);
      break;
    case Method::cgmc:
      cgmc_step(state, *Hbar_, config_.ensemble);
      break;
    case Method::two_level: {
      const TwoLevelRule rule(H_, *Hbar_, config_.strategy);
      if (canonical) {
        two_level_step(state, rule, config_.policy);
      } else {
        two_level_exchange_step(state, rule);
      }
      break;
    }
  }
  assert(state.eta == project(*cg_, state.sigma));
}

ChainResult run_chain(const Sampler& sampler, MicroConfig initial, double h_label, const SnapshotHook& hook) {
  const SamplerConfig& cfg = sampler.config();
  if (!cfg.seed) throw ConfigError("sampler.seed is required");
  ChainState state(sampler.geometry(), std::move(initial), Rng(*cfg.seed));
  for (std::uint64_t i = 0; i < cfg.burn_in; ++i) sampler.step(state);
  state.stats = {};

  const std::uint64_t stride = cfg.stride ? cfg.stride : std::max<std::uint64_t>(1, cfg.iterations / 100);
  ChainResult result;
  for (std::uint64_t i = 1; i <= cfg.iterations; ++i) {
    sampler.step(state);
    if (hook.every && hook.fn && i % hook.every == 0) hook.fn(cfg.burn_in + i, state.sigma);
    if (i % stride != 0 && i != cfg.iterations) continue;
    ObservableRow row;
    row.step = cfg.burn_in + i;
    row.h = h_label;
    row.coverage = coverage(state.sigma);
    row.energy = sampler.hamiltonian().energy(state.sigma);
    const auto& st = state.stats;
    row.coarse_acc_rate = st.n_coarse_proposed ? double(st.m_coarse_accepted) / double(st.n_coarse_proposed) : 0.0;
    row.fine_acc_rate = st.n_fine_proposed ? double(st.n_fine_accepted) / double(st.n_fine_proposed) : 0.0;
    row.ops_long = st.ops.long_range;
    row.ops_short = st.ops.short_range;
    row.ops_coarse = st.ops.coarse;
    result.rows.push_back(row);
  }
  result.stats = state.stats;
  result.final_state = std::move(state.sigma);
  return result;
}

void write_observable_header(std::ostream& out) {
  out << "step,h,coverage,energy,coarse_acc_rate,fine_acc_rate,ops_long,ops_short,ops_coarse\n";
}

void write_observable_row(std::ostream& out, const ObservableRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.12g,%.12g,%.12g,%.12g,%.12g,%llu,%llu,%llu\n",
                static_cast<unsigned long long>(r.step), r.h, r.coverage, r.energy, r.coarse_acc_rate,
                r.fine_acc_rate, static_cast<unsigned long long>(r.ops_long),
                static_cast<unsigned long long>(r.ops_short), static_cast<unsigned long long>(r.ops_coarse));
  out << buf;
}

}  // namespace mlcg
