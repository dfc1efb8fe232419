#include "mlcg/kernel_analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mlcg {

namespace {

void guard_sites(const LatticeGeometry& geom, int limit, const char* what) {
  if (geom.sites > static_cast<std::size_t>(limit)) {
    throw std::length_error(std::string(what) + ": N=" + std::to_string(geom.sites) + " exceeds the limit " +
                            std::to_string(limit));
  }
}

double log_binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::log(c);
}

DenseKernel empty_kernel(std::vector<std::uint64_t> states) {
  DenseKernel K;
  K.states = std::move(states);
  K.index.reserve(K.states.size());
  for (std::size_t i = 0; i < K.states.size(); ++i) K.index.emplace(K.states[i], i);
  K.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K.states.size()),
                                   static_cast<Eigen::Index>(K.states.size()));
  return K;
}

void fill_diagonal(DenseKernel& K) {
  for (Eigen::Index i = 0; i < K.matrix.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < K.matrix.cols(); ++j) {
      if (j != i) off += K.matrix(i, j);
    }
    K.matrix(i, i) = 1.0 - off;
  }
}

double accept_prob(double log_ratio) { return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio); }

void add(DenseKernel& K, std::size_t i, std::uint64_t to, double p) {
  K.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(K.index.at(to))) += p;
}

void check_measure(const DenseKernel& K, const MeasureVector& mu) {
  if (mu.size() != K.size()) throw std::invalid_argument("measure and kernel have different state counts");
}

}  // namespace

MeasureVector from_log_weights(const std::vector<double>& lw) {
  MeasureVector out;
  if (lw.empty()) return out;
  const double top = *std::max_element(lw.begin(), lw.end());
  double z = 0.0;
  for (double l : lw) z += std::exp(l - top);
  const double log_z = top + std::log(z);
  out.p.resize(lw.size());
  out.log_p.resize(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) {
    out.log_p[i] = lw[i] - log_z;
    out.p[i] = std::exp(out.log_p[i]);
  }
  return out;
}

std::vector<std::uint64_t> all_states(const LatticeGeometry& geom) {
  guard_sites(geom, kMaxEnumerationSites, "enumeration");
  std::vector<std::uint64_t> s(std::size_t{1} << geom.sites);
  for (std::uint64_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

std::vector<std::uint64_t> shell_states(const LatticeGeometry& geom, int particles) {
  guard_sites(geom, kMaxEnumerationSites, "enumeration");
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << geom.sites); ++i) {
    if (std::popcount(i) == particles) s.push_back(i);
  }
  return s;
}

MeasureVector exact_gibbs(const Hamiltonian& H) { return exact_gibbs(H, all_states(H.geometry())); }

MeasureVector exact_gibbs(const Hamiltonian& H, const std::vector<std::uint64_t>& states) {
  const std::size_t N = H.geometry().sites;
  guard_sites(H.geometry(), kMaxEnumerationSites, "exact_gibbs");
  const double prior = -static_cast<double>(N) * std::log(2.0);
  std::vector<double> lw(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    lw[i] = -H.beta() * H.energy(config_from_index(states[i], N)) + prior;
  }
  return from_log_weights(lw);
}

MeasureVector exact_marginal(const MeasureVector& mu, const CoarseGeometry& cg) {
  const std::size_t N = cg.fine.sites;
  if (mu.size() != (std::size_t{1} << N)) throw std::invalid_argument("exact_marginal needs μ over all 2^N states");
  const std::uint64_t count = coarse_state_count(cg.cells, cg.cell_size);
  MeasureVector out;
  out.p.assign(count, 0.0);
  for (std::uint64_t s = 0; s < mu.size(); ++s) {
    out.p[coarse_index(project(cg, config_from_index(s, N)), cg.cell_size)] += mu.p[s];
  }
  out.log_p.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.log_p[i] = std::log(out.p[i]);
  return out;
}

MeasureVector exact_coarse_gibbs(const CoarseHamiltonian& Hbar) {
  const CoarseGeometry& cg = Hbar.geometry();
  guard_sites(cg.fine, kMaxEnumerationSites, "exact_coarse_gibbs");
  const std::uint64_t count = coarse_state_count(cg.cells, cg.cell_size);
  const double base = static_cast<double>(cg.fine.sites) * std::log(2.0);
  std::vector<double> lb(cg.cell_size + 1);
  for (std::size_t j = 0; j <= cg.cell_size; ++j) lb[j] = log_binomial(cg.cell_size, j);
  std::vector<double> lw(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const CoarseConfig eta = coarse_from_index(i, cg.cells, cg.cell_size);
    double prior = 0.0;
    for (int e : eta) prior += lb[static_cast<std::size_t>(e)];
    lw[i] = -Hbar.beta() * Hbar.energy(eta) + (prior - base);
  }
  return from_log_weights(lw);
}

MeasureVector exact_approximate_target(const Hamiltonian& H, const CoarseHamiltonian& Hbar,
                                       const std::vector<std::uint64_t>& states) {
  const CoarseGeometry& cg = Hbar.geometry();
  const std::size_t N = H.geometry().sites;
  const double prior = -static_cast<double>(N) * std::log(2.0);
  std::vector<double> lw(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const MicroConfig sigma = config_from_index(states[i], N);
    const double hs = H.is_split() ? H.energy_parts(sigma).short_range : 0.0;
    lw[i] = -H.beta() * (hs + Hbar.energy(project(cg, sigma))) + prior;
  }
  return from_log_weights(lw);
}

double DenseKernel::row_sum_error() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) worst = std::max(worst, std::abs(matrix.row(i).sum() - 1.0));
  return worst;
}

double DenseKernel::min_entry() const { return matrix.size() ? matrix.minCoeff() : 0.0; }

DenseKernel build_mh_kernel(const Hamiltonian& H) {
  const LatticeGeometry& geom = H.geometry();
  guard_sites(geom, kMaxKernelSites, "build_mh_kernel");
  DenseKernel K = empty_kernel(all_states(geom));
  const double rho = 1.0 / static_cast<double>(geom.sites);
  for (std::size_t i = 0; i < K.size(); ++i) {
    const MicroConfig sigma = config_from_index(K.states[i], geom.sites);
    for (Site x = 0; x < geom.sites; ++x) {
      const double a = accept_prob(-H.beta() * H.delta_flip(sigma, x).total());
      add(K, i, K.states[i] ^ (std::uint64_t{1} << x), rho * a);
    }
  }
  fill_diagonal(K);
  return K;
}

DenseKernel build_two_level_kernel(const TwoLevelRule& rule, RejectionPolicy policy) {
  if (policy != RejectionPolicy::stay) {
    throw ConfigError("the dense two-level kernel describes policy 'stay' only; 'retry' has no closed form here");
  }
  const CoarseHamiltonian& Hbar = rule.coarse();
  const CoarseGeometry& cg = Hbar.geometry();
  guard_sites(cg.fine, kMaxKernelSites, "build_two_level_kernel");
  DenseKernel K = empty_kernel(all_states(cg.fine));
  const double M = static_cast<double>(cg.cells);
  const double Q = static_cast<double>(cg.cell_size);
  for (std::size_t i = 0; i < K.size(); ++i) {
    const MicroConfig sigma = config_from_index(K.states[i], cg.fine.sites);
    const CoarseConfig eta = project(cg, sigma);
    for (Site x = 0; x < cg.fine.sites; ++x) {
      const Cell k = cg.cell_of[x];
      const bool adsorb = sigma[x] == 0;
      const double free = Q - eta[k];
      // ρ̄(η, η^{k±}) and the single-site reconstruction μ_r(σ^x | η^{k±}).
      const double rhobar = adsorb ? free / (M * Q) : eta[k] / (M * Q);
      const double mur = adsorb ? 1.0 / free : 1.0 / eta[k];
      const double dHbar = Hbar.delta(eta, k, adsorb ? 1 : -1);
      const double a_cg = accept_prob(rule.coarse_log_ratio(dHbar));
      const double a_f = accept_prob(rule.fine_log_ratio_flip(sigma, x, dHbar));
      add(K, i, K.states[i] ^ (std::uint64_t{1} << x), rhobar * mur * a_cg * a_f);
    }
  }
  fill_diagonal(K);
  return K;
}

DenseKernel build_mh_exchange_kernel(const Hamiltonian& H, int particles) {
  const LatticeGeometry& geom = H.geometry();
  guard_sites(geom, kMaxEnumerationSites, "build_mh_exchange_kernel");
  DenseKernel K = empty_kernel(shell_states(geom, particles));
  const double p = 1.0 / (static_cast<double>(geom.sites) * geom.coordination());
  for (std::size_t i = 0; i < K.size(); ++i) {
    const MicroConfig sigma = config_from_index(K.states[i], geom.sites);
    for (Site x = 0; x < geom.sites; ++x) {
      for (Site y : geom.neighbors(x)) {
        if (sigma[x] == sigma[y]) continue;
        const double a = accept_prob(-H.beta() * H.delta_exchange(sigma, x, y).total());
        add(K, i, K.states[i] ^ (std::uint64_t{1} << x) ^ (std::uint64_t{1} << y), p * a);
      }
    }
  }
  fill_diagonal(K);
  return K;
}

DenseKernel build_two_level_exchange_kernel(const TwoLevelRule& rule, int particles) {
  const CoarseHamiltonian& Hbar = rule.coarse();
  const CoarseGeometry& cg = Hbar.geometry();
  const LatticeGeometry& geom = cg.fine;
  guard_sites(geom, kMaxEnumerationSites, "build_two_level_exchange_kernel");
  DenseKernel K = empty_kernel(shell_states(geom, particles));
  const double p_fine = 0.5 / (static_cast<double>(geom.sites) * geom.coordination());
  const double Q = static_cast<double>(cg.cell_size);
  const double p_coarse = 0.5 / (static_cast<double>(cg.cells) * cg.coarse.coordination() * Q * Q);

  for (std::size_t i = 0; i < K.size(); ++i) {
    const MicroConfig sigma = config_from_index(K.states[i], geom.sites);
    const CoarseConfig eta = project(cg, sigma);
    // Occupied site x hands its particle to vacant site y.
    auto move = [&](Site x, Site y, double p) {
      double dHbar = 0.0;
      double a_cg = 1.0;
      if (cg.cell_of[x] != cg.cell_of[y]) {
        dHbar = Hbar.delta_transfer(eta, cg.cell_of[x], cg.cell_of[y]);
        a_cg = accept_prob(rule.coarse_log_ratio(dHbar));
      }
      const double a_f = accept_prob(rule.fine_log_ratio_exchange(sigma, x, y, dHbar));
      add(K, i, K.states[i] ^ (std::uint64_t{1} << x) ^ (std::uint64_t{1} << y), p * a_cg * a_f);
    };
    for (Site x = 0; x < geom.sites; ++x) {
      for (Site y : geom.neighbors(x)) {
        if (sigma[x] == sigma[y]) continue;
        if (sigma[x]) {
          move(x, y, p_fine);
        } else {
          move(y, x, p_fine);
        }
      }
    }
    for (Cell k = 0; k < cg.cells; ++k) {
      for (Cell l : cg.coarse.neighbors(k)) {
        if (l == k) continue;
        for (Site x : cg.members[k]) {
          if (!sigma[x]) continue;
          for (Site y : cg.members[l]) {
            if (!sigma[y]) move(x, y, p_coarse);
          }
        }
      }
    }
  }
  fill_diagonal(K);
  return K;
}

double check_detailed_balance(const DenseKernel& K, const MeasureVector& mu) {
  check_measure(K, mu);
  double worst = 0.0;
  const auto n = static_cast<Eigen::Index>(K.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      worst = std::max(worst, std::abs(K.matrix(i, j) * mu.p[i] - K.matrix(j, i) * mu.p[j]));
    }
  }
  return worst;
}

double stationarity_residual(const DenseKernel& K, const MeasureVector& mu) {
  check_measure(K, mu);
  const Eigen::Map<const Eigen::VectorXd> m(mu.p.data(), static_cast<Eigen::Index>(mu.size()));
  const Eigen::VectorXd next = K.matrix.transpose() * m;
  return (next - m).lpNorm<1>();
}

Eigen::VectorXd symmetrized_spectrum(const DenseKernel& K, const MeasureVector& mu) {
  check_measure(K, mu);
  const auto n = static_cast<Eigen::Index>(K.size());
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = std::sqrt(mu.p[i]);
  Eigen::MatrixXd S = s.asDiagonal() * K.matrix * s.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  return solver.eigenvalues();
}

double spectral_gap(const DenseKernel& K, const MeasureVector& mu, double db_tol) {
  const double db = check_detailed_balance(K, mu);
  if (db > db_tol) {
    throw std::domain_error("spectral_gap: kernel is not reversible for μ (violation " + std::to_string(db) + ")");
  }
  if (K.size() < 2) return 0.0;
  const Eigen::VectorXd ev = symmetrized_spectrum(K, mu);
  return 1.0 - ev[ev.size() - 2];
}

double rayleigh_quotient(const DenseKernel& K, const MeasureVector& mu, const Eigen::VectorXd& f) {
  check_measure(K, mu);
  const auto n = static_cast<Eigen::Index>(K.size());
  double dirichlet = 0.0;
  double mean = 0.0;
  double second = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    mean += mu.p[i] * f[i];
    second += mu.p[i] * f[i] * f[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = f[i] - f[j];
      dirichlet += 0.5 * d * d * K.matrix(i, j) * mu.p[i];
    }
  }
  return dirichlet / (second - mean * mean);
}

double min_random_rayleigh(const DenseKernel& K, const MeasureVector& mu, int trials, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(K.size());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd f(n);
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) f[i] = 2.0 * rng.uniform() - 1.0;
    best = std::min(best, rayleigh_quotient(K, mu, f));
  }
  return best;
}

std::string to_string(ABClass c) {
  switch (c) {
    case ABClass::C1: return "C1";
    case ABClass::C2: return "C2";
    case ABClass::C3: return "C3";
    case ABClass::C4: return "C4";
  }
  return "?";
}

ABEntry decompose_AB(const ABInputs& in) {
  const double r = in.mu_to / in.mu_from;
  const double a = (in.mubar_to * in.rhobar_rev) / (in.mubar_from * in.rhobar_fwd);
  const double q_fwd = in.rhobar_fwd * in.mur_fwd;
  const double q_rev = in.rhobar_rev * in.mur_rev;
  const double f = r * q_rev / (q_fwd * a);

  ABEntry e;
  e.alpha = std::min(1.0, r);
  e.alpha_cg = std::min(1.0, a);
  e.alpha_f = std::min(1.0, f);
  const bool full = f >= 1.0 - 1e-12;
  e.B = (full ? q_fwd : q_rev) / in.rho;
  e.A = full ? e.alpha_cg / e.alpha : r * e.alpha_cg / (a * e.alpha);

  // Ratios that equal 1 up to rounding count as accepted outright.
  constexpr double slack = 1.0 - 1e-12;
  const bool p = r >= slack;  // α = 1
  const bool c = a >= slack;  // α_CG = 1
  if ((p && c && full) || (!p && !c && !full)) {
    e.cls = ABClass::C1;
    e.lemma_A = 1.0;
  } else if ((p && !c && full) || (!p && c && !full)) {
    e.cls = ABClass::C2;
    e.lemma_A = std::min(a, 1.0 / a);
  } else if ((p && c && !full) || (!p && !c && full)) {
    e.cls = ABClass::C3;
    e.lemma_A = std::min(r / a, a / r);
  } else {
    e.cls = ABClass::C4;
    e.lemma_A = std::min(r, 1.0 / r);
  }
  return e;
}

ABTable build_ab_table(const CoarseGeometry& cg, const MeasureVector& mu, const MeasureVector& mubar0) {
  const std::size_t N = cg.fine.sites;
  guard_sites(cg.fine, kMaxKernelSites, "build_ab_table");
  if (mu.size() != (std::size_t{1} << N)) throw std::invalid_argument("build_ab_table needs μ over all states");
  if (mubar0.size() != coarse_state_count(cg.cells, cg.cell_size)) {
    throw std::invalid_argument("build_ab_table needs μ̄(0) over all coarse states");
  }
  const double M = static_cast<double>(cg.cells);
  const double Q = static_cast<double>(cg.cell_size);
  ABTable t;
  t.A_inf = std::numeric_limits<double>::infinity();
  t.B_min = std::numeric_limits<double>::infinity();
  t.B_max = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < mu.size(); ++s) {
    const MicroConfig sigma = config_from_index(s, N);
    const CoarseConfig eta = project(cg, sigma);
    const std::uint64_t ci = coarse_index(eta, cg.cell_size);
    for (Site x = 0; x < N; ++x) {
      const Cell k = cg.cell_of[x];
      const bool adsorb = sigma[x] == 0;
      CoarseConfig next = eta;
      next[k] += adsorb ? 1 : -1;
      const double before = eta[k];
      const double after = next[k];
      ABInputs in;
      in.mu_from = mu.p[s];
      in.mu_to = mu.p[s ^ (std::uint64_t{1} << x)];
      in.mubar_from = mubar0.p[ci];
      in.mubar_to = mubar0.p[coarse_index(next, cg.cell_size)];
      in.rho = 1.0 / static_cast<double>(N);
      in.rhobar_fwd = (adsorb ? Q - before : before) / (M * Q);
      in.rhobar_rev = (adsorb ? after : Q - after) / (M * Q);
      in.mur_fwd = 1.0 / (adsorb ? Q - before : before);
      in.mur_rev = 1.0 / (adsorb ? after : Q - after);
      const ABEntry e = decompose_AB(in);
      t.items.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(s ^ (std::uint64_t{1} << x)), e});
      t.A_inf = std::min(t.A_inf, e.A);
      t.B_min = std::min(t.B_min, e.B);
      t.B_max = std::max(t.B_max, e.B);
      ++t.class_count[static_cast<int>(e.cls)];
      if (e.cls != ABClass::C4) t.max_lemma_deviation = std::max(t.max_lemma_deviation, std::abs(e.A - e.lemma_A));
    }
  }
  return t;
}

double verify_factorization(const DenseKernel& Kcg, const DenseKernel& Kc, const ABTable& table) {
  if (Kcg.size() != Kc.size()) throw std::invalid_argument("kernels over different state spaces");
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(Kcg.matrix.rows(), Kcg.matrix.cols());
  for (const auto& item : table.items) {
    const auto i = static_cast<Eigen::Index>(item.from);
    const auto j = static_cast<Eigen::Index>(item.to);
    expected(i, j) = item.entry.A * item.entry.B * Kc.matrix(i, j);
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < expected.rows(); ++i) {
    for (Eigen::Index j = 0; j < expected.cols(); ++j) {
      if (i != j) worst = std::max(worst, std::abs(Kcg.matrix(i, j) - expected(i, j)));
    }
  }
  return worst;
}

bool verify_gap_sandwich(GapReport& r, double tol) {
  const double lower = r.A_inf * r.gamma_lo * r.lambda_c;
  const double upper = r.gamma_hi * r.lambda_c;
  r.sandwich_ok = lower <= r.lambda_cg + tol && r.lambda_cg <= upper + tol;
  if (!r.sandwich_ok) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "gap sandwich violated: A_inf*gamma_lo*lambda_c=" << lower << " lambda_CG=" << r.lambda_cg
        << " gamma_hi*lambda_c=" << upper << " (N=" << r.N << " q=" << r.q << " beta=" << r.beta << ")";
    throw std::runtime_error(msg.str());
  }
  return true;
}

void write_gap_csv_header(std::ostream& out) {
  out << "N,q,beta,K,J,lambda_c,lambda_CG,A_inf,gamma_lo,gamma_hi,sandwich_ok\n";
}

void write_gap_csv_row(std::ostream& out, const GapReport& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%zu,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n", r.N, r.q, r.beta,
                r.K, r.J, r.lambda_c, r.lambda_cg, r.A_inf, r.gamma_lo, r.gamma_hi, r.sandwich_ok ? 1 : 0);
  out << buf;
}

double relative_entropy_specific(const MeasureVector& mubar0, const MeasureVector& mubar, std::size_t N) {
  if (mubar0.size() != mubar.size()) throw std::invalid_argument("measures over different state spaces");
  double r = 0.0;
  for (std::size_t i = 0; i < mubar0.size(); ++i) {
    if (!(mubar0.p[i] > 0.0) || !(mubar.p[i] > 0.0)) {
      throw std::domain_error("relative entropy needs strictly positive measures");
    }
    r += mubar0.p[i] * std::log(mubar0.p[i] / mubar.p[i]);
  }
  return r / static_cast<double>(N);
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("measures over different state spaces");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> tv_decay(const DenseKernel& K, const MeasureVector& mu, std::uint64_t steps) {
  check_measure(K, mu);
  const auto n = static_cast<Eigen::Index>(K.size());
  const Eigen::Map<const Eigen::RowVectorXd> m(mu.p.data(), n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> out;
  out.reserve(steps + 1);
  for (std::uint64_t t = 0; t <= steps; ++t) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, 0.5 * (P.row(i) - m).cwiseAbs().sum());
    out.push_back(worst);
    if (t < steps) P = P * K.matrix;
  }
  return out;
}

MixingTimes mixing_time_bound(const DenseKernel& K, const MeasureVector& mu, double lambda, std::uint64_t max_steps) {
  if (!(lambda > 0.0)) throw std::domain_error("mixing time bound needs a positive spectral gap");
  const Eigen::VectorXd ev = symmetrized_spectrum(K, mu);
  MixingTimes out;
  if (ev.size() >= 2) out.spectral_radius = std::max(std::abs(ev[ev.size() - 2]), std::abs(ev[0]));
  const double mu_min = *std::min_element(mu.p.begin(), mu.p.end());
  const double target = 0.5 * std::sqrt(mu_min);  // radius^n <= sqrt(min μ)/2
  if (out.spectral_radius <= 0.0) {
    out.bound = 1;
  } else if (out.spectral_radius >= 1.0) {
    throw std::domain_error("spectral radius 1: the chain is periodic or reducible");
  } else {
    out.bound = static_cast<std::uint64_t>(std::max(0.0, std::ceil(std::log(target) / std::log(out.spectral_radius))));
  }

  const auto n = static_cast<Eigen::Index>(K.size());
  const Eigen::Map<const Eigen::RowVectorXd> m(mu.p.data(), n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  for (std::uint64_t t = 0; t <= max_steps; ++t) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, 0.5 * (P.row(i) - m).cwiseAbs().sum());
    if (worst <= 0.25) {
      out.exact = t;
      out.exact_found = true;
      break;
    }
    P = P * K.matrix;
  }
  return out;
}

}  // namespace mlcg
