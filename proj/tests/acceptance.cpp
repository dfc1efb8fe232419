// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria not listed in --known-fail (capped at 100).

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "mlcg/experiment.hpp"
#include "mlcg/kernel_analysis.hpp"
#include "mlcg/observables.hpp"

using namespace mlcg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Hamiltonian benchmark_H(const LatticeGeometry& lat, double K, double J, double h, double beta) {
  const SplitPotential sp{PairPotential::nearest_neighbor(K), PairPotential::curie_weiss(J, lat), 1.0};
  return Hamiltonian(lat, sp, std::vector<double>(lat.sites, h), beta);
}

const std::vector<InstanceCheck>& matrix() {
  static const std::vector<InstanceCheck> checks = verification_matrix(parse_config(preset_text("tiny_verification")));
  return checks;
}

Outcome ac1() {
  double db = 0.0, st = 0.0;
  std::size_t count = 0;
  for (const auto& c : matrix()) {
    if (c.strategy != Strategy::corrections) continue;
    db = std::max(db, c.detailed_balance);
    st = std::max(st, c.stationarity);
    ++count;
  }
  return {count == 24 && db < 1e-12 && st < 1e-12,
          fmt("%zu instances, max DB violation %.3g, max stationarity residual %.3g (tol 1e-12)", count, db, st)};
}

Outcome ac2() {
  double fac = 0.0, bdev = 0.0;
  std::size_t c4 = 0;
  for (const auto& c : matrix()) {
    fac = std::max(fac, c.factorization);
    if (c.potential == "benchmark") {
      bdev = std::max({bdev, std::abs(c.B_min - 1.0), std::abs(c.B_max - 1.0)});
      if (c.strategy == Strategy::splitting) c4 += c.class_count[3];
    }
  }
  return {fac < 1e-12 && bdev < 1e-12 && c4 == 0,
          fmt("max |K_CG - A B K_c| %.3g, benchmark max |B-1| %.3g, benchmark splitting C4 pairs %zu", fac, bdev, c4)};
}

Outcome ac3() {
  std::size_t bad = 0;
  for (const auto& c : matrix()) bad += !c.gap_error.empty();
  double eq = 0.0;
  for (int n : {4, 6, 8}) {
    for (double beta : {0.2, 1.0}) {
      const Geometry g = build_geometry(1, n, 2);
      for (Strategy s : {Strategy::corrections, Strategy::splitting}) {
        const InstanceCheck ic = check_instance(benchmark_H(g.lattice, 0.0, 1.0, 0.5, beta), g.coarse, s, "benchmark");
        bad += !ic.gap_error.empty();
        eq = std::max(eq, std::abs(ic.gap.lambda_cg - ic.gap.lambda_c));
      }
    }
  }
  return {bad == 0 && eq < 1e-10,
          fmt("%zu sandwich violations (slack 1e-10); K=0 max |lambda_CG - lambda_c| %.3g (tol 1e-10)", bad, eq)};
}

Outcome ac4() {
  const Geometry g = build_geometry(1, 64, 8);
  const Hamiltonian H(g.lattice, PairPotential::curie_weiss(3.0, g.lattice), std::vector<double>(64, 0.0), 1.0);
  const auto Hbar = CoarseHamiltonian::compress(H, g.coarse, Compression::full);
  Rng rng(404);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const MicroConfig s = random_config(g.lattice, rng);
    worst = std::max(worst, std::abs(H.energy_parts(s).long_range - Hbar.energy(project(g.coarse, s))));
  }
  return {worst < 1e-10, fmt("N=64 q=8, 1000 random states, max |H_l - Hbar_l| %.3g (tol 1e-10)", worst)};
}

Outcome ac5() {
  const LatticeGeometry lat(1, 16);
  const Hamiltonian H(lat, make_smooth_kac(1.0, 8.0, lat), std::vector<double>(16, 0.0), 1.0);
  const MeasureVector mu = exact_gibbs(H);
  std::map<int, double> R;
  for (int q : {1, 2, 4}) {
    const Geometry g = build_geometry(1, 16, q);
    const auto Hbar = CoarseHamiltonian::compress(H, g.coarse, Compression::full);
    R[q] = relative_entropy_specific(exact_coarse_gibbs(Hbar), exact_marginal(mu, g.coarse), 16);
  }
  const double ratio = R[4] / R[2];
  // Growth of R(q=2) between β/2 and β: an exponent near 4 means R ~ ε^4.
  const Geometry g2 = build_geometry(1, 16, 2);
  const Hamiltonian half = H.with_beta(0.5);
  const double R_half = relative_entropy_specific(
      exact_coarse_gibbs(CoarseHamiltonian::compress(half, g2.coarse, Compression::full)),
      exact_marginal(exact_gibbs(half), g2.coarse), 16);
  return {ratio >= 2.5 && ratio <= 6.0 && R[1] == 0.0,
          fmt("R(q=1)=%.3g R(q=2)=%.4g R(q=4)=%.4g, ratio %.3f (want [2.5,6] and R(q=1)=0); "
              "beta exponent of R %.2f",
              R[1], R[2], R[4], ratio, std::log2(R[2] / R_half))};
}

struct ChiResult {
  double mean = 0.0;
  double se = 0.0;
  double p = 0.0;
  std::size_t bins = 0;
};

ChiResult sample_histogram(const Sampler& s, const MeasureVector& mu, std::uint64_t steps, std::uint64_t thin,
                           std::uint64_t seed) {
  Rng init(seed, 1);
  ChainState st(s.geometry(), random_config(s.geometry().fine, init), Rng(seed));
  for (int i = 0; i < 10000; ++i) s.step(st);
  std::vector<double> cov;
  std::vector<double> hist(mu.size(), 0.0);
  cov.reserve(steps);
  for (std::uint64_t i = 0; i < steps; ++i) {
    s.step(st);
    cov.push_back(coverage(st.sigma));
    if (i % thin == 0) hist[config_index(st.sigma)] += 1.0;
  }
  ChiResult r;
  const BatchMeans bm = batch_means_ci(cov, 50);
  r.mean = bm.mean;
  r.se = bm.std_error;

  // Pool states with small expectation into one bin.
  double total = 0.0;
  for (double h : hist) total += h;
  double chi2 = 0.0, pool_obs = 0.0, pool_exp = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double e = mu.p[i] * total;
    if (e < 5.0) {
      pool_obs += hist[i];
      pool_exp += e;
      continue;
    }
    chi2 += (hist[i] - e) * (hist[i] - e) / e;
    ++r.bins;
  }
  if (pool_exp > 0.0) {
    chi2 += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++r.bins;
  }
  r.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(r.bins - 1)), chi2));
  return r;
}

Outcome ac6() {
  const Geometry g = build_geometry(1, 8, 2);
  const Hamiltonian H = benchmark_H(g.lattice, 1.0, 1.0, 1.5, 1.0);
  const MeasureVector mu = exact_gibbs(H);
  double exact = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) exact += mu.p[i] * occupied_count(config_from_index(i, 8)) / 8.0;
  bool pass = true;
  std::string detail = fmt("exact <c>=%.5f", exact);
  for (Method m : {Method::mh, Method::two_level}) {
    SamplerConfig cfg;
    cfg.method = m;
    cfg.strategy = Strategy::corrections;
    cfg.policy = RejectionPolicy::stay;
    const ChiResult r = sample_histogram(Sampler::make(cfg, H, g.coarse), mu, 1000000, 50, 61);
    const bool ok = std::abs(r.mean - exact) < 3.0 * r.se && r.p > 0.01;
    pass = pass && ok;
    detail += fmt("; %s <c>=%.5f (%.2f SE), chi2 p=%.3f over %zu bins", to_string(m).c_str(), r.mean,
                  std::abs(r.mean - exact) / r.se, r.p, r.bins);
  }
  return {pass, detail};
}

std::pair<HysteresisCurve, HysteresisCurve> kac_loop(ExperimentConfig c, Method method, int q) {
  c.lattice.q = q;
  c.sampler.chain.method = method;
  const Model model = build_model(c);
  const Sampler s = build_sampler(c, model);
  SweepConfig sw;
  sw.schedule = c.ensemble.h_schedule;
  sw.burn_in = c.sampler.chain.burn_in;
  sw.samples = c.sampler.samples;
  sw.sample_stride = c.sampler.sample_stride;
  sw.seed = *c.sampler.chain.seed;
  sw.field_sign = c.ensemble.field_sign;
  return hysteresis_sweep(s, sw, initial_state(c, model.geometry.lattice, sw.seed, true));
}

Outcome ac7() {
  const ExperimentConfig c = parse_config(preset_text("kac_1d"));
  const auto ref = kac_loop(c, Method::mh, 1);
  std::map<std::pair<int, Method>, double> err;
  for (int q : {8, 64}) {
    for (Method m : {Method::two_level, Method::cgmc}) err[{q, m}] = l2_error(kac_loop(c, m, q), ref);
  }
  const auto e = [&](int q, Method m) { return err.at({q, m}); };
  const bool pass = e(8, Method::two_level) < e(8, Method::cgmc) && e(64, Method::two_level) < e(64, Method::cgmc);
  return {pass, fmt("l2 vs MH: q=8 two-level %.4f CGMC %.4f; q=64 two-level %.4f CGMC %.4f", e(8, Method::two_level),
                    e(8, Method::cgmc), e(64, Method::two_level), e(64, Method::cgmc))};
}

Outcome ac8() {
  const Geometry g = build_geometry(2, 32, 4);
  const auto morse = PairPotential::morse_gaussian(1.0, 4.47, 10.0, 0.1, 8.0);
  const Hamiltonian H(g.lattice, split(morse, 1.0), std::vector<double>(g.lattice.sites, 0.2), 0.6);
  const std::uint64_t L = 8, S = 1, Q = 16;
  const std::uint64_t long_size = (2 * L + 1) * (2 * L + 1), short_size = (2 * S + 1) * (2 * S + 1);
  bool pass = true;
  std::string detail;
  for (Method m : {Method::mh, Method::two_level}) {
    for (Strategy strat : {Strategy::corrections, Strategy::splitting, Strategy::approximate_cg}) {
      SamplerConfig cfg;
      cfg.method = m;
      cfg.strategy = strat;
      cfg.iterations = 20000;
      cfg.seed = 8;
      const Sampler s = Sampler::make(cfg, H, g.coarse);
      const auto st = run_chain(s, initial_state(ExperimentConfig{}, g.lattice, 8, false)).stats;
      const OpsPrediction p = predict_ops(s, st);
      const StencilSizes sz = stencil_sizes(s);
      const std::uint64_t n = st.n_coarse_proposed, mm = st.n_fine_proposed;
      bool ok = p.ops.long_range == st.ops.long_range && p.ops.short_range == st.ops.short_range &&
                p.ops.coarse == st.ops.coarse && sz.long_range == long_size && sz.short_range == short_size;
      const std::uint64_t total = st.ops.long_range + st.ops.short_range + st.ops.coarse;
      if (m == Method::mh) {
        ok = ok && total == n * (long_size + short_size);
        detail += fmt("mh: total %llu = n[(2L+1)^2+(2S+1)^2]; ", static_cast<unsigned long long>(total));
        pass = pass && ok;
        break;
      }
      ok = ok && st.ops.short_range == mm * short_size;
      detail += fmt("%s: n=%llu m=%llu short=m(2S+1)^2 coarse=n*%zu (table n(2L+1)^2/Q=%.0f)%s; ", to_string(strat).c_str(),
                    static_cast<unsigned long long>(n), static_cast<unsigned long long>(mm), sz.coarse,
                    static_cast<double>(n * long_size) / static_cast<double>(Q), ok ? "" : " MISMATCH");
      pass = pass && ok;
    }
  }
  return {pass, detail};
}

Outcome ac9() {
  std::vector<double> rate;
  for (int q : {1, 2, 4}) {
    const Geometry g = build_geometry(2, 16, q);
    SamplerConfig cfg;
    cfg.method = Method::two_level;
    cfg.strategy = Strategy::corrections;
    cfg.iterations = 400000;
    cfg.burn_in = 50000;
    cfg.seed = 9;
    const Sampler s = Sampler::make(cfg, benchmark_H(g.lattice, 1.0, 5.0, 4.5, 1.0), g.coarse);
    rate.push_back(average_acceptance(run_chain(s, MicroConfig(g.lattice.sites, 0)).stats).fine);
  }
  const bool pass = rate[0] == 1.0 && rate[1] <= rate[0] && rate[2] <= rate[1];
  return {pass, fmt("fine acceptance q=1 %.6f, q=2 %.6f, q=4 %.6f", rate[0], rate[1], rate[2])};
}

Outcome ac10() {
  const ExperimentConfig base = parse_config(preset_text("morse_discs"));
  std::map<Method, PatternStats> stats;
  for (Method m : {Method::two_level, Method::mh}) {
    ExperimentConfig c = base;
    c.sampler.chain.method = m;
    const Model model = build_model(c);
    const Sampler s = build_sampler(c, model);
    const LatticeGeometry& lat = model.geometry.lattice;
    const auto res = run_chain(s, initial_state(c, lat, *c.sampler.chain.seed, false));
    stats[m] = pattern_stats(lat, res.final_state, minority_phase(res.final_state));
  }
  const PatternStats& tl = stats[Method::two_level];
  const PatternStats& mh = stats[Method::mh];
  const double rel = mh.defined && tl.defined ? std::abs(tl.mean_diameter - mh.mean_diameter) / mh.mean_diameter : 1.0;
  return {tl.feature_count >= 10 && rel <= 0.15,
          fmt("two-level %zu features <d>=%.3f; MH %zu features <d>=%.3f; relative difference %.3f (tol 0.15)",
              tl.feature_count, tl.mean_diameter, mh.feature_count, mh.mean_diameter, rel)};
}

Outcome ac11() {
  const Geometry g = build_geometry(2, 16, 4);
  SamplerConfig cfg;
  cfg.method = Method::two_level;
  cfg.ensemble = Ensemble::microcanonical;
  const Sampler s = Sampler::make(cfg, benchmark_H(g.lattice, 1.0, 5.0, 0.0, 1.0), g.coarse);
  Rng init(11);
  ChainState st(g.coarse, random_config_with_coverage(g.lattice, 0.3, init), Rng(12));
  const int target = occupied_count(st.sigma);
  std::uint64_t drift = 0;
  const std::uint64_t steps = 10000000;
  for (std::uint64_t i = 0; i < steps; ++i) {
    s.step(st);
    drift += occupied_count(st.sigma) != target;
  }
  // Within-cell moves leave η alone, so the block sums must match as well.
  const bool eta_ok = st.eta == project(g.coarse, st.sigma) && st.stats.n_fine_proposed > 0;

  const Geometry t = build_geometry(1, 8, 2);
  const Hamiltonian H = benchmark_H(t.lattice, 1.0, 1.0, 0.0, 1.0);
  const auto Hbar = CoarseHamiltonian::compress(H, t.coarse, Compression::full);
  const DenseKernel K = build_two_level_exchange_kernel(TwoLevelRule(H, Hbar, Strategy::corrections), 4);
  const double db = check_detailed_balance(K, exact_gibbs(H, shell_states(t.lattice, 4)));
  return {drift == 0 && eta_ok && db < 1e-12 && K.row_sum_error() < 1e-12,
          fmt("%llu exchange steps, %llu coverage deviations; N=8 shell DB violation %.3g (tol 1e-12)",
              static_cast<unsigned long long>(steps), static_cast<unsigned long long>(drift), db)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria AC-1..AC-11"};
  std::set<int> only;
  std::set<int> known;
  app.add_option("--only", only, "Run only these criteria (numbers 1..11)")->delimiter(',');
  app.add_option("--known-fail", known,
                 "Criteria whose failure is documented; they still print FAIL but do not set the exit status")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10, ac11};
  int failed = 0;
  int passed = 0;
  std::string failures;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("AC-%d %s  %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    passed += o.pass;
    if (!o.pass) {
      failures += " AC-" + std::to_string(id) + (known.count(id) ? "(documented)" : "");
      failed += !known.count(id);
    }
  }
  std::printf("%d passed;%s%s\n", passed, failures.empty() ? " no failures" : " failed:", failures.c_str());
  return std::min(failed, 100);
}
