#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mlcg/kernel_analysis.hpp"
#include "oracles.hpp"

using namespace mlcg;

namespace {

Hamiltonian benchmark_H(const LatticeGeometry& lat, double K, double J, double h, double beta) {
  const SplitPotential sp{PairPotential::nearest_neighbor(K), PairPotential::curie_weiss(J, lat), 1.0};
  return Hamiltonian(lat, sp, std::vector<double>(lat.sites, h), beta);
}

DenseKernel two_by_two(double p) {
  DenseKernel K;
  K.states = {0, 1};
  K.index = {{0, 0}, {1, 1}};
  K.matrix.resize(2, 2);
  K.matrix << 1 - p, p, p, 1 - p;
  return K;
}

struct Instance {
  Geometry g;
  Hamiltonian H;
  CoarseHamiltonian Hbar;
  MeasureVector mu;
};

Instance benchmark_instance(int n, int q, double K, double J, double h, double beta, Strategy s) {
  auto g = build_geometry(1, n, q);
  Hamiltonian H = benchmark_H(g.lattice, K, J, h, beta);
  CoarseHamiltonian Hbar = CoarseHamiltonian::compress(H, g.coarse, compression_for(s));
  MeasureVector mu = exact_gibbs(H);
  return {std::move(g), std::move(H), std::move(Hbar), std::move(mu)};
}

}  // namespace

TEST_SUITE("kernel_analysis") {
  TEST_CASE("exact measures") {
    const auto g = build_geometry(1, 6, 2);
    const MeasureVector flat = exact_gibbs(benchmark_H(g.lattice, 1.0, 1.0, 0.3, 0.0));
    for (double p : flat.p) CHECK(p == doctest::Approx(1.0 / 64).epsilon(1e-14));
    const MeasureVector marg = exact_marginal(flat, g.coarse);
    const double binom[3] = {1, 2, 1};
    for (std::size_t i = 0; i < marg.size(); ++i) {
      const auto eta = coarse_from_index(i, 3, 2);
      CHECK(marg.p[i] == doctest::Approx(binom[eta[0]] * binom[eta[1]] * binom[eta[2]] / 64).epsilon(1e-13));
    }

    const double K = 0.9, h = 0.4, beta = 1.2;
    const Hamiltonian nn(g.lattice, PairPotential::nearest_neighbor(K), std::vector<double>(6, h), beta);
    const MeasureVector mu = exact_gibbs(nn);
    double total = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      total += mu.p[i];
      cov += mu.p[i] * occupied_count(config_from_index(i, 6)) / 6.0;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(cov == doctest::Approx(oracle::transfer_matrix_coverage(6, K, h, beta)).epsilon(1e-12));

    // Large β must not under- or overflow.
    const MeasureVector cold = exact_gibbs(nn.with_beta(500.0));
    for (double p : cold.p) CHECK(std::isfinite(p));
    CHECK_THROWS(exact_gibbs(benchmark_H(LatticeGeometry(1, 24), 1, 1, 0, 1)));
  }

  TEST_CASE("kernels are row stochastic and reversible") {
    for (Strategy s : {Strategy::corrections, Strategy::splitting}) {
      const auto in = benchmark_instance(6, 2, 1.0, 1.0, 0.7, 1.0, s);
      const DenseKernel Kc = build_mh_kernel(in.H);
      const DenseKernel Kcg = build_two_level_kernel(TwoLevelRule(in.H, in.Hbar, s));
      CHECK(Kc.row_sum_error() < 1e-12);
      CHECK(Kcg.row_sum_error() < 1e-12);
      CHECK(Kcg.min_entry() >= 0.0);
      CHECK(check_detailed_balance(Kc, in.mu) < 1e-12);
      CHECK(check_detailed_balance(Kcg, in.mu) < 1e-12);
      CHECK(stationarity_residual(Kcg, in.mu) < 1e-12);
    }
    const auto g = build_geometry(1, 8, 2);
    const Hamiltonian H = benchmark_H(g.lattice, 1.0, 1.0, 0.5, 1.0);
    const auto Hbar = CoarseHamiltonian::compress(H, g.coarse, Compression::full);
    CHECK_THROWS(build_two_level_kernel(TwoLevelRule(H, Hbar, Strategy::corrections), RejectionPolicy::retry));
    CHECK(stationarity_residual(build_two_level_kernel(TwoLevelRule(H, Hbar, Strategy::corrections)), exact_gibbs(H)) <
          1e-12);
  }

  TEST_CASE("approximate coarse-graining is reversible for its own target") {
    const auto g = build_geometry(1, 8, 2);
    const Hamiltonian H(g.lattice, split(make_smooth_kac(2.0, 4.0, g.lattice), 1.0), std::vector<double>(8, 0.5), 1.0);
    const auto Hbar = CoarseHamiltonian::compress(H, g.coarse, Compression::long_only);
    const DenseKernel K = build_two_level_kernel(TwoLevelRule(H, Hbar, Strategy::approximate_cg));
    const MeasureVector mu0 = exact_approximate_target(H, Hbar, all_states(g.lattice));
    CHECK(check_detailed_balance(K, mu0) < 1e-12);
    CHECK(check_detailed_balance(K, exact_gibbs(H)) > 1e-6);
  }

  TEST_CASE("beta zero two-level kernel is the composite proposal") {
    const auto in = benchmark_instance(6, 2, 1.0, 1.0, 0.0, 0.0, Strategy::corrections);
    const DenseKernel K = build_two_level_kernel(TwoLevelRule(in.H, in.Hbar, Strategy::corrections));
    for (std::size_t i = 0; i < K.size(); ++i) {
      for (int x = 0; x < 6; ++x) {
        const std::size_t j = K.index.at(K.states[i] ^ (std::uint64_t{1} << x));
        CHECK(K.matrix(i, j) == doctest::Approx(1.0 / 6).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("microcanonical kernels") {
    const auto g = build_geometry(1, 8, 2);
    const Hamiltonian H = benchmark_H(g.lattice, 1.0, 1.0, 0.0, 1.0);
    const auto Hbar = CoarseHamiltonian::compress(H, g.coarse, Compression::full);
    const DenseKernel Kx = build_two_level_exchange_kernel(TwoLevelRule(H, Hbar, Strategy::corrections), 4);
    const MeasureVector mu = exact_gibbs(H, shell_states(g.lattice, 4));
    CHECK(Kx.size() == 70);
    CHECK(Kx.row_sum_error() < 1e-12);
    CHECK(check_detailed_balance(Kx, mu) < 1e-12);
    const DenseKernel Km = build_mh_exchange_kernel(H, 4);
    CHECK(check_detailed_balance(Km, mu) < 1e-12);
    CHECK(spectral_gap(Kx, mu) > 0.0);
  }

  TEST_CASE("stationarity catches a perturbed measure") {
    const auto in = benchmark_instance(6, 2, 1.0, 1.0, 0.2, 1.0, Strategy::corrections);
    const DenseKernel K = build_mh_kernel(in.H);
    MeasureVector bad = in.mu;
    bad.p[0] += 0.01;
    bad.p[1] -= 0.01;
    CHECK(stationarity_residual(K, bad) > 1e-4);
  }

  TEST_CASE("spectral gap closed forms") {
    const MeasureVector half = from_log_weights({0.0, 0.0});
    CHECK(spectral_gap(two_by_two(0.3), half) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(spectral_gap(two_by_two(0.0), half) == doctest::Approx(0.0));
    MeasureVector skew = from_log_weights({0.0, 1.0});
    CHECK_THROWS(spectral_gap(two_by_two(0.3), skew));
  }

  TEST_CASE("eigen gap equals the Rayleigh minimum") {
    const auto in = benchmark_instance(6, 2, 1.0, 1.0, 0.4, 1.0, Strategy::corrections);
    const DenseKernel K = build_mh_kernel(in.H);
    const double lambda = spectral_gap(K, in.mu);
    const Eigen::VectorXd ev = symmetrized_spectrum(K, in.mu);
    CHECK(ev[ev.size() - 1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lambda > 0.0);
    CHECK(lambda <= 2.0);
    Rng rng(13);
    const double rq = min_random_rayleigh(K, in.mu, 10000, rng);
    CHECK(rq >= lambda - 1e-8);

    // The quotient at the second eigenvector attains λ.
    const auto n = static_cast<Eigen::Index>(K.size());
    Eigen::MatrixXd S(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) S(i, j) = std::sqrt(in.mu.p[i] / in.mu.p[j]) * K.matrix(i, j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    Eigen::VectorXd f = es.eigenvectors().col(n - 2);
    for (Eigen::Index i = 0; i < n; ++i) f[i] /= std::sqrt(in.mu.p[i]);
    CHECK(rayleigh_quotient(K, in.mu, f) == doctest::Approx(lambda).epsilon(1e-8));
  }

  TEST_CASE("AB decomposition classes") {
    ABInputs e;
    e.mu_from = e.mu_to = 0.2;
    e.mubar_from = e.mubar_to = 0.3;
    e.rho = 0.25;
    e.rhobar_fwd = e.rhobar_rev = 0.5;
    e.mur_fwd = e.mur_rev = 0.5;
    const ABEntry one = decompose_AB(e);
    CHECK(one.cls == ABClass::C1);
    CHECK(one.A == 1.0);
    CHECK(one.B == doctest::Approx(1.0));

    ABInputs c2 = e;
    c2.mu_to = 0.4;     // r = 2
    c2.mubar_to = 0.1;  // a = 1/3, fine ratio 6
    const ABEntry two = decompose_AB(c2);
    CHECK(two.cls == ABClass::C2);
    CHECK(two.A == doctest::Approx(1.0 / 3));
    CHECK(to_string(ABClass::C4) == "C4");
  }

  TEST_CASE("benchmark factorization and constants") {
    for (int q : {1, 2}) {
      const auto in = benchmark_instance(8, q, 1.0, 1.0, 0.6, 1.0, Strategy::splitting);
      const MeasureVector mubar0 = exact_coarse_gibbs(in.Hbar);
      const ABTable t = build_ab_table(in.g.coarse, in.mu, mubar0);
      CHECK(t.items.size() == 256 * 8);
      CHECK(t.B_min == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(t.B_max == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(t.class_count[3] == 0);
      CHECK(t.max_lemma_deviation < 1e-12);
      CHECK(t.A_inf >= std::min(std::exp(-1.0), std::exp(-2.0)) - 1e-12);
      CHECK(t.A_inf <= 1.0);
      const DenseKernel Kc = build_mh_kernel(in.H);
      const DenseKernel Kcg = build_two_level_kernel(TwoLevelRule(in.H, in.Hbar, Strategy::splitting));
      CHECK(verify_factorization(Kcg, Kc, t) < 1e-12);
      if (q == 1) {
        const auto full = CoarseHamiltonian::compress(in.H, in.g.coarse, Compression::full);
        const DenseKernel Kid = build_two_level_kernel(TwoLevelRule(in.H, full, Strategy::corrections));
        CHECK((Kid.matrix - Kc.matrix).cwiseAbs().maxCoeff() < 1e-14);
      }
    }
    // β placed in the exponents.
    const auto warm = benchmark_instance(8, 2, 1.0, 1.0, 0.6, 0.5, Strategy::splitting);
    const ABTable tw = build_ab_table(warm.g.coarse, warm.mu, exact_coarse_gibbs(warm.Hbar));
    CHECK(tw.A_inf >= std::min(std::exp(-0.5), std::exp(-1.0)) - 1e-12);

    const auto flat = benchmark_instance(6, 2, 1.0, 1.0, 0.6, 0.0, Strategy::splitting);
    const ABTable tf = build_ab_table(flat.g.coarse, flat.mu, exact_coarse_gibbs(flat.Hbar));
    CHECK(tf.class_count[0] == tf.items.size());
  }

  TEST_CASE("gap sandwich") {
    for (double K : {0.0, 1.0}) {
      const auto in = benchmark_instance(6, 2, K, 1.0, 0.5, 1.0, Strategy::splitting);
      const ABTable t = build_ab_table(in.g.coarse, in.mu, exact_coarse_gibbs(in.Hbar));
      GapReport r;
      r.N = 6;
      r.q = 2;
      r.beta = 1.0;
      r.K = K;
      r.J = 1.0;
      r.lambda_c = spectral_gap(build_mh_kernel(in.H), in.mu);
      r.lambda_cg = spectral_gap(build_two_level_kernel(TwoLevelRule(in.H, in.Hbar, Strategy::splitting)), in.mu);
      r.A_inf = t.A_inf;
      r.gamma_lo = t.B_min;
      r.gamma_hi = t.B_max;
      CHECK(verify_gap_sandwich(r));
      CHECK(r.sandwich_ok);
      if (K == 0.0) CHECK(r.lambda_cg == doctest::Approx(r.lambda_c).epsilon(1e-10));
      std::ostringstream o;
      write_gap_csv_header(o);
      write_gap_csv_row(o, r);
      CHECK(o.str().rfind("N,q,beta,K,J,lambda_c,lambda_CG,A_inf,gamma_lo,gamma_hi,sandwich_ok\n", 0) == 0);
    }
    GapReport broken;
    broken.lambda_c = 0.1;
    broken.lambda_cg = 0.5;
    CHECK_THROWS_AS(verify_gap_sandwich(broken), std::runtime_error);
  }

  TEST_CASE("relative entropy") {
    const MeasureVector a = from_log_weights({0.0, 1.0, 2.0});
    CHECK(relative_entropy_specific(a, a, 4) == 0.0);
    const MeasureVector b = from_log_weights({0.0, 0.0, 0.0});
    const double expect = (a.p[0] * std::log(a.p[0] * 3) + a.p[1] * std::log(a.p[1] * 3) +
                           a.p[2] * std::log(a.p[2] * 3)) / 4;
    CHECK(relative_entropy_specific(a, b, 4) == doctest::Approx(expect).epsilon(1e-13));
    MeasureVector z = b;
    z.p[0] = 0.0;
    CHECK_THROWS(relative_entropy_specific(z, b, 4));

    const auto g = build_geometry(1, 6, 2);
    const Hamiltonian H0 = benchmark_H(g.lattice, 1.0, 1.0, 0.0, 0.0);
    const auto Hbar = CoarseHamiltonian::compress(H0, g.coarse, Compression::full);
    CHECK(relative_entropy_specific(exact_coarse_gibbs(Hbar), exact_marginal(exact_gibbs(H0), g.coarse), 6) <
          1e-14);
  }

  TEST_CASE("total variation and mixing") {
    CHECK(total_variation({0.5, 0.5}, {0.5, 0.5}) == 0.0);
    CHECK(total_variation({1.0, 0.0}, {0.0, 1.0}) == 1.0);

    const auto in = benchmark_instance(6, 2, 1.0, 1.0, 0.3, 1.0, Strategy::corrections);
    const DenseKernel K = build_mh_kernel(in.H);
    const MixingTimes m = mixing_time_bound(K, in.mu, spectral_gap(K, in.mu));
    CHECK(m.exact_found);
    CHECK(m.exact <= m.bound);
    CHECK_THROWS(mixing_time_bound(K, in.mu, 0.0));

    const auto flat = benchmark_instance(4, 1, 1.0, 1.0, 0.0, 0.0, Strategy::corrections);
    const auto tv = tv_decay(build_mh_kernel(flat.H), flat.mu, 30);
    for (std::size_t i = 1; i < tv.size(); ++i) CHECK(tv[i] <= tv[i - 1] + 1e-15);
  }
}
