#include "mlcg/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "mlcg/observables.hpp"

#ifndef MLCG_VERSION
#define MLCG_VERSION "0.0.0"
#endif

namespace mlcg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

PairPotential base_potential(const PotentialSection& P, const LatticeGeometry& lat) {
  if (P.kind == "nearest_neighbor") return PairPotential::nearest_neighbor(P.K);
  if (P.kind == "curie_weiss") return PairPotential::curie_weiss(P.J, lat);
  if (P.kind == "kac") {
    const PairPotential pot = make_kac(P.J0, lat);
    return P.cutoff ? pot.with_cutoff(*P.cutoff) : pot;
  }
  if (P.kind == "smooth_kac") return make_smooth_kac(P.J0, P.range, lat);
  if (P.kind == "morse_gaussian") {
    const PairPotential unbounded =
        PairPotential::morse_gaussian(P.J0, P.r_a, P.r_r, P.chi, std::numeric_limits<double>::infinity());
    const double L = P.cutoff ? *P.cutoff : static_cast<double>(cutoff_range(unbounded, P.cutoff_tol));
    return unbounded.with_cutoff(L);
  }
  throw ConfigError("potential.kind: unknown kind '" + P.kind + "'");
}

// Runs fn(0..count-1) on up to worker_count() threads. The first exception
// is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t count, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, worker_count()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica) {
  return replica == 0 ? seed : splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * replica));
}

std::string replica_name(const std::string& file, std::size_t replica) {
  if (replica == 0) return file;
  const fs::path p(file);
  return (p.parent_path() / (p.stem().string() + "_r" + std::to_string(replica) + p.extension().string())).string();
}

json ops_json(const OpCounts& o) {
  return json{{"long_range", o.long_range}, {"short_range", o.short_range}, {"coarse", o.coarse}};
}

json stats_json(const ExperimentConfig& c, const Model& model, const Sampler& sampler, const AcceptanceStats& st) {
  const StencilSizes sizes = stencil_sizes(sampler);
  const OpsPrediction pred = predict_ops(sampler, st);
  json j;
  j["method"] = to_string(c.sampler.chain.method);
  j["strategy"] = to_string(c.sampler.chain.strategy);
  j["ensemble"] = to_string(c.ensemble.kind);
  j["d"] = c.lattice.d;
  j["N"] = model.geometry.lattice.sites;
  j["q"] = c.lattice.q;
  j["Q"] = model.geometry.coarse.cell_size;
  j["L"] = model.cutoff;
  if (model.split) {
    j["S"] = model.split->range;
  } else {
    j["S"] = nullptr;
  }
  j["n"] = st.n_coarse_proposed;
  j["m"] = st.n_fine_proposed;
  j["coarse_accepted"] = st.m_coarse_accepted;
  j["fine_accepted"] = st.n_fine_accepted;
  j["stencil_sizes"] = json{{"long_range", sizes.long_range}, {"short_range", sizes.short_range},
                            {"coarse", sizes.coarse}};
  j["measured_ops"] = ops_json(st.ops);
  if (pred.available) {
    j["predicted_ops"] = ops_json(pred.ops);
    j["table_formula"] = pred.table_formula;
  } else {
    j["predicted_ops"] = nullptr;
  }
  if (st.n_coarse_proposed && st.n_fine_proposed) {
    const AcceptanceRates r = average_acceptance(st);
    j["acceptance"] = json{{"coarse", r.coarse}, {"fine", r.fine}, {"total", r.total}};
  }
  return j;
}

json pattern_json(const PatternStats& p, Phase phase) {
  json j;
  j["phase"] = phase == Phase::occupied ? "occupied" : "vacant";
  j["feature_count"] = p.feature_count;
  j["defined"] = p.defined;
  if (p.defined) {
    j["mean_diameter"] = p.mean_diameter;
    j["std_diameter"] = p.std_diameter;
    j["ci_low"] = p.ci_low;
    j["ci_high"] = p.ci_high;
  }
  return j;
}

std::string snapshot_text(const LatticeGeometry& lat, const MicroConfig& sigma) {
  std::ostringstream o;
  write_snapshot(o, lat, sigma);
  return o.str();
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Mean of the replica curves; standard errors combine as independent.
std::pair<HysteresisCurve, HysteresisCurve> average_loops(
    const std::vector<std::pair<HysteresisCurve, HysteresisCurve>>& loops) {
  auto out = loops.front();
  const double R = static_cast<double>(loops.size());
  for (auto* curve : {&out.first, &out.second}) {
    const bool up = curve == &out.first;
    for (std::size_t i = 0; i < curve->points.size(); ++i) {
      double mean = 0.0, var = 0.0;
      for (const auto& l : loops) {
        const CurvePoint& p = (up ? l.first : l.second).points[i];
        mean += p.mean;
        var += p.std_error * p.std_error;
      }
      curve->points[i].mean = mean / R;
      curve->points[i].std_error = std::sqrt(var) / R;
    }
  }
  return out;
}

}  // namespace

MicroConfig initial_state(const ExperimentConfig& c, const LatticeGeometry& lat, std::uint64_t seed, bool sweep) {
  Rng rng(seed, 1);
  if (c.ensemble.kind == Ensemble::microcanonical) return random_config_with_coverage(lat, c.ensemble.c0, rng);
  // Field sweeps start from the phase the first field value favours.
  if (sweep) return MicroConfig(lat.sites, c.ensemble.field_sign < 0 ? 0 : 1);
  return random_config(lat, rng);
}

Model build_model(const ExperimentConfig& c) {
  Geometry g = build_geometry(c.lattice.d, c.lattice.n, c.lattice.q);
  const LatticeGeometry& lat = g.lattice;
  const auto& P = c.potential;
  std::vector<double> field(lat.sites, c.ensemble.field_sign * c.ensemble.h);
  std::optional<SplitPotential> sp;
  if (P.kind == "benchmark") {
    sp = SplitPotential{PairPotential::nearest_neighbor(P.K), PairPotential::curie_weiss(P.J, lat), P.S.value_or(1.0)};
  }
  if (!sp) {
    const PairPotential pot = base_potential(P, lat);
    if (P.S) {
      sp = split(pot, *P.S);
    } else {
      Hamiltonian H(lat, pot, std::move(field), c.ensemble.beta);
      const int L = H.long_table().half_width();
      return Model{std::move(g), std::move(H), L, std::nullopt};
    }
  }
  Hamiltonian H(lat, *sp, std::move(field), c.ensemble.beta);
  const int L = H.long_table().half_width();
  return Model{std::move(g), std::move(H), L, std::move(sp)};
}

Sampler build_sampler(const ExperimentConfig& c, const Model& model) {
  SamplerConfig cfg = c.sampler.chain;
  cfg.ensemble = c.ensemble.kind;
  return Sampler::make(cfg, model.H, model.geometry.coarse);
}

StencilSizes stencil_sizes(const Sampler& sampler) {
  const Hamiltonian& H = sampler.hamiltonian();
  StencilSizes s;
  s.long_range = H.long_table().stencil().size();
  if (const PotentialTable* st = H.short_table()) s.short_range = st->stencil().size();
  if (const CoarseHamiltonian* Hbar = sampler.coarse_hamiltonian()) s.coarse = Hbar->potential().stencil.size();
  return s;
}

OpsPrediction predict_ops(const Sampler& sampler, const AcceptanceStats& st) {
  OpsPrediction p;
  const SamplerConfig& cfg = sampler.config();
  if (cfg.ensemble != Ensemble::canonical) return p;
  const StencilSizes s = stencil_sizes(sampler);
  const std::uint64_t n = st.n_coarse_proposed;
  const std::uint64_t m = st.n_fine_proposed;
  p.available = true;
  switch (cfg.method) {
    case Method::mh:
      p.ops.long_range = n * s.long_range;
      p.ops.short_range = n * s.short_range;
      break;
    case Method::cgmc:
      p.ops.coarse = n * s.coarse;
      break;
    case Method::two_level:
      p.ops.coarse = n * s.coarse;
      p.ops.short_range = m * s.short_range;
      if (cfg.strategy != Strategy::approximate_cg) p.ops.long_range = m * s.long_range;
      break;
  }
  const double Q = static_cast<double>(sampler.geometry().cell_size);
  if (cfg.method == Method::mh) {
    p.table_formula = static_cast<double>(n) * static_cast<double>(s.long_range + s.short_range);
  } else {
    p.table_formula = static_cast<double>(n) * static_cast<double>(s.long_range) / Q +
                      static_cast<double>(m) * static_cast<double>(s.short_range);
  }
  return p;
}

unsigned worker_count() {
  const char* env = std::getenv("MLCG_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) return 1;
  return static_cast<unsigned>(std::min(v, 256L));
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
}

int run_experiment(const ExperimentConfig& c, std::ostream& log) {
  try {
    if (!c.sampler.chain.seed) throw ConfigError("sampler.seed is required (set it in the config or pass --seed)");
    const std::uint64_t seed = *c.sampler.chain.seed;
    const fs::path dir(c.output.dir);
    fs::create_directories(dir);

    const auto t0 = std::chrono::steady_clock::now();
    const Model model = build_model(c);
    const Sampler sampler = build_sampler(c, model);
    const LatticeGeometry& lat = model.geometry.lattice;
    const std::size_t R = c.sampler.replicas;
    const bool sweep = !c.ensemble.h_schedule.empty();
    json stats;
    stats["name"] = c.name;

    if (sweep) {
      SweepConfig sc;
      sc.schedule = c.ensemble.h_schedule;
      sc.burn_in = c.sampler.chain.burn_in ? c.sampler.chain.burn_in : lat.sites * lat.sites;
      sc.samples = c.sampler.samples;
      sc.sample_stride = c.sampler.sample_stride ? c.sampler.sample_stride : lat.sites;
      sc.field_sign = c.ensemble.field_sign;
      std::vector<std::pair<HysteresisCurve, HysteresisCurve>> loops(R);
      parallel_for(R, [&](std::size_t r) {
        SweepConfig mine = sc;
        mine.seed = replica_seed(seed, r);
        loops[r] = hysteresis_sweep(sampler, mine, initial_state(c, lat, mine.seed, true));
      });
      for (std::size_t r = 0; r < R && R > 1; ++r) {
        std::ostringstream o;
        write_hysteresis_csv(o, loops[r]);
        write_atomic((dir / ("hysteresis_r" + std::to_string(r) + ".csv")).string(), o.str());
      }
      std::ostringstream o;
      write_hysteresis_csv(o, R > 1 ? average_loops(loops) : loops.front());
      write_atomic((dir / "hysteresis.csv").string(), o.str());
      stats["sweep"] = json{{"points", sc.schedule.size()}, {"burn_in", sc.burn_in}, {"samples", sc.samples},
                            {"sample_stride", sc.sample_stride}, {"replicas", R}};
      log << "sweep of " << sc.schedule.size() << " field values written to " << (dir / "hysteresis.csv").string()
          << "\n";
    } else {
      std::vector<ChainResult> results(R);
      std::vector<std::vector<std::pair<std::uint64_t, MicroConfig>>> snaps(R);
      parallel_for(R, [&](std::size_t r) {
        SamplerConfig cfg = sampler.config();
        cfg.seed = replica_seed(seed, r);
        const Sampler mine(cfg, sampler.hamiltonian(), sampler.geometry(),
                           sampler.coarse_hamiltonian() ? std::optional(*sampler.coarse_hamiltonian()) : std::nullopt);
        SnapshotHook hook;
        hook.every = c.output.snapshot_stride;
        hook.fn = [&snaps, r](std::uint64_t step, const MicroConfig& s) { snaps[r].emplace_back(step, s); };
        results[r] = run_chain(mine, initial_state(c, lat, *cfg.seed, false), c.ensemble.h, hook);
      });
      json replicas = json::array();
      for (std::size_t r = 0; r < R; ++r) {
        std::ostringstream o;
        write_observable_header(o);
        for (const auto& row : results[r].rows) write_observable_row(o, row);
        write_atomic((dir / replica_name(c.output.csv, r)).string(), o.str());
        for (const auto& [step, s] : snaps[r]) {
          write_atomic((dir / replica_name("snapshot_" + std::to_string(step) + ".pgm", r)).string(),
                       snapshot_text(lat, s));
        }
        write_atomic((dir / replica_name("snapshot_final.pgm", r)).string(), snapshot_text(lat, results[r].final_state));
        json rj = stats_json(c, model, sampler, results[r].stats);
        rj["final_coverage"] = coverage(results[r].final_state);
        if (lat.dim == 2) {
          const Phase phase = minority_phase(results[r].final_state);
          rj["pattern"] = pattern_json(pattern_stats(lat, results[r].final_state, phase), phase);
        }
        replicas.push_back(rj);
      }
      stats["run"] = replicas.front();
      if (R > 1) stats["replicas"] = replicas;
      log << "chain of " << c.sampler.chain.iterations << " steps written to " << (dir / c.output.csv).string() << "\n";
    }
    write_atomic((dir / "stats.json").string(), stats.dump(2) + "\n");

    json manifest;
    manifest["name"] = c.name;
    manifest["config_hash"] = hex(config_hash(c));
    manifest["seed"] = seed;
    manifest["version"] = MLCG_VERSION;
    manifest["compiler"] = __VERSION__;
    manifest["cxx_standard"] = __cplusplus;
    manifest["config"] = serialize_config(c);
    write_atomic((dir / "manifest.json").string(), manifest.dump(2) + "\n");

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_atomic((dir / "timing.json").string(), json{{"wall_seconds", seconds}, {"workers", worker_count()}}.dump(2) + "\n");
    return 0;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

InstanceCheck check_instance(const Hamiltonian& H, const CoarseGeometry& cg, Strategy strategy,
                             const std::string& potential_name) {
  InstanceCheck out;
  out.potential = potential_name;
  out.strategy = strategy;
  const CoarseHamiltonian Hbar = CoarseHamiltonian::compress(H, cg, compression_for(strategy));
  const TwoLevelRule rule(H, Hbar, strategy);
  const DenseKernel Kcg = build_two_level_kernel(rule);
  const DenseKernel Kc = build_mh_kernel(H);
  const MeasureVector mu = exact_gibbs(H);
  out.detailed_balance = check_detailed_balance(Kcg, mu);
  out.stationarity = stationarity_residual(Kcg, mu);

  const MeasureVector mubar0 = exact_coarse_gibbs(Hbar);
  const ABTable table = build_ab_table(cg, mu, mubar0);
  out.factorization = verify_factorization(Kcg, Kc, table);
  out.lemma_deviation = table.max_lemma_deviation;
  out.B_min = table.B_min;
  out.B_max = table.B_max;
  for (int i = 0; i < 4; ++i) out.class_count[i] = table.class_count[i];

  GapReport& g = out.gap;
  g.N = cg.fine.sites;
  g.q = cg.q;
  g.beta = H.beta();
  g.lambda_c = spectral_gap(Kc, mu);
  g.lambda_cg = spectral_gap(Kcg, mu, std::max(1e-10, 10.0 * out.detailed_balance));
  g.A_inf = table.A_inf;
  g.gamma_lo = table.B_min;
  g.gamma_hi = table.B_max;
  try {
    verify_gap_sandwich(g);
  } catch (const std::runtime_error& e) {
    out.gap_error = e.what();
  }
  return out;
}

std::vector<InstanceCheck> verification_matrix(const ExperimentConfig& c) {
  std::vector<InstanceCheck> out;
  const bool bench_cfg = c.potential.kind == "benchmark";
  const double K = bench_cfg ? c.potential.K : 1.0;
  const double J = bench_cfg ? c.potential.J : 1.0;
  const double h = c.ensemble.field_sign * c.ensemble.h;
  for (int n : c.verify.sizes) {
    for (int q : c.verify.q) {
      if (n % q != 0) continue;
      const Geometry g = build_geometry(1, n, q);
      const LatticeGeometry& lat = g.lattice;
      const std::vector<double> field(lat.sites, h);
      for (const auto& name : c.verify.potentials) {
        for (double beta : c.verify.beta) {
          if (name == "benchmark") {
            const SplitPotential sp{PairPotential::nearest_neighbor(K), PairPotential::curie_weiss(J, lat), 1.0};
            const Hamiltonian H(lat, sp, field, beta);
            for (Strategy s : {Strategy::corrections, Strategy::splitting}) {
              out.push_back(check_instance(H, g.coarse, s, name));
              out.back().gap.K = K;
              out.back().gap.J = J;
            }
          } else {
            const double range = std::min(c.potential.range, std::floor(n / 2.0));
            const Hamiltonian H(lat, make_smooth_kac(c.potential.J0, range, lat), field, beta);
            out.push_back(check_instance(H, g.coarse, Strategy::corrections, name));
          }
        }
      }
    }
  }
  return out;
}

int run_verification(const ExperimentConfig& c, std::ostream& log) {
  try {
    const std::vector<InstanceCheck> checks = verification_matrix(c);
    std::ostringstream csv;
    write_gap_csv_header(csv);
    int failures = 0;
    for (const auto& ic : checks) {
      write_gap_csv_row(csv, ic.gap);
      std::vector<std::string> problems;
      if (!(ic.detailed_balance < 1e-12)) problems.push_back("detailed balance " + std::to_string(ic.detailed_balance));
      if (!(ic.stationarity < 1e-12)) problems.push_back("stationarity " + std::to_string(ic.stationarity));
      if (!(ic.factorization < 1e-12)) problems.push_back("factorization " + std::to_string(ic.factorization));
      if (!(ic.lemma_deviation < 1e-12)) problems.push_back("case formula for A " + std::to_string(ic.lemma_deviation));
      if (ic.potential == "benchmark" && (std::abs(ic.B_min - 1.0) > 1e-12 || std::abs(ic.B_max - 1.0) > 1e-12)) {
        problems.push_back("B differs from 1");
      }
      if (ic.potential == "benchmark" && ic.strategy == Strategy::splitting && ic.class_count[3] != 0) {
        problems.push_back(std::to_string(ic.class_count[3]) + " pairs in C4");
      }
      if (!ic.gap_error.empty()) problems.push_back(ic.gap_error);
      char head[160];
      std::snprintf(head, sizeof head, "%-10s %-11s N=%zu q=%d beta=%g", ic.potential.c_str(),
                    to_string(ic.strategy).c_str(), ic.gap.N, ic.gap.q, ic.gap.beta);
      log << (problems.empty() ? "ok   " : "FAIL ") << head;
      for (const auto& p : problems) log << "; " << p;
      log << "\n";
      if (!problems.empty()) ++failures;
    }
    const fs::path dir(c.output.dir);
    fs::create_directories(dir);
    write_atomic((dir / "gap_report.csv").string(), csv.str());
    log << checks.size() - failures << "/" << checks.size() << " instances pass\n";
    return failures == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int report_ops(const std::string& run_dir, std::ostream& out) {
  const fs::path path = fs::path(run_dir) / "stats.json";
  std::ifstream in(path);
  if (!in) {
    out << "error: cannot read " << path.string() << "\n";
    return 1;
  }
  json stats;
  try {
    stats = json::parse(in);
  } catch (const json::exception& e) {
    out << "error: " << path.string() << ": " << e.what() << "\n";
    return 1;
  }
  if (!stats.contains("run")) {
    out << "no operation counts recorded (field sweeps do not keep them)\n";
    return 0;
  }
  const json& r = stats["run"];
  const auto n = r["n"].get<std::uint64_t>();
  const auto m = r["m"].get<std::uint64_t>();
  out << "method " << r["method"].get<std::string>() << ", strategy " << r["strategy"].get<std::string>() << ", "
      << r["ensemble"].get<std::string>() << "\n";
  out << "n = " << n << "  m = " << m << "\n";
  const json& sz = r["stencil_sizes"];
  out << "stencil sizes: long " << sz["long_range"] << ", short " << sz["short_range"] << ", coarse "
      << sz["coarse"] << "\n";
  int status = m <= n ? 0 : 1;
  if (m > n) out << "FAIL m exceeds n\n";
  const json& meas = r["measured_ops"];
  if (r["predicted_ops"].is_null()) {
    out << "measured: long " << meas["long_range"] << ", short " << meas["short_range"] << ", coarse "
        << meas["coarse"] << " (no closed form for this ensemble)\n";
    return status;
  }
  const json& pred = r["predicted_ops"];
  out << "            measured        predicted\n";
  for (const char* key : {"long_range", "short_range", "coarse"}) {
    const auto a = meas[key].get<std::uint64_t>();
    const auto b = pred[key].get<std::uint64_t>();
    char line[160];
    std::snprintf(line, sizeof line, "%-11s %-15llu %-15llu %s\n", key, static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b), a == b ? "ok" : "MISMATCH");
    out << line;
    if (a != b) status = 1;
  }
  out << "table formula: " << r["table_formula"].get<double>() << "\n";
  return status;
}

}  // namespace mlcg
