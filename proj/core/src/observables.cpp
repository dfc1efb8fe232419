#include "mlcg/observables.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mlcg/samplers.hpp"

namespace mlcg {

namespace {

double t_quantile_975(std::size_t dof) {
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

CurvePoint measure_point(const Sampler& sampler, ChainState& state, double h, const SweepConfig& cfg) {
  for (std::uint64_t i = 0; i < cfg.burn_in; ++i) sampler.step(state);
  const double N = static_cast<double>(state.sigma.size());
  std::vector<double> samples;
  samples.reserve(cfg.samples);
  for (std::uint64_t s = 0; s < cfg.samples; ++s) {
    for (std::uint64_t i = 0; i < cfg.sample_stride; ++i) sampler.step(state);
    samples.push_back(static_cast<double>(std::accumulate(state.eta.begin(), state.eta.end(), 0)) / N);
  }
  CurvePoint p;
  p.h = h;
  if (samples.empty()) return p;
  p.mean = mean_of(samples);
  if (samples.size() >= 4) p.std_error = batch_means_ci(samples, std::min<std::size_t>(20, samples.size() / 2)).std_error;
  return p;
}

}  // namespace

double coverage(const MicroConfig& sigma) {
  if (sigma.empty()) return 0.0;
  return static_cast<double>(occupied_count(sigma)) / static_cast<double>(sigma.size());
}

std::pair<HysteresisCurve, HysteresisCurve> hysteresis_sweep(const Sampler& sampler, const SweepConfig& cfg,
                                                             MicroConfig initial) {
  if (cfg.schedule.empty()) throw std::invalid_argument("hysteresis schedule is empty");
  for (std::size_t i = 1; i < cfg.schedule.size(); ++i) {
    if (!(cfg.schedule[i] > cfg.schedule[i - 1])) throw std::invalid_argument("hysteresis schedule must ascend");
  }
  const std::size_t N = sampler.geometry().fine.sites;
  ChainState state(sampler.geometry(), std::move(initial), Rng(cfg.seed));
  std::pair<HysteresisCurve, HysteresisCurve> loop;
  loop.first.branch = Branch::up;
  loop.second.branch = Branch::down;
  for (double h : cfg.schedule) {
    const Sampler at_h = sampler.with_field(std::vector<double>(N, cfg.field_sign * h));
    loop.first.points.push_back(measure_point(at_h, state, h, cfg));
  }
  for (auto it = cfg.schedule.rbegin(); it != cfg.schedule.rend(); ++it) {
    const Sampler at_h = sampler.with_field(std::vector<double>(N, cfg.field_sign * *it));
    loop.second.points.push_back(measure_point(at_h, state, *it, cfg));
  }
  return loop;
}

double l2_error(const HysteresisCurve& curve, const HysteresisCurve& reference) {
  if (curve.points.size() != reference.points.size()) throw std::invalid_argument("curves have different grids");
  double ss = 0.0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (std::abs(curve.points[i].h - reference.points[i].h) > 1e-12) {
      throw std::invalid_argument("curves have different field grids");
    }
    const double d = curve.points[i].mean - reference.points[i].mean;
    ss += d * d;
  }
  return std::sqrt(ss);
}

double l2_error(const std::pair<HysteresisCurve, HysteresisCurve>& loop,
                const std::pair<HysteresisCurve, HysteresisCurve>& reference) {
  const double up = l2_error(loop.first, reference.first);
  const double down = l2_error(loop.second, reference.second);
  return std::sqrt(up * up + down * down);
}

void write_hysteresis_csv(std::ostream& out, const std::pair<HysteresisCurve, HysteresisCurve>& loop) {
  out << "branch,h,coverage,std_error\n";
  char buf[128];
  for (const auto* curve : {&loop.first, &loop.second}) {
    const char* name = curve->branch == Branch::up ? "up" : "down";
    for (const auto& p : curve->points) {
      std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.12g\n", name, p.h, p.mean, p.std_error);
      out << buf;
    }
  }
}

Phase minority_phase(const MicroConfig& sigma) {
  return 2 * static_cast<std::size_t>(occupied_count(sigma)) <= sigma.size() ? Phase::occupied : Phase::vacant;
}

PatternStats pattern_stats(const LatticeGeometry& geom, const MicroConfig& sigma, Phase phase) {
  if (geom.dim != 2) throw std::invalid_argument("pattern_stats needs a 2D lattice");
  if (sigma.size() != geom.sites) throw std::invalid_argument("configuration does not match the lattice");
  const std::uint8_t want = phase == Phase::occupied ? 1 : 0;

  std::vector<std::size_t> parent(geom.sites);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (Site x = 0; x < geom.sites; ++x) {
    if (sigma[x] != want) continue;
    const auto [row, col] = geom.coords(x);
    for (Site y : {geom.site_at(row, col + 1), geom.site_at(row + 1, col)}) {
      if (sigma[y] != want) continue;
      const std::size_t a = find(x);
      const std::size_t b = find(y);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::size_t> area(geom.sites, 0);
  for (Site x = 0; x < geom.sites; ++x) {
    if (sigma[x] == want) ++area[find(x)];
  }

  PatternStats out;
  std::vector<double> diameters;
  for (Site x = 0; x < geom.sites; ++x) {
    if (area[x] == 0) continue;
    out.areas.push_back(area[x]);
    diameters.push_back(2.0 * std::sqrt(static_cast<double>(area[x]) / M_PI));
  }
  std::sort(out.areas.begin(), out.areas.end());
  out.feature_count = diameters.size();
  if (diameters.empty()) return out;
  out.defined = true;
  out.mean_diameter = mean_of(diameters);
  out.std_diameter = sample_std(diameters, out.mean_diameter);
  out.ci_low = out.ci_high = out.mean_diameter;
  if (diameters.size() >= 2) {
    const double half = t_quantile_975(diameters.size() - 1) * out.std_diameter /
                        std::sqrt(static_cast<double>(diameters.size()));
    out.ci_low -= half;
    out.ci_high += half;
  }
  return out;
}

BatchMeans batch_means_ci(const std::vector<double>& samples, std::size_t batches) {
  if (batches < 2) throw std::invalid_argument("batch means needs at least 2 batches");
  if (samples.size() < batches) throw std::invalid_argument("fewer samples than batches");
  const std::size_t per = samples.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += samples[b * per + i];
    means[b] = s / static_cast<double>(per);
  }
  BatchMeans out;
  out.mean = mean_of(means);
  out.std = sample_std(means, out.mean);
  out.std_error = out.std / std::sqrt(static_cast<double>(batches));
  const double half = t_quantile_975(batches - 1) * out.std_error;
  out.ci_low = out.mean - half;
  out.ci_high = out.mean + half;
  return out;
}

}  // namespace mlcg
