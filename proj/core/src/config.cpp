#include "mlcg/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mlcg {

namespace detail {
// Generated from presets/*.yaml at configure time.
const std::map<std::string, std::string>& embedded_presets();
}  // namespace detail

namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return "";
  return "line " + std::to_string(m.line + 1) + ": ";
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& what) {
  throw ConfigError(where(node) + key + ": " + what);
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key, const char* type) {
  if (!node.IsScalar()) fail(node, key, std::string("expected ") + type);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, key, std::string("expected ") + type + ", got '" + node.Scalar() + "'");
  }
}

double as_double(const YAML::Node& n, const std::string& key) { return scalar<double>(n, key, "a number"); }

std::string as_string(const YAML::Node& n, const std::string& key) { return scalar<std::string>(n, key, "a string"); }

int as_int(const YAML::Node& n, const std::string& key) { return scalar<int>(n, key, "an integer"); }

// Accepts 5000000 as well as 5e6, as long as the value is a whole number.
std::uint64_t as_count(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key, "expected a non-negative integer");
  std::uint64_t v = 0;
  if (YAML::convert<std::uint64_t>::decode(n, v) && n.Scalar().find('-') == std::string::npos) return v;
  double d = 0.0;
  if (YAML::convert<double>::decode(n, d) && d >= 0.0 && d < 1.8e19 && std::floor(d) == d) {
    return static_cast<std::uint64_t>(d);
  }
  fail(n, key, "expected a non-negative integer, got '" + n.Scalar() + "'");
}

template <class T, class F>
std::vector<T> as_list(const YAML::Node& n, const std::string& key, F&& item) {
  if (!n.IsSequence()) fail(n, key, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(item(n[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

// Walks one mapping, dispatching known keys and rejecting the rest.
using Handlers = std::map<std::string, std::function<void(const YAML::Node&, const std::string&)>>;

void visit(const YAML::Node& map, const std::string& section, const Handlers& handlers) {
  if (!map.IsMap()) fail(map, section, "expected a mapping");
  std::set<std::string> seen;
  for (auto it = map.begin(); it != map.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    const std::string path = section.empty() ? key : section + "." + key;
    const auto h = handlers.find(key);
    if (h == handlers.end()) fail(it->first, path, "unknown key");
    if (!seen.insert(key).second) fail(it->first, path, "duplicate key");
    h->second(it->second, path);
  }
}

std::vector<double> parse_schedule(const YAML::Node& n, const std::string& key) {
  if (n.IsSequence()) return as_list<double>(n, key, as_double);
  double lo = 0.0, hi = 0.0;
  std::uint64_t points = 0;
  bool have_lo = false, have_hi = false, have_points = false;
  visit(n, key, {
      {"min", [&](const YAML::Node& v, const std::string& p) { lo = as_double(v, p), have_lo = true; }},
      {"max", [&](const YAML::Node& v, const std::string& p) { hi = as_double(v, p), have_hi = true; }},
      {"points", [&](const YAML::Node& v, const std::string& p) { points = as_count(v, p), have_points = true; }},
  });
  if (!have_lo || !have_hi || !have_points) fail(n, key, "a range needs min, max and points");
  if (points < 2 || !(hi > lo)) fail(n, key, "a range needs points >= 2 and max > min");
  std::vector<double> out(points);
  for (std::uint64_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

const std::set<std::string> kPotentialKinds{"benchmark", "nearest_neighbor", "curie_weiss",
                                            "kac",       "smooth_kac",       "morse_gaussian"};

void validate(const ExperimentConfig& c, const YAML::Node& root) {
  auto node_of = [&](const char* section, const char* key) {
    const YAML::Node s = root[section];
    if (s && s.IsMap() && s[key]) return s[key];
    return s ? s : root;
  };
  const auto& L = c.lattice;
  if (L.d != 1 && L.d != 2) fail(node_of("lattice", "d"), "lattice.d", "must be 1 or 2");
  if (L.n < 2) fail(node_of("lattice", "n"), "lattice.n", "must be at least 2");
  if (L.q < 1 || L.n % L.q != 0) {
    fail(node_of("lattice", "q"), "lattice.q",
         "q=" + std::to_string(L.q) + " does not divide n=" + std::to_string(L.n));
  }
  if (!kPotentialKinds.count(c.potential.kind)) {
    fail(node_of("potential", "kind"), "potential.kind",
         "unknown kind '" + c.potential.kind +
             "' (expected benchmark, nearest_neighbor, curie_weiss, kac, smooth_kac, morse_gaussian)");
  }
  if (!(c.potential.cutoff_tol > 0.0)) fail(node_of("potential", "cutoff_tol"), "potential.cutoff_tol", "must be > 0");
  if (c.potential.S && !(*c.potential.S > 0.0)) fail(node_of("potential", "S"), "potential.S", "must be > 0");
  if (c.potential.cutoff && !(*c.potential.cutoff > 0.0)) {
    fail(node_of("potential", "cutoff"), "potential.cutoff", "must be > 0");
  }
  if (!(c.ensemble.beta >= 0.0)) fail(node_of("ensemble", "beta"), "ensemble.beta", "must be >= 0");
  if (!(c.ensemble.c0 >= 0.0 && c.ensemble.c0 <= 1.0)) fail(node_of("ensemble", "c0"), "ensemble.c0", "must lie in [0,1]");
  for (std::size_t i = 1; i < c.ensemble.h_schedule.size(); ++i) {
    if (!(c.ensemble.h_schedule[i] > c.ensemble.h_schedule[i - 1])) {
      fail(node_of("ensemble", "h_schedule"), "ensemble.h_schedule", "must be strictly ascending");
    }
  }
  if (!c.ensemble.h_schedule.empty() && c.ensemble.kind == Ensemble::microcanonical) {
    fail(node_of("ensemble", "h_schedule"), "ensemble.h_schedule", "a field sweep needs the canonical ensemble");
  }
  if (c.sampler.replicas < 1) fail(node_of("sampler", "replicas"), "sampler.replicas", "must be >= 1");
  if (c.output.format != "csv") fail(node_of("output", "format"), "output.format", "only csv is supported");
  for (int q : c.verify.q) {
    if (q < 1) fail(node_of("verify", "q"), "verify.q", "entries must be >= 1");
  }
  for (const auto& p : c.verify.potentials) {
    if (p != "benchmark" && p != "smooth_kac") {
      fail(node_of("verify", "potentials"), "verify.potentials", "entries must be benchmark or smooth_kac");
    }
  }
}

// Shortest of %.15g..%.17g that reads back exactly.
std::string num(double v) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": malformed config: " + e.msg);
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;

  auto& L = c.lattice;
  auto& P = c.potential;
  auto& E = c.ensemble;
  auto& S = c.sampler;
  auto& O = c.output;
  auto& V = c.verify;
  using N = const YAML::Node&;
  using K = const std::string&;

  visit(root, "", {
      {"name", [&](N n, K k) { c.name = as_string(n, k); }},
      {"lattice", [&](N s, K sk) {
         visit(s, sk, {
             {"d", [&](N n, K k) { L.d = as_int(n, k); }},
             {"n", [&](N n, K k) { L.n = as_int(n, k); }},
             {"q", [&](N n, K k) { L.q = as_int(n, k); }},
         });
       }},
      {"potential", [&](N s, K sk) {
         visit(s, sk, {
             {"kind", [&](N n, K k) { P.kind = as_string(n, k); }},
             {"K", [&](N n, K k) { P.K = as_double(n, k); }},
             {"J", [&](N n, K k) { P.J = as_double(n, k); }},
             {"J0", [&](N n, K k) { P.J0 = as_double(n, k); }},
             {"range", [&](N n, K k) { P.range = as_double(n, k); }},
             {"r_a", [&](N n, K k) { P.r_a = as_double(n, k); }},
             {"r_r", [&](N n, K k) { P.r_r = as_double(n, k); }},
             {"chi", [&](N n, K k) { P.chi = as_double(n, k); }},
             {"cutoff", [&](N n, K k) { P.cutoff = as_double(n, k); }},
             {"cutoff_tol", [&](N n, K k) { P.cutoff_tol = as_double(n, k); }},
             {"S", [&](N n, K k) { P.S = as_double(n, k); }},
             {"L_c", [&](N n, K k) { P.L_c = as_double(n, k); }},
         });
       }},
      {"ensemble", [&](N s, K sk) {
         visit(s, sk, {
             {"kind", [&](N n, K k) {
                try {
                  E.kind = parse_ensemble(as_string(n, k));
                } catch (const ConfigError& e) {
                  fail(n, k, e.what());
                }
              }},
             {"beta", [&](N n, K k) { E.beta = as_double(n, k); }},
             {"field_sign", [&](N n, K k) {
                const std::string v = as_string(n, k);
                if (v == "plus") E.field_sign = 1.0;
                else if (v == "minus") E.field_sign = -1.0;
                else fail(n, k, "expected plus or minus, got '" + v + "'");
              }},
             {"h", [&](N n, K k) { E.h = as_double(n, k); }},
             {"h_schedule", [&](N n, K k) { E.h_schedule = parse_schedule(n, k); }},
             {"c0", [&](N n, K k) { E.c0 = as_double(n, k); }},
         });
       }},
      {"sampler", [&](N s, K sk) {
         visit(s, sk, {
             {"method", [&](N n, K k) {
                try {
                  S.chain.method = parse_method(as_string(n, k));
                } catch (const ConfigError& e) {
                  fail(n, k, e.what());
                }
              }},
             {"strategy", [&](N n, K k) {
                try {
                  S.chain.strategy = parse_strategy(as_string(n, k));
                } catch (const ConfigError& e) {
                  fail(n, k, e.what());
                }
              }},
             {"policy", [&](N n, K k) {
                try {
                  S.chain.policy = parse_policy(as_string(n, k));
                } catch (const ConfigError& e) {
                  fail(n, k, e.what());
                }
              }},
             {"iterations", [&](N n, K k) { S.chain.iterations = as_count(n, k); }},
             {"burn_in", [&](N n, K k) { S.chain.burn_in = as_count(n, k); }},
             {"seed", [&](N n, K k) { S.chain.seed = as_count(n, k); }},
             {"stride", [&](N n, K k) { S.chain.stride = as_count(n, k); }},
             {"samples", [&](N n, K k) { S.samples = as_count(n, k); }},
             {"sample_stride", [&](N n, K k) { S.sample_stride = as_count(n, k); }},
             {"replicas", [&](N n, K k) { S.replicas = as_count(n, k); }},
         });
       }},
      {"output", [&](N s, K sk) {
         visit(s, sk, {
             {"dir", [&](N n, K k) { O.dir = as_string(n, k); }},
             {"csv", [&](N n, K k) { O.csv = as_string(n, k); }},
             {"snapshot_stride", [&](N n, K k) { O.snapshot_stride = as_count(n, k); }},
             {"format", [&](N n, K k) { O.format = as_string(n, k); }},
         });
       }},
      {"verify", [&](N s, K sk) {
         visit(s, sk, {
             {"sizes", [&](N n, K k) { V.sizes = as_list<int>(n, k, as_int); }},
             {"q", [&](N n, K k) { V.q = as_list<int>(n, k, as_int); }},
             {"beta", [&](N n, K k) { V.beta = as_list<double>(n, k, as_double); }},
             {"potentials", [&](N n, K k) { V.potentials = as_list<std::string>(n, k, as_string); }},
         });
       }},
  });
  c.sampler.chain.ensemble = c.ensemble.kind;
  validate(c, root);
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto list = [](const auto& v, auto fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
  };
  auto quoted = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out += '\\';
      out += ch;
    }
    return out + "\"";
  };

  o << "name: " << quoted(c.name) << "\n";
  o << "lattice:\n  d: " << c.lattice.d << "\n  n: " << c.lattice.n << "\n  q: " << c.lattice.q << "\n";
  const auto& P = c.potential;
  o << "potential:\n  kind: " << P.kind << "\n  K: " << num(P.K) << "\n  J: " << num(P.J) << "\n  J0: " << num(P.J0)
    << "\n  range: " << num(P.range) << "\n  r_a: " << num(P.r_a) << "\n  r_r: " << num(P.r_r)
    << "\n  chi: " << num(P.chi) << "\n  cutoff_tol: " << num(P.cutoff_tol) << "\n";
  if (P.cutoff) o << "  cutoff: " << num(*P.cutoff) << "\n";
  if (P.S) o << "  S: " << num(*P.S) << "\n";
  if (P.L_c) o << "  L_c: " << num(*P.L_c) << "\n";
  const auto& E = c.ensemble;
  o << "ensemble:\n  kind: " << to_string(E.kind) << "\n  beta: " << num(E.beta)
    << "\n  field_sign: " << (E.field_sign < 0 ? "minus" : "plus") << "\n  h: " << num(E.h) << "\n  c0: " << num(E.c0)
    << "\n";
  if (!E.h_schedule.empty()) o << "  h_schedule: " << list(E.h_schedule, num) << "\n";
  const auto& S = c.sampler;
  o << "sampler:\n  method: " << to_string(S.chain.method) << "\n  strategy: " << to_string(S.chain.strategy)
    << "\n  policy: " << to_string(S.chain.policy) << "\n  iterations: " << S.chain.iterations
    << "\n  burn_in: " << S.chain.burn_in << "\n  stride: " << S.chain.stride << "\n  samples: " << S.samples
    << "\n  sample_stride: " << S.sample_stride << "\n  replicas: " << S.replicas << "\n";
  if (S.chain.seed) o << "  seed: " << *S.chain.seed << "\n";
  o << "output:\n  dir: " << quoted(c.output.dir) << "\n  csv: " << quoted(c.output.csv)
    << "\n  snapshot_stride: " << c.output.snapshot_stride << "\n  format: " << c.output.format << "\n";
  const auto& V = c.verify;
  auto itos = [](int v) { return std::to_string(v); };
  auto same = [](const std::string& s) { return s; };
  o << "verify:\n  sizes: " << list(V.sizes, itos) << "\n  q: " << list(V.q, itos) << "\n  beta: " << list(V.beta, num)
    << "\n  potentials: " << list(V.potentials, same) << "\n";
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : detail::embedded_presets()) out.push_back(name);
  return out;
}

std::string preset_text(const std::string& name) {
  const auto& presets = detail::embedded_presets();
  const auto it = presets.find(name);
  if (it == presets.end()) {
    std::string known;
    for (const auto& [n, t] : presets) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

}  // namespace mlcg
