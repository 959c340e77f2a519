#pragma once

// On-disk formats: field and spectrum dumps, environment archives, event
// logs, measure/survey/eigen CSVs, flat key=value run configs, manifests.

#include <algorithm>
#include <bit>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "krsbm/brwre.hpp"
#include "krsbm/environment.hpp"
#include "krsbm/pam.hpp"
#include "krsbm/spectral.hpp"

namespace krsbm {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace fs = std::filesystem;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string site_string(const Site& o, int d) {
  return d == 1 ? std::to_string(o[0]) : std::to_string(o[0]) + ":" + std::to_string(o[1]);
}

/// Full-string double parse; subnormals allowed.
inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

inline Site parse_site(const std::string& s) {
  const auto c = s.find(':');
  if (c == std::string::npos) return {std::stoi(s), 0};
  return {std::stoi(s.substr(0, c)), std::stoi(s.substr(c + 1))};
}

class IoError : public std::runtime_error {
 public:
  IoError(const fs::path& p, const std::string& what) : std::runtime_error(p.string() + ": " + what) {}
};

inline std::ofstream open_out(const fs::path& p, bool binary = false) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError(p, "cannot open for writing");
  return f;
}

inline std::ifstream open_in(const fs::path& p, bool binary = false) {
  std::ifstream f(p, binary ? std::ios::binary : std::ios::in);
  if (!f) throw IoError(p, "cannot open for reading");
  return f;
}

// ---- field dumps ----------------------------------------------------------

inline void write_field(std::ostream& os, const Field& u, Flavor flavor) {
  const LatticeSpec& s = u.spec;
  os << "n,L,d,flavor\n" << s.n << ',' << s.L << ',' << s.d << ',' << to_string(flavor) << "\nindex,value\n";
  for (std::size_t i = 0; i < u.size(); ++i) os << i << ',' << fmt_double(u.values[i]) << '\n';
}

inline std::string expect_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(std::string("unexpected end of input reading ") + what);
  return line;
}

inline Field read_field(std::istream& is, Flavor* flavor = nullptr) {
  if (expect_line(is, "field header") != "n,L,d,flavor") throw std::runtime_error("field dump: bad header");
  std::stringstream h(expect_line(is, "field header"));
  std::string tok;
  int v[3];
  for (int& x : v) {
    std::getline(h, tok, ',');
    x = std::stoi(tok);
  }
  std::getline(h, tok);
  if (flavor) *flavor = flavor_from_string(tok);
  Field u(LatticeSpec(v[0], v[1], v[2]));
  if (expect_line(is, "field columns") != "index,value") throw std::runtime_error("field dump: bad column line");
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::string row = expect_line(is, "field rows");
    const auto c = row.find(',');
    if (c == std::string::npos || std::stoul(row.substr(0, c)) != i) throw std::runtime_error("field dump: bad row");
    u.values[i] = parse_double(row.substr(c + 1));
  }
  return u;
}

inline void write_field(const fs::path& p, const Field& u, Flavor flavor) {
  auto f = open_out(p);
  write_field(f, u, flavor);
}

inline Field read_field(const fs::path& p, Flavor* flavor = nullptr) {
  auto f = open_in(p);
  try {
    return read_field(f, flavor);
  } catch (const std::exception& e) {
    throw IoError(p, e.what());
  }
}

/// Binary layout: "KRSF", int32 n, L, d, flavor, then size() doubles.
inline void write_field_binary(const fs::path& p, const Field& u, Flavor flavor) {
  auto f = open_out(p, true);
  const std::int32_t h[4] = {u.spec.n, u.spec.L, u.spec.d, std::int32_t(flavor)};
  f.write("KRSF", 4);
  f.write(reinterpret_cast<const char*>(h), sizeof h);
  f.write(reinterpret_cast<const char*>(u.values.data()), std::streamsize(u.size() * sizeof(double)));
}

inline Field read_field_binary(const fs::path& p, Flavor* flavor = nullptr) {
  auto f = open_in(p, true);
  char magic[4];
  std::int32_t h[4];
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(h), sizeof h);
  if (!f || std::memcmp(magic, "KRSF", 4) != 0) throw IoError(p, "not a binary field dump");
  if (flavor) *flavor = Flavor(h[3]);
  Field u(LatticeSpec(h[0], h[1], h[2]));
  f.read(reinterpret_cast<char*>(u.values.data()), std::streamsize(u.size() * sizeof(double)));
  if (!f) throw IoError(p, "truncated binary field dump");
  return u;
}

inline void write_spectrum(std::ostream& os, const SpectrumCoeffs& c) {
  const LatticeSpec& s = c.spec;
  os << "n,L,d,flavor\n" << s.n << ',' << s.L << ',' << s.d << ',' << to_string(c.flavor) << "\nk,coefficient\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    const DualIndex k = c.mode(i);
    os << site_string(k.m, s.d) << ',' << fmt_double(c.coeffs[i]) << '\n';
  }
}

inline void write_spectrum(const fs::path& p, const SpectrumCoeffs& c) {
  auto f = open_out(p);
  write_spectrum(f, c);
}

// ---- environment archives ---------------------------------------------------

inline void write_env_archive(std::ostream& os, const EnhancedEnvironment& env) {
  const LatticeSpec& s = env.spec();
  os << "krsbm-env 1\n"
     << "n=" << s.n << "\nL=" << s.L << "\nd=" << s.d << "\ndistribution=" << to_string(env.noise.distribution)
     << "\nseed=" << env.noise.seed << "\nkappa_n=" << fmt_double(env.kappa_n) << "\nc_n=" << fmt_double(env.c_n)
     << "\nnu=" << fmt_double(env.nu) << '\n';
  os << "[xi]\n";
  write_field(os, env.noise.xi, Flavor::neumann);
  os << "[X]\n";
  write_field(os, env.X, Flavor::neumann);
  if (env.resonant_renormalized) {
    os << "[resonant_renormalized]\n";
    write_field(os, *env.resonant_renormalized, Flavor::neumann);
  }
}

inline EnhancedEnvironment read_env_archive(std::istream& is) {
  if (expect_line(is, "archive magic") != "krsbm-env 1") throw std::runtime_error("not an environment archive");
  std::map<std::string, std::string> kv;
  for (const char* key : {"n", "L", "d", "distribution", "seed", "kappa_n", "c_n", "nu"}) {
    const std::string line = expect_line(is, key);
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.substr(0, eq) != key)
      throw std::runtime_error(std::string("archive header: expected ") + key);
    kv[key] = line.substr(eq + 1);
  }
  EnhancedEnvironment env;
  env.noise.spec = LatticeSpec(std::stoi(kv["n"]), std::stoi(kv["L"]), std::stoi(kv["d"]));
  env.noise.distribution = distribution_from_string(kv["distribution"]);
  env.noise.seed = std::stoull(kv["seed"]);
  env.kappa_n = parse_double(kv["kappa_n"]);
  env.c_n = parse_double(kv["c_n"]);
  env.nu = parse_double(kv["nu"]);
  auto block = [&](const char* tag) {
    if (expect_line(is, tag) != std::string("[") + tag + "]") throw std::runtime_error(std::string("missing block ") + tag);
    Field u = read_field(is);
    if (u.spec.n != env.noise.spec.n || u.spec.L != env.noise.spec.L || u.spec.d != env.noise.spec.d)
      throw std::runtime_error(std::string("block ") + tag + " does not match the archive header");
    return u;
  };
  env.noise.xi = block("xi");
  env.X = block("X");
  if (env.noise.spec.d == 2) env.resonant_renormalized = block("resonant_renormalized");
  return env;
}

inline void write_env_archive(const fs::path& p, const EnhancedEnvironment& env) {
  auto f = open_out(p);
  write_env_archive(f, env);
}

inline EnhancedEnvironment read_env_archive(const fs::path& p) {
  if (!fs::exists(p)) throw IoError(p, "environment archive not found");
  auto f = open_in(p);
  try {
    return read_env_archive(f);
  } catch (const std::exception& e) {
    throw IoError(p, e.what());
  }
}

// ---- event logs -------------------------------------------------------------

/// "KRSE", int32 n, d, L_max, pad, f64 horizon, weight; then packed
/// 28-byte records: f64 time, u64 id, u32 kind, i32 x, i32 y.
inline void write_event_log(const fs::path& p, const SimulationResult& run) {
  auto f = open_out(p, true);
  const std::int32_t h[4] = {run.n, run.d, run.L_max, 0};
  const double g[2] = {run.horizon, run.weight};
  f.write("KRSE", 4);
  f.write(reinterpret_cast<const char*>(h), sizeof h);
  f.write(reinterpret_cast<const char*>(g), sizeof g);
  char rec[28];
  for (const EventRecord& e : run.events) {
    const std::uint32_t k = std::uint32_t(e.kind);
    std::memcpy(rec, &e.time, 8);
    std::memcpy(rec + 8, &e.id, 8);
    std::memcpy(rec + 16, &k, 4);
    std::memcpy(rec + 20, &e.offset[0], 4);
    std::memcpy(rec + 24, &e.offset[1], 4);
    f.write(rec, sizeof rec);
  }
}

inline std::vector<EventRecord> read_event_log(const fs::path& p) {
  auto f = open_in(p, true);
  char magic[4];
  char skip[32];
  f.read(magic, 4);
  f.read(skip, 32);
  if (!f || std::memcmp(magic, "KRSE", 4) != 0) throw IoError(p, "not an event log");
  std::vector<EventRecord> out;
  char rec[28];
  while (f.read(rec, sizeof rec)) {
    EventRecord e;
    std::uint32_t k;
    std::memcpy(&e.time, rec, 8);
    std::memcpy(&e.id, rec + 8, 8);
    std::memcpy(&k, rec + 16, 4);
    std::memcpy(&e.offset[0], rec + 20, 4);
    std::memcpy(&e.offset[1], rec + 24, 4);
    if (k > 4) throw IoError(p, "bad event kind");
    e.kind = EventKind(k);
    out.push_back(e);
  }
  if (f.gcount() != 0) throw IoError(p, "truncated event record");
  return out;
}

// ---- CSV reports ------------------------------------------------------------

inline void write_measure_csv(std::ostream& os, const EmpiricalMeasurePath& m, int d, bool header = true) {
  if (header) os << "t,L,site,mass\n";
  for (std::size_t ti = 0; ti < m.times.size(); ++ti)
    for (std::size_t li = 0; li < m.Ls.size(); ++li)
      for (const auto& [o, c] : m.atoms[ti][li])
        os << fmt_double(m.times[ti]) << ',' << m.Ls[li] << ',' << site_string(o, d) << ','
           << fmt_double(m.weight * double(c)) << '\n';
}

inline void write_survey_csv(std::ostream& os, const std::vector<SurveyRow>& rows) {
  os << "quantity,n,L,alpha,p,q,flavor,value,seed\n";
  auto inf = [](double v) { return std::isinf(v) ? std::string("inf") : fmt_double(v); };
  for (const SurveyRow& r : rows)
    os << r.quantity << ',' << r.n << ',' << r.L << ',' << fmt_double(r.alpha) << ',' << inf(r.p) << ',' << inf(r.q)
       << ',' << to_string(r.flavor) << ',' << fmt_double(r.value) << ',' << r.seed << '\n';
}

inline void write_eigen_report(std::ostream& os, const EigenPair& e) {
  os << "lambda,residual,min_interior_value\n"
     << fmt_double(e.lambda) << ',' << fmt_double(e.residual) << ',' << fmt_double(e.min_interior) << '\n';
}

// ---- run configuration ------------------------------------------------------

/// Flat text config: one `key = value` per line, `#` starts a comment,
/// lists are comma separated, integer ranges may be written `a..b`.
struct RunConfig {
  std::vector<int> n{16};
  std::vector<int> L{2};
  int L_max = 4;
  int d = 2;
  Distribution distribution = Distribution::gaussian;
  std::vector<std::uint64_t> seeds{1};
  double alpha = 0.8;
  double eps = 0.1;
  double p = std::numeric_limits<double>::infinity();
  double q = std::numeric_limits<double>::infinity();
  double T = 0.25;
  double dt = 1e-3;
  std::size_t replicas = 100;
  std::size_t cap = 1000000;
  std::string output = "out";
  std::string env_dir;  // empty: <output>/env
  std::vector<double> times;  // empty: {T}
  std::vector<double> R{2, 4, 6, 8};
  std::string phi = "bump";
  double phi_amplitude = 1.0;
  Scheme scheme = Scheme::splitting;
  bool zero_potential = false;
  bool eigen = true;
  bool events = true;

  fs::path env_path() const { return env_dir.empty() ? fs::path(output) / "env" : fs::path(env_dir); }
  std::vector<double> snapshot_times() const { return times.empty() ? std::vector<double>{T} : times; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string t;
  while (std::getline(ss, t, ',')) {
    t = trim(t);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  T v{};
  try {
    if constexpr (std::is_same_v<T, double>) {
      v = s == "inf" ? std::numeric_limits<double>::infinity() : std::stod(s, &used);
      if (s == "inf") used = s.size();
    } else if constexpr (std::is_signed_v<T>) {
      v = T(std::stoll(s, &used));
    } else {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      v = T(std::stoull(s, &used));
    }
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::invalid_argument("config: bad value '" + s + "' for " + key);
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const std::string& t : split_list(v)) {
    const auto dots = t.find("..");
    if constexpr (std::is_integral_v<T>) {
      if (dots != std::string::npos) {
        const T a = parse_number<T>(key, t.substr(0, dots)), b = parse_number<T>(key, t.substr(dots + 2));
        if (b < a) throw std::invalid_argument("config: empty range in " + key);
        for (T x = a; x <= b; ++x) out.push_back(x);
        continue;
      }
    }
    out.push_back(parse_number<T>(key, t));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "' for " + key);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt_double(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "n",     "L",      "L_max",    "d",         "distribution", "seeds",  "alpha",         "eps",
      "p",     "q",      "T",        "dt",        "replicas",     "cap",    "output",        "env_dir",
      "times", "R",      "phi",      "phi_amplitude", "scheme",   "zero_potential", "eigen", "events"};
  return keys;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "n") c.n = parse_list<int>(key, v);
  else if (key == "L") c.L = parse_list<int>(key, v);
  else if (key == "L_max") c.L_max = parse_number<int>(key, v);
  else if (key == "d") c.d = parse_number<int>(key, v);
  else if (key == "distribution") c.distribution = distribution_from_string(v);
  else if (key == "seeds") c.seeds = parse_list<std::uint64_t>(key, v);
  else if (key == "alpha") c.alpha = parse_number<double>(key, v);
  else if (key == "eps") c.eps = parse_number<double>(key, v);
  else if (key == "p") c.p = parse_number<double>(key, v);
  else if (key == "q") c.q = parse_number<double>(key, v);
  else if (key == "T") c.T = parse_number<double>(key, v);
  else if (key == "dt") c.dt = parse_number<double>(key, v);
  else if (key == "replicas") c.replicas = parse_number<std::size_t>(key, v);
  else if (key == "cap") c.cap = parse_number<std::size_t>(key, v);
  else if (key == "output") c.output = v;
  else if (key == "env_dir") c.env_dir = v;
  else if (key == "times") c.times = parse_list<double>(key, v);
  else if (key == "R") c.R = parse_list<double>(key, v);
  else if (key == "phi") c.phi = v;
  else if (key == "phi_amplitude") c.phi_amplitude = parse_number<double>(key, v);
  else if (key == "scheme") c.scheme = scheme_from_string(v);
  else if (key == "zero_potential") c.zero_potential = parse_bool(key, v);
  else if (key == "eigen") c.eigen = parse_bool(key, v);
  else if (key == "events") c.events = parse_bool(key, v);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

/// Throws std::invalid_argument describing the first violated rule.
inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (c.n.empty()) fail("n must list at least one resolution");
  for (int n : c.n)
    if (n < 1) fail("n must be >= 1");
  if (c.d != 1 && c.d != 2) fail("d must be 1 or 2");
  if (c.L_max < 2 || c.L_max % 2) fail("L_max must be even and >= 2");
  if (c.L.empty()) fail("L must list at least one box size");
  for (int L : c.L)
    if (L < 2 || L % 2 || L > c.L_max) fail("every L must be even, >= 2 and <= L_max");
  if (c.seeds.empty()) fail("seeds must be given explicitly");
  if (!(c.T > 0.0)) fail("T must be positive");
  if (!(c.dt > 0.0) || c.dt > c.T) fail("dt must lie in (0, T]");
  if (c.replicas < 1) fail("replicas must be >= 1");
  if (c.cap < 1) fail("cap must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (!(c.eps > 0.0)) fail("eps must be positive");
  if (!(c.p >= 1.0) || !(c.q >= 1.0)) fail("p and q must be >= 1");
  if (c.output.empty()) fail("output must be set");
  for (double t : c.times)
    if (t < 0.0 || t > c.T) fail("times must lie in [0, T]");
  if (c.R.size() < 2) fail("R needs at least two thresholds");
  for (std::size_t i = 1; i < c.R.size(); ++i)
    if (!(c.R[i] > c.R[i - 1])) fail("R must be strictly increasing");
  if (c.phi != "bump" && c.phi != "mode") fail("phi must be bump or mode");
  if (!(c.phi_amplitude > 0.0)) fail("phi_amplitude must be positive");
}

inline RunConfig parse_config(std::istream& is) {
  RunConfig c;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (seen.count(key)) throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key " + key);
    seen[key] = lineno;
    set_config_value(c, key, line.substr(eq + 1));
  }
  return c;
}

inline RunConfig load_config(const fs::path& p) {
  auto f = open_in(p);
  try {
    return parse_config(f);
  } catch (const std::exception& e) {
    throw IoError(p, e.what());
  }
}

/// Every key with its effective value, in config_keys() order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  using detail::join;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto num = [](double v) { return std::isinf(v) ? std::string("inf") : fmt_double(v); };
  return {{"n", join(c.n)},
          {"L", join(c.L)},
          {"L_max", std::to_string(c.L_max)},
          {"d", std::to_string(c.d)},
          {"distribution", to_string(c.distribution)},
          {"seeds", join(c.seeds)},
          {"alpha", num(c.alpha)},
          {"eps", num(c.eps)},
          {"p", num(c.p)},
          {"q", num(c.q)},
          {"T", num(c.T)},
          {"dt", num(c.dt)},
          {"replicas", std::to_string(c.replicas)},
          {"cap", std::to_string(c.cap)},
          {"output", c.output},
          {"env_dir", c.env_dir},
          {"times", join(c.times)},
          {"R", join(c.R)},
          {"phi", c.phi},
          {"phi_amplitude", num(c.phi_amplitude)},
          {"scheme", to_string(c.scheme)},
          {"zero_potential", b(c.zero_potential)},
          {"eigen", b(c.eigen)},
          {"events", b(c.events)}};
}

inline std::string config_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
  return out;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the data-relevant configuration; output locations are excluded
/// so identical runs into different directories share a hash.
inline std::string config_hash(const RunConfig& c, const std::string& command) {
  std::string canon = "command = " + command + "\n";
  for (const auto& [k, v] : config_entries(c))
    if (k != "output" && k != "env_dir") canon += k + " = " + v + "\n";
  return hex64(fnv1a(canon));
}

// ---- manifest ---------------------------------------------------------------

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline std::string file_digest(const fs::path& p) {
  auto f = open_in(p, true);
  std::ostringstream ss;
  ss << f.rdbuf();
  return hex64(fnv1a(ss.str()));
}

struct RunManifest {
  std::string command;
  RunConfig config;
  std::string started;
  nlohmann::json derived = nlohmann::json::array();
  std::vector<fs::path> outputs;

  void add_constants(const EnhancedEnvironment& env) {
    derived.push_back({{"n", env.spec().n},
                       {"L", env.spec().L},
                       {"d", env.spec().d},
                       {"seed", env.noise.seed},
                       {"kappa_n", env.kappa_n},
                       {"c_n", env.c_n},
                       {"nu", env.nu}});
  }

  nlohmann::json to_json(const std::string& finished) const {
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_entries(config)) cfg[k] = v;
    nlohmann::json inv = nlohmann::json::array();
    const fs::path root(config.output);
    std::vector<fs::path> sorted = outputs;
    std::sort(sorted.begin(), sorted.end());
    for (const fs::path& p : sorted)
      inv.push_back({{"path", fs::relative(p, root).generic_string()},
                     {"bytes", fs::file_size(p)},
                     {"fnv1a", file_digest(p)}});
    return {{"command", command},
            {"tool_version", kToolVersion},
            {"config_hash", config_hash(config, command)},
            {"config", cfg},
            {"derived", derived},
            {"outputs", inv},
            {"timestamps", {{"started", started}, {"finished", finished}}}};
  }

  fs::path write() const {
    const fs::path p = fs::path(config.output) / ("manifest_" + command + ".json");
    auto f = open_out(p);
    f << to_json(utc_now()).dump(2) << '\n';
    return p;
  }
};

}  // namespace krsbm
