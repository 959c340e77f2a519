#pragma once

// The five pipeline commands over a validated RunConfig. Outputs go under
// <output>/<command>/, manifests to <output>/manifest_<command>.json.

#include <iostream>
#include <set>

#include "krsbm/io.hpp"
#include "krsbm/verification.hpp"

namespace krsbm {

inline std::string env_file_name(int n, int L, int d, std::uint64_t seed) {
  return "env_d" + std::to_string(d) + "_n" + std::to_string(n) + "_L" + std::to_string(L) + "_s" +
         std::to_string(seed) + ".env";
}

/// Archive for (n, seed); throws on a missing file or a spec mismatch.
inline EnhancedEnvironment load_env(const RunConfig& c, int n, std::uint64_t seed) {
  const fs::path p = c.env_path() / env_file_name(n, c.L_max, c.d, seed);
  EnhancedEnvironment env = read_env_archive(p);
  const LatticeSpec& s = env.spec();
  if (s.n != n || s.L != c.L_max || s.d != c.d || env.noise.seed != seed || env.noise.distribution != c.distribution)
    throw IoError(p, "archive does not match the configuration");
  return env;
}

/// Test function on a box: "mode" is the lowest Dirichlet mode with unit
/// sup, "bump" its square; both scaled by the amplitude.
inline Field test_function(const LatticeSpec& s, const std::string& kind, double amplitude) {
  Field f(s);
  const int power = kind == "bump" ? 2 : 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Site x = s.site(i);
    double v = amplitude;
    for (int a = 0; a < s.d; ++a) v *= std::pow(std::sin(std::numbers::pi * x[a] / s.M()), power);
    f.values[i] = v;
  }
  zero_boundary(f);
  return f;
}

struct CommandOutcome {
  int exit_code = 0;
  std::vector<fs::path> outputs;
  fs::path manifest;
};

namespace detail {

inline std::string tag(int n, std::uint64_t seed) { return "n" + std::to_string(n) + "_s" + std::to_string(seed); }

inline RunManifest start(const RunConfig& c, const std::string& command) {
  validate(c);
  RunManifest m;
  m.command = command;
  m.config = c;
  m.started = utc_now();
  return m;
}

inline CommandOutcome finish(RunManifest& m, int code = 0) {
  CommandOutcome o;
  o.exit_code = code;
  o.outputs = m.outputs;
  o.manifest = m.write();
  return o;
}

}  // namespace detail

inline CommandOutcome cmd_gen_env(const RunConfig& c) {
  RunManifest m = detail::start(c, "gen-env");
  for (int n : c.n)
    for (std::uint64_t seed : c.seeds) {
      const EnhancedEnvironment env = enhance(sample_noise({c.distribution, seed, LatticeSpec(n, c.L_max, c.d)}));
      const fs::path p = c.env_path() / env_file_name(n, c.L_max, c.d, seed);
      write_env_archive(p, env);
      m.add_constants(env);
      m.outputs.push_back(p);
    }
  return detail::finish(m);
}

inline CommandOutcome cmd_solve(const RunConfig& c) {
  RunManifest m = detail::start(c, "solve");
  const fs::path dir = fs::path(c.output) / "solve";
  std::vector<double> times = c.snapshot_times();
  std::sort(times.begin(), times.end());
  for (int n : c.n)
    for (std::uint64_t seed : c.seeds) {
      std::optional<EnhancedEnvironment> env;
      if (!c.zero_potential) {
        env = load_env(c, n, seed);
        m.add_constants(*env);
      }
      for (int L : c.L) {
        const LatticeSpec box(n, L, c.d);
        const Field V = env ? potential_on_box(*env, L) : Field(box);
        Field w = test_function(box, c.phi, c.phi_amplitude);
        double now = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
          w = semigroup_apply(V, times[k] - now, w, {c.dt, c.scheme});
          now = times[k];
          const fs::path p = dir / ("traj_" + detail::tag(n, seed) + "_L" + std::to_string(L) + "_k" +
                                    std::to_string(k) + ".csv");
          write_field(p, w, Flavor::dirichlet);
          m.outputs.push_back(p);
        }
        if (c.eigen) {
          const fs::path p = dir / ("eigen_" + detail::tag(n, seed) + "_L" + std::to_string(L) + ".csv");
          auto f = open_out(p);
          write_eigen_report(f, principal_eigenpair(V));
          m.outputs.push_back(p);
        }
      }
    }
  return detail::finish(m);
}

inline std::vector<int> measure_boxes(const RunConfig& c) {
  std::set<int> s(c.L.begin(), c.L.end());
  s.insert(c.L_max);
  return {s.begin(), s.end()};
}

inline CommandOutcome cmd_simulate(const RunConfig& c) {
  RunManifest m = detail::start(c, "simulate");
  const fs::path dir = fs::path(c.output) / "simulate";
  std::vector<double> times = c.snapshot_times();
  std::sort(times.begin(), times.end());
  const std::vector<int> Ls = measure_boxes(c);
  for (int n : c.n)
    for (std::uint64_t seed : c.seeds) {
      const EnhancedEnvironment env = load_env(c, n, seed);
      m.add_constants(env);
      const Field ambient = c.zero_potential ? Field(env.spec()) : potential(env);
      const fs::path runs = dir / ("runs_" + detail::tag(n, seed) + ".csv");
      auto rf = open_out(runs);
      rf << "replica,exploded,stopped_at,events,particles\n";
      for (std::size_t r = 0; r < c.replicas; ++r) {
        const SimulationResult run = simulate(ambient, {c.T, seed, r, c.cap, c.events});
        const std::string stem = detail::tag(n, seed) + "_r" + std::to_string(r);
        rf << r << ',' << (run.exploded ? 1 : 0) << ',' << fmt_double(run.stopped_at) << ',' << run.event_count << ','
           << run.particles.size() << '\n';
        if (c.events) {
          const fs::path p = dir / ("events_" + stem + ".bin");
          write_event_log(p, run);
          m.outputs.push_back(p);
        }
        std::vector<double> reachable;
        for (double t : times)
          if (t <= run.stopped_at) reachable.push_back(t);
        const fs::path p = dir / ("measure_" + stem + ".csv");
        auto f = open_out(p);
        write_measure_csv(f, kill_and_project(run, Ls, reachable), c.d);
        m.outputs.push_back(p);
      }
      m.outputs.push_back(runs);
    }
  return detail::finish(m);
}

/// Writes one JSON line per report to <output>/verify/reports.jsonl and to
/// `echo` when given; exit code 1 if any report fails.
inline CommandOutcome cmd_verify(const RunConfig& c, std::ostream* echo = nullptr) {
  RunManifest m = detail::start(c, "verify");
  const fs::path p = fs::path(c.output) / "verify" / "reports.jsonl";
  auto f = open_out(p);
  const std::string hash = config_hash(c, "verify");
  bool ok = true;
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(c.T * k / 10.0);
  for (int n : c.n)
    for (std::uint64_t seed : c.seeds) {
      const EnhancedEnvironment env = load_env(c, n, seed);
      m.add_constants(env);
      const Field ambient = c.zero_potential ? Field(env.spec()) : potential(env);
      const LatticeSpec box(n, c.L.front(), c.d);
      const Field phi = test_function(box, c.phi, c.phi_amplitude);
      VerifyOptions opt;
      opt.replicas = c.replicas;
      opt.seed = seed;
      opt.cap = c.cap;
      opt.dt = c.dt;
      opt.config_hash = hash;
      std::vector<TestReport> reports;
      reports.push_back(test_moment_duality(ambient, c.T, phi, opt));
      for (TestReport& r : test_martingale_qv(ambient, c.T, phi, opt)) reports.push_back(std::move(r));
      for (TestReport& r : test_laplace_functional(ambient, c.T, phi, {0.0, c.T / 2, c.T}, opt))
        reports.push_back(std::move(r));
      reports.push_back(test_ordering(ambient, c.T, c.L, grid, opt));
      reports.push_back(test_mass_tail(ambient, c.T, c.L, c.R, opt));
      for (TestReport& r : reports) {
        r.details["env_seed"] = seed;
        const std::string line = to_json(r).dump();
        f << line << '\n';
        if (echo) *echo << line << '\n';
        ok = ok && r.pass;
      }
    }
  f.close();
  m.outputs.push_back(p);
  return detail::finish(m, ok ? 0 : 1);
}

inline CommandOutcome cmd_survey(const RunConfig& c) {
  RunManifest m = detail::start(c, "survey");
  SurveyConfig sc;
  sc.ns = c.n;
  sc.L = c.L.front();
  sc.d = c.d;
  sc.seeds = c.seeds;
  sc.alpha = c.alpha;
  sc.eps = c.eps;
  sc.p = c.p;
  sc.q = c.q;
  sc.distribution = c.distribution;
  const fs::path p = fs::path(c.output) / "survey" / "survey.csv";
  auto f = open_out(p);
  write_survey_csv(f, lemma_norm_survey(sc));
  f.close();
  m.outputs.push_back(p);
  return detail::finish(m);
}

inline CommandOutcome run_command(const std::string& command, const RunConfig& c, std::ostream* echo = nullptr) {
  if (command == "gen-env") return cmd_gen_env(c);
  if (command == "solve") return cmd_solve(c);
  if (command == "simulate") return cmd_simulate(c);
  if (command == "verify") return cmd_verify(c, echo);
  if (command == "survey") return cmd_survey(c);
  throw std::invalid_argument("unknown command '" + command + "'");
}

}  // namespace krsbm
