#pragma once

// Monte Carlo and exact checks tying the particle system to the solver:
// moment duality, martingale and quadratic variation, Laplace functional,
// mass tails and the pathwise ordering across box sizes.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "krsbm/brwre.hpp"
#include "krsbm/pam.hpp"

namespace krsbm {

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double reference = 0.0;
  double standard_error = 0.0;
  std::size_t replicas = 0;
  std::size_t exploded = 0;
  bool exact = false;
  bool pass = false;
  std::string config_hash;
  nlohmann::json details = nlohmann::json::object();
};

/// pass ⇔ |stat − ref| ≤ 3·se (exact: equality) and at most 1% exploded.
inline void finalize(TestReport& r) {
  const bool explode_ok = r.exploded * 100 <= r.replicas + r.exploded;
  const double gap = std::abs(r.statistic - r.reference);
  r.pass = explode_ok && (r.exact ? gap == 0.0 : gap <= 3.0 * r.standard_error);
}

inline nlohmann::json to_json(const TestReport& r) {
  return {{"test", r.name},          {"statistic", r.statistic}, {"reference", r.reference},
          {"standard_error", r.standard_error}, {"replicas", r.replicas}, {"exploded", r.exploded},
          {"exact", r.exact},        {"pass", r.pass},           {"config_hash", r.config_hash},
          {"details", r.details}};
}

struct VerifyOptions {
  std::size_t replicas = 2000;
  std::uint64_t seed = 1;
  std::size_t cap = 1000000;
  double dt = 1e-3;
  std::string config_hash;
};

namespace detail {

/// Welford accumulator; a constant sample has mean exactly equal to it.
struct Moments {
  double m = 0.0, m2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    ++n;
    const double dx = x - m;
    m += dx / double(n);
    m2 += dx * (x - m);
  }
  double mean() const { return m; }
  double se() const {
    if (n < 2) return 0.0;
    return std::sqrt(std::max(0.0, m2 / double(n - 1)) / double(n));
  }
};

/// Runs replicas in seed order; f sees only non-exploded runs.
inline std::size_t for_each_replica(const Field& ambient, double horizon, const VerifyOptions& opt,
                                    const std::function<void(const SimulationResult&)>& f) {
  std::size_t exploded = 0;
  for (std::size_t r = 0; r < opt.replicas; ++r) {
    const SimulationResult run = simulate(ambient, {horizon, opt.seed, r, opt.cap, false});
    if (run.exploded) {
      ++exploded;
      continue;
    }
    f(run);
  }
  return exploded;
}

/// ⟨μ, φ⟩ with atom masses count/⌊n^ρ⌋ (exact when a single site holds all).
inline double pair(const Atoms& atoms, const Field& phi, int N0) {
  double acc = 0.0;
  for (const auto& [o, c] : atoms) {
    const Site x = phi.spec.from_offset(o);
    if (phi.spec.contains(x)) acc += (double(c) / N0) * phi.at(x);
  }
  return acc;
}

/// ∫_0^T ⟨μ^L_r, g⟩ dr along the recorded paths.
inline double time_integral(const SimulationResult& run, const std::vector<double>& tau, const Field& g, double T) {
  const int N0 = initial_count(run.n, run.d);
  double acc = 0.0;
  for (const ParticleRecord& p : run.particles)
    for_each_segment(p, tau[p.id], T, [&](const Site& o, double a, double b) {
      const Site x = g.spec.from_offset(o);
      if (g.spec.contains(x)) acc += g.at(x) * (b - a);
    });
  return acc / N0;
}

inline void require_box(const Field& ambient, const Field& phi, const char* what) {
  if (phi.spec.n != ambient.spec.n || phi.spec.d != ambient.spec.d || phi.spec.L > ambient.spec.L)
    throw std::invalid_argument(std::string(what) + ": test box incompatible with the environment");
  require_dirichlet(phi, what);
}

}  // namespace detail

/// E⟨μ^{n,L}_t, φ⟩ against (T_t φ)(0).
inline TestReport test_moment_duality(const Field& ambient, double t, const Field& phi, const VerifyOptions& opt) {
  detail::require_box(ambient, phi, "test_moment_duality");
  const int L = phi.spec.L;
  const Field V = restrict_to_box(ambient, L);
  TestReport r;
  r.name = "moment_duality";
  r.config_hash = opt.config_hash;
  r.reference = semigroup_apply(V, t, phi, {opt.dt}).at(phi.spec.from_offset({0, 0}));
  detail::Moments m;
  r.exploded = detail::for_each_replica(ambient, t, opt, [&](const SimulationResult& run) {
    const EmpiricalMeasurePath mp = kill_and_project(run, {L}, {t});
    m.add(detail::pair(mp.atoms[0][0], phi, initial_count(run.n, run.d)));
  });
  r.replicas = m.n;
  r.statistic = m.mean();
  r.standard_error = m.se();
  r.exact = t == 0.0;
  r.details = {{"n", phi.spec.n}, {"d", phi.spec.d}, {"L", L}, {"t", t}};
  finalize(r);
  return r;
}

/// K^φ(T) = ⟨μ_T,φ⟩ − ⟨μ_0,φ⟩ − ∫⟨μ_r,Hφ⟩dr: (a) mean against 0, (b) mean
/// of K² against the pathwise quadratic variation
/// ∫⟨μ_r, ε(n²Σ_y(φ(y)−φ(x))² + |ξ_e|φ²)⟩dr, split into jump and
/// branching parts in the details.
inline std::vector<TestReport> test_martingale_qv(const Field& ambient, double T, const Field& phi,
                                                  const VerifyOptions& opt) {
  detail::require_box(ambient, phi, "test_martingale_qv");
  const LatticeSpec& s = phi.spec;
  const int L = s.L;
  const Field V = restrict_to_box(ambient, L);
  const double eps = 1.0 / initial_count(s.n, s.d);
  const double n2 = double(s.n) * s.n;

  Field Hphi = apply_laplacian(phi, Flavor::dirichlet);
  Field jump_q(s), branch_q(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Site x = s.site(i);
    Hphi.values[i] += V.values[i] * phi.values[i];
    if (s.on_boundary(x)) {
      Hphi.values[i] = 0.0;
      continue;
    }
    double q = 0.0;
    for (int a = 0; a < s.d; ++a)
      for (int sg : {-1, 1}) {
        Site y = x;
        y[a] += sg;
        const double diff = phi.at(y) - phi.values[i];
        q += diff * diff;
      }
    jump_q.values[i] = eps * n2 * q;
    branch_q.values[i] = eps * std::abs(V.values[i]) * phi.values[i] * phi.values[i];
  }

  detail::Moments k, k2, diff, qj, qb;
  const std::size_t exploded = detail::for_each_replica(ambient, T, opt, [&](const SimulationResult& run) {
    const std::vector<double> tau = kill_times(run, L);
    const int N0 = initial_count(run.n, run.d);
    const EmpiricalMeasurePath mp = project(run, {L}, {tau}, {0.0, T});
    const double K = detail::pair(mp.atoms[1][0], phi, N0) - detail::pair(mp.atoms[0][0], phi, N0) -
                     detail::time_integral(run, tau, Hphi, T);
    const double QJ = detail::time_integral(run, tau, jump_q, T);
    const double QB = detail::time_integral(run, tau, branch_q, T);
    k.add(K);
    k2.add(K * K);
    diff.add(K * K - QJ - QB);
    qj.add(QJ);
    qb.add(QB);
  });

  const nlohmann::json det = {{"n", s.n}, {"d", s.d}, {"L", L}, {"T", T},
                              {"qv_jump_mean", qj.mean()}, {"qv_branch_mean", qb.mean()}};
  TestReport a;
  a.name = "martingale_mean";
  a.statistic = k.mean();
  a.standard_error = k.se();
  a.replicas = k.n;
  a.exploded = exploded;
  a.config_hash = opt.config_hash;
  a.details = det;
  finalize(a);

  TestReport b = a;
  b.name = "martingale_qv";
  b.statistic = k2.mean();
  b.reference = qj.mean() + qb.mean();
  // Paired: s.e. of K² − QV per replica.
  b.standard_error = diff.se();
  finalize(b);
  return {a, b};
}

/// N(s) = exp(−⟨μ_s, V_{t−s}⟩), V = −log(1 − εU)/ε, U the solution of the
/// dual equation with coefficient ε(ξ_e)_+ from (1 − e^{−εφ0})/ε. One
/// report per s > 0 against the deterministic N(0).
inline std::vector<TestReport> test_laplace_functional(const Field& ambient, double t, const Field& phi0,
                                                       const std::vector<double>& s_grid, const VerifyOptions& opt) {
  detail::require_box(ambient, phi0, "test_laplace_functional");
  for (double v : phi0.values)
    if (v < 0.0) throw std::invalid_argument("test_laplace_functional: phi0 must be non-negative");
  const LatticeSpec& sp = phi0.spec;
  const int L = sp.L;
  const Field V = restrict_to_box(ambient, L);
  const double eps = 1.0 / initial_count(sp.n, sp.d);
  Field nu(sp), u0(sp);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    nu.values[i] = eps * std::max(V.values[i], 0.0);
    u0.values[i] = -std::expm1(-eps * phi0.values[i]) / eps;
  }
  auto weight_for = [&](double horizon) {
    const Field U = solve_dual_fkpp(V, u0, nu, horizon, opt.dt);
    Field w(sp);
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const double e = eps * U.values[i];
      if (e >= 1.0) throw std::runtime_error("test_laplace_functional: dual solution left its range");
      w.values[i] = -std::log1p(-e) / eps;
    }
    return w;
  };
  std::vector<Field> weights;
  for (double s : s_grid) {
    if (s < 0.0 || s > t) throw std::invalid_argument("test_laplace_functional: s outside [0, t]");
    weights.push_back(weight_for(t - s));
  }
  // μ_0 is a unit mass at the origin, so N(0) = exp(−V_t(0)).
  const int N0 = initial_count(sp.n, sp.d);
  const double n0 = std::exp(-detail::pair({{Site{0, 0}, N0}}, weight_for(t), N0));

  std::vector<detail::Moments> m(s_grid.size());
  const std::size_t exploded = detail::for_each_replica(ambient, t, opt, [&](const SimulationResult& run) {
    const EmpiricalMeasurePath mp = kill_and_project(run, {L}, s_grid);
    for (std::size_t j = 0; j < s_grid.size(); ++j) m[j].add(std::exp(-detail::pair(mp.atoms[j][0], weights[j], N0)));
  });

  std::vector<TestReport> out;
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    TestReport r;
    r.name = "laplace_functional";
    r.statistic = m[j].mean();
    r.reference = n0;
    r.standard_error = m[j].se();
    r.replicas = m[j].n;
    r.exploded = exploded;
    r.config_hash = opt.config_hash;
    r.exact = m[j].se() == 0.0;
    r.details = {{"n", sp.n}, {"d", sp.d}, {"L", L}, {"t", t}, {"s", s_grid[j]}};
    finalize(r);
    out.push_back(std::move(r));
  }
  return out;
}

struct MassTail {
  int L = 0;
  std::vector<double> R;
  std::vector<double> tail;
};

/// P(sup_{t≤T} μ^{n,L}_t(1) ≥ R) per L; passes iff every curve is
/// non-increasing in R and tail(R_last) < tail(R_first).
inline TestReport test_mass_tail(const Field& ambient, double T, const std::vector<int>& Ls,
                                 const std::vector<double>& R, const VerifyOptions& opt,
                                 std::vector<MassTail>* curves = nullptr) {
  std::vector<std::vector<std::size_t>> hits(Ls.size(), std::vector<std::size_t>(R.size(), 0));
  std::size_t ok = 0;
  const std::size_t exploded = detail::for_each_replica(ambient, T, opt, [&](const SimulationResult& run) {
    ++ok;
    for (std::size_t l = 0; l < Ls.size(); ++l) {
      const double m = sup_mass(run, Ls[l], T);
      for (std::size_t j = 0; j < R.size(); ++j) hits[l][j] += m >= R[j];
    }
  });
  TestReport r;
  r.name = "mass_tail";
  r.replicas = ok;
  r.exploded = exploded;
  r.exact = true;
  r.config_hash = opt.config_hash;
  bool shape = true;
  nlohmann::json js = nlohmann::json::array();
  for (std::size_t l = 0; l < Ls.size(); ++l) {
    MassTail c{Ls[l], R, {}};
    for (std::size_t j = 0; j < R.size(); ++j) c.tail.push_back(ok ? double(hits[l][j]) / double(ok) : 0.0);
    for (std::size_t j = 1; j < R.size(); ++j) shape = shape && c.tail[j] <= c.tail[j - 1];
    shape = shape && !R.empty() && c.tail.back() < c.tail.front();
    js.push_back({{"L", c.L}, {"R", c.R}, {"tail", c.tail}});
    if (curves) curves->push_back(c);
  }
  r.statistic = shape ? 0.0 : 1.0;
  r.details = {{"n", ambient.spec.n}, {"d", ambient.spec.d}, {"T", T}, {"curves", js}};
  finalize(r);
  return r;
}

struct OrderingCount {
  std::size_t comparisons = 0;
  std::size_t violations = 0;
};

/// Exact check μ^{L_1} ≤ μ^{L_2} ≤ … site by site at each snapshot, and
/// equality of the ambient-box projection with the unkilled population.
/// mutate may corrupt the kill times (sentinel for the check itself).
inline OrderingCount ordering_violations(const SimulationResult& run, std::vector<int> Ls,
                                         const std::vector<double>& times,
                                         const std::function<void(std::vector<std::vector<double>>&)>& mutate = {}) {
  std::sort(Ls.begin(), Ls.end());
  std::vector<std::vector<double>> tau;
  for (int L : Ls) tau.push_back(kill_times(run, L));
  if (mutate) mutate(tau);
  const EmpiricalMeasurePath mp = project(run, Ls, tau, times);
  OrderingCount c;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (std::size_t l = 1; l < Ls.size(); ++l) {
      std::map<Site, std::int64_t> big(mp.atoms[ti][l].begin(), mp.atoms[ti][l].end());
      for (const auto& [site, cnt] : mp.atoms[ti][l - 1]) {
        ++c.comparisons;
        c.violations += cnt > big[site];
      }
    }
    if (Ls.back() == run.L_max) {
      std::int64_t alive = 0, projected = 0;
      for (const ParticleRecord& p : run.particles) alive += p.birth <= times[ti] && p.end > times[ti];
      for (const auto& a : mp.atoms[ti].back()) projected += a.second;
      ++c.comparisons;
      c.violations += alive != projected;
    }
  }
  return c;
}

inline TestReport test_ordering(const Field& ambient, double T, const std::vector<int>& Ls,
                                const std::vector<double>& times, const VerifyOptions& opt) {
  TestReport r;
  r.name = "ordering";
  r.exact = true;
  r.config_hash = opt.config_hash;
  std::vector<int> all = Ls;
  if (std::find(all.begin(), all.end(), ambient.spec.L) == all.end()) all.push_back(ambient.spec.L);
  OrderingCount total;
  r.exploded = detail::for_each_replica(ambient, T, opt, [&](const SimulationResult& run) {
    const OrderingCount c = ordering_violations(run, all, times);
    total.comparisons += c.comparisons;
    total.violations += c.violations;
    ++r.replicas;
  });
  r.statistic = double(total.violations);
  r.details = {{"n", ambient.spec.n}, {"d", ambient.spec.d}, {"T", T}, {"Ls", all}, {"comparisons", total.comparisons}};
  finalize(r);
  return r;
}

}  // namespace krsbm
