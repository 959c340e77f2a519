#pragma once

// Labelled branching random walk in a random environment on (1/n)Z^d:
// nearest-neighbour jumps at rate n², branching at (ξ_e)_+, death at
// (ξ_e)_−. One trajectory is killed at several box sizes afterwards.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

#include "krsbm/lattice.hpp"

namespace krsbm {

enum class EventKind : std::uint32_t { birth = 0, jump = 1, branch = 2, death = 3, absorbed = 4 };
enum class Fate { alive, died, absorbed };

constexpr std::uint64_t kRootParent = std::numeric_limits<std::uint64_t>::max();

/// Positions are integer offsets from the box centre.
struct PathPoint {
  double time;
  Site offset;
};

struct ParticleRecord {
  std::uint64_t id = 0;
  std::uint64_t parent = kRootParent;
  double birth = 0.0;
  std::vector<PathPoint> path;  // path.front() is the birth site
  double end = std::numeric_limits<double>::infinity();
  Fate fate = Fate::alive;

  /// Offset occupied at time t (birth ≤ t).
  const Site& position(double t) const {
    auto it = std::upper_bound(path.begin(), path.end(), t, [](double v, const PathPoint& p) { return v < p.time; });
    return std::prev(it)->offset;
  }
};

struct EventRecord {
  double time;
  std::uint64_t id;
  EventKind kind;
  Site offset;

  bool operator==(const EventRecord&) const = default;
};

struct SimulationConfig {
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::size_t cap = 1000000;
  bool record_events = true;
};

struct SimulationResult {
  int n = 1;
  int d = 1;
  int L_max = 2;
  double horizon = 0.0;
  double weight = 1.0;  // 1/⌊n^ρ⌋
  std::vector<ParticleRecord> particles;
  std::vector<EventRecord> events;
  bool exploded = false;
  double stopped_at = 0.0;
  std::uint64_t event_count = 0;
};

/// ⌊n^ρ⌋ with ρ = d/2.
inline int initial_count(int n, int d) {
  if (d == 2) return n;
  return int(std::floor(std::sqrt(double(n)) + 1e-12));
}

inline bool on_box_boundary(const Site& o, int n, int L, int d) {
  const int h = L * n / 2;
  for (int a = 0; a < d; ++a)
    if (std::abs(o[a]) >= h) return true;
  return false;
}

struct LabelledState {
  std::vector<Site> positions;
  double clock = 0.0;
};

inline LabelledState init_state(int n, int d) {
  return {std::vector<Site>(std::size_t(initial_count(n, d)), Site{0, 0}), 0.0};
}

namespace detail {

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t replica) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(replica),
                      std::uint32_t(replica >> 32)};
    eng_.seed(seq);
  }
  double u01() { return (double(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log(u01()) / rate; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace detail

/// Exact simulation in the ambient box of the potential's spec; particles
/// reaching its boundary are absorbed.
inline SimulationResult simulate(const Field& potential, const SimulationConfig& cfg) {
  const LatticeSpec& s = potential.spec;
  if (!(cfg.horizon >= 0.0)) throw std::invalid_argument("simulate: horizon must be non-negative");
  SimulationResult res;
  res.n = s.n;
  res.d = s.d;
  res.L_max = s.L;
  res.horizon = cfg.horizon;
  res.weight = 1.0 / initial_count(s.n, s.d);
  res.stopped_at = cfg.horizon;

  const double jump_rate = double(s.n) * s.n;
  const int nbrs = 2 * s.d;
  detail::Rng rng(cfg.seed, cfg.replica);

  auto rate_at = [&](const Site& o, double& up, double& down) {
    const double v = potential.values[s.index(s.from_offset(o))];
    up = std::max(v, 0.0);
    down = std::max(-v, 0.0);
  };
  auto log_event = [&](double t, std::uint64_t id, EventKind k, const Site& o) {
    if (cfg.record_events) res.events.push_back({t, id, k, o});
  };

  using Entry = std::pair<double, std::uint64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::size_t live = 0;

  auto schedule = [&](std::uint64_t id, double now) {
    double up, down;
    rate_at(res.particles[id].path.back().offset, up, down);
    queue.emplace(now + rng.exponential(nbrs * jump_rate + up + down), id);
  };
  auto spawn = [&](std::uint64_t parent, double t, const Site& o) {
    const std::uint64_t id = res.particles.size();
    ParticleRecord p;
    p.id = id;
    p.parent = parent;
    p.birth = t;
    p.path.push_back({t, o});
    res.particles.push_back(std::move(p));
    ++live;
    log_event(t, id, EventKind::birth, o);
    schedule(id, t);
  };

  for (int i = 0; i < initial_count(s.n, s.d); ++i) spawn(kRootParent, 0.0, {0, 0});

  while (!queue.empty()) {
    const auto [t, id] = queue.top();
    if (t > cfg.horizon) break;
    queue.pop();
    ++res.event_count;
    const Site x = res.particles[id].path.back().offset;
    double up, down;
    rate_at(x, up, down);
    const double total = nbrs * jump_rate + up + down;
    const double pick = rng.u01() * total;
    if (pick < nbrs * jump_rate) {
      const int dir = std::min(nbrs - 1, int(pick / jump_rate));
      Site y = x;
      y[dir / 2] += (dir % 2 == 0) ? 1 : -1;
      res.particles[id].path.push_back({t, y});
      if (on_box_boundary(y, s.n, s.L, s.d)) {
        res.particles[id].end = t;
        res.particles[id].fate = Fate::absorbed;
        --live;
        log_event(t, id, EventKind::absorbed, y);
        continue;
      }
      log_event(t, id, EventKind::jump, y);
      schedule(id, t);
    } else if (pick < nbrs * jump_rate + up) {
      log_event(t, id, EventKind::branch, x);
      schedule(id, t);
      spawn(id, t, x);
      if (live > cfg.cap) {
        res.exploded = true;
        res.stopped_at = t;
        break;
      }
    } else {
      res.particles[id].end = t;
      res.particles[id].fate = Fate::died;
      --live;
      log_event(t, id, EventKind::death, x);
    }
  }
  return res;
}

/// τ^L for every particle: first time its own path, or its ancestral line
/// before its birth, touches ∂Λ^L; +∞ if never.
inline std::vector<double> kill_times(const SimulationResult& run, int L) {
  if (L < 2 || L % 2 != 0 || L > run.L_max) throw std::invalid_argument("kill_times: L must be even and <= L_max");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> tau(run.particles.size(), inf);
  for (const ParticleRecord& p : run.particles) {
    if (p.parent != kRootParent && tau[p.parent] <= p.birth) {
      tau[p.id] = p.birth;
      continue;
    }
    for (const PathPoint& q : p.path)
      if (on_box_boundary(q.offset, run.n, L, run.d)) {
        tau[p.id] = q.time;
        break;
      }
  }
  return tau;
}

/// Occupation counts (site, count) sorted by site; mass = count · weight.
using Atoms = std::vector<std::pair<Site, std::int64_t>>;

struct EmpiricalMeasurePath {
  std::vector<double> times;
  std::vector<int> Ls;
  double weight = 1.0;
  std::vector<std::vector<Atoms>> atoms;  // [time][L]

  double total_mass(std::size_t ti, std::size_t li) const {
    std::int64_t c = 0;
    for (const auto& a : atoms[ti][li]) c += a.second;
    return weight * double(c);
  }
};

/// Projection with explicit kill times tau[l][particle].
inline EmpiricalMeasurePath project(const SimulationResult& run, const std::vector<int>& Ls,
                                    const std::vector<std::vector<double>>& tau, const std::vector<double>& times) {
  EmpiricalMeasurePath out;
  out.times = times;
  out.Ls = Ls;
  out.weight = run.weight;
  out.atoms.assign(times.size(), std::vector<Atoms>(Ls.size()));
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    if (t > run.stopped_at) throw std::invalid_argument("kill_and_project: snapshot beyond the simulated horizon");
    std::vector<std::map<Site, std::int64_t>> acc(Ls.size());
    for (const ParticleRecord& p : run.particles) {
      if (p.birth > t || p.end <= t) continue;
      const Site& x = p.position(t);
      for (std::size_t li = 0; li < Ls.size(); ++li)
        if (t < tau[li][p.id]) ++acc[li][x];
    }
    for (std::size_t li = 0; li < Ls.size(); ++li) out.atoms[ti][li].assign(acc[li].begin(), acc[li].end());
  }
  return out;
}

inline EmpiricalMeasurePath kill_and_project(const SimulationResult& run, const std::vector<int>& Ls,
                                             const std::vector<double>& times) {
  std::vector<std::vector<double>> tau;
  for (int L : Ls) tau.push_back(kill_times(run, L));
  return project(run, Ls, tau, times);
}

/// Segments of a particle's path alive in box L within [0, T]: calls
/// f(site, t_start, t_end) for each constant-position piece.
template <class F>
void for_each_segment(const ParticleRecord& p, double tau, double T, F&& f) {
  const double stop = std::min({p.end, tau, T});
  for (std::size_t j = 0; j < p.path.size(); ++j) {
    const double a = p.path[j].time;
    if (a >= stop) break;
    const double b = j + 1 < p.path.size() ? std::min(p.path[j + 1].time, stop) : stop;
    if (b > a) f(p.path[j].offset, a, b);
  }
}

/// sup_{t ≤ T} μ^{n,L}_t(1), exact over the piecewise-constant mass path.
inline double sup_mass(const SimulationResult& run, int L, double T) {
  const std::vector<double> tau = kill_times(run, L);
  std::vector<std::pair<double, int>> ev;
  for (const ParticleRecord& p : run.particles) {
    const double stop = std::min({p.end, tau[p.id]});
    if (p.birth > T || stop <= p.birth) continue;
    ev.emplace_back(p.birth, +1);
    if (stop <= T) ev.emplace_back(stop, -1);
  }
  // Removals before additions at equal times: a branching parent killed at
  // the same instant never coexists with its child.
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  });
  std::int64_t c = 0, best = 0;
  for (const auto& [t, dlt] : ev) {
    c += dlt;
    best = std::max(best, c);
  }
  return run.weight * double(best);
}

}  // namespace krsbm
