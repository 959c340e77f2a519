#include <gtest/gtest.h>

#include <cmath>

#include "krsbm/brwre.hpp"
#include "krsbm/environment.hpp"

using namespace krsbm;

namespace {

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& x) {
  double s = 0.0, s2 = 0.0;
  for (double v : x) {
    s += v;
    s2 += v * v;
  }
  const double n = double(x.size());
  const double m = s / n;
  return {m, std::sqrt(std::max(0.0, s2 / n - m * m) / (n - 1.0))};
}

ParticleRecord particle(std::uint64_t id, std::uint64_t parent, std::vector<PathPoint> path) {
  ParticleRecord p;
  p.id = id;
  p.parent = parent;
  p.birth = path.front().time;
  p.path = std::move(path);
  return p;
}

SimulationResult hand_run(int n, int L_max, std::vector<ParticleRecord> ps) {
  SimulationResult r;
  r.n = n;
  r.d = 1;
  r.L_max = L_max;
  r.horizon = 10.0;
  r.stopped_at = 10.0;
  r.weight = 1.0 / initial_count(n, 1);
  r.particles = std::move(ps);
  return r;
}

}  // namespace

TEST(InitState, ParticleCounts) {
  EXPECT_EQ(init_state(16, 2).positions.size(), 16u);
  EXPECT_EQ(init_state(16, 1).positions.size(), 4u);
  EXPECT_EQ(initial_count(32, 1), 5);
  for (int n : {4, 9, 16, 32})
    for (int d : {1, 2}) {
      const SimulationResult r = simulate(Field(LatticeSpec(n, 2, d)), {0.0, 1, 0});
      EXPECT_DOUBLE_EQ(kill_and_project(r, {2}, {0.0}).total_mass(0, 0), 1.0);
      for (const auto& p : init_state(n, d).positions) EXPECT_EQ(p, (Site{0, 0}));
    }
}

TEST(Simulate, FreeWalkJumpCountIsPoisson) {
  const LatticeSpec s(4, 16, 1);
  const double T = 0.5;
  std::vector<double> jumps;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const SimulationResult res = simulate(Field(s), {T, 3, r});
    ASSERT_EQ(res.particles.size(), std::size_t(initial_count(4, 1)));
    for (const ParticleRecord& p : res.particles) {
      EXPECT_EQ(p.fate, Fate::alive);
      jumps.push_back(double(p.path.size() - 1));
    }
  }
  const MeanSe m = mean_se(jumps);
  EXPECT_LE(std::abs(m.mean - 2.0 * 16.0 * T), 3.0 * m.se);
}

TEST(Simulate, PureDeathPopulation) {
  const LatticeSpec s(4, 16, 2);
  const double c = 3.0, T = 0.4;
  std::vector<double> pop;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const SimulationResult res = simulate(Field(s, -c), {T, 5, r, 1000000, false});
    double alive = 0.0;
    for (const ParticleRecord& p : res.particles) {
      EXPECT_NE(p.fate, Fate::absorbed);
      alive += p.fate == Fate::alive;
    }
    EXPECT_EQ(res.particles.size(), 4u);
    pop.push_back(alive);
  }
  const MeanSe m = mean_se(pop);
  EXPECT_LE(std::abs(m.mean - 4.0 * std::exp(-c * T)), 3.0 * m.se);
}

TEST(Simulate, SameSeedSameLog) {
  const Field V = potential(enhance(sample_noise({Distribution::gaussian, 2, LatticeSpec(8, 4, 2)})));
  const SimulationResult a = simulate(V, {0.5, 9, 4}), b = simulate(V, {0.5, 9, 4}), c = simulate(V, {0.5, 9, 5});
  EXPECT_EQ(a.events, b.events);
  EXPECT_FALSE(a.events.empty());
  EXPECT_NE(a.events, c.events);
}

TEST(Simulate, PathsAreNearestNeighbourWithIncreasingTimes) {
  const Field V = potential(enhance(sample_noise({Distribution::gaussian, 3, LatticeSpec(8, 4, 2)})));
  const SimulationResult res = simulate(V, {0.5, 1, 1});
  ASSERT_GT(res.particles.size(), 0u);
  for (const ParticleRecord& p : res.particles) {
    for (std::size_t j = 1; j < p.path.size(); ++j) {
      EXPECT_GT(p.path[j].time, p.path[j - 1].time);
      EXPECT_EQ(std::abs(p.path[j].offset[0] - p.path[j - 1].offset[0]) +
                    std::abs(p.path[j].offset[1] - p.path[j - 1].offset[1]),
                1);
    }
    if (p.fate == Fate::absorbed) {
      EXPECT_TRUE(on_box_boundary(p.path.back().offset, 8, 4, 2));
    }
    if (p.parent != kRootParent) {
      EXPECT_LT(p.parent, p.id);
    }
  }
}

TEST(Simulate, PopulationCapFlagsExplosion) {
  const SimulationResult res = simulate(Field(LatticeSpec(4, 4, 1), 50.0), {2.0, 1, 0, 100, false});
  EXPECT_TRUE(res.exploded);
  EXPECT_LT(res.stopped_at, 2.0);
  EXPECT_THROW(kill_and_project(res, {2}, {2.0}), std::invalid_argument);
}

TEST(Kill, AmbientBoxEqualsUnkilled) {
  const Field V = potential(enhance(sample_noise({Distribution::gaussian, 4, LatticeSpec(4, 4, 1)})));
  const SimulationResult res = simulate(V, {2.0, 2, 0});
  const std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};
  const EmpiricalMeasurePath m = kill_and_project(res, {4}, times);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    std::int64_t alive = 0;
    for (const ParticleRecord& p : res.particles) alive += p.birth <= times[ti] && p.end > times[ti];
    EXPECT_DOUBLE_EQ(m.total_mass(ti, 0), res.weight * double(alive));
  }
}

TEST(Kill, SingleParticleLeavingSmallBox) {
  // n = 4, box L = 2 has boundary at offset ±4; the ambient box L = 4 at ±8.
  std::vector<PathPoint> path{{0.0, {0, 0}}};
  for (int k = 1; k <= 4; ++k) path.push_back({0.1 * k, {k, 0}});
  path.push_back({0.7, {3, 0}});
  const SimulationResult run = hand_run(4, 4, {particle(0, kRootParent, path)});
  const EmpiricalMeasurePath m = kill_and_project(run, {2, 4}, {0.0, 0.39, 0.4, 0.41, 1.0});
  const double w = 1.0 / 2.0;
  EXPECT_EQ(m.total_mass(0, 0), w);
  EXPECT_EQ(m.total_mass(1, 0), w);
  EXPECT_EQ(m.total_mass(2, 0), 0.0);
  EXPECT_EQ(m.total_mass(3, 0), 0.0);
  EXPECT_EQ(m.total_mass(4, 0), 0.0);
  for (std::size_t ti = 0; ti < 5; ++ti) EXPECT_EQ(m.total_mass(ti, 1), w);
  EXPECT_EQ(m.atoms[4][1].front().first, (Site{3, 0}));
}

TEST(Kill, ChildOfKilledParentIsDeadAtBirth) {
  std::vector<PathPoint> parent{{0.0, {0, 0}}};
  for (int k = 1; k <= 4; ++k) parent.push_back({0.1 * k, {k, 0}});
  parent.push_back({0.5, {3, 0}});
  const SimulationResult run =
      hand_run(4, 4, {particle(0, kRootParent, parent), particle(1, 0, {{0.8, {3, 0}}, {0.9, {2, 0}}})});
  const std::vector<double> tau2 = kill_times(run, 2), tau4 = kill_times(run, 4);
  EXPECT_DOUBLE_EQ(tau2[0], 0.4);
  EXPECT_DOUBLE_EQ(tau2[1], 0.8);
  EXPECT_TRUE(std::isinf(tau4[1]));
  EXPECT_EQ(kill_and_project(run, {2}, {1.0}).total_mass(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(sup_mass(run, 2, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(sup_mass(run, 4, 1.0), 1.0);
}

TEST(Kill, RejectsInvalidBoxes) {
  const SimulationResult run = hand_run(4, 4, {particle(0, kRootParent, {{0.0, {0, 0}}})});
  EXPECT_THROW(kill_times(run, 3), std::invalid_argument);
  EXPECT_THROW(kill_times(run, 6), std::invalid_argument);
  EXPECT_THROW(kill_and_project(run, {0}, {0.0}), std::invalid_argument);
}

TEST(Kill, OrderingAcrossBoxSizes) {
  const Field V = potential(enhance(sample_noise({Distribution::gaussian, 6, LatticeSpec(8, 8, 1)})));
  const std::vector<int> Ls{2, 4, 6, 8};
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(0.1 * k);
  for (std::uint64_t r = 0; r < 200; ++r) {
    const SimulationResult res = simulate(V, {1.0, 11, r, 1000000, false});
    ASSERT_FALSE(res.exploded);
    std::vector<std::vector<double>> tau;
    for (int L : Ls) tau.push_back(kill_times(res, L));
    for (std::size_t i = 0; i < res.particles.size(); ++i)
      for (std::size_t l = 1; l < Ls.size(); ++l) EXPECT_LE(tau[l - 1][i], tau[l][i]);
    const EmpiricalMeasurePath m = kill_and_project(res, Ls, times);
    for (std::size_t ti = 0; ti < times.size(); ++ti)
      for (std::size_t l = 1; l < Ls.size(); ++l) {
        std::map<Site, std::int64_t> big(m.atoms[ti][l].begin(), m.atoms[ti][l].end());
        for (const auto& [site, c] : m.atoms[ti][l - 1]) EXPECT_LE(c, big[site]);
      }
  }
}

TEST(Kill, SupMassAtLeastInitialAndDeathCollapses) {
  const SimulationResult res = simulate(Field(LatticeSpec(16, 4, 2), -1e6), {1.0, 1, 0});
  EXPECT_DOUBLE_EQ(sup_mass(res, 2, 1.0), 1.0);
  EXPECT_EQ(kill_and_project(res, {2}, {0.01}).total_mass(0, 0), 0.0);
}
