#pragma once

// Random environment: i.i.d. site noise ξ^n = n^{d/2}Φ, the corrector X
// solving −Δ X = χ(D)ξ, and the renormalised resonant product.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "krsbm/besov.hpp"
#include "krsbm/lattice.hpp"
#include "krsbm/spectral.hpp"

namespace krsbm {

enum class Distribution { gaussian, rademacher, uniform };

inline std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::gaussian: return "gaussian";
    case Distribution::rademacher: return "rademacher";
    case Distribution::uniform: return "uniform";
  }
  return "unknown";
}

inline Distribution distribution_from_string(const std::string& s) {
  if (s == "gaussian") return Distribution::gaussian;
  if (s == "rademacher") return Distribution::rademacher;
  if (s == "uniform") return Distribution::uniform;
  throw std::invalid_argument("unknown distribution '" + s + "'");
}

/// E Φ_+ for the supported laws (all centred with unit variance).
inline double positive_part_mean(Distribution d) {
  switch (d) {
    case Distribution::gaussian: return 1.0 / std::sqrt(2.0 * std::numbers::pi);
    case Distribution::rademacher: return 0.5;
    case Distribution::uniform: return std::sqrt(3.0) / 4.0;
  }
  return 0.0;
}

struct NoiseSpec {
  Distribution distribution = Distribution::gaussian;
  std::uint64_t seed = 0;
  LatticeSpec spec;
};

struct NoiseRealization {
  LatticeSpec spec;
  Distribution distribution = Distribution::gaussian;
  std::uint64_t seed = 0;
  Field xi;
};

namespace detail {

/// Two uniforms in (0,1) from a stream keyed by (seed, n, d, site offset).
/// Keying by the offset from the box centre makes a larger box with the
/// same seed extend the smaller one.
inline std::array<double, 2> site_uniforms(std::uint64_t seed, const LatticeSpec& spec, const Site& offset) {
  constexpr std::uint32_t bias = 1u << 30;
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(spec.n), std::uint32_t(spec.d),
                    std::uint32_t(offset[0] + int(bias)), std::uint32_t(offset[1] + int(bias))};
  std::array<std::uint32_t, 4> w{};
  seq.generate(w.begin(), w.end());
  auto u = [](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
    return (double(bits) + 0.5) * 0x1.0p-53;
  };
  return {u(w[0], w[1]), u(w[2], w[3])};
}

inline double draw_phi(Distribution dist, const std::array<double, 2>& u) {
  switch (dist) {
    case Distribution::gaussian:
      return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
    case Distribution::rademacher: return u[0] < 0.5 ? -1.0 : 1.0;
    case Distribution::uniform: return std::sqrt(3.0) * (2.0 * u[0] - 1.0);
  }
  return 0.0;
}

}  // namespace detail

inline NoiseRealization sample_noise(const NoiseSpec& ns) {
  ns.spec.validate();
  const LatticeSpec& s = ns.spec;
  NoiseRealization out{s, ns.distribution, ns.seed, Field(s)};
  const double scale = std::pow(double(s.n), 0.5 * s.d);
  for (std::size_t i = 0; i < s.size(); ++i)
    out.xi.values[i] = scale * detail::draw_phi(ns.distribution, detail::site_uniforms(ns.seed, s, s.offset(s.site(i))));
  return out;
}

/// Solves −Δ^n X = χ(D)ξ with Neumann boundary conditions, X̂(0) = 0.
inline Field build_X(const Field& xi, const MultiplierSpec& chi = smooth_cutoff()) {
  const LatticeSpec s = xi.spec;
  const MultiplierSpec green{[s, chi](const DualIndex& k) {
                               const double c = chi(k);
                               if (c == 0.0) return 0.0;
                               const double lt = -laplacian_symbol(k, s);
                               if (lt <= 0.0) throw std::invalid_argument("build_X: cut-off must vanish at k = 0");
                               return c / lt;
                             },
                             "chi/-l"};
  return fourier_multiplier(green, xi, Flavor::neumann);
}

struct EnhancedEnvironment {
  NoiseRealization noise;
  Field X;
  std::optional<Field> resonant_renormalized;
  double kappa_n = 0.0;
  double c_n = 0.0;
  double nu = 0.0;

  const LatticeSpec& spec() const { return noise.spec; }
};

inline EnhancedEnvironment enhance(const NoiseRealization& noise, const MultiplierSpec& chi = smooth_cutoff()) {
  EnhancedEnvironment env;
  env.noise = noise;
  env.X = build_X(noise.xi, chi);
  env.nu = positive_part_mean(noise.distribution);
  if (noise.spec.d == 2) {
    env.kappa_n = renormalization_constant(noise.spec, chi);
    env.c_n = env.kappa_n;
    Field r = resonant(env.X, noise.xi);
    for (double& v : r.values) v -= env.kappa_n;
    env.resonant_renormalized = std::move(r);
  }
  return env;
}

/// ξ_e = ξ − c_n, the potential seen by the solver and the particles.
inline Field potential(const EnhancedEnvironment& env) {
  Field v = env.noise.xi;
  for (double& x : v.values) x -= env.c_n;
  return v;
}

/// Potential on a smaller centred box; c_n stays that of the source box so
/// every box size sees the same rates.
inline Field potential_on_box(const EnhancedEnvironment& env, int L) { return restrict_to_box(potential(env), L); }

struct PositivePartStats {
  Field positive;  // n^{-d/2} ξ_+
  double mean_positive = 0.0;
  double se_positive = 0.0;
  double mean_abs = 0.0;
  double se_abs = 0.0;
  std::size_t count = 0;
};

inline PositivePartStats positive_part_statistics(const NoiseRealization& noise) {
  const LatticeSpec& s = noise.spec;
  const double scale = std::pow(double(s.n), -0.5 * s.d);
  PositivePartStats st;
  st.positive = Field(s);
  st.count = s.size();
  double sp = 0.0, sp2 = 0.0, sa = 0.0, sa2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double phi = scale * noise.xi.values[i];
    const double p = std::max(phi, 0.0), a = std::abs(phi);
    st.positive.values[i] = p;
    sp += p;
    sp2 += p * p;
    sa += a;
    sa2 += a * a;
  }
  const double c = double(st.count);
  st.mean_positive = sp / c;
  st.mean_abs = sa / c;
  st.se_positive = std::sqrt(std::max(0.0, sp2 / c - st.mean_positive * st.mean_positive) / (c - 1.0));
  st.se_abs = std::sqrt(std::max(0.0, sa2 / c - st.mean_abs * st.mean_abs) / (c - 1.0));
  return st;
}

struct SurveyConfig {
  std::vector<int> ns{8, 16, 32};
  int L = 2;
  int d = 2;
  std::vector<std::uint64_t> seeds;
  double alpha = 0.8;
  double eps = 0.1;
  double p = kInf;  // integrability and summability of the Besov norms
  double q = kInf;
  Distribution distribution = Distribution::gaussian;
};

struct SurveyRow {
  std::string quantity;
  int n = 0;
  int L = 0;
  double alpha = 0.0;
  double p = kInf;
  double q = kInf;
  Flavor flavor = Flavor::neumann;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// Admissible regularity window for α.
inline bool alpha_in_window(int d, double alpha) {
  return d == 1 ? (alpha > 1.0 && alpha < 1.5) : (alpha > 2.0 / 3.0 && alpha < 1.0);
}

/// Norms of the enhanced-noise components per (n, seed), sorted by n then seed.
/// Quantities: xi (C^{α−2}), xi_plus (C^{−ε}), xi_plus_l2 (L²), X (C^α),
/// resonant_renormalized and resonant_raw (C^{2α−2}, d = 2 only).
inline std::vector<SurveyRow> lemma_norm_survey(const SurveyConfig& cfg) {
  std::vector<SurveyRow> rows;
  const Flavor f = Flavor::neumann;
  for (int n : cfg.ns) {
    const LatticeSpec spec(n, cfg.L, cfg.d);
    for (std::uint64_t seed : cfg.seeds) {
      const NoiseRealization noise = sample_noise({cfg.distribution, seed, spec});
      const EnhancedEnvironment env = enhance(noise);
      const PositivePartStats pos = positive_part_statistics(noise);
      auto add = [&](const char* name, double alpha, double p, double q, double value) {
        rows.push_back({name, n, cfg.L, alpha, p, q, f, value, seed});
      };
      auto besov = [&](const char* name, const Field& u, double alpha) {
        add(name, alpha, cfg.p, cfg.q, besov_norm(u, {alpha, cfg.p, cfg.q, f}));
      };
      const double a = cfg.alpha;
      besov("xi", noise.xi, a - 2.0);
      besov("xi_plus", pos.positive, -cfg.eps);
      add("xi_plus_l2", 0.0, 2.0, kInf, lp_norm(pos.positive, 2.0, f));
      besov("X", env.X, a);
      if (env.resonant_renormalized) {
        besov("resonant_renormalized", *env.resonant_renormalized, 2 * a - 2.0);
        Field raw = *env.resonant_renormalized;
        for (double& v : raw.values) v += env.kappa_n;
        besov("resonant_raw", raw, 2 * a - 2.0);
      }
    }
  }
  return rows;
}

/// Median of one quantity at one n over all seeds.
inline double survey_median(const std::vector<SurveyRow>& rows, const std::string& quantity, int n) {
  std::vector<double> v;
  for (const SurveyRow& r : rows)
    if (r.quantity == quantity && r.n == n) v.push_back(r.value);
  if (v.empty()) throw std::invalid_argument("survey_median: no rows for " + quantity);
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace krsbm
