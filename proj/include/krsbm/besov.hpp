#pragma once

// Littlewood-Paley blocks on Λ_n, Bony's decomposition, lattice Besov
// norms and the trigonometric extension to the continuum box.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "krsbm/lattice.hpp"
#include "krsbm/spectral.hpp"

namespace krsbm {

constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline double smooth_transition(double t) {
  auto f = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return f(t) / (f(t) + f(1.0 - t));
}

}  // namespace detail

/// C^∞ radial profile: 1 on |k| ≤ 1/2, 0 on |k| ≥ 1.
inline double dyadic_profile(double r) { return 1.0 - detail::smooth_transition(2.0 * r - 1.0); }

/// ρ_{-1} = φ_0, ρ_j(k) = φ_0(2^{-j-1}k) − φ_0(2^{-j}k) for j ≥ 0, with
/// everything from j_n upward lumped into the tail block.
struct DyadicPartition {
  LatticeSpec spec;
  int j_n = -1;

  double rho(int j, double r) const {
    if (j < -1 || j > j_n) throw std::out_of_range("DyadicPartition: block index out of range");
    if (j == j_n) return 1.0 - (j_n == -1 ? 0.0 : dyadic_profile(std::ldexp(r, -j_n)));
    if (j == -1) return dyadic_profile(r);
    return dyadic_profile(std::ldexp(r, -j - 1)) - dyadic_profile(std::ldexp(r, -j));
  }
  double rho(int j, const DualIndex& k) const { return rho(j, k.norm()); }
  int blocks() const { return j_n + 2; }
};

/// Tail index: the first block whose support (outer radius 2^{j+1}) leaves
/// the open dual cube (−n/2, n/2)^d.
inline DyadicPartition build_partition(const LatticeSpec& spec) {
  int j = -1;
  while (std::ldexp(1.0, j + 1) < 0.5 * spec.n) ++j;
  return {spec, j};
}

struct BesovParams {
  double alpha = 0.0;
  double p = kInf;
  double q = kInf;
  Flavor flavor = Flavor::neumann;
};

/// All blocks Δ_{-1}u, …, Δ_{j_n}u from one forward transform.
inline std::vector<Field> lp_blocks(const Field& u, Flavor flavor, const DyadicPartition& part) {
  const SpectrumCoeffs c = forward_transform(u, flavor);
  std::vector<Field> out;
  out.reserve(part.blocks());
  std::vector<double> radius(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) radius[i] = c.mode(i).norm();
  for (int j = -1; j <= part.j_n; ++j) {
    SpectrumCoeffs b = c;
    for (std::size_t i = 0; i < b.size(); ++i) b.coeffs[i] *= part.rho(j, radius[i]);
    out.push_back(inverse_transform(b));
  }
  return out;
}

inline Field lp_block(int j, const Field& u, Flavor flavor) {
  const DyadicPartition part = build_partition(u.spec);
  if (j < -1 || j > part.j_n) throw std::out_of_range("lp_block: block index out of range");
  const MultiplierSpec rho{[&part, j](const DualIndex& k) { return part.rho(j, k); }, "rho"};
  return fourier_multiplier(rho, u, flavor);
}

/// ‖Π u‖_{L^p(Θ_n)} with the normalised counting measure, computed on Λ_n
/// through the reflection multiplicities.
inline double lp_norm(const Field& u, double p, Flavor flavor) {
  const LatticeSpec& s = u.spec;
  const bool odd = flavor == Flavor::dirichlet;
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (odd && s.on_boundary(s.site(i))) continue;
      m = std::max(m, std::abs(u.values[i]));
    }
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Site x = s.site(i);
    if (odd && s.on_boundary(x)) continue;
    acc += reflection_multiplicity(s, x) * std::pow(std::abs(u.values[i]), p);
  }
  return std::pow(acc / std::pow(double(s.n), s.d), 1.0 / p);
}

inline double sequence_norm(const std::vector<double>& a, double q) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : a) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (double v : a) acc += std::pow(v, q);
  return std::pow(acc, 1.0 / q);
}

/// Weighted block norms 2^{αj}‖Δ_j Π u‖_{L^p}, j = −1…j_n.
inline std::vector<double> block_norms(const Field& u, const BesovParams& params) {
  const DyadicPartition part = build_partition(u.spec);
  const auto blocks = lp_blocks(u, params.flavor, part);
  std::vector<double> out;
  out.reserve(blocks.size());
  for (int j = -1; j <= part.j_n; ++j)
    out.push_back(std::pow(2.0, params.alpha * j) * lp_norm(blocks[j + 1], params.p, params.flavor));
  return out;
}

inline double besov_norm(const Field& u, const BesovParams& params) {
  return sequence_norm(block_norms(u, params), params.q);
}

namespace detail {

/// Accumulates Σ_j Σ_{i∈I(j)} a_i b_j for blocks a, b of equal count.
template <class Pred>
Field block_pair_sum(const std::vector<Field>& a, const std::vector<Field>& b, Pred keep) {
  Field out(a.front().spec);
  const int B = int(a.size());
  for (int jb = 0; jb < B; ++jb)
    for (int ja = 0; ja < B; ++ja) {
      if (!keep(ja - 1, jb - 1)) continue;
      for (std::size_t x = 0; x < out.size(); ++x) out.values[x] += a[ja].values[x] * b[jb].values[x];
    }
  return out;
}

}  // namespace detail

/// φ ≺ ψ = Σ_j Σ_{i ≤ j−2} Δ_iφ Δ_jψ (low frequencies of φ against high of ψ).
inline Field paraproduct(const Field& phi, const Field& psi, Flavor fphi = Flavor::neumann,
                         Flavor fpsi = Flavor::neumann) {
  require_same_spec(phi, psi, "paraproduct");
  const DyadicPartition part = build_partition(phi.spec);
  return detail::block_pair_sum(lp_blocks(phi, fphi, part), lp_blocks(psi, fpsi, part),
                                [](int i, int j) { return i <= j - 2; });
}

/// φ ⊙ ψ = Σ_{|i−j| ≤ 1} Δ_iφ Δ_jψ.
inline Field resonant(const Field& phi, const Field& psi, Flavor fphi = Flavor::neumann,
                      Flavor fpsi = Flavor::neumann) {
  require_same_spec(phi, psi, "resonant");
  const DyadicPartition part = build_partition(phi.spec);
  return detail::block_pair_sum(lp_blocks(phi, fphi, part), lp_blocks(psi, fpsi, part),
                                [](int i, int j) { return std::abs(i - j) <= 1; });
}

/// Samples of E^n_l u on the refinement-times finer grid of the box.
struct RefinedField {
  LatticeSpec spec;
  int refinement = 1;
  std::vector<double> values;

  int side() const { return refinement * spec.M() + 1; }
  double at(int i, int j = 0) const { return spec.d == 1 ? values[i] : values[std::size_t(i) * side() + j]; }
};

inline RefinedField extension_operator(const Field& u, Flavor flavor, int refinement) {
  return {u.spec, refinement, synthesize_refined(forward_transform(u, flavor), refinement)};
}

struct TimeWeightedNormParams {
  double gamma = 0.0;
  double horizon = 1.0;
  BesovParams inner;
  /// Adds the time-Hölder increment term of exponent α/2 (the L^{γ,α} norm).
  bool with_increment = false;
};

/// sup_t t^γ‖u(t)‖_B over grid times ≤ horizon; optionally plus
/// sup_{s<t} s^γ ‖u(t) − u(s)‖_{L^p} / (t − s)^{α/2} over grid pairs.
inline double time_weighted_norm(const Trajectory& traj, const TimeWeightedNormParams& params) {
  if (traj.states.empty()) throw std::invalid_argument("time_weighted_norm: empty trajectory");
  if (params.gamma < 0.0 || params.gamma >= 1.0) throw std::invalid_argument("time_weighted_norm: gamma must lie in [0,1)");
  double best = 0.0;
  std::size_t K = 0;
  for (; K < traj.times.size() && traj.times[K] <= params.horizon; ++K) {
    const double w = std::pow(traj.times[K], params.gamma);
    if (w == 0.0) continue;
    best = std::max(best, w * besov_norm(traj.states[K], params.inner));
  }
  if (!params.with_increment) return best;
  double incr = 0.0;
  for (std::size_t s = 0; s < K; ++s) {
    const double w = std::pow(traj.times[s], params.gamma);
    if (w == 0.0) continue;
    for (std::size_t t = s + 1; t < K; ++t) {
      Field diff = traj.states[t];
      for (std::size_t x = 0; x < diff.size(); ++x) diff.values[x] -= traj.states[s].values[x];
      const double dt = traj.times[t] - traj.times[s];
      incr = std::max(incr, w * lp_norm(diff, params.inner.p, params.inner.flavor) /
                                std::pow(dt, 0.5 * params.inner.alpha));
    }
  }
  return best + incr;
}

}  // namespace krsbm
