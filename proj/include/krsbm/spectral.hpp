#pragma once

// Sine/cosine bases on Λ_n, their fast transforms, even Fourier
// multipliers, the discrete Laplacians and the renormalization constant.
//
// Conventions (corner coordinates x = i/n, frequencies k = m/N):
//   d_k(x) = N^{-d/2} ∏ 2 sin(2π k_a x_a),            m_a ∈ {1,…,Ln−1}
//   n_k(x) = N^{-d/2} ∏ 2 s(m_a) cos(2π k_a x_a),     m_a ∈ {0,…,Ln}
// with s(m) = 2^{-1/2} on the zero and Nyquist modes and 1 otherwise.
// Both are orthonormal for ⟨u,v⟩ = n^{-d} Σ_x w(x) u(x) v(x), where w
// halves once per boundary coordinate (equivalently 2^{-d}⟨Π_e(uv)⟩_Θ).

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "krsbm/lattice.hpp"

namespace krsbm {

/// Frequency k = m/N on the dual lattice.
struct DualIndex {
  std::array<int, 2> m{0, 0};
  int N = 4;
  int d = 1;
  Flavor flavor = Flavor::neumann;

  double k(int a) const { return double(m[a]) / N; }
  double norm() const {
    double s = 0;
    for (int a = 0; a < d; ++a) s += k(a) * k(a);
    return std::sqrt(s);
  }
};

/// Even symbol on the dual torus.
struct MultiplierSpec {
  std::function<double(const DualIndex&)> symbol;
  std::string name;

  double operator()(const DualIndex& k) const { return symbol(k); }
};

/// Coefficients ⟨u, l_k⟩ over the flavor's index set, row-major in m.
struct SpectrumCoeffs {
  LatticeSpec spec;
  Flavor flavor = Flavor::neumann;
  std::vector<double> coeffs;

  int first_mode() const { return flavor == Flavor::dirichlet ? 1 : 0; }
  int modes_per_axis() const { return flavor == Flavor::dirichlet ? spec.M() - 1 : spec.M() + 1; }
  std::size_t size() const { return coeffs.size(); }

  DualIndex mode(std::size_t idx) const {
    DualIndex k;
    k.N = spec.N();
    k.d = spec.d;
    k.flavor = flavor;
    const int P = modes_per_axis();
    if (spec.d == 1) {
      k.m = {first_mode() + int(idx), 0};
    } else {
      k.m = {first_mode() + int(idx / P), first_mode() + int(idx % P)};
    }
    return k;
  }
  std::size_t position(const std::array<int, 2>& m) const {
    const int P = modes_per_axis();
    if (spec.d == 1) return std::size_t(m[0] - first_mode());
    return std::size_t(m[0] - first_mode()) * P + std::size_t(m[1] - first_mode());
  }
};

inline std::size_t mode_count(const LatticeSpec& spec, Flavor flavor) {
  const std::size_t P = flavor == Flavor::dirichlet ? spec.M() - 1 : spec.M() + 1;
  return spec.d == 1 ? P : P * P;
}

namespace detail {

inline double neumann_scale(int m, int M) { return (m == 0 || m == M) ? std::numbers::sqrt2 / 2 : 1.0; }

/// FFTW plans are cached per (kind, shape). Planning is serialised; the
/// new-array execute interface is reentrant.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan r2r(int d, int len, fftw_r2r_kind kind) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(d, len, int(kind));
    auto it = r2r_.find(key);
    if (it != r2r_.end()) return it->second;
    std::vector<double> buf(d == 1 ? len : std::size_t(len) * len);
    int dims[2] = {len, len};
    fftw_r2r_kind kinds[2] = {kind, kind};
    fftw_plan p = fftw_plan_r2r(d, dims, buf.data(), buf.data(), kinds, FFTW_ESTIMATE | FFTW_UNALIGNED);
    r2r_.emplace(key, p);
    return p;
  }

  fftw_plan dft(int d, int len, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(d, len, sign);
    auto it = dft_.find(key);
    if (it != dft_.end()) return it->second;
    std::vector<fftw_complex> buf(d == 1 ? len : std::size_t(len) * len);
    int dims[2] = {len, len};
    fftw_plan p = fftw_plan_dft(d, dims, buf.data(), buf.data(), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    dft_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [k, p] : r2r_) fftw_destroy_plan(p);
    for (auto& [k, p] : dft_) fftw_destroy_plan(p);
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> r2r_;
  std::map<std::tuple<int, int, int>, fftw_plan> dft_;
};

inline void run_r2r(int d, int len, fftw_r2r_kind kind, std::vector<double>& data) {
  fftw_plan p = PlanCache::instance().r2r(d, len, kind);
  fftw_execute_r2r(p, data.data(), data.data());
}

}  // namespace detail

inline double dirichlet_basis_eval(const DualIndex& k, const LatticeSpec& spec, const Site& x) {
  const int M = spec.M();
  double v = std::pow(double(spec.N()), -0.5 * spec.d);
  for (int a = 0; a < spec.d; ++a) {
    if (k.m[a] <= 0 || k.m[a] >= M)
      throw std::invalid_argument("dirichlet_basis_eval: frequency outside the Dirichlet index set");
    // 2π k x = π r / M with r = m·i mod 2M; exact zero when M divides r.
    const long r = (long(k.m[a]) * x[a]) % (2L * M);
    v *= r % M == 0 ? 0.0 : 2.0 * std::sin(std::numbers::pi * double(r) / M);
  }
  return v;
}

inline double neumann_basis_eval(const DualIndex& k, const LatticeSpec& spec, const Site& x) {
  const int M = spec.M();
  double v = std::pow(double(spec.N()), -0.5 * spec.d);
  for (int a = 0; a < spec.d; ++a) {
    if (k.m[a] < 0 || k.m[a] > M)
      throw std::invalid_argument("neumann_basis_eval: frequency outside the Neumann index set");
    const long r = (long(k.m[a]) * x[a]) % (2L * M);
    v *= 2.0 * detail::neumann_scale(k.m[a], M) * std::cos(std::numbers::pi * double(r) / M);
  }
  return v;
}

inline double basis_eval(const DualIndex& k, const LatticeSpec& spec, const Site& x) {
  return k.flavor == Flavor::dirichlet ? dirichlet_basis_eval(k, spec, x) : neumann_basis_eval(k, spec, x);
}

/// Basis function l_k sampled on Λ_n.
inline Field basis_field(const DualIndex& k, const LatticeSpec& spec) {
  Field f(spec);
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = basis_eval(k, spec, spec.site(i));
  return f;
}

/// Trapezoid-weighted inner product on Λ_n.
inline double inner_product(const Field& u, const Field& v) {
  require_same_spec(u, v, "inner_product");
  const LatticeSpec& s = u.spec;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = double(reflection_multiplicity(s, s.site(i))) / (1 << s.d);
    acc += w * u.values[i] * v.values[i];
  }
  return acc / std::pow(double(s.n), s.d);
}

inline SpectrumCoeffs forward_transform(const Field& u, Flavor flavor) {
  const LatticeSpec& s = u.spec;
  const int M = s.M();
  const double scale = std::pow(double(s.n), -s.d) * std::pow(double(s.N()), -0.5 * s.d);
  SpectrumCoeffs out{s, flavor, {}};
  if (flavor == Flavor::dirichlet) {
    const int P = M - 1;
    std::vector<double> buf(mode_count(s, flavor));
    for (std::size_t j = 0; j < buf.size(); ++j) {
      const Site i = s.d == 1 ? Site{int(j) + 1, 0} : Site{int(j / P) + 1, int(j % P) + 1};
      buf[j] = u.at(i);
    }
    detail::run_r2r(s.d, P, FFTW_RODFT00, buf);
    for (double& c : buf) c *= scale;
    out.coeffs = std::move(buf);
  } else if (flavor == Flavor::neumann) {
    std::vector<double> buf = u.values;
    detail::run_r2r(s.d, M + 1, FFTW_REDFT00, buf);
    for (std::size_t j = 0; j < buf.size(); ++j) {
      const Site m = s.site(j);
      double f = scale;
      for (int a = 0; a < s.d; ++a) f *= detail::neumann_scale(m[a], M);
      buf[j] *= f;
    }
    out.coeffs = std::move(buf);
  } else {
    throw std::invalid_argument("forward_transform: periodic flavor applies to torus fields");
  }
  return out;
}

inline Field inverse_transform(const SpectrumCoeffs& c) {
  const LatticeSpec& s = c.spec;
  const int M = s.M();
  const double scale = std::pow(double(s.N()), -0.5 * s.d);
  Field out(s);
  if (c.coeffs.size() != mode_count(s, c.flavor))
    throw std::invalid_argument("inverse_transform: coefficient count does not match spec");
  if (c.flavor == Flavor::dirichlet) {
    const int P = M - 1;
    std::vector<double> buf = c.coeffs;
    detail::run_r2r(s.d, P, FFTW_RODFT00, buf);
    for (std::size_t j = 0; j < buf.size(); ++j) {
      const Site i = s.d == 1 ? Site{int(j) + 1, 0} : Site{int(j / P) + 1, int(j % P) + 1};
      out.at(i) = scale * buf[j];
    }
  } else if (c.flavor == Flavor::neumann) {
    std::vector<double> buf = c.coeffs;
    for (std::size_t j = 0; j < buf.size(); ++j) {
      const Site m = s.site(j);
      double f = 1.0;
      for (int a = 0; a < s.d; ++a)
        if (m[a] == 0 || m[a] == M) f *= std::numbers::sqrt2;
      buf[j] *= f;
    }
    detail::run_r2r(s.d, M + 1, FFTW_REDFT00, buf);
    for (std::size_t j = 0; j < buf.size(); ++j) out.values[j] = scale * buf[j];
  } else {
    throw std::invalid_argument("inverse_transform: periodic flavor applies to torus fields");
  }
  return out;
}

inline double laplacian_symbol(const DualIndex& k, const LatticeSpec& spec) {
  double v = 0.0;
  const double n = spec.n;
  for (int a = 0; a < spec.d; ++a) v += 2.0 * n * n * (std::cos(2.0 * std::numbers::pi * k.k(a) / n) - 1.0);
  return v;
}

/// l^n as a multiplier. Non-positive; −l^n is the propagator denominator.
inline MultiplierSpec laplacian_multiplier(const LatticeSpec& spec) {
  return {[spec](const DualIndex& k) { return laplacian_symbol(k, spec); }, "laplacian"};
}

namespace detail {

inline DualIndex reflect(const DualIndex& k, int mask) {
  DualIndex r = k;
  for (int a = 0; a < k.d; ++a)
    if (mask & (1 << a)) r.m[a] = -r.m[a];
  return r;
}

inline void check_even(const MultiplierSpec& sigma, const DualIndex& k, double value) {
  for (int mask = 1; mask < (1 << k.d); ++mask) {
    const double w = sigma(reflect(k, mask));
    if (std::abs(w - value) > 1e-12 * std::max(1.0, std::abs(value)))
      throw std::invalid_argument("fourier_multiplier: symbol '" + sigma.name + "' is not even");
  }
}

}  // namespace detail

/// σ(D)u in the flavor basis. Rejects symbols that are not even.
inline Field fourier_multiplier(const MultiplierSpec& sigma, const Field& u, Flavor flavor) {
  SpectrumCoeffs c = forward_transform(u, flavor);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const DualIndex k = c.mode(j);
    const double s = sigma(k);
    detail::check_even(sigma, k, s);
    c.coeffs[j] *= s;
  }
  return inverse_transform(c);
}

/// Periodic multiplier F^{-1}(σ F φ) on Θ_n.
inline TorusField periodic_multiplier(const MultiplierSpec& sigma, const TorusField& v) {
  const LatticeSpec& s = v.spec;
  const int P = s.torus_side();
  std::vector<fftw_complex> buf(v.values.size());
  for (std::size_t j = 0; j < buf.size(); ++j) {
    buf[j][0] = v.values[j];
    buf[j][1] = 0.0;
  }
  fftw_execute_dft(detail::PlanCache::instance().dft(s.d, P, FFTW_FORWARD), buf.data(), buf.data());
  auto signed_mode = [P](int c) { return c > P / 2 ? c - P : c; };
  for (std::size_t j = 0; j < buf.size(); ++j) {
    const Site t = v.site(j);
    DualIndex k;
    k.N = s.N();
    k.d = s.d;
    k.flavor = Flavor::periodic;
    k.m = {signed_mode(t[0]), s.d == 2 ? signed_mode(t[1]) : 0};
    const double w = sigma(k);
    buf[j][0] *= w;
    buf[j][1] *= w;
  }
  fftw_execute_dft(detail::PlanCache::instance().dft(s.d, P, FFTW_BACKWARD), buf.data(), buf.data());
  TorusField out(s);
  const double norm = 1.0 / double(buf.size());
  for (std::size_t j = 0; j < buf.size(); ++j) out.values[j] = buf[j][0] * norm;
  return out;
}

/// Nearest-neighbour stencil Δ^n applied to the reflected extension, then
/// restricted to Λ_n.
inline Field apply_laplacian(const Field& u, Flavor flavor) {
  const LatticeSpec& s = u.spec;
  const double n2 = double(s.n) * s.n;
  auto ext = [&](const Site& t) { return flavor == Flavor::dirichlet ? odd_value(u, t) : even_value(u, t); };
  Field out(s);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const Site x = s.site(j);
    const double centre = ext(x);
    double acc = 0.0;
    for (int a = 0; a < s.d; ++a) {
      Site up = x, dn = x;
      up[a] += 1;
      dn[a] -= 1;
      acc += ext(up) + ext(dn) - 2.0 * centre;
    }
    out.values[j] = n2 * acc;
  }
  return out;
}

inline double smootherstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

/// Radial C² cut-off: 0 for |k| ≤ inner, 1 for |k| ≥ outer.
inline MultiplierSpec smooth_cutoff(double inner = 0.25, double outer = 0.5) {
  return {[inner, outer](const DualIndex& k) { return smootherstep((k.norm() - inner) / (outer - inner)); },
          "chi"};
}

/// κ_n = N^{-2} Σ_{k ∈ Ξ_n} χ(k) / (−l^n(k)) over the full dual torus.
inline double renormalization_constant(const LatticeSpec& spec, const MultiplierSpec& chi) {
  if (spec.d != 2) throw std::invalid_argument("renormalization_constant: defined for d = 2 only");
  const int M = spec.M();
  const double N = spec.N();
  double acc = 0.0;
  DualIndex k;
  k.N = spec.N();
  k.d = 2;
  k.flavor = Flavor::periodic;
  for (int a = -M + 1; a <= M; ++a) {
    for (int b = -M + 1; b <= M; ++b) {
      k.m = {a, b};
      const double c = chi(k);
      if (c == 0.0) continue;
      const double lt = -laplacian_symbol(k, spec);
      if (lt <= 0.0) throw std::invalid_argument("renormalization_constant: cut-off does not vanish at k = 0");
      acc += c / lt;
    }
  }
  return acc / (N * N);
}

/// Evaluates Σ_k c_k l_k on the m-times refined grid y = j/(mn),
/// j ∈ {0,…,mLn}^d, i.e. the trigonometric-polynomial interpolant.
inline std::vector<double> synthesize_refined(const SpectrumCoeffs& c, int refinement) {
  if (refinement < 1) throw std::invalid_argument("synthesize_refined: refinement must be >= 1");
  const LatticeSpec& s = c.spec;
  const int M = s.M();
  const int F = refinement * M + 1;
  const int P = c.modes_per_axis();
  const int m0 = c.first_mode();
  const double N = s.N();
  std::vector<double> B(std::size_t(F) * P);
  for (int j = 0; j < F; ++j) {
    const double y = double(j) / (double(refinement) * s.n);
    for (int p = 0; p < P; ++p) {
      const int m = m0 + p;
      const double arg = 2.0 * std::numbers::pi * (m / N) * y;
      B[std::size_t(j) * P + p] = c.flavor == Flavor::dirichlet
                                      ? 2.0 * std::sin(arg) / std::sqrt(N)
                                      : 2.0 * detail::neumann_scale(m, M) * std::cos(arg) / std::sqrt(N);
    }
  }
  if (s.d == 1) {
    std::vector<double> out(F, 0.0);
    for (int j = 0; j < F; ++j)
      for (int p = 0; p < P; ++p) out[j] += B[std::size_t(j) * P + p] * c.coeffs[p];
    return out;
  }
  std::vector<double> tmp(std::size_t(F) * P, 0.0);
  for (int j = 0; j < F; ++j)
    for (int p = 0; p < P; ++p) {
      const double b = B[std::size_t(j) * P + p];
      for (int q = 0; q < P; ++q) tmp[std::size_t(j) * P + q] += b * c.coeffs[std::size_t(p) * P + q];
    }
  std::vector<double> out(std::size_t(F) * F, 0.0);
  for (int j = 0; j < F; ++j)
    for (int i = 0; i < F; ++i) {
      double acc = 0.0;
      for (int q = 0; q < P; ++q) acc += tmp[std::size_t(j) * P + q] * B[std::size_t(i) * P + q];
      out[std::size_t(j) * F + i] = acc;
    }
  return out;
}

}  // namespace krsbm
