#pragma once

// Discrete parabolic Anderson model ∂w = Δ^n_d w + ξ_e w + f with Dirichlet
// boundary conditions, its semigroup, principal eigenpair, and the dual
// equation ∂U = HU − νU².

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "krsbm/environment.hpp"
#include "krsbm/lattice.hpp"
#include "krsbm/spectral.hpp"

namespace krsbm {

enum class Scheme { splitting, dense_exponential };

inline std::string to_string(Scheme s) { return s == Scheme::splitting ? "splitting" : "dense-exponential"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "splitting") return Scheme::splitting;
  if (s == "dense-exponential") return Scheme::dense_exponential;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct PamProblem {
  Field potential;  // ξ_e on the box
  Field w0;
  std::function<Field(double)> forcing;  // empty = no forcing
  double horizon = 1.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::splitting;
  int record_every = 1;
};

/// Potential of the environment seen on a (possibly smaller) box.
inline Field potential_for(const EnhancedEnvironment& env, const LatticeSpec& box) {
  const LatticeSpec& s = env.spec();
  if (box.n != s.n || box.d != s.d) throw std::invalid_argument("potential_for: n or d mismatch");
  return box.L == s.L ? potential(env) : potential_on_box(env, box.L);
}

inline std::vector<std::size_t> interior_indices(const LatticeSpec& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.on_boundary(s.site(i))) out.push_back(i);
  return out;
}

/// One Strang step e^{V h/2} e^{Δ h} e^{V h/2}, both sub-flows exact.
class StrangStepper {
 public:
  StrangStepper(const Field& potential, double h) : spec_(potential.spec), half_(potential.spec) {
    for (std::size_t i = 0; i < spec_.size(); ++i) half_.values[i] = std::exp(0.5 * h * potential.values[i]);
    SpectrumCoeffs c{spec_, Flavor::dirichlet, {}};
    heat_.resize(mode_count(spec_, Flavor::dirichlet));
    for (std::size_t j = 0; j < heat_.size(); ++j) heat_[j] = std::exp(h * laplacian_symbol(c.mode(j), spec_));
  }

  void step(Field& w) const {
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] *= half_.values[i];
    SpectrumCoeffs c = forward_transform(w, Flavor::dirichlet);
    for (std::size_t j = 0; j < c.size(); ++j) c.coeffs[j] *= heat_[j];
    w = inverse_transform(c);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] *= half_.values[i];
  }

 private:
  LatticeSpec spec_;
  Field half_;
  std::vector<double> heat_;
};

/// H = Δ^n_d + diag(V) on interior sites.
inline Eigen::SparseMatrix<double> dirichlet_hamiltonian(const Field& potential) {
  const LatticeSpec& s = potential.spec;
  const auto inner = interior_indices(s);
  std::vector<int> pos(s.size(), -1);
  for (std::size_t r = 0; r < inner.size(); ++r) pos[inner[r]] = int(r);
  const double n2 = double(s.n) * s.n;
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < inner.size(); ++r) {
    const Site x = s.site(inner[r]);
    trip.emplace_back(int(r), int(r), potential.values[inner[r]] - 2.0 * s.d * n2);
    for (int a = 0; a < s.d; ++a)
      for (int sg : {-1, 1}) {
        Site y = x;
        y[a] += sg;
        const int c = pos[s.index(y)];
        if (c >= 0) trip.emplace_back(int(r), c, n2);
      }
  }
  Eigen::SparseMatrix<double> H(Eigen::Index(inner.size()), Eigen::Index(inner.size()));
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

namespace detail {

inline Eigen::VectorXd to_interior(const Field& u, const std::vector<std::size_t>& inner) {
  Eigen::VectorXd v(Eigen::Index(inner.size()));
  for (std::size_t r = 0; r < inner.size(); ++r) v(Eigen::Index(r)) = u.values[inner[r]];
  return v;
}

inline Field from_interior(const LatticeSpec& s, const Eigen::VectorXd& v, const std::vector<std::size_t>& inner) {
  Field u(s);
  for (std::size_t r = 0; r < inner.size(); ++r) u.values[inner[r]] = v(Eigen::Index(r));
  return u;
}

inline void require_dirichlet(const Field& u, const char* what) {
  if (!vanishes_on_boundary(u)) throw std::invalid_argument(std::string(what) + ": field must vanish on the boundary");
}

inline Field forcing_at(const PamProblem& p, double t) {
  Field f = p.forcing(t);
  if (!(f.spec == p.w0.spec)) throw std::invalid_argument("solve_linear_pam: forcing spec mismatch");
  zero_boundary(f);
  return f;
}

}  // namespace detail

inline Trajectory solve_linear_pam(const PamProblem& p) {
  if (!(p.dt > 0.0)) throw std::invalid_argument("solve_linear_pam: dt must be positive");
  if (!(p.horizon > 0.0)) throw std::invalid_argument("solve_linear_pam: horizon must be positive");
  require_same_spec(p.potential, p.w0, "solve_linear_pam");
  detail::require_dirichlet(p.w0, "solve_linear_pam");
  const LatticeSpec& s = p.w0.spec;
  const int K = std::max(1, int(std::ceil(p.horizon / p.dt - 1e-9)));
  const double h = p.horizon / K;
  const int every = std::max(1, p.record_every);

  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(p.w0);
  auto record = [&](int k, const Field& w) {
    if (k % every == 0 || k == K) {
      out.times.push_back(k * h);
      out.states.push_back(w);
    }
  };

  if (p.scheme == Scheme::splitting) {
    const StrangStepper full(p.potential, h);
    const StrangStepper half(p.potential, 0.5 * h);
    Field w = p.w0;
    for (int k = 1; k <= K; ++k) {
      full.step(w);
      if (p.forcing) {
        Field f = detail::forcing_at(p, (k - 0.5) * h);
        half.step(f);
        for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += h * f.values[i];
      }
      if (!vanishes_on_boundary(w)) throw std::logic_error("solve_linear_pam: boundary values drifted");
      record(k, w);
    }
    return out;
  }

  const auto inner = interior_indices(s);
  if (inner.size() > 4096) throw std::invalid_argument("solve_linear_pam: dense-exponential limited to 4096 interior sites");
  const Eigen::MatrixXd H = Eigen::MatrixXd(dirichlet_hamiltonian(p.potential));
  const Eigen::MatrixXd E = (H * h).exp();
  Eigen::MatrixXd Eh;
  if (p.forcing) Eh = (H * (0.5 * h)).exp();
  Eigen::VectorXd w = detail::to_interior(p.w0, inner);
  for (int k = 1; k <= K; ++k) {
    w = E * w;
    if (p.forcing) w += h * (Eh * detail::to_interior(detail::forcing_at(p, (k - 0.5) * h), inner));
    record(k, detail::from_interior(s, w, inner));
  }
  return out;
}

struct SolverOptions {
  double dt = 1e-3;
  Scheme scheme = Scheme::splitting;
};

/// T_t φ = e^{tH}φ.
inline Field semigroup_apply(const Field& potential, double t, const Field& phi, const SolverOptions& opt = {}) {
  if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be non-negative");
  require_same_spec(potential, phi, "semigroup_apply");
  detail::require_dirichlet(phi, "semigroup_apply");
  if (t == 0.0) return phi;
  PamProblem p{potential, phi, {}, t, std::min(opt.dt, t), opt.scheme, 1 << 30};
  return solve_linear_pam(p).states.back();
}

inline Field semigroup_apply(const EnhancedEnvironment& env, double t, const Field& phi, const SolverOptions& opt = {}) {
  return semigroup_apply(potential_for(env, phi.spec), t, phi, opt);
}

/// sup_x (T_t 1_interior)(x) on the grid t = k·dt ≤ T.
inline std::vector<std::pair<double, double>> semigroup_mass_sweep(const Field& potential, double T, double dt) {
  Field one(potential.spec, 1.0);
  zero_boundary(one);
  PamProblem p{potential, one, {}, T, dt, Scheme::splitting, 1};
  const Trajectory tr = solve_linear_pam(p);
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    double m = 0.0;
    for (double v : tr.states[k].values) m = std::max(m, std::abs(v));
    out.emplace_back(tr.times[k], m);
  }
  return out;
}

struct EigenPair {
  double lambda = 0.0;
  Field efunc;  // unit Euclidean norm over sites, positive inside
  double residual = 0.0;  // ‖H e − λ e‖₂ / max(1, |λ|)
  double min_interior = 0.0;
  int iterations = 0;
};

struct EigenOptions {
  double tol = 1e-10;
  double delta = 0.1;
  int substeps = 10;
  int max_iterations = 5000;
  int polish_iterations = 20;
};

/// Largest eigenvalue of H = Δ^n_d + ξ_e. Power iteration on the Strang
/// propagator of T_δ locates the ground state; inverse iteration with the
/// exact sparse H (shift just above the Rayleigh quotient) removes the
/// splitting bias.
inline EigenPair principal_eigenpair(const Field& potential, const EigenOptions& opt = {}) {
  const LatticeSpec& s = potential.spec;
  const auto inner = interior_indices(s);
  if (inner.empty()) throw std::invalid_argument("principal_eigenpair: box has no interior sites");
  const Eigen::SparseMatrix<double> H = dirichlet_hamiltonian(potential);
  const StrangStepper step(potential, opt.delta / opt.substeps);

  Field w(s, 1.0);
  zero_boundary(w);
  auto normalise = [](Eigen::VectorXd& v) {
    v /= v.norm();
    if (v.sum() < 0) v = -v;
  };
  Eigen::VectorXd v = detail::to_interior(w, inner);
  normalise(v);
  double rq = v.dot(H * v), prev = rq;
  EigenPair ep;
  for (int it = 0; it < opt.max_iterations; ++it) {
    w = detail::from_interior(s, v, inner);
    for (int k = 0; k < opt.substeps; ++k) step.step(w);
    v = detail::to_interior(w, inner);
    normalise(v);
    rq = v.dot(H * v);
    ep.iterations = it + 1;
    if (std::abs(rq - prev) <= 1e-9 * std::max(1.0, std::abs(rq))) break;
    prev = rq;
  }

  auto residual = [&](const Eigen::VectorXd& x, double lam) { return (H * x - lam * x).norm() / std::max(1.0, std::abs(lam)); };
  double res = residual(v, rq);
  for (int it = 0; it < opt.polish_iterations && res > opt.tol; ++it) {
    const double shift = rq + 1e-6 * std::max(1.0, std::abs(rq));
    Eigen::SparseMatrix<double> A = H;
    for (Eigen::Index r = 0; r < A.rows(); ++r) A.coeffRef(r, r) -= shift;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) break;
    for (int inner_it = 0; inner_it < 3; ++inner_it) {
      v = lu.solve(v);
      normalise(v);
    }
    rq = v.dot(H * v);
    res = residual(v, rq);
  }
  if (res > opt.tol)
    throw std::runtime_error("principal_eigenpair: no convergence, residual " + std::to_string(res));

  ep.lambda = rq;
  ep.residual = res;
  ep.efunc = detail::from_interior(s, v, inner);
  ep.min_interior = v.minCoeff();
  if (!(ep.min_interior > 0.0))
    throw std::runtime_error("principal_eigenpair: eigenfunction not positive on the interior");
  return ep;
}

/// U_t φ0 for ∂U = HU − νU² (ν ≥ 0 a site field), Strang splitting with the
/// exact sink flow φ ↦ φ/(1 + νφh). Checks 0 ≤ U ≤ T_t φ0 on exit.
inline Field solve_dual_fkpp(const Field& potential, const Field& phi0, const Field& nu, double t, double dt) {
  require_same_spec(potential, phi0, "solve_dual_fkpp");
  require_same_spec(potential, nu, "solve_dual_fkpp");
  detail::require_dirichlet(phi0, "solve_dual_fkpp");
  for (double v : phi0.values)
    if (v < 0.0) throw std::invalid_argument("solve_dual_fkpp: phi0 has negative entries");
  if (t < 0.0) throw std::invalid_argument("solve_dual_fkpp: t must be non-negative");
  if (!(dt > 0.0)) throw std::invalid_argument("solve_dual_fkpp: dt must be positive");
  if (t == 0.0) return phi0;
  const int K = std::max(1, int(std::ceil(t / dt - 1e-9)));
  const double h = t / K;
  const StrangStepper step(potential, h);
  auto sink = [&](Field& u, double tau) {
    for (std::size_t i = 0; i < u.size(); ++i) u.values[i] /= 1.0 + nu.values[i] * u.values[i] * tau;
  };
  Field u = phi0, lin = phi0;
  for (int k = 0; k < K; ++k) {
    sink(u, 0.5 * h);
    step.step(u);
    sink(u, 0.5 * h);
    step.step(lin);
  }
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.values[i] < 0.0 || u.values[i] > lin.values[i] * (1.0 + 1e-12) + 1e-300)
      throw std::logic_error("solve_dual_fkpp: comparison 0 <= U <= T phi0 violated");
  return u;
}

inline Field solve_dual_fkpp(const Field& potential, const Field& phi0, double nu, double t, double dt) {
  return solve_dual_fkpp(potential, phi0, Field(potential.spec, nu), t, dt);
}

}  // namespace krsbm
