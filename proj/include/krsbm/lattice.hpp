#pragma once

// Finite boxes, their periodic doubles, and the odd/even reflection
// extensions that encode Dirichlet and Neumann boundary conditions.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace krsbm {

enum class Flavor { dirichlet, neumann, periodic };

inline std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::dirichlet: return "dirichlet";
    case Flavor::neumann: return "neumann";
    case Flavor::periodic: return "periodic";
  }
  return "unknown";
}

inline Flavor flavor_from_string(const std::string& s) {
  if (s == "dirichlet") return Flavor::dirichlet;
  if (s == "neumann") return Flavor::neumann;
  if (s == "periodic") return Flavor::periodic;
  throw std::invalid_argument("unknown flavor '" + s + "'");
}

using Site = std::array<int, 2>;

/// Geometry of the box Λ_n = (1/n)Z^d ∩ [0,L]^d and its doubled torus
/// Θ_n of side N = 2L. Sites are stored by integer multi-index
/// i ∈ {0,…,Ln}^d, row-major, last coordinate fastest.
struct LatticeSpec {
  int n = 1;
  int L = 2;
  int d = 1;
  bool centered = true;

  LatticeSpec() = default;
  LatticeSpec(int n_, int L_, int d_, bool centered_ = true)
      : n(n_), L(L_), d(d_), centered(centered_) {
    validate();
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("LatticeSpec: n must be >= 1");
    if (L < 2 || L % 2 != 0)
      throw std::invalid_argument("LatticeSpec: L must be an even positive integer");
    if (d != 1 && d != 2) throw std::invalid_argument("LatticeSpec: d must be 1 or 2");
  }

  int N() const { return 2 * L; }
  /// Number of mesh steps per axis, Ln.
  int M() const { return L * n; }
  /// Sites per axis of Λ_n.
  int side() const { return M() + 1; }
  /// Sites per axis of Θ_n.
  int torus_side() const { return 2 * M(); }

  std::size_t size() const { return d == 1 ? std::size_t(side()) : std::size_t(side()) * side(); }
  std::size_t torus_size() const {
    return d == 1 ? std::size_t(torus_side()) : std::size_t(torus_side()) * torus_side();
  }

  std::size_t index(const Site& i) const {
    return d == 1 ? std::size_t(i[0]) : std::size_t(i[0]) * side() + std::size_t(i[1]);
  }
  Site site(std::size_t idx) const {
    if (d == 1) return {int(idx), 0};
    return {int(idx / side()), int(idx % side())};
  }
  bool contains(const Site& i) const {
    for (int a = 0; a < d; ++a)
      if (i[a] < 0 || i[a] > M()) return false;
    return true;
  }
  bool on_boundary(const Site& i) const {
    for (int a = 0; a < d; ++a)
      if (i[a] == 0 || i[a] == M()) return true;
    return false;
  }

  /// Integer offset from the box centre (units of 1/n); the origin site
  /// of a centered box has offset 0.
  Site offset(const Site& i) const {
    Site o{0, 0};
    for (int a = 0; a < d; ++a) o[a] = i[a] - M() / 2;
    return o;
  }
  Site from_offset(const Site& o) const {
    Site i{0, 0};
    for (int a = 0; a < d; ++a) i[a] = o[a] + M() / 2;
    return i;
  }
  std::size_t origin_index() const { return index(from_offset({0, 0})); }

  /// Physical coordinate of a site along one axis.
  double coordinate(const Site& i, int axis) const {
    const double x = double(i[axis]) / n;
    return centered ? x - 0.5 * L : x;
  }

  bool operator==(const LatticeSpec&) const = default;
};

/// Real function on Λ_n.
struct Field {
  LatticeSpec spec;
  std::vector<double> values;

  Field() = default;
  explicit Field(const LatticeSpec& s, double fill = 0.0) : spec(s), values(s.size(), fill) {}
  Field(const LatticeSpec& s, std::vector<double> v) : spec(s), values(std::move(v)) {
    if (values.size() != spec.size()) throw std::invalid_argument("Field: size does not match spec");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(const Site& s) { return values[spec.index(s)]; }
  double at(const Site& s) const { return values[spec.index(s)]; }
};

/// Real function on the torus Θ_n; coordinates are taken mod 2Ln and the
/// stored index t ∈ {0,…,2Ln−1} stands for the corner coordinate t/n
/// (t ≥ Ln being the reflected half).
struct TorusField {
  LatticeSpec spec;
  std::vector<double> values;

  TorusField() = default;
  explicit TorusField(const LatticeSpec& s, double fill = 0.0)
      : spec(s), values(s.torus_size(), fill) {}

  static int wrap(int t, int period) {
    const int r = t % period;
    return r < 0 ? r + period : r;
  }
  std::size_t index(const Site& t) const {
    const int P = spec.torus_side();
    if (spec.d == 1) return std::size_t(wrap(t[0], P));
    return std::size_t(wrap(t[0], P)) * P + std::size_t(wrap(t[1], P));
  }
  double& at(const Site& t) { return values[index(t)]; }
  double at(const Site& t) const { return values[index(t)]; }
  Site site(std::size_t idx) const {
    const int P = spec.torus_side();
    if (spec.d == 1) return {int(idx), 0};
    return {int(idx / P), int(idx % P)};
  }
};

inline void require_same_spec(const Field& a, const Field& b, const char* what) {
  if (!(a.spec == b.spec)) throw std::invalid_argument(std::string(what) + ": mismatched lattice specs");
}

/// Sites of Λ_n with at least one coordinate on the box boundary.
inline std::vector<Site> boundary_sites(const LatticeSpec& spec) {
  std::vector<Site> out;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const Site s = spec.site(k);
    if (spec.on_boundary(s)) out.push_back(s);
  }
  return out;
}

struct Reflection {
  Site site;  // representative in Λ_n
  int sign;   // ∏q, or 0 when a sign-reversing reflection fixes the site
};

/// Folds a torus coordinate back into Λ_n.
inline Reflection fold(const LatticeSpec& spec, const Site& t) {
  const int M = spec.M();
  const int P = spec.torus_side();
  Reflection r{{0, 0}, 1};
  for (int a = 0; a < spec.d; ++a) {
    int c = TorusField::wrap(t[a], P);
    if (c > M) {
      c = P - c;
      r.sign = -r.sign;
    }
    if (c == 0 || c == M) r.sign = 0;
    r.site[a] = c;
  }
  return r;
}

/// Value of Π_o u at a torus coordinate without materialising Π_o u.
inline double odd_value(const Field& u, const Site& t) {
  const Reflection r = fold(u.spec, t);
  return r.sign == 0 ? 0.0 : r.sign * u.at(r.site);
}

/// Value of Π_e u at a torus coordinate.
inline double even_value(const Field& u, const Site& t) {
  const LatticeSpec& spec = u.spec;
  const int M = spec.M();
  const int P = spec.torus_side();
  Site s{0, 0};
  for (int a = 0; a < spec.d; ++a) {
    int c = TorusField::wrap(t[a], P);
    s[a] = c > M ? P - c : c;
  }
  return u.at(s);
}

inline TorusField odd_extension(const Field& u) {
  TorusField out(u.spec);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = odd_value(u, out.site(k));
  return out;
}

inline TorusField even_extension(const Field& u) {
  TorusField out(u.spec);
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = even_value(u, out.site(k));
  return out;
}

inline Field restrict(const TorusField& v) {
  Field out(v.spec);
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = v.at(v.spec.site(k));
  return out;
}

/// Number of torus points that fold onto site i (2 per interior axis).
inline int reflection_multiplicity(const LatticeSpec& spec, const Site& i) {
  int m = 1;
  for (int a = 0; a < spec.d; ++a)
    if (i[a] != 0 && i[a] != spec.M()) m *= 2;
  return m;
}

/// Sets boundary values to zero.
inline void zero_boundary(Field& u) {
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.spec.on_boundary(u.spec.site(k))) u.values[k] = 0.0;
}

inline bool vanishes_on_boundary(const Field& u) {
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.spec.on_boundary(u.spec.site(k)) && u.values[k] != 0.0) return false;
  return true;
}

/// Fields sampled on a time grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
};

/// Copies the overlap of a field onto a (smaller or equal) centered box
/// with the same n and d, matching sites by offset from the centre.
inline Field restrict_to_box(const Field& u, int L) {
  const LatticeSpec target(u.spec.n, L, u.spec.d, u.spec.centered);
  if (target.M() > u.spec.M()) throw std::invalid_argument("restrict_to_box: target box larger than source");
  Field out(target);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Site o = target.offset(target.site(k));
    out.values[k] = u.at(u.spec.from_offset(o));
  }
  return out;
}

}  // namespace krsbm
