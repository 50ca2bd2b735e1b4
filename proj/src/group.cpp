#include "steer/group.hpp"

#include <cctype>
#include <climits>
#include <cmath>
#include <stdexcept>

namespace steer {

namespace {

double mod_tau(double theta) {
  double r = std::fmod(theta, kTau);
  if (r < 0) r += kTau;
  // fmod can return kTau for inputs just below a multiple of 2*pi
  if (r >= kTau) r -= kTau;
  return r;
}

}  // namespace

int GroupDescriptor::order() const {
  switch (kind) {
    case GroupKind::CN: return n;
    case GroupKind::DN: return 2 * n;
    default: return -1;
  }
}

int GroupDescriptor::max_frequency() const {
  if (finite()) return n / 2;
  return INT_MAX;
}

std::string GroupDescriptor::name() const {
  switch (kind) {
    case GroupKind::CN: return "c" + std::to_string(n);
    case GroupKind::DN: return "d" + std::to_string(n);
    case GroupKind::SO2: return "so2";
    case GroupKind::O2: return "o2";
  }
  return "?";
}

GroupDescriptor cyclic_group(int n) {
  if (n < 1) throw std::invalid_argument("cyclic_group: N >= 1 required");
  return {GroupKind::CN, n};
}
GroupDescriptor dihedral_group(int n) {
  if (n < 1) throw std::invalid_argument("dihedral_group: N >= 1 required");
  return {GroupKind::DN, n};
}
GroupDescriptor so2_group() { return {GroupKind::SO2, 0}; }
GroupDescriptor o2_group() { return {GroupKind::O2, 0}; }

GroupDescriptor parse_group(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(c));
  if (s == "so2" || s == "so(2)") return so2_group();
  if (s == "o2" || s == "o(2)") return o2_group();
  if (s.size() >= 2 && (s[0] == 'c' || s[0] == 'd')) {
    const int n = std::atoi(s.c_str() + 1);
    if (n >= 1) return s[0] == 'c' ? cyclic_group(n) : dihedral_group(n);
  }
  throw std::invalid_argument("unknown group name: " + name);
}

GroupElement make_element(const GroupDescriptor& g, double theta, bool reflect) {
  if (reflect && !g.has_reflections())
    throw std::invalid_argument("reflection not representable in " + g.name());
  double t = mod_tau(theta);
  if (g.finite()) {
    const double step = kTau / g.n;
    const double k = t / step;
    const double kr = std::round(k);
    if (std::abs(k - kr) * step > 1e-9)
      throw std::invalid_argument("angle off the " + g.name() + " grid");
    int ki = static_cast<int>(kr) % g.n;
    t = ki * step;
  }
  return {t, reflect};
}

GroupElement identity_element() { return {0.0, false}; }

bool element_valid(const GroupDescriptor& g, const GroupElement& e, double tol) {
  if (e.reflect && !g.has_reflections()) return false;
  if (e.theta < 0 || e.theta >= kTau) return false;
  if (g.finite()) {
    const double step = kTau / g.n;
    const double k = e.theta / step;
    if (std::abs(k - std::round(k)) * step > tol) return false;
  }
  return true;
}

GroupElement compose(const GroupElement& a, const GroupElement& b,
                     const GroupDescriptor& g) {
  if (!element_valid(g, a) || !element_valid(g, b))
    throw std::invalid_argument("compose: element not representable in " + g.name());
  const double s = a.reflect ? -1.0 : 1.0;
  return make_element(g, a.theta + s * b.theta, a.reflect != b.reflect);
}

GroupElement inverse(const GroupElement& a, const GroupDescriptor& g) {
  if (a.reflect) return a;  // reflections are involutions under this convention
  return make_element(g, -a.theta, false);
}

bool elements_close(const GroupElement& a, const GroupElement& b, double tol) {
  if (a.reflect != b.reflect) return false;
  double d = std::abs(a.theta - b.theta);
  d = std::min(d, kTau - d);
  return d <= tol;
}

std::vector<GroupElement> sample_grid(const GroupDescriptor& g, int n_per_coset) {
  std::vector<GroupElement> out;
  if (g.finite()) {
    const double step = kTau / g.n;
    for (int k = 0; k < g.n; ++k) out.push_back({k * step, false});
    if (g.kind == GroupKind::DN)
      for (int k = 0; k < g.n; ++k) out.push_back({k * step, true});
    return out;
  }
  if (n_per_coset < 1) throw std::invalid_argument("sample_grid: n_per_coset >= 1");
  const double step = kTau / n_per_coset;
  for (int k = 0; k < n_per_coset; ++k) out.push_back({k * step, false});
  if (g.kind == GroupKind::O2)
    for (int k = 0; k < n_per_coset; ++k) out.push_back({k * step, true});
  return out;
}

std::uint64_t Rng::next_u64() {
  // splitmix64: small, seedable, identical everywhere
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal(double mean, double stddev) {
  if (have_spare_) {
    have_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTau * u2);
  have_spare_ = true;
  return mean + stddev * r * std::cos(kTau * u2);
}

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::vector<GroupElement> sample_near_identity(const GroupDescriptor& g,
                                               int count, Rng& rng) {
  std::vector<GroupElement> out;
  if (g.finite()) return out;
  for (int i = 0; i < count; ++i)
    out.push_back({std::fmod(rng.normal(0.0, 0.2) + kTau, kTau), false});
  return out;
}

GroupElement random_element(const GroupDescriptor& g, Rng& rng) {
  bool refl = g.has_reflections() && rng.uniform() < 0.5;
  if (g.finite()) {
    const int k = rng.uniform_int(0, g.n - 1);
    return {k * (kTau / g.n), refl};
  }
  return {rng.uniform(0.0, kTau), refl};
}

}  // namespace steer
