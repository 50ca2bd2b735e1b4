#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace steer {

inline constexpr double kTau = 6.283185307179586476925286766559;  // 2*pi

// Compact subgroups H <= O(2). An element is a rotation angle plus an
// optional reflection flag; reflect=true means "reflect about the x-axis,
// then rotate by theta". Composition follows the semidirect product
// O(2) = C_2 |x SO(2).
struct GroupElement {
  double theta = 0.0;
  bool reflect = false;
};

enum class GroupKind { CN, DN, SO2, O2 };

struct GroupDescriptor {
  GroupKind kind = GroupKind::SO2;
  int n = 0;  // N for CN / DN, unused otherwise

  bool finite() const { return kind == GroupKind::CN || kind == GroupKind::DN; }
  bool has_reflections() const {
    return kind == GroupKind::DN || kind == GroupKind::O2;
  }
  // |H| for finite groups
  int order() const;
  // Largest irrep rotation frequency (INT_MAX for continuous groups).
  int max_frequency() const;
  std::string name() const;

  bool operator==(const GroupDescriptor& o) const {
    return kind == o.kind && (finite() ? n == o.n : true);
  }
};

GroupDescriptor cyclic_group(int n);
GroupDescriptor dihedral_group(int n);
GroupDescriptor so2_group();
GroupDescriptor o2_group();
// Parses "c4", "d8", "so2", "o2".
GroupDescriptor parse_group(const std::string& name);

// Canonical element constructor: reduces theta mod 2*pi and, for finite
// groups, snaps onto the 2*pi*k/N grid (throws if off-grid beyond 1e-9 or
// if the reflection flag is invalid for the group).
GroupElement make_element(const GroupDescriptor& g, double theta, bool reflect);
GroupElement identity_element();

bool element_valid(const GroupDescriptor& g, const GroupElement& e,
                   double tol = 1e-9);

GroupElement compose(const GroupElement& a, const GroupElement& b,
                     const GroupDescriptor& g);
GroupElement inverse(const GroupElement& a, const GroupDescriptor& g);

bool elements_close(const GroupElement& a, const GroupElement& b,
                    double tol = 1e-12);

// Finite groups: all elements, exactly once. SO(2): n_per_coset equispaced
// rotations starting at 0. O(2): n_per_coset per reflection coset (2n
// total). Rotation coset first, theta ascending.
std::vector<GroupElement> sample_grid(const GroupDescriptor& g, int n_per_coset);

// Deterministic RNG used throughout (explicit 64-bit seeds everywhere).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal(double mean = 0.0, double stddev = 1.0);
  int uniform_int(int lo, int hi);  // inclusive range

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Continuous groups only: angles ~ N(0, 0.2 rad) around the identity,
// reflect=false. Finite groups return an empty list.
std::vector<GroupElement> sample_near_identity(const GroupDescriptor& g,
                                               int count, Rng& rng);

GroupElement random_element(const GroupDescriptor& g, Rng& rng);

}  // namespace steer
