#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "steer/group.hpp"
#include "steer/kernels.hpp"

using namespace steer;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -3,
                               double hi = 3) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool close(double a, double b, double atol, double rtol) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

#if defined(__x86_64__)

TEST_CASE("scalar and avx2 elementwise kernels agree") {
  if (!kern::avx2_supported()) return;
  const auto& s = kern::scalar_ops();
  const auto& a = kern::avx2_ops();
  Rng rng(1);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 129u}) {
    auto x = random_vec(n, rng), y = random_vec(n, rng);
    std::vector<double> rs(n), ra(n);

    s.add(rs.data(), x.data(), y.data(), n);
    a.add(ra.data(), x.data(), y.data(), n);
    CHECK(rs == ra);

    s.mul(rs.data(), x.data(), y.data(), n);
    a.mul(ra.data(), x.data(), y.data(), n);
    CHECK(rs == ra);

    s.div(rs.data(), x.data(), y.data(), n);
    a.div(ra.data(), x.data(), y.data(), n);
    CHECK(rs == ra);

    s.scale(rs.data(), x.data(), 1.7, n);
    a.scale(ra.data(), x.data(), 1.7, n);
    CHECK(rs == ra);
  }
}

TEST_CASE("scalar and avx2 transcendental kernels agree") {
  if (!kern::avx2_supported()) return;
  const auto& s = kern::scalar_ops();
  const auto& a = kern::avx2_ops();
  Rng rng(2);
  auto x = random_vec(513, rng, -40.0, 40.0);
  x.push_back(0.0);
  x.push_back(-700.0);
  x.push_back(700.0);
  x.push_back(1e-12);
  const std::size_t n = x.size();
  std::vector<double> rs(n), ra(n);

  s.vexp(rs.data(), x.data(), n);
  a.vexp(ra.data(), x.data(), n);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(close(rs[i], ra[i], 0.0, 1e-13));

  s.vsigmoid(rs.data(), x.data(), n);
  a.vsigmoid(ra.data(), x.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(close(rs[i], ra[i], 1e-15, 1e-13));

  s.velu(rs.data(), x.data(), n);
  a.velu(ra.data(), x.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(close(rs[i], ra[i], 1e-12, 1e-13));

  auto gy = random_vec(n, rng);
  s.velu_bwd(rs.data(), x.data(), gy.data(), n);
  a.velu_bwd(ra.data(), x.data(), gy.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(close(rs[i], ra[i], 1e-12, 1e-13));
}

TEST_CASE("scalar and avx2 reductions agree") {
  if (!kern::avx2_supported()) return;
  const auto& s = kern::scalar_ops();
  const auto& a = kern::avx2_ops();
  Rng rng(3);
  for (std::size_t n : {1u, 5u, 64u, 1001u}) {
    auto x = random_vec(n, rng), y = random_vec(n, rng);
    CHECK(close(s.dot(x.data(), y.data(), n), a.dot(x.data(), y.data(), n),
                1e-12, 1e-12));
    CHECK(close(s.sum(x.data(), n), a.sum(x.data(), n), 1e-12, 1e-12));
    CHECK(s.max(x.data(), n) == a.max(x.data(), n));
  }
}

TEST_CASE("scalar and avx2 gemm agree across transpose variants") {
  if (!kern::avx2_supported()) return;
  const auto& s = kern::scalar_ops();
  const auto& a = kern::avx2_ops();
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = rng.uniform_int(1, 17);
    const int n = rng.uniform_int(1, 17);
    const int k = rng.uniform_int(1, 17);
    const bool ta = rng.uniform() < 0.5, tb = rng.uniform() < 0.5;
    auto A = random_vec(static_cast<std::size_t>(m) * k, rng);
    auto B = random_vec(static_cast<std::size_t>(k) * n, rng);
    auto C0 = random_vec(static_cast<std::size_t>(m) * n, rng);
    auto Cs = C0, Ca = C0;
    const int lda = ta ? m : k;
    const int ldb = tb ? k : n;
    const double alpha = rng.uniform(-2, 2);
    const double beta = trial % 3 == 0 ? 0.0 : rng.uniform(-1, 1);
    s.gemm(ta, tb, m, n, k, alpha, A.data(), lda, B.data(), ldb, beta,
           Cs.data(), n);
    a.gemm(ta, tb, m, n, k, alpha, A.data(), lda, B.data(), ldb, beta,
           Ca.data(), n);
    for (std::size_t i = 0; i < Cs.size(); ++i)
      CHECK(close(Cs[i], Ca[i], 1e-12, 1e-12));
  }
}

#endif  // __x86_64__

TEST_CASE("dispatch reports a valid ISA") {
  const std::string isa = kern::active_isa();
  CHECK((isa == "scalar" || isa == "avx2"));
  // the dispatched table works
  double x[5] = {1, 2, 3, 4, 5};
  CHECK(kern::ops().sum(x, 5) == 15.0);
}
