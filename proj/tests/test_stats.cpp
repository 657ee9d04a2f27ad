#include <cmath>

#include "doctest.h"
#include "fqr/rng.hpp"
#include "fqr/stats.hpp"

using namespace fqr;

TEST_CASE("normal quantile reference values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(0.995) == doctest::Approx(2.575829303548901).epsilon(1e-9));
  // round trip over a range
  for (double p : {1e-6, 1e-3, 0.1, 0.4, 0.6, 0.9, 0.999, 1.0 - 1e-7}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
}

TEST_CASE("chi-square tail against known values") {
  // P(chi2_1 > 3.841458820694124) = 0.05
  CHECK(chi_square_upper_tail(1, 3.841458820694124) == doctest::Approx(0.05).epsilon(1e-8));
  // P(chi2_9 > 16.918977604620448) = 0.05
  CHECK(chi_square_upper_tail(9, 16.918977604620448) == doctest::Approx(0.05).epsilon(1e-8));
  CHECK(chi_square_upper_tail(9, 0.0) == doctest::Approx(1.0));
  CHECK(chi_square_upper_tail(300, 300.0) == doctest::Approx(0.4891417702506403).epsilon(1e-6));
  CHECK(chi_square_cdf(2, 5.991464547107979) == doctest::Approx(0.95).epsilon(1e-8));
}

TEST_CASE("Hall-Sheather bandwidth magnitude") {
  double h = hall_sheather_bandwidth(1000, 0.5);
  // n^{-1/3} z^{2/3} (1.5 phi^2(0))^{1/3} at tau = 0.5
  double expect = std::pow(1000.0, -1.0 / 3.0) * std::pow(1.959963984540054, 2.0 / 3.0) *
                  std::pow(1.5 * normal_pdf(0.0) * normal_pdf(0.0), 1.0 / 3.0);
  CHECK(h == doctest::Approx(expect).epsilon(1e-12));
  CHECK(hall_sheather_bandwidth(100, 0.1) > hall_sheather_bandwidth(10000, 0.1));
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a(7, 3, Rng::kScores);
  Rng b(7, 3, Rng::kScores);
  Rng c(7, 3, Rng::kResponseNoise);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 100; ++i) {
    auto ua = a.next_u64();
    all_equal = all_equal && (ua == b.next_u64());
    any_differs = any_differs || (ua != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("rng uniforms and normals have sane moments") {
  Rng rng(123);
  int n = 20000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    su += u;
    su2 += u * u;
    double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(su2 / n - 0.25 == doctest::Approx(1.0 / 12.0).epsilon(0.05));
  CHECK(sn / n == doctest::Approx(0.0).scale(1).epsilon(0.03));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sampling without replacement returns distinct indices") {
  Rng rng(5);
  auto idx = rng.sample_without_replacement(101, 10);
  CHECK(idx.size() == 10);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] != idx[i - 1]);
  for (auto v : idx) {
    CHECK(v >= 0);
    CHECK(v < 101);
  }
}
