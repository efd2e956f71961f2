#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "qpt/errors.hpp"
#include "qpt/su2.hpp"

using namespace qpt;

namespace {

const cplx I{0.0, 1.0};

Unitary2 mat(cplx a, cplx b, cplx c, cplx d) {
  Unitary2 u;
  u.m = {a, b, c, d};
  return u;
}

GateParams random_params(Rng& rng) {
  // Uncanonicalized: any theta, any direction.
  const double t = rng.uniform(0.0, kPi);
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(1.0 - z * z);
  return {t, {r * std::cos(phi), r * std::sin(phi), z}};
}

}  // namespace

TEST_CASE("gate_matrix special values") {
  CHECK(max_abs_diff(gate_matrix({0.0, {0, 0, 1}}), Unitary2::identity()) < 1e-15);
  CHECK(max_abs_diff(gate_matrix({kPi / 2, {0, 0, 1}}), mat(-I, 0.0, 0.0, I)) < 1e-15);
  CHECK(max_abs_diff(gate_matrix({kPi / 2, {1, 0, 0}}), mat(0.0, -I, -I, 0.0)) < 1e-15);
}

TEST_CASE("gate_matrix rejects malformed parameters") {
  CHECK_THROWS_AS(gate_matrix({0.3, {1, 1, 0}}), InvalidParameter);
  CHECK_THROWS_AS(gate_matrix({-0.1, {0, 0, 1}}), InvalidParameter);
  CHECK_THROWS_AS(gate_matrix({0.3, {0, 0, 1.0 + 1e-9}}), InvalidParameter);
}

TEST_CASE("gate_matrix agrees with the matrix exponential") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const GateParams p = random_params(rng);
    CHECK(oracle::max_diff(oracle::to_eigen(gate_matrix(p)), oracle::gate(p.theta, p.n)) < 1e-13);
  }
}

TEST_CASE("gate_matrix is unitary with unit determinant") {
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const Unitary2 u = gate_matrix(random_params(rng));
    REQUIRE(unitarity_error(u) < 1e-12);
    REQUIRE(std::abs(u.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("params_from_matrix special values") {
  const GateParams id = params_from_matrix(Unitary2::identity());
  CHECK(id.theta == 0.0);
  CHECK(id.n == Vec3{0, 0, 1});

  const GateParams p = params_from_matrix(mat(I, 0.0, 0.0, -I));
  CHECK(p.theta == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(p.n[2] == doctest::Approx(1.0));
  CHECK(std::abs(p.n[0]) < 1e-15);
  CHECK(std::abs(p.n[1]) < 1e-15);

  CHECK(params_from_matrix(-Unitary2::identity()) == GateParams{});
}

TEST_CASE("params_from_matrix rejects invalid matrices") {
  CHECK_THROWS_AS(params_from_matrix(mat(2.0, 0.0, 0.0, 0.5)), InvalidMatrix);
  CHECK_THROWS_AS(params_from_matrix(mat(1.0, 0.0, 0.0, -1.0)), InvalidMatrix);  // det -1
  CHECK_THROWS_AS(params_from_matrix(mat(1.0, 1e-6, 0.0, 1.0)), InvalidMatrix);
}

TEST_CASE("params_from_matrix round trip on Haar gates") {
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) {
    const GateParams p = random_params(rng);
    const Unitary2 u = gate_matrix(p);
    const GateParams q = params_from_matrix(u);
    REQUIRE(is_canonical(q));
    const Unitary2 v = gate_matrix(q);
    REQUIRE(std::min(max_abs_diff(u, v), max_abs_diff(u, -v)) < 1e-10);
  }
}

TEST_CASE("params_from_matrix returns the canonical representative") {
  Rng rng(14);
  for (int i = 0; i < 10000; ++i) {
    GateParams p = random_params(rng);
    p.theta = std::clamp(p.theta, 1e-6, kPi - 1e-6);
    const GateParams c = canonicalize(p);
    const GateParams q = params_from_matrix(gate_matrix(p));
    REQUIRE(std::abs(q.theta - c.theta) < 1e-10);
    for (int k = 0; k < 3; ++k) REQUIRE(std::abs(q.n[k] - c.n[k]) < 1e-10);
  }
}

TEST_CASE("canonicalize examples") {
  const GateParams a = canonicalize({kPi / 4, {0, 0, -1}});
  CHECK(a.theta == doctest::Approx(3 * kPi / 4));
  CHECK(a.n == Vec3{0, 0, 1});
  CHECK(canonicalize({kPi / 2, {0, 0, 1}}) == GateParams{kPi / 2, {0, 0, 1}});
  const GateParams b = canonicalize({kPi / 2, {-1, 0, 0}});
  CHECK(b.theta == kPi / 2);
  CHECK(b.n == Vec3{1, 0, 0});
  CHECK(canonicalize({kPi / 2, {0, -1, 0}}).n == Vec3{0, 1, 0});
  CHECK(canonicalize({kPi, {0.6, 0, 0.8}}) == GateParams{});
  CHECK(canonicalize({0.0, {0.6, 0, -0.8}}) == GateParams{});
}

TEST_CASE("canonicalize is idempotent and gauge complete") {
  Rng rng(15);
  std::vector<GateParams> cases;
  for (int i = 0; i < 5000; ++i) cases.push_back(random_params(rng));
  // Points on the tie circles.
  for (int i = 0; i < 500; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    cases.push_back({rng.uniform(0.0, kPi), {std::cos(phi), std::sin(phi), 0.0}});
    cases.push_back({rng.uniform(0.0, kPi), {0.0, rng.uniform() < 0.5 ? 1.0 : -1.0, 0.0}});
  }
  for (const GateParams& p : cases) {
    const GateParams c = canonicalize(p);
    REQUIRE(is_canonical(c));
    REQUIRE(canonicalize(c) == c);
    const GateParams f = canonicalize(gauge_flip(p));
    REQUIRE(std::abs(f.theta - c.theta) <= 4e-16);
    REQUIRE(f.n == c.n);
  }
}

TEST_CASE("compose") {
  Rng rng(16);
  for (int i = 0; i < 200; ++i) {
    const Unitary2 u = gate_matrix(random_params(rng));
    CHECK(max_abs_diff(compose(Unitary2::identity(), u), u) < 1e-15);
    CHECK(max_abs_diff(compose(u, u.adjoint()), Unitary2::identity()) < 1e-14);
    const Unitary2 v = gate_matrix(random_params(rng));
    const oracle::M2 direct = oracle::to_eigen(u) * oracle::to_eigen(v);
    CHECK(oracle::max_diff(oracle::to_eigen(compose(u, v)), direct) < 1e-15);
  }
}

TEST_CASE("fidelity examples and invariances") {
  CHECK(fidelity(Unitary2::identity(), mat(-I, 0.0, 0.0, I)) == doctest::Approx(0.0));
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const Unitary2 a = gate_matrix(random_params(rng));
    const Unitary2 b = gate_matrix(random_params(rng));
    const Unitary2 v = gate_matrix(random_params(rng));
    REQUIRE(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(fidelity(a, -a) == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(std::abs(fidelity(a, b) - fidelity(b, a)) < 1e-15);
    REQUIRE(std::abs(fidelity(v * a, v * b) - fidelity(a, b)) < 1e-12);
    REQUIRE(std::abs(fidelity(a, b) - oracle::fidelity(oracle::to_eigen(a), oracle::to_eigen(b))) < 1e-14);
  }
}

TEST_CASE("Haar sampling: theta density is proportional to sin^2") {
  Rng rng(18);
  constexpr int kSamples = 100000;
  constexpr int kBins = 20;
  std::vector<int> counts(kBins, 0);
  int below = 0;
  for (int i = 0; i < kSamples; ++i) {
    const GateParams p = sample_haar(rng);
    REQUIRE(is_canonical(p));
    const int b = std::min(kBins - 1, static_cast<int>(p.theta / kPi * kBins));
    ++counts[static_cast<std::size_t>(b)];
    below += p.theta < kPi / 2;
  }
  auto cdf = [](double t) { return (t - std::sin(t) * std::cos(t)) / kPi; };
  double chi2 = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double expected = kSamples * (cdf((b + 1) * kPi / kBins) - cdf(b * kPi / kBins));
    chi2 += (counts[static_cast<std::size_t>(b)] - expected) * (counts[static_cast<std::size_t>(b)] - expected) / expected;
  }
  CHECK(chi2 < 43.82);  // 19 dof, p = 0.001
  // P(theta < pi/2) = 1/2, binomial sd = sqrt(N)/2
  CHECK(std::abs(below - kSamples / 2.0) < 4.0 * std::sqrt(kSamples) / 2.0);
}

TEST_CASE("Haar sampling: axis isotropy on the canonical hemisphere") {
  Rng rng(19);
  constexpr int kSamples = 100000;
  double sx = 0, sy = 0, sz = 0;
  for (int i = 0; i < kSamples; ++i) {
    const GateParams p = sample_haar(rng);
    sx += p.n[0];
    sy += p.n[1];
    sz += p.n[2];
  }
  // n_x, n_y: mean 0, variance 1/3. n_z on the upper hemisphere: mean 1/2, variance 1/12.
  const double sd_xy = std::sqrt(1.0 / 3.0 / kSamples);
  const double sd_z = std::sqrt(1.0 / 12.0 / kSamples);
  CHECK(std::abs(sx / kSamples) < 4 * sd_xy);
  CHECK(std::abs(sy / kSamples) < 4 * sd_xy);
  CHECK(std::abs(sz / kSamples - 0.5) < 4 * sd_z);
}

TEST_CASE("ball sampling: |d| = theta has density proportional to theta^2") {
  Rng rng(20);
  constexpr int kSamples = 50000;
  int below = 0;
  for (int i = 0; i < kSamples; ++i) {
    const GateParams p = sample_ball(rng);
    REQUIRE(is_canonical(p));
    // Canonicalization maps theta to pi - theta when it flips n, so fold.
    const double t = std::min(p.theta, kPi - p.theta);
    below += t < kPi / 4;
  }
  // Folded radius r = min(theta, pi - theta) over a uniform ball radius.
  // P(r < pi/4) = P(theta < pi/4) + P(theta > 3pi/4) = 1/64 + (1 - 27/64)
  const double p = 1.0 / 64 + (1.0 - 27.0 / 64);
  CHECK(std::abs(below - p * kSamples) < 4.0 * std::sqrt(kSamples * p * (1 - p)));
}

TEST_CASE("rng substreams are deterministic and distinct") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  Rng s1 = Rng::substream(7, "gate", 0);
  Rng s2 = Rng::substream(7, "gate", 0);
  Rng s3 = Rng::substream(7, "gate", 1);
  Rng s4 = Rng::substream(7, "noise", 0);
  const auto v1 = s1.next_u64();
  CHECK(v1 == s2.next_u64());
  CHECK(v1 != s3.next_u64());
  CHECK(v1 != s4.next_u64());
}
