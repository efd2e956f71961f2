#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "qpt/classic.hpp"
#include "qpt/errors.hpp"
#include "qpt/nelder_mead.hpp"

using namespace qpt;

namespace {

std::array<double, 5> five_of(const MeasurementSet& m) {
  return {m[Channel::LL], m[Channel::LH], m[Channel::LD], m[Channel::HL], m[Channel::HD]};
}

double ab_of(const GateParams& p) {
  const AmplitudePhase ap = amplitude_phase_from_params(p);
  return ap.a * ap.b;
}

}  // namespace

TEST_CASE("amplitude-phase form reproduces the gate matrix") {
  Rng rng(41);
  for (int i = 0; i < 1000; ++i) {
    const GateParams p = sample_haar(rng);
    const AmplitudePhase ap = amplitude_phase_from_params(p);
    CHECK(std::abs(ap.a * ap.a + ap.b * ap.b - 1.0) < 1e-12);
    CHECK(max_abs_diff(amplitude_phase_matrix(ap), gate_matrix(p)) < 1e-14);
    CHECK(fidelity(params_from_amplitude_phase(ap), p) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("corrected HD expression matches the matrix element") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const AmplitudePhase ap = amplitude_phase_from_params(sample_haar(rng));
    const double hd = 0.5 - 0.5 * ap.a * ap.a * std::sin(2 * ap.phi) + 0.5 * ap.b * ap.b * std::sin(2 * ap.psi);
    const oracle::M2 u = oracle::to_eigen(amplitude_phase_matrix(ap));
    CHECK(std::abs(hd - oracle::intensity(u, 'H', 'D')) < 1e-14);
  }
}

TEST_CASE("invert_six examples") {
  const GateParams id = invert_six({{1, 1, 0.5, 0.5, 0.5, 0.5}});
  CHECK(id == GateParams{});

  const GateParams x = invert_six({{0.5, 1, 0.5, 0, 0.5, 0.5}});
  CHECK(x.theta == doctest::Approx(kPi / 4));
  CHECK(x.n[0] == doctest::Approx(1.0));
  CHECK(std::abs(x.n[1]) < 1e-12);
  CHECK(std::abs(x.n[2]) < 1e-12);
  CHECK(oracle::fidelity(oracle::to_eigen(gate_matrix(x)), oracle::gate(kPi / 4, {1, 0, 0})) == doctest::Approx(1.0));

  CHECK_THROWS_AS(invert_six({{1.2, 1, 0.5, 0.5, 0.5, 0.5}}), NonPhysicalData);
  CHECK_THROWS_AS(invert_six({{0.5, 1, 0.5, 0.5, -0.3, 0.5}}), NonPhysicalData);
}

TEST_CASE("invert_six on pure branches") {
  Rng rng(43);
  for (int i = 0; i < 200; ++i) {
    const double phi = rng.uniform(-kPi, kPi);
    const GateParams diag = params_from_amplitude_phase({1.0, 0.0, phi, 0.0});
    const GateParams anti = params_from_amplitude_phase({0.0, 1.0, 0.0, phi});
    CHECK(fidelity(invert_six(six_intensities_exact(diag)), diag) > 1 - 1e-12);
    CHECK(fidelity(invert_six(six_intensities_exact(anti)), anti) > 1 - 1e-12);
  }
}

TEST_CASE("invert_six inverts noiseless data of well-conditioned gates") {
  Rng rng(44);
  int tested = 0;
  while (tested < 1000) {
    const GateParams p = sample_haar(rng);
    if (ab_of(p) <= kWellConditionedAB) continue;
    ++tested;
    const GateParams q = invert_six(six_intensities_exact(p));
    REQUIRE(is_canonical(q));
    REQUIRE(fidelity(q, p) >= 1 - 1e-9);
  }
}

TEST_CASE("invert_six flags ill-conditioned phases") {
  // A*B just above the pure-branch cut: the recovered cosines lose precision.
  const GateParams p = params_from_amplitude_phase({std::sqrt(1 - 1e-16), 1e-8, 0.3, 1.1});
  MeasurementSet m = six_intensities_exact(p);
  m.values[2] += 1e-9;
  try {
    const GateParams q = invert_six(m);
    CHECK(fidelity(q, p) > 0.99);
  } catch (const DegenerateGate& e) {
    CHECK(fidelity(e.best(), p) > 0.99);
  } catch (const NonPhysicalData&) {
    CHECK(true);  // perturbation pushed a cosine out of range
  }
}

TEST_CASE("invert_five: identity has several candidates") {
  const auto c = invert_five(FiveIntensities::from(six_intensities_exact(GateParams{})));
  CHECK(c.size() >= 2);
  bool has_identity = false;
  for (const GateParams& p : c) has_identity |= fidelity(p, GateParams{}) > 1 - 1e-12;
  CHECK(has_identity);
}

TEST_CASE("invert_five candidates reproduce the five values") {
  Rng rng(45);
  for (int i = 0; i < 2000; ++i) {
    const GateParams p = sample_haar(rng);
    const FiveIntensities five = FiveIntensities::from(six_intensities_exact(p));
    const auto cands = invert_five(five);
    REQUIRE(!cands.empty());
    bool found = false;
    for (const GateParams& c : cands) {
      const MeasurementSet th = six_intensities_exact(c);
      REQUIRE(std::abs(th[Channel::LL] - five.ll) <= 1e-9);
      REQUIRE(std::abs(th[Channel::LH] - five.lh) <= 1e-9);
      REQUIRE(std::abs(th[Channel::LD] - five.ld) <= 1e-9);
      REQUIRE(std::abs(th[Channel::HL] - five.hl) <= 1e-9);
      REQUIRE(std::abs(th[Channel::HD] - five.hd) <= 1e-9);
      found |= fidelity(c, p) > 1 - 1e-9;
    }
    REQUIRE(found);
  }
}

TEST_CASE("invert_five: unique outside the grid-mapped degenerate set") {
  const oracle::FiveGrid grid(64);
  Rng rng(46);
  int flagged = 0;
  int generic_single = 0;
  constexpr int kGates = 300;
  for (int i = 0; i < kGates; ++i) {
    const GateParams p = sample_haar(rng);
    const MeasurementSet m = six_intensities_exact(p);
    const auto cands = invert_five(FiveIntensities::from(m));
    if (grid.has_distinct_solution(five_of(m), p)) {
      ++flagged;
      continue;
    }
    CHECK(cands.size() == 1);
    generic_single += cands.size() == 1;
  }
  CHECK(flagged < kGates / 10);
  CHECK(generic_single == kGates - flagged);
  // The identity is flagged by the grid as well.
  const MeasurementSet id = six_intensities_exact(GateParams{});
  CHECK(grid.has_distinct_solution(five_of(id), GateParams{}));
}

TEST_CASE("invert_five rejects non-physical input") {
  CHECK_THROWS_AS(invert_five({1.3, 0.5, 0.5, 0.5, 0.5}), NonPhysicalData);
  CHECK_THROWS_AS(invert_five({0.5, 0.5, 0.5, 0.5, 0.0}), NonPhysicalData);
}

TEST_CASE("log_likelihood") {
  Rng rng(47);
  const GateParams p = sample_haar(rng);
  CHECK(log_likelihood(p, six_intensities_exact(p)) == doctest::Approx(0.0));
  CHECK(log_likelihood(GateParams{}, {{0.99, 1, 0.5, 0.5, 0.5, 0.5}}) == doctest::Approx(1e-4).epsilon(1e-12));
  for (int i = 0; i < 100; ++i) {
    const GateParams q = sample_haar(rng);
    MeasurementSet m;
    for (double& v : m.values) v = rng.uniform();
    const MeasurementSet th = six_intensities_exact(q);
    const oracle::M2 u = oracle::gate(q.theta, q.n);
    const char in[] = {'L', 'H', 'L', 'L', 'H', 'H'};
    const char out[] = {'L', 'H', 'H', 'D', 'L', 'D'};
    double want = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      const double t = oracle::intensity(u, in[k], out[k]);
      want += (t - m.values[k]) * (t - m.values[k]) / std::max(t, kLikelihoodFloor);
    }
    CHECK(log_likelihood(q, m) == doctest::Approx(want).epsilon(1e-10));
    CHECK(log_likelihood(q, m) >= 0.0);
    (void)th;
  }
}

TEST_CASE("minimize_likelihood") {
  Rng gates(48);
  BaselineConfig cfg;
  SUBCASE("deterministic under a seed") {
    const MeasurementSet m = six_intensities_exact(sample_haar(gates));
    Rng a(1), b(1);
    const ReconstructionResult ra = minimize_likelihood(m, cfg, a);
    const ReconstructionResult rb = minimize_likelihood(m, cfg, b);
    CHECK(ra.params == rb.params);
    CHECK(ra.cost == rb.cost);
    CHECK(is_canonical(ra.params));
  }
  SUBCASE("single start: good median, failure tail") {
    Rng rng(2);
    std::vector<double> fids;
    for (int i = 0; i < 300; ++i) {
      const GateParams p = sample_haar(gates);
      fids.push_back(fidelity(minimize_likelihood(six_intensities_exact(p), cfg, rng).params, p));
    }
    std::sort(fids.begin(), fids.end());
    CHECK(fids[fids.size() / 2] > 0.999);
    CHECK(fids.front() < 0.9);
  }
  SUBCASE("ten restarts") {
    cfg.restarts = 10;
    Rng rng(3);
    double infid = 0.0;
    constexpr int kGates = 500;
    for (int i = 0; i < kGates; ++i) {
      const GateParams p = sample_haar(gates);
      infid += 1.0 - fidelity(minimize_likelihood(six_intensities_exact(p), cfg, rng).params, p);
    }
    CHECK(infid / kGates <= 1e-4);
  }
}

TEST_CASE("nelder_mead never ends above its start") {
  Rng rng(49);
  const Objective rosen = [](std::span<const double> x) {
    return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
  };
  const NelderMeadResult r = nelder_mead(rosen, {-1.2, 1.0}, std::vector<double>{0.5, 0.5}, {});
  CHECK(r.value <= r.start_value);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  for (int i = 0; i < 50; ++i) {
    const GateParams p = sample_haar(rng);
    const MeasurementSet m = six_intensities_exact(sample_haar(rng));
    const Objective f = [&](std::span<const double> x) {
      const double t = std::clamp(x[0], 0.0, kPi);
      const Vec3 n{std::sin(x[1]) * std::cos(x[2]), std::sin(x[1]) * std::sin(x[2]), std::cos(x[1])};
      return log_likelihood({t, n}, m);
    };
    const NelderMeadResult s = nelder_mead(f, std::vector<double>{p.theta, std::acos(p.n[2]), std::atan2(p.n[1], p.n[0])},
                                            std::vector<double>{0.5, 0.5, 0.5}, {});
    CHECK(s.value <= s.start_value);
  }
}
