#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "qpt/bench.hpp"
#include "qpt/errors.hpp"

using namespace qpt;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

BenchmarkPlan small_plan() {
  BenchmarkPlan plan;
  plan.gates = 40;
  plan.deltas_deg = {0.0, 2.0};
  plan.engines = {Engine::analytic, Engine::baseline, Engine::ga};
  plan.ga.generations = 20;
  plan.seed = 3;
  plan.threads = 2;
  return plan;
}

}  // namespace

TEST_CASE("engine names") {
  for (Engine e : {Engine::analytic, Engine::baseline, Engine::ga, Engine::nn}) {
    CHECK(engine_from_name(engine_name(e)) == e);
  }
  CHECK_THROWS_AS(engine_from_name("svm"), InvalidParameter);
}

TEST_CASE("histogram bins") {
  Histogram h;
  CHECK(h.edges.front() == doctest::Approx(1e-8));
  CHECK(h.edges.back() == doctest::Approx(1.0));
  for (int i = 0; i < Histogram::kBins; ++i) {
    CHECK(h.edges[static_cast<std::size_t>(i + 1)] / h.edges[static_cast<std::size_t>(i)] ==
          doctest::Approx(std::pow(10.0, 0.25)));
  }
  h.add(0.0);
  h.add(1e-12);
  h.add(1.5e-8);
  h.add(0.7);
  h.add(1.0);
  CHECK(h.counts[0] == 3);
  CHECK(h.counts[Histogram::kBins - 1] == 2);
  int total = 0;
  for (int c : h.counts) total += c;
  CHECK(total == 5);
}

TEST_CASE("summary statistics") {
  const EngineStats s = summarize(Engine::ga, 1.0, {1.0, 0.5, 0.95, 0.85}, {0.1, 0.3, 0.2, 0.4});
  CHECK(s.mean_infidelity == doctest::Approx(0.175));
  CHECK(s.tail_fraction == doctest::Approx(0.5));
  CHECK(s.median_time_s == doctest::Approx(0.25));
  const double mean = 0.825;
  const double var = ((1 - mean) * (1 - mean) + (0.5 - mean) * (0.5 - mean) + (0.95 - mean) * (0.95 - mean) +
                      (0.85 - mean) * (0.85 - mean)) /
                     4;
  CHECK(s.fidelity_std == doctest::Approx(std::sqrt(var)));
}

TEST_CASE("benchmark report") {
  const BenchmarkPlan plan = small_plan();
  const BenchmarkReport r = run_benchmark(plan);
  REQUIRE(r.rows.size() == 6);
  for (const EngineStats& s : r.rows) {
    CHECK(s.fidelities.size() == static_cast<std::size_t>(plan.gates));
    CHECK(s.times_s.size() == static_cast<std::size_t>(plan.gates));
    for (double f : s.fidelities) CHECK((f >= 0.0 && f <= 1.0 + 1e-12));
  }
  CHECK(r.find(Engine::analytic, 0.0).mean_infidelity < 1e-6);
  CHECK(r.find(Engine::ga, 2.0).mean_infidelity > r.find(Engine::ga, 0.0).mean_infidelity);

  const auto report = lines_of(r.report_csv());
  REQUIRE(report.size() == 8);
  CHECK(report[0] == "# qpt-benchmark-report v1");
  CHECK(report[1] == "engine,delta_deg,mean_infidelity,fidelity_std,tail_frac_gt_0p1,median_time_s,n");
  CHECK(report[2].rfind("analytic,0,", 0) == 0);

  const auto hist = lines_of(r.histogram_csv());
  CHECK(hist[0].find("engine,delta_deg,bin_lo,bin_hi,count") != std::string::npos);
  const auto fids = lines_of(r.fidelities_csv());
  CHECK(fids.size() >= 6 * 40 + 1);

  const std::string before = r.report_csv();
  const std::string svg = r.histogram_svg(0.0);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(r.report_csv() == before);
}

TEST_CASE("benchmark is deterministic apart from timing") {
  BenchmarkPlan plan = small_plan();
  const BenchmarkReport a = run_benchmark(plan);
  plan.threads = 1;
  const BenchmarkReport b = run_benchmark(plan);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].fidelities == b.rows[i].fidelities);

  // Adding an engine does not disturb the draws seen by the others.
  plan.engines = {Engine::ga};
  const BenchmarkReport c = run_benchmark(plan);
  CHECK(c.find(Engine::ga, 2.0).fidelities == a.find(Engine::ga, 2.0).fidelities);
}

TEST_CASE("benchmark with the network engine") {
  BenchmarkPlan plan = small_plan();
  plan.engines = {Engine::nn};
  CHECK_THROWS_AS(plan.validate(), InvalidParameter);
  Rng rng(105);
  plan.model = std::make_shared<MlpModel>(MlpModel::create(kLayerWidths, rng));
  const BenchmarkReport r = run_benchmark(plan);
  CHECK(r.find(Engine::nn, 0.0).fidelities.size() == 40);
}

TEST_CASE("plan validation") {
  BenchmarkPlan plan;
  plan.engines = {Engine::ga};
  plan.gates = 0;
  CHECK_THROWS_AS(plan.validate(), InvalidParameter);
  plan.gates = 10;
  plan.deltas_deg = {-1.0};
  CHECK_THROWS_AS(plan.validate(), InvalidParameter);
  plan.deltas_deg = {0.0};
  plan.engines.clear();
  CHECK_THROWS_AS(plan.validate(), InvalidParameter);
}
