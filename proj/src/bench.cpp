#include "qpt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "qpt/io.hpp"

namespace qpt {

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::analytic: return "analytic";
    case Engine::baseline: return "baseline";
    case Engine::ga: return "ga";
    case Engine::nn: return "nn";
  }
  return "?";
}

Engine engine_from_name(std::string_view name) {
  for (Engine e : {Engine::analytic, Engine::baseline, Engine::ga, Engine::nn}) {
    if (engine_name(e) == name) return e;
  }
  throw InvalidParameter("unknown engine '" + std::string(name) + "' (expected analytic, baseline, ga or nn)");
}

void BenchmarkPlan::validate() const {
  if (gates <= 0) throw InvalidParameter("gate count must be positive");
  if (ga_repeats <= 0) throw InvalidParameter("GA repeat count must be positive");
  if (engines.empty()) throw InvalidParameter("benchmark needs at least one engine");
  if (deltas_deg.empty()) throw InvalidParameter("benchmark needs at least one noise level");
  for (double d : deltas_deg) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidParameter("noise levels must be finite and non-negative");
  }
  if (threads < 0) throw InvalidParameter("thread count must be non-negative");
  if (baseline.restarts <= 0 || baseline.max_evals <= 0) throw InvalidParameter("baseline restarts and evaluations must be positive");
  ga.validate();
  if (std::find(engines.begin(), engines.end(), Engine::nn) != engines.end()) {
    if (!model) throw InvalidParameter("the nn engine needs a trained model");
    model->check();
  }
}

Histogram::Histogram() {
  for (int i = 0; i <= kBins; ++i) {
    edges[static_cast<std::size_t>(i)] = kLow * std::pow(10.0, static_cast<double>(i) / kBinsPerDecade);
  }
  edges.back() = 1.0;
}

void Histogram::add(double infidelity) {
  const double x = std::clamp(infidelity, kLow, 1.0);
  int bin = static_cast<int>(std::floor(std::log10(x / kLow) * kBinsPerDecade));
  bin = std::clamp(bin, 0, kBins - 1);
  // Guard the floor against rounding at the edges.
  while (bin > 0 && x < edges[static_cast<std::size_t>(bin)]) --bin;
  while (bin < kBins - 1 && x >= edges[static_cast<std::size_t>(bin) + 1]) ++bin;
  ++counts[static_cast<std::size_t>(bin)];
}

EngineStats summarize(Engine e, double delta_deg, std::vector<double> fidelities, std::vector<double> times_s) {
  EngineStats s;
  s.engine = e;
  s.delta_deg = delta_deg;
  const double n = static_cast<double>(fidelities.size());
  if (!fidelities.empty()) {
    const double mean_f = std::accumulate(fidelities.begin(), fidelities.end(), 0.0) / n;
    double var = 0.0;
    int tail = 0;
    for (double f : fidelities) {
      var += (f - mean_f) * (f - mean_f);
      if (1.0 - f > 0.1) ++tail;
    }
    s.mean_infidelity = 1.0 - mean_f;
    s.fidelity_std = std::sqrt(var / n);
    s.tail_fraction = tail / n;
  }
  if (!times_s.empty()) {
    std::vector<double> t = times_s;
    const std::size_t mid = t.size() / 2;
    std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(mid), t.end());
    double med = t[mid];
    if (t.size() % 2 == 0) med = 0.5 * (med + *std::max_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(mid)));
    s.median_time_s = med;
  }
  s.fidelities = std::move(fidelities);
  s.times_s = std::move(times_s);
  return s;
}

const EngineStats& BenchmarkReport::find(Engine e, double delta_deg) const {
  for (const EngineStats& s : rows) {
    if (s.engine == e && s.delta_deg == delta_deg) return s;
  }
  throw InvalidParameter("report has no row for " + std::string(engine_name(e)) + " at " + format_double(delta_deg) + " deg");
}

std::string BenchmarkReport::report_csv() const {
  std::ostringstream os;
  os << "# " << kSchema << '\n'
     << "engine,delta_deg,mean_infidelity,fidelity_std,tail_frac_gt_0p1,median_time_s,n\n";
  for (const EngineStats& s : rows) {
    os << engine_name(s.engine) << ',' << format_double(s.delta_deg) << ',' << format_double(s.mean_infidelity) << ','
       << format_double(s.fidelity_std) << ',' << format_double(s.tail_fraction) << ','
       << format_double(s.median_time_s) << ',' << s.fidelities.size() << '\n';
  }
  return os.str();
}

std::string BenchmarkReport::histogram_csv() const {
  std::ostringstream os;
  os << "engine,delta_deg,bin_lo,bin_hi,count\n";
  for (const EngineStats& s : rows) {
    Histogram h;
    for (double f : s.fidelities) h.add(1.0 - f);
    for (int b = 0; b < Histogram::kBins; ++b) {
      const auto i = static_cast<std::size_t>(b);
      os << engine_name(s.engine) << ',' << format_double(s.delta_deg) << ',' << format_double(h.edges[i]) << ','
         << format_double(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
    }
  }
  return os.str();
}

std::string BenchmarkReport::fidelities_csv() const {
  std::ostringstream os;
  os << "engine,delta_deg,gate,fidelity,time_s\n";
  for (const EngineStats& s : rows) {
    for (std::size_t i = 0; i < s.fidelities.size(); ++i) {
      os << engine_name(s.engine) << ',' << format_double(s.delta_deg) << ',' << i << ','
         << format_double(s.fidelities[i]) << ',' << format_double(s.times_s[i]) << '\n';
    }
  }
  return os.str();
}

std::string BenchmarkReport::histogram_svg(double delta_deg) const {
  std::vector<const EngineStats*> sel;
  for (const EngineStats& s : rows) {
    if (s.delta_deg == delta_deg) sel.push_back(&s);
  }
  static constexpr const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};
  const double w = 720, h = 360, left = 60, right = 20, top = 30, bottom = 50;
  const double pw = w - left - right;
  const double ph = h - top - bottom;

  std::vector<Histogram> hists(sel.size());
  int peak = 1;
  for (std::size_t k = 0; k < sel.size(); ++k) {
    for (double f : sel[k]->fidelities) hists[k].add(1.0 - f);
    for (int c : hists[k].counts) peak = std::max(peak, c);
  }

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">infidelity histogram, delta = " << format_double(delta_deg)
     << " deg</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  const double bin_w = pw / Histogram::kBins;
  const double bar_w = sel.empty() ? bin_w : bin_w / static_cast<double>(sel.size());
  for (std::size_t k = 0; k < sel.size(); ++k) {
    for (int b = 0; b < Histogram::kBins; ++b) {
      const int c = hists[k].counts[static_cast<std::size_t>(b)];
      if (c == 0) continue;
      const double bh = ph * c / peak;
      os << "<rect x=\"" << left + b * bin_w + k * bar_w << "\" y=\"" << top + ph - bh << "\" width=\"" << bar_w
         << "\" height=\"" << bh << "\" fill=\"" << kColors[k % 4] << "\"/>\n";
    }
    os << "<text x=\"" << left + pw - 90 << "\" y=\"" << top + 14 * (k + 1) << "\" fill=\"" << kColors[k % 4] << "\">"
       << engine_name(sel[k]->engine) << "</text>\n";
  }
  for (int dec = 0; dec <= 8; ++dec) {
    const double x = left + dec * Histogram::kBinsPerDecade * bin_w;
    os << "<text x=\"" << x << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">1e" << dec - 8 << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">1 - F</text>\n";
  os << "<text x=\"" << left - 8 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << peak << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  double fidelity = 0.0;
  double time_s = 0.0;
  bool failed = false;
};

Outcome run_engine(Engine e, const BenchmarkPlan& plan, const GateParams& truth, const MeasurementSet& m,
                   std::uint64_t task) {
  Outcome out;
  switch (e) {
    case Engine::analytic: {
      const auto t0 = Clock::now();
      try {
        GateParams est;
        try {
          est = invert_six(m);
        } catch (const DegenerateGate& d) {
          est = d.best();
        }
        out.time_s = std::chrono::duration<double>(Clock::now() - t0).count();
        out.fidelity = fidelity(est, truth);
      } catch (const NonPhysicalData&) {
        out.time_s = std::chrono::duration<double>(Clock::now() - t0).count();
        out.failed = true;
      }
      break;
    }
    case Engine::baseline: {
      Rng rng = Rng::substream(plan.seed, "baseline", task);
      const ReconstructionResult r = minimize_likelihood(m, plan.baseline, rng);
      out.time_s = r.elapsed_s;
      out.fidelity = fidelity(r.params, truth);
      break;
    }
    case Engine::ga: {
      Rng rng = Rng::substream(plan.seed, "ga", task);
      ReconstructionResult best;
      for (int rep = 0; rep < plan.ga_repeats; ++rep) {
        const ReconstructionResult r = run_ga(m, plan.ga, rng);
        out.time_s += r.elapsed_s;
        if (rep == 0 || r.cost < best.cost) best = r;
      }
      out.fidelity = fidelity(best.params, truth);
      break;
    }
    case Engine::nn: {
      const ReconstructionResult r = nn_reconstruct(*plan.model, m);
      out.time_s = r.elapsed_s;
      out.fidelity = fidelity(r.params, truth);
      break;
    }
  }
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkPlan& plan) {
  plan.validate();
  const auto n = static_cast<std::size_t>(plan.gates);

  std::vector<GateParams> truths(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::substream(plan.seed, "gate", i);
    truths[i] = sample_gate(rng, plan.measure);
  }

  int workers = plan.threads > 0 ? plan.threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, plan.gates);

  const BenchSettings nominal = derive_bench_settings();
  BenchmarkReport report;
  for (std::size_t di = 0; di < plan.deltas_deg.size(); ++di) {
    NoiseModel noise;
    noise.delta_deg = plan.deltas_deg[di];
    noise.shared_draw = plan.shared_noise;
    std::vector<MeasurementSet> inputs(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = Rng::substream(plan.seed, "noise", di * n + i);
      inputs[i] = six_intensities_noisy(truths[i], noise, nominal, rng);
    }

    const std::size_t ne = plan.engines.size();
    std::vector<Outcome> outcomes(ne * n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        for (std::size_t k = 0; k < ne; ++k) {
          outcomes[k * n + i] = run_engine(plan.engines[k], plan, truths[i], inputs[i], di * n + i);
        }
      }
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (std::size_t k = 0; k < ne; ++k) {
      std::vector<double> fids(n);
      std::vector<double> times(n);
      int failures = 0;
      for (std::size_t i = 0; i < n; ++i) {
        fids[i] = outcomes[k * n + i].fidelity;
        times[i] = outcomes[k * n + i].time_s;
        failures += outcomes[k * n + i].failed;
      }
      EngineStats s = summarize(plan.engines[k], noise.delta_deg, std::move(fids), std::move(times));
      s.failures = failures;
      report.rows.push_back(std::move(s));
    }
  }
  return report;
}

}  // namespace qpt
