// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any binding criterion fails. Criterion 8 is reported, not binding.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "fpirm/cost_model.hpp"
#include "fpirm/int_alu.hpp"
#include "fpirm/kernels.hpp"
#include "suites.hpp"

using namespace fpirm;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void line(int id, bool ok, const std::string& detail, bool binding = true) {
  std::printf("criterion %d: %s  %s%s\n", id, ok ? "PASS" : "FAIL", detail.c_str(),
              binding ? "" : " (reported, non-binding)");
  std::fflush(stdout);
  if (!ok && binding) ++failures;
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string summary(const std::vector<verify::CheckResult>& rs) {
  std::uint64_t cases = 0, bad = 0;
  std::string firstBad;
  for (const auto& r : rs) {
    cases += r.cases;
    bad += r.failures;
    if (r.failures && firstBad.empty()) firstBad = " first failure " + r.reproducer.dump();
  }
  return std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches" + firstBad;
}

bool allPassed(const std::vector<verify::CheckResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.passed(); });
}

// Toy CNN reference in double precision.
struct Conv {
  kernels::ConvSpec spec;
  std::vector<float> weights;
};

/// Reference output and the allowed error of each output: terms * 2^-23 * sum |w*x|.
void referenceConv(const Conv& c, const std::vector<float>& in, std::vector<double>& out, std::vector<double>& bound) {
  const auto& s = c.spec;
  const int ro = s.outRows(), co = s.outCols(), k = s.kernel, n = s.inChannels;
  out.assign(static_cast<std::size_t>(s.outChannels) * ro * co, 0);
  bound.assign(out.size(), 0);
  for (int m = 0; m < s.outChannels; ++m)
    for (int r = 0; r < ro; ++r)
      for (int q = 0; q < co; ++q) {
        double sum = 0, mag = 0;
        for (int ch = 0; ch < n; ++ch)
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
              const double p = double(c.weights[((m * n + ch) * k + i) * k + j]) *
                               double(in[(ch * s.rows + r + i) * s.cols + q + j]);
              sum += p;
              mag += std::fabs(p);
            }
        const std::size_t o = (static_cast<std::size_t>(m) * ro + r) * co + q;
        out[o] = std::max(sum, 0.0);  // relu after every layer
        bound[o] = s.windowTerms() * std::ldexp(1.0, -23) * mag;
      }
}

}  // namespace

int main() {
  verify::Options o;
  o.seed = 20240501;
  o.workers = std::max(1u, std::thread::hardware_concurrency());
  std::printf("acceptance: seed %llu, %d worker(s)\n", static_cast<unsigned long long>(o.seed), o.workers);

  {  // 1
    const auto t0 = Clock::now();
    const auto r = verify::intMultiplyExhaustive8(o);
    const double s = since(t0);
    line(1, r.passed() && r.cases == 65536 && s < 300,
         "8-bit multiply, all 65536 pairs: " + summary({r}) + ", " + std::to_string(s) + " s");
  }

  {  // 2
    std::vector<verify::CheckResult> rs;
    const long rows = 100000;
    for (int w : {8, 16, 32, 64}) {
      rs.push_back(verify::intAdd5(o, w, rows * (kRowBits / w)));
      rs.push_back(verify::intCsaReduce(o, w, rows * (kRowBits / w)));
    }
    rs.push_back(verify::intCsaColumns(o));
    line(2, allPassed(rs), "add5 and 7:3 reduction, 1e5 rows per width and op, column identity: " + summary(rs));
  }

  {  // 3
    const auto r = verify::fpMultiply(o, 1000000);
    line(3, r.passed() && r.cases >= 1000000, "fpMultiply, 1e6 pairs: " + summary({r}));
  }

  {  // 4
    std::vector<verify::CheckResult> rs;
    std::string detail;
    bool boundOk = true;
    for (int n : {2, 7, 9, 27, 49}) {
      verify::AddErrorStats st;
      rs.push_back(verify::fpAdd(o, n, 10000L * fp::kLanesPerRow, &st));
      const double frac = st.nonCancelling ? double(st.withinBound) / double(st.nonCancelling) : 0;
      boundOk = boundOk && st.nonCancelling > 0 && frac >= 0.999;
      char buf[160];
      std::snprintf(buf, sizeof buf, " n=%d: %.4f%% of %llu within n*2^-23 (worst %.3g);", n, 100 * frac,
                    static_cast<unsigned long long>(st.nonCancelling), st.worst);
      detail += buf;
    }
    line(4, allPassed(rs) && boundOk, "fpAdd, 1e4 rows per n, bit-exact: " + summary(rs) + ";" + detail);
  }

  {  // 5
    const auto t0 = Clock::now();
    const auto r = verify::fpFindMaxOrderings(o, 10000);
    line(5, r.passed() && r.cases == 10000L * 5040,
         "findMax over all 5040 orderings of 1e4 base sets: " + summary({r}) + ", " + std::to_string(since(t0)) + " s");
  }

  {  // 6
    std::vector<double> w, c;
    for (int width : {8, 16, 24, 32}) {
      Machine m(o.device);
      const int a = m.allocate(1), b = m.allocate(1), dst = m.allocate(1);
      alu::multiply(m, a, b, dst, width, 64);
      w.push_back(width);
      c.push_back(static_cast<double>(m.ledger().cycles));
    }
    const double mw = std::accumulate(w.begin(), w.end(), 0.0) / 4, mc = std::accumulate(c.begin(), c.end(), 0.0) / 4;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 4; ++i) {
      sxy += (w[i] - mw) * (c[i] - mc);
      sxx += (w[i] - mw) * (w[i] - mw);
      syy += (c[i] - mc) * (c[i] - mc);
    }
    const double r2 = sxy * sxy / (sxx * syy);
    char buf[200];
    std::snprintf(buf, sizeof buf, "multiply cycles at w=8,16,24,32: %.0f %.0f %.0f %.0f, slope %.1f/bit, R^2 = %.4f",
                  c[0], c[1], c[2], c[3], sxy / sxx, r2);
    line(6, r2 >= 0.99, buf);
  }

  {  // 7
    std::mt19937_64 g(o.seed);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    Conv c1{{3, 4, 10, 10, 3}, {}}, c2{{4, 5, 8, 8, 3}, {}};
    c1.weights.resize(4 * 3 * 9);
    c2.weights.resize(5 * 4 * 9);
    for (auto& x : c1.weights) x = d(g);
    for (auto& x : c2.weights) x = d(g);
    std::vector<float> input(3 * 10 * 10);
    for (auto& x : input) x = d(g);

    Machine m(o.device);
    const auto l1 = kernels::conv2d(m, c1.spec, input, c1.weights, true);
    const auto l2 = kernels::conv2d(m, c2.spec, l1.output, c2.weights, true);
    // Each layer is checked against the reference applied to its actual input.
    std::vector<double> ref1, b1, ref2, b2;
    referenceConv(c1, input, ref1, b1);
    referenceConv(c2, l1.output, ref2, b2);
    long outputs = 0, outside = 0;
    double worst = 0;
    auto compare = [&](const std::vector<float>& got, const std::vector<double>& ref, const std::vector<double>& b) {
      for (std::size_t i = 0; i < got.size(); ++i) {
        ++outputs;
        const double err = std::fabs(double(got[i]) - ref[i]);
        if (err > b[i]) ++outside;
        if (b[i] > 0) worst = std::max(worst, err / b[i]);
      }
    };
    compare(l1.output, ref1, b1);
    compare(l2.output, ref2, b2);
    std::vector<verify::CheckResult> rot;
    for (int k : {3, 5, 7, 9, 11}) rot.push_back(verify::kernelRotate180(o, k, 200));
    char buf[200];
    std::snprintf(buf, sizeof buf, "2-layer CNN: %ld outputs, %ld outside the bound (worst %.3f of bound); ", outputs,
                  outside, worst);
    line(7, outside == 0 && allPassed(rot), buf + std::string("rotate180 k=3..11: ") + summary(rot));
  }

  {  // 8
    const std::string path = FPIRM_SOURCE_DIR "/configs/fpirm.json";
    std::ifstream in(path);
    const auto cfg = nlohmann::json::parse(in);
    const auto params = cost::DeviceParams::fromJson(cfg.at("params"));
    const int P = cfg.at("workload").at("parallelDBCs");
    const bool split = cfg.at("workload").at("splitTerms");
    cost::UnitCosts units(DeviceConfig::fromJson(cfg.at("device")));
    const auto net = cost::Network::builtin("lenet5");
    double e[3], fps = 0;
    int i = 0;
    for (auto mode : {cost::Mode::Ternary, cost::Mode::Integer, cost::Mode::Fp32}) {
      const auto r = cost::mapWorkload(net, mode, P, params, units, split);
      e[i++] = r.energyPerInferencePJ();
      if (mode == cost::Mode::Ternary) fps = r.fps;
    }
    const double ratio = fps / 32075.0;
    const bool ordered = e[0] <= e[1] && e[1] <= e[2];
    char buf[300];
    std::snprintf(buf, sizeof buf,
                  "lenet5 ternary %.0f FPS vs 32075 (ratio %.3f), parallelDBCs %d, splitTerms %s, "
                  "energy/inference pJ ternary %.4g integer %.4g fp32 %.4g",
                  fps, ratio, P, split ? "on" : "off", e[0], e[1], e[2]);
    line(8, ratio >= 0.5 && ratio <= 2.0 && ordered, buf, false);
  }

  std::printf("acceptance: %s\n", failures ? "FAIL" : "PASS");
  return failures ? 1 : 0;
}
