// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "irscene/compositing.hpp"
#include "irscene/io.hpp"
#include "irscene/metrics.hpp"
#include "irscene/pipeline.hpp"
#include "irscene/sensor.hpp"
#include "irscene/thermal.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace irscene;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << "first failure: " << why << "; ";
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1. Grading round trip on random 128x128 scenes.
Outcome metric_round_trip() {
  Outcome out;
  const auto t0 = Clock::now();
  const auto base = fixture::demo_resources(128, 128, fixture::spec(1, 1, 0), SensorConfig{}, true, 11);
  Rng rng(1001);
  std::uniform_real_distribution<double> rss(0.5, 5), rsc(0.5, 4), k(-0.95, 0.95), area(150, 400);
  const double nus[] = {1, 2, 10};
  const double rxs[] = {0, 0.1, 0.25};
  double worst = 0;
  int done = 0;
  for (int i = 0; i < 200; ++i) {
    SceneResources res = base;
    QualitySpec& q = res.config.quality;
    q = fixture::spec(rss(rng), rsc(rng), k(rng), nus[i % 3]);
    q.qd = q.rss * area(rng);
    q.rx = rxs[(i / 3) % 3];
    try {
      const auto s = generate_scene(res, {derive_seed(77, i), {}, {}});
      const auto& m = s.truth.achieved_pre_sensor;
      const double e = std::max({rel_err(m.rss, q.rss), rel_err(m.rsc, q.rsc), rel_err(*m.k, q.k)});
      worst = std::max(worst, e);
      if (e > 1e-9) out.fail("scene " + std::to_string(i) + " rel err " + std::to_string(e));
      ++done;
    } catch (const SceneError& e) {
      out.fail("scene " + std::to_string(i) + " failed at " + e.stage() + ": " + e.what());
    }
  }
  const double t = seconds_since(t0);
  if (t >= 30) out.fail("runtime " + std::to_string(t) + " s");
  out.detail << done << "/200 scenes, worst rel err " << worst << ", " << t << " s";
  return out;
}

// 2. |K| <= 1 and K^2 + (sigma_C / (nu RSS))^2 = 1 on random region pairs.
Outcome k_identity() {
  Outcome out;
  Rng rng(2002);
  std::uniform_real_distribution<double> mu(-2000, 2000), sd(0, 60), nu(0.1, 20);
  std::uniform_int_distribution<int> side(2, 12);
  double worst = 0;
  int checked = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int h = side(rng), w = side(rng);
    const Image c = fixture::random_image(h, w, rng, mu(rng), sd(rng));
    const Image f1 = fixture::random_image(h, w, rng, mu(rng), sd(rng));
    Mask mc = fixture::random_mask(h, w, rng, 0.6), mf = fixture::random_mask(h, w, rng, 0.6);
    mc(0, 0) = mf(0, 0) = true;
    const auto sc = region_stats(c, mc), sf = region_stats(f1, mf);
    const CalibrationNuK calib(nu(rng));
    const double rss = compute_rss(sc, sf, calib);
    if (!(rss > 0)) continue;
    const double kk = *compute_k(sc, sf, rss, calib);
    const double s = sc.stddev / (calib.value() * rss);
    const double e = std::abs(kk * kk + s * s - 1);
    worst = std::max(worst, e);
    ++checked;
    if (std::abs(kk) > 1) out.fail("|K| = " + std::to_string(std::abs(kk)));
    if (e > 1e-9) out.fail("identity off by " + std::to_string(e));
  }
  out.detail << checked << " pairs, worst identity error " << worst;
  return out;
}

// 3. Lambda samplers against the truncated Gaussian laws.
Outcome lambda_samplers() {
  Outcome out;
  const auto t0 = Clock::now();
  struct Law {
    ThermalMode mode;
    double mu, sigma, lo, hi;
    bool open;
  };
  const Law laws[] = {{ThermalMode::Ambient, 0.0, 1.0 / 30, 0.0, 0.1, false},
                      {ThermalMode::Intermediate, 0.5, 2.0 / 15, 0.1, 0.9, true},
                      {ThermalMode::Operating, 1.0, 1.0 / 30, 0.9, 1.0, false}};
  const int n = 100000;
  for (const auto& law : laws) {
    Rng rng(derive_seed(3003, static_cast<std::uint64_t>(law.mode)));
    std::vector<double> xs;
    xs.reserve(n);
    long long attempts = 0;
    int outside = 0;
    for (int i = 0; i < n; ++i) {
      const auto d = draw_lambda(law.mode, rng);
      attempts += d.attempts;
      xs.push_back(d.value);
      const bool inside = law.open ? (d.value > law.lo && d.value < law.hi)
                                   : (d.value >= law.lo && d.value <= law.hi);
      if (!inside) ++outside;
    }
    const double rate = static_cast<double>(n) / static_cast<double>(attempts);
    const double ks = oracle::ks_statistic(
        xs, [&](double x) { return oracle::truncated_normal_cdf(x, law.mu, law.sigma, law.lo, law.hi); });
    const double p = oracle::ks_pvalue(ks, xs.size());
    const std::string name(to_string(law.mode));
    if (outside) out.fail(name + ": " + std::to_string(outside) + " draws outside the interval");
    if (!(p > 0.01)) out.fail(name + ": KS p = " + std::to_string(p));
    if (rate < 0.99) out.fail(name + ": acceptance " + std::to_string(rate));
    out.detail << name << " p=" << p << " acc=" << rate << "; ";
  }
  const double t = seconds_since(t0);
  if (t >= 5) out.fail("runtime " + std::to_string(t) + " s");
  out.detail << t << " s";
  return out;
}

// 4. Blend endpoints and convexity.
Outcome blend() {
  Outcome out;
  Rng rng(4004);
  std::uniform_int_distribution<int> side(4, 40), label(1, 5);
  std::uniform_real_distribution<double> mean(5000, 12000), lam(0, 1);
  long long pixels = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = side(rng), h = side(rng);
    ThermalSignature sig;
    sig.vehicle_id = "fuzz";
    sig.silhouette = fixture::random_blob(w, h, rng);
    sig.regions = LabelMap::Zero(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (sig.silhouette(y, x)) sig.regions(y, x) = static_cast<std::uint8_t>(label(rng));
    sig.ta = fixture::random_image(h, w, rng, mean(rng), 200);
    sig.tf = fixture::random_image(h, w, rng, mean(rng), 200);

    RegionLambdas zero, one, mixed;
    for (Region r : kVehicleRegions) {
      zero[r] = 0;
      one[r] = 1;
      mixed[r] = lam(rng);
    }
    const Image a = synthesize_signature(sig, zero), b = synthesize_signature(sig, one);
    const Image m = synthesize_signature(sig, mixed);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!sig.silhouette(y, x)) continue;
        ++pixels;
        if (a(y, x) != sig.ta(y, x)) out.fail("lambda 0 differs from TA");
        if (b(y, x) != sig.tf(y, x)) out.fail("lambda 1 differs from TF");
        const double lo = std::min(sig.ta(y, x), sig.tf(y, x)), hi = std::max(sig.ta(y, x), sig.tf(y, x));
        if (m(y, x) < lo || m(y, x) > hi) out.fail("blended pixel outside [TA, TF]");
      }
  }
  out.detail << "100 signatures, " << pixels << " pixels";
  return out;
}

double best_achievable(const Mask& t, const Mask& o, double rx) {
  const double total = static_cast<double>(t.count());
  double best = 2;
  for (int dx = -static_cast<int>(o.cols()); dx <= t.cols(); ++dx)
    for (int dy = -static_cast<int>(o.rows()); dy <= t.rows(); ++dy)
      best = std::min(best, std::abs(oracle::brute_overlap(t, o, dx, dy) / total - rx));
  return best;
}

// 5. Occlusion solver.
Outcome occlusion() {
  Outcome out;
  Rng rng(5005);
  std::uniform_int_distribution<int> side(4, 20);
  const double targets[] = {0, 0.1, 0.25, 0.5, 0.75, 1};
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const bool rect = trial % 2 == 0;
    const int tw = side(rng), th = side(rng), ow = side(rng), oh = side(rng);
    const Mask t = rect ? fixture::rect_mask(tw, th) : fixture::random_blob(tw, th, rng);
    const Mask o = rect ? fixture::rect_mask(ow, oh) : fixture::random_blob(ow, oh, rng);
    for (double rx : targets) {
      const double best = best_achievable(t, o, rx);
      try {
        const auto s = solve_occlusion(t, o, rx);
        ++solved;
        if (std::abs(s.achieved - rx) > 0.01) out.fail("achieved " + std::to_string(s.achieved));
        if (s.overlap != oracle::brute_overlap(t, o, s.relative.x, s.relative.y))
          out.fail("reported overlap disagrees with brute force");
      } catch (const Error& e) {
        ++infeasible;
        if (e.code() != ErrorCode::OcclusionInfeasible) out.fail(e.what());
        if (best <= 0.01) out.fail("reported infeasible but a scan reaches " + std::to_string(best));
      }
    }
  }

  // Convex shapes: bisection equals the scan along its approach line, and the
  // exhaustive path equals the full 2-D scan.
  int convex = 0;
  for (int tw : {6, 11, 20}) {
    for (int ow : {4, 9, 15}) {
      for (bool disc : {false, true}) {
        const Mask t = fixture::rect_mask(tw, 8);
        Mask o = fixture::rect_mask(ow, 12);
        if (disc) {
          for (int y = 0; y < 12; ++y)
            for (int x = 0; x < ow; ++x)
              o(y, x) = std::hypot((x + 0.5) / ow - 0.5, (y + 0.5) / 12 - 0.5) <= 0.5;
        }
        const int dy = (8 - 12) / 2;
        for (double rx : {0.1, 0.25, 0.5, 0.75}) {
          double line_best = 2;
          for (int dx = -ow; dx <= (tw - ow) / 2; ++dx)
            line_best = std::min(line_best,
                                 std::abs(oracle::brute_overlap(t, o, dx, dy) / double(t.count()) - rx));
          const auto b = solve_occlusion_bisection(t, o, rx);
          const auto e = solve_occlusion_exhaustive(t, o, rx);
          ++convex;
          if (std::abs(b.achieved - rx) != line_best) out.fail("bisection misses the line optimum");
          if (std::abs(e.achieved - rx) != best_achievable(t, o, rx)) out.fail("exhaustive misses the optimum");
          if (std::abs(e.achieved - rx) > std::abs(b.achieved - rx)) out.fail("exhaustive worse than bisection");
          if (line_best <= 0.01 && std::abs(e.achieved - rx) > 0.01) out.fail("paths disagree on feasibility");
        }
      }
    }
  }
  out.detail << solved << " solved, " << infeasible << " proven infeasible, " << convex << " convex agreements";
  return out;
}

// 6. Sensor chain.
Outcome sensor() {
  Outcome out;
  Rng rng(6006);
  const Image img = fixture::random_image(37, 53, rng, 8000, 300);
  if (!(apply_mtf(img, 0) == img).all()) out.fail("sigma 0 is not an identity");
  if (!(subsample(img, 1) == img).all()) out.fail("factor 1 is not an identity");
  if (!(add_noise(img, 0, rng) == img).all()) out.fail("noise 0 is not an identity");
  if (!(apply_sensor(img, SensorConfig{}, rng) == img).all()) out.fail("default chain is not an identity");

  double worst_impulse = 0;
  for (double sigma : {0.4, 0.8, 1.3, 2.0, 3.7}) {
    const int r = static_cast<int>(std::floor(4 * sigma));
    const int n = 2 * r + 21, c = n / 2;
    Image impulse = Image::Zero(n, n);
    impulse(c, c) = 1;
    const Image psf = apply_mtf(impulse, sigma);
    double norm = 0;
    for (int d = -r; d <= r; ++d) norm += std::exp(-d * d / (2 * sigma * sigma));
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const int dx = x - c, dy = y - c;
        double expect = 0;
        if (std::abs(dx) <= r && std::abs(dy) <= r) {
          expect = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / (norm * norm);
        }
        worst_impulse = std::max(worst_impulse, std::abs(psf(y, x) - expect));
      }
  }
  if (worst_impulse > 1e-6) out.fail("impulse response off by " + std::to_string(worst_impulse));

  double worst_noise = 0;
  for (double sigma : {0.5, 2.0, 15.0}) {
    const Image flat = Image::Constant(512, 512, 8000);
    const Image noisy = add_noise(flat, sigma, rng);
    const auto st = region_stats(noisy, Mask::Constant(512, 512, true));
    worst_noise = std::max(worst_noise, rel_err(st.stddev, sigma));
  }
  if (worst_noise > 0.02) out.fail("noise std off by " + std::to_string(worst_noise));
  out.detail << "impulse max err " << worst_impulse << ", noise std max rel err " << worst_noise;
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ull;
  return h;
}

/// Hash of every file under `dir` by relative path; the manifest timestamp
/// is dropped before hashing.
std::map<std::string, std::uint64_t> hash_tree(const fs::path& dir) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    std::string bytes = slurp(e.path());
    if (rel == "manifest.json") {
      auto j = nlohmann::json::parse(bytes);
      j.erase("generated_at");
      bytes = j.dump();
    }
    out[rel] = fnv1a(bytes);
  }
  return out;
}

// 7. Batch determinism.
Outcome determinism(const fs::path& work) {
  Outcome out;
  QualitySpec q = fixture::spec(2.0, 1.5, -0.3, 10);
  q.qd = 1200;
  q.rx = 0.2;
  const auto res = fixture::demo_resources(256, 200, q, SensorConfig{1.2, 2, 2.0, 16}, true, 7);
  const fs::path a = work / "determinism_a", b = work / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto ra = generate_batch(res, a, {50, 424242, 1, true});
  const auto rb = generate_batch(res, b, {50, 424242, static_cast<int>(std::max(2u, std::thread::hardware_concurrency())), true});
  if (ra.successes != 50) out.fail(std::to_string(ra.failures) + " scenes failed");
  const auto ha = hash_tree(a), hb = hash_tree(b);
  if (ha != hb) out.fail("output trees differ");
  std::uint64_t combined = 0;
  for (const auto& [name, h] : ha) combined = fnv1a(name + std::to_string(h), combined ^ h);
  out.detail << ha.size() << " files per run, tree hash " << std::hex << combined << std::dec;
  return out;
}

// 8. Q_D inversion through rescaling.
Outcome qd_scaling() {
  Outcome out;
  Rng rng(8008);
  std::uniform_real_distribution<double> size(0.5, 1.8), area(120, 2500), rss(0.5, 5);
  std::uniform_int_distribution<int> aspect(0, 359);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    QualitySpec q = fixture::spec(rss(rng), 1.5, 0.2, 2);
    q.qd = q.rss * area(rng);
    auto res = fixture::demo_resources(256, 256, q, SensorConfig{}, false, 8);
    res.signatures = {demo::make_vehicle("chip" + std::to_string(i), aspect(rng), derive_seed(88, i), size(rng))};
    try {
      const auto s = generate_scene(res, {derive_seed(99, i), 0, {}});
      const double e = rel_err(s.truth.achieved_pre_sensor.qd, *q.qd);
      worst = std::max(worst, e);
      if (e > 0.05) out.fail("chip " + std::to_string(i) + " Q_D off by " + std::to_string(e));
    } catch (const SceneError& e) {
      out.fail("chip " + std::to_string(i) + " failed at " + e.stage() + ": " + e.what());
    }
  }
  out.detail << "50 chips, worst Q_D rel err " << worst;
  return out;
}

// 9. Throughput at 640x512 with the full sensor chain, images written to disk.
Outcome throughput(const fs::path& work) {
  Outcome out;
  QualitySpec q = fixture::spec(2.0, 1.5, -0.3, 10);
  q.qd = 2 * 1500;
  q.rx = 0.2;
  const auto res = fixture::demo_resources(640, 512, q, SensorConfig{1.0, 2, 2.0, 14}, true, 9);
  const fs::path dir = work / "throughput";
  fs::remove_all(dir);
  const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  const auto report = generate_batch(res, dir, {1000, 9, jobs, false});
  const double t = seconds_since(t0);
  if (report.successes != 1000) out.fail(std::to_string(report.failures) + " scenes failed");
  if (t >= 300) out.fail("runtime " + std::to_string(t) + " s");
  out.detail << report.successes << " scenes in " << t << " s on " << jobs << " thread(s)";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irscene acceptance run"};
  fs::path work = fs::temp_directory_path() / "irscene_acceptance";
  std::vector<int> only;
  app.add_option("--workdir", work, "Scratch directory for generated batches");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric round trip", metric_round_trip},
      {"K bound and identity", k_identity},
      {"lambda samplers", lambda_samplers},
      {"blend endpoints and convexity", blend},
      {"occlusion solver", occlusion},
      {"sensor chain", sensor},
      {"batch determinism", [&] { return determinism(work); }},
      {"Q_D scaling", qd_scaling},
      {"throughput", [&] { return throughput(work); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": "
              << o.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
