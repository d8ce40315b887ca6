// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairdex/corpus_io.hpp"
#include "fairdex/distribution.hpp"
#include "fairdex/eval_engine.hpp"
#include "fairdex/kendall.hpp"
#include "fairdex/metrics.hpp"
#include "fairdex/synth.hpp"
#include "oracles.hpp"

using namespace fairdex;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects sub-check failures for one criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    pass_ = false;
    if (failures_++ < 4) detail_ += (detail_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    if (pass_) return {true, summary};
    std::string d = detail_;
    if (failures_ > 4) d += "; ... " + std::to_string(failures_ - 4) + " more";
    return {false, d};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::string detail_;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

// --- AC1 -------------------------------------------------------------------

Outcome ac1() {
  struct Row {
    const char* name;
    double r, f, mean, gmean;
  };
  const Row rows[] = {
      {"row1", 1.0000, 0.1158, 0.5579, 0.3403},
      {"row2", 0.0000, 1.0000, 0.5000, 0.0000},
      {"row3", 0.8800, 0.1578, 0.5189, 0.3727},
      {"row4", 1.0000, 0.0861, 0.5431, 0.2935},
  };
  Checker c;
  for (const auto& row : rows) {
    const double m = interpolate(row.r, row.f, Interpolation::mean());
    const double g = interpolate(row.r, row.f, Interpolation::gmean());
    c.expect(std::abs(m - row.mean) <= 5e-5,
             std::string(row.name) + fmt(" mean %.6f vs %.4f", m, row.mean));
    c.expect(std::abs(g - row.gmean) <= 5e-5,
             std::string(row.name) + fmt(" gmean %.6f vs %.4f (off %.1e)", g, row.gmean, std::abs(g - row.gmean)));
  }
  return c.outcome("8 reference mean/gmean values within 5e-5");
}

// --- AC2 -------------------------------------------------------------------

Outcome ac2() {
  std::mt19937_64 gen(20240601);
  Checker c;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + gen() % 9;
    std::vector<std::uint64_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = gen() % 100;
      b[i] = gen() % 100;
    }
    const auto p = laplace_smooth(a, labels(n));
    const auto q = laplace_smooth(b, labels(n));
    const double kl = kl_divergence(p, q);
    const double want = oracle::kl(p.mass(), q.mass());
    worst = std::max(worst, std::abs(kl - want));
    c.expect(std::abs(kl - want) <= 1e-10, fmt("trial %.0f: |kl - oracle| = %.2e", trial, std::abs(kl - want)));
    c.expect(kl >= 0.0, fmt("trial %.0f: negative kl", trial));
    c.expect(std::abs(kl_divergence(p, p)) <= 1e-12, fmt("trial %.0f: KL(p||p) != 0", trial));
  }
  return c.outcome(fmt("1000 pairs, max |kl - oracle| = %.2e", worst));
}

// --- AC3 -------------------------------------------------------------------

Outcome ac3() {
  Checker c;
  std::size_t topics = 0;
  std::mt19937_64 gen(77);
  for (std::uint64_t seed = 0; topics < 500; ++seed) {
    SynthSpec spec;
    spec.n_topics = 50;
    spec.categories = {"a", "b", "c"};
    spec.min_relevant = 1;
    spec.max_relevant = 40;
    spec.nonrelevant_ratio = 1 + gen() % 10;
    const auto coll = gen_collection(spec, seed);
    const double noise = double(gen() % 101) / 100.0;
    const auto profile = seed % 3 == 0 ? SystemProfile::random() : SystemProfile::noisy(noise);
    const std::size_t depth = 1 + gen() % 120;
    const Run run = gen_run(profile, coll, seed, depth, "sys");
    for (const auto& [topic, entries] : run.topics) {
      std::vector<std::string> ranked;
      for (const auto& e : entries) ranked.push_back(e.doc_id);
      const DocSet rel = coll.qrels.relevant_docs(topic);
      const std::vector<std::string> rel_list(rel.begin(), rel.end());
      const double got = r_precision(ranked, rel);
      const double want = oracle::r_precision(ranked, rel_list);
      c.expect(got == want, "topic " + topic + fmt(": %.6f vs %.6f", got, want));
      ++topics;
    }
  }
  return c.outcome(std::to_string(topics) + " topics, exact match");
}

// --- AC4 -------------------------------------------------------------------

Outcome ac4() {
  Checker c;
  std::size_t perms = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<double> base(n);
    std::iota(base.begin(), base.end(), 1.0);
    std::vector<double> perm = base;
    do {
      c.expect(kendall_tau_b(base, perm) == oracle::tau_b(base, perm), "permutation mismatch");
      ++perms;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + gen() % 60;
    const unsigned levels = 2 + gen() % 8;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = double(gen() % levels) / levels;
      y[i] = double(gen() % levels) / levels;
    }
    const double want = oracle::tau_b(x, y);
    const double got = kendall_tau_b(x, y);
    c.expect(std::isnan(want) ? std::isnan(got) : got == want, fmt("tied batch %.0f mismatch", trial));
  }
  return c.outcome(std::to_string(perms) + " permutations + 100 tied batches, exact match");
}

// --- AC5 -------------------------------------------------------------------

SynthSpec ac5_spec() {
  SynthSpec spec;
  spec.n_topics = 50;
  spec.categories = {"major", "minor1", "minor2", "minor3"};
  spec.category_skew = {{"major", 8}, {"minor1", 1}, {"minor2", 1}, {"minor3", 1}};
  spec.systems = {SystemProfile::relevance_optimal(), SystemProfile::fairness_optimal("uniform")};
  for (int i = 1; i <= 18; ++i) spec.systems.push_back(SystemProfile::noisy(0.05 * i));
  return spec;
}

EvalConfig ac5_config() {
  EvalConfig cfg;
  cfg.targets = {TargetSpec::uniform(), TargetSpec::population()};
  cfg.results_scope = ResultsScope::RelevantRetrievedOnly;
  return cfg;
}

std::vector<BatchReport> ac5_reports;  // reused by AC6

Outcome ac5() {
  const auto spec = ac5_spec();
  int successes = 0;
  std::string taus;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto coll = gen_collection(spec, seed);
    const auto runs = gen_runs(spec, coll, seed);
    auto report = evaluate_batch(runs, coll.qrels, coll.source, ac5_config());
    std::vector<double> r, fu, fp;
    for (const auto& s : report.systems) {
      r.push_back(s.mean_r_precision);
      fu.push_back(s.metric("fair_uniform"));
      fp.push_back(s.metric("fair_population"));
    }
    const double tau_u = kendall_tau_b(r, fu);
    const double tau_p = kendall_tau_b(r, fp);
    const bool ok = tau_u < 0 && tau_p > tau_u;
    successes += ok;
    if (seed <= 3) taus += fmt(" (%.3f, %.3f)", tau_u, tau_p);
    ac5_reports.push_back(std::move(report));
  }
  Outcome o;
  o.pass = successes >= 9;
  o.detail = std::to_string(successes) + "/10 seeds with tau(R,F_U) < 0 and tau(R,F_P) > tau(R,F_U);" +
             " first seeds (tau_U, tau_P):" + taus;
  return o;
}

// --- AC6 -------------------------------------------------------------------

Outcome ac6() {
  std::vector<BatchReport> batches = ac5_reports;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    SynthSpec spec;
    spec.n_topics = 8;
    spec.categories = {"a", "b", "c"};
    spec.category_skew = {{"a", 3}, {"b", 2}, {"c", 1}};
    spec.systems = {SystemProfile::relevance_optimal(), SystemProfile::fairness_optimal("population"),
                    SystemProfile::random(), SystemProfile::noisy(0.1), SystemProfile::noisy(0.7)};
    const auto coll = gen_collection(spec, seed);
    EvalConfig cfg;
    cfg.targets = {TargetSpec::uniform(), TargetSpec::population()};
    batches.push_back(evaluate_batch(gen_runs(spec, coll, seed), coll.qrels, coll.source, cfg));
  }
  Checker c;
  std::size_t columns_checked = 0;
  for (const auto& report : batches) {
    std::vector<std::pair<std::string, std::string>> pairs{{"n_r_prec", "r_prec"}};
    for (const auto& t : report.targets) pairs.emplace_back("fair_" + t.name, "kl_" + t.name);
    for (const auto& [norm, raw] : pairs) {
      std::vector<double> raw_values;
      int ones = 0, zeros = 0;
      for (const auto& s : report.systems) {
        raw_values.push_back(s.metric(raw));
        ones += s.metric(norm) == 1.0;
        zeros += s.metric(norm) == 0.0;
      }
      std::sort(raw_values.begin(), raw_values.end());
      const bool tied = std::adjacent_find(raw_values.begin(), raw_values.end()) != raw_values.end();
      if (tied) {
        c.expect(ones >= 1 && zeros >= 1, norm + " lacks an endpoint under ties");
      } else {
        c.expect(ones == 1 && zeros == 1, norm + fmt(" has %.0f ones and %.0f zeros", ones, zeros));
      }
      ++columns_checked;
    }
  }
  return c.outcome(std::to_string(columns_checked) + " normalized columns over " +
                   std::to_string(batches.size()) + " batches");
}

// --- AC7 -------------------------------------------------------------------

Outcome ac7() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> log_scale(std::log(1e-3), std::log(1e3));
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  std::uniform_real_distribution<double> kl(0.0, 1.5);
  Checker c;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(2 + gen() % 30);
    for (auto& x : v) x = kl(gen);
    const double a = std::exp(log_scale(gen));
    const double b = shift(gen);
    const auto base = fairness_scores(v).values;
    // Scale only, shift only, then both; natural-log to log2 and log10 too.
    const std::vector<std::function<double(double)>> maps{
        [&](double x) { return a * x; },
        [&](double x) { return x + b; },
        [&](double x) { return a * x + b; },
        [](double x) { return x / std::log(2.0); },
        [](double x) { return x / std::log(10.0); },
    };
    for (const auto& m : maps) {
      std::vector<double> w;
      for (double x : v) w.push_back(m(x));
      const auto got = fairness_scores(w).values;
      for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(got[i] - base[i]));
    }
  }
  c.expect(worst <= 1e-12, fmt("max |dF| = %.2e", worst));
  return c.outcome(fmt("100 batches x 5 transforms, max |dF| = %.2e", worst));
}

// --- AC8 -------------------------------------------------------------------

template <class T, class Parse, class Write>
bool fixed_point(const T& original, Parse parse, Write write, std::string& text_out) {
  std::ostringstream first;
  write(first, original);
  std::istringstream in1(first.str());
  const T parsed = parse(in1);
  std::ostringstream second;
  write(second, parsed);
  std::istringstream in2(second.str());
  const T reparsed = parse(in2);
  text_out = first.str();
  return parsed == original && reparsed == parsed && first.str() == second.str();
}

Outcome ac8() {
  Checker c;
  std::size_t artifacts = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthSpec spec;
    spec.n_topics = 10;
    spec.categories = {"news", "blog", "forum"};
    spec.category_skew = {{"news", 5}, {"blog", 2}, {"forum", 1}};
    spec.systems = {SystemProfile::relevance_optimal(), SystemProfile::fairness_optimal(),
                    SystemProfile::random(), SystemProfile::noisy(0.3)};
    const auto coll = gen_collection(spec, seed);
    const std::string s = "seed " + std::to_string(seed) + ": ";
    std::string text;

    for (const auto& run : gen_runs(spec, coll, seed)) {
      c.expect(fixed_point(
                   run, [](std::istream& in) { return parse_run(in); },
                   [](std::ostream& out, const Run& r) { write_run(out, r); }, text),
               s + "run " + run.system_tag);
      ++artifacts;
    }
    c.expect(fixed_point(
                 coll.qrels, [](std::istream& in) { return parse_qrels(in); },
                 [](std::ostream& out, const Qrels& q) { write_qrels(out, q); }, text),
             s + "qrels");
    c.expect(fixed_point(
                 coll.explicit_source(), [](std::istream& in) { return parse_category_map(in); },
                 [](std::ostream& out, const CategorySource& src) { write_category_source(out, src); }, text),
             s + "category map");
    c.expect(fixed_point(
                 coll.source, [](std::istream& in) { return parse_prefix_rules(in); },
                 [](std::ostream& out, const CategorySource& src) { write_category_source(out, src); }, text),
             s + "prefix rules");
    artifacts += 3;
  }
  return c.outcome(std::to_string(artifacts) + " artifacts over 10 seeds reach a fixed point");
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    double budget_s;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"AC1", "interpolation identities vs reference values", 0.5, ac1},
      {"AC2", "KL oracle equivalence", 1.0, ac2},
      {"AC3", "R-Precision oracle equivalence", 1.0, ac3},
      {"AC4", "Kendall tau-b oracle equivalence", 1.0, ac4},
      {"AC5", "desk-scale tau sign/ordering on skewed synthetic batches", 30.0, ac5},
      {"AC6", "normalized scale endpoints", 0.5, ac6},
      {"AC7", "fairness invariance to KL scale and shift", 1.0, ac7},
      {"AC8", "synth/parse/serialize round-trips", 5.0, ac8},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budget_s) {
      o.pass = false;
      o.detail += fmt(" [over budget: %.2fs > %.1fs]", secs, cr.budget_s);
    }
    failed += !o.pass;
    std::printf("%s %s  %s (%.3fs): %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
