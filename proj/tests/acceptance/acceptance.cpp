#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "core_cases.hpp"
#include "dialogcore/lawfit.hpp"
#include "dialogcore/metric.hpp"
#include "dialogcore/modes.hpp"
#include "dialogcore/report.hpp"
#include "dialogcore/stats.hpp"
#include "fixtures.hpp"
#include "mock_servers.hpp"
#include "stats_oracle.hpp"

using namespace dialogcore;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
    void note(const std::string& text) {
        if (ok) detail = text;
    }
};

std::string fmt(double x, int precision = 6) {
    std::ostringstream s;
    s.precision(precision);
    s << x;
    return s.str();
}

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Outcome zipf_recovery() {
    Outcome o;
    const auto t0 = Clock::now();
    const auto stream = synth_zipf_stream(2.0, 10000, 100000, 42);
    const auto sampled = fit_zipf(rank_frequency(stream));

    TokenStats table;
    for (std::size_t r = 1; r <= 200; ++r) {
        const auto f = static_cast<std::size_t>(std::llround(1e6 * std::pow(double(r), -2.0)));
        table.entries.push_back({"t" + std::to_string(r), f});
        table.total_tokens += f;
    }
    const auto analytic = fit_zipf(table, {1, {}});
    const double ms = ms_since(t0);

    if (std::abs(sampled.exponent - 2.0) > 0.1) o.fail("sampled alpha " + fmt(sampled.exponent));
    if (std::abs(analytic.exponent - 2.0) > 0.02) o.fail("analytic alpha " + fmt(analytic.exponent));
    if (ms >= 2000) o.fail("took " + fmt(ms) + " ms");
    o.note("sampled " + fmt(sampled.exponent) + ", analytic " + fmt(analytic.exponent) + ", " + fmt(ms, 3) + " ms");
    return o;
}

Outcome heaps_recovery() {
    Outcome o;
    VocabGrowthCurve curve;
    for (std::size_t m = 1; m <= 8; ++m) {
        const std::size_t n = m * m * m * m * m;
        curve.points.push_back({n, 5 * m * m * m});
    }
    const auto f = fit_heaps(curve);
    if (std::abs(f.exponent - 0.6) > 1e-6) o.fail("beta " + fmt(f.exponent, 12));
    if (f.r_squared < 1 - 1e-9) o.fail("r2 " + fmt(f.r_squared, 12));
    o.note("beta " + fmt(f.exponent, 12) + ", r2 " + fmt(f.r_squared, 12));
    return o;
}

Outcome core_bounds() {
    Outcome o;
    std::mt19937_64 rng(1000);
    std::size_t violations = 0, checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto c = testing::random_core_case(rng);
        const auto a = analyze_core(c.corpus, c.matrix, c.config);
        std::vector<const CoreBreakdown*> all{&a.corpus};
        for (const auto& d : a.per_dialog) all.push_back(&d.breakdown);
        for (const auto* b : all) {
            ++checked;
            if (const auto why = testing::breakdown_violation(*b); !why.empty()) {
                ++violations;
                o.fail("trial " + std::to_string(trial) + ": " + why);
            }
        }
    }
    o.note(std::to_string(checked) + " breakdowns, " + std::to_string(violations) + " violations");
    return o;
}

Outcome degenerate_corpus() {
    Outcome o;
    const auto c = testing::degenerate_case();
    const auto b = compute_core(c.corpus, c.matrix, c.config);
    if (b.core != 0.0) o.fail("core " + fmt(b.core, 17));
    o.note("core " + fmt(b.core));
    return o;
}

Outcome perfect_diversity() {
    Outcome o;
    double worst = 0;
    for (std::size_t k = 2; k <= 10; ++k) {
        const auto c = testing::perfect_diversity_case(k);
        const auto b = compute_core(c.corpus, c.matrix, c.config);
        worst = std::max(worst, std::abs(b.core - 1.0));
        if (std::abs(b.core - 1.0) > 1e-9) o.fail("k_max " + std::to_string(k) + ": core " + fmt(b.core, 17));
    }
    o.note("k_max 2..10, max |core - 1| = " + fmt(worst));
    return o;
}

Outcome repeated_fraction_oracle() {
    Outcome o;
    std::mt19937_64 rng(6);
    std::size_t corpora = 0, mismatches = 0;
    while (corpora < 200) {
        const auto c = testing::random_corpus(rng, 4, 5, 5, 4);
        if (c.token_count() > 50) continue;
        ++corpora;
        for (std::size_t n = 1; n <= 3; ++n) {
            std::map<std::string, std::size_t> counts;
            std::size_t total = 0;
            for (std::size_t d = 0; d < c.size(); ++d)
                for (const auto& [k, v] : testing::naive_ngrams(c.dialog_tokens(d), n)) {
                    counts[k] += v;
                    total += v;
                }
            std::size_t repeated = 0, repeated_types = 0;
            for (const auto& [k, v] : counts)
                if (v > 1) repeated += v, ++repeated_types;

            const auto table = extract_ngrams(c, n);
            const auto occ = repeated_fraction(table);
            const auto types = repeated_fraction(table, RepetitionMode::distinct_types);
            if (total == 0) {
                if (occ || types) ++mismatches, o.fail("value for an empty table");
                continue;
            }
            if (!occ || *occ != double(repeated) / double(total)) ++mismatches, o.fail("occurrence mismatch");
            if (!types || *types != double(repeated_types) / double(counts.size()))
                ++mismatches, o.fail("distinct-type mismatch");
        }
    }
    o.note(std::to_string(corpora) + " corpora x n=1..3, " + std::to_string(mismatches) + " mismatches");
    return o;
}

Outcome mann_whitney() {
    Outcome o;
    std::mt19937_64 rng(42);
    for (int t = 0; t < 100; ++t) {
        const auto [xs, ys] = testing::tie_free_samples(rng, 6);
        const auto r = mann_whitney_u(xs, ys);
        const double expected = testing::enumerated_p(xs, ys);
        if (r.method != UTestMethod::exact) o.fail("sample " + std::to_string(t) + " not exact");
        if (r.u != testing::brute_u(xs, ys)) o.fail("sample " + std::to_string(t) + " U mismatch");
        if (std::abs(r.p_value - expected) > 1e-12)
            o.fail("sample " + std::to_string(t) + ": p " + fmt(r.p_value) + " vs " + fmt(expected));
    }
    std::normal_distribution<double> g;
    for (int t = 0; t < 300; ++t) {
        std::vector<double> xs(1 + rng() % 25), ys(1 + rng() % 25);
        for (auto& x : xs) x = std::round(g(rng) * 3);
        for (auto& y : ys) y = std::round(g(rng) * 3);
        if (mann_whitney_u(xs, ys).u + mann_whitney_u(ys, xs).u != double(xs.size() * ys.size()))
            o.fail("U complement broken at trial " + std::to_string(t));
    }
    const auto textbook = mann_whitney_u(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
    if (textbook.p_value != 0.1) o.fail("[1,2,3] vs [4,5,6]: p " + fmt(textbook.p_value, 17));
    o.note("100 exact samples, 300 complement checks, textbook p " + fmt(textbook.p_value));
    return o;
}

Outcome clustering_oracle() {
    Outcome o;
    const auto blobs = testing::gaussian_blobs({{0, 0, 0}, {10, 0, 0}, {0, 10, 0}}, 50, 0.01, 42);
    std::vector<std::size_t> first;
    for (int run = 0; run < 5; ++run) {
        const auto a = cluster_modes(blobs.matrix, 10, 42);
        if (a.k != 3) o.fail("run " + std::to_string(run) + ": k " + std::to_string(a.k));
        const double ari = testing::adjusted_rand_index(a.labels, blobs.truth);
        if (ari != 1.0) o.fail("run " + std::to_string(run) + ": ARI " + fmt(ari));
        if (run == 0) first = a.labels;
        else if (a.labels != first) o.fail("run " + std::to_string(run) + " differs from run 0");
    }
    o.note("k 3, ARI 1, 5 identical runs");
    return o;
}

Outcome runner_integration() {
    Outcome o;
    testing::MockServer a, b;
    testing::serve_chat(a);
    testing::serve_chat(b);
    testing::TempDir dir;
    std::vector<std::string> outputs;
    double slowest = 0;
    for (const char* name : {"one", "two"}) {
        const auto out = dir.file(std::string(name) + "/dialogs.jsonl");
        const auto t0 = Clock::now();
        const int code = testing::run_cli({"generate", "--endpoint-a", a.url(), "--endpoint-b", b.url(), "--model-a",
                                           "mock-a", "--model-b", "mock-b", "--condition", "neutral", "--out", out});
        slowest = std::max(slowest, ms_since(t0));
        if (code != 0) {
            o.fail(std::string("run ") + name + " exited " + std::to_string(code));
            return o;
        }
        outputs.push_back(testing::slurp(out));
        try {
            const auto corpus = parse_corpus_file(out);
            if (corpus.size() != 30) o.fail(std::to_string(corpus.size()) + " dialogs");
            for (const auto& d : corpus.dialogs())
                if (d.utterances.size() != 10) o.fail(d.id + " has " + std::to_string(d.utterances.size()) + " turns");
        } catch (const std::exception& e) {
            o.fail(std::string("parse error: ") + e.what());
        }
    }
    if (outputs[0] != outputs[1]) o.fail("runs differ");
    if (slowest >= 10000) o.fail("took " + fmt(slowest) + " ms");
    o.note("30 x 10 dialogs, identical runs, slowest " + fmt(slowest, 4) + " ms");
    return o;
}

Outcome end_to_end_golden() {
    Outcome o;
    const std::string fixtures = DIALOGCORE_FIXTURE_DIR, golden = DIALOGCORE_GOLDEN_DIR;
    testing::TempDir dir;
    const auto out = dir.file("out");
    if (testing::run_cli({"--out-dir", out, "analyze", fixtures + "/corpus12.jsonl", "--embeddings",
                          fixtures + "/corpus12.embeddings.jsonl"}) != 0)
        o.fail("analyze failed");
    if (testing::run_cli({"--out-dir", out, "compare", out + "/corpora.csv"}) != 0) o.fail("compare failed");
    std::vector<std::string> per_dialog{"--out-dir", out, "report"};
    std::set<std::string> produced;
    if (fs::exists(out))
        for (const auto& e : fs::directory_iterator(out)) {
            const auto name = e.path().filename().string();
            if (name.ends_with(".per_dialog.csv")) per_dialog.push_back(e.path().string());
        }
    if (testing::run_cli(per_dialog) != 0) o.fail("report failed");
    if (!o.ok) return o;

    for (const auto& e : fs::directory_iterator(out)) {
        const auto name = e.path().filename().string();
        if (!name.ends_with(".manifest.json")) produced.insert(name);
    }
    std::set<std::string> expected;
    for (const auto& e : fs::directory_iterator(golden)) expected.insert(e.path().filename().string());
    if (expected.empty()) o.fail("no golden files");
    if (produced != expected) o.fail("file set differs from golden");
    for (const auto& name : expected)
        if (produced.count(name) && testing::slurp(out + "/" + name) != testing::slurp(golden + "/" + name))
            o.fail(name + " differs from golden");
    o.note(std::to_string(expected.size()) + " files byte-identical");
    return o;
}

Outcome entropy_checks() {
    Outcome o;
    for (std::size_t k = 2; k <= 10; ++k) {
        ModeDistribution uniform{std::vector<double>(k, 1.0 / double(k))};
        if (std::abs(normalized_entropy(uniform, k) - 1.0) > 1e-12) o.fail("uniform k " + std::to_string(k));
    }
    const ModeDistribution point{{1.0}};
    if (entropy(point) != 0.0 || normalized_entropy(point, 10) != 0.0) o.fail("point mass not 0");
    const ModeDistribution skew{{0.5, 0.25, 0.25}};
    const double h = entropy(skew);
    if (std::abs(h - 1.5 * std::log(2.0)) > 1e-12) o.fail("(0.5,0.25,0.25): " + fmt(h, 17));
    o.note("uniform 1, point mass 0, skewed " + fmt(h, 12));
    return o;
}

Outcome temporal_report() {
    Outcome o;
    // Two agent-A models, three dialog indices, two pairings each; hand-computed means below.
    const std::string text =
        "dialog_id,condition,core\n"
        "m1__m2__neutral__0,neutral,0.1\n"
        "m1__m3__neutral__0,neutral,0.3\n"
        "m1__m2__neutral__1,neutral,0.2\n"
        "m1__m3__neutral__1,neutral,0.6\n"
        "m1__m2__neutral__2,neutral,0.5\n"
        "m1__m3__neutral__2,neutral,0.5\n"
        "m4__m2__competitive__0,competitive,0.25\n"
        "m4__m2__competitive__1,competitive,0.75\n";
    std::istringstream in(text);
    const auto rows = report::temporal_means({csv::read(in, "synthetic")});
    const std::vector<std::tuple<std::string, std::string, std::size_t, double>> expected{
        {"competitive", "m4", 0, 0.25}, {"competitive", "m4", 1, 0.75}, {"neutral", "m1", 0, (0.1 + 0.3) / 2},
        {"neutral", "m1", 1, (0.2 + 0.6) / 2}, {"neutral", "m1", 2, (0.5 + 0.5) / 2}};
    if (rows.size() != expected.size()) {
        o.fail(std::to_string(rows.size()) + " rows");
        return o;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [cond, agent, index, mean] = expected[i];
        const auto& r = rows[i];
        if (r.condition != cond || r.agent_a != agent || r.dialog_index != index || r.mean_core != mean)
            o.fail("row " + std::to_string(i) + ": " + r.condition + "/" + r.agent_a + "/" +
                   std::to_string(r.dialog_index) + " = " + fmt(r.mean_core, 17));
    }
    o.note(std::to_string(rows.size()) + " means exact");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"zipf recovery", zipf_recovery},
        {"heaps recovery", heaps_recovery},
        {"core bounds fuzz", core_bounds},
        {"degenerate corpus", degenerate_corpus},
        {"perfect diversity", perfect_diversity},
        {"repeated-fraction oracle", repeated_fraction_oracle},
        {"mann-whitney", mann_whitney},
        {"clustering oracle", clustering_oracle},
        {"runner integration", runner_integration},
        {"end-to-end golden", end_to_end_golden},
        {"entropy checks", entropy_checks},
        {"temporal report", temporal_report},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        failed += !o.ok;
        std::printf("%s %2zu %-26s %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
