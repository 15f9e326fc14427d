#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "dialogcore/error.hpp"
#include "dialogcore/report.hpp"
#include "fixtures.hpp"
#include "mock_servers.hpp"

using namespace dialogcore;
using namespace dialogcore::report;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = DIALOGCORE_FIXTURE_DIR;

csv::Table table_of(const std::string& text) {
    std::istringstream in(text);
    return csv::read(in, "test");
}

void write_jsonl(const std::string& path, const std::vector<std::string>& ids, const std::string& condition) {
    std::ofstream out(path);
    for (const auto& id : ids) {
        nlohmann::json d{{"id", id}, {"agent_a", "m1"}, {"agent_b", "m2"}, {"condition", condition}};
        d["turns"] = nlohmann::json::array();
        for (int t = 0; t < 12; ++t)
            d["turns"].push_back({{"agent", t % 2 ? "B" : "A"},
                                  {"text", id + " says something number " + std::to_string(t * 7 % 5) + " again"}});
        out << d.dump() << '\n';
    }
}

}  // namespace

TEST_CASE("parse_group_by") {
    CHECK(parse_group_by("pair-condition") == GroupBy::pair_condition);
    CHECK(parse_group_by("file") == GroupBy::file);
    CHECK(parse_group_by("all") == GroupBy::all);
    CHECK_THROWS_AS(parse_group_by("model"), ValidationError);
}

TEST_CASE("load_grouped") {
    const auto fixture = kFixtures + "/corpus12.jsonl";
    const auto groups = load_grouped({fixture}, GroupBy::pair_condition);
    REQUIRE(groups.size() == 6);
    CHECK(groups[0].name == "alpha-7b__beta-8b__competitive");
    for (const auto& g : groups) {
        CHECK(g.corpus.size() == 2);
        CHECK(corpus_condition(g.corpus) != "mixed");
    }
    const auto all = load_grouped({fixture}, GroupBy::all);
    REQUIRE(all.size() == 1);
    CHECK(all[0].corpus.size() == 12);
    CHECK(corpus_condition(all[0].corpus) == "mixed");

    testing::TempDir dir;
    write_jsonl(dir.file("x.jsonl"), {"m1__m2__neutral__0"}, "neutral");
    write_jsonl(dir.file("y.jsonl"), {"m1__m2__neutral__0"}, "neutral");
    CHECK_THROWS_AS(load_grouped({dir.file("x.jsonl"), dir.file("y.jsonl")}, GroupBy::file), ValidationError);
    CHECK_THROWS_AS(load_grouped({}, GroupBy::all), ValidationError);
}

TEST_CASE("compare_conditions") {
    const auto same = compare_conditions({table_of(
        "corpus,condition,zipf_alpha,heaps_beta,core\n"
        "a,cooperative,1,0.5,0.2\nb,cooperative,2,0.6,0.3\n"
        "c,neutral,1,0.5,0.2\nd,neutral,2,0.6,0.3\n")});
    REQUIRE(same.size() == 3);
    for (const auto& r : same) {
        CHECK(r.comparison == "cooperative vs neutral");
        CHECK(r.test.p_value == 1.0);
    }

    std::string disjoint = "corpus,condition,zipf_alpha,heaps_beta,core\n";
    for (int i = 0; i < 5; ++i) {
        const auto lo = std::to_string(i), hi = std::to_string(10 + i);
        disjoint += "c" + lo + ",competitive," + lo + "," + lo + "," + lo + "\n";
        disjoint += "n" + lo + ",neutral," + hi + "," + hi + "," + hi + "\n";
    }
    const auto rows = compare_conditions({table_of(disjoint)});
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.test.u == 0.0);
        CHECK(r.test.method == UTestMethod::exact);
        CHECK(r.test.p_value == doctest::Approx(2.0 / 252.0).epsilon(1e-12));
    }

    const auto three = compare_conditions({table_of(
        "corpus,condition,zipf_alpha,heaps_beta,core\n"
        "a,neutral,1,,0.1\nb,cooperative,2,0.2,0.2\nc,competitive,3,0.3,0.3\nd,neutral,1.5,0.4,0.4\n")});
    REQUIRE(three.size() == 9);
    CHECK(three[0].comparison == "competitive vs cooperative");
    CHECK(three[2].comparison == "cooperative vs neutral");
    CHECK(three[3].metric == "heaps_beta");

    CHECK_THROWS_AS(compare_conditions({table_of("corpus,condition,zipf_alpha,heaps_beta,core\na,neutral,1,1,1\n")}),
                    ValidationError);
    CHECK_THROWS_AS(compare_conditions({table_of("corpus,condition,zipf_alpha,heaps_beta,core\n"
                                                 "a,neutral,1,1,1\nb,competitive,,1,1\n")}),
                    ValidationError);
    CHECK_THROWS_AS(compare_conditions({table_of("corpus,condition,zipf_alpha,heaps_beta,core\n"
                                                 "a,neutral,x,1,1\nb,competitive,1,1,1\n")}),
                    ValidationError);
}

TEST_CASE("temporal_means") {
    const auto rows = temporal_means({table_of(
        "dialog_id,condition,core\n"
        "m1__m2__neutral__0,neutral,0.1\n"
        "m1__m3__neutral__0,neutral,0.2\n"
        "m1__m2__neutral__1,neutral,0.3\n"
        "m4__m2__neutral__0,neutral,0.5\n")});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].agent_a == "m1");
    CHECK(rows[0].dialog_index == 0);
    CHECK(rows[0].mean_core == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(rows[1].dialog_index == 1);
    CHECK(rows[1].mean_core == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rows[2].agent_a == "m4");

    const auto no_condition = temporal_means({table_of("dialog_id,core\nx__y__competitive__2,0.4\n")});
    REQUIRE(no_condition.size() == 1);
    CHECK(no_condition[0].condition == "competitive");

    const auto split = temporal_means(
        {table_of("dialog_id,core\na__b__neutral__0,0.2\n"), table_of("dialog_id,core\na__c__neutral__0,0.4\n")});
    REQUIRE(split.size() == 1);
    CHECK(split[0].mean_core == doctest::Approx(0.3).epsilon(1e-12));

    CHECK_THROWS_AS(temporal_means({table_of("dialog_id,core\na__b__neutral__0,\n")}), ValidationError);
    CHECK_THROWS_AS(temporal_means({table_of("dialog_id,core\nbroken,0.1\n")}), ValidationError);
}

TEST_CASE("csv round trip") {
    const csv::Row row{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
    std::ostringstream out;
    csv::write_row(out, {"a", "b", "c", "d", "e"});
    csv::write_row(out, row);
    const auto t = table_of(out.str());
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0] == row);
    CHECK(t.column("c") == 2);
    CHECK_THROWS_AS(t.column("z"), ValidationError);
    CHECK_THROWS_AS(table_of("a,b\n1\n"), ValidationError);
}

TEST_CASE("run_analyze output re-ingests") {
    testing::TempDir dir;
    AnalyzeOptions opts;
    opts.inputs = {kFixtures + "/corpus12.jsonl"};
    opts.embedding_files = {kFixtures + "/corpus12.embeddings.jsonl"};
    opts.out_dir = dir.path().string();
    const auto result = run_analyze(opts);
    REQUIRE(result.corpora.size() == 6);

    const auto corpora = csv::read_file(dir.file("corpora.csv"));
    REQUIRE(corpora.rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(corpora.rows[i][corpora.column("corpus")] == result.corpora[i].corpus);
        const double core = std::stod(corpora.rows[i][corpora.column("core")]);
        CHECK(core == doctest::Approx(result.corpora[i].core).epsilon(1e-5));
        CHECK(core >= 0.0);
        CHECK(core <= 1.0);
    }
    CHECK(compare_conditions({corpora}).size() == 9);

    const auto per_dialog = csv::read_file(dir.file(result.corpora[0].corpus + ".per_dialog.csv"));
    CHECK(per_dialog.rows.size() == 2);
    CHECK(temporal_means({per_dialog}).size() == 2);

    const auto report = nlohmann::json::parse(testing::slurp(dir.file(result.corpora[0].corpus + ".report.json")));
    CHECK(report.contains("core_breakdown"));
    CHECK(report["per_dialog"].size() == 2);

    auto missing = opts;
    missing.embedding_files.clear();
    CHECK_THROWS_AS(run_analyze(missing), ValidationError);
}

TEST_CASE("manifest") {
    testing::TempDir dir;
    RunManifest m;
    m.command = "analyze";
    m.argv = {"dialogcore", "analyze", "x.jsonl"};
    m.seeds["cluster_seed"] = "42";
    m.started_at = m.finished_at = utc_timestamp();
    const auto path = write_manifest(m, dir.path().string());
    CHECK(fs::path(path).filename() == "analyze.manifest.json");
    const auto j = nlohmann::json::parse(testing::slurp(path));
    CHECK(j["command"] == "analyze");
    CHECK(j["seeds"]["cluster_seed"] == "42");
    CHECK(j["argv"].size() == 3);
    CHECK(tool_version() == "0.1.0");
}

TEST_CASE("CLI validation exit codes") {
    testing::TempDir dir;
    const auto corpus = kFixtures + "/corpus12.jsonl";
    const auto emb = kFixtures + "/corpus12.embeddings.jsonl";
    CHECK(testing::run_cli({"--kmax", "1", "--out-dir", dir.path().string(), "analyze", corpus, "--embeddings", emb}) ==
          1);
    CHECK(testing::run_cli({"analyze", dir.file("missing.jsonl")}) == 1);
    CHECK(testing::run_cli({"bogus"}) == 1);
    CHECK(testing::run_cli({"--version"}) == 0);
    CHECK(testing::run_cli({"--out-dir", dir.path().string(), "analyze", corpus}) == 1);
}

TEST_CASE("CLI analyze against an embedding service") {
    testing::MockServer good;
    testing::serve_embeddings(good);
    testing::TempDir dir;
    const auto corpus = kFixtures + "/corpus12.jsonl";
    CHECK(testing::run_cli({"--out-dir", dir.file("a"), "analyze", corpus, "--embed-endpoint", good.url("/embed")}) ==
          0);
    CHECK(fs::exists(dir.file("a/corpora.csv")));
    CHECK(fs::exists(dir.file("a/analyze.manifest.json")));
    CHECK(good.requests() > 0);

    CHECK(testing::run_cli({"--out-dir", dir.file("b"), "analyze", corpus}, "/dev/null",
                           "CORE_EMBED_ENDPOINT=" + testing::shell_quote(good.url("/embed"))) == 0);
    CHECK(testing::slurp(dir.file("a/corpora.csv")) == testing::slurp(dir.file("b/corpora.csv")));

    testing::MockServer bad;
    bad.post("/embed", [](const nlohmann::json&, httplib::Response& res) { res.status = 503; });
    CHECK(testing::run_cli({"--out-dir", dir.file("c"), "analyze", corpus, "--embed-endpoint", bad.url("/embed")}) ==
          3);
}

TEST_CASE("CLI groups two files by condition") {
    testing::TempDir dir;
    write_jsonl(dir.file("coop.jsonl"), {"m1__m2__cooperative__0", "m1__m2__cooperative__1"}, "cooperative");
    write_jsonl(dir.file("comp.jsonl"), {"m1__m2__competitive__0", "m1__m2__competitive__1"}, "competitive");
    testing::MockServer server;
    testing::serve_embeddings(server);
    const auto out = dir.file("out");
    REQUIRE(testing::run_cli({"--out-dir", out, "analyze", dir.file("coop.jsonl"), dir.file("comp.jsonl"),
                              "--embed-endpoint", server.url("/embed")}) == 0);
    const auto corpora = csv::read_file(out + "/corpora.csv");
    REQUIRE(corpora.rows.size() == 2);
    CHECK(corpora.rows[0][corpora.column("condition")] == "competitive");
    CHECK(corpora.rows[1][corpora.column("condition")] == "cooperative");
    CHECK(fs::exists(out + "/summary.csv"));

    REQUIRE(testing::run_cli({"--out-dir", out, "compare", out + "/corpora.csv"}) == 0);
    CHECK(csv::read_file(out + "/compare.csv").rows.size() == 3);
}

TEST_CASE("CLI fit and behavior") {
    testing::TempDir dir;
    const auto corpus = kFixtures + "/corpus12.jsonl";
    REQUIRE(testing::run_cli({"--out-dir", dir.path().string(), "fit", corpus, "--rank-dump", "--tfidf", "5",
                              "--min-count", "1"}) == 0);
    const auto fit = csv::read_file(dir.file("fit.csv"));
    CHECK(fit.rows.size() == 6);
    CHECK(fs::exists(dir.file("alpha-7b__beta-8b__neutral.rank_frequency.csv")));
    const auto tfidf = csv::read_file(dir.file("alpha-7b__beta-8b__neutral.tfidf.csv"));
    CHECK(tfidf.header.size() >= 2);
    CHECK(fs::exists(dir.file("fit.manifest.json")));

    REQUIRE(testing::run_cli({"--out-dir", dir.path().string(), "behavior", corpus}) == 0);
    const auto behavior = csv::read_file(dir.file("behavior.csv"));
    CHECK(behavior.rows.size() == 12);
    for (const auto& row : behavior.rows) CHECK(row[behavior.column("toxicity")].empty());
    CHECK(testing::run_cli({"behavior", corpus, "--lexicon-dir", dir.file("nope")}) == 1);
}
