// dialogcore: score multi-agent dialog corpora (CORE, Zipf/Heaps fits,
// behavioral metrics, condition comparisons) and generate corpora from
// chat-completion endpoints.
//
// Exit codes: 0 success, 1 validation error, 2 partial generation,
// 3 external-service failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dialogcore/error.hpp"
#include "dialogcore/numfmt.hpp"
#include "dialogcore/report.hpp"
#include "dialogcore/runner.hpp"

namespace {

using namespace dialogcore;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kValidation = 1, kPartial = 2, kService = 3 };

struct GlobalFlags {
    std::uint64_t seed = 42;
    std::size_t ngram = 3;
    std::size_t kmax = 10;
    int threads = 1;
    std::string out_dir = ".";
};

struct AnalyzeFlags {
    std::vector<std::string> inputs;
    std::vector<std::string> embeddings;
    std::string embed_endpoint;
    std::string embed_model;
    std::size_t batch_size = 32;
    int max_inflight = 4;
    std::optional<std::uint64_t> cluster_seed;
    std::optional<double> alpha;
    std::optional<double> beta;
    double fallback_exponent = 1.0;
    std::string repetition_mode = "occurrences";
    std::size_t min_count = 2;
    std::optional<std::size_t> max_rank;
    std::size_t stride = 50;
    std::string group_by = "pair-condition";
};

struct FitFlags {
    std::vector<std::string> inputs;
    std::size_t min_count = 2;
    std::optional<std::size_t> max_rank;
    std::size_t stride = 50;
    bool rank_dump = false;
    std::optional<std::size_t> tfidf;
    std::string group_by = "pair-condition";
};

struct BehaviorFlags {
    std::vector<std::string> inputs;
    std::string lexicon_dir;
    std::string toxicity_endpoint;
};

struct GenerateFlags {
    std::string endpoint_a, endpoint_b, model_a, model_b, condition, out;
    std::size_t dialogs = 30, turns = 10;
    double temperature = 0.7, top_p = 0.9;
    int max_tokens = 128;
    int max_inflight = 4;
    bool concat_prompt = false;
    std::optional<std::int64_t> request_seed;
};

std::map<std::string, std::string> core_config_snapshot(const CoreConfig& c) {
    return {{"ngram_n", std::to_string(c.ngram_n)},
            {"k_max", std::to_string(c.k_max)},
            {"alpha", c.alpha_source == ExponentSource::explicit_value ? format_number(c.alpha) : "fit_from_corpus"},
            {"beta", c.beta_source == ExponentSource::explicit_value ? format_number(c.beta) : "fit_from_corpus"},
            {"fallback_exponent", format_number(c.fallback_exponent)},
            {"repetition_mode", c.repetition_mode == RepetitionMode::distinct_types ? "distinct_types" : "occurrences"},
            {"zipf_min_count", std::to_string(c.zipf_filter.min_count)},
            {"zipf_max_rank", c.zipf_filter.max_rank ? std::to_string(*c.zipf_filter.max_rank) : "unbounded"},
            {"heaps_stride", std::to_string(c.heaps_stride)}};
}

int run(int argc, char** argv) {
    CLI::App app{"Conversational robustness analytics for multi-agent dialog corpora"};
    app.require_subcommand(1);
    app.set_version_flag("--version", report::tool_version());

    GlobalFlags global;
    app.add_option("--seed", global.seed, "Seed for clustering (and generation requests when set)");
    auto* seed_opt = app.get_option("--seed");
    app.add_option("--ngram", global.ngram, "N-gram order for repetition")->check(CLI::PositiveNumber);
    app.add_option("--kmax", global.kmax, "Maximum number of modes (>= 2)");
    app.add_option("--threads", global.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", global.out_dir, "Directory for reports");

    AnalyzeFlags af;
    auto* analyze = app.add_subcommand("analyze", "Compute CORE per corpus and per dialog");
    analyze->add_option("inputs", af.inputs, "Dialog JSONL files")->required()->check(CLI::ExistingFile);
    analyze->add_option("--embeddings", af.embeddings, "Embedding JSONL files")->check(CLI::ExistingFile);
    analyze->add_option("--embed-endpoint", af.embed_endpoint, "Embedding service URL (default $CORE_EMBED_ENDPOINT)");
    analyze->add_option("--embed-model", af.embed_model, "Model name sent to the embedding service");
    analyze->add_option("--batch-size", af.batch_size, "Texts per embedding request")->check(CLI::PositiveNumber);
    analyze->add_option("--max-inflight", af.max_inflight, "Concurrent embedding requests")->check(CLI::PositiveNumber);
    analyze->add_option("--cluster-seed", af.cluster_seed, "k-means seed (overrides --seed)");
    analyze->add_option("--alpha", af.alpha, "Use this repetition exponent instead of the fitted Zipf exponent");
    analyze->add_option("--beta", af.beta, "Use this stagnation exponent instead of the fitted Heaps exponent");
    analyze->add_option("--fallback-exponent", af.fallback_exponent, "Exponent used when a fit fails");
    analyze->add_option("--repetition-mode", af.repetition_mode, "occurrences | distinct-types")
        ->check(CLI::IsMember({"occurrences", "distinct-types"}));
    analyze->add_option("--min-count", af.min_count, "Zipf fit: minimum token count")->check(CLI::PositiveNumber);
    analyze->add_option("--max-rank", af.max_rank, "Zipf fit: maximum rank");
    analyze->add_option("--stride", af.stride, "Heaps fit: tokens between curve points")->check(CLI::PositiveNumber);
    analyze->add_option("--group-by", af.group_by, "pair-condition | file | all")
        ->check(CLI::IsMember({"pair-condition", "file", "all"}));

    FitFlags ff;
    auto* fit = app.add_subcommand("fit", "Fit Zipf and Heaps exponents");
    fit->add_option("inputs", ff.inputs, "Dialog JSONL files")->required()->check(CLI::ExistingFile);
    fit->add_option("--min-count", ff.min_count, "Zipf fit: minimum token count")->check(CLI::PositiveNumber);
    fit->add_option("--max-rank", ff.max_rank, "Zipf fit: maximum rank");
    fit->add_option("--stride", ff.stride, "Heaps fit: tokens between curve points")->check(CLI::PositiveNumber);
    fit->add_flag("--rank-dump", ff.rank_dump, "Write <corpus>.rank_frequency.csv");
    fit->add_option("--tfidf", ff.tfidf, "Write <corpus>.tfidf.csv with this many features")
        ->check(CLI::PositiveNumber);
    fit->add_option("--group-by", ff.group_by, "pair-condition | file | all")
        ->check(CLI::IsMember({"pair-condition", "file", "all"}));

    BehaviorFlags bf;
    auto* behavior = app.add_subcommand("behavior", "Per-dialog behavioral metrics");
    behavior->add_option("inputs", bf.inputs, "Dialog JSONL files")->required()->check(CLI::ExistingFile);
    behavior->add_option("--lexicon-dir", bf.lexicon_dir, "Directory with replacement lexicon files")
        ->check(CLI::ExistingDirectory);
    behavior->add_option("--toxicity-endpoint", bf.toxicity_endpoint, "Toxicity classifier URL");

    std::vector<std::string> compare_inputs;
    auto* compare = app.add_subcommand("compare", "Mann-Whitney U tests between conditions");
    compare->add_option("inputs", compare_inputs, "corpora.csv files from analyze")->required()->check(CLI::ExistingFile);

    std::vector<std::string> report_inputs;
    auto* report_cmd = app.add_subcommand("report", "Mean CORE per dialog index (temporal trend)");
    report_cmd->add_option("inputs", report_inputs, "Per-dialog CSV files from analyze")
        ->required()
        ->check(CLI::ExistingFile);

    GenerateFlags gf;
    auto* generate = app.add_subcommand("generate", "Generate dialogs from two chat-completion endpoints");
    generate->add_option("--endpoint-a", gf.endpoint_a, "Base URL of agent A's server")->required();
    generate->add_option("--endpoint-b", gf.endpoint_b, "Base URL of agent B's server")->required();
    generate->add_option("--model-a", gf.model_a, "Agent A model name")->required();
    generate->add_option("--model-b", gf.model_b, "Agent B model name")->required();
    generate->add_option("--condition", gf.condition, "cooperative | competitive | neutral")
        ->required()
        ->check(CLI::IsMember({"cooperative", "competitive", "neutral"}));
    generate->add_option("--dialogs", gf.dialogs, "Dialogs to generate")->check(CLI::PositiveNumber);
    generate->add_option("--turns", gf.turns, "Turns per dialog")->check(CLI::PositiveNumber);
    generate->add_option("--temperature", gf.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
    generate->add_option("--top-p", gf.top_p, "Nucleus sampling mass")->check(CLI::Range(0.0, 1.0));
    generate->add_option("--max-tokens", gf.max_tokens, "Token limit per turn")->check(CLI::PositiveNumber);
    generate->add_option("--max-inflight", gf.max_inflight, "Dialogs generated concurrently")
        ->check(CLI::PositiveNumber);
    generate->add_flag("--concat-prompt", gf.concat_prompt, "Send the transcript as one user message");
    generate->add_option("--request-seed", gf.request_seed, "Seed forwarded to the endpoints");
    generate->add_option("--out", gf.out, "Output JSONL (appended; resumes)")->required();

    for (auto* sub : {analyze, fit, behavior, compare, report_cmd, generate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    if (global.kmax < 2) {
        std::cerr << "error: --kmax must be >= 2\n";
        return kValidation;
    }

    report::RunManifest manifest;
    manifest.argv.assign(argv, argv + argc);
    manifest.started_at = report::utc_timestamp();
    manifest.seeds["seed"] = std::to_string(global.seed);
    std::string manifest_dir = global.out_dir;
    int status = kOk;

    if (analyze->parsed()) {
        report::AnalyzeOptions opts;
        opts.inputs = af.inputs;
        opts.embedding_files = af.embeddings;
        if (!af.embed_endpoint.empty()) {
            opts.embed_endpoint = af.embed_endpoint;
        } else if (const char* env = std::getenv("CORE_EMBED_ENDPOINT"); env && *env && af.embeddings.empty()) {
            opts.embed_endpoint = env;
        }
        if (!af.embed_model.empty()) opts.embed_service.model = af.embed_model;
        opts.embed_service.batch_size = af.batch_size;
        opts.embed_service.max_inflight = af.max_inflight;
        auto& core = opts.core;
        core.ngram_n = global.ngram;
        core.k_max = global.kmax;
        core.threads = global.threads;
        core.cluster_seed = af.cluster_seed.value_or(global.seed);
        if (af.alpha) {
            core.alpha_source = ExponentSource::explicit_value;
            core.alpha = *af.alpha;
        }
        if (af.beta) {
            core.beta_source = ExponentSource::explicit_value;
            core.beta = *af.beta;
        }
        core.fallback_exponent = af.fallback_exponent;
        core.repetition_mode =
            af.repetition_mode == "distinct-types" ? RepetitionMode::distinct_types : RepetitionMode::occurrences;
        core.zipf_filter = {af.min_count, af.max_rank};
        core.heaps_stride = af.stride;
        core.validate();
        opts.group_by = report::parse_group_by(af.group_by);
        opts.out_dir = global.out_dir;

        const auto result = report::run_analyze(opts);
        manifest.command = "analyze";
        manifest.inputs = af.inputs;
        manifest.inputs.insert(manifest.inputs.end(), af.embeddings.begin(), af.embeddings.end());
        manifest.config = core_config_snapshot(core);
        manifest.config["group_by"] = af.group_by;
        if (opts.embed_endpoint) manifest.config["embed_endpoint"] = *opts.embed_endpoint;
        manifest.seeds["cluster_seed"] = std::to_string(core.cluster_seed);
        for (const auto& c : result.corpora)
            std::cout << c.corpus << "\tcore=" << format_number(c.core) << '\n';
    } else if (fit->parsed()) {
        report::FitOptions opts;
        opts.inputs = ff.inputs;
        opts.group_by = report::parse_group_by(ff.group_by);
        opts.zipf_filter = {ff.min_count, ff.max_rank};
        opts.heaps_stride = ff.stride;
        opts.rank_dump = ff.rank_dump;
        opts.tfidf_features = ff.tfidf;
        opts.out_dir = global.out_dir;
        report::run_fit(opts);
        manifest.command = "fit";
        manifest.inputs = ff.inputs;
        manifest.config = {{"zipf_min_count", std::to_string(ff.min_count)},
                           {"zipf_max_rank", ff.max_rank ? std::to_string(*ff.max_rank) : "unbounded"},
                           {"heaps_stride", std::to_string(ff.stride)},
                           {"group_by", ff.group_by}};
    } else if (behavior->parsed()) {
        report::BehaviorCommandOptions opts;
        opts.inputs = bf.inputs;
        if (!bf.lexicon_dir.empty()) opts.lexicon_dir = bf.lexicon_dir;
        if (!bf.toxicity_endpoint.empty()) opts.toxicity_endpoint = bf.toxicity_endpoint;
        opts.behavior.ngram_n = global.ngram;
        opts.behavior.threads = global.threads;
        opts.out_dir = global.out_dir;
        report::run_behavior(opts);
        manifest.command = "behavior";
        manifest.inputs = bf.inputs;
        manifest.config = {{"ngram_n", std::to_string(global.ngram)},
                           {"lexicon_dir", bf.lexicon_dir.empty() ? "builtin" : bf.lexicon_dir}};
        if (opts.toxicity_endpoint) manifest.config["toxicity_endpoint"] = *opts.toxicity_endpoint;
    } else if (compare->parsed()) {
        report::run_compare(compare_inputs, global.out_dir);
        manifest.command = "compare";
        manifest.inputs = compare_inputs;
    } else if (report_cmd->parsed()) {
        report::run_report_temporal(report_inputs, global.out_dir);
        manifest.command = "report";
        manifest.inputs = report_inputs;
    } else if (generate->parsed()) {
        GenerationConfig cfg;
        cfg.endpoint_a = gf.endpoint_a;
        cfg.endpoint_b = gf.endpoint_b;
        cfg.model_a = gf.model_a;
        cfg.model_b = gf.model_b;
        cfg.condition = parse_condition(gf.condition);
        cfg.dialogs = gf.dialogs;
        cfg.turns = gf.turns;
        cfg.sampling = {gf.temperature, gf.top_p, gf.max_tokens, gf.request_seed};
        if (!cfg.sampling.seed && seed_opt->count() > 0) cfg.sampling.seed = static_cast<std::int64_t>(global.seed);
        cfg.max_inflight = gf.max_inflight;
        cfg.concat_prompt = gf.concat_prompt;
        const auto out_parent = fs::path(gf.out).parent_path();
        if (!out_parent.empty()) fs::create_directories(out_parent);

        const auto r = generate_dialogs(cfg, gf.out);
        std::cerr << "generated " << r.completed << " dialog(s), resumed " << r.resumed << ", failed " << r.failed
                  << ", empty responses " << r.empty_responses << '\n';
        for (const auto& id : r.failed_ids) std::cerr << "  failed: " << id << '\n';
        if (r.partial()) status = kPartial;
        manifest.command = "generate";
        manifest.inputs = {};
        manifest.config = {{"endpoint_a", gf.endpoint_a},   {"endpoint_b", gf.endpoint_b},
                           {"model_a", gf.model_a},         {"model_b", gf.model_b},
                           {"condition", gf.condition},     {"dialogs", std::to_string(gf.dialogs)},
                           {"turns", std::to_string(gf.turns)}, {"temperature", format_number(gf.temperature)},
                           {"top_p", format_number(gf.top_p)}, {"max_tokens", std::to_string(gf.max_tokens)},
                           {"out", gf.out}};
        if (cfg.sampling.seed) manifest.seeds["request_seed"] = std::to_string(*cfg.sampling.seed);
        manifest_dir = out_parent.empty() ? "." : out_parent.string();
    }

    manifest.finished_at = report::utc_timestamp();
    report::write_manifest(manifest, manifest_dir);
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const dialogcore::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const dialogcore::FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const dialogcore::ServiceError& e) {
        std::cerr << "service error: " << e.what() << '\n';
        return kService;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
}
