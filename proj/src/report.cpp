#include "dialogcore/report.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dialogcore/error.hpp"
#include "dialogcore/numfmt.hpp"
#include "dialogcore/runner.hpp"

#ifndef DIALOGCORE_VERSION
#define DIALOGCORE_VERSION "0.0.0"
#endif

namespace dialogcore::report {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// JSON numbers carry the same 6 significant digits as the CSV output.
ojson num(double value) { return std::stod(format_number(value)); }

ojson opt_num(const std::optional<double>& value) { return value ? num(*value) : ojson(nullptr); }

std::string opt_cell(const std::optional<double>& value) { return value ? format_number(*value) : std::string(); }

std::string safe_filename(const std::string& name) {
    std::string out;
    for (unsigned char c : name) out.push_back(std::isalnum(c) || c == '.' || c == '-' || c == '_' ? char(c) : '_');
    return out.empty() ? "corpus" : out;
}

std::ofstream open_output(const std::string& out_dir, const std::string& file, std::vector<std::string>& written) {
    fs::create_directories(out_dir);
    const auto path = (fs::path(out_dir) / file).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    written.push_back(path);
    return out;
}

ojson fit_json(const std::optional<FitResult>& fit) {
    if (!fit) return nullptr;
    ojson j;
    j["exponent"] = num(fit->exponent);
    j["log_prefactor"] = num(fit->log_prefactor);
    j["r_squared"] = num(fit->r_squared);
    j["stderr"] = num(fit->slope_stderr);
    j["points_used"] = fit->points_used;
    j["method"] = to_string(fit->method);
    return j;
}

ojson breakdown_json(const CoreBreakdown& b) {
    ojson j;
    j["core"] = num(b.core);
    j["entropy_term"] = num(b.entropy_term);
    j["repetition_ratio"] = num(b.repetition_ratio);
    j["repetition_term"] = num(b.repetition_term);
    j["raw_stagnation"] = num(b.raw_stagnation);
    j["stagnation_term"] = num(b.stagnation_term);
    j["alpha_used"] = num(b.alpha_used);
    j["beta_used"] = num(b.beta_used);
    j["flags"] = b.flags.names();
    return j;
}

ojson config_json(const CoreConfig& c) {
    ojson j;
    j["ngram_n"] = c.ngram_n;
    j["k_max"] = c.k_max;
    j["cluster_seed"] = c.cluster_seed;
    j["alpha_source"] = c.alpha_source == ExponentSource::explicit_value ? "explicit" : "fit_from_corpus";
    j["beta_source"] = c.beta_source == ExponentSource::explicit_value ? "explicit" : "fit_from_corpus";
    j["alpha"] = c.alpha_source == ExponentSource::explicit_value ? num(c.alpha) : ojson(nullptr);
    j["beta"] = c.beta_source == ExponentSource::explicit_value ? num(c.beta) : ojson(nullptr);
    j["fallback_exponent"] = num(c.fallback_exponent);
    j["repetition_mode"] = c.repetition_mode == RepetitionMode::distinct_types ? "distinct_types" : "occurrences";
    j["zipf_min_count"] = c.zipf_filter.min_count;
    j["zipf_max_rank"] = c.zipf_filter.max_rank ? ojson(*c.zipf_filter.max_rank) : ojson(nullptr);
    j["heaps_stride"] = c.heaps_stride;
    return j;
}

std::optional<double> parse_cell(const std::string& cell, const std::string& where) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(where + ": '" + cell + "' is not a number");
    }
}

}  // namespace

GroupBy parse_group_by(const std::string& text) {
    if (text == "pair-condition") return GroupBy::pair_condition;
    if (text == "file") return GroupBy::file;
    if (text == "all") return GroupBy::all;
    throw ValidationError("unknown grouping '" + text + "' (expected pair-condition, file or all)");
}

std::vector<NamedCorpus> load_grouped(const std::vector<std::string>& inputs, GroupBy group_by) {
    if (inputs.empty()) throw ValidationError("no input corpora given");
    std::map<std::string, std::vector<Dialog>> groups;
    std::map<std::string, std::string> id_source;
    std::set<std::string> stems;
    for (const auto& path : inputs) {
        const auto corpus = parse_corpus_file(path);
        std::string stem = fs::path(path).stem().string();
        for (int i = 2; stems.count(stem); ++i) stem = fs::path(path).stem().string() + "_" + std::to_string(i);
        stems.insert(stem);
        for (const auto& d : corpus.dialogs()) {
            if (auto [it, inserted] = id_source.emplace(d.id, path); !inserted)
                throw ValidationError("dialog id '" + d.id + "' appears in both '" + it->second + "' and '" + path + "'");
            std::string key;
            switch (group_by) {
                case GroupBy::pair_condition:
                    key = d.agent_a + "__" + d.agent_b + "__" + std::string(to_string(d.condition));
                    break;
                case GroupBy::file: key = stem; break;
                case GroupBy::all: key = "corpus"; break;
            }
            groups[key].push_back(d);
        }
    }
    std::vector<NamedCorpus> out;
    for (auto& [name, dialogs] : groups) out.push_back({name, Corpus(std::move(dialogs))});
    return out;
}

std::string corpus_condition(const Corpus& corpus) {
    std::set<Condition> seen;
    for (const auto& d : corpus.dialogs()) seen.insert(d.condition);
    if (seen.size() == 1) return std::string(to_string(*seen.begin()));
    return "mixed";
}

EmbeddingMatrix select_rows(const EmbeddingMatrix& matrix, const Corpus& part) {
    std::map<UtteranceKey, std::size_t> index;
    for (std::size_t i = 0; i < matrix.rows(); ++i) index.emplace(matrix.keys()[i], i);
    std::vector<UtteranceKey> keys;
    std::vector<double> values;
    keys.reserve(part.utterance_count());
    values.reserve(part.utterance_count() * matrix.dim());
    for (const auto& d : part.dialogs()) {
        for (const auto& u : d.utterances) {
            UtteranceKey key{d.id, u.turn_index};
            auto it = index.find(key);
            if (it == index.end())
                throw ValidationError("missing embedding for utterance (" + d.id + ", " + std::to_string(u.turn_index) +
                                      ")");
            auto row = matrix.row(it->second);
            values.insert(values.end(), row.begin(), row.end());
            keys.push_back(std::move(key));
        }
    }
    return EmbeddingMatrix(matrix.dim(), std::move(keys), std::move(values));
}

AnalyzeResult run_analyze(const AnalyzeOptions& options) {
    options.core.validate();
    const auto groups = load_grouped(options.inputs, options.group_by);

    std::vector<Dialog> all;
    for (const auto& g : groups) all.insert(all.end(), g.corpus.dialogs().begin(), g.corpus.dialogs().end());
    const Corpus merged(std::move(all));

    EmbeddingMatrix matrix;
    if (!options.embedding_files.empty()) {
        std::stringstream combined;
        for (const auto& path : options.embedding_files) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ValidationError("cannot open embeddings file '" + path + "'");
            combined << in.rdbuf() << '\n';
        }
        const auto source = options.embedding_files.size() == 1 ? options.embedding_files.front() : "<embeddings>";
        matrix = load_embeddings(combined, merged, source);
    } else if (options.embed_endpoint) {
        matrix = fetch_embeddings(*options.embed_endpoint, merged, options.embed_service);
    } else {
        throw ValidationError("no embeddings: pass --embeddings FILE or an embedding endpoint");
    }

    AnalyzeResult result;
    for (const auto& group : groups) {
        const auto sub = select_rows(matrix, group.corpus);
        const auto analysis = analyze_core(group.corpus, sub, options.core);
        const auto stats = rank_frequency(group.corpus);
        const auto condition = corpus_condition(group.corpus);
        const auto stem = safe_filename(group.name);

        CorpusSummary summary;
        summary.corpus = group.name;
        summary.condition = condition;
        if (analysis.exponents.zipf) summary.zipf_alpha = analysis.exponents.zipf->exponent;
        if (analysis.exponents.heaps) summary.heaps_beta = analysis.exponents.heaps->exponent;
        summary.core = analysis.corpus.core;
        summary.unique_tokens = stats.entries.size();
        summary.total_tokens = stats.total_tokens;
        summary.dialogs = group.corpus.size();
        result.corpora.push_back(summary);

        ojson j;
        j["corpus"] = group.name;
        j["condition"] = condition;
        j["config"] = config_json(options.core);
        ojson counts;
        counts["dialogs"] = group.corpus.size();
        counts["utterances"] = group.corpus.utterance_count();
        counts["total_tokens"] = stats.total_tokens;
        counts["unique_tokens"] = stats.entries.size();
        j["counts"] = counts;
        ojson fits;
        fits["zipf"] = fit_json(analysis.exponents.zipf);
        fits["heaps"] = fit_json(analysis.exponents.heaps);
        j["fits"] = fits;
        ojson modes;
        modes["k"] = analysis.assignment.k;
        modes["silhouette"] = num(analysis.assignment.silhouette);
        modes["distribution"] = ojson::array();
        for (double p : mode_distribution(analysis.assignment).probs) modes["distribution"].push_back(num(p));
        j["modes"] = modes;
        j["core_breakdown"] = breakdown_json(analysis.corpus);
        j["per_dialog"] = ojson::array();
        for (const auto& d : analysis.per_dialog) {
            ojson row;
            row["dialog_id"] = d.dialog_id;
            row["condition"] = to_string(d.condition);
            const auto breakdown = breakdown_json(d.breakdown);
            for (auto& [k, v] : breakdown.items()) row[k] = v;
            j["per_dialog"].push_back(std::move(row));
        }
        open_output(options.out_dir, stem + ".report.json", result.files_written) << j.dump(2) << '\n';

        auto csv_out = open_output(options.out_dir, stem + ".per_dialog.csv", result.files_written);
        csv::write_row(csv_out,
                       {"dialog_id", "condition", "core", "entropy_term", "repetition_term", "stagnation_term", "flags"});
        for (const auto& d : analysis.per_dialog) {
            const auto& b = d.breakdown;
            csv::write_row(csv_out, {d.dialog_id, std::string(to_string(d.condition)), format_number(b.core),
                                     format_number(b.entropy_term), format_number(b.repetition_term),
                                     format_number(b.stagnation_term), b.flags.to_string()});
        }
    }

    auto corpora_out = open_output(options.out_dir, "corpora.csv", result.files_written);
    csv::write_row(corpora_out,
                   {"corpus", "condition", "zipf_alpha", "heaps_beta", "core", "unique_tokens", "total_tokens", "dialogs"});
    for (const auto& c : result.corpora) {
        csv::write_row(corpora_out, {c.corpus, c.condition, opt_cell(c.zipf_alpha), opt_cell(c.heaps_beta),
                                     format_number(c.core), std::to_string(c.unique_tokens),
                                     std::to_string(c.total_tokens), std::to_string(c.dialogs)});
    }

    std::map<std::string, std::map<std::string, std::vector<double>>> by_metric;
    for (const auto& c : result.corpora) {
        by_metric["core"][c.condition].push_back(c.core);
        if (c.zipf_alpha) by_metric["zipf_alpha"][c.condition].push_back(*c.zipf_alpha);
        if (c.heaps_beta) by_metric["heaps_beta"][c.condition].push_back(*c.heaps_beta);
        by_metric["unique_tokens"][c.condition].push_back(static_cast<double>(c.unique_tokens));
    }
    auto summary_out = open_output(options.out_dir, "summary.csv", result.files_written);
    csv::write_row(summary_out, {"metric", "condition", "mean", "std_dev", "max", "min", "range", "n"});
    for (const char* metric : {"core", "zipf_alpha", "heaps_beta", "unique_tokens"}) {
        for (const auto& [condition, values] : by_metric[metric]) {
            const auto s = summarize(values);
            csv::write_row(summary_out, {metric, condition, format_number(s.mean), format_number(s.std_dev),
                                         format_number(s.max), format_number(s.min), format_number(s.range),
                                         std::to_string(s.count)});
        }
    }
    return result;
}

std::vector<std::string> run_fit(const FitOptions& options) {
    if (options.heaps_stride < 1) throw ValidationError("stride must be >= 1");
    const auto groups = load_grouped(options.inputs, options.group_by);
    std::vector<std::string> written;
    std::vector<csv::Row> rows;
    for (const auto& group : groups) {
        if (group.corpus.token_count() == 0) throw ValidationError("corpus '" + group.name + "' has no tokens");
        const auto stats = rank_frequency(group.corpus);
        std::optional<FitResult> zipf, heaps;
        try {
            zipf = fit_zipf(stats, options.zipf_filter);
        } catch (const FitError&) {
        }
        try {
            heaps = fit_heaps(vocab_growth(group.corpus, options.heaps_stride));
        } catch (const FitError&) {
        }
        auto cell = [](const std::optional<FitResult>& f, bool r2) {
            return f ? format_number(r2 ? f->r_squared : f->exponent) : std::string();
        };
        rows.push_back({group.name, cell(zipf, false), cell(zipf, true), cell(heaps, false), cell(heaps, true),
                        std::to_string(stats.entries.size()), std::to_string(stats.total_tokens)});

        const auto stem = safe_filename(group.name);
        if (options.rank_dump) {
            auto out = open_output(options.out_dir, stem + ".rank_frequency.csv", written);
            csv::write_row(out, {"rank", "count"});
            for (std::size_t i = 0; i < stats.entries.size(); ++i)
                csv::write_row(out, {std::to_string(i + 1), std::to_string(stats.entries[i].count)});
        }
        if (options.tfidf_features) {
            const auto m = tfidf_features(group.corpus, *options.tfidf_features);
            auto out = open_output(options.out_dir, stem + ".tfidf.csv", written);
            write_tfidf_csv(m, out);
            auto vocab = open_output(options.out_dir, stem + ".tfidf_vocab.csv", written);
            csv::write_row(vocab, {"feature", "token"});
            for (std::size_t c = 0; c < m.vocabulary.size(); ++c)
                csv::write_row(vocab, {"f" + std::to_string(c), m.vocabulary[c]});
        }
    }
    auto out = open_output(options.out_dir, "fit.csv", written);
    csv::write_row(out, {"corpus", "alpha", "alpha_r2", "beta", "beta_r2", "unique_tokens", "total_tokens"});
    for (const auto& row : rows) csv::write_row(out, row);
    return written;
}

std::vector<std::string> run_behavior(const BehaviorCommandOptions& options) {
    const auto groups = load_grouped(options.inputs, GroupBy::all);
    const auto lexicons = options.lexicon_dir ? BehaviorLexicons::from_directory(*options.lexicon_dir) : BehaviorLexicons{};
    std::optional<ToxicityClient> toxicity;
    if (options.toxicity_endpoint) toxicity.emplace(*options.toxicity_endpoint, options.retry);

    std::vector<std::string> written;
    auto out = open_output(options.out_dir, "behavior.csv", written);
    csv::write_row(out, {"dialog_id", "condition", "toxicity", "sentiment", "repetition_rate", "agreement_rate",
                         "disagreement_rate", "hedging_rate"});
    for (const auto& group : groups) {
        const auto profiles = behavior_profiles(group.corpus, lexicons, options.behavior, toxicity ? &*toxicity : nullptr);
        for (const auto& p : profiles) {
            csv::write_row(out, {p.dialog_id, std::string(to_string(p.condition)), opt_cell(p.toxicity),
                                 format_number(p.sentiment), format_number(p.repetition_rate),
                                 format_number(p.agreement_rate), format_number(p.disagreement_rate),
                                 format_number(p.hedging_rate)});
        }
    }
    return written;
}

std::vector<ComparisonRow> compare_conditions(const std::vector<csv::Table>& tables) {
    static const char* kMetrics[] = {"zipf_alpha", "heaps_beta", "core"};
    std::map<std::string, std::map<std::string, std::vector<double>>> samples;  // metric -> condition -> values
    std::set<std::string> conditions;
    for (const auto& table : tables) {
        const auto cond_col = table.column("condition");
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            conditions.insert(row[cond_col]);
            for (const char* metric : kMetrics) {
                const auto where = "row " + std::to_string(r + 1) + " column " + metric;
                if (auto v = parse_cell(row[table.column(metric)], where)) samples[metric][row[cond_col]].push_back(*v);
            }
        }
    }
    if (conditions.size() < 2) throw ValidationError("comparison needs at least two conditions");

    std::vector<ComparisonRow> out;
    const std::vector<std::string> ordered(conditions.begin(), conditions.end());
    for (const char* metric : kMetrics) {
        for (const auto& c : ordered)
            if (samples[metric][c].empty())
                throw ValidationError("condition '" + c + "' has no " + metric + " samples");
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            for (std::size_t j = i + 1; j < ordered.size(); ++j) {
                out.push_back({ordered[i] + " vs " + ordered[j], metric,
                               mann_whitney_u(samples[metric][ordered[i]], samples[metric][ordered[j]])});
            }
        }
    }
    return out;
}

std::vector<std::string> run_compare(const std::vector<std::string>& csv_paths, const std::string& out_dir) {
    if (csv_paths.empty()) throw ValidationError("no summary CSVs given");
    std::vector<csv::Table> tables;
    for (const auto& path : csv_paths) tables.push_back(csv::read_file(path));
    const auto rows = compare_conditions(tables);
    std::vector<std::string> written;
    auto out = open_output(out_dir, "compare.csv", written);
    csv::write_row(out, {"comparison", "metric", "u", "p_value", "method"});
    for (const auto& r : rows)
        csv::write_row(out, {r.comparison, r.metric, format_number(r.test.u), format_number(r.test.p_value),
                             std::string(to_string(r.test.method))});
    return written;
}

std::vector<TemporalRow> temporal_means(const std::vector<csv::Table>& tables) {
    struct Acc {
        double sum = 0;
        std::size_t n = 0;
    };
    std::map<std::tuple<std::string, std::string, std::size_t>, Acc> groups;
    for (const auto& table : tables) {
        const auto id_col = table.column("dialog_id");
        const auto core_col = table.column("core");
        std::optional<std::size_t> cond_col;
        if (std::find(table.header.begin(), table.header.end(), "condition") != table.header.end())
            cond_col = table.column("condition");
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const auto parts = parse_dialog_id(row[id_col]);
            const auto core = parse_cell(row[core_col], "row " + std::to_string(r + 1) + " column core");
            if (!core) throw ValidationError("row " + std::to_string(r + 1) + ": missing core value");
            const auto condition = cond_col ? row[*cond_col] : parts.condition;
            auto& acc = groups[{condition, parts.model_a, parts.index}];
            acc.sum += *core;
            ++acc.n;
        }
    }
    std::vector<TemporalRow> out;
    for (const auto& [key, acc] : groups)
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), acc.sum / static_cast<double>(acc.n)});
    return out;
}

std::vector<std::string> run_report_temporal(const std::vector<std::string>& csv_paths, const std::string& out_dir) {
    if (csv_paths.empty()) throw ValidationError("no per-dialog CSVs given");
    std::vector<csv::Table> tables;
    for (const auto& path : csv_paths) tables.push_back(csv::read_file(path));
    const auto rows = temporal_means(tables);
    std::vector<std::string> written;
    auto out = open_output(out_dir, "temporal.csv", written);
    csv::write_row(out, {"condition", "agent_a", "dialog_index", "mean_core"});
    for (const auto& r : rows)
        csv::write_row(out, {r.condition, r.agent_a, std::to_string(r.dialog_index), format_number(r.mean_core)});
    return written;
}

std::string tool_version() { return DIALOGCORE_VERSION; }

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string write_manifest(const RunManifest& manifest, const std::string& out_dir) {
    ojson j;
    j["command"] = manifest.command;
    j["argv"] = manifest.argv;
    j["inputs"] = manifest.inputs;
    j["config"] = manifest.config;
    j["seeds"] = manifest.seeds;
    j["tool_version"] = tool_version();
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    std::vector<std::string> written;
    open_output(out_dir, manifest.command + ".manifest.json", written) << j.dump(2) << '\n';
    return written.front();
}

}  // namespace dialogcore::report
