#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialogcore/behavior.hpp"
#include "dialogcore/corpus.hpp"
#include "dialogcore/csv.hpp"
#include "dialogcore/embedding.hpp"
#include "dialogcore/lawfit.hpp"
#include "dialogcore/metric.hpp"
#include "dialogcore/stats.hpp"

namespace dialogcore::report {

// How input dialogs are pooled into the corpora that get scored and fitted.
enum class GroupBy {
    pair_condition,  // one corpus per (agent_a, agent_b, condition)
    file,            // one corpus per input file
    all,             // everything in one corpus
};

GroupBy parse_group_by(const std::string& text);

struct NamedCorpus {
    std::string name;
    Corpus corpus;
};

// Reads every input, rejects dialog ids repeated across files, and regroups.
// Groups are returned sorted by name.
std::vector<NamedCorpus> load_grouped(const std::vector<std::string>& inputs, GroupBy group_by);

// "cooperative" etc. when every dialog shares a condition, "mixed" otherwise.
std::string corpus_condition(const Corpus& corpus);

// Rows of `matrix` (aligned to `parent`) restricted and reordered to `part`.
EmbeddingMatrix select_rows(const EmbeddingMatrix& matrix, const Corpus& part);

struct AnalyzeOptions {
    std::vector<std::string> inputs;
    std::vector<std::string> embedding_files;  // concatenated; must cover every utterance
    std::optional<std::string> embed_endpoint;
    EmbeddingServiceOptions embed_service;
    CoreConfig core;
    GroupBy group_by = GroupBy::pair_condition;
    std::string out_dir = ".";
};

struct CorpusSummary {
    std::string corpus;
    std::string condition;
    std::optional<double> zipf_alpha;
    std::optional<double> heaps_beta;
    double core = 0;
    std::size_t unique_tokens = 0;
    std::size_t total_tokens = 0;
    std::size_t dialogs = 0;
};

struct AnalyzeResult {
    std::vector<CorpusSummary> corpora;
    std::vector<std::string> files_written;
};

// Writes, under out_dir:
//   <corpus>.report.json     config, fits, modes, corpus breakdown, per-dialog breakdowns
//   <corpus>.per_dialog.csv  dialog_id,condition,core,entropy_term,repetition_term,stagnation_term,flags
//   corpora.csv              one row per corpus (input to `compare`)
//   summary.csv              per-condition mean/std/max/min/range of each metric
AnalyzeResult run_analyze(const AnalyzeOptions& options);

struct FitOptions {
    std::vector<std::string> inputs;
    GroupBy group_by = GroupBy::pair_condition;
    ZipfFilter zipf_filter;
    std::size_t heaps_stride = 50;
    bool rank_dump = false;
    std::optional<std::size_t> tfidf_features;
    std::string out_dir = ".";
};

// Writes fit.csv (corpus,alpha,alpha_r2,beta,beta_r2,unique_tokens,total_tokens),
// plus <corpus>.rank_frequency.csv and <corpus>.tfidf.csv when requested.
std::vector<std::string> run_fit(const FitOptions& options);

struct BehaviorCommandOptions {
    std::vector<std::string> inputs;
    std::optional<std::string> lexicon_dir;
    std::optional<std::string> toxicity_endpoint;
    http::RetryPolicy retry;
    BehaviorOptions behavior;
    std::string out_dir = ".";
};

// Writes behavior.csv: dialog_id,condition,toxicity,sentiment,repetition_rate,
// agreement_rate,disagreement_rate,hedging_rate. Toxicity is blank without a classifier.
std::vector<std::string> run_behavior(const BehaviorCommandOptions& options);

struct ComparisonRow {
    std::string comparison;  // "competitive vs cooperative"
    std::string metric;
    UTestResult test;
};

// Pairwise Mann-Whitney tests between conditions for zipf_alpha, heaps_beta and
// core. Conditions are ordered alphabetically. Blank cells are skipped; a
// condition left with no values for a metric is an error.
std::vector<ComparisonRow> compare_conditions(const std::vector<csv::Table>& tables);
// Reads the given corpora CSVs and writes compare.csv: comparison,metric,u,p_value,method.
std::vector<std::string> run_compare(const std::vector<std::string>& csv_paths, const std::string& out_dir);

struct TemporalRow {
    std::string condition;
    std::string agent_a;
    std::size_t dialog_index = 0;
    double mean_core = 0;
};

// Mean CORE per (condition, agent_a, dialog index), sorted by those keys. Each
// table needs dialog_id and core columns; the dialog id carries the index.
std::vector<TemporalRow> temporal_means(const std::vector<csv::Table>& tables);
// Reads per-dialog CSVs and writes temporal.csv: condition,agent_a,dialog_index,mean_core.
std::vector<std::string> run_report_temporal(const std::vector<std::string>& csv_paths, const std::string& out_dir);

struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<std::string> inputs;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> seeds;
    std::string started_at;
    std::string finished_at;
};

std::string tool_version();
std::string utc_timestamp();
// <out_dir>/<command>.manifest.json
std::string write_manifest(const RunManifest& manifest, const std::string& out_dir);

}  // namespace dialogcore::report
