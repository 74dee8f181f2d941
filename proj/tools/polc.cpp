// polc — compiles privacy-policy text into truth tables over a practice
// taxonomy and runs compliance, diff, comparison, and benchmark analyses on
// them. Every subcommand exits 0 on success, 1 when a compliance check does
// not hold, and 2 on any error; machine output carries a format_version.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polc/analyses.hpp"
#include "polc/bench.hpp"
#include "polc/compiler.hpp"
#include "polc/config.hpp"
#include "polc/corpus.hpp"
#include "polc/logic.hpp"
#include "polc/taxonomy.hpp"
#include "polc/truth_table.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitNonCompliant = 1;
constexpr int kExitError = 2;

std::string fmt3(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3f", value);
    return buffer;
}

std::string join_ints(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(values[i]);
    }
    return out.empty() ? "-" : out;
}

polc::SourceFormat format_for(const fs::path& path, const std::string& forced) {
    if (forced == "plain") return polc::SourceFormat::Plain;
    if (forced == "html") return polc::SourceFormat::Html;
    const std::string ext = path.extension().string();
    return (ext == ".html" || ext == ".htm") ? polc::SourceFormat::Html
                                             : polc::SourceFormat::Plain;
}

std::vector<polc::AtomicFormula> atomics_from_table(const polc::TruthTable& table,
                                                    const polc::Taxonomy& taxonomy) {
    std::vector<polc::AtomicFormula> atomics;
    atomics.reserve(table.entries.size());
    for (const auto& [id, entry] : table.entries) {
        polc::AtomicFormula atomic = polc::parse_atomic_id(id);
        polc::validate_atomic(taxonomy, atomic);
        atomics.push_back(std::move(atomic));
    }
    return atomics;
}

// ---------------------------------------------------------------------------
// compile
// ---------------------------------------------------------------------------

struct CompileArgs {
    std::vector<std::string> policies;
    std::string taxonomy;
    std::string backend;
    std::string out_dir;
    std::string cache_dir;
    std::string format = "auto";
    std::optional<int> cap;
    int k = 10;
    int max_tokens = polc::kDefaultSegmentTokens;
    std::optional<int> workers;
    bool llm_translation = false;
    std::string fewshot_file;
    bool json = false;
};

int run_compile(const CompileArgs& args) {
    const polc::Taxonomy taxonomy = polc::Taxonomy::load_file(args.taxonomy);
    const std::vector<polc::AtomicFormula> atomics = polc::generate_atomics(taxonomy, args.cap);
    polc::BackendSetup setup = polc::load_backend_setup(args.backend);

    polc::CompileOptions options;
    options.k = args.k;
    options.max_tokens = args.max_tokens;
    options.max_in_flight = args.workers.value_or(setup.max_in_flight);
    options.use_llm_translation = args.llm_translation;
    if (!args.fewshot_file.empty()) {
        options.few_shot = polc::load_fewshot_pairs(args.fewshot_file);
    }

    polc::VerdictCache verdict_cache;
    polc::TranslationCache translation_cache;
    fs::path verdict_cache_path;
    fs::path translation_cache_path;
    if (!args.cache_dir.empty()) {
        fs::create_directories(args.cache_dir);
        verdict_cache_path = fs::path(args.cache_dir) / "verdicts.json";
        translation_cache_path = fs::path(args.cache_dir) / "translations.json";
        if (fs::exists(verdict_cache_path)) {
            verdict_cache = polc::VerdictCache::load_file(verdict_cache_path);
        }
        if (fs::exists(translation_cache_path)) {
            translation_cache = polc::TranslationCache::load_file(translation_cache_path);
        }
    }

    std::vector<polc::PolicyDocument> documents;
    std::vector<std::string> ingest_errors(args.policies.size());
    for (std::size_t i = 0; i < args.policies.size(); ++i) {
        const fs::path path(args.policies[i]);
        const std::string policy_id = path.stem().string();
        try {
            documents.push_back(polc::ingest(polc::read_file(path), format_for(path, args.format),
                                             policy_id, path.filename().string()));
        } catch (const polc::Error& e) {
            ingest_errors[i] = e.what();
            polc::PolicyDocument placeholder;  // empty text -> reported, not compiled
            placeholder.policy_id = policy_id;
            documents.push_back(std::move(placeholder));
        }
    }

    std::vector<polc::CompileResult> results =
        polc::compile_batch(documents, atomics, taxonomy, *setup.embedder, *setup.chat, options,
                            &verdict_cache, args.llm_translation ? &translation_cache : nullptr);
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!ingest_errors[i].empty()) results[i].report.error = ingest_errors[i];
    }

    fs::create_directories(args.out_dir);
    if (!args.cache_dir.empty()) {
        verdict_cache.save_file(verdict_cache_path);
        if (args.llm_translation) translation_cache.save_file(translation_cache_path);
    }

    bool all_ok = true;
    polc::Json summary;
    summary["format_version"] = 1;
    polc::Json rows = polc::Json::array();
    for (const polc::CompileResult& result : results) {
        const polc::CompileReport& report = result.report;
        all_ok = all_ok && report.ok();
        const std::string table_name = report.policy_id + ".table.json";
        const std::string report_name = report.policy_id + ".report.json";
        if (report.error.empty()) {
            polc::save_truth_table(result.table, fs::path(args.out_dir) / table_name);
        }
        polc::write_file(fs::path(args.out_dir) / report_name,
                         polc::to_json(report).dump(2) + "\n");
        if (args.json) {
            rows.push_back(polc::to_json(report));
        } else if (!report.error.empty()) {
            std::cout << "failed " << report.policy_id << ": " << report.error << "\n";
        } else {
            std::cout << "compiled " << report.policy_id << ": " << result.table.entries.size()
                      << "/" << report.atomics << " atomics over " << report.segments
                      << " segments";
            if (!report.failed.empty()) {
                std::cout << " (" << report.failed.size() << " failed)";
            }
            std::cout << " -> " << table_name << "\n";
        }
    }
    if (args.json) {
        summary["results"] = std::move(rows);
        std::cout << summary.dump(2) << "\n";
    }
    return all_ok ? kExitOk : kExitError;
}

// ---------------------------------------------------------------------------
// atomics
// ---------------------------------------------------------------------------

int run_atomics(const std::string& taxonomy_path, std::optional<int> cap, bool json) {
    const polc::Taxonomy taxonomy = polc::Taxonomy::load_file(taxonomy_path);
    const std::vector<polc::AtomicFormula> atomics = polc::generate_atomics(taxonomy, cap);
    if (json) {
        polc::Json doc;
        doc["format_version"] = 1;
        doc["taxonomy_fingerprint"] = taxonomy.fingerprint();
        doc["count"] = atomics.size();
        polc::Json ids = polc::Json::array();
        for (const polc::AtomicFormula& atomic : atomics) ids.push_back(atomic.id);
        doc["ids"] = std::move(ids);
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const polc::AtomicFormula& atomic : atomics) std::cout << atomic.id << "\n";
        std::cout << "count: " << atomics.size() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// comply
// ---------------------------------------------------------------------------

int run_comply(const std::string& rules_path, const std::string& table_path,
               const std::string& taxonomy_path, bool json) {
    const polc::Taxonomy taxonomy = polc::Taxonomy::load_file(taxonomy_path);
    const polc::RuleSet rules = polc::RuleSet::load_file(rules_path);
    const polc::TruthTable table = polc::load_truth_table(table_path);
    const std::vector<polc::AtomicFormula> atomics = atomics_from_table(table, taxonomy);
    const polc::ComplianceReport report = polc::comply(rules, taxonomy, atomics, table);

    if (json) {
        std::cout << polc::to_json(report).dump(2) << "\n";
    } else {
        std::cout << "policy: " << report.policy_id << "\n";
        std::size_t name_width = 4;
        std::size_t regulation_width = 10;
        for (const polc::ComplianceReportRow& row : report.rows) {
            name_width = std::max(name_width, row.name.size());
            regulation_width = std::max(regulation_width, row.regulation.size());
        }
        auto pad = [](const std::string& text, std::size_t width) {
            return text + std::string(width - text.size(), ' ');
        };
        std::cout << pad("rule", name_width) << "  " << pad("regulation", regulation_width)
                  << "  satisfied  evidence\n";
        for (const polc::ComplianceReportRow& row : report.rows) {
            std::cout << pad(row.name, name_width) << "  " << pad(row.regulation, regulation_width)
                      << "  " << (row.satisfied ? "yes" : "no ") << "        "
                      << join_ints(row.evidence) << "\n";
        }
        std::cout << "compliant: " << (report.compliant ? "yes" : "no") << "\n";
    }
    return report.compliant ? kExitOk : kExitNonCompliant;
}

// ---------------------------------------------------------------------------
// diff
// ---------------------------------------------------------------------------

int run_diff(const std::string& old_path, const std::string& new_path, const std::string& csv_path,
             bool json) {
    const polc::TruthTable old_table = polc::load_truth_table(old_path);
    const polc::TruthTable new_table = polc::load_truth_table(new_path);
    const polc::DiffReport report = polc::diff_over_time(old_table, new_table);
    if (!csv_path.empty()) {
        polc::write_file(csv_path, polc::diff_to_csv(report));
    }
    if (json) {
        std::cout << polc::to_json(report, old_table.policy_id, new_table.policy_id).dump(2)
                  << "\n";
    } else {
        std::cout << "old: " << old_table.policy_id << "  new: " << new_table.policy_id << "\n";
        std::cout << "total changed: " << report.changed.size() << "\n";
        for (const auto& [category, count] : report.per_category_counts) {
            std::cout << category << ": " << count << "\n";
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

int run_compare(const std::vector<std::string>& table_paths, const std::string& taxonomy_path,
                const std::string& category, const std::string& row_attribute,
                const std::string& col_attribute, bool json) {
    const polc::Taxonomy taxonomy = polc::Taxonomy::load_file(taxonomy_path);
    std::map<std::string, polc::TruthTable> tables;
    for (const std::string& path : table_paths) {
        polc::TruthTable table = polc::load_truth_table(path);
        const std::string policy_id = table.policy_id;
        if (!tables.emplace(policy_id, std::move(table)).second) {
            throw polc::Error("duplicate policy id \"" + policy_id + "\" among the tables");
        }
    }
    const polc::ComparisonMatrix matrix =
        polc::compare_tables(tables, taxonomy, category, row_attribute, col_attribute);
    if (json) {
        std::cout << polc::to_json(matrix).dump(2) << "\n";
    } else {
        std::cout << polc::render_matrix_text(matrix);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string cases;
    std::string annotations;
    std::string pairs;
    std::string policies_dir;
    std::string backend;
    int k = 10;
    int max_tokens = polc::kDefaultSegmentTokens;
    std::optional<int> sample;
    std::uint64_t seed = 0;
    std::string format = "auto";
    bool json = false;
};

int run_bench(const BenchArgs& args) {
    const std::vector<polc::BenchCase> cases = polc::load_cases(args.cases);
    const std::vector<polc::Annotation> annotations = polc::load_annotations(args.annotations);
    const std::vector<polc::ContrastPair> pairs = polc::load_pairs(args.pairs);
    polc::EvalSetOptions set_options;
    set_options.sample_positives = args.sample;
    set_options.seed = args.seed;
    const polc::EvalSet eval_set = polc::build_eval_set(cases, annotations, pairs, set_options);

    polc::BackendSetup setup = polc::load_backend_setup(args.backend);

    // Per-policy corpus state, built lazily and shared across instances.
    struct PolicyState {
        std::vector<polc::Segment> segments;
        polc::VectorIndex index;
    };
    std::map<std::string, PolicyState> states;
    auto state_for = [&](const std::string& policy_id) -> PolicyState& {
        auto it = states.find(policy_id);
        if (it != states.end()) return it->second;
        fs::path path;
        for (const char* ext : {".txt", ".html", ".htm", ".md"}) {
            const fs::path candidate = fs::path(args.policies_dir) / (policy_id + ext);
            if (fs::exists(candidate)) {
                path = candidate;
                break;
            }
        }
        if (path.empty()) {
            throw polc::Error("no policy file for \"" + policy_id + "\" under " +
                              args.policies_dir);
        }
        const polc::PolicyDocument document = polc::ingest(
            polc::read_file(path), format_for(path, args.format), policy_id, path.string());
        PolicyState state;
        state.segments = polc::segment_document(document, args.max_tokens);
        state.index = polc::build_index(state.segments, *setup.embedder);
        return states.emplace(policy_id, std::move(state)).first->second;
    };

    const polc::Pipeline pipeline = [&](const std::string& policy_id,
                                        const std::string& statement) {
        PolicyState& state = state_for(policy_id);
        const std::vector<polc::ScoredSegment> ranked =
            polc::retrieve(state.index, statement, args.k, *setup.embedder);
        std::vector<int> hits;
        for (const polc::ScoredSegment& hit : ranked) hits.push_back(hit.segment);
        polc::PipelineResult outcome;
        outcome.context = polc::expand_neighbors(hits, static_cast<int>(state.segments.size()));
        polc::EntailmentQuery query;
        query.hypothesis = statement;
        for (int segment : outcome.context) {
            query.context.emplace_back(segment,
                                       state.segments[static_cast<std::size_t>(segment)].text);
        }
        outcome.verdict = polc::entail(*setup.chat, query);
        return outcome;
    };

    const polc::EvalRun run = polc::run_eval(eval_set.instances, pipeline);
    std::map<std::string, std::vector<polc::Segment>> segments_by_policy;
    for (const auto& [policy_id, state] : states) segments_by_policy[policy_id] = state.segments;
    const polc::EvidenceRecallReport recall =
        polc::evidence_recall(eval_set.instances, run.outcomes, segments_by_policy);

    int positives = 0;
    for (const polc::EvalInstance& instance : eval_set.instances) {
        if (instance.label) ++positives;
    }
    if (args.json) {
        polc::Json doc;
        doc["format_version"] = 1;
        doc["instances"] = eval_set.instances.size();
        doc["positives"] = positives;
        doc["negatives"] = eval_set.instances.size() - static_cast<std::size_t>(positives);
        doc["skipped_contradictions"] = eval_set.skipped_contradictions;
        doc["metrics"] = polc::to_json(run.metrics);
        doc["evidence_recall"] = polc::to_json(recall);
        std::cout << doc.dump(2) << "\n";
    } else {
        const polc::Metrics& m = run.metrics;
        std::cout << "instances: " << eval_set.instances.size() << " (" << positives
                  << " positive, " << eval_set.instances.size() - static_cast<std::size_t>(positives)
                  << " negative)\n";
        std::cout << "tp " << m.tp << "  fp " << m.fp << "  fn " << m.false_negatives << "  tn "
                  << m.tn << "  unparseable " << m.unparseable << "\n";
        std::cout << "precision " << (m.precision ? fmt3(*m.precision) : "n/a") << "  recall "
                  << (m.recall ? fmt3(*m.recall) : "n/a") << "  f1 "
                  << (m.f1 ? fmt3(*m.f1) : "n/a") << "\n";
        std::cout << "evidence recall: " << (recall.fraction ? fmt3(*recall.fraction) : "n/a")
                  << " (" << recall.hits << "/" << recall.eligible << " eligible, "
                  << recall.unlocatable << " unlocatable)\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"privacy-policy logic compiler and analysis toolkit"};
    app.require_subcommand(1);

    CompileArgs compile_args;
    CLI::App* compile = app.add_subcommand(
        "compile", "compile policy documents into truth tables over a taxonomy");
    compile->add_option("policies", compile_args.policies, "policy text/HTML files")
        ->required()
        ->check(CLI::ExistingFile);
    compile->add_option("--taxonomy", compile_args.taxonomy, "taxonomy JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    compile->add_option("--backend", compile_args.backend, "backend config JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    compile->add_option("--out", compile_args.out_dir, "output directory")->required();
    compile->add_option("--cap", compile_args.cap, "attribute cap per atomic formula");
    compile->add_option("--k", compile_args.k, "retrieval depth per atomic (default 10)");
    compile->add_option("--max-tokens", compile_args.max_tokens,
                        "segment size in tokens (default 300)");
    compile->add_option("--workers", compile_args.workers, "max in-flight policies");
    compile->add_option("--cache", compile_args.cache_dir,
                        "cache directory for verdicts and translations");
    compile->add_option("--format", compile_args.format, "input format: auto|plain|html")
        ->check(CLI::IsMember({"auto", "plain", "html"}));
    compile->add_flag("--llm-translation", compile_args.llm_translation,
                      "translate atomics with the chat backend instead of the template");
    compile->add_option("--fewshot", compile_args.fewshot_file,
                        "few-shot pairs JSON for LLM translation");
    compile->add_flag("--json", compile_args.json, "machine-readable summary on stdout");

    std::string atomics_taxonomy;
    std::optional<int> atomics_cap;
    bool atomics_json = false;
    CLI::App* atomics = app.add_subcommand("atomics", "list the atomic formulae of a taxonomy");
    atomics->add_option("--taxonomy", atomics_taxonomy, "taxonomy JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    atomics->add_option("--cap", atomics_cap, "attribute cap per atomic formula");
    atomics->add_flag("--json", atomics_json, "machine-readable output");

    std::string comply_rules, comply_table, comply_taxonomy;
    bool comply_json = false;
    CLI::App* comply = app.add_subcommand("comply", "evaluate compliance rules on a truth table");
    comply->add_option("--rules", comply_rules, "rule set JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    comply->add_option("--table", comply_table, "truth table JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    comply->add_option("--taxonomy", comply_taxonomy, "taxonomy JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    comply->add_flag("--json", comply_json, "machine-readable output");

    std::string diff_old, diff_new, diff_csv;
    bool diff_json = false;
    CLI::App* diff = app.add_subcommand("diff", "diff two truth tables of the same atomic set");
    diff->add_option("--old", diff_old, "older truth table JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    diff->add_option("--new", diff_new, "newer truth table JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    diff->add_option("--csv", diff_csv, "write per-category counts as CSV");
    diff->add_flag("--json", diff_json, "machine-readable output");

    std::vector<std::string> compare_tables;
    std::string compare_taxonomy, compare_category, compare_row, compare_col;
    bool compare_json = false;
    CLI::App* compare =
        app.add_subcommand("compare", "cross-policy matrix over two attributes of a category");
    compare->add_option("--tables", compare_tables, "truth table JSON files")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("--taxonomy", compare_taxonomy, "taxonomy JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    compare->add_option("--category", compare_category, "category name")->required();
    compare->add_option("--row", compare_row, "row attribute")->required();
    compare->add_option("--col", compare_col, "column attribute")->required();
    compare->add_flag("--json", compare_json, "machine-readable output");

    BenchArgs bench_args;
    CLI::App* bench =
        app.add_subcommand("bench", "evaluate the entailment pipeline on an annotated benchmark");
    bench->add_option("--cases", bench_args.cases, "cases JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    bench->add_option("--annotations", bench_args.annotations, "annotations JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    bench->add_option("--pairs", bench_args.pairs, "contrast pairs JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    bench->add_option("--policies", bench_args.policies_dir, "directory of policy files")
        ->required()
        ->check(CLI::ExistingDirectory);
    bench->add_option("--backend", bench_args.backend, "backend config JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    bench->add_option("--k", bench_args.k, "retrieval depth (default 10)");
    bench->add_option("--max-tokens", bench_args.max_tokens,
                      "segment size in tokens (default 300)");
    bench->add_option("--sample", bench_args.sample, "down-sample positives to this many");
    bench->add_option("--seed", bench_args.seed, "sampling seed");
    bench->add_option("--format", bench_args.format, "input format: auto|plain|html")
        ->check(CLI::IsMember({"auto", "plain", "html"}));
    bench->add_flag("--json", bench_args.json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (compile->parsed()) return run_compile(compile_args);
        if (atomics->parsed()) return run_atomics(atomics_taxonomy, atomics_cap, atomics_json);
        if (comply->parsed()) {
            return run_comply(comply_rules, comply_table, comply_taxonomy, comply_json);
        }
        if (diff->parsed()) return run_diff(diff_old, diff_new, diff_csv, diff_json);
        if (compare->parsed()) {
            return run_compare(compare_tables, compare_taxonomy, compare_category, compare_row,
                               compare_col, compare_json);
        }
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    std::cerr << "error: no subcommand\n";
    return kExitError;
}
