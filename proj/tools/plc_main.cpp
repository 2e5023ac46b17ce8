// plc: forge poisoned documents, smuggle them past the ingestion censor,
// run attack campaigns against chat backends, and scan stores for poison.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plc/backends.hpp"
#include "plc/campaign.hpp"
#include "plc/censor.hpp"
#include "plc/detector.hpp"
#include "plc/docforge.hpp"
#include "plc/docio.hpp"
#include "plc/ragcore.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

class UsageError : public plc::Error {
public:
    using plc::Error::Error;
};

struct RunConfig {
    std::string catalog = "fixtures/catalog.txt";
    std::string lexicon = "fixtures/lexicon.txt";
    std::string prompt_template = "fixtures/template.txt";
    std::string store = "store.json";
    std::string out = "out";
    std::string format = "pdf";
    std::string mode = "indirect";
    std::string backends = "scripted-all";
    std::string report_format = "md";
    int rounds = 20;
    std::uint64_t seed = 0;
    int workers = 1;
    bool raw = false;
};

// Config file first, flags win: every subcommand option is only applied on
// top of the file when the user actually passed it.
void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw plc::ConfigError("cannot open config file: " + path);
    json parsed;
    try {
        in >> parsed;
    } catch (const json::exception& e) {
        throw plc::ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    auto fetch = [&](const char* key, auto& slot) {
        if (parsed.contains(key)) slot = parsed.at(key).get<std::decay_t<decltype(slot)>>();
    };
    fetch("catalog", config.catalog);
    fetch("lexicon", config.lexicon);
    fetch("template", config.prompt_template);
    fetch("store", config.store);
    fetch("out", config.out);
    fetch("format", config.format);
    fetch("mode", config.mode);
    fetch("backends", config.backends);
    fetch("report_format", config.report_format);
    fetch("rounds", config.rounds);
    fetch("seed", config.seed);
    fetch("workers", config.workers);
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) {
        throw plc::ValidationError(what + " not found: " + path);
    }
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw plc::IoError("cannot write " + path.string());
    out << content;
    if (!out) throw plc::IoError("short write: " + path.string());
}

plc::docio::DocumentFormat parse_doc_format(const std::string& name) {
    if (name == "txt") return plc::docio::DocumentFormat::PlainText;
    if (name == "pdf") return plc::docio::DocumentFormat::PortableDoc;
    throw UsageError("unknown --format '" + name + "' (expected txt or pdf)");
}

plc::campaign::ReportFormat parse_report_format(const std::string& name) {
    auto format = plc::campaign::report_format_from_name(name);
    if (!format) throw UsageError("unknown --report-format '" + name + "' (expected md or csv)");
    return *format;
}

int cmd_forge(const RunConfig& config) {
    if (config.out.empty()) throw UsageError("--out must not be empty");
    require_file(config.catalog, "catalog");
    require_file(config.lexicon, "lexicon");
    auto format = parse_doc_format(config.format);

    auto lexicon = plc::codecs::TabooLexicon::load(config.lexicon);
    auto catalog = plc::forge::load_catalog(config.catalog);
    fs::create_directories(config.out);

    json manifest_docs = json::array();
    std::vector<std::string> failures;
    for (const auto& recipe : catalog.recipes) {
        try {
            std::string body = config.raw ? plc::forge::compose_raw(recipe)
                                          : plc::forge::compose(recipe, lexicon);
            auto doc = plc::docio::make_document(recipe.id, body, format);
            fs::path path = fs::path(config.out) /
                            (recipe.id + std::string(plc::docio::format_extension(format)));
            plc::docio::write_document(doc, path);
            manifest_docs.push_back(json{{"id", recipe.id},
                                         {"path", path.string()},
                                         {"format", std::string(plc::docio::format_name(format))}});
        } catch (const plc::Error& e) {
            failures.push_back(recipe.id + std::string(": ") + e.what());
        }
    }
    json manifest{{"format", "plc-manifest"}, {"version", 1}, {"documents", manifest_docs}};
    write_text_file(fs::path(config.out) / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "forged " << manifest_docs.size() << " document(s) into " << config.out
              << (config.raw ? " (raw payloads)" : "") << "\n";
    for (const auto& failure : failures) std::cerr << "error: " << failure << "\n";
    return failures.empty() ? kExitOk : kExitRuntime;
}

int cmd_ingest(const RunConfig& config, const std::vector<std::string>& files) {
    if (files.empty()) throw UsageError("ingest needs at least one document file");
    require_file(config.lexicon, "lexicon");
    auto lexicon = plc::codecs::TabooLexicon::load(config.lexicon);

    plc::rag::VectorStore store;
    if (fs::exists(config.store)) store = plc::rag::VectorStore::load(config.store);

    std::size_t ingested = 0, rejected = 0, errored = 0;
    for (const auto& file : files) {
        try {
            auto doc = plc::docio::load_document(file);
            auto verdict = plc::censor::shallow_scan(doc, lexicon);
            if (verdict.passed()) {
                store.upsert(doc.id, plc::rag::chunk_text(doc.source_body));
                ++ingested;
                std::cout << "ingested " << doc.id << " (" << file << ")\n";
            } else {
                ++rejected;
                std::cout << "rejected " << doc.id << " (" << file << "):";
                for (const auto& hit : verdict.reasons) {
                    std::cout << " " << hit.term << "@" << hit.offset;
                }
                std::cout << "\n";
            }
        } catch (const plc::Error& e) {
            ++errored;
            std::cerr << "error: " << file << ": " << e.what() << "\n";
        }
    }
    store.save(config.store);
    std::cout << "summary: ingested " << ingested << ", rejected " << rejected << ", errored "
              << errored << "; store written to " << config.store << "\n";
    // Rejections are data, not failures; unreadable files are failures.
    return errored == 0 ? kExitOk : kExitRuntime;
}

int cmd_attack(const RunConfig& config) {
    require_file(config.catalog, "catalog");
    require_file(config.prompt_template, "template");
    require_file(config.store, "store");
    auto mode = plc::campaign::mode_from_name(config.mode);
    if (!mode) throw UsageError("unknown --mode '" + config.mode + "' (expected indirect or direct)");

    plc::campaign::CampaignSpec spec;
    spec.catalog = plc::forge::load_catalog(config.catalog);
    spec.backends = plc::backends::resolve_backends(config.backends);
    spec.rounds = config.rounds;
    spec.mode = *mode;
    spec.seed = config.seed;
    spec.workers = static_cast<std::size_t>(std::max(1, config.workers));

    auto store = plc::rag::VectorStore::load(config.store);
    auto rules = plc::forge::derive_trigger_rules(spec.catalog);
    auto prompt_template = plc::rag::PromptTemplate::load(config.prompt_template);

    fs::create_directories(config.out);
    std::string mode_tag(plc::campaign::mode_name(*mode));
    std::ofstream log(fs::path(config.out) / ("campaign-" + mode_tag + ".jsonl"),
                      std::ios::binary);
    if (!log) throw plc::IoError("cannot write campaign log under " + config.out);

    auto matrix = plc::campaign::run_campaign(
        spec, store, rules, prompt_template, plc::campaign::default_judge_config(),
        [&](const plc::campaign::QueryRecord& record) {
            log << plc::campaign::to_json_line(record) << '\n';
        });

    std::string md = plc::campaign::render_report(matrix, plc::campaign::ReportFormat::Markdown);
    std::string csv = plc::campaign::render_report(matrix, plc::campaign::ReportFormat::Csv);
    write_text_file(fs::path(config.out) / ("report-" + mode_tag + ".md"), md);
    write_text_file(fs::path(config.out) / ("report-" + mode_tag + ".csv"), csv);
    std::cout << md;
    std::cout << "reports and log written to " << config.out << "\n";
    return kExitOk;
}

int cmd_scan(const RunConfig& config, const std::vector<std::string>& files, bool use_store,
             const std::string& out_file) {
    require_file(config.lexicon, "lexicon");
    auto lexicon = plc::codecs::TabooLexicon::load(config.lexicon);
    auto format = parse_report_format(config.report_format);

    plc::detector::StoreScanResult result;
    if (use_store) {
        require_file(config.store, "store");
        result = plc::detector::scan_store(plc::rag::VectorStore::load(config.store), lexicon);
    } else {
        if (files.empty()) throw UsageError("scan needs document files or --store");
        std::vector<plc::docio::StoredDocument> docs;
        for (const auto& file : files) {
            try {
                docs.push_back(plc::docio::load_document(file));
            } catch (const plc::Error& e) {
                result.failures.push_back({fs::path(file).stem().string(), e.what()});
            }
        }
        auto scanned = plc::detector::scan_documents(docs, lexicon);
        result.reports = std::move(scanned.reports);
        for (auto& failure : scanned.failures) result.failures.push_back(std::move(failure));
    }

    std::string rendered = format == plc::campaign::ReportFormat::Markdown
                               ? plc::detector::render_reports_markdown(result)
                               : plc::detector::render_reports_csv(result);
    if (out_file.empty()) {
        std::cout << rendered;
    } else {
        write_text_file(out_file, rendered);
        std::cout << "scan report written to " << out_file << "\n";
    }
    return kExitOk;
}

int cmd_report(const RunConfig& config, const std::string& input, const std::string& out_file) {
    require_file(input, "report input");
    auto format = parse_report_format(config.report_format);

    plc::campaign::ResultMatrix matrix;
    if (fs::path(input).extension() == ".jsonl") {
        matrix = plc::campaign::matrix_from_log(input);
    } else {
        matrix = plc::campaign::load_matrix_csv(input);
    }
    std::string rendered = plc::campaign::render_report(matrix, format);
    if (out_file.empty()) {
        std::cout << rendered;
    } else {
        write_text_file(out_file, rendered);
        std::cout << "report written to " << out_file << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisoned knowledge-base red-team harness"};
    app.set_version_flag("--version", std::string(PLC_VERSION));
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;
    std::vector<std::string> files;
    std::string out_file;
    bool scan_store_flag = false;
    std::string report_input;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
    };

    auto* forge = app.add_subcommand("forge", "compose poisoned documents from the catalog");
    add_common(forge);
    forge->add_option("--catalog", config.catalog, "recipe catalog file");
    forge->add_option("--lexicon", config.lexicon, "taboo lexicon file");
    forge->add_option("--format", config.format, "container format: txt or pdf");
    forge->add_option("--out", config.out, "output directory");
    forge->add_flag("--raw", config.raw, "leave payloads un-obfuscated (censor-bait bodies)");

    auto* ingest = app.add_subcommand("ingest", "censor-scan documents and build the store");
    add_common(ingest);
    ingest->add_option("--lexicon", config.lexicon, "taboo lexicon file");
    ingest->add_option("--store", config.store, "store snapshot to create or extend");
    ingest->add_option("files", files, "document files (.txt / .pdf)");

    auto* attack = app.add_subcommand("attack", "run an attack campaign and write reports");
    add_common(attack);
    attack->add_option("--catalog", config.catalog, "recipe catalog file");
    attack->add_option("--template", config.prompt_template, "prompt template file");
    attack->add_option("--store", config.store, "store snapshot to query");
    attack->add_option("--mode", config.mode, "indirect or direct");
    attack->add_option("--rounds", config.rounds, "rounds per recipe")->check(CLI::PositiveNumber);
    attack->add_option("--backends", config.backends, "'scripted-all' or a backends JSON file");
    attack->add_option("--seed", config.seed, "campaign seed recorded in the log");
    attack->add_option("--workers", config.workers, "parallel query workers");
    attack->add_option("--out", config.out, "output directory");

    auto* scan = app.add_subcommand("scan", "deep-scan documents or a store for poison");
    add_common(scan);
    scan->add_option("--lexicon", config.lexicon, "taboo lexicon file");
    scan->add_option("--store", config.store, "store snapshot to scan");
    scan->add_flag("--from-store", scan_store_flag, "scan the store instead of files");
    scan->add_option("--report-format", config.report_format, "md or csv");
    scan->add_option("--out", out_file, "write the report here instead of stdout");
    scan->add_option("files", files, "document files (.txt / .pdf)");

    auto* report = app.add_subcommand("report", "re-render a campaign log or ASR matrix");
    add_common(report);
    report->add_option("--input", report_input, "campaign .jsonl log or ASR matrix .csv")
        ->required();
    report->add_option("--report-format", config.report_format, "md or csv");
    report->add_option("--out", out_file, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints the help text or the parse error
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (!config_path.empty()) {
            // Re-apply flag values on top of the config file.
            RunConfig from_file = config;
            apply_config_file(from_file, config_path);
            auto keep_flag = [&](CLI::App* cmd, const std::string& name, auto member) {
                const auto* option = cmd->get_option_no_throw(name);
                if (option != nullptr && option->count() > 0) from_file.*member = config.*member;
            };
            CLI::App* active = app.get_subcommands().front();
            keep_flag(active, "--catalog", &RunConfig::catalog);
            keep_flag(active, "--lexicon", &RunConfig::lexicon);
            keep_flag(active, "--template", &RunConfig::prompt_template);
            keep_flag(active, "--store", &RunConfig::store);
            keep_flag(active, "--out", &RunConfig::out);
            keep_flag(active, "--format", &RunConfig::format);
            keep_flag(active, "--mode", &RunConfig::mode);
            keep_flag(active, "--backends", &RunConfig::backends);
            keep_flag(active, "--report-format", &RunConfig::report_format);
            keep_flag(active, "--rounds", &RunConfig::rounds);
            keep_flag(active, "--seed", &RunConfig::seed);
            keep_flag(active, "--workers", &RunConfig::workers);
            config = from_file;
        }

        if (forge->parsed()) return cmd_forge(config);
        if (ingest->parsed()) return cmd_ingest(config, files);
        if (attack->parsed()) return cmd_attack(config);
        if (scan->parsed()) return cmd_scan(config, files, scan_store_flag, out_file);
        if (report->parsed()) return cmd_report(config, report_input, out_file);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const plc::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const plc::ConfigError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const plc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
