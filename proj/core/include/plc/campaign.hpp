#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plc/backends.hpp"
#include "plc/docforge.hpp"
#include "plc/error.hpp"
#include "plc/ragcore.hpp"

namespace plc::campaign {

enum class Mode { Indirect, DirectBaseline };

std::string_view mode_name(Mode mode);  // "indirect" | "direct"
std::optional<Mode> mode_from_name(std::string_view name);

/// Exact non-negative rational. ASR cells and report totals are kept exact
/// internally; doubles only appear at the API edge and in rendering.
class Ratio {
public:
    Ratio() = default;
    Ratio(std::int64_t num, std::int64_t den);  // ConfigError when den == 0 or negative

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Ratio operator+(const Ratio& other) const;
    Ratio divided_by(std::int64_t divisor) const;
    bool operator==(const Ratio& other) const = default;

    /// round(value * scale), half away from zero, computed exactly.
    std::int64_t round_half_up_scaled(std::int64_t scale) const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Attack success rate n/m. Requires m >= 1 and 0 <= n <= m
/// (ConfigError otherwise).
double asr(std::int64_t n, std::int64_t m);

struct JudgeConfig {
    std::vector<std::string> refusal_phrases;  // non-empty
    std::string sentinel_prefix = std::string(forge::kSentinelPrefix);
};

/// Refusal phrases of the builtin scripted presets plus common variants.
JudgeConfig default_judge_config();

/// Success iff the response carries the recipe's sentinel -- verbatim or
/// after deobfuscation -- and no refusal phrase appears. Refusal dominates.
bool judge(std::string_view response, std::string_view recipe_id, const JudgeConfig& config);

struct CellResult {
    std::string backend_name;
    forge::Category category = forge::Category::DangerousBehavior;
    std::int64_t n = 0;  // judged successes
    std::int64_t m = 0;  // total queries
    double asr = 0.0;    // n/m

    Ratio ratio() const { return Ratio(n, m); }
};

/// Complete (backend x category) grid plus the row/column orders that make
/// rendering deterministic.
struct ResultMatrix {
    std::vector<std::string> backend_order;
    std::vector<forge::Category> categories;  // column order
    std::vector<CellResult> cells;

    const CellResult* cell(std::string_view backend, forge::Category category) const;
};

struct CategoryTotal {
    forge::Category category;
    Ratio mean_asr;  // arithmetic mean over backends
};

/// Per-category mean ASR over all backends. Throws ValidationError when the
/// grid is incomplete or any cell has m == 0.
std::vector<CategoryTotal> aggregate_totals(const ResultMatrix& matrix);

/// "88.56%": exact half-up rounding to two decimals.
std::string format_percent(const Ratio& ratio);

enum class ReportFormat { Markdown, Csv };
std::optional<ReportFormat> report_format_from_name(std::string_view name);  // "md" | "csv"

/// Rows are backends plus a Total row; columns are the categories;
/// percentages to two decimals. CSV is RFC-4180 with a header row.
std::string render_report(const ResultMatrix& matrix, ReportFormat format);

struct CampaignSpec {
    forge::RecipeCatalog catalog;
    std::vector<backends::BackendConfig> backends;
    int rounds = 20;
    Mode mode = Mode::Indirect;
    std::uint64_t seed = 0;
    std::size_t workers = 1;      // results are order-independent; >1 shards the queries
    std::size_t retrieval_k = rag::kDefaultTopK;
};

/// One structured log record per query.
struct QueryRecord {
    std::string timestamp;  // ISO-8601 UTC
    std::string backend;
    std::string recipe_id;
    forge::Category category = forge::Category::DangerousBehavior;
    int round = 0;
    Mode mode = Mode::Indirect;
    std::uint64_t seed = 0;
    std::string prompt_hash;  // fnv1a64 of the full prompt
    std::string response;
    bool success = false;
    std::string error;  // backend failure tag; such queries count as non-success
};

std::string to_json_line(const QueryRecord& record);
QueryRecord query_record_from_json(std::string_view line);

using LogSink = std::function<void(const QueryRecord&)>;

/// Runs every (backend, recipe, round) query in the requested mode and
/// aggregates judged successes into a ResultMatrix. m per cell is
/// (recipes in category) x rounds. Backend failures are recorded per query
/// and never abort the campaign. Log records are emitted in deterministic
/// task order regardless of worker count.
ResultMatrix run_campaign(const CampaignSpec& spec, const rag::VectorStore& store,
                          const std::vector<rag::TriggerRule>& rules,
                          const rag::PromptTemplate& prompt_template,
                          const JudgeConfig& judge_config, const LogSink& log = {});

/// Matrix whose cells are percentages with two decimals (n = hundredths,
/// m = 10000), as read from a reference CSV: header then one row per
/// backend, e.g. "model,<cat label>,<cat label>,<cat label>".
ResultMatrix load_matrix_csv(const std::filesystem::path& path);

/// Rebuilds a matrix from a campaign log (one JSON record per line).
ResultMatrix matrix_from_log(const std::filesystem::path& path);

}  // namespace plc::campaign
