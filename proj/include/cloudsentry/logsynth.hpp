#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cloudsentry/epidemic.hpp"

namespace cloudsentry {

struct LogEntry {
    int step = 0;
    std::vector<std::string> tokens;

    bool operator==(const LogEntry&) const = default;
};

/// Per-vertex ordered log entries.
struct LogCorpus {
    std::vector<std::vector<LogEntry>> entries;

    explicit LogCorpus(int n = 0) : entries(static_cast<std::size_t>(n)) {}

    int size() const noexcept { return static_cast<int>(entries.size()); }
    /// All tokens of vertex v in entry order.
    std::vector<std::string> tokens(VertexId v) const;
    std::size_t entry_count() const;

    bool operator==(const LogCorpus&) const = default;
};

/// A pattern of fixed tokens and slots. A slot is written "<name>" and is
/// filled from the slot's value list at generation time.
struct LogTemplate {
    int id = 0;
    std::vector<std::string> pattern;
    std::optional<Scenario> anomalous_for;  // nullopt: normal template

    bool anomalous() const noexcept { return anomalous_for.has_value(); }
};

const std::vector<LogTemplate>& log_templates();
const LogTemplate& log_template(int id);
std::vector<int> normal_template_ids();
std::vector<int> anomalous_template_ids(Scenario scenario);

struct LogGenConfig {
    int rate = 4;       // entries per vertex per step
    double mix = 0.8;   // probability an infected vertex's entry is anomalous
};

struct GeneratedLogs {
    LogCorpus corpus;
    std::vector<std::vector<int>> template_ids;  // parallel to corpus.entries
};

/// S/R vertices draw normal templates; D/I vertices draw the preset's
/// anomalous templates with probability `mix`. One batch of `rate` entries per
/// vertex for every state in the trajectory.
GeneratedLogs generate_logs(const CloudGraph& g, const Trajectory& trajectory, const ScenarioPreset& preset,
                            const LogGenConfig& config, std::uint64_t seed);

/// Parses `<vertex_id> <step> <token> [<token> ...]` lines.
LogCorpus parse_logs(const std::string& text, int n);
LogCorpus ingest_logs(const std::filesystem::path& path, int n);

std::string format_logs(const LogCorpus& corpus);
void export_logs(const LogCorpus& corpus, const std::filesystem::path& path);

}  // namespace cloudsentry
