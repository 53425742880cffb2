#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ibgan/config.hpp"
#include "ibgan/metrics.hpp"

namespace ibgan::exp {

/// One (method, sweep point, replicate) outcome. Failed replicates carry the
/// diagnostic instead of metrics; the grid keeps going.
struct RunRecord {
    std::string method;
    double p_miss = 0.0;
    double alpha = 0.0;
    std::size_t train_size = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    metrics::MetricsReport report;
    double duration_s = 0.0;
    bool failed = false;
    std::string error;
};

/// Executes the full grid; records are appended to cfg.output (one
/// self-describing key=value line each) as they complete, and per-epoch loss
/// histories to cfg.output + ".losses".
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      std::ostream* progress = nullptr);

std::string format_record(const RunRecord& r);
RunRecord parse_record(const std::string& line);
std::vector<RunRecord> read_records(const std::string& path);

struct SummaryRow {
    std::string method;
    std::string sweep_key;  // "p_miss", "train_size", or "none"
    double sweep_value = 0.0;
    std::string metric;
    double mean = 0.0;
    std::optional<double> stddev;
    std::size_t n = 0;
};

/// Mean and sample stddev per (method, sweep point, metric), ordered by
/// method then sweep value. Failed records are skipped.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

std::string summary_csv(const std::vector<SummaryRow>& rows);
/// Aligned text table with "mean +- stddev" cells (3 decimals).
std::string summary_table(const std::vector<SummaryRow>& rows);

}  // namespace ibgan::exp
