#pragma once

/**
 * JSON-lines trace records, one per verification round, plus the
 * analysis used by the trace subcommand: depth/width summaries, the
 * V_i-by-depth decay curve, and the accepted-length histogram.
 */

#include "specdec/engine.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace specdec {

std::string round_to_json(const RoundTrace& round);
RoundTrace round_from_json(const std::string& line);

class JsonlTraceSink final : public TraceSink {
public:
    explicit JsonlTraceSink(std::ostream& out) : out_(out) {}
    void on_round(const RoundTrace& round) override;

private:
    std::ostream& out_;
};

struct TraceReport {
    std::size_t rounds = 0;
    double mean_nodes = 0.0;
    double mean_max_depth = 0.0;
    double mean_leaf_depth = 0.0;
    double mean_fanout = 0.0;
    double mean_accepted_len = 0.0;
    std::vector<double> mean_v_by_depth;         // index 0 = depth 1
    std::vector<std::uint64_t> accepted_length_hist;
    double v_decay_slope = 0.0;                  // log-linear fit over mean_v_by_depth
    bool v_decay_slope_valid = false;
};

/// Reads JSON-lines rounds; throws std::runtime_error naming the line on
/// malformed input. An empty stream yields a zero-round report.
TraceReport analyze_trace(std::istream& in);

std::string format_report(const TraceReport& report);

/// Minimal SVG renderings of the report curves (convenience artifacts).
std::string render_v_decay_svg(const TraceReport& report);
std::string render_accept_hist_svg(const TraceReport& report);

} // namespace specdec
