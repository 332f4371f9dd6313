#pragma once

/**
 * Full decode sessions: draft, verify, commit until the token budget is
 * reached, with step-compression and acceptance accounting.
 *
 * Latency is modeled, not measured: sessions report decoding steps
 * (target forward passes) and drafter passes, and a parametric proxy
 * decoding_steps * cost_target + drafter_passes * cost_draft stands in
 * for wall-clock numbers.
 */

#include "specdec/acceptance.hpp"
#include "specdec/draft_tree.hpp"
#include "specdec/models.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace specdec {

struct BaselineMethod {};

struct ChainMethod {
    int gamma = 4;
};

struct StaticTreeMethod {
    std::shared_ptr<const StaticTreeSpec> spec;
    std::string name; // preset name or "custom", reporting only
    DraftMode mode = DraftMode::Sampled;
};

struct DynamicTreeMethod {
    std::size_t top_k = 2;
    std::size_t total_nodes = 58;
    std::size_t depth_budget = 8;
};

using DecodeMethod = std::variant<BaselineMethod, ChainMethod, StaticTreeMethod, DynamicTreeMethod>;

std::string method_name(const DecodeMethod& method);
std::string method_tree_name(const DecodeMethod& method);

struct SessionConfig {
    std::size_t token_budget = 256;
    DecodeMethod method = BaselineMethod{};
    AcceptanceRule rule = AcceptanceRule::exact();
    std::uint64_t seed = 0;
    std::string label; // optional family/cell tag, prefixes the method column
};

struct DecodeMetrics {
    std::uint64_t tokens_generated = 0;
    std::uint64_t decoding_steps = 0; // verification rounds, i.e. target passes
    std::uint64_t drafter_passes = 0;
    std::vector<std::uint64_t> accepted_length_hist; // index = accepted draft count
    double tree_depth_sum = 0.0;                     // drafted tree depth, summed over rounds

    double step_compression() const {
        return decoding_steps == 0 ? 0.0
                                   : static_cast<double>(tokens_generated) /
                                         static_cast<double>(decoding_steps);
    }
    double mean_accepted_length() const {
        return decoding_steps == 0 ? 0.0
                                   : static_cast<double>(tokens_generated - decoding_steps) /
                                         static_cast<double>(decoding_steps);
    }
    double mean_tree_depth() const {
        return decoding_steps == 0 ? 0.0 : tree_depth_sum / static_cast<double>(decoding_steps);
    }
    double latency_proxy(double cost_target, double cost_draft) const {
        return static_cast<double>(decoding_steps) * cost_target +
               static_cast<double>(drafter_passes) * cost_draft;
    }
};

struct TraceNode {
    int id = 0;
    int parent = -1;
    int depth = 1;
    TokenId token = 0;
    double confidence = 0.0;
    double global_accept = 0.0;
};

struct RoundTrace {
    std::uint64_t round = 0;
    TreeStats tree;
    std::vector<TraceNode> nodes;
    std::vector<NodeDecision> decisions;
    std::size_t accepted_len = 0;
    TokenId final_token = -1;
    bool bonus = false;
};

struct TraceSink {
    virtual ~TraceSink() = default;
    virtual void on_round(const RoundTrace& round) = 0;
};

struct SessionResult {
    TokenSequence tokens; // truncated to the budget
    DecodeMetrics metrics;
};

/// Runs one decode session. Deterministic under a fixed config; rejects
/// incompatible method/rule combinations before doing any work.
SessionResult run_session(const SessionConfig& cfg, const ModelOracle& target,
                          const ModelOracle& drafter, TraceSink* sink = nullptr);

struct CellResult {
    std::string method;
    std::string tree;
    std::string k;
    std::string lambda;
    std::string delta;
    std::size_t trials = 0;
    double mean_S = 0.0;
    double stderr_S = 0.0;
    double mean_accept_len = 0.0;
    double mean_tree_depth = 0.0;
    double drafter_passes_per_token = 0.0;
};

/// Runs trials sessions per grid cell with derived seeds
/// (hash of base seed, cell index, trial index); results are identical
/// for any thread count. Optional sink receives every round trace,
/// ordered by (cell, trial, round).
std::vector<CellResult> compare_methods(const std::vector<SessionConfig>& grid,
                                        const ModelOracle& target, const ModelOracle& drafter,
                                        std::size_t trials, std::uint64_t seed, int threads = 1,
                                        TraceSink* sink = nullptr);

std::string cells_to_csv(const std::vector<CellResult>& cells);

} // namespace specdec
