#pragma once

/**
 * Experiment configuration: a flat, typed key-value file with section
 * headers, parsed into a family/method/rule grid and executed through
 * the engine. The grammar is documented in the README; parse errors
 * carry the offending line number.
 */

#include "specdec/engine.hpp"
#include "specdec/models.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace specdec {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RuleSpec {
    AcceptanceRule::Kind kind = AcceptanceRule::Kind::Exact;
    std::size_t k = 10;
    double delta = 0.0;
    double lambda = 0.0;
};

struct FamilySpec {
    std::string name;
    SyntheticFamilyConfig cfg;
};

struct ExperimentConfig {
    SyntheticFamilyConfig model; // defaults inherited by every family line
    std::size_t codebook_dim = 8;
    std::uint64_t codebook_seed = 0;
    std::string codebook_file; // overrides the synthetic codebook when set

    std::size_t token_budget = 256;
    std::size_t trials = 8;
    std::uint64_t seed = 0;
    int threads = 1; // 0 = hardware concurrency

    std::string csv_name = "results.csv";
    std::string trace_name; // empty = no trace output

    std::vector<FamilySpec> families; // defaults to one unnamed family from `model`
    std::vector<DecodeMethod> methods;
    std::vector<RuleSpec> rules; // defaults to exact
};

/// Known family presets: "peaked" (language-like, confident drafter) and
/// "dispersed" (visual-like, mean max-probability well below 0.2).
/// Overrides concentration and drafter_noise on top of `base`.
SyntheticFamilyConfig family_preset(const std::string& name, SyntheticFamilyConfig base);

ExperimentConfig parse_experiment_config(const std::string& text);

struct ExperimentResult {
    std::vector<CellResult> cells;
    std::string csv;
};

/// Runs the whole grid; rows appear in (family, method, rule) order.
ExperimentResult run_experiment(const ExperimentConfig& cfg, TraceSink* sink = nullptr);

} // namespace specdec
