#include "specdec/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace specdec {

std::string method_name(const DecodeMethod& method) {
    std::ostringstream out;
    if (std::holds_alternative<BaselineMethod>(method)) {
        out << "baseline-ar";
    } else if (const auto* chain = std::get_if<ChainMethod>(&method)) {
        out << "chain(gamma=" << chain->gamma << ")";
    } else if (const auto* stat = std::get_if<StaticTreeMethod>(&method)) {
        out << "static-tree(" << (stat->mode == DraftMode::Sampled ? "sampled" : "top-rank") << ")";
    } else if (const auto* dyn = std::get_if<DynamicTreeMethod>(&method)) {
        out << "dynamic-tree(top_k=" << dyn->top_k << ",nodes=" << dyn->total_nodes
            << ",depth=" << dyn->depth_budget << ")";
    }
    return out.str();
}

std::string method_tree_name(const DecodeMethod& method) {
    if (const auto* stat = std::get_if<StaticTreeMethod>(&method)) return stat->name;
    return "-";
}

namespace {

void validate_session(const SessionConfig& cfg, const ModelOracle& target,
                      const ModelOracle& drafter) {
    if (cfg.token_budget < 1) throw std::invalid_argument("session: token_budget must be >= 1");
    if (target.vocab_size() != drafter.vocab_size()) {
        throw std::invalid_argument("session: target and drafter vocabulary sizes differ");
    }
    if (cfg.rule.relaxed()) {
        if (std::holds_alternative<BaselineMethod>(cfg.method)) {
            throw std::invalid_argument(
                "session: a relaxed rule has no effect under baseline-ar decoding");
        }
        if (cfg.rule.codebook() == nullptr ||
            cfg.rule.codebook()->size() != target.vocab_size()) {
            throw std::invalid_argument("session: relaxed rule needs a codebook matching V");
        }
    }
    if (const auto* chain = std::get_if<ChainMethod>(&cfg.method)) {
        if (chain->gamma < 1) throw std::invalid_argument("session: chain gamma must be >= 1");
    }
    if (const auto* stat = std::get_if<StaticTreeMethod>(&cfg.method)) {
        if (!stat->spec) throw std::invalid_argument("session: static-tree method has no spec");
    }
}

void record_hist(DecodeMetrics& metrics, std::size_t accepted) {
    if (metrics.accepted_length_hist.size() <= accepted) {
        metrics.accepted_length_hist.resize(accepted + 1, 0);
    }
    metrics.accepted_length_hist[accepted] += 1;
}

RoundTrace make_round_trace(std::uint64_t round, const DraftTree& tree,
                            const VerificationOutcome& outcome) {
    RoundTrace trace;
    trace.round = round;
    trace.tree = tree_stats(tree);
    trace.nodes.reserve(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const DraftNode& n = tree.nodes[i];
        trace.nodes.push_back(TraceNode{static_cast<int>(i), n.parent, n.depth, n.token,
                                        n.confidence, n.global_accept});
    }
    trace.decisions = outcome.trace;
    trace.accepted_len = outcome.accepted.size();
    trace.final_token = outcome.final_token;
    trace.bonus = outcome.fully_accepted;
    return trace;
}

} // namespace

SessionResult run_session(const SessionConfig& cfg, const ModelOracle& target,
                          const ModelOracle& drafter, TraceSink* sink) {
    validate_session(cfg, target, drafter);
    Rng rng(cfg.seed);
    SessionResult result;
    TokenSequence& committed = result.tokens;
    DecodeMetrics& metrics = result.metrics;

    while (committed.size() < cfg.token_budget) {
        const std::uint64_t round = metrics.decoding_steps;

        if (std::holds_alternative<BaselineMethod>(cfg.method)) {
            const TokenId token = sample(target.next_distribution(committed), rng);
            committed.push_back(token);
            metrics.tokens_generated += 1;
            metrics.decoding_steps += 1;
            record_hist(metrics, 0);
            if (sink) {
                RoundTrace trace;
                trace.round = round;
                trace.final_token = token;
                trace.bonus = true;
                sink->on_round(trace);
            }
            continue;
        }

        VerificationOutcome outcome;
        DraftTree tree;
        if (const auto* chain = std::get_if<ChainMethod>(&cfg.method)) {
            std::vector<ChainDraft> drafts;
            drafts.reserve(static_cast<std::size_t>(chain->gamma));
            TokenSequence current = committed;
            for (int i = 0; i < chain->gamma; ++i) {
                const auto p = drafter.next_distribution(current);
                const TokenId token = sample(p, rng);
                drafts.push_back(ChainDraft{token, p[static_cast<std::size_t>(token)]});
                current.push_back(token);
            }
            metrics.drafter_passes += static_cast<std::uint64_t>(chain->gamma);
            metrics.tree_depth_sum += chain->gamma;
            outcome = verify_chain(cfg.rule, target, drafter, committed, drafts, rng);
            if (sink) {
                // Present the chain as the degenerate tree it is.
                tree.prefix = committed;
                int parent = -1;
                for (std::size_t i = 0; i < drafts.size(); ++i) {
                    DraftNode node;
                    node.token = drafts[i].token;
                    node.drafter_prob = node.draw_prob = node.confidence = drafts[i].drafter_prob;
                    node.global_accept = (parent < 0 ? 1.0
                                                     : tree.nodes[static_cast<std::size_t>(parent)]
                                                           .global_accept) *
                                         node.confidence;
                    node.parent = parent;
                    node.depth = static_cast<int>(i) + 1;
                    tree.nodes.push_back(node);
                    tree.children.emplace_back();
                    if (parent < 0) tree.roots.push_back(0);
                    else tree.children[static_cast<std::size_t>(parent)].push_back(static_cast<int>(i));
                    parent = static_cast<int>(i);
                }
            }
        } else if (const auto* stat = std::get_if<StaticTreeMethod>(&cfg.method)) {
            tree = draft_static(drafter, committed, *stat->spec, rng, stat->mode);
            metrics.drafter_passes += stat->spec->depth();
            metrics.tree_depth_sum += static_cast<double>(tree.max_depth());
            outcome = verify_tree(cfg.rule, target, drafter, tree, rng);
        } else {
            const auto& dyn = std::get<DynamicTreeMethod>(cfg.method);
            tree = draft_dynamic(drafter, committed, dyn.top_k, dyn.total_nodes, dyn.depth_budget);
            metrics.drafter_passes += dyn.depth_budget;
            metrics.tree_depth_sum += static_cast<double>(tree.max_depth());
            outcome = verify_tree(cfg.rule, target, drafter, tree, rng);
        }

        const auto round_tokens = outcome.committed();
        committed.insert(committed.end(), round_tokens.begin(), round_tokens.end());
        metrics.tokens_generated += round_tokens.size();
        metrics.decoding_steps += 1;
        record_hist(metrics, outcome.accepted.size());
        if (sink) sink->on_round(make_round_trace(round, tree, outcome));
    }

    // The final round may overshoot; the reported sequence is truncated while
    // the metrics keep the true counts.
    if (committed.size() > cfg.token_budget) committed.resize(cfg.token_budget);
    return result;
}

namespace {

struct TrialOutcome {
    double s = 0.0;
    double accept_len = 0.0;
    double tree_depth = 0.0;
    std::uint64_t drafter_passes = 0;
    std::uint64_t tokens = 0;
    std::vector<RoundTrace> rounds;
};

class CollectingSink final : public TraceSink {
public:
    explicit CollectingSink(std::vector<RoundTrace>& out) : out_(out) {}
    void on_round(const RoundTrace& round) override { out_.push_back(round); }

private:
    std::vector<RoundTrace>& out_;
};

} // namespace

std::vector<CellResult> compare_methods(const std::vector<SessionConfig>& grid,
                                        const ModelOracle& target, const ModelOracle& drafter,
                                        std::size_t trials, std::uint64_t seed, int threads,
                                        TraceSink* sink) {
    if (grid.empty()) throw std::invalid_argument("compare_methods: empty grid");
    if (trials < 1) throw std::invalid_argument("compare_methods: trials must be >= 1");
    for (const auto& cfg : grid) validate_session(cfg, target, drafter);

    const std::size_t jobs = grid.size() * trials;
    std::vector<TrialOutcome> outcomes(jobs);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            const std::size_t cell = job / trials;
            const std::size_t trial = job % trials;
            SessionConfig cfg = grid[cell];
            cfg.seed = derive_seed(seed, cell, trial);
            TrialOutcome& out = outcomes[job];
            CollectingSink collector(out.rounds);
            const auto result = run_session(cfg, target, drafter, sink ? &collector : nullptr);
            out.s = result.metrics.step_compression();
            out.accept_len = result.metrics.mean_accepted_length();
            out.tree_depth = result.metrics.mean_tree_depth();
            out.drafter_passes = result.metrics.drafter_passes;
            out.tokens = result.metrics.tokens_generated;
        }
    };

    int n_threads = threads;
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(jobs)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Sequential reduction in grid order keeps the output independent of
    // scheduling.
    std::vector<CellResult> cells;
    cells.reserve(grid.size());
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        const SessionConfig& cfg = grid[cell];
        CellResult row;
        row.method = (cfg.label.empty() ? "" : cfg.label + ":") + method_name(cfg.method);
        row.tree = method_tree_name(cfg.method);
        row.k = cfg.rule.relaxed() ? std::to_string(cfg.rule.neighborhood_k()) : "-";
        auto fmt = [](double v) {
            std::ostringstream s;
            s.precision(10);
            s << v;
            return s.str();
        };
        row.lambda = cfg.rule.kind() == AcceptanceRule::Kind::MultiplicativeRelaxed
                         ? fmt(cfg.rule.lambda()) : "-";
        row.delta = cfg.rule.kind() == AcceptanceRule::Kind::AdditiveRelaxed
                        ? fmt(cfg.rule.delta()) : "-";
        row.trials = trials;

        double sum_s = 0.0, sum_s2 = 0.0, sum_len = 0.0, sum_depth = 0.0;
        std::uint64_t passes = 0, tokens = 0;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const TrialOutcome& out = outcomes[cell * trials + trial];
            sum_s += out.s;
            sum_s2 += out.s * out.s;
            sum_len += out.accept_len;
            sum_depth += out.tree_depth;
            passes += out.drafter_passes;
            tokens += out.tokens;
            if (sink) {
                for (const auto& round : out.rounds) sink->on_round(round);
            }
        }
        const double n = static_cast<double>(trials);
        row.mean_S = sum_s / n;
        if (trials > 1) {
            const double var = std::max(0.0, (sum_s2 - sum_s * sum_s / n) / (n - 1.0));
            row.stderr_S = std::sqrt(var / n);
        }
        row.mean_accept_len = sum_len / n;
        row.mean_tree_depth = sum_depth / n;
        row.drafter_passes_per_token =
            tokens == 0 ? 0.0 : static_cast<double>(passes) / static_cast<double>(tokens);
        cells.push_back(std::move(row));
    }
    return cells;
}

std::string cells_to_csv(const std::vector<CellResult>& cells) {
    std::ostringstream out;
    out.precision(10);
    out << "method,tree,k,lambda,delta,trials,mean_S,stderr_S,mean_accept_len,"
           "mean_tree_depth,drafter_passes_per_token\n";
    for (const auto& c : cells) {
        out << c.method << ',' << c.tree << ',' << c.k << ',' << c.lambda << ',' << c.delta << ','
            << c.trials << ',' << c.mean_S << ',' << c.stderr_S << ',' << c.mean_accept_len << ','
            << c.mean_tree_depth << ',' << c.drafter_passes_per_token << '\n';
    }
    return out.str();
}

} // namespace specdec
