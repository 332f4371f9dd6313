#pragma once

/**
 * Draft-tree data structure and drafting strategies.
 *
 * A StaticTreeSpec fixes the shape drafted every round. The text format
 * is one line per node, "id parent rank", with the root anchor line
 * "0 - -" standing for the committed context (it carries no draft
 * token). Two presets ship with the library: "eagle1-26" and
 * "extended-58", the latter a strict superset of the former with extra
 * branches and depth, both left-heavy.
 *
 * Dynamic drafting grows the tree level by level from drafter
 * confidence and keeps the highest global-accept-probability nodes,
 * V_i = product of confidences along the root path.
 */

#include "specdec/distributions.hpp"
#include "specdec/models.hpp"
#include "specdec/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace specdec {

class StaticTreeSpec {
public:
    struct Node {
        int parent = -1; // -1 for the root anchor
        int rank = -1;
    };

    /// Nodes indexed by id; node 0 must be the root anchor.
    explicit StaticTreeSpec(std::vector<Node> nodes);

    /// Number of draft nodes (the root anchor is not counted).
    std::size_t node_count() const { return nodes_.size() - 1; }
    std::size_t depth() const { return max_depth_; }
    int parent(int id) const { return nodes_[static_cast<std::size_t>(id)].parent; }
    int rank(int id) const { return nodes_[static_cast<std::size_t>(id)].rank; }
    int node_depth(int id) const { return depth_[static_cast<std::size_t>(id)]; }
    const std::vector<int>& children(int id) const { return children_[static_cast<std::size_t>(id)]; }
    std::size_t total_ids() const { return nodes_.size(); }

    std::string dump() const;

private:
    std::vector<Node> nodes_;
    std::vector<int> depth_;
    std::vector<std::vector<int>> children_;
    std::size_t max_depth_ = 0;
};

/// Parses the text format; throws std::runtime_error naming the offending
/// node on cycles, orphans, duplicate ids, or rank gaps.
StaticTreeSpec load_tree_spec(const std::string& text);

/// Names of the embedded presets.
std::vector<std::string> tree_preset_names();

/// Embedded preset by name; throws std::invalid_argument for unknown names.
const StaticTreeSpec& tree_preset(const std::string& name);

enum class DraftMode {
    Sampled, // siblings drawn without replacement from the drafter
    TopRank, // child of rank r takes the (r+1)-th most probable token
};

struct DraftNode {
    TokenId token = 0;
    double drafter_prob = 0.0;  // probability under the drafter's original distribution
    double draw_prob = 0.0;     // probability under the law the token was actually selected by
                                // (without-replacement renormalized; 1.0 for deterministic picks)
    double confidence = 0.0;    // c_j, the drafter's probability of this token
    double global_accept = 0.0; // V_i, product of confidences along the root path
    int parent = -1;            // -1 when the parent is the committed context
    int depth = 1;
};

struct DraftTree {
    TokenSequence prefix;              // committed context the tree extends
    std::vector<DraftNode> nodes;      // topological order, parents first
    std::vector<std::vector<int>> children; // children[i] of node i, in drafted order
    std::vector<int> roots;            // children of the committed context
    int drafter_forward_passes = 0;

    std::size_t max_depth() const;
    /// Token path from the committed context to node i, inclusive.
    TokenSequence path_tokens(int node) const;
};

struct TreeStats {
    std::size_t node_count = 0;
    std::size_t max_depth = 0;
    double mean_leaf_depth = 0.0;
    double mean_fanout = 0.0; // nodes per expansion point (context + internal nodes)
};

TreeStats tree_stats(const DraftTree& tree);

/// Drafts the fixed shape, one drafter pass per level. In Sampled mode,
/// siblings are drawn without replacement; drafter_prob keeps the
/// pre-removal probability while draw_prob records the renormalized law
/// the token actually came from. Children whose drafter support is
/// exhausted are dropped together with their subtree.
DraftTree draft_static(const ModelOracle& drafter, const TokenSequence& prefix,
                       const StaticTreeSpec& spec, RandomSource& rng, DraftMode mode);

/// Confidence-trimmed drafting: expand every frontier node with its top-k
/// continuations for depth_budget levels, then keep the total_nodes nodes
/// with highest V_i (ancestors of kept nodes always survive). Fully
/// deterministic; tokens are top-k selections, draw_prob is 1.
DraftTree draft_dynamic(const ModelOracle& drafter, const TokenSequence& prefix,
                        std::size_t top_k, std::size_t total_nodes, std::size_t depth_budget);

} // namespace specdec
