#include "specdec/draft_tree.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>

namespace specdec {

StaticTreeSpec::StaticTreeSpec(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty() || nodes_[0].parent != -1) {
        throw std::runtime_error("tree spec: node 0 must be the root anchor");
    }
    if (nodes_.size() < 2) {
        throw std::runtime_error("tree spec: needs at least one draft node");
    }
    depth_.assign(nodes_.size(), 0);
    children_.assign(nodes_.size(), {});
    for (std::size_t id = 1; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= id) {
            throw std::runtime_error("tree spec: node " + std::to_string(id) +
                                     " must reference an earlier parent");
        }
        if (n.rank < 0) {
            throw std::runtime_error("tree spec: node " + std::to_string(id) + " has negative rank");
        }
        depth_[id] = depth_[static_cast<std::size_t>(n.parent)] + 1;
        max_depth_ = std::max(max_depth_, static_cast<std::size_t>(depth_[id]));
        children_[static_cast<std::size_t>(n.parent)].push_back(static_cast<int>(id));
    }
    // Ranks within a parent must be 0..fanout-1, and we keep children in rank order.
    for (std::size_t p = 0; p < nodes_.size(); ++p) {
        auto& kids = children_[p];
        std::sort(kids.begin(), kids.end(),
                  [&](int a, int b) { return nodes_[static_cast<std::size_t>(a)].rank <
                                             nodes_[static_cast<std::size_t>(b)].rank; });
        for (std::size_t r = 0; r < kids.size(); ++r) {
            const int id = kids[r];
            if (nodes_[static_cast<std::size_t>(id)].rank != static_cast<int>(r)) {
                throw std::runtime_error("tree spec: node " + std::to_string(id) +
                                         " has rank " + std::to_string(nodes_[static_cast<std::size_t>(id)].rank) +
                                         " under parent " + std::to_string(p) +
                                         ", expected " + std::to_string(r));
            }
        }
    }
}

std::string StaticTreeSpec::dump() const {
    std::ostringstream out;
    out << "0 - -\n";
    for (std::size_t id = 1; id < nodes_.size(); ++id) {
        out << id << ' ' << nodes_[id].parent << ' ' << nodes_[id].rank << '\n';
    }
    return out.str();
}

StaticTreeSpec load_tree_spec(const std::string& text) {
    std::istringstream in(text);
    std::vector<StaticTreeSpec::Node> nodes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        std::string id_s, parent_s, rank_s;
        if (!(fields >> id_s >> parent_s >> rank_s)) {
            throw std::runtime_error("tree spec line " + std::to_string(lineno) +
                                     ": expected \"id parent rank\"");
        }
        StaticTreeSpec::Node node;
        std::size_t id = 0;
        try {
            id = static_cast<std::size_t>(std::stol(id_s));
        } catch (const std::exception&) {
            throw std::runtime_error("tree spec line " + std::to_string(lineno) + ": bad node id");
        }
        if (id != nodes.size()) {
            throw std::runtime_error("tree spec: node " + id_s + " out of order, expected id " +
                                     std::to_string(nodes.size()));
        }
        if (parent_s == "-") {
            node.parent = -1;
            node.rank = -1;
        } else {
            try {
                node.parent = std::stoi(parent_s);
                node.rank = std::stoi(rank_s);
            } catch (const std::exception&) {
                throw std::runtime_error("tree spec: node " + id_s + " has malformed parent/rank");
            }
        }
        nodes.push_back(node);
    }
    if (nodes.empty()) throw std::runtime_error("tree spec: empty input");
    return StaticTreeSpec(std::move(nodes));
}

namespace {

using RankPath = std::vector<int>;

StaticTreeSpec spec_from_paths(std::vector<RankPath> paths) {
    std::sort(paths.begin(), paths.end(), [](const RankPath& a, const RankPath& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    std::map<RankPath, int> ids;
    ids[{}] = 0;
    std::vector<StaticTreeSpec::Node> nodes(1);
    nodes[0].parent = -1;
    for (const auto& path : paths) {
        RankPath parent(path.begin(), path.end() - 1);
        const auto it = ids.find(parent);
        if (it == ids.end()) throw std::logic_error("preset path misses its parent");
        StaticTreeSpec::Node node;
        node.parent = it->second;
        node.rank = path.back();
        ids[path] = static_cast<int>(nodes.size());
        nodes.push_back(node);
    }
    return StaticTreeSpec(std::move(nodes));
}

std::vector<RankPath> eagle1_26_paths() {
    return {
        {0}, {1}, {2}, {3},
        {0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {2, 0}, {3, 0},
        {0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {2, 0, 0},
        {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0},
        {0, 0, 0, 0, 0}, {0, 0, 0, 0, 1}, {0, 0, 0, 1, 0}, {0, 0, 1, 0, 0}, {1, 0, 0, 0, 0},
    };
}

std::vector<RankPath> extended_58_paths() {
    // Strict superset of the 26-node shape: a fifth top-level branch, wider
    // early levels, and two extra levels along the left spine.
    auto paths = eagle1_26_paths();
    const std::vector<RankPath> extra = {
        {4},
        {0, 3}, {1, 2}, {2, 1}, {4, 0},
        {0, 0, 2}, {0, 1, 1}, {1, 1, 0}, {2, 0, 1}, {3, 0, 0},
        {0, 0, 0, 2}, {0, 0, 1, 1}, {0, 1, 1, 0}, {1, 0, 0, 1}, {1, 1, 0, 0}, {2, 0, 0, 0},
        {0, 0, 0, 0, 2}, {0, 0, 0, 1, 1}, {0, 0, 1, 0, 1}, {0, 1, 0, 0, 0},
        {1, 0, 0, 0, 1}, {1, 1, 0, 0, 0}, {2, 0, 0, 0, 0},
        {0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 1, 0},
        {0, 0, 0, 1, 0, 0}, {0, 0, 1, 0, 0, 0}, {1, 0, 0, 0, 0, 0},
        {0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 0, 1, 0},
    };
    paths.insert(paths.end(), extra.begin(), extra.end());
    return paths;
}

} // namespace

std::vector<std::string> tree_preset_names() { return {"eagle1-26", "extended-58"}; }

const StaticTreeSpec& tree_preset(const std::string& name) {
    static const StaticTreeSpec eagle26 = spec_from_paths(eagle1_26_paths());
    static const StaticTreeSpec extended58 = spec_from_paths(extended_58_paths());
    if (name == "eagle1-26") return eagle26;
    if (name == "extended-58") return extended58;
    std::string known;
    for (const auto& n : tree_preset_names()) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw std::invalid_argument("unknown tree preset \"" + name + "\" (available: " + known + ")");
}

std::size_t DraftTree::max_depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes) d = std::max(d, static_cast<std::size_t>(n.depth));
    return d;
}

TokenSequence DraftTree::path_tokens(int node) const {
    TokenSequence path;
    for (int i = node; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
        path.push_back(nodes[static_cast<std::size_t>(i)].token);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

TreeStats tree_stats(const DraftTree& tree) {
    TreeStats stats;
    stats.node_count = tree.nodes.size();
    stats.max_depth = tree.max_depth();
    if (tree.nodes.empty()) return stats;

    std::size_t leaf_count = 0, leaf_depth_sum = 0, internal = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.children[i].empty()) {
            ++leaf_count;
            leaf_depth_sum += static_cast<std::size_t>(tree.nodes[i].depth);
        } else {
            ++internal;
        }
    }
    stats.mean_leaf_depth = static_cast<double>(leaf_depth_sum) / static_cast<double>(leaf_count);
    stats.mean_fanout =
        static_cast<double>(stats.node_count) / static_cast<double>(1 + internal);
    return stats;
}

namespace {

int append_node(DraftTree& tree, DraftNode node) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    tree.children.emplace_back();
    if (node.parent < 0) {
        tree.roots.push_back(idx);
    } else {
        tree.children[static_cast<std::size_t>(node.parent)].push_back(idx);
    }
    return idx;
}

TokenSequence node_prefix(const DraftTree& tree, int node) {
    TokenSequence prefix = tree.prefix;
    if (node >= 0) {
        const TokenSequence path = tree.path_tokens(node);
        prefix.insert(prefix.end(), path.begin(), path.end());
    }
    return prefix;
}

} // namespace

DraftTree draft_static(const ModelOracle& drafter, const TokenSequence& prefix,
                       const StaticTreeSpec& spec, RandomSource& rng, DraftMode mode) {
    DraftTree tree;
    tree.prefix = prefix;
    tree.drafter_forward_passes = static_cast<int>(spec.depth());

    // spec id -> tree node index; -1 is the context anchor, -2 a dropped subtree.
    std::vector<int> spec_to_tree(spec.total_ids(), -2);
    spec_to_tree[0] = -1;

    for (std::size_t id = 0; id < spec.total_ids(); ++id) {
        const auto& kids = spec.children(static_cast<int>(id));
        if (kids.empty()) continue;
        const int tree_parent = spec_to_tree[id];
        if (tree_parent == -2) continue;

        const auto dist = drafter.next_distribution(node_prefix(tree, tree_parent));
        const double parent_v =
            tree_parent < 0 ? 1.0 : tree.nodes[static_cast<std::size_t>(tree_parent)].global_accept;

        if (mode == DraftMode::Sampled) {
            std::vector<double> working = dist.probs();
            double remaining = 1.0;
            for (int spec_child : kids) {
                if (!(remaining > 0.0)) break; // drafter support exhausted
                const double u = rng.uniform01() * remaining;
                double cum = 0.0;
                TokenId token = -1;
                for (std::size_t t = 0; t < working.size(); ++t) {
                    if (working[t] <= 0.0) continue;
                    token = static_cast<TokenId>(t);
                    cum += working[t];
                    if (u < cum) break;
                }
                if (token < 0) break;
                DraftNode node;
                node.token = token;
                node.drafter_prob = dist[static_cast<std::size_t>(token)];
                node.draw_prob = working[static_cast<std::size_t>(token)] / remaining;
                node.confidence = dist[static_cast<std::size_t>(token)];
                node.global_accept = parent_v * node.confidence;
                node.parent = tree_parent;
                node.depth = spec.node_depth(spec_child);
                spec_to_tree[static_cast<std::size_t>(spec_child)] = append_node(tree, node);
                remaining = std::max(remaining - working[static_cast<std::size_t>(token)], 0.0);
                working[static_cast<std::size_t>(token)] = 0.0;
            }
        } else {
            const std::size_t want = std::min(kids.size(), dist.size());
            const auto top = top_k_indices(dist, want);
            for (std::size_t r = 0; r < want; ++r) {
                DraftNode node;
                node.token = top[r];
                node.drafter_prob = dist[static_cast<std::size_t>(top[r])];
                node.draw_prob = 1.0;
                node.confidence = dist[static_cast<std::size_t>(top[r])];
                node.global_accept = parent_v * node.confidence;
                node.parent = tree_parent;
                node.depth = spec.node_depth(kids[r]);
                spec_to_tree[static_cast<std::size_t>(kids[r])] = append_node(tree, node);
            }
        }
    }
    return tree;
}

namespace {

struct DynCandidate {
    TokenId token = 0;
    double confidence = 0.0;
    double v = 0.0;
    int parent = -1; // index into the candidate array
    int depth = 1;
};

// Ordering for the global trim: higher V first, then shallower, then
// earlier creation. Total because creation indices are unique.
struct CandKey {
    double v;
    int depth;
    int idx;
    bool better_than(const CandKey& other) const {
        if (v != other.v) return v > other.v;
        if (depth != other.depth) return depth < other.depth;
        return idx < other.idx;
    }
};

} // namespace

DraftTree draft_dynamic(const ModelOracle& drafter, const TokenSequence& prefix,
                        std::size_t top_k, std::size_t total_nodes, std::size_t depth_budget) {
    if (total_nodes < 1) throw std::invalid_argument("draft_dynamic: total_nodes must be >= 1");
    if (top_k < 1) throw std::invalid_argument("draft_dynamic: top_k must be >= 1");
    if (depth_budget < 1) throw std::invalid_argument("draft_dynamic: depth_budget must be >= 1");
    top_k = std::min(top_k, drafter.vocab_size());

    std::vector<DynCandidate> cands;
    // Min-heap of the best total_nodes candidates seen so far (worst on top).
    auto worse = [](const CandKey& a, const CandKey& b) { return a.better_than(b); };
    std::priority_queue<CandKey, std::vector<CandKey>, decltype(worse)> best(worse);

    auto cand_prefix = [&](int idx) {
        TokenSequence full = prefix;
        TokenSequence path;
        for (int i = idx; i >= 0; i = cands[static_cast<std::size_t>(i)].parent) {
            path.push_back(cands[static_cast<std::size_t>(i)].token);
        }
        full.insert(full.end(), path.rbegin(), path.rend());
        return full;
    };

    std::vector<int> frontier{-1}; // -1 = committed context
    for (std::size_t level = 1; level <= depth_budget && !frontier.empty(); ++level) {
        std::vector<int> next;
        for (int f : frontier) {
            const double parent_v = f < 0 ? 1.0 : cands[static_cast<std::size_t>(f)].v;
            const int parent_depth = f < 0 ? 0 : cands[static_cast<std::size_t>(f)].depth;
            if (best.size() >= total_nodes) {
                // A child's key is at best (parent_v, parent_depth+1, fresh idx);
                // if that cannot beat the current worst kept key, no descendant
                // of f can enter the final kept set. Exact shortcut, the kept
                // set matches full expansion followed by one global trim.
                const CandKey worst = best.top();
                const CandKey best_child{parent_v, parent_depth + 1,
                                         static_cast<int>(cands.size())};
                if (!best_child.better_than(worst)) continue;
            }
            const auto dist = drafter.next_distribution(cand_prefix(f));
            const auto top = top_k_indices(dist, top_k);
            for (TokenId token : top) {
                DynCandidate cand;
                cand.token = token;
                cand.confidence = dist[static_cast<std::size_t>(token)];
                cand.v = parent_v * cand.confidence;
                cand.parent = f;
                cand.depth = parent_depth + 1;
                const int idx = static_cast<int>(cands.size());
                cands.push_back(cand);
                best.push(CandKey{cand.v, cand.depth, idx});
                if (best.size() > total_nodes) best.pop();
                next.push_back(idx);
            }
        }
        frontier = std::move(next);
    }

    std::vector<int> kept;
    kept.reserve(best.size());
    while (!best.empty()) {
        kept.push_back(best.top().idx);
        best.pop();
    }
    std::sort(kept.begin(), kept.end()); // creation order = topological order

    DraftTree tree;
    tree.prefix = prefix;
    tree.drafter_forward_passes = static_cast<int>(depth_budget);
    std::vector<int> cand_to_tree(cands.size(), -2);
    for (int idx : kept) {
        const auto& cand = cands[static_cast<std::size_t>(idx)];
        DraftNode node;
        node.token = cand.token;
        node.drafter_prob = cand.confidence;
        node.draw_prob = 1.0;
        node.confidence = cand.confidence;
        node.global_accept = cand.v;
        node.parent = cand.parent < 0 ? -1 : cand_to_tree[static_cast<std::size_t>(cand.parent)];
        if (cand.parent >= 0 && node.parent < 0) {
            throw std::logic_error("draft_dynamic: kept set lost an ancestor");
        }
        node.depth = cand.depth;
        cand_to_tree[static_cast<std::size_t>(idx)] = append_node(tree, node);
    }
    return tree;
}

} // namespace specdec
