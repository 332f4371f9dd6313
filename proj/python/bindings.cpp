#include "specdec/acceptance.hpp"
#include "specdec/codebook.hpp"
#include "specdec/distributions.hpp"
#include "specdec/draft_tree.hpp"
#include "specdec/engine.hpp"
#include "specdec/experiment.hpp"
#include "specdec/models.hpp"
#include "specdec/rng.hpp"
#include "specdec/trace.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace specdec;

namespace {

/// Lets python code implement the oracle contract (used by the smoke tests
/// to build tiny hand-rolled models).
class PyModelOracle : public ModelOracle {
public:
    using ModelOracle::ModelOracle;

    std::size_t vocab_size() const override {
        PYBIND11_OVERRIDE_PURE(std::size_t, ModelOracle, vocab_size);
    }

    CategoricalDistribution next_distribution(std::span<const TokenId> prefix) const override {
        const TokenSequence tokens(prefix.begin(), prefix.end());
        PYBIND11_OVERRIDE_PURE(CategoricalDistribution, ModelOracle, next_distribution, tokens);
    }
};

} // namespace

PYBIND11_MODULE(_specdec, m) {
    m.doc() = "speculative decoding laboratory on synthetic model oracles";

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
        .def("uniform01", &Rng::uniform01)
        .def("normal", &Rng::normal)
        .def("next_u64", &Rng::next_u64);

    py::class_<CategoricalDistribution>(m, "CategoricalDistribution")
        .def(py::init<std::vector<double>>(), py::arg("probs"))
        .def_static("from_weights", &CategoricalDistribution::from_weights)
        .def_property_readonly("probs", &CategoricalDistribution::probs)
        .def("__len__", &CategoricalDistribution::size)
        .def("__getitem__",
             [](const CategoricalDistribution& d, std::size_t i) {
                 if (i >= d.size()) throw py::index_error();
                 return d[i];
             });

    m.def("sample", [](const CategoricalDistribution& d, Rng& rng) { return sample(d, rng); });
    m.def("tvd", &tvd);
    m.def("residual", [](const CategoricalDistribution& q, const CategoricalDistribution& p) {
        return residual(q, p); // nullopt maps to None
    });
    m.def("top_k_indices", &top_k_indices);

    py::class_<NeighborSet>(m, "NeighborSet")
        .def_readonly("center", &NeighborSet::center)
        .def_readonly("members", &NeighborSet::members);

    py::class_<Codebook>(m, "Codebook")
        .def(py::init<std::vector<std::vector<double>>>(), py::arg("codes"))
        .def_static("synthetic", &Codebook::synthetic, py::arg("vocab_size"), py::arg("dim"),
                    py::arg("seed"))
        .def_static("loads",
                    [](const std::string& text) {
                        std::istringstream in(text);
                        return Codebook::load(in);
                    })
        .def("dumps",
             [](const Codebook& cb) {
                 std::ostringstream out;
                 cb.save(out);
                 return out.str();
             })
        .def("__len__", &Codebook::size)
        .def_property_readonly("dim", &Codebook::dim)
        .def("code", &Codebook::code)
        .def("squared_distance", &Codebook::squared_distance)
        .def("nearest_neighbors", &Codebook::nearest_neighbors, py::arg("center"), py::arg("k"));

    m.def("refined_subset_additive", &refined_subset_additive);
    m.def("refined_subset_multiplicative", &refined_subset_multiplicative);
    m.def("aggregated_mass", &aggregated_mass);

    py::class_<ModelOracle, PyModelOracle, std::shared_ptr<ModelOracle>>(m, "ModelOracle")
        .def(py::init<>())
        .def("vocab_size", &ModelOracle::vocab_size)
        .def("next_distribution", [](const ModelOracle& o, const TokenSequence& prefix) {
            return o.next_distribution(prefix);
        });

    py::class_<SyntheticFamilyConfig>(m, "SyntheticFamilyConfig")
        .def(py::init<>())
        .def_readwrite("vocab_size", &SyntheticFamilyConfig::vocab_size)
        .def_readwrite("concentration", &SyntheticFamilyConfig::concentration)
        .def_readwrite("drafter_noise", &SyntheticFamilyConfig::drafter_noise)
        .def_readwrite("context_hash_depth", &SyntheticFamilyConfig::context_hash_depth)
        .def_readwrite("seed", &SyntheticFamilyConfig::seed);

    m.def("make_synthetic_pair", [](const SyntheticFamilyConfig& cfg) {
        const auto pair = make_synthetic_pair(cfg);
        return py::make_tuple(pair.target, pair.drafter);
    });
    m.def("family_preset", [](const std::string& name, SyntheticFamilyConfig base) {
        return family_preset(name, base);
    });

    py::class_<MaxProbProfile>(m, "MaxProbProfile")
        .def_readonly("mean", &MaxProbProfile::mean)
        .def_readonly("median", &MaxProbProfile::median);
    m.def("max_prob_profile", [](const ModelOracle& model, std::size_t samples, Rng& rng) {
        return max_prob_profile(model, samples, rng);
    });

    py::class_<StaticTreeSpec>(m, "StaticTreeSpec")
        .def_property_readonly("node_count", &StaticTreeSpec::node_count)
        .def_property_readonly("depth", &StaticTreeSpec::depth)
        .def("dump", &StaticTreeSpec::dump);
    m.def("load_tree_spec", &load_tree_spec);
    m.def("tree_preset_names", &tree_preset_names);
    m.def("tree_preset", [](const std::string& name) { return tree_preset(name); });

    py::enum_<DraftMode>(m, "DraftMode")
        .value("Sampled", DraftMode::Sampled)
        .value("TopRank", DraftMode::TopRank);

    py::class_<DraftNode>(m, "DraftNode")
        .def_readonly("token", &DraftNode::token)
        .def_readonly("drafter_prob", &DraftNode::drafter_prob)
        .def_readonly("draw_prob", &DraftNode::draw_prob)
        .def_readonly("confidence", &DraftNode::confidence)
        .def_readonly("global_accept", &DraftNode::global_accept)
        .def_readonly("parent", &DraftNode::parent)
        .def_readonly("depth", &DraftNode::depth);

    py::class_<DraftTree>(m, "DraftTree")
        .def_readonly("prefix", &DraftTree::prefix)
        .def_readonly("nodes", &DraftTree::nodes)
        .def_readonly("drafter_forward_passes", &DraftTree::drafter_forward_passes)
        .def("max_depth", &DraftTree::max_depth);

    py::class_<TreeStats>(m, "TreeStats")
        .def_readonly("node_count", &TreeStats::node_count)
        .def_readonly("max_depth", &TreeStats::max_depth)
        .def_readonly("mean_leaf_depth", &TreeStats::mean_leaf_depth)
        .def_readonly("mean_fanout", &TreeStats::mean_fanout);
    m.def("tree_stats", &tree_stats);

    m.def("draft_static",
          [](const ModelOracle& drafter, const TokenSequence& prefix, const StaticTreeSpec& spec,
             Rng& rng, DraftMode mode) { return draft_static(drafter, prefix, spec, rng, mode); },
          py::arg("drafter"), py::arg("prefix"), py::arg("spec"), py::arg("rng"),
          py::arg("mode") = DraftMode::Sampled);
    m.def("draft_dynamic",
          [](const ModelOracle& drafter, const TokenSequence& prefix, std::size_t top_k,
             std::size_t total_nodes, std::size_t depth_budget) {
              return draft_dynamic(drafter, prefix, top_k, total_nodes, depth_budget);
          });

    py::class_<AcceptanceRule>(m, "AcceptanceRule")
        .def_static("exact", &AcceptanceRule::exact)
        .def_static("additive", &AcceptanceRule::additive, py::arg("k"), py::arg("delta"),
                    py::arg("codebook"), py::keep_alive<0, 3>())
        .def_static("multiplicative", &AcceptanceRule::multiplicative, py::arg("k"),
                    py::arg("lambda_"), py::arg("codebook"), py::keep_alive<0, 3>())
        .def("describe", &AcceptanceRule::describe)
        .def("refined_subset", &AcceptanceRule::refined_subset);

    m.def("accept_probability", &accept_probability);
    m.def("adjusted_target", &adjusted_target);
    m.def("relaxation_ratio", &relaxation_ratio);

    py::class_<NodeDecision>(m, "NodeDecision")
        .def_readonly("node", &NodeDecision::node)
        .def_readonly("token", &NodeDecision::token)
        .def_readonly("accept_prob", &NodeDecision::accept_prob)
        .def_readonly("accepted", &NodeDecision::accepted);

    py::class_<VerificationOutcome>(m, "VerificationOutcome")
        .def_readonly("accepted", &VerificationOutcome::accepted)
        .def_readonly("final_token", &VerificationOutcome::final_token)
        .def_readonly("fully_accepted", &VerificationOutcome::fully_accepted)
        .def_readonly("target_forward_passes", &VerificationOutcome::target_forward_passes)
        .def_readonly("trace", &VerificationOutcome::trace)
        .def("committed", &VerificationOutcome::committed);

    py::class_<ChainDraft>(m, "ChainDraft")
        .def(py::init([](TokenId token, double drafter_prob) {
                 return ChainDraft{token, drafter_prob};
             }),
             py::arg("token"), py::arg("drafter_prob"))
        .def_readonly("token", &ChainDraft::token)
        .def_readonly("drafter_prob", &ChainDraft::drafter_prob);

    m.def("verify_chain",
          [](const AcceptanceRule& rule, const ModelOracle& target, const ModelOracle& drafter,
             const TokenSequence& prefix, const std::vector<ChainDraft>& drafts, Rng& rng) {
              return verify_chain(rule, target, drafter, prefix, drafts, rng);
          });
    m.def("verify_tree",
          [](const AcceptanceRule& rule, const ModelOracle& target, const ModelOracle& drafter,
             const DraftTree& tree, Rng& rng) {
              return verify_tree(rule, target, drafter, tree, rng);
          });

    py::class_<BaselineMethod>(m, "BaselineMethod").def(py::init<>());
    py::class_<ChainMethod>(m, "ChainMethod")
        .def(py::init([](int gamma) { return ChainMethod{gamma}; }), py::arg("gamma"))
        .def_readwrite("gamma", &ChainMethod::gamma);
    py::class_<StaticTreeMethod>(m, "StaticTreeMethod")
        .def(py::init([](const std::string& preset, DraftMode mode) {
                 return StaticTreeMethod{std::make_shared<StaticTreeSpec>(tree_preset(preset)),
                                         preset, mode};
             }),
             py::arg("preset"), py::arg("mode") = DraftMode::Sampled);
    py::class_<DynamicTreeMethod>(m, "DynamicTreeMethod")
        .def(py::init([](std::size_t top_k, std::size_t total_nodes, std::size_t depth_budget) {
                 return DynamicTreeMethod{top_k, total_nodes, depth_budget};
             }),
             py::arg("top_k"), py::arg("total_nodes"), py::arg("depth_budget"));

    py::class_<SessionConfig>(m, "SessionConfig")
        .def(py::init<>())
        .def_readwrite("token_budget", &SessionConfig::token_budget)
        .def_readwrite("rule", &SessionConfig::rule)
        .def_readwrite("seed", &SessionConfig::seed)
        .def_readwrite("label", &SessionConfig::label)
        .def_property(
            "method", [](const SessionConfig& cfg) { return cfg.method; },
            [](SessionConfig& cfg, const DecodeMethod& m) { cfg.method = m; });

    py::class_<DecodeMetrics>(m, "DecodeMetrics")
        .def_readonly("tokens_generated", &DecodeMetrics::tokens_generated)
        .def_readonly("decoding_steps", &DecodeMetrics::decoding_steps)
        .def_readonly("drafter_passes", &DecodeMetrics::drafter_passes)
        .def_readonly("accepted_length_hist", &DecodeMetrics::accepted_length_hist)
        .def("step_compression", &DecodeMetrics::step_compression)
        .def("mean_accepted_length", &DecodeMetrics::mean_accepted_length)
        .def("mean_tree_depth", &DecodeMetrics::mean_tree_depth)
        .def("latency_proxy", &DecodeMetrics::latency_proxy);

    py::class_<SessionResult>(m, "SessionResult")
        .def_readonly("tokens", &SessionResult::tokens)
        .def_readonly("metrics", &SessionResult::metrics);

    m.def("run_session",
          [](const SessionConfig& cfg, const ModelOracle& target, const ModelOracle& drafter) {
              return run_session(cfg, target, drafter, nullptr);
          });

    py::class_<CellResult>(m, "CellResult")
        .def_readonly("method", &CellResult::method)
        .def_readonly("tree", &CellResult::tree)
        .def_readonly("k", &CellResult::k)
        .def_readonly("lambda_", &CellResult::lambda)
        .def_readonly("delta", &CellResult::delta)
        .def_readonly("trials", &CellResult::trials)
        .def_readonly("mean_S", &CellResult::mean_S)
        .def_readonly("stderr_S", &CellResult::stderr_S)
        .def_readonly("mean_accept_len", &CellResult::mean_accept_len)
        .def_readonly("mean_tree_depth", &CellResult::mean_tree_depth)
        .def_readonly("drafter_passes_per_token", &CellResult::drafter_passes_per_token);

    m.def("compare_methods",
          [](const std::vector<SessionConfig>& grid, const ModelOracle& target,
             const ModelOracle& drafter, std::size_t trials, std::uint64_t seed, int threads) {
              return compare_methods(grid, target, drafter, trials, seed, threads, nullptr);
          },
          py::arg("grid"), py::arg("target"), py::arg("drafter"), py::arg("trials"),
          py::arg("seed"), py::arg("threads") = 1);
    m.def("cells_to_csv", &cells_to_csv);
}
