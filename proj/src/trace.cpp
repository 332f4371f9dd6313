#include "specdec/trace.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace specdec {

using nlohmann::json;

std::string round_to_json(const RoundTrace& round) {
    json nodes = json::array();
    for (const auto& n : round.nodes) {
        nodes.push_back({n.id, n.parent, n.depth, n.token, n.confidence, n.global_accept});
    }
    json decisions = json::array();
    for (const auto& d : round.decisions) {
        decisions.push_back({d.node, d.token, d.accept_prob, d.accepted});
    }
    const json j = {
        {"round", round.round},
        {"tree",
         {{"nodes", round.tree.node_count},
          {"max_depth", round.tree.max_depth},
          {"mean_leaf_depth", round.tree.mean_leaf_depth},
          {"mean_fanout", round.tree.mean_fanout}}},
        {"nodes", std::move(nodes)},
        {"decisions", std::move(decisions)},
        {"accepted_len", round.accepted_len},
        {"final_token", round.final_token},
        {"bonus", round.bonus},
    };
    return j.dump();
}

RoundTrace round_from_json(const std::string& line) {
    const json j = json::parse(line);
    RoundTrace round;
    round.round = j.at("round").get<std::uint64_t>();
    const auto& tree = j.at("tree");
    round.tree.node_count = tree.at("nodes").get<std::size_t>();
    round.tree.max_depth = tree.at("max_depth").get<std::size_t>();
    round.tree.mean_leaf_depth = tree.at("mean_leaf_depth").get<double>();
    round.tree.mean_fanout = tree.at("mean_fanout").get<double>();
    for (const auto& n : j.at("nodes")) {
        round.nodes.push_back(TraceNode{n.at(0).get<int>(), n.at(1).get<int>(), n.at(2).get<int>(),
                                        n.at(3).get<TokenId>(), n.at(4).get<double>(),
                                        n.at(5).get<double>()});
    }
    for (const auto& d : j.at("decisions")) {
        round.decisions.push_back(NodeDecision{d.at(0).get<int>(), d.at(1).get<TokenId>(),
                                               d.at(2).get<double>(), d.at(3).get<bool>()});
    }
    round.accepted_len = j.at("accepted_len").get<std::size_t>();
    round.final_token = j.at("final_token").get<TokenId>();
    round.bonus = j.at("bonus").get<bool>();
    return round;
}

void JsonlTraceSink::on_round(const RoundTrace& round) { out_ << round_to_json(round) << '\n'; }

TraceReport analyze_trace(std::istream& in) {
    TraceReport report;
    std::vector<double> v_sum;
    std::vector<std::uint64_t> v_count;
    double nodes_sum = 0.0, depth_sum = 0.0, leaf_sum = 0.0, fanout_sum = 0.0, accepted_sum = 0.0;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        RoundTrace round;
        try {
            round = round_from_json(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        ++report.rounds;
        nodes_sum += static_cast<double>(round.tree.node_count);
        depth_sum += static_cast<double>(round.tree.max_depth);
        leaf_sum += round.tree.mean_leaf_depth;
        fanout_sum += round.tree.mean_fanout;
        accepted_sum += static_cast<double>(round.accepted_len);
        if (report.accepted_length_hist.size() <= round.accepted_len) {
            report.accepted_length_hist.resize(round.accepted_len + 1, 0);
        }
        report.accepted_length_hist[round.accepted_len] += 1;
        for (const auto& n : round.nodes) {
            const auto d = static_cast<std::size_t>(n.depth);
            if (v_sum.size() < d) {
                v_sum.resize(d, 0.0);
                v_count.resize(d, 0);
            }
            v_sum[d - 1] += n.global_accept;
            v_count[d - 1] += 1;
        }
    }
    if (report.rounds == 0) return report;

    const double n = static_cast<double>(report.rounds);
    report.mean_nodes = nodes_sum / n;
    report.mean_max_depth = depth_sum / n;
    report.mean_leaf_depth = leaf_sum / n;
    report.mean_fanout = fanout_sum / n;
    report.mean_accepted_len = accepted_sum / n;

    report.mean_v_by_depth.resize(v_sum.size());
    for (std::size_t d = 0; d < v_sum.size(); ++d) {
        report.mean_v_by_depth[d] =
            v_count[d] == 0 ? 0.0 : v_sum[d] / static_cast<double>(v_count[d]);
    }

    // Least-squares fit of ln(mean V) against depth over positive means.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t pts = 0;
    for (std::size_t d = 0; d < report.mean_v_by_depth.size(); ++d) {
        const double v = report.mean_v_by_depth[d];
        if (v <= 0.0) continue;
        const double x = static_cast<double>(d + 1);
        const double y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++pts;
    }
    if (pts >= 2) {
        const double denom = static_cast<double>(pts) * sxx - sx * sx;
        if (denom != 0.0) {
            report.v_decay_slope = (static_cast<double>(pts) * sxy - sx * sy) / denom;
            report.v_decay_slope_valid = true;
        }
    }
    return report;
}

std::string format_report(const TraceReport& report) {
    std::ostringstream out;
    out.precision(6);
    out << "rounds: " << report.rounds << '\n';
    if (report.rounds == 0) return out.str();
    out << "mean draft nodes per round: " << report.mean_nodes << '\n'
        << "mean tree depth: " << report.mean_max_depth << '\n'
        << "mean leaf depth: " << report.mean_leaf_depth << '\n'
        << "mean fan-out: " << report.mean_fanout << '\n'
        << "mean accepted length: " << report.mean_accepted_len << '\n';
    out << "mean global accept probability by depth:\n";
    for (std::size_t d = 0; d < report.mean_v_by_depth.size(); ++d) {
        out << "  depth " << (d + 1) << ": " << report.mean_v_by_depth[d] << '\n';
    }
    if (report.v_decay_slope_valid) {
        out << "log-linear V decay slope: " << report.v_decay_slope << '\n';
    }
    out << "accepted-length histogram:\n";
    for (std::size_t len = 0; len < report.accepted_length_hist.size(); ++len) {
        out << "  " << len << ": " << report.accepted_length_hist[len] << '\n';
    }
    return out.str();
}

namespace {

std::string svg_header(int width, int height) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

} // namespace

std::string render_v_decay_svg(const TraceReport& report) {
    constexpr int w = 480, h = 320, margin = 40;
    std::ostringstream out;
    out << svg_header(w, h);
    const auto& vs = report.mean_v_by_depth;
    if (!vs.empty()) {
        double vmax = 0.0;
        for (double v : vs) vmax = std::max(vmax, v);
        if (vmax <= 0.0) vmax = 1.0;
        out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
        for (std::size_t d = 0; d < vs.size(); ++d) {
            const double x =
                margin + (w - 2 * margin) * (vs.size() == 1 ? 0.5
                                                            : static_cast<double>(d) /
                                                                  static_cast<double>(vs.size() - 1));
            const double y = h - margin - (h - 2 * margin) * (vs[d] / vmax);
            out << x << ',' << y << ' ';
        }
        out << "\"/>\n";
    }
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">depth</text>\n"
        << "<text x=\"12\" y=\"" << h / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 " << h / 2
        << ")\">mean V</text>\n</svg>\n";
    return out.str();
}

std::string render_accept_hist_svg(const TraceReport& report) {
    constexpr int w = 480, h = 320, margin = 40;
    std::ostringstream out;
    out << svg_header(w, h);
    const auto& hist = report.accepted_length_hist;
    if (!hist.empty()) {
        std::uint64_t peak = 1;
        for (auto c : hist) peak = std::max(peak, c);
        const double bar_w = static_cast<double>(w - 2 * margin) / static_cast<double>(hist.size());
        for (std::size_t i = 0; i < hist.size(); ++i) {
            const double bh = (h - 2 * margin) * static_cast<double>(hist[i]) /
                              static_cast<double>(peak);
            out << "<rect x=\"" << margin + bar_w * static_cast<double>(i) << "\" y=\""
                << h - margin - bh << "\" width=\"" << bar_w * 0.9 << "\" height=\"" << bh
                << "\" fill=\"darkseagreen\"/>\n";
        }
    }
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">accepted length</text>\n</svg>\n";
    return out.str();
}

} // namespace specdec
