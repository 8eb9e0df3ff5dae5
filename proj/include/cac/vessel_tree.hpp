#pragma once

// Anatomical labelling of rooted vessel graphs and graph export.

#include <numbers>

#include <json.hpp>

#include "cac/branch_classifier.hpp"
#include "cac/vessel_graph.hpp"

namespace cac {

/// Same features with an explicit incoming direction (for children of the
/// root, which have no parent edge).
inline BranchFeatures branch_features(const VesselGraph& g, const GraphEdge& child, const Vec3& incoming) {
    const double cosang = std::clamp(incoming.dot(child.direction_in), -1.0, 1.0);
    return {std::acos(cosang) * 180.0 / std::numbers::pi, child.mean_radius_mm, g.subtree_length(child.id)};
}

/// Features of `child` relative to `parent`: angle between the parent's
/// outgoing and the child's incoming direction, child mean radius and the
/// total length of the child's subtree.
inline BranchFeatures extract_branch_features(const VesselGraph& g, int parent_edge, int child_edge) {
    const auto n = static_cast<int>(g.edges.size());
    if (parent_edge < 0 || parent_edge >= n || child_edge < 0 || child_edge >= n) {
        throw InvalidInput("edge id out of range");
    }
    const auto& p = g.edges[static_cast<std::size_t>(parent_edge)];
    const auto& c = g.edges[static_cast<std::size_t>(child_edge)];
    if (p.to != c.from) {
        throw InvalidInput("edges " + std::to_string(parent_edge) + " and " + std::to_string(child_edge) +
                           " are not adjacent");
    }
    return branch_features(g, c, p.direction_out);
}

inline constexpr double kMajorBranchRatio = 0.5;

/// Assigns a territory to every edge. Right trees are entirely RCA. Left
/// trees are LM from the root down to the first node with at least two
/// children whose radius is >= half the largest child radius; there the
/// child with the highest LAD probability becomes LAD and all other children
/// LCX. Subtrees inherit the label of their stem. Side branches above that
/// node stay LM.
inline VesselGraph label_tree(VesselGraph g, OstiumSide side, const BranchClassifier& c = default_branch_classifier()) {
    if (!g.rooted()) {
        throw InvalidInput("graph has no root");
    }
    if (side == OstiumSide::Right) {
        for (auto& e : g.edges) {
            e.label = TerritoryCode::RCA;
        }
        return g;
    }
    auto paint = [&](int edge, TerritoryCode code) {
        std::deque<int> q{edge};
        while (!q.empty()) {
            auto& e = g.edges[static_cast<std::size_t>(q.front())];
            q.pop_front();
            e.label = code;
            for (int k : g.out_edges(e.to)) {
                q.push_back(k);
            }
        }
    };
    int node = g.root;
    std::optional<int> incoming;
    while (true) {
        const auto kids = g.out_edges(node);
        if (kids.empty()) {
            break;
        }
        double max_r = 0.0;
        for (int k : kids) {
            max_r = std::max(max_r, g.edges[static_cast<std::size_t>(k)].mean_radius_mm);
        }
        std::vector<int> major;
        for (int k : kids) {
            if (g.edges[static_cast<std::size_t>(k)].mean_radius_mm >= kMajorBranchRatio * max_r) {
                major.push_back(k);
            }
        }
        if (major.size() >= 2) {
            const Vec3 in_dir = incoming ? g.edges[static_cast<std::size_t>(*incoming)].direction_out : Vec3{};
            int lad = kids.front();
            double best = -1.0;
            for (int k : kids) {
                const auto& e = g.edges[static_cast<std::size_t>(k)];
                const BranchFeatures f = incoming ? branch_features(g, e, in_dir) : BranchFeatures{0.0, e.mean_radius_mm, g.subtree_length(k)};
                const double p = classify_branch(c, f).probability;
                if (p > best) {
                    best = p;
                    lad = k;
                }
            }
            for (int k : kids) {
                paint(k, k == lad ? TerritoryCode::LAD : TerritoryCode::LCX);
            }
            break;
        }
        const int trunk = major.front();
        for (int k : kids) {
            if (k != trunk) {
                paint(k, TerritoryCode::LM);
            }
        }
        g.edges[static_cast<std::size_t>(trunk)].label = TerritoryCode::LM;
        incoming = trunk;
        node = g.edges[static_cast<std::size_t>(trunk)].to;
    }
    return g;
}

/// Bridges the vessel mask from `ostium`, skeletonizes the reached tree and
/// labels it.
template <class T>
VesselGraph build_labeled_tree(const Volume<T>& vessels, const Vec3& ostium, OstiumSide side, double max_gap_mm = 10.0,
                               const BranchClassifier& c = default_branch_classifier()) {
    const auto tree = bridge_components_detailed(vessels, ostium, max_gap_mm);
    return label_tree(build_skeleton_graph(tree.mask, ostium, &tree.bridges), side, c);
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::ordered_json graph_to_json(const VesselGraph& g) {
    auto arr = [](const Vec3& v) { return nlohmann::ordered_json::array({v.x, v.y, v.z}); };
    nlohmann::ordered_json j;
    j["root"] = g.root;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes) {
        nlohmann::ordered_json jn;
        jn["id"] = n.id;
        jn["position"] = arr(n.position);
        jn["kind"] = std::string(to_string(n.kind));
        j["nodes"].push_back(jn);
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges) {
        nlohmann::ordered_json je;
        je["id"] = e.id;
        je["from"] = e.from;
        je["to"] = e.to;
        je["length_mm"] = e.length_mm;
        je["mean_radius_mm"] = e.mean_radius_mm;
        je["direction_in"] = arr(e.direction_in);
        je["direction_out"] = arr(e.direction_out);
        je["label"] = edge_label_string(e);
        je["virtual"] = e.is_virtual;
        je["path"] = nlohmann::ordered_json::array();
        for (const auto& p : e.path) {
            je["path"].push_back(arr(p));
        }
        j["edges"].push_back(je);
    }
    return j;
}

inline std::string graph_dot(const VesselGraph& g, std::string_view name = "vessels") {
    std::ostringstream os;
    os << "digraph " << name << " {\n";
    for (const auto& n : g.nodes) {
        os << "  n" << n.id << " [label=\"" << n.id << " " << to_string(n.kind) << "\"];\n";
    }
    for (const auto& e : g.edges) {
        os << "  n" << e.from << " -> n" << e.to << " [label=\"" << edge_label_string(e) << " "
           << static_cast<long>(std::lround(e.length_mm)) << "mm\"" << (e.is_virtual ? " style=dashed" : "") << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace cac
