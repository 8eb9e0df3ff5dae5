#include <gtest/gtest.h>

#include "cac/phantom.hpp"
#include "cac/pipeline.hpp"

using namespace cac;

namespace {

// Straight labelled edge from a to b sampled every 0.5 mm.
GraphEdge straight_edge(int id, const Vec3& a, const Vec3& b, TerritoryCode label) {
    GraphEdge e;
    e.id = id;
    const int n = static_cast<int>(std::ceil(distance(a, b) / 0.5));
    for (int k = 0; k <= n; ++k) {
        e.path.push_back(a + (b - a) * (static_cast<double>(k) / n));
    }
    e.label = label;
    return e;
}

VesselGraph single_edge_graph(const Vec3& a, const Vec3& b, TerritoryCode label) {
    VesselGraph g;
    g.nodes = {{0, a, NodeKind::Root}, {1, b, NodeKind::Endpoint}};
    auto e = straight_edge(0, a, b, label);
    e.to = 1;
    g.edges = {e};
    g.root = 0;
    return g;
}

// Nearest labelled path point by exhaustive search; ties go to the label
// listed first in LM, LAD, LCX, RCA.
TerritoryCode oracle_label(const std::vector<const VesselGraph*>& graphs, const Vec3& p) {
    const std::array order{TerritoryCode::LM, TerritoryCode::LAD, TerritoryCode::LCX, TerritoryCode::RCA};
    std::map<TerritoryCode, double> best;
    for (const auto* g : graphs) {
        for (const auto& e : g->edges) {
            for (const auto& q : e.path) {
                const double d = (q - p).dot(q - p);
                auto it = best.find(*e.label);
                if (it == best.end() || d < it->second) {
                    best[*e.label] = d;
                }
            }
        }
    }
    TerritoryCode out = TerritoryCode::Background;
    double d = std::numeric_limits<double>::infinity();
    for (auto c : order) {
        auto it = best.find(c);
        if (it != best.end() && it->second < d) {
            d = it->second;
            out = c;
        }
    }
    return out;
}

}  // namespace

TEST(Assign, LesionNextToRcaIsRca) {
    const Grid3 g({40, 40, 10}, {0.5, 0.5, 1.0});
    const HuVolume img(g, 300);
    const auto left = single_edge_graph({0, 0, 5}, {5, 0, 5}, TerritoryCode::LAD);
    const auto right = single_edge_graph({0, 15, 5}, {18, 15, 5}, TerritoryCode::RCA);
    const auto l = make_lesion(1, {{20, 28, 5}, {21, 28, 5}, {20, 29, 5}}, img);
    const auto a = assign_territories({l}, left, right);
    ASSERT_EQ(a.size(), 1u);
    for (auto c : a[0].voxel_labels) {
        EXPECT_EQ(c, TerritoryCode::RCA);
    }
}

TEST(Assign, EquidistantVoxelTakesUpstreamLabel) {
    const Grid3 g({21, 5, 5}, {1, 1, 1});
    const HuVolume img(g, 300);
    VesselGraph left;
    left.nodes = {{0, {0, 0, 0}, NodeKind::Root}, {1, {20, 0, 0}, NodeKind::Endpoint}};
    auto e0 = straight_edge(0, {0, 0, 0}, {0, 0, 1}, TerritoryCode::LCX);
    auto e1 = straight_edge(1, {20, 0, 0}, {20, 0, 1}, TerritoryCode::LAD);
    left.edges = {e0, e1};
    left.root = 0;
    const VesselGraph right;
    const auto a = assign_territories({make_lesion(1, {{10, 0, 0}}, img)}, left, right);
    EXPECT_EQ(a[0].voxel_labels[0], TerritoryCode::LAD);
}

TEST(Assign, EmptyTreesThrow) {
    const Grid3 g({4, 4, 4}, {1, 1, 1});
    const HuVolume img(g, 300);
    EXPECT_THROW(assign_territories({make_lesion(1, {{1, 1, 1}}, img)}, VesselGraph{}, VesselGraph{}), InvalidInput);
}

TEST(Assign, PhantomJunctionLesionMatchesBruteForce) {
    const auto ph = generate_phantom(3);
    const auto r = run_pipeline(ph.image, ph.pericardium, ph.aorta, ph.vessels);
    const auto& gl = r.graph_left;
    const int lm = gl.out_edges(gl.root).at(0);
    const Vec3 junction = gl.nodes[static_cast<std::size_t>(gl.edges[static_cast<std::size_t>(lm)].to)].position;
    const Grid3& g = ph.image.grid();
    const Index3 c = g.to_voxel(junction);
    std::vector<Index3> voxels;
    for (int dz = -3; dz <= 3; ++dz) {
        for (int dy = -6; dy <= 6; ++dy) {
            for (int dx = -6; dx <= 6; ++dx) {
                voxels.push_back(c + Index3{dx, dy, dz});
            }
        }
    }
    const auto a = assign_territories({make_lesion(1, voxels, ph.image)}, gl, r.graph_right);
    std::set<TerritoryCode> seen;
    for (std::size_t k = 0; k < a[0].lesion.voxels.size(); ++k) {
        const Vec3 p = g.to_world(a[0].lesion.voxels[k]);
        ASSERT_EQ(a[0].voxel_labels[k], oracle_label({&gl, &r.graph_right}, p)) << "voxel " << k;
        seen.insert(a[0].voxel_labels[k]);
    }
    EXPECT_GE(seen.size(), 3u);
}

TEST(Relabel, LmBecomesLadAndIsIdempotent) {
    const Grid3 g({4, 4, 4}, {1, 1, 1});
    const HuVolume img(g, 300);
    LabeledLesion all_lm{make_lesion(1, {{0, 0, 0}, {1, 0, 0}}, img), {TerritoryCode::LM, TerritoryCode::LM}};
    LabeledLesion mixed{make_lesion(2, {{3, 3, 3}, {3, 2, 3}}, img), {TerritoryCode::RCA, TerritoryCode::LCX}};
    const auto once = relabel_lm_to_lad({all_lm, mixed});
    EXPECT_EQ(once[0].voxel_labels, (std::vector{TerritoryCode::LAD, TerritoryCode::LAD}));
    EXPECT_EQ(once[1].voxel_labels, mixed.voxel_labels);
    const auto twice = relabel_lm_to_lad(once);
    for (std::size_t k = 0; k < once.size(); ++k) {
        EXPECT_EQ(twice[k].voxel_labels, once[k].voxel_labels);
    }
}

TEST(LabelMap, AorticPartsAndCoronaryCodes) {
    const Grid3 g({4, 4, 4}, {1, 1, 1});
    const HuVolume img(g, 300);
    LabeledLesion l{make_lesion(1, {{0, 0, 0}, {1, 0, 0}}, img), {TerritoryCode::LM, TerritoryCode::LAD}};
    const auto m = label_map(g, {l}, {make_lesion(2, {{3, 3, 3}}, img)});
    EXPECT_EQ(m(0, 0, 0), static_cast<std::uint8_t>(TerritoryCode::LM));
    EXPECT_EQ(m(1, 0, 0), static_cast<std::uint8_t>(TerritoryCode::LAD));
    EXPECT_EQ(m(3, 3, 3), static_cast<std::uint8_t>(TerritoryCode::Aorta));
    EXPECT_EQ(count_nonzero(m), 3u);
}
