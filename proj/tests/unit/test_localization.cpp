#include <filesystem>

#include <gtest/gtest.h>

#include "cac/phantom.hpp"
#include "support/shapes.hpp"

using namespace cac;

TEST(Ostia, ParsesExternalPoints) {
    const auto p = parse_ostia(R"({"valve_center":[0,0,0],"left_ostium":[10,5,2],"right_ostium":[-10,5,2]})");
    EXPECT_EQ(p.valve_center, (Vec3{0, 0, 0}));
    EXPECT_EQ(p.left_ostium, (Vec3{10, 5, 2}));
    EXPECT_EQ(p.right_ostium, (Vec3{-10, 5, 2}));
    EXPECT_EQ(p.source, PointSource::External);
    EXPECT_TRUE(p.warnings.empty());
}

TEST(Ostia, MissingFieldIsNamed) {
    try {
        parse_ostia(R"({"valve_center":[0,0,0],"right_ostium":[-10,5,2]})");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::MissingKey);
        EXPECT_EQ(e.key(), "left_ostium");
    }
}

TEST(Ostia, FarPointsWarnButParse) {
    const auto p = parse_ostia(R"({"valve_center":[0,0,0],"left_ostium":[50,0,0],"right_ostium":[-10,5,2]})");
    EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(Ostia, SaveLoadRoundTrip) {
    OstiaPoints p{{1.25, -3.5, 7.0}, {12.125, 0.1, 3.3}, {-8.0, 2.0, 1e-7}, PointSource::External, {}};
    const auto path = std::filesystem::temp_directory_path() / "cac_ostia_roundtrip.json";
    save_ostia(p, path.string());
    const auto q = load_ostia(path.string());
    std::filesystem::remove(path);
    EXPECT_LE(distance(p.valve_center, q.valve_center), 1e-6);
    EXPECT_LE(distance(p.left_ostium, q.left_ostium), 1e-6);
    EXPECT_LE(distance(p.right_ostium, q.right_ostium), 1e-6);
}

TEST(Valve, StraightTubeTieGoesToLowerZ) {
    const Grid3 g({24, 24, 40}, {1, 1, 1});
    MaskVolume tube(g, 0);
    for (int z = 4; z <= 35; ++z) {
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) {
                if ((x - 12) * (x - 12) + (y - 12) * (y - 12) <= 25) {
                    tube(x, y, z) = 1;
                }
            }
        }
    }
    const Vec3 v = estimate_valve_center(tube);
    EXPECT_LT(v.z, 20.0);
    EXPECT_NEAR(v.x, 12.0, 1e-9);
    EXPECT_NEAR(v.y, 12.0, 1e-9);
}

TEST(Valve, EmptyMaskThrows) {
    const MaskVolume m(Grid3({4, 4, 4}, {1, 1, 1}), 0);
    EXPECT_THROW(estimate_valve_center(m), InvalidInput);
}

TEST(Valve, PhantomBulbousRootWithinTwoVoxels) {
    for (std::uint64_t seed : {1u, 7u, 13u}) {
        const auto ph = generate_phantom(seed);
        const double tol = 2.0 * ph.image.grid().max_spacing();
        EXPECT_LE(distance(estimate_valve_center(ph.aorta), ph.gt_ostia.valve_center), tol) << "seed " << seed;
    }
}

TEST(OstiaEstimate, PhantomOstiaWithinTwoVoxels) {
    for (std::uint64_t seed : {2u, 9u}) {
        const auto ph = generate_phantom(seed);
        const double tol = 2.0 * ph.image.grid().max_spacing();
        const auto p = estimate_ostia(ph.aorta, ph.vessels, ph.gt_ostia.valve_center);
        EXPECT_EQ(p.source, PointSource::Geometric);
        EXPECT_LE(distance(p.left_ostium, ph.gt_ostia.left_ostium), tol) << "seed " << seed;
        EXPECT_LE(distance(p.right_ostium, ph.gt_ostia.right_ostium), tol) << "seed " << seed;
    }
}

TEST(OstiaEstimate, NoVesselsNearValveThrows) {
    const Grid3 g({60, 30, 30}, {1, 1, 1});
    const auto aorta = shapes::capsule(g, {10, 15, 5}, {10, 15, 25}, 5.0);
    const auto far = shapes::capsule(g, {50, 15, 10}, {58, 15, 10}, 1.5);
    EXPECT_THROW(estimate_ostia(aorta, far, {10, 15, 5}, 25.0), InvalidInput);
}
