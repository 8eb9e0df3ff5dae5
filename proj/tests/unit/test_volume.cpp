#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cac/metaimage.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace cac;

namespace {

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "cac_unit_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::string header_4x4x4(const std::string& element_type = "MET_SHORT") {
    return "ObjectType = Image\n"
           "NDims = 3\n"
           "DimSize = 4 4 4\n"
           "ElementSpacing = 0.5 0.5 3.0\n"
           "Offset = 0 0 0\n"
           "ElementType = " +
           element_type + "\nElementDataFile = LOCAL\n";
}

}  // namespace

TEST(Grid, VoxelToWorldIdentitySpacing) {
    const Grid3 g({5, 5, 5}, {1, 1, 1});
    EXPECT_EQ(voxel_to_world(g, {2, 3, 4}), (Vec3{2, 3, 4}));
}

TEST(Grid, VoxelToWorldAnisotropic) {
    const Grid3 g({8, 8, 8}, {0.5, 0.5, 3}, {-10, 0, 5});
    EXPECT_EQ(voxel_to_world(g, {2, 3, 4}), (Vec3{-9, 1.5, 17}));
}

TEST(Grid, WorldToVoxelInvertsForAllIndices) {
    const Grid3 g({6, 5, 4}, {0.7, 0.3, 2.5}, {-3.1, 12.0, 0.25});
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const Index3 idx = g.index(i);
        EXPECT_EQ(world_to_voxel(g, voxel_to_world(g, idx)), idx);
    }
}

TEST(Grid, VoxelToWorldIsAffine) {
    const Grid3 g({6, 5, 4}, {0.7, 0.3, 2.5}, {-3.1, 12.0, 0.25});
    const Index3 i{1, 2, 3};
    const Index3 j{4, -2, 7};
    const Vec3 d = voxel_to_world(g, i + j) - voxel_to_world(g, i);
    EXPECT_NEAR(d.x, j.x * 0.7, 1e-12);
    EXPECT_NEAR(d.y, j.y * 0.3, 1e-12);
    EXPECT_NEAR(d.z, j.z * 2.5, 1e-12);
}

TEST(Grid, RejectsInvalidDimsAndSpacing) {
    EXPECT_THROW(Grid3({0, 1, 1}, {1, 1, 1}), InvalidInput);
    EXPECT_THROW(Grid3({1, 1, 1}, {1, 0, 1}), InvalidInput);
}

TEST(Grid, AssertSameGrid) {
    const Grid3 a({4, 4, 4}, {0.5, 0.5, 3});
    EXPECT_NO_THROW(assert_same_grid(a, a));
    try {
        assert_same_grid(a, Grid3({4, 4, 5}, {0.5, 0.5, 3}));
        FAIL() << "expected mismatch";
    } catch (const GridMismatchError& e) {
        EXPECT_EQ(e.field(), "dims");
    }
    EXPECT_NO_THROW(assert_same_grid(a, Grid3({4, 4, 4}, {0.5 + 1e-6, 0.5, 3})));
    try {
        assert_same_grid(a, Grid3({4, 4, 4}, {0.5, 0.5, 3}, {0, 0.001, 0}));
        FAIL() << "expected mismatch";
    } catch (const GridMismatchError& e) {
        EXPECT_EQ(e.field(), "origin");
    }
}

TEST(Volume, CropPreservesWorldCoordinates) {
    const Grid3 g({6, 5, 4}, {0.7, 0.3, 2.5}, {-3.1, 12.0, 0.25});
    Volume<int> v(g, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<int>(i);
    }
    const Box3 box{{1, 1, 1}, {3, 4, 2}};
    const auto c = crop(v, box);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Index3 local = c.grid().index(i);
        const Index3 global = local + box.lo;
        EXPECT_EQ(c[i], v.at(global));
        const Vec3 a = c.grid().to_world(local);
        const Vec3 b = g.to_world(global);
        EXPECT_NEAR(a.x, b.x, 1e-12);
        EXPECT_NEAR(a.y, b.y, 1e-12);
        EXPECT_NEAR(a.z, b.z, 1e-12);
    }
}

TEST(MetaImage, ReadsHeaderAndPayload) {
    const auto p = temp_path("read.mha");
    std::string payload(64 * 2, '\0');
    for (int i = 0; i < 64; ++i) {
        const auto v = static_cast<std::int16_t>(i * 10 - 300);
        std::memcpy(&payload[static_cast<std::size_t>(i) * 2], &v, 2);
    }
    write_text(p, header_4x4x4() + payload);
    const auto v = read_metaimage_as<std::int16_t>(p.string());
    EXPECT_EQ(v.dims(), (Index3{4, 4, 4}));
    EXPECT_EQ(v.grid().spacing(), (Vec3{0.5, 0.5, 3.0}));
    EXPECT_EQ(v[5], 50 - 300);
}

TEST(MetaImage, HeaderKeyOrderIsIrrelevant) {
    const auto p = temp_path("order.mha");
    const std::string header =
        "ElementType = MET_UCHAR\nOffset = 1 2 3\nDimSize = 2 2 2\nNDims = 3\n"
        "ElementSpacing = 1 1 1\nObjectType = Image\nElementDataFile = LOCAL\n";
    write_text(p, header + std::string(8, '\1'));
    const auto v = read_metaimage_as<std::uint8_t>(p.string());
    EXPECT_EQ(v.grid().origin(), (Vec3{1, 2, 3}));
    EXPECT_EQ(count_nonzero(v), 8u);
}

TEST(MetaImage, TruncatedPayloadIsDataLengthError) {
    const auto p = temp_path("trunc.mha");
    write_text(p, header_4x4x4() + std::string(63 * 2, '\0'));
    try {
        read_metaimage(p.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::DataLength);
        EXPECT_EQ(e.key(), "DimSize");
    }
}

TEST(MetaImage, MissingMandatoryKeyIsNamed) {
    const auto p = temp_path("missing.mha");
    write_text(p, "ObjectType = Image\nNDims = 3\nDimSize = 2 2 2\nOffset = 0 0 0\n"
                  "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n" +
                      std::string(8, '\0'));
    try {
        read_metaimage(p.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::MissingKey);
        EXPECT_EQ(e.key(), "ElementSpacing");
    }
}

TEST(MetaImage, UnsupportedElementTypeIsNamed) {
    const auto p = temp_path("badtype.mha");
    write_text(p, header_4x4x4("MET_DOUBLE") + std::string(64 * 8, '\0'));
    try {
        read_metaimage(p.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::UnsupportedValue);
        EXPECT_EQ(e.key(), "ElementType");
    }
}

TEST(MetaImage, NonIdentityTransformIsRejected) {
    const auto p = temp_path("oblique.mha");
    write_text(p, "TransformMatrix = 0 1 0 1 0 0 0 0 1\n" + header_4x4x4("MET_UCHAR") + std::string(64, '\0'));
    try {
        read_metaimage(p.string());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.key(), "TransformMatrix");
    }
    write_text(p, "TransformMatrix = 1 0 0 0 1 0 0 0 1\n" + header_4x4x4("MET_UCHAR") + std::string(64, '\0'));
    EXPECT_NO_THROW(read_metaimage(p.string()));
}

TEST(MetaImage, BigEndianIsRejected) {
    const auto p = temp_path("msb.mha");
    write_text(p, "BinaryDataByteOrderMSB = True\n" + header_4x4x4("MET_UCHAR") + std::string(64, '\0'));
    EXPECT_THROW(read_metaimage(p.string()), ParseError);
}

TEST(MetaImage, AllZeroMaskWritesEightZeroBytesAfterHeader) {
    const auto p = temp_path("zeros.mha");
    const MaskVolume m(Grid3({2, 2, 2}, {1, 1, 1}), 0);
    write_metaimage(m, p.string());
    const std::string bytes = slurp(p);
    const std::string header = metaimage_header<std::uint8_t>(m.grid());
    ASSERT_EQ(bytes.size(), header.size() + 8);
    EXPECT_EQ(bytes.substr(0, header.size()), header);
    EXPECT_EQ(bytes.substr(header.size()), std::string(8, '\0'));
}

template <class T>
void expect_round_trip(const Volume<T>& v, const std::string& name) {
    const auto p = temp_path(name);
    write_metaimage(v, p.string());
    const auto back = read_metaimage_as<T>(p.string());
    EXPECT_EQ(back, v);
    const auto p2 = temp_path("again_" + name);
    write_metaimage(back, p2.string());
    EXPECT_EQ(slurp(p), slurp(p2));
}

TEST(MetaImage, RoundTripIsBitExactForEveryElementKind) {
    std::mt19937_64 rng(7);
    const Grid3 g({5, 3, 7}, {0.488281, 0.488281, 3.0}, {-124.755859, -301.25, 1017.5});
    HuVolume hu(g);
    MaskVolume mask(g);
    FloatVolume real(g);
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        hu[i] = static_cast<std::int16_t>(static_cast<int>(rng() % 65536) - 32768);
        mask[i] = static_cast<std::uint8_t>(rng() % 2);
        real[i] = static_cast<float>(oracle::uniform01(rng) * 1e6 - 5e5);
    }
    real[0] = -0.0f;
    real[1] = std::numeric_limits<float>::denorm_min();
    expect_round_trip(hu, "hu.mha");
    expect_round_trip(mask, "mask.mha");
    expect_round_trip(real, "real.mha");
}
