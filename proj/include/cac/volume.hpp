#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cac/error.hpp"

namespace cac {

/// World-space point or direction, millimetres.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? *this / n : Vec3{};
    }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Integer voxel index. Ordering is lexicographic (x, y, z), which is the
/// tie-break order used throughout the library.
struct Index3 {
    int x = 0;
    int y = 0;
    int z = 0;

    constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr Index3 operator+(const Index3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Index3 operator-(const Index3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr auto operator<=>(const Index3&) const = default;
};

/// Geometry of a voxel grid: dimensions, per-axis spacing (mm) and the world
/// position of the centre of voxel (0,0,0). Orientation is always identity.
class Grid3 {
  public:
    Grid3() = default;

    Grid3(Index3 dims, Vec3 spacing, Vec3 origin = {}) : dims_(dims), spacing_(spacing), origin_(origin) {
        for (int a = 0; a < 3; ++a) {
            if (dims_[a] < 1) {
                throw InvalidInput("grid dimensions must be >= 1");
            }
            if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
                throw InvalidInput("grid spacing must be finite and > 0");
            }
        }
    }

    const Index3& dims() const { return dims_; }
    const Vec3& spacing() const { return spacing_; }
    const Vec3& origin() const { return origin_; }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims_.x) * static_cast<std::size_t>(dims_.y) *
               static_cast<std::size_t>(dims_.z);
    }
    std::size_t slice_size() const { return static_cast<std::size_t>(dims_.x) * static_cast<std::size_t>(dims_.y); }
    double voxel_volume() const { return spacing_.x * spacing_.y * spacing_.z; }
    double max_spacing() const { return std::max({spacing_.x, spacing_.y, spacing_.z}); }

    bool contains(const Index3& i) const {
        return i.x >= 0 && i.y >= 0 && i.z >= 0 && i.x < dims_.x && i.y < dims_.y && i.z < dims_.z;
    }

    /// x-fastest linear offset.
    std::size_t linear(const Index3& i) const {
        return static_cast<std::size_t>(i.x) +
               static_cast<std::size_t>(dims_.x) *
                   (static_cast<std::size_t>(i.y) + static_cast<std::size_t>(dims_.y) * static_cast<std::size_t>(i.z));
    }

    Index3 index(std::size_t linear_offset) const {
        const auto nx = static_cast<std::size_t>(dims_.x);
        const auto ny = static_cast<std::size_t>(dims_.y);
        return {static_cast<int>(linear_offset % nx), static_cast<int>((linear_offset / nx) % ny),
                static_cast<int>(linear_offset / (nx * ny))};
    }

    Vec3 to_world(const Index3& i) const {
        return {origin_.x + i.x * spacing_.x, origin_.y + i.y * spacing_.y, origin_.z + i.z * spacing_.z};
    }

    /// Nearest voxel index; not clamped to the grid.
    Index3 to_voxel(const Vec3& p) const {
        return {static_cast<int>(std::lround((p.x - origin_.x) / spacing_.x)),
                static_cast<int>(std::lround((p.y - origin_.y) / spacing_.y)),
                static_cast<int>(std::lround((p.z - origin_.z) / spacing_.z))};
    }

    /// Sub-grid covering [lo, hi] (inclusive) with the origin moved so world
    /// coordinates of shared voxels are unchanged.
    Grid3 sub_grid(const Index3& lo, const Index3& hi) const {
        return Grid3({hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1}, spacing_, to_world(lo));
    }

    bool operator==(const Grid3&) const = default;

  private:
    Index3 dims_{1, 1, 1};
    Vec3 spacing_{1.0, 1.0, 1.0};
    Vec3 origin_{};
};

inline Vec3 voxel_to_world(const Grid3& g, const Index3& i) { return g.to_world(i); }
inline Index3 world_to_voxel(const Grid3& g, const Vec3& p) { return g.to_voxel(p); }

/// Dense voxel data in x-fastest order over a Grid3.
template <class T>
class Volume {
  public:
    using value_type = T;

    Volume() = default;
    explicit Volume(const Grid3& grid, T fill = T{}) : grid_(grid), data_(grid.voxel_count(), fill) {}
    Volume(const Grid3& grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
        if (data_.size() != grid_.voxel_count()) {
            throw InvalidInput("volume data length does not match grid dimensions");
        }
    }

    const Grid3& grid() const { return grid_; }
    const Index3& dims() const { return grid_.dims(); }
    std::size_t size() const { return data_.size(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& at(const Index3& i) { return data_[grid_.linear(i)]; }
    const T& at(const Index3& i) const { return data_[grid_.linear(i)]; }
    T& operator()(int x, int y, int z) { return data_[grid_.linear({x, y, z})]; }
    const T& operator()(int x, int y, int z) const { return data_[grid_.linear({x, y, z})]; }

    /// Value at `i`, or `outside` when `i` lies off the grid.
    T get_or(const Index3& i, T outside) const { return grid_.contains(i) ? data_[grid_.linear(i)] : outside; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool operator==(const Volume&) const = default;

  private:
    Grid3 grid_;
    std::vector<T> data_;
};

using HuVolume = Volume<std::int16_t>;
using MaskVolume = Volume<std::uint8_t>;
using LabelVolume = Volume<std::uint8_t>;
using FloatVolume = Volume<float>;

/// Anatomical territory codes; values are part of the on-disk label format.
enum class TerritoryCode : std::uint8_t { Background = 0, LM = 1, LAD = 2, LCX = 3, RCA = 4, Aorta = 5 };

inline constexpr std::array<TerritoryCode, 4> kCoronaryTerritories{TerritoryCode::LM, TerritoryCode::LAD,
                                                                   TerritoryCode::LCX, TerritoryCode::RCA};

inline constexpr std::string_view to_string(TerritoryCode c) {
    switch (c) {
        case TerritoryCode::Background: return "BACKGROUND";
        case TerritoryCode::LM: return "LM";
        case TerritoryCode::LAD: return "LAD";
        case TerritoryCode::LCX: return "LCX";
        case TerritoryCode::RCA: return "RCA";
        case TerritoryCode::Aorta: return "AORTA";
    }
    return "UNKNOWN";
}

inline std::optional<TerritoryCode> territory_from_string(std::string_view s) {
    for (int c = 0; c <= 5; ++c) {
        const auto code = static_cast<TerritoryCode>(c);
        if (to_string(code) == s) {
            return code;
        }
    }
    if (s == "LCx") {
        return TerritoryCode::LCX;
    }
    return std::nullopt;
}

inline constexpr bool is_coronary(TerritoryCode c) {
    return c == TerritoryCode::LM || c == TerritoryCode::LAD || c == TerritoryCode::LCX || c == TerritoryCode::RCA;
}

/// Coronary tree side: left (LM, LAD, LCx) or right (RCA).
enum class OstiumSide { Left, Right };

inline constexpr std::string_view to_string(OstiumSide s) { return s == OstiumSide::Left ? "left" : "right"; }

inline constexpr bool is_valid_territory(std::uint8_t v) { return v <= 5; }

namespace detail {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline std::string vec_str(const Vec3& v) {
    std::ostringstream os;
    os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
    return os.str();
}

}  // namespace detail

inline constexpr double kGridTolerance_mm = 1e-4;

/// Throws GridMismatchError unless both grids have identical dims and
/// spacing/origin equal within 1e-4 mm per component.
inline void assert_same_grid(const Grid3& a, const Grid3& b) {
    if (a.dims() != b.dims()) {
        std::ostringstream os;
        os << "grid mismatch in dims: (" << a.dims().x << "," << a.dims().y << "," << a.dims().z << ") vs ("
           << b.dims().x << "," << b.dims().y << "," << b.dims().z << ")";
        throw GridMismatchError("dims", os.str());
    }
    for (int k = 0; k < 3; ++k) {
        if (!detail::near(a.spacing()[k], b.spacing()[k], kGridTolerance_mm)) {
            throw GridMismatchError("spacing", "grid mismatch in spacing: " + detail::vec_str(a.spacing()) + " vs " +
                                                   detail::vec_str(b.spacing()));
        }
    }
    for (int k = 0; k < 3; ++k) {
        if (!detail::near(a.origin()[k], b.origin()[k], kGridTolerance_mm)) {
            throw GridMismatchError("origin", "grid mismatch in origin: " + detail::vec_str(a.origin()) + " vs " +
                                                  detail::vec_str(b.origin()));
        }
    }
}

template <class A, class B>
void assert_same_grid(const Volume<A>& a, const Volume<B>& b) {
    assert_same_grid(a.grid(), b.grid());
}

// ---------------------------------------------------------------------------
// Small mask utilities shared by the kernels.

template <class T>
bool is_binary(const Volume<T>& v) {
    return std::all_of(v.values().begin(), v.values().end(), [](T x) { return x == T{0} || x == T{1}; });
}

template <class T>
void require_binary(const Volume<T>& v, std::string_view what) {
    if (!is_binary(v)) {
        throw InvalidInput(std::string(what) + " must be a binary {0,1} mask");
    }
}

template <class T>
std::size_t count_nonzero(const Volume<T>& v) {
    return static_cast<std::size_t>(
        std::count_if(v.values().begin(), v.values().end(), [](T x) { return x != T{0}; }));
}

struct Box3 {
    Index3 lo;
    Index3 hi;  // inclusive

    bool contains(const Index3& i) const {
        return i.x >= lo.x && i.y >= lo.y && i.z >= lo.z && i.x <= hi.x && i.y <= hi.y && i.z <= hi.z;
    }
};

/// Bounding box of non-zero voxels, or nullopt for an empty volume.
template <class T>
std::optional<Box3> bounding_box(const Volume<T>& v) {
    const auto& d = v.dims();
    Box3 box{{d.x, d.y, d.z}, {-1, -1, -1}};
    bool any = false;
    std::size_t i = 0;
    for (int z = 0; z < d.z; ++z) {
        for (int y = 0; y < d.y; ++y) {
            for (int x = 0; x < d.x; ++x, ++i) {
                if (v[i] != T{0}) {
                    any = true;
                    box.lo = {std::min(box.lo.x, x), std::min(box.lo.y, y), std::min(box.lo.z, z)};
                    box.hi = {std::max(box.hi.x, x), std::max(box.hi.y, y), std::max(box.hi.z, z)};
                }
            }
        }
    }
    if (!any) {
        return std::nullopt;
    }
    return box;
}

inline std::optional<Box3> bounding_box_of(const std::vector<Index3>& voxels) {
    if (voxels.empty()) {
        return std::nullopt;
    }
    Box3 box{voxels.front(), voxels.front()};
    for (const auto& v : voxels) {
        for (int a = 0; a < 3; ++a) {
            box.lo[a] = std::min(box.lo[a], v[a]);
            box.hi[a] = std::max(box.hi[a], v[a]);
        }
    }
    return box;
}

/// Grows `box` by `margin` voxels per side, clipped to `grid`.
inline Box3 expand_box(const Box3& box, const Grid3& grid, const Index3& margin) {
    Box3 out;
    for (int a = 0; a < 3; ++a) {
        out.lo[a] = std::max(0, box.lo[a] - margin[a]);
        out.hi[a] = std::min(grid.dims()[a] - 1, box.hi[a] + margin[a]);
    }
    return out;
}

/// Copies the voxels in `box` into a new volume whose grid preserves world
/// coordinates.
template <class T>
Volume<T> crop(const Volume<T>& v, const Box3& box) {
    Volume<T> out(v.grid().sub_grid(box.lo, box.hi));
    std::size_t o = 0;
    for (int z = box.lo.z; z <= box.hi.z; ++z) {
        for (int y = box.lo.y; y <= box.hi.y; ++y) {
            const std::size_t row = v.grid().linear({box.lo.x, y, z});
            for (int x = box.lo.x; x <= box.hi.x; ++x, ++o) {
                out[o] = v[row + static_cast<std::size_t>(x - box.lo.x)];
            }
        }
    }
    return out;
}

/// Writes `part` (a crop of `dst` at offset `lo`) back into `dst`.
template <class T>
void paste(Volume<T>& dst, const Volume<T>& part, const Index3& lo) {
    const auto& d = part.dims();
    std::size_t i = 0;
    for (int z = 0; z < d.z; ++z) {
        for (int y = 0; y < d.y; ++y) {
            for (int x = 0; x < d.x; ++x, ++i) {
                dst.at({lo.x + x, lo.y + y, lo.z + z}) = part[i];
            }
        }
    }
}

/// Offsets of the 6-, 18- or 26-neighbourhood, in lexicographic (z, y, x)
/// scan order.
inline std::vector<Index3> neighbor_offsets(int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26) {
        throw InvalidInput("connectivity must be 6, 18 or 26");
    }
    const int max_l1 = connectivity == 6 ? 1 : (connectivity == 18 ? 2 : 3);
    std::vector<Index3> out;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (l1 > 0 && l1 <= max_l1) {
                    out.push_back({dx, dy, dz});
                }
            }
        }
    }
    return out;
}

/// Squared world distance between voxel centres separated by `d`, summed in
/// x, y, z order (the same order the separable distance transform uses).
inline double offset_distance2(const Index3& d, const Vec3& spacing) {
    const double sx2 = spacing.x * spacing.x;
    const double sy2 = spacing.y * spacing.y;
    const double sz2 = spacing.z * spacing.z;
    const double fx = static_cast<double>(d.x) * static_cast<double>(d.x) * sx2;
    const double fy = static_cast<double>(d.y) * static_cast<double>(d.y) * sy2 + fx;
    return static_cast<double>(d.z) * static_cast<double>(d.z) * sz2 + fy;
}

}  // namespace cac
