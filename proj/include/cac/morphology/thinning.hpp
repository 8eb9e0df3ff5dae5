#pragma once

// Curve-thinning of 3D binary objects, peeled in order of depth. Object
// voxels are grouped into shells one finest-spacing thick by their distance
// to the background (mm). Shells are processed from the surface inwards; each
// is peeled by six directional sub-iterations (+x, -x, +y, -y, +z, -z) that
// collect border voxels which are simple and not curve endpoints, then remove
// them in scan order after re-checking both conditions. An endpoint whose single neighbour lies deeper by
// more than half the step between them is a spur towards the surface and is
// removed as well. Passes repeat until one removes nothing, so the result is
// a fixed point and the operation is idempotent. Curve ends settle near the
// centres of maximal inscribed balls.
//
// Simple points use (26, 6) adjacency: exactly one 26-connected foreground
// component in N26(p) \ {p}, and exactly one 6-connected background component
// in N18(p) \ {p} that is 6-adjacent to p.

#include <array>
#include <bitset>

#include "cac/morphology/distance.hpp"

namespace cac {

namespace thinning_detail {

constexpr int kCenter = 13;

constexpr int cube_index(int dx, int dy, int dz) { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }

struct NeighborhoodTables {
    std::array<std::vector<int>, 27> adj26{};  // 26-adjacent cells, centre excluded
    std::array<std::vector<int>, 27> adj6{};   // 6-adjacent cells inside N18, centre excluded
    std::array<bool, 27> in18{};
    std::array<bool, 27> face{};  // 6-neighbours of the centre

    NeighborhoodTables() {
        for (int a = 0; a < 27; ++a) {
            const int ax = a % 3 - 1, ay = (a / 3) % 3 - 1, az = a / 9 - 1;
            const int l1 = std::abs(ax) + std::abs(ay) + std::abs(az);
            in18[static_cast<std::size_t>(a)] = l1 >= 1 && l1 <= 2;
            face[static_cast<std::size_t>(a)] = l1 == 1;
            for (int b = 0; b < 27; ++b) {
                if (a == b || a == kCenter || b == kCenter) {
                    continue;
                }
                const int bx = b % 3 - 1, by = (b / 3) % 3 - 1, bz = b / 9 - 1;
                const int ddx = std::abs(ax - bx), ddy = std::abs(ay - by), ddz = std::abs(az - bz);
                if (std::max({ddx, ddy, ddz}) == 1) {
                    adj26[static_cast<std::size_t>(a)].push_back(b);
                    if (ddx + ddy + ddz == 1 && l1 >= 1 && l1 <= 2) {
                        const int lb = std::abs(bx) + std::abs(by) + std::abs(bz);
                        if (lb >= 1 && lb <= 2) {
                            adj6[static_cast<std::size_t>(a)].push_back(b);
                        }
                    }
                }
            }
        }
    }
};

inline const NeighborhoodTables& tables() {
    static const NeighborhoodTables t;
    return t;
}

using Cube = std::bitset<27>;

inline int foreground_neighbors(const Cube& c) { return static_cast<int>(c.count()) - (c[kCenter] ? 1 : 0); }

/// Simple-point test for the centre voxel of `c` (centre bit ignored).
inline bool is_simple(const Cube& c) {
    const auto& t = tables();
    std::array<int, 27> stack{};

    // Foreground: one 26-component in N26*.
    int first = -1;
    for (int a = 0; a < 27; ++a) {
        if (a != kCenter && c[static_cast<std::size_t>(a)]) {
            first = a;
            break;
        }
    }
    if (first < 0) {
        return false;
    }
    std::bitset<27> seen;
    int sp = 0;
    stack[static_cast<std::size_t>(sp++)] = first;
    seen.set(static_cast<std::size_t>(first));
    int reached = 1;
    while (sp > 0) {
        const int a = stack[static_cast<std::size_t>(--sp)];
        for (int b : t.adj26[static_cast<std::size_t>(a)]) {
            if (c[static_cast<std::size_t>(b)] && !seen[static_cast<std::size_t>(b)]) {
                seen.set(static_cast<std::size_t>(b));
                stack[static_cast<std::size_t>(sp++)] = b;
                ++reached;
            }
        }
    }
    if (reached != foreground_neighbors(c)) {
        return false;
    }

    // Background: one 6-component in N18* touching a face neighbour.
    seen.reset();
    int components = 0;
    for (int a = 0; a < 27; ++a) {
        if (!t.face[static_cast<std::size_t>(a)] || c[static_cast<std::size_t>(a)] || seen[static_cast<std::size_t>(a)]) {
            continue;
        }
        if (++components > 1) {
            return false;
        }
        sp = 0;
        stack[static_cast<std::size_t>(sp++)] = a;
        seen.set(static_cast<std::size_t>(a));
        while (sp > 0) {
            const int u = stack[static_cast<std::size_t>(--sp)];
            for (int b : t.adj6[static_cast<std::size_t>(u)]) {
                if (!c[static_cast<std::size_t>(b)] && !seen[static_cast<std::size_t>(b)]) {
                    seen.set(static_cast<std::size_t>(b));
                    stack[static_cast<std::size_t>(sp++)] = b;
                }
            }
        }
    }
    return components == 1;
}

}  // namespace thinning_detail

/// Topology-preserving curve skeleton of a binary mask. The result is a
/// subset of the input with the same 26-connected component count.
template <class T>
MaskVolume skeletonize_3d(const Volume<T>& mask) {
    using namespace thinning_detail;
    require_binary(mask, "skeletonize_3d input");
    MaskVolume result(mask.grid(), 0);
    const auto bbox = bounding_box(mask);
    if (!bbox) {
        return result;
    }

    // Work on a copy padded with one background layer so every neighbourhood
    // lookup stays in range.
    const Index3 lo = bbox->lo;
    const Index3 ext{bbox->hi.x - lo.x + 3, bbox->hi.y - lo.y + 3, bbox->hi.z - lo.z + 3};
    const std::size_t sx = 1;
    const auto sy = static_cast<std::size_t>(ext.x);
    const auto sz = static_cast<std::size_t>(ext.x) * static_cast<std::size_t>(ext.y);
    std::vector<std::uint8_t> img(sz * static_cast<std::size_t>(ext.z), 0);
    auto at = [&](int x, int y, int z) -> std::size_t {
        return static_cast<std::size_t>(x) + sy * static_cast<std::size_t>(y) + sz * static_cast<std::size_t>(z);
    };
    std::vector<std::size_t> alive;
    for (int z = bbox->lo.z; z <= bbox->hi.z; ++z) {
        for (int y = bbox->lo.y; y <= bbox->hi.y; ++y) {
            for (int x = bbox->lo.x; x <= bbox->hi.x; ++x) {
                if (mask(x, y, z) != T{0}) {
                    const std::size_t k = at(x - lo.x + 1, y - lo.y + 1, z - lo.z + 1);
                    img[k] = 1;
                    alive.push_back(k);
                }
            }
        }
    }
    std::sort(alive.begin(), alive.end());

    std::array<std::ptrdiff_t, 27> cube_offset{};
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                cube_offset[static_cast<std::size_t>(cube_index(dx, dy, dz))] =
                    static_cast<std::ptrdiff_t>(dx) * static_cast<std::ptrdiff_t>(sx) +
                    static_cast<std::ptrdiff_t>(dy) * static_cast<std::ptrdiff_t>(sy) +
                    static_cast<std::ptrdiff_t>(dz) * static_cast<std::ptrdiff_t>(sz);
            }
        }
    }
    auto neighborhood = [&](std::size_t k) {
        Cube c;
        for (int a = 0; a < 27; ++a) {
            if (img[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + cube_offset[static_cast<std::size_t>(a)])]) {
                c.set(static_cast<std::size_t>(a));
            }
        }
        return c;
    };
    // Depth order on the padded copy, where outside the grid is background.
    Volume<std::uint8_t> padded(Grid3(ext, mask.grid().spacing()), 0);
    padded.storage() = img;
    const auto depth = edt(padded, DistanceTarget::Background).distance;

    const Vec3 sp = mask.grid().spacing();
    auto is_spur_tip = [&](std::size_t k, const Cube& c) {
        for (int a = 0; a < 27; ++a) {
            if (a == kCenter || !c[static_cast<std::size_t>(a)]) {
                continue;
            }
            const double step = std::hypot((a % 3 - 1) * sp.x, ((a / 3) % 3 - 1) * sp.y, (a / 9 - 1) * sp.z);
            const auto nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + cube_offset[static_cast<std::size_t>(a)]);
            return depth[nb] - depth[k] > 0.5 * step;
        }
        return false;
    };

    auto removable = [&](std::size_t k) {
        const Cube c = neighborhood(k);
        return is_simple(c) && (foreground_neighbors(c) != 1 || is_spur_tip(k, c));
    };
    const std::array<int, 6> directions{cube_index(1, 0, 0),  cube_index(-1, 0, 0), cube_index(0, 1, 0),
                                        cube_index(0, -1, 0), cube_index(0, 0, 1),  cube_index(0, 0, -1)};
    const double shell = std::min({sp.x, sp.y, sp.z});
    std::vector<std::vector<std::size_t>> shells;
    for (std::size_t k : alive) {
        const auto level = static_cast<std::size_t>(depth[k] / shell + 1e-9);
        if (level >= shells.size()) {
            shells.resize(level + 1);
        }
        shells[level].push_back(k);
    }
    for (auto& sh : shells) {
        std::sort(sh.begin(), sh.end());
    }

    std::vector<std::size_t> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& sh : shells) {
            bool shell_changed = true;
            while (shell_changed) {
                shell_changed = false;
                for (int dir : directions) {
                    const std::ptrdiff_t step = cube_offset[static_cast<std::size_t>(dir)];
                    candidates.clear();
                    for (std::size_t k : sh) {
                        if (img[k] && !img[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + step)] &&
                            removable(k)) {
                            candidates.push_back(k);
                        }
                    }
                    for (std::size_t k : candidates) {
                        if (removable(k)) {
                            img[k] = 0;
                            shell_changed = true;
                        }
                    }
                }
                if (shell_changed) {
                    changed = true;
                    std::erase_if(sh, [&](std::size_t k) { return img[k] == 0; });
                }
            }
        }
    }
    alive.clear();
    for (const auto& sh : shells) {
        alive.insert(alive.end(), sh.begin(), sh.end());
    }

    for (std::size_t k : alive) {
        const int x = static_cast<int>(k % sy);
        const int y = static_cast<int>((k / sy) % static_cast<std::size_t>(ext.y));
        const int z = static_cast<int>(k / sz);
        result(x - 1 + lo.x, y - 1 + lo.y, z - 1 + lo.z) = 1;
    }
    return result;
}

/// Number of 26-neighbours set in a binary volume (used to classify skeleton
/// voxels as endpoints / curve / junction voxels).
template <class T>
int count_26_neighbors(const Volume<T>& v, const Index3& p) {
    int n = 0;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if ((dx | dy | dz) != 0 && v.get_or({p.x + dx, p.y + dy, p.z + dz}, T{0}) != T{0}) {
                    ++n;
                }
            }
        }
    }
    return n;
}

}  // namespace cac
