#pragma once

#include "cac/volume.hpp"

namespace cac {

/// Integer offsets whose centre-to-centre world distance is <= radius_mm.
inline std::vector<Index3> ball_offsets(const Vec3& spacing, double radius_mm) {
    std::vector<Index3> out;
    const Index3 reach{static_cast<int>(std::floor(radius_mm / spacing.x)),
                       static_cast<int>(std::floor(radius_mm / spacing.y)),
                       static_cast<int>(std::floor(radius_mm / spacing.z))};
    for (int dz = -reach.z; dz <= reach.z; ++dz) {
        for (int dy = -reach.y; dy <= reach.y; ++dy) {
            for (int dx = -reach.x; dx <= reach.x; ++dx) {
                const Index3 o{dx, dy, dz};
                if (std::sqrt(offset_distance2(o, spacing)) <= radius_mm) {
                    out.push_back(o);
                }
            }
        }
    }
    return out;
}

/// Binary dilation by a Euclidean ball of radius `radius_mm` measured between
/// voxel centres in world space. Only voxels with a background 26-neighbour
/// are stamped: any voxel within reach of an interior voxel is also within
/// reach of a boundary voxel lying on a monotone lattice path towards it.
template <class T>
MaskVolume dilate_ball(const Volume<T>& mask, double radius_mm) {
    require_binary(mask, "dilate_ball input");
    if (!(radius_mm >= 0.0)) {
        throw InvalidInput("dilate_ball radius must be >= 0");
    }
    const Grid3& g = mask.grid();
    MaskVolume out(g, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out[i] = mask[i] != T{0} ? 1 : 0;
    }
    const auto offsets = ball_offsets(g.spacing(), radius_mm);
    if (offsets.size() <= 1) {
        return out;
    }
    const auto n26 = neighbor_offsets(26);
    const auto& d = g.dims();
    std::size_t i = 0;
    for (int z = 0; z < d.z; ++z) {
        for (int y = 0; y < d.y; ++y) {
            for (int x = 0; x < d.x; ++x, ++i) {
                if (mask[i] == T{0}) {
                    continue;
                }
                const Index3 p{x, y, z};
                bool boundary = false;
                for (const auto& o : n26) {
                    const Index3 n = p + o;
                    if (g.contains(n) && mask.at(n) == T{0}) {
                        boundary = true;
                        break;
                    }
                }
                if (!boundary) {
                    continue;
                }
                for (const auto& o : offsets) {
                    const Index3 n = p + o;
                    if (g.contains(n)) {
                        out.at(n) = 1;
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace cac
