#pragma once

// Calcification candidates: HU thresholding, per-component lesion records,
// and the whole-object pericardium and vessel-proximity filters.

#include <algorithm>

#include "cac/morphology.hpp"

namespace cac {

inline constexpr double kCalciumThresholdHu = 130.0;

struct Lesion {
    int id = 0;
    Grid3 grid;
    std::vector<Index3> voxels;  // scan order
    double volume_mm3 = 0.0;
    double max_hu = 0.0;
    double mean_hu = 0.0;
    Vec3 centroid_world;
};

template <class T>
MaskVolume threshold_calcium(const Volume<T>& image, double threshold_hu = kCalciumThresholdHu) {
    MaskVolume out(image.grid(), 0);
    for (std::size_t i = 0; i < image.size(); ++i) {
        out[i] = static_cast<double>(image[i]) >= threshold_hu ? 1 : 0;
    }
    return out;
}

/// Builds a lesion record from a voxel list, sorting the voxels into scan
/// order and computing its statistics from `image`.
template <class T>
Lesion make_lesion(int id, std::vector<Index3> voxels, const Volume<T>& image) {
    if (voxels.empty()) {
        throw InvalidInput("lesion must have at least one voxel");
    }
    const Grid3& g = image.grid();
    std::sort(voxels.begin(), voxels.end(), [&](const Index3& a, const Index3& b) { return g.linear(a) < g.linear(b); });
    Lesion l;
    l.id = id;
    l.grid = g;
    l.max_hu = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    Vec3 c;
    for (const auto& v : voxels) {
        const double hu = static_cast<double>(image.at(v));
        sum += hu;
        l.max_hu = std::max(l.max_hu, hu);
        c += g.to_world(v);
    }
    const double n = static_cast<double>(voxels.size());
    l.mean_hu = sum / n;
    l.centroid_world = c / n;
    l.volume_mm3 = n * g.voxel_volume();
    l.voxels = std::move(voxels);
    return l;
}

/// One lesion per connected component of `candidates`, ids 1..n in order of
/// each component's first voxel in scan order.
template <class M, class T>
std::vector<Lesion> extract_lesions(const Volume<M>& candidates, const Volume<T>& image,
                                    Connectivity connectivity = Connectivity::TwentySix) {
    assert_same_grid(candidates, image);
    require_binary(candidates, "candidate mask");
    const auto cs = connected_components(candidates, connectivity);
    auto groups = component_voxels(cs);
    std::vector<Lesion> out;
    out.reserve(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
        out.push_back(make_lesion(static_cast<int>(k) + 1, std::move(groups[k]), image));
    }
    return out;
}

/// Renumbers lesions 1..n in their current order.
inline void renumber(std::vector<Lesion>& lesions) {
    int id = 0;
    for (auto& l : lesions) {
        l.id = ++id;
    }
}

struct LesionPartition {
    std::vector<Lesion> kept;
    std::vector<Lesion> removed;
};

template <class T>
bool touches(const Lesion& l, const Volume<T>& region) {
    return std::any_of(l.voxels.begin(), l.voxels.end(), [&](const Index3& v) { return region.at(v) != T{0}; });
}

/// Splits lesions by whether any voxel lies inside `region`; order is kept.
template <class T>
LesionPartition partition_by_region(const std::vector<Lesion>& lesions, const Volume<T>& region) {
    LesionPartition p;
    for (const auto& l : lesions) {
        assert_same_grid(l.grid, region.grid());
        (touches(l, region) ? p.kept : p.removed).push_back(l);
    }
    return p;
}

template <class T>
LesionPartition partition_by_pericardium(const std::vector<Lesion>& lesions, const Volume<T>& pericardium,
                                         double dilation_mm = 1.0) {
    return partition_by_region(lesions, dilate_ball(pericardium, dilation_mm));
}

template <class T>
std::vector<Lesion> filter_by_pericardium(const std::vector<Lesion>& lesions, const Volume<T>& pericardium,
                                          double dilation_mm = 1.0) {
    return partition_by_pericardium(lesions, pericardium, dilation_mm).kept;
}

template <class T>
LesionPartition partition_by_vessel_proximity(const std::vector<Lesion>& lesions, const Volume<T>& vessels,
                                              double dilation_mm = 3.0) {
    return partition_by_region(lesions, dilate_ball(vessels, dilation_mm));
}

template <class T>
std::vector<Lesion> filter_by_vessel_proximity(const std::vector<Lesion>& lesions, const Volume<T>& vessels,
                                               double dilation_mm = 3.0) {
    return partition_by_vessel_proximity(lesions, vessels, dilation_mm).kept;
}

template <class Pred>
std::vector<Lesion> filter_lesions(const std::vector<Lesion>& lesions, Pred keep) {
    std::vector<Lesion> out;
    std::copy_if(lesions.begin(), lesions.end(), std::back_inserter(out), keep);
    return out;
}

/// Rasterizes lesions into a binary mask.
inline MaskVolume lesion_mask(const Grid3& grid, const std::vector<Lesion>& lesions) {
    MaskVolume m(grid, 0);
    for (const auto& l : lesions) {
        for (const auto& v : l.voxels) {
            m.at(v) = 1;
        }
    }
    return m;
}

}  // namespace cac
