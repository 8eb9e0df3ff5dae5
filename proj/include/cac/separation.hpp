#pragma once

// Aorta/coronary separation at an ostium. Inside a cubic patch around the
// ostium the voxels lying (nearly) equidistant from both masks are fitted by
// a plane; lesions crossing that plane are split into aortic and coronary
// parts.

#include <Eigen/Dense>

#include "cac/candidates.hpp"

namespace cac {

struct SeparationPlane {
    Vec3 point;
    Vec3 normal;  // unit, aorta side negative
    OstiumSide ostium_side = OstiumSide::Left;
    int support_count = 0;
    bool fallback = false;

    double signed_distance(const Vec3& p) const { return (p - point).dot(normal); }
};

struct SeparationParams {
    double support_cap_mm = 6.0;
    int min_support = 10;
};

/// Voxel box of a `size_mm` cube centred on `center`, clipped to the grid.
/// Along each axis the cube spans n = max(1, round(size / spacing)) voxels
/// starting n/2 voxels before the centre voxel.
inline Box3 patch_box(const Grid3& g, const Vec3& center, double size_mm) {
    const Index3 c = g.to_voxel(center);
    if (!g.contains(c)) {
        throw InvalidInput("patch centre " + detail::vec_str(center) + " lies outside the volume");
    }
    Box3 b;
    for (int a = 0; a < 3; ++a) {
        const int n = std::max(1, static_cast<int>(std::lround(size_mm / g.spacing()[a])));
        const int lo = c[a] - n / 2;
        b.lo[a] = std::max(0, lo);
        b.hi[a] = std::min(g.dims()[a] - 1, lo + n - 1);
    }
    return b;
}

template <class T>
Volume<T> extract_patch(const Volume<T>& vol, const Vec3& center, double size_mm = 25.0) {
    return crop(vol, patch_box(vol.grid(), center, size_mm));
}

namespace detail {

template <class T>
std::pair<Vec3, std::size_t> mask_centroid(const Volume<T>& m) {
    Vec3 c;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] != T{0}) {
            c += m.grid().to_world(m.grid().index(i));
            ++n;
        }
    }
    return {n ? c / static_cast<double>(n) : c, n};
}

}  // namespace detail

/// Plane through the equidistance ridge between the aorta and vessel
/// patches. Support set: voxels outside both masks with
/// |dA - dV| <= max spacing and min(dA, dV) <= support_cap_mm. The plane
/// passes through the support centroid with the direction of least variance
/// as normal, pointing away from the aorta.
template <class A, class V>
SeparationPlane fit_separation_plane(const Volume<A>& aorta_patch, const Volume<V>& vessel_patch, const Vec3& ostium,
                                     OstiumSide side = OstiumSide::Left, const SeparationParams& params = {}) {
    (void)ostium;
    assert_same_grid(aorta_patch, vessel_patch);
    const auto da = edt(aorta_patch, DistanceTarget::Foreground);
    const auto dv = edt(vessel_patch, DistanceTarget::Foreground);
    if (da.target_empty || dv.target_empty) {
        throw DegenerateFitError(std::string(da.target_empty ? "aorta" : "vessel") + " patch is empty");
    }
    const Grid3& g = aorta_patch.grid();
    const double band = g.max_spacing();
    std::vector<Vec3> support;
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        if (aorta_patch[i] != A{0} || vessel_patch[i] != V{0}) {
            continue;
        }
        const double a = da.distance[i];
        const double v = dv.distance[i];
        if (std::abs(a - v) <= band && std::min(a, v) <= params.support_cap_mm) {
            support.push_back(g.to_world(g.index(i)));
        }
    }
    if (static_cast<int>(support.size()) < params.min_support) {
        throw DegenerateFitError("separation plane support has " + std::to_string(support.size()) + " voxels, need " +
                                 std::to_string(params.min_support));
    }
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : support) {
        mean += Eigen::Vector3d(p.x, p.y, p.z);
    }
    mean /= static_cast<double>(support.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : support) {
        const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(support.size());
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();

    SeparationPlane plane;
    plane.point = {mean.x(), mean.y(), mean.z()};
    plane.normal = {n.x(), n.y(), n.z()};
    plane.ostium_side = side;
    plane.support_count = static_cast<int>(support.size());
    const auto [aorta_centroid, count] = detail::mask_centroid(aorta_patch);
    if (plane.signed_distance(aorta_centroid) > 0.0) {
        plane.normal = -plane.normal;
    }
    return plane;
}

/// Plane through the ostium with normal pointing to the vessel patch
/// centroid; used when the ridge fit is degenerate.
template <class V>
SeparationPlane fallback_plane(const Volume<V>& vessel_patch, const Vec3& ostium, OstiumSide side) {
    const auto [c, n] = detail::mask_centroid(vessel_patch);
    Vec3 dir = (c - ostium).normalized();
    if (n == 0 || dir.norm() == 0.0) {
        dir = {1.0, 0.0, 0.0};
    }
    return {ostium, dir, side, 0, true};
}

struct SplitResult {
    std::vector<Lesion> coronary;
    std::vector<Lesion> aortic;
};

/// Partitions the voxels of every examined lesion by the sign of their
/// signed distance (>= 0 coronary, < 0 aortic) and re-componentizes each
/// side. A lesion is examined when `examine` returns true for it; the others
/// pass through to the coronary output unchanged. Output ids are left to the
/// caller.
template <class T, class Examine>
SplitResult split_lesions(const std::vector<Lesion>& lesions, const SeparationPlane& plane, const Volume<T>& image,
                          Examine examine, Connectivity connectivity = Connectivity::TwentySix) {
    SplitResult out;
    const Grid3& g = image.grid();
    for (const auto& l : lesions) {
        if (!examine(l)) {
            out.coronary.push_back(l);
            continue;
        }
        std::vector<Index3> pos, neg;
        for (const auto& v : l.voxels) {
            (plane.signed_distance(g.to_world(v)) >= 0.0 ? pos : neg).push_back(v);
        }
        if (neg.empty()) {
            out.coronary.push_back(l);
            continue;
        }
        for (auto* part : {&pos, &neg}) {
            if (part->empty()) {
                continue;
            }
            const Box3 box = *bounding_box_of(*part);
            MaskVolume local(g.sub_grid(box.lo, box.hi), 0);
            for (const auto& v : *part) {
                local.at(v - box.lo) = 1;
            }
            const auto cs = connected_components(local, connectivity);
            auto groups = component_voxels(cs);
            for (auto& grp : groups) {
                for (auto& v : grp) {
                    v = v + box.lo;
                }
                (part == &pos ? out.coronary : out.aortic).push_back(make_lesion(l.id, std::move(grp), image));
            }
        }
    }
    return out;
}

/// Splits the lesions having at least one voxel inside `box`.
template <class T>
SplitResult split_lesions_at_ostium(const std::vector<Lesion>& lesions, const SeparationPlane& plane,
                                    const Volume<T>& image, const Box3& box,
                                    Connectivity connectivity = Connectivity::TwentySix) {
    return split_lesions(
        lesions, plane, image,
        [&](const Lesion& l) {
            return std::any_of(l.voxels.begin(), l.voxels.end(), [&](const Index3& v) { return box.contains(v); });
        },
        connectivity);
}

}  // namespace cac
