#pragma once

// Exact Euclidean distance transform on anisotropic grids. Squared distances
// are computed with the separable lower-envelope-of-parabolas method
// (Felzenszwalb & Huttenlocher), one pass per axis in x, y, z order, with the
// per-axis spacing folded into the parabola curvature.

#include "cac/volume.hpp"

namespace cac {

enum class DistanceTarget { Foreground, Background };

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::max();

struct DistanceMap {
    Volume<double> distance;   // mm; kInfiniteDistance where no target exists
    bool target_empty = false;
};

namespace detail {

/// In-place 1D squared distance transform of `f` (stride `stride`, length
/// `n`), weight `s2` = spacing^2. Infinite entries are not sites.
struct EnvelopeScratch {
    std::vector<double> f;
    std::vector<double> z;
    std::vector<int> v;
};

inline void edt_1d(double* data, int n, std::size_t stride, double s2, EnvelopeScratch& s) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    s.f.resize(static_cast<std::size_t>(n));
    s.v.resize(static_cast<std::size_t>(n));
    s.z.resize(static_cast<std::size_t>(n) + 1);
    for (int q = 0; q < n; ++q) {
        s.f[static_cast<std::size_t>(q)] = data[static_cast<std::size_t>(q) * stride];
    }

    int k = -1;
    for (int q = 0; q < n; ++q) {
        const double fq = s.f[static_cast<std::size_t>(q)];
        if (fq == inf) {
            continue;
        }
        if (k < 0) {
            k = 0;
            s.v[0] = q;
            s.z[0] = -inf;
            s.z[1] = inf;
            continue;
        }
        const double dq = static_cast<double>(q);
        auto intersect = [&](int vk) {
            const double dv = static_cast<double>(vk);
            return ((fq + s2 * dq * dq) - (s.f[static_cast<std::size_t>(vk)] + s2 * dv * dv)) /
                   (2.0 * s2 * (dq - dv));
        };
        // z[0] = -inf, so the envelope never empties.
        double sep = intersect(s.v[static_cast<std::size_t>(k)]);
        while (sep <= s.z[static_cast<std::size_t>(k)]) {
            --k;
            sep = intersect(s.v[static_cast<std::size_t>(k)]);
        }
        ++k;
        s.v[static_cast<std::size_t>(k)] = q;
        s.z[static_cast<std::size_t>(k)] = sep;
        s.z[static_cast<std::size_t>(k) + 1] = inf;
    }

    if (k < 0) {
        for (int q = 0; q < n; ++q) {
            data[static_cast<std::size_t>(q) * stride] = inf;
        }
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (s.z[static_cast<std::size_t>(j) + 1] < static_cast<double>(q)) {
            ++j;
        }
        const int vj = s.v[static_cast<std::size_t>(j)];
        const double dd = static_cast<double>(q - vj);
        data[static_cast<std::size_t>(q) * stride] = dd * dd * s2 + s.f[static_cast<std::size_t>(vj)];
    }
}

}  // namespace detail

/// Squared world distance (mm^2) from every voxel to the nearest voxel whose
/// `is_target` predicate holds. +inf where no target exists.
template <class T, class Pred>
Volume<double> squared_distance_transform(const Volume<T>& v, Pred is_target) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const Grid3& g = v.grid();
    const auto& d = g.dims();
    Volume<double> out(g, inf);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (is_target(v[i])) {
            out[i] = 0.0;
        }
    }
    detail::EnvelopeScratch scratch;
    const auto nx = static_cast<std::size_t>(d.x);
    const auto nxy = g.slice_size();
    const Vec3& sp = g.spacing();

    for (int z = 0; z < d.z; ++z) {
        for (int y = 0; y < d.y; ++y) {
            detail::edt_1d(&out[g.linear({0, y, z})], d.x, 1, sp.x * sp.x, scratch);
        }
    }
    if (d.y > 1) {
        for (int z = 0; z < d.z; ++z) {
            for (int x = 0; x < d.x; ++x) {
                detail::edt_1d(&out[g.linear({x, 0, z})], d.y, nx, sp.y * sp.y, scratch);
            }
        }
    }
    if (d.z > 1) {
        for (int y = 0; y < d.y; ++y) {
            for (int x = 0; x < d.x; ++x) {
                detail::edt_1d(&out[g.linear({x, y, 0})], d.z, nxy, sp.z * sp.z, scratch);
            }
        }
    }
    return out;
}

/// Exact Euclidean distance (mm, voxel centre to voxel centre) to the nearest
/// foreground (or background) voxel of a binary mask.
template <class T>
DistanceMap edt(const Volume<T>& mask, DistanceTarget target) {
    require_binary(mask, "edt input");
    const bool want_fg = target == DistanceTarget::Foreground;
    Volume<double> d2 = squared_distance_transform(mask, [want_fg](T x) { return (x != T{0}) == want_fg; });
    DistanceMap out{std::move(d2), true};
    for (double& x : out.distance.storage()) {
        if (std::isinf(x)) {
            x = kInfiniteDistance;
        } else {
            out.target_empty = false;
            x = std::sqrt(x);
        }
    }
    return out;
}

}  // namespace cac
