#pragma once

// Aortic valve centre and coronary ostia: JSON injection of externally
// computed points, or a geometric estimate from the aorta and vessel masks.

#include <fstream>
#include <numbers>
#include <queue>

#include <json.hpp>

#include "cac/morphology.hpp"

namespace cac {

enum class PointSource { External, Geometric };

inline std::string_view to_string(PointSource s) { return s == PointSource::External ? "external" : "geometric"; }

struct OstiaPoints {
    Vec3 valve_center;
    Vec3 left_ostium;
    Vec3 right_ostium;
    PointSource source = PointSource::External;
    std::vector<std::string> warnings;
};

inline constexpr double kOstiaSanityBound_mm = 40.0;

inline std::vector<std::string> ostia_sanity_warnings(const OstiaPoints& p, double bound_mm = kOstiaSanityBound_mm) {
    std::vector<std::string> w;
    if (p.left_ostium == p.right_ostium) {
        w.push_back("left and right ostium coincide");
    }
    for (const auto& [name, q] : {std::pair{"left_ostium", p.left_ostium}, std::pair{"right_ostium", p.right_ostium}}) {
        const double d = distance(q, p.valve_center);
        if (d > bound_mm) {
            w.push_back(std::string(name) + " is " + std::to_string(d) + " mm from the valve centre");
        }
    }
    return w;
}

namespace detail {

inline Vec3 json_point(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) {
        throw ParseError(ParseError::Kind::MissingKey, key, "missing field");
    }
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() || !a[2].is_number()) {
        throw ParseError(ParseError::Kind::InvalidValue, key, "expected an array of 3 numbers");
    }
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline nlohmann::json json_array(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

}  // namespace detail

inline OstiaPoints parse_ostia(const std::string& text, double bound_mm = kOstiaSanityBound_mm) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(ParseError::Kind::InvalidValue, "ostia", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError(ParseError::Kind::InvalidValue, "ostia", "expected a JSON object");
    }
    OstiaPoints p;
    p.valve_center = detail::json_point(j, "valve_center");
    p.left_ostium = detail::json_point(j, "left_ostium");
    p.right_ostium = detail::json_point(j, "right_ostium");
    p.source = PointSource::External;
    p.warnings = ostia_sanity_warnings(p, bound_mm);
    return p;
}

inline OstiaPoints load_ostia(const std::string& path, double bound_mm = kOstiaSanityBound_mm) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(ParseError::Kind::Io, "ostia", "cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_ostia(ss.str(), bound_mm);
}

inline std::string ostia_json(const OstiaPoints& p) {
    nlohmann::ordered_json j;
    j["valve_center"] = detail::json_array(p.valve_center);
    j["left_ostium"] = detail::json_array(p.left_ostium);
    j["right_ostium"] = detail::json_array(p.right_ostium);
    return j.dump(2) + "\n";
}

inline void save_ostia(const OstiaPoints& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError(ParseError::Kind::Io, "ostia", "cannot write " + path);
    }
    out << ostia_json(p);
}

namespace detail {

/// Geodesic distances (mm) along the 26-connected skeleton from `source`.
/// Unreached voxels hold +infinity.
inline std::vector<double> skeleton_geodesic(const MaskVolume& skel, const Index3& source) {
    const Grid3& g = skel.grid();
    std::vector<double> dist(skel.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    const auto n26 = neighbor_offsets(26);
    std::vector<double> step(n26.size());
    for (std::size_t k = 0; k < n26.size(); ++k) {
        step[k] = std::sqrt(offset_distance2(n26[k], g.spacing()));
    }
    dist[g.linear(source)] = 0.0;
    pq.push({0.0, g.linear(source)});
    while (!pq.empty()) {
        const auto [d, i] = pq.top();
        pq.pop();
        if (d > dist[i]) {
            continue;
        }
        const Index3 p = g.index(i);
        for (std::size_t k = 0; k < n26.size(); ++k) {
            const Index3 q = p + n26[k];
            if (!g.contains(q) || skel.at(q) == 0) {
                continue;
            }
            const std::size_t j = g.linear(q);
            if (d + step[k] < dist[j]) {
                dist[j] = d + step[k];
                pq.push({dist[j], j});
            }
        }
    }
    return dist;
}

inline std::vector<Index3> skeleton_endpoints(const MaskVolume& skel) {
    std::vector<Index3> out;
    for (std::size_t i = 0; i < skel.size(); ++i) {
        if (skel[i] && count_26_neighbors(skel, skel.grid().index(i)) <= 1) {
            out.push_back(skel.grid().index(i));
        }
    }
    return out;
}

struct ValveEstimate {
    Index3 voxel;
    MaskVolume skeleton;
    std::vector<double> geodesic;  // from the chosen endpoint
};

template <class T>
ValveEstimate estimate_valve(const Volume<T>& aorta, double window_mm = 5.0) {
    require_binary(aorta, "aorta mask");
    if (count_nonzero(aorta) == 0) {
        throw InvalidInput("aorta mask is empty");
    }
    auto skel = skeletonize_3d(aorta);
    const auto interior = edt(aorta, DistanceTarget::Background).distance;
    auto ends = skeleton_endpoints(skel);
    if (ends.empty()) {
        // A closed skeleton loop has no endpoints; fall back to every voxel.
        for (std::size_t i = 0; i < skel.size(); ++i) {
            if (skel[i]) {
                ends.push_back(skel.grid().index(i));
            }
        }
    }
    std::optional<Index3> best;
    double best_score = -1.0;
    for (const auto& e : ends) {
        const auto geo = skeleton_geodesic(skel, e);
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < geo.size(); ++i) {
            if (geo[i] <= window_mm) {
                sum += interior[i];
                ++n;
            }
        }
        const double score = sum / n;
        const bool better = !best || score > best_score + 1e-9 ||
                            (std::abs(score - best_score) <= 1e-9 &&
                             (e.z < best->z || (e.z == best->z && e < *best)));
        if (better) {
            best = e;
            best_score = score;
        }
    }
    ValveEstimate out{*best, std::move(skel), {}};
    out.geodesic = skeleton_geodesic(out.skeleton, out.voxel);
    return out;
}

}  // namespace detail

/// Endpoint of the aorta skeleton whose mean interior distance over the
/// skeleton voxels within 5 mm (geodesic) is largest; ties go to lower z.
template <class T>
Vec3 estimate_valve_center(const Volume<T>& aorta) {
    const auto v = detail::estimate_valve(aorta);
    return v.skeleton.grid().to_world(v.voxel);
}

/// Local aorta direction at the valve: from the skeleton voxel nearest the
/// valve centre towards the skeleton point `reach_mm` further along the
/// geodesic path to the farthest skeleton voxel.
template <class T>
Vec3 estimate_aorta_axis(const Volume<T>& aorta, const Vec3& valve_center, double reach_mm = 15.0) {
    require_binary(aorta, "aorta mask");
    const auto skel = skeletonize_3d(aorta);
    const Grid3& g = skel.grid();
    std::optional<Index3> start;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < skel.size(); ++i) {
        if (!skel[i]) {
            continue;
        }
        const double d = distance(g.to_world(g.index(i)), valve_center);
        if (d < best) {
            best = d;
            start = g.index(i);
        }
    }
    if (!start) {
        throw InvalidInput("aorta mask is empty");
    }
    const auto geo = detail::skeleton_geodesic(skel, *start);
    std::size_t far = g.linear(*start);
    for (std::size_t i = 0; i < geo.size(); ++i) {
        if (std::isfinite(geo[i]) && geo[i] > geo[far]) {
            far = i;
        }
    }
    // Walk back from the far voxel along decreasing geodesic distance.
    const auto n26 = neighbor_offsets(26);
    std::size_t cur = far;
    while (geo[cur] > reach_mm) {
        const Index3 p = g.index(cur);
        std::size_t next = cur;
        for (const auto& o : n26) {
            const Index3 q = p + o;
            if (g.contains(q) && skel.at(q) && geo[g.linear(q)] < geo[next]) {
                next = g.linear(q);
            }
        }
        if (next == cur) {
            break;
        }
        cur = next;
    }
    const Vec3 axis = g.to_world(g.index(cur)) - g.to_world(*start);
    if (axis.norm() == 0.0) {
        return {0.0, 0.0, 1.0};
    }
    return axis.normalized();
}

namespace detail {

/// Aorta surface voxel (aorta voxel with a 6-neighbour outside the aorta)
/// closest to the `cluster` mask. The tied minimisers are reduced to the one
/// closest to their centroid, then by (x, y, z) order.
template <class A>
Index3 closest_surface_voxel(const Volume<A>& aorta, const MaskVolume& cluster) {
    const Grid3& g = aorta.grid();
    const auto d = edt(cluster, DistanceTarget::Foreground).distance;
    const auto n6 = neighbor_offsets(6);
    double best = std::numeric_limits<double>::infinity();
    std::vector<Index3> ties;
    for (std::size_t i = 0; i < aorta.size(); ++i) {
        if (aorta[i] == A{0}) {
            continue;
        }
        const Index3 p = g.index(i);
        const bool surface = std::any_of(n6.begin(), n6.end(), [&](const Index3& o) {
            const Index3 q = p + o;
            return g.contains(q) && aorta.at(q) == A{0};
        });
        if (!surface) {
            continue;
        }
        if (d[i] < best - 1e-9) {
            best = d[i];
            ties.assign(1, p);
        } else if (d[i] <= best + 1e-9) {
            ties.push_back(p);
        }
    }
    if (ties.empty()) {
        throw InvalidInput("aorta mask has no surface voxels");
    }
    Vec3 c;
    for (const auto& t : ties) {
        c += g.to_world(t);
    }
    c = c / static_cast<double>(ties.size());
    Index3 pick = ties.front();
    double pd = std::numeric_limits<double>::infinity();
    for (const auto& t : ties) {
        const double dt = distance(g.to_world(t), c);
        if (dt < pd - 1e-12 || (std::abs(dt - pd) <= 1e-12 && t < pick)) {
            pd = dt;
            pick = t;
        }
    }
    return pick;
}

}  // namespace detail

inline constexpr double kMinClusterGap_deg = 15.0;

/// Geometric ostia estimate. Vessel voxels within `search_mm` of the valve
/// centre (restricted to components reaching into that sphere) are grouped
/// by their angle around the local aorta axis, splitting at the two widest
/// angular gaps. Each group yields the aorta surface voxel closest to it.
/// The group with the larger (axis x direction) . x_hat is the right side.
template <class A, class V>
OstiaPoints estimate_ostia(const Volume<A>& aorta, const Volume<V>& vessels, const Vec3& valve_center,
                           double search_mm = 25.0, const std::optional<Vec3>& axis_hint = std::nullopt) {
    assert_same_grid(aorta, vessels);
    require_binary(aorta, "aorta mask");
    require_binary(vessels, "vessel mask");
    if (count_nonzero(aorta) == 0) {
        throw InvalidInput("aorta mask is empty");
    }
    const Grid3& g = aorta.grid();
    const Vec3 axis = axis_hint ? axis_hint->normalized() : estimate_aorta_axis(aorta, valve_center);

    std::vector<Index3> near;
    for (std::size_t i = 0; i < vessels.size(); ++i) {
        if (vessels[i] != V{0} && distance(g.to_world(g.index(i)), valve_center) <= search_mm) {
            near.push_back(g.index(i));
        }
    }
    if (near.empty()) {
        throw InvalidInput("no vessel voxels within " + std::to_string(search_mm) +
                           " mm of the valve centre; supply ostia points with --ostia");
    }

    Vec3 e1 = Vec3{1, 0, 0} - axis * axis.x;
    if (e1.norm() < 1e-6) {
        e1 = Vec3{0, 1, 0} - axis * axis.y;
    }
    e1 = e1.normalized();
    const Vec3 e2 = axis.cross(e1);
    std::vector<std::pair<double, std::size_t>> angles;
    for (std::size_t k = 0; k < near.size(); ++k) {
        const Vec3 d = g.to_world(near[k]) - valve_center;
        angles.push_back({std::atan2(d.dot(e2), d.dot(e1)), k});
    }
    std::sort(angles.begin(), angles.end());
    const std::size_t n = angles.size();
    std::vector<std::pair<double, std::size_t>> gaps;  // (gap, index of the voxel after the gap)
    for (std::size_t k = 0; k < n; ++k) {
        const double a = angles[k].first;
        const double b = k + 1 < n ? angles[k + 1].first : angles[0].first + 2.0 * std::numbers::pi;
        gaps.push_back({b - a, (k + 1) % n});
    }
    std::stable_sort(gaps.begin(), gaps.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    if (n < 2 || gaps[1].first * 180.0 / std::numbers::pi < kMinClusterGap_deg) {
        throw InvalidInput("vessels near the aortic root form a single angular cluster; cannot separate two ostia, "
                           "supply ostia points with --ostia");
    }
    std::size_t s0 = gaps[0].second;
    std::size_t s1 = gaps[1].second;
    MaskVolume c0(g, 0), c1(g, 0);
    Vec3 m0, m1;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t k = s0; k != s1; k = (k + 1) % n) {
        c0.at(near[angles[k].second]) = 1;
        m0 += g.to_world(near[angles[k].second]);
        ++n0;
    }
    for (std::size_t k = s1; k != s0; k = (k + 1) % n) {
        c1.at(near[angles[k].second]) = 1;
        m1 += g.to_world(near[angles[k].second]);
        ++n1;
    }
    const Vec3 d0 = (m0 / static_cast<double>(n0) - valve_center).normalized();
    const Vec3 d1 = (m1 / static_cast<double>(n1) - valve_center).normalized();
    const bool zero_is_right = axis.cross(d0).x > axis.cross(d1).x;

    OstiaPoints p;
    p.valve_center = valve_center;
    const Vec3 o0 = g.to_world(detail::closest_surface_voxel(aorta, c0));
    const Vec3 o1 = g.to_world(detail::closest_surface_voxel(aorta, c1));
    p.right_ostium = zero_is_right ? o0 : o1;
    p.left_ostium = zero_is_right ? o1 : o0;
    p.source = PointSource::Geometric;
    p.warnings = ostia_sanity_warnings(p);
    return p;
}

}  // namespace cac
