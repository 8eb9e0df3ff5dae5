#pragma once

// Vessel trees as rooted graphs of skeleton branches: bridging of
// fragmented masks, skeleton tracing into nodes/edges, orientation from the
// ostium, and per-edge morphology (length, radius, end tangents).

#include <deque>
#include <map>
#include <numeric>
#include <set>

#include "cac/morphology.hpp"

namespace cac {

// ---------------------------------------------------------------------------
// Bridging

struct BridgeResult {
    MaskVolume mask;     // accepted components plus bridge voxels
    MaskVolume bridges;  // bridge voxels that were background in the input
    int merged = 0;      // components merged after the seed component
};

/// Voxel line between two voxels (3D Bresenham on the dominant axis), both
/// ends included.
inline std::vector<Index3> bresenham_line(const Index3& a, const Index3& b) {
    std::vector<Index3> out;
    const Index3 d{b.x - a.x, b.y - a.y, b.z - a.z};
    const Index3 ad{std::abs(d.x), std::abs(d.y), std::abs(d.z)};
    const Index3 s{d.x > 0 ? 1 : (d.x < 0 ? -1 : 0), d.y > 0 ? 1 : (d.y < 0 ? -1 : 0),
                   d.z > 0 ? 1 : (d.z < 0 ? -1 : 0)};
    const int major = ad.x >= ad.y && ad.x >= ad.z ? 0 : (ad.y >= ad.z ? 1 : 2);
    const int u = (major + 1) % 3;
    const int v = (major + 2) % 3;
    const int n = ad[major];
    Index3 p = a;
    int eu = 2 * ad[u] - n;
    int ev = 2 * ad[v] - n;
    out.push_back(p);
    for (int k = 0; k < n; ++k) {
        p[major] += s[major];
        if (eu > 0) {
            p[u] += s[u];
            eu -= 2 * n;
        }
        if (ev > 0) {
            p[v] += s[v];
            ev -= 2 * n;
        }
        eu += 2 * ad[u];
        ev += 2 * ad[v];
        out.push_back(p);
    }
    return out;
}

/// Greedy merge of vessel fragments into one tree. Starting from the
/// component nearest `seed`, the component with the smallest voxel-to-voxel
/// gap to the accepted set is joined by a straight voxel line, as long as the
/// gap is <= max_gap_mm. Ties go to the lower component label; the bridge
/// endpoints are the first minimisers in scan order.
template <class T>
BridgeResult bridge_components_detailed(const Volume<T>& vessels, const Vec3& seed, double max_gap_mm = 10.0) {
    require_binary(vessels, "vessel mask");
    const Grid3& full = vessels.grid();
    const auto bbox = bounding_box(vessels);
    if (!bbox) {
        throw InvalidInput("vessel mask is empty");
    }
    const Box3 box = expand_box(*bbox, full, {1, 1, 1});
    const auto local = crop(vessels, box);
    const Grid3& g = local.grid();
    const auto cs = connected_components(local);
    const auto groups = component_voxels(cs);

    // Seed component: smallest distance from the seed point.
    std::size_t start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < groups.size(); ++k) {
        for (const auto& v : groups[k]) {
            const double d = distance(g.to_world(v), seed);
            if (d < best) {
                best = d;
                start = k;
            }
        }
    }
    if (best > max_gap_mm) {
        throw InvalidInput("no vessel component within " + std::to_string(max_gap_mm) + " mm of the seed point " +
                           detail::vec_str(seed));
    }

    MaskVolume accepted(g, 0);
    MaskVolume bridge(g, 0);
    std::vector<char> taken(groups.size(), 0);
    auto accept = [&](std::size_t k) {
        taken[k] = 1;
        for (const auto& v : groups[k]) {
            accepted.at(v) = 1;
        }
    };
    accept(start);
    int merged = 0;
    while (true) {
        const auto d = edt(accepted, DistanceTarget::Foreground).distance;
        std::optional<std::size_t> pick;
        double gap = std::numeric_limits<double>::infinity();
        Index3 from;
        for (std::size_t k = 0; k < groups.size(); ++k) {
            if (taken[k]) {
                continue;
            }
            for (const auto& v : groups[k]) {
                const double dv = d.at(v);
                if (dv < gap) {
                    gap = dv;
                    pick = k;
                    from = v;
                }
            }
        }
        if (!pick || gap > max_gap_mm) {
            break;
        }
        // Closest accepted voxel to `from`, first in scan order on ties.
        Index3 to = from;
        double dt = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < accepted.size(); ++i) {
            if (!accepted[i]) {
                continue;
            }
            const double di = distance(g.to_world(g.index(i)), g.to_world(from));
            if (di < dt) {
                dt = di;
                to = g.index(i);
            }
        }
        for (const auto& p : bresenham_line(to, from)) {
            if (!accepted.at(p) && !local.at(p)) {
                bridge.at(p) = 1;
            }
            accepted.at(p) = 1;
        }
        accept(*pick);
        ++merged;
    }

    BridgeResult out{MaskVolume(full, 0), MaskVolume(full, 0), merged};
    paste(out.mask, accepted, box.lo);
    paste(out.bridges, bridge, box.lo);
    return out;
}

template <class T>
MaskVolume bridge_components(const Volume<T>& vessels, const Vec3& seed, double max_gap_mm = 10.0) {
    return bridge_components_detailed(vessels, seed, max_gap_mm).mask;
}

// ---------------------------------------------------------------------------
// Graph

enum class NodeKind { Root, Endpoint, Junction };

inline std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Root: return "root";
        case NodeKind::Endpoint: return "endpoint";
        case NodeKind::Junction: return "junction";
    }
    return "junction";
}

struct GraphNode {
    int id = 0;
    Vec3 position;
    NodeKind kind = NodeKind::Endpoint;
};

struct GraphEdge {
    int id = 0;
    int from = 0;
    int to = 0;
    std::vector<Vec3> path;
    std::vector<Index3> voxels;  // same points as `path`, as grid indices
    double length_mm = 0.0;
    double mean_radius_mm = 0.0;
    Vec3 direction_in;
    Vec3 direction_out;
    std::optional<TerritoryCode> label;
    bool is_virtual = false;
};

struct VesselGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    int root = -1;

    bool rooted() const { return root >= 0 && root < static_cast<int>(nodes.size()); }

    std::vector<int> out_edges(int node) const {
        std::vector<int> out;
        for (const auto& e : edges) {
            if (e.from == node) {
                out.push_back(e.id);
            }
        }
        return out;
    }

    std::optional<int> in_edge(int node) const {
        for (const auto& e : edges) {
            if (e.to == node) {
                return e.id;
            }
        }
        return std::nullopt;
    }

    /// Edge ids in breadth-first order from the root.
    std::vector<int> bfs_edges() const {
        std::vector<int> order;
        if (!rooted()) {
            return order;
        }
        std::deque<int> q{root};
        while (!q.empty()) {
            const int n = q.front();
            q.pop_front();
            for (int e : out_edges(n)) {
                order.push_back(e);
                q.push_back(edges[static_cast<std::size_t>(e)].to);
            }
        }
        return order;
    }

    /// Total length of `edge` and everything downstream of it.
    double subtree_length(int edge) const {
        double total = 0.0;
        std::deque<int> q{edge};
        while (!q.empty()) {
            const auto& e = edges[static_cast<std::size_t>(q.front())];
            q.pop_front();
            total += e.length_mm;
            for (int c : out_edges(e.to)) {
                q.push_back(c);
            }
        }
        return total;
    }

    /// True if the edges, oriented from -> to, form a tree hanging from the
    /// root (checked by a topological sort).
    bool is_acyclic() const {
        std::vector<int> indeg(nodes.size(), 0);
        for (const auto& e : edges) {
            ++indeg[static_cast<std::size_t>(e.to)];
        }
        std::deque<int> q;
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            if (indeg[n] == 0) {
                q.push_back(static_cast<int>(n));
            }
        }
        std::size_t seen = 0;
        while (!q.empty()) {
            const int n = q.front();
            q.pop_front();
            ++seen;
            for (int e : out_edges(n)) {
                if (--indeg[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].to)] == 0) {
                    q.push_back(edges[static_cast<std::size_t>(e)].to);
                }
            }
        }
        return seen == nodes.size();
    }
};

struct GraphParams {
    double tangent_step_mm = 2.0;  // sample spacing of the 3-point tangent
    double spur_factor = 1.5;      // terminal edges shorter than this times the junction radius are pruned
};

namespace detail {

inline double path_length(const std::vector<Vec3>& path) {
    double len = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        len += distance(path[k - 1], path[k]);
    }
    return len;
}

/// Point at arc length `s` along `path` (clamped to its ends).
inline Vec3 point_at(const std::vector<Vec3>& path, double s) {
    if (s <= 0.0 || path.size() == 1) {
        return path.front();
    }
    double acc = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const double seg = distance(path[k - 1], path[k]);
        if (acc + seg >= s && seg > 0.0) {
            return path[k - 1] + (path[k] - path[k - 1]) * ((s - acc) / seg);
        }
        acc += seg;
    }
    return path.back();
}

/// Unit tangent near the start of `path`, pointing into the path: the
/// central 3-point difference (p(2h) - p(0)) / 2h at arc length h.
inline Vec3 start_tangent(const std::vector<Vec3>& path, double step_mm) {
    const double len = path_length(path);
    if (len <= 0.0) {
        return {};
    }
    const double h = std::min(step_mm, len / 2.0);
    const Vec3 t = (point_at(path, 2.0 * h) - point_at(path, 0.0)) / (2.0 * h);
    return t.norm() > 0.0 ? t.normalized() : (path.back() - path.front()).normalized();
}

struct RawEdge {
    int a = 0;
    int b = 0;
    std::vector<Index3> voxels;  // from node a to node b
    double length = 0.0;
    bool alive = true;
};

}  // namespace detail

/// Skeleton graph of a vessel tree, rooted at the special skeleton point
/// (endpoint or junction) nearest `root_point`. Junction voxels (three or
/// more skeleton neighbours) that touch each other form one node at their
/// centroid. Cycles are broken by keeping a minimum spanning tree by edge
/// length, short terminal spurs are pruned, and pass-through nodes are
/// merged away. `bridges` marks voxels that make an edge virtual.
template <class T>
VesselGraph build_skeleton_graph(const Volume<T>& vessels, const Vec3& root_point, const MaskVolume* bridges = nullptr,
                                 const GraphParams& params = {}) {
    require_binary(vessels, "vessel mask");
    const Grid3& full = vessels.grid();
    const auto bbox = bounding_box(vessels);
    if (!bbox) {
        throw InvalidInput("vessel mask is empty; no skeleton");
    }
    const Box3 box = expand_box(*bbox, full, {1, 1, 1});
    const auto local = crop(vessels, box);
    const Grid3& g = local.grid();
    const auto skel = skeletonize_3d(local);
    const auto radius = edt(local, DistanceTarget::Background).distance;
    const auto n26 = neighbor_offsets(26);

    std::vector<std::size_t> skel_voxels;
    for (std::size_t i = 0; i < skel.size(); ++i) {
        if (skel[i]) {
            skel_voxels.push_back(i);
        }
    }
    if (skel_voxels.empty()) {
        throw InvalidInput("empty skeleton");
    }
    auto degree = [&](const Index3& p) { return count_26_neighbors(skel, p); };

    // Special voxels and their node ids.
    std::map<std::size_t, int> node_of;
    std::vector<Vec3> node_pos;
    std::vector<bool> node_is_junction;
    for (std::size_t i : skel_voxels) {
        const Index3 p = g.index(i);
        const int deg = degree(p);
        if (node_of.count(i)) {
            continue;
        }
        if (deg <= 1) {
            node_of[i] = static_cast<int>(node_pos.size());
            node_pos.push_back(g.to_world(p));
            node_is_junction.push_back(false);
        } else if (deg >= 3) {
            // Flood the junction cluster.
            const int id = static_cast<int>(node_pos.size());
            std::vector<Index3> cluster{p};
            node_of[i] = id;
            for (std::size_t k = 0; k < cluster.size(); ++k) {
                for (const auto& o : n26) {
                    const Index3 q = cluster[k] + o;
                    if (!g.contains(q) || !skel.at(q) || node_of.count(g.linear(q)) || degree(q) < 3) {
                        continue;
                    }
                    node_of[g.linear(q)] = id;
                    cluster.push_back(q);
                }
            }
            Vec3 c;
            for (const auto& q : cluster) {
                c += g.to_world(q);
            }
            node_pos.push_back(c / static_cast<double>(cluster.size()));
            node_is_junction.push_back(true);
        }
    }

    // Trace paths between special voxels.
    std::vector<detail::RawEdge> raw;
    std::vector<char> visited(skel.size(), 0);
    std::set<std::pair<std::size_t, std::size_t>> direct;
    for (const auto& [si, sid] : node_of) {
        const Index3 s = g.index(si);
        for (const auto& o : n26) {
            const Index3 w = s + o;
            if (!g.contains(w) || !skel.at(w)) {
                continue;
            }
            const std::size_t wi = g.linear(w);
            if (const auto it = node_of.find(wi); it != node_of.end()) {
                if (it->second != sid && !direct.count({std::min(si, wi), std::max(si, wi)})) {
                    direct.insert({std::min(si, wi), std::max(si, wi)});
                    raw.push_back({sid, it->second, {s, w}, 0.0, true});
                }
                continue;
            }
            if (visited[wi]) {
                continue;
            }
            std::vector<Index3> path{s, w};
            visited[wi] = 1;
            Index3 prev = s;
            Index3 cur = w;
            int end = -1;
            while (end < 0) {
                std::optional<Index3> next;
                std::optional<Index3> special;
                for (const auto& o2 : n26) {
                    const Index3 q = cur + o2;
                    if (q == prev || !g.contains(q) || !skel.at(q)) {
                        continue;
                    }
                    const std::size_t qi = g.linear(q);
                    if (node_of.count(qi)) {
                        if (!(node_of.at(qi) == sid && path.size() == 2) && !special) {
                            special = q;
                        }
                    } else if (!visited[qi] && !next) {
                        next = q;
                    }
                }
                if (special) {
                    path.push_back(*special);
                    end = node_of.at(g.linear(*special));
                } else if (next) {
                    visited[g.linear(*next)] = 1;
                    path.push_back(*next);
                    prev = cur;
                    cur = *next;
                } else {
                    break;  // dead end inside a ring remnant
                }
            }
            if (end >= 0) {
                raw.push_back({sid, end, std::move(path), 0.0, true});
            }
        }
    }
    for (auto& e : raw) {
        std::vector<Vec3> pts;
        for (const auto& v : e.voxels) {
            pts.push_back(g.to_world(v));
        }
        e.length = detail::path_length(pts);
    }

    const int node_count = static_cast<int>(node_pos.size());
    std::vector<bool> node_alive(static_cast<std::size_t>(node_count), true);

    // Root: special node nearest root_point; ties to the lower id.
    int root = 0;
    {
        double best = std::numeric_limits<double>::infinity();
        for (int n = 0; n < node_count; ++n) {
            const double d = distance(node_pos[static_cast<std::size_t>(n)], root_point);
            if (d < best) {
                best = d;
                root = n;
            }
        }
    }

    // Self loops and cycles: Kruskal spanning forest by length.
    {
        std::vector<std::size_t> order(raw.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return raw[l].length < raw[r].length; });
        detail::UnionFind uf;
        for (int n = 0; n < node_count; ++n) {
            uf.make();
        }
        for (std::size_t k : order) {
            auto& e = raw[k];
            if (e.a == e.b || uf.find(static_cast<std::uint32_t>(e.a)) == uf.find(static_cast<std::uint32_t>(e.b))) {
                e.alive = false;
            } else {
                uf.unite(static_cast<std::uint32_t>(e.a), static_cast<std::uint32_t>(e.b));
            }
        }
        // Keep only the root's tree.
        for (auto& e : raw) {
            if (e.alive && uf.find(static_cast<std::uint32_t>(e.a)) != uf.find(static_cast<std::uint32_t>(root))) {
                e.alive = false;
            }
        }
        for (int n = 0; n < node_count; ++n) {
            if (uf.find(static_cast<std::uint32_t>(n)) != uf.find(static_cast<std::uint32_t>(root))) {
                node_alive[static_cast<std::size_t>(n)] = false;
            }
        }
    }

    auto node_degree = [&](int n) {
        int d = 0;
        for (const auto& e : raw) {
            if (e.alive && (e.a == n || e.b == n)) {
                ++d;
            }
        }
        return d;
    };
    auto incident = [&](int n) {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (raw[k].alive && (raw[k].a == n || raw[k].b == n)) {
                out.push_back(k);
            }
        }
        return out;
    };
    auto node_radius = [&](int n) {
        const Vec3 p = node_pos[static_cast<std::size_t>(n)];
        return radius.at(g.to_voxel(p));
    };

    // Merge pass-through nodes, prune spurs, repeat until stable.
    auto merge_degree_two = [&]() {
        bool any = false;
        for (int n = 0; n < node_count; ++n) {
            if (n == root || !node_alive[static_cast<std::size_t>(n)]) {
                continue;
            }
            const auto inc = incident(n);
            if (inc.size() != 2) {
                continue;
            }
            auto& e1 = raw[inc[0]];
            auto& e2 = raw[inc[1]];
            if (e1.b != n) {
                std::swap(e1.a, e1.b);
                std::reverse(e1.voxels.begin(), e1.voxels.end());
            }
            if (e2.a != n) {
                std::swap(e2.a, e2.b);
                std::reverse(e2.voxels.begin(), e2.voxels.end());
            }
            if (e1.a == e2.b) {
                continue;  // would create a self loop
            }
            std::vector<Index3> merged = e1.voxels;
            std::size_t skip = !e2.voxels.empty() && !merged.empty() && e2.voxels.front() == merged.back() ? 1 : 0;
            merged.insert(merged.end(), e2.voxels.begin() + static_cast<std::ptrdiff_t>(skip), e2.voxels.end());
            e1.voxels = std::move(merged);
            e1.b = e2.b;
            e1.length += e2.length;
            e2.alive = false;
            node_alive[static_cast<std::size_t>(n)] = false;
            any = true;
        }
        return any;
    };
    auto prune_spurs = [&]() {
        bool any = false;
        for (auto& e : raw) {
            if (!e.alive || e.a == root || e.b == root) {
                continue;
            }
            const int da = node_degree(e.a);
            const int db = node_degree(e.b);
            int leaf = -1, hub = -1;
            if (da == 1 && db >= 3) {
                leaf = e.a;
                hub = e.b;
            } else if (db == 1 && da >= 3) {
                leaf = e.b;
                hub = e.a;
            }
            if (leaf < 0) {
                continue;
            }
            if (e.length < params.spur_factor * node_radius(hub) + g.max_spacing()) {
                e.alive = false;
                node_alive[static_cast<std::size_t>(leaf)] = false;
                any = true;
            }
        }
        return any;
    };
    for (bool changed = true; changed;) {
        changed = merge_degree_two();
        changed = prune_spurs() || changed;
    }

    // Orient breadth-first from the root and renumber.
    VesselGraph out;
    std::vector<int> new_id(static_cast<std::size_t>(node_count), -1);
    std::deque<int> q{root};
    new_id[static_cast<std::size_t>(root)] = 0;
    out.nodes.push_back({0, node_pos[static_cast<std::size_t>(root)], NodeKind::Root});
    out.root = 0;
    std::vector<char> used(raw.size(), 0);
    while (!q.empty()) {
        const int n = q.front();
        q.pop_front();
        for (std::size_t k : incident(n)) {
            if (used[k]) {
                continue;
            }
            used[k] = 1;
            auto e = raw[k];
            if (e.a != n) {
                std::swap(e.a, e.b);
                std::reverse(e.voxels.begin(), e.voxels.end());
            }
            const int child = e.b;
            if (new_id[static_cast<std::size_t>(child)] < 0) {
                new_id[static_cast<std::size_t>(child)] = static_cast<int>(out.nodes.size());
                const NodeKind kind = node_degree(child) == 1 ? NodeKind::Endpoint : NodeKind::Junction;
                out.nodes.push_back({new_id[static_cast<std::size_t>(child)], node_pos[static_cast<std::size_t>(child)], kind});
                q.push_back(child);
            }
            GraphEdge ge;
            ge.id = static_cast<int>(out.edges.size());
            ge.from = new_id[static_cast<std::size_t>(n)];
            ge.to = new_id[static_cast<std::size_t>(child)];
            double rsum = 0.0;
            for (const auto& v : e.voxels) {
                const Index3 gv = v + box.lo;
                ge.voxels.push_back(gv);
                ge.path.push_back(full.to_world(gv));
                rsum += radius.at(v);
                if (bridges && bridges->at(gv)) {
                    ge.is_virtual = true;
                }
            }
            ge.length_mm = detail::path_length(ge.path);
            ge.mean_radius_mm = rsum / static_cast<double>(e.voxels.size());
            ge.direction_in = detail::start_tangent(ge.path, params.tangent_step_mm);
            std::vector<Vec3> rev(ge.path.rbegin(), ge.path.rend());
            ge.direction_out = -detail::start_tangent(rev, params.tangent_step_mm);
            out.edges.push_back(std::move(ge));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export

inline std::string edge_label_string(const GraphEdge& e) {
    return e.label ? std::string(to_string(*e.label)) : std::string("UNSET");
}

}  // namespace cac
