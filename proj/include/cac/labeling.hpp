#pragma once

// Territory assignment: every lesion voxel takes the label of the nearest
// labelled skeleton path point of the left and right vessel trees.

#include <map>

#include "cac/candidates.hpp"
#include "cac/vessel_graph.hpp"

namespace cac {

struct LabeledLesion {
    Lesion lesion;
    std::vector<TerritoryCode> voxel_labels;  // parallel to lesion.voxels

    std::map<TerritoryCode, std::size_t> territory_counts() const {
        std::map<TerritoryCode, std::size_t> out;
        for (auto c : voxel_labels) {
            ++out[c];
        }
        return out;
    }
};

struct ReferencePoint {
    Vec3 position;
    TerritoryCode label;
};

/// Labelled path points of the given trees, in tree/edge/path order.
inline std::vector<ReferencePoint> reference_points(std::initializer_list<const VesselGraph*> trees) {
    std::vector<ReferencePoint> out;
    for (const auto* g : trees) {
        if (!g) {
            continue;
        }
        for (const auto& e : g->edges) {
            if (!e.label) {
                throw InvalidInput("vessel graph edge " + std::to_string(e.id) + " has no label");
            }
            for (const auto& p : e.path) {
                out.push_back({p, *e.label});
            }
        }
    }
    return out;
}

/// Label of the reference point nearest `p`; equal distances resolve to the
/// lower territory code (LM before LAD before LCX before RCA).
inline TerritoryCode nearest_label(const std::vector<ReferencePoint>& refs, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    TerritoryCode label = TerritoryCode::Background;
    for (const auto& r : refs) {
        const Vec3 d = r.position - p;
        const double d2 = d.x * d.x + d.y * d.y + d.z * d.z;
        if (d2 < best || (d2 == best && r.label < label)) {
            best = d2;
            label = r.label;
        }
    }
    return label;
}

inline std::vector<LabeledLesion> assign_territories(const std::vector<Lesion>& lesions, const VesselGraph& left,
                                                     const VesselGraph& right) {
    const auto refs = reference_points({&left, &right});
    if (refs.empty()) {
        throw InvalidInput("vessel trees have no path points");
    }
    std::vector<LabeledLesion> out;
    out.reserve(lesions.size());
    for (const auto& l : lesions) {
        LabeledLesion ll{l, {}};
        ll.voxel_labels.reserve(l.voxels.size());
        for (const auto& v : l.voxels) {
            ll.voxel_labels.push_back(nearest_label(refs, l.grid.to_world(v)));
        }
        out.push_back(std::move(ll));
    }
    return out;
}

/// Relabels every LM voxel as LAD.
inline std::vector<LabeledLesion> relabel_lm_to_lad(std::vector<LabeledLesion> assignments) {
    for (auto& a : assignments) {
        for (auto& c : a.voxel_labels) {
            if (c == TerritoryCode::LM) {
                c = TerritoryCode::LAD;
            }
        }
    }
    return assignments;
}

/// Label map of coronary lesion voxels (territory codes) and aortic parts
/// (AORTA).
inline LabelVolume label_map(const Grid3& grid, const std::vector<LabeledLesion>& coronary,
                             const std::vector<Lesion>& aortic = {}) {
    LabelVolume m(grid, 0);
    for (const auto& a : aortic) {
        for (const auto& v : a.voxels) {
            m.at(v) = static_cast<std::uint8_t>(TerritoryCode::Aorta);
        }
    }
    for (const auto& l : coronary) {
        for (std::size_t k = 0; k < l.lesion.voxels.size(); ++k) {
            m.at(l.lesion.voxels[k]) = static_cast<std::uint8_t>(l.voxel_labels[k]);
        }
    }
    return m;
}

}  // namespace cac
