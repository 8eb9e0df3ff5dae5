#pragma once

// Agatston, volume and mass scores per territory, risk categories and the
// score report.

#include <map>

#include <json.hpp>

#include "cac/labeling.hpp"

namespace cac {

struct ScoringConfig {
    double min_island_area_mm2 = 1.0;
    bool slice_correction = true;
    double mass_calibration = 0.001;  // mg / (mm^3 HU)
};

/// Density weight of an island from its maximum HU.
inline int density_weight(double max_hu) {
    if (max_hu >= 400.0) {
        return 4;
    }
    if (max_hu >= 300.0) {
        return 3;
    }
    if (max_hu >= 200.0) {
        return 2;
    }
    if (max_hu >= 130.0) {
        return 1;
    }
    return 0;
}

inline double slice_factor(const Grid3& g, const ScoringConfig& cfg) {
    return cfg.slice_correction ? g.spacing().z / 3.0 : 1.0;
}

using TerritoryValues = std::map<TerritoryCode, double>;

inline TerritoryValues zero_territories() {
    TerritoryValues out;
    for (auto c : kCoronaryTerritories) {
        out[c] = 0.0;
    }
    return out;
}

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
  public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            c_ += (sum_ - t) + v;
        } else {
            c_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + c_; }

  private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

/// Agatston contributions of the coronary labels in `labels`. `hu` maps a
/// voxel of `labels` to its intensity. Islands are visited by ascending
/// slice, then by first voxel in scan order.
template <class Hu>
TerritoryValues agatston_core(const LabelVolume& labels, Hu hu, const ScoringConfig& cfg) {
    const Grid3& g = labels.grid();
    const auto [nx, ny, nz] = g.dims();
    const double pixel_area = g.spacing().x * g.spacing().y;
    const double factor = slice_factor(g, cfg);
    std::map<TerritoryCode, CompensatedSum> sums;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    std::vector<Index3> stack;
    for (int z = 0; z < nz; ++z) {
        std::fill(seen.begin(), seen.end(), 0);
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                const auto code = static_cast<TerritoryCode>(labels(x, y, z));
                const std::size_t p = static_cast<std::size_t>(y) * nx + x;
                if (!is_coronary(code) || seen[p]) {
                    continue;
                }
                std::size_t count = 0;
                double max_hu = -std::numeric_limits<double>::infinity();
                seen[p] = 1;
                stack.assign(1, {x, y, z});
                while (!stack.empty()) {
                    const Index3 v = stack.back();
                    stack.pop_back();
                    ++count;
                    max_hu = std::max(max_hu, static_cast<double>(hu(v)));
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int ax = v.x + dx;
                            const int ay = v.y + dy;
                            if (ax < 0 || ay < 0 || ax >= nx || ay >= ny) {
                                continue;
                            }
                            const std::size_t q = static_cast<std::size_t>(ay) * nx + ax;
                            if (!seen[q] && static_cast<TerritoryCode>(labels(ax, ay, z)) == code) {
                                seen[q] = 1;
                                stack.push_back({ax, ay, z});
                            }
                        }
                    }
                }
                const double area = static_cast<double>(count) * pixel_area;
                if (area < cfg.min_island_area_mm2) {
                    continue;
                }
                sums[code].add(area * density_weight(max_hu) * factor);
            }
        }
    }
    auto out = zero_territories();
    for (const auto& [code, s] : sums) {
        out[code] = s.value();
    }
    return out;
}

}  // namespace detail

/// Per-territory Agatston score: 8-connected islands per axial slice and
/// territory, area times density weight, times sz/3 with slice correction.
template <class T>
TerritoryValues agatston_score(const LabelVolume& labels, const Volume<T>& image, const ScoringConfig& cfg = {}) {
    assert_same_grid(labels, image);
    return detail::agatston_core(labels, [&](const Index3& v) { return image.at(v); }, cfg);
}

/// Agatston score of a single labelled lesion, islands formed from its own
/// voxels only.
template <class T>
TerritoryValues lesion_agatston(const LabeledLesion& l, const Volume<T>& image, const ScoringConfig& cfg = {}) {
    const Box3 box = *bounding_box_of(l.lesion.voxels);
    LabelVolume local(image.grid().sub_grid(box.lo, box.hi), 0);
    for (std::size_t k = 0; k < l.lesion.voxels.size(); ++k) {
        local.at(l.lesion.voxels[k] - box.lo) = static_cast<std::uint8_t>(l.voxel_labels[k]);
    }
    return detail::agatston_core(local, [&](const Index3& v) { return image.at(v + box.lo); }, cfg);
}

inline TerritoryValues volume_score(const LabelVolume& labels, const Grid3& grid) {
    assert_same_grid(labels.grid(), grid);
    std::map<TerritoryCode, std::size_t> counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<TerritoryCode>(labels[i]);
        if (is_coronary(c)) {
            ++counts[c];
        }
    }
    auto out = zero_territories();
    for (const auto& [c, n] : counts) {
        out[c] = static_cast<double>(n) * grid.voxel_volume();
    }
    return out;
}

template <class T>
TerritoryValues mass_score(const LabelVolume& labels, const Volume<T>& image, double calibration = 0.001) {
    assert_same_grid(labels, image);
    const double vv = image.grid().voxel_volume();
    std::map<TerritoryCode, detail::CompensatedSum> sums;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<TerritoryCode>(labels[i]);
        if (is_coronary(c)) {
            sums[c].add(static_cast<double>(image[i]) * vv * calibration);
        }
    }
    auto out = zero_territories();
    for (const auto& [c, s] : sums) {
        out[c] = s.value();
    }
    return out;
}

enum class RiskScheme { Five, Four };

/// Five-class: [0,1) 1, [1,10] 2, (10,100] 3, (100,400] 4, above 5.
/// Four-class: 0 1, (0,100] 2, (100,400] 3, above 4.
inline int risk_category(double total_agatston, RiskScheme scheme) {
    if (!(total_agatston >= 0.0)) {
        throw InvalidInput("risk category needs a non-negative score");
    }
    const double s = total_agatston;
    if (scheme == RiskScheme::Five) {
        if (s < 1.0) {
            return 1;
        }
        if (s <= 10.0) {
            return 2;
        }
        if (s <= 100.0) {
            return 3;
        }
        return s <= 400.0 ? 4 : 5;
    }
    if (s == 0.0) {
        return 1;
    }
    if (s <= 100.0) {
        return 2;
    }
    return s <= 400.0 ? 3 : 4;
}

// ---------------------------------------------------------------------------
// Report

struct TerritoryScore {
    double agatston = 0.0;
    double volume_mm3 = 0.0;
    double mass_mg = 0.0;
    int lesion_count = 0;
};

struct LesionReport {
    int id = 0;
    std::map<TerritoryCode, std::size_t> territories;
    Vec3 centroid_world;
    double volume_mm3 = 0.0;
    double max_hu = 0.0;
    double agatston = 0.0;
};

struct ScoreReport {
    std::map<TerritoryCode, TerritoryScore> per_territory;
    TerritoryScore total;
    int risk5 = 1;
    int risk4 = 1;
    std::vector<LesionReport> lesions;
};

/// Scores the coronary label map. A lesion counts once towards every
/// territory it touches; the total count is the sum over territories.
template <class T>
ScoreReport score_report(const LabelVolume& labels, const Volume<T>& image, const std::vector<LabeledLesion>& lesions,
                         const ScoringConfig& cfg = {}) {
    const auto ag = agatston_score(labels, image, cfg);
    const auto vol = volume_score(labels, image.grid());
    const auto mass = mass_score(labels, image, cfg.mass_calibration);
    ScoreReport r;
    for (auto c : kCoronaryTerritories) {
        r.per_territory[c] = {ag.at(c), vol.at(c), mass.at(c), 0};
    }
    for (const auto& l : lesions) {
        LesionReport lr;
        lr.id = l.lesion.id;
        lr.territories = l.territory_counts();
        lr.centroid_world = l.lesion.centroid_world;
        lr.volume_mm3 = l.lesion.volume_mm3;
        lr.max_hu = l.lesion.max_hu;
        for (const auto& [c, v] : lesion_agatston(l, image, cfg)) {
            lr.agatston += v;
        }
        for (const auto& [c, n] : lr.territories) {
            if (is_coronary(c)) {
                ++r.per_territory[c].lesion_count;
            }
        }
        r.lesions.push_back(std::move(lr));
    }
    detail::CompensatedSum a, v, m;
    for (auto c : kCoronaryTerritories) {
        const auto& t = r.per_territory[c];
        a.add(t.agatston);
        v.add(t.volume_mm3);
        m.add(t.mass_mg);
        r.total.lesion_count += t.lesion_count;
    }
    r.total.agatston = a.value();
    r.total.volume_mm3 = v.value();
    r.total.mass_mg = m.value();
    r.risk5 = risk_category(r.total.agatston, RiskScheme::Five);
    r.risk4 = risk_category(r.total.agatston, RiskScheme::Four);
    return r;
}

inline nlohmann::ordered_json territory_score_json(const TerritoryScore& t) {
    nlohmann::ordered_json j;
    j["agatston"] = t.agatston;
    j["volume_mm3"] = t.volume_mm3;
    j["mass_mg"] = t.mass_mg;
    j["lesion_count"] = t.lesion_count;
    return j;
}

/// Report JSON without config echo or diagnostics; the pipeline adds those.
inline nlohmann::ordered_json report_json(const ScoreReport& r) {
    nlohmann::ordered_json j;
    j["total"] = territory_score_json(r.total);
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (auto c : kCoronaryTerritories) {
        per[std::string(to_string(c))] = territory_score_json(r.per_territory.at(c));
    }
    j["per_territory"] = per;
    j["risk5"] = r.risk5;
    j["risk4"] = r.risk4;
    j["lesions"] = nlohmann::ordered_json::array();
    for (const auto& l : r.lesions) {
        nlohmann::ordered_json jl;
        jl["id"] = l.id;
        nlohmann::ordered_json terr = nlohmann::ordered_json::object();
        for (const auto& [c, n] : l.territories) {
            terr[std::string(to_string(c))] = n;
        }
        jl["territories"] = terr;
        jl["centroid_world"] = {l.centroid_world.x, l.centroid_world.y, l.centroid_world.z};
        jl["volume_mm3"] = l.volume_mm3;
        jl["max_hu"] = l.max_hu;
        jl["agatston"] = l.agatston;
        j["lesions"].push_back(jl);
    }
    return j;
}

inline TerritoryScore parse_territory_score(const nlohmann::json& j) {
    return {j.at("agatston").get<double>(), j.at("volume_mm3").get<double>(), j.at("mass_mg").get<double>(),
            j.at("lesion_count").get<int>()};
}

/// Reads the score fields of a report JSON (lesion records are skipped).
inline ScoreReport parse_report(const nlohmann::json& j) {
    ScoreReport r;
    try {
        r.total = parse_territory_score(j.at("total"));
        for (auto c : kCoronaryTerritories) {
            r.per_territory[c] = parse_territory_score(j.at("per_territory").at(std::string(to_string(c))));
        }
        r.risk5 = j.at("risk5").get<int>();
        r.risk4 = j.at("risk4").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::MissingKey, "report", e.what());
    }
    return r;
}

}  // namespace cac
