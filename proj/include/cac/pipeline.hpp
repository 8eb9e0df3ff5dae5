#pragma once

// End-to-end scoring: thresholding, pericardium filter, valve and ostia
// localization, vessel filter, tree labelling, ostial separation, lesion
// labelling and scoring, in that order.

#include <chrono>
#include <sstream>

#include <json.hpp>

#include "cac/localization.hpp"
#include "cac/metaimage.hpp"
#include "cac/scoring.hpp"
#include "cac/separation.hpp"
#include "cac/vessel_tree.hpp"

namespace cac {

struct PipelineConfig {
    double threshold_hu = kCalciumThresholdHu;
    double pericardium_dilation_mm = 1.0;
    double vessel_dilation_mm = 3.0;
    double ostium_patch_mm = 25.0;
    double bridge_max_gap_mm = 10.0;
    double min_island_area_mm2 = 1.0;
    bool slice_correction = true;
    double mass_calibration = 0.001;
    double min_lesion_mm3 = 0.0;
    int connectivity = 26;
    double plane_support_cap_mm = 6.0;
    int plane_min_support = 10;
    double ostia_search_mm = 25.0;

    ScoringConfig scoring() const { return {min_island_area_mm2, slice_correction, mass_calibration}; }
};

namespace detail {

inline double parse_config_number(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size() || !std::isfinite(v)) {
        throw ParseError(ParseError::Kind::InvalidValue, key, "'" + value + "' is not a number");
    }
    return v;
}

inline bool parse_config_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw ParseError(ParseError::Kind::InvalidValue, key, "'" + value + "' is not a boolean");
}

}  // namespace detail

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
/// Unknown keys and malformed values are parse errors.
inline PipelineConfig parse_config(const std::string& text, PipelineConfig cfg = {}) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = metaimage_detail::trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError(ParseError::Kind::InvalidValue, "line " + std::to_string(lineno),
                             "expected 'key = value', got '" + t + "'");
        }
        const std::string key = metaimage_detail::trim(t.substr(0, eq));
        const std::string value = metaimage_detail::trim(t.substr(eq + 1));
        auto num = [&] { return detail::parse_config_number(key, value); };
        auto positive = [&] {
            const double v = num();
            if (!(v > 0.0)) {
                throw ParseError(ParseError::Kind::InvalidValue, key, "must be > 0");
            }
            return v;
        };
        auto non_negative = [&] {
            const double v = num();
            if (v < 0.0) {
                throw ParseError(ParseError::Kind::InvalidValue, key, "must be >= 0");
            }
            return v;
        };
        if (key == "threshold_hu") {
            cfg.threshold_hu = num();
        } else if (key == "pericardium_dilation_mm") {
            cfg.pericardium_dilation_mm = non_negative();
        } else if (key == "vessel_dilation_mm") {
            cfg.vessel_dilation_mm = non_negative();
        } else if (key == "ostium_patch_mm") {
            cfg.ostium_patch_mm = positive();
        } else if (key == "bridge_max_gap_mm") {
            cfg.bridge_max_gap_mm = non_negative();
        } else if (key == "min_island_area_mm2") {
            cfg.min_island_area_mm2 = non_negative();
        } else if (key == "slice_correction") {
            cfg.slice_correction = detail::parse_config_bool(key, value);
        } else if (key == "mass_calibration") {
            cfg.mass_calibration = non_negative();
        } else if (key == "min_lesion_mm3") {
            cfg.min_lesion_mm3 = non_negative();
        } else if (key == "connectivity") {
            const double v = num();
            if (v != 6.0 && v != 18.0 && v != 26.0) {
                throw ParseError(ParseError::Kind::UnsupportedValue, key, "must be 6, 18 or 26");
            }
            cfg.connectivity = static_cast<int>(v);
        } else if (key == "plane_support_cap_mm") {
            cfg.plane_support_cap_mm = positive();
        } else if (key == "plane_min_support") {
            const double v = num();
            if (v < 3.0 || v != std::floor(v)) {
                throw ParseError(ParseError::Kind::InvalidValue, key, "must be an integer >= 3");
            }
            cfg.plane_min_support = static_cast<int>(v);
        } else if (key == "ostia_search_mm") {
            cfg.ostia_search_mm = positive();
        } else {
            throw ParseError(ParseError::Kind::UnsupportedValue, key, "unknown config key '" + key + "'");
        }
    }
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(ParseError::Kind::Io, path, "cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline nlohmann::ordered_json config_echo_json(const PipelineConfig& c, bool orcascore_labels) {
    nlohmann::ordered_json j;
    j["threshold_hu"] = c.threshold_hu;
    j["pericardium_dilation_mm"] = c.pericardium_dilation_mm;
    j["vessel_dilation_mm"] = c.vessel_dilation_mm;
    j["ostium_patch_mm"] = c.ostium_patch_mm;
    j["bridge_max_gap_mm"] = c.bridge_max_gap_mm;
    j["min_island_area_mm2"] = c.min_island_area_mm2;
    j["slice_correction"] = c.slice_correction;
    j["mass_calibration"] = c.mass_calibration;
    j["min_lesion_mm3"] = c.min_lesion_mm3;
    j["connectivity"] = c.connectivity;
    j["plane_support_cap_mm"] = c.plane_support_cap_mm;
    j["plane_min_support"] = c.plane_min_support;
    j["ostia_search_mm"] = c.ostia_search_mm;
    j["orcascore_labels"] = orcascore_labels;
    return j;
}

struct PipelineOptions {
    std::optional<OstiaPoints> ostia;
    bool orcascore_labels = false;
    bool record_timings = false;
    const BranchClassifier* classifier = nullptr;
};

struct StageTiming {
    std::string stage;
    double ms = 0.0;
};

struct PipelineDiagnostics {
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::size_t>> counts;
    std::vector<StageTiming> timings;
    std::vector<SeparationPlane> planes;
};

struct PipelineResult {
    ScoreReport report;
    LabelVolume label_map;
    VesselGraph graph_left;
    VesselGraph graph_right;
    OstiaPoints ostia;
    std::vector<LabeledLesion> lesions;
    std::vector<Lesion> aortic_parts;
    PipelineDiagnostics diagnostics;
    PipelineConfig config;
    bool orcascore_labels = false;
};

namespace detail {

/// Runs `fn` as pipeline stage `name`: library errors are rethrown as
/// StageError naming the stage, and the elapsed time is recorded.
template <class Fn>
auto run_stage(const char* name, PipelineDiagnostics& d, Fn fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto done = [&] {
        d.timings.push_back({name, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()});
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            done();
        } else {
            auto r = fn();
            done();
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e.what());
    }
}

inline nlohmann::ordered_json vec_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x, v.y, v.z}); }

}  // namespace detail

template <class T, class P, class A, class V>
PipelineResult run_pipeline(const Volume<T>& image, const Volume<P>& pericardium, const Volume<A>& aorta,
                            const Volume<V>& vessels, const PipelineConfig& cfg = {},
                            const PipelineOptions& opts = {}) {
    assert_same_grid(image, pericardium);
    assert_same_grid(image, aorta);
    assert_same_grid(image, vessels);
    require_binary(pericardium, "pericardium mask");
    require_binary(aorta, "aorta mask");
    require_binary(vessels, "vessel mask");
    const Connectivity conn = connectivity_from_int(cfg.connectivity);
    const Grid3& g = image.grid();

    PipelineResult r;
    r.config = cfg;
    r.orcascore_labels = opts.orcascore_labels;
    auto& diag = r.diagnostics;
    auto count = [&](const char* what, std::size_t n) { diag.counts.emplace_back(what, n); };

    auto lesions = detail::run_stage("thresholding", diag, [&] {
        const auto mask = threshold_calcium(image, cfg.threshold_hu);
        return extract_lesions(mask, image, conn);
    });
    count("candidates", lesions.size());

    MaskVolume vessel_mask(g, 0);
    detail::run_stage("pericardium_filter", diag, [&] {
        const auto region = dilate_ball(pericardium, cfg.pericardium_dilation_mm);
        lesions = partition_by_region(lesions, region).kept;
        lesions = filter_lesions(lesions, [&](const Lesion& l) { return l.volume_mm3 >= cfg.min_lesion_mm3; });
        MaskVolume binary(g, 0);
        for (std::size_t i = 0; i < g.voxel_count(); ++i) {
            binary[i] = vessels[i] != V{0} ? 1 : 0;
        }
        const auto cs = connected_components(binary, conn);
        std::vector<std::uint8_t> keep(static_cast<std::size_t>(cs.count) + 1, 0);
        for (std::size_t i = 0; i < g.voxel_count(); ++i) {
            if (cs.labels[i] > 0 && region[i]) {
                keep[static_cast<std::size_t>(cs.labels[i])] = 1;
            }
        }
        for (std::size_t i = 0; i < g.voxel_count(); ++i) {
            vessel_mask[i] = keep[static_cast<std::size_t>(cs.labels[i])];
        }
    });
    count("after_pericardium_filter", lesions.size());
    if (count_nonzero(vessel_mask) == 0) {
        throw StageError("vessel_tree", "vessel mask is empty inside the pericardium");
    }

    r.ostia = detail::run_stage("localization", diag, [&] {
        if (opts.ostia) {
            OstiaPoints o = *opts.ostia;
            o.source = PointSource::External;
            return o;
        }
        const Vec3 valve = estimate_valve_center(aorta);
        return estimate_ostia(aorta, vessel_mask, valve, cfg.ostia_search_mm);
    });
    for (const auto& w : ostia_sanity_warnings(r.ostia)) {
        diag.warnings.push_back("localization: " + w);
    }
    for (const auto& w : r.ostia.warnings) {
        diag.warnings.push_back("localization: " + w);
    }

    detail::run_stage("vessel_filter", diag,
                      [&] { lesions = partition_by_vessel_proximity(lesions, vessel_mask, cfg.vessel_dilation_mm).kept; });
    count("after_vessel_filter", lesions.size());

    const BranchClassifier& clf = opts.classifier ? *opts.classifier : default_branch_classifier();
    detail::run_stage("vessel_tree", diag, [&] {
        for (const auto side : {OstiumSide::Left, OstiumSide::Right}) {
            const Vec3 ostium = side == OstiumSide::Left ? r.ostia.left_ostium : r.ostia.right_ostium;
            (side == OstiumSide::Left ? r.graph_left : r.graph_right) =
                build_labeled_tree(vessel_mask, ostium, side, cfg.bridge_max_gap_mm, clf);
        }
    });

    SplitResult split = detail::run_stage("separation", diag, [&] {
        SplitResult acc{lesions, {}};
        const SeparationParams params{cfg.plane_support_cap_mm, cfg.plane_min_support};
        for (const auto side : {OstiumSide::Left, OstiumSide::Right}) {
            const Vec3 ostium = side == OstiumSide::Left ? r.ostia.left_ostium : r.ostia.right_ostium;
            const Box3 box = patch_box(g, ostium, cfg.ostium_patch_mm);
            const auto a_patch = crop(aorta, box);
            const auto v_patch = crop(vessel_mask, box);
            SeparationPlane plane;
            try {
                plane = fit_separation_plane(a_patch, v_patch, ostium, side, params);
            } catch (const DegenerateFitError& e) {
                diag.warnings.push_back(std::string("separation: ") + std::string(to_string(side)) +
                                        " plane fit degenerate (" + e.what() + "); using fallback plane");
                plane = fallback_plane(v_patch, ostium, side);
            }
            diag.planes.push_back(plane);
            auto s = split_lesions_at_ostium(acc.coronary, plane, image, box, conn);
            acc.coronary = std::move(s.coronary);
            for (auto& l : s.aortic) {
                acc.aortic.push_back(std::move(l));
            }
        }
        const auto by_first_voxel = [&](const Lesion& a, const Lesion& b) {
            return g.linear(a.voxels.front()) < g.linear(b.voxels.front());
        };
        std::sort(acc.coronary.begin(), acc.coronary.end(), by_first_voxel);
        std::sort(acc.aortic.begin(), acc.aortic.end(), by_first_voxel);
        renumber(acc.coronary);
        return acc;
    });
    count("coronary_lesions", split.coronary.size());
    count("aortic_parts", split.aortic.size());
    r.aortic_parts = std::move(split.aortic);

    r.lesions = detail::run_stage("lesion_labeling", diag, [&] {
        auto labeled = assign_territories(split.coronary, r.graph_left, r.graph_right);
        return opts.orcascore_labels ? relabel_lm_to_lad(std::move(labeled)) : labeled;
    });

    detail::run_stage("scoring", diag, [&] {
        r.label_map = label_map(g, r.lesions, r.aortic_parts);
        r.report = score_report(r.label_map, image, r.lesions, cfg.scoring());
    });
    if (!opts.record_timings) {
        diag.timings.clear();
    }
    return r;
}

/// Full report JSON: scores, config echo and diagnostics. Timings appear
/// only when they were recorded.
inline nlohmann::ordered_json pipeline_report_json(const PipelineResult& r) {
    auto j = report_json(r.report);
    j["config_echo"] = config_echo_json(r.config, r.orcascore_labels);
    nlohmann::ordered_json d;
    nlohmann::ordered_json o;
    o["source"] = std::string(to_string(r.ostia.source));
    o["valve_center"] = detail::vec_json(r.ostia.valve_center);
    o["left_ostium"] = detail::vec_json(r.ostia.left_ostium);
    o["right_ostium"] = detail::vec_json(r.ostia.right_ostium);
    d["ostia"] = o;
    d["planes"] = nlohmann::ordered_json::array();
    for (const auto& p : r.diagnostics.planes) {
        nlohmann::ordered_json jp;
        jp["side"] = std::string(to_string(p.ostium_side));
        jp["point"] = detail::vec_json(p.point);
        jp["normal"] = detail::vec_json(p.normal);
        jp["support_count"] = p.support_count;
        jp["fallback"] = p.fallback;
        d["planes"].push_back(jp);
    }
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [k, n] : r.diagnostics.counts) {
        counts[k] = n;
    }
    d["counts"] = counts;
    d["graph_edges"] = {{"left", r.graph_left.edges.size()}, {"right", r.graph_right.edges.size()}};
    d["warnings"] = r.diagnostics.warnings;
    if (!r.diagnostics.timings.empty()) {
        nlohmann::ordered_json t = nlohmann::ordered_json::object();
        for (const auto& s : r.diagnostics.timings) {
            t[s.stage] = s.ms;
        }
        d["timings_ms"] = t;
    }
    j["diagnostics"] = d;
    return j;
}

}  // namespace cac
