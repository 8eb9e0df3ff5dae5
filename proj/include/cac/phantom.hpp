#pragma once

// Synthetic studies with analytically known ground truth. An aorta with a
// bulbous root and two short ostial stubs feeds a left tree (LM splitting
// into LAD and LCx) and a right tree (RCA with one bend). Lesions are
// constant-HU axis-aligned boxes on the branches, so their scores follow in
// closed form.

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cac/localization.hpp"
#include "cac/metaimage.hpp"
#include "cac/scoring.hpp"

namespace cac {

inline constexpr std::int16_t kAirHu = -1000;
inline constexpr std::int16_t kTissueHu = 40;
inline constexpr std::int16_t kBloodHu = 60;

struct PhantomBranch {
    TerritoryCode territory = TerritoryCode::LM;
    int parent = -1;  // -1: starts at the ostium of its side
    Vec3 direction;   // unit
    double length_mm = 10.0;
    double radius_mm = 2.0;
};

struct PhantomLesion {
    int branch = 0;
    double offset_mm = 0.0;  // along the branch from its start; ignored for ostial lesions
    Vec3 extent_mm{1.5, 1.5, 2.0};
    int hu = 300;
    bool ostial = false;  // starts at the first voxel layer past the junction plane
};

struct PhantomDistractors {
    bool bone_outside_pericardium = false;
    bool noise_speckles = false;
    bool valve_calcification = false;
    bool straddling_ostial_lesion = false;

    static PhantomDistractors all() { return {true, true, true, true}; }
    bool any() const {
        return bone_outside_pericardium || noise_speckles || valve_calcification || straddling_ostial_lesion;
    }
};

struct PhantomSpec {
    std::uint64_t seed = 0;
    Index3 dims{208, 176, 72};
    Vec3 spacing{0.5, 0.5, 1.0};
    Vec3 origin{};
    Index3 valve_voxel{80, 104, 36};
    double bulb_radius_mm = 12.5;
    double bulb_height_mm = 12.0;  // straight part of the root above the valve centre
    double aorta_radius_mm = 10.0;
    bool bulbous_root = true;
    double ostium_height_mm = 6.0;  // stub axes above the valve centre
    double stub_length_mm = 8.0;    // beyond the root surface
    double pericardium_margin_mm = 8.0;
    int speckle_count = 12;
    std::vector<PhantomBranch> branches;
    std::vector<PhantomLesion> lesions;
    PhantomDistractors distractors;
};

struct Phantom {
    PhantomSpec spec;
    HuVolume image;
    MaskVolume pericardium;
    MaskVolume aorta;
    MaskVolume vessels;
    LabelVolume gt_labels;
    OstiaPoints gt_ostia;
    ScoreReport gt_report;
    std::vector<Vec3> branch_start;  // world, per branch
    std::vector<Vec3> branch_end;
};

namespace detail {

/// Portable draws from mt19937_64 (the engine is fully specified; the
/// standard distributions are not).
class PhantomRng {
  public:
    explicit PhantomRng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }

  private:
    std::mt19937_64 eng_;
};

inline Vec3 unit(double x, double y, double z) { return Vec3{x, y, z}.normalized(); }

inline int axis_of(const Vec3& d) {
    for (int a = 0; a < 3; ++a) {
        if (std::abs(std::abs(d[a]) - 1.0) < 1e-12) {
            return a;
        }
    }
    return -1;
}

inline std::vector<int> root_branches(const PhantomSpec& s) {
    std::vector<int> out;
    for (std::size_t k = 0; k < s.branches.size(); ++k) {
        if (s.branches[k].parent < 0) {
            out.push_back(static_cast<int>(k));
        }
    }
    return out;
}

inline OstiumSide side_of(TerritoryCode c) { return c == TerritoryCode::RCA ? OstiumSide::Right : OstiumSide::Left; }

}  // namespace detail

/// Seeded default study: fixed aorta and stubs, branch angles and lengths
/// varied slightly, 5 to 7 lesions including one LM ostial lesion.
inline PhantomSpec default_phantom_spec(std::uint64_t seed) {
    detail::PhantomRng rng(seed);
    PhantomSpec s;
    s.seed = seed;
    const double lad_angle = rng.uniform(30.0, 40.0) * std::numbers::pi / 180.0;
    const double lcx_angle = rng.uniform(78.0, 88.0) * std::numbers::pi / 180.0;
    const double lad_len = rng.uniform(30.0, 35.0);
    const double lcx_len = rng.uniform(24.0, 28.0);
    const double rca_len = rng.uniform(26.0, 30.0);
    s.branches = {
        {TerritoryCode::LM, -1, {1.0, 0.0, 0.0}, 14.0, 2.0},
        {TerritoryCode::LAD, 0, detail::unit(std::cos(lad_angle), 0.0, -std::sin(lad_angle)), lad_len, 1.8},
        {TerritoryCode::LCX, 0, detail::unit(std::cos(lcx_angle), std::sin(lcx_angle), -0.1), lcx_len, 1.4},
        {TerritoryCode::RCA, -1, {0.0, -1.0, 0.0}, 12.0, 1.8},
        {TerritoryCode::RCA, 3, detail::unit(-0.7, -0.25, -0.67), rca_len, 1.6},
    };
    auto extent = [&](bool z_thin) {
        return Vec3{rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0), z_thin ? rng.uniform(1.0, 2.0) : rng.uniform(1.0, 3.0)};
    };
    auto hu = [&] { return rng.integer(140, 650); };
    PhantomLesion ostial;
    ostial.branch = 0;
    ostial.ostial = true;
    ostial.extent_mm = {0.5 * rng.integer(2, 4), rng.uniform(2.0, 3.0), rng.uniform(2.0, 3.0)};
    ostial.hu = hu();
    s.lesions.push_back(ostial);
    s.lesions.push_back({1, rng.uniform(8.0, 13.0), extent(false), hu(), false});
    if (rng.uniform() < 0.5) {
        s.lesions.push_back({1, rng.uniform(20.0, lad_len - 6.0), extent(false), hu(), false});
    }
    s.lesions.push_back({2, rng.uniform(8.0, lcx_len - 6.0), extent(true), hu(), false});
    s.lesions.push_back({3, rng.uniform(4.0, 7.0), extent(false), hu(), false});
    if (rng.uniform() < 0.5) {
        s.lesions.push_back({4, rng.uniform(8.0, rca_len - 6.0), extent(false), hu(), false});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Spec JSON

inline nlohmann::ordered_json phantom_spec_json(const PhantomSpec& s) {
    auto v3 = [](const Vec3& v) { return nlohmann::ordered_json::array({v.x, v.y, v.z}); };
    auto i3 = [](const Index3& v) { return nlohmann::ordered_json::array({v.x, v.y, v.z}); };
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    j["dims"] = i3(s.dims);
    j["spacing"] = v3(s.spacing);
    j["origin"] = v3(s.origin);
    j["valve_voxel"] = i3(s.valve_voxel);
    j["bulb_radius_mm"] = s.bulb_radius_mm;
    j["bulb_height_mm"] = s.bulb_height_mm;
    j["aorta_radius_mm"] = s.aorta_radius_mm;
    j["bulbous_root"] = s.bulbous_root;
    j["ostium_height_mm"] = s.ostium_height_mm;
    j["stub_length_mm"] = s.stub_length_mm;
    j["pericardium_margin_mm"] = s.pericardium_margin_mm;
    j["speckle_count"] = s.speckle_count;
    j["branches"] = nlohmann::ordered_json::array();
    for (const auto& b : s.branches) {
        nlohmann::ordered_json jb;
        jb["territory"] = std::string(to_string(b.territory));
        jb["parent"] = b.parent;
        jb["direction"] = v3(b.direction);
        jb["length_mm"] = b.length_mm;
        jb["radius_mm"] = b.radius_mm;
        j["branches"].push_back(jb);
    }
    j["lesions"] = nlohmann::ordered_json::array();
    for (const auto& l : s.lesions) {
        nlohmann::ordered_json jl;
        jl["branch"] = l.branch;
        jl["offset_mm"] = l.offset_mm;
        jl["extent_mm"] = v3(l.extent_mm);
        jl["hu"] = l.hu;
        jl["ostial"] = l.ostial;
        j["lesions"].push_back(jl);
    }
    nlohmann::ordered_json d;
    d["bone_outside_pericardium"] = s.distractors.bone_outside_pericardium;
    d["noise_speckles"] = s.distractors.noise_speckles;
    d["valve_calcification"] = s.distractors.valve_calcification;
    d["straddling_ostial_lesion"] = s.distractors.straddling_ostial_lesion;
    j["distractors"] = d;
    return j;
}

/// Reads a spec JSON on top of `base`: every field present overrides the
/// base value.
inline PhantomSpec parse_phantom_spec(const std::string& text, PhantomSpec base = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(ParseError::Kind::InvalidValue, "spec", std::string("malformed JSON: ") + e.what());
    }
    std::string key;
    try {
        auto v3 = [](const nlohmann::json& a) { return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; };
        auto i3 = [](const nlohmann::json& a) { return Index3{a.at(0).get<int>(), a.at(1).get<int>(), a.at(2).get<int>()}; };
        auto opt = [&](const char* k, auto fn) {
            key = k;
            if (j.contains(k)) {
                fn(j.at(k));
            }
        };
        opt("seed", [&](const auto& v) { base.seed = v.template get<std::uint64_t>(); });
        opt("dims", [&](const auto& v) { base.dims = i3(v); });
        opt("spacing", [&](const auto& v) { base.spacing = v3(v); });
        opt("origin", [&](const auto& v) { base.origin = v3(v); });
        opt("valve_voxel", [&](const auto& v) { base.valve_voxel = i3(v); });
        opt("bulb_radius_mm", [&](const auto& v) { base.bulb_radius_mm = v.template get<double>(); });
        opt("bulb_height_mm", [&](const auto& v) { base.bulb_height_mm = v.template get<double>(); });
        opt("aorta_radius_mm", [&](const auto& v) { base.aorta_radius_mm = v.template get<double>(); });
        opt("bulbous_root", [&](const auto& v) { base.bulbous_root = v.template get<bool>(); });
        opt("ostium_height_mm", [&](const auto& v) { base.ostium_height_mm = v.template get<double>(); });
        opt("stub_length_mm", [&](const auto& v) { base.stub_length_mm = v.template get<double>(); });
        opt("pericardium_margin_mm", [&](const auto& v) { base.pericardium_margin_mm = v.template get<double>(); });
        opt("speckle_count", [&](const auto& v) { base.speckle_count = v.template get<int>(); });
        opt("branches", [&](const auto& v) {
            base.branches.clear();
            for (const auto& b : v) {
                const auto t = territory_from_string(b.at("territory").template get<std::string>());
                if (!t || !is_coronary(*t)) {
                    throw ParseError(ParseError::Kind::InvalidValue, "branches.territory", "unknown territory");
                }
                base.branches.push_back({*t, b.at("parent").template get<int>(), v3(b.at("direction")),
                                         b.at("length_mm").template get<double>(),
                                         b.at("radius_mm").template get<double>()});
            }
        });
        opt("lesions", [&](const auto& v) {
            base.lesions.clear();
            for (const auto& l : v) {
                base.lesions.push_back({l.at("branch").template get<int>(), l.value("offset_mm", 0.0),
                                        v3(l.at("extent_mm")), l.at("hu").template get<int>(), l.value("ostial", false)});
            }
        });
        opt("distractors", [&](const auto& v) {
            auto& d = base.distractors;
            d.bone_outside_pericardium = v.value("bone_outside_pericardium", d.bone_outside_pericardium);
            d.noise_speckles = v.value("noise_speckles", d.noise_speckles);
            d.valve_calcification = v.value("valve_calcification", d.valve_calcification);
            d.straddling_ostial_lesion = v.value("straddling_ostial_lesion", d.straddling_ostial_lesion);
        });
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseError::Kind::InvalidValue, key, e.what());
    }
    return base;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

struct BoxSpec {
    Index3 lo, hi;
    TerritoryCode label;
    int hu;
};

inline std::size_t box_count(const BoxSpec& b) {
    return static_cast<std::size_t>(b.hi.x - b.lo.x + 1) * static_cast<std::size_t>(b.hi.y - b.lo.y + 1) *
           static_cast<std::size_t>(b.hi.z - b.lo.z + 1);
}

inline bool boxes_apart(const BoxSpec& a, const BoxSpec& b, int gap) {
    for (int k = 0; k < 3; ++k) {
        if (a.hi[k] + gap < b.lo[k] || b.hi[k] + gap < a.lo[k]) {
            return true;
        }
    }
    return false;
}

template <class Fn>
void fill_box(const Index3& lo, const Index3& hi, Fn fn) {
    for (int z = lo.z; z <= hi.z; ++z) {
        for (int y = lo.y; y <= hi.y; ++y) {
            for (int x = lo.x; x <= hi.x; ++x) {
                fn(Index3{x, y, z});
            }
        }
    }
}

/// Closed-form score of a constant-HU box: every slice is one island of
/// nx*ny pixels.
inline TerritoryScore box_score(const BoxSpec& b, const Grid3& g, const ScoringConfig& cfg) {
    const auto nx = static_cast<double>(b.hi.x - b.lo.x + 1);
    const auto ny = static_cast<double>(b.hi.y - b.lo.y + 1);
    const auto nz = static_cast<double>(b.hi.z - b.lo.z + 1);
    const double area = nx * ny * g.spacing().x * g.spacing().y;
    TerritoryScore t;
    if (area >= cfg.min_island_area_mm2) {
        t.agatston = nz * area * density_weight(b.hu) * slice_factor(g, cfg);
    }
    const double n = nx * ny * nz;
    t.volume_mm3 = n * g.voxel_volume();
    t.mass_mg = n * b.hu * g.voxel_volume() * cfg.mass_calibration;
    t.lesion_count = 1;
    return t;
}

}  // namespace detail

inline Phantom generate_phantom(const PhantomSpec& spec) {
    const Grid3 g(spec.dims, spec.spacing, spec.origin);
    if (!g.contains(spec.valve_voxel)) {
        throw InvalidInput("phantom valve voxel lies outside the grid");
    }
    const auto roots = detail::root_branches(spec);
    if (spec.branches.empty() || roots.empty()) {
        throw InvalidInput("phantom needs at least one root branch");
    }
    for (std::size_t k = 0; k < spec.branches.size(); ++k) {
        const auto& b = spec.branches[k];
        if (!(b.radius_mm > 0.0) || !(b.length_mm > 0.0)) {
            throw InvalidInput("phantom branch radius and length must be > 0");
        }
        if (b.parent >= static_cast<int>(k)) {
            throw InvalidInput("phantom branch parent must precede the branch");
        }
        if (std::abs(b.direction.norm() - 1.0) > 1e-9) {
            throw InvalidInput("phantom branch direction must be a unit vector");
        }
    }
    const double root_radius = spec.bulbous_root ? spec.bulb_radius_mm : spec.aorta_radius_mm;
    if (spec.aorta_radius_mm <= 0.0 || root_radius < spec.aorta_radius_mm || spec.ostium_height_mm < 0.0 ||
        (spec.bulbous_root && spec.ostium_height_mm > spec.bulb_height_mm)) {
        throw InvalidInput("phantom aorta radii are inconsistent with the ostium height");
    }

    Phantom ph;
    ph.spec = spec;
    const Vec3 valve = g.to_world(spec.valve_voxel);
    const int h_vox = static_cast<int>(std::lround(spec.ostium_height_mm / spec.spacing.z));
    const Vec3 stub_base = g.to_world(spec.valve_voxel + Index3{0, 0, h_vox});

    // Stubs and ostia; root branches start two voxels past the stub face.
    struct Stub {
        Vec3 base, dir;
        double length;
        double radius;
        Index3 face;
        OstiumSide side;
    };
    std::vector<Stub> stubs;
    ph.branch_start.resize(spec.branches.size());
    ph.branch_end.resize(spec.branches.size());
    for (std::size_t k = 0; k < spec.branches.size(); ++k) {
        const auto& b = spec.branches[k];
        if (b.parent < 0) {
            const int a = detail::axis_of(b.direction);
            if (a < 0 || a == 2) {
                throw InvalidInput("root branch directions must be along +-x or +-y");
            }
            const double s = spec.spacing[a];
            const int steps = static_cast<int>(std::lround((root_radius + spec.stub_length_mm) / s));
            Index3 step{};
            step[a] = b.direction[a] > 0 ? 1 : -1;
            Index3 face = spec.valve_voxel + Index3{0, 0, h_vox};
            face[a] += step[a] * steps;
            Index3 start = face;
            start[a] += 3 * step[a];
            if (!g.contains(face) || !g.contains(start)) {
                throw InvalidInput("phantom ostium lies outside the grid");
            }
            stubs.push_back({stub_base, b.direction, steps * s, b.radius_mm, face, detail::side_of(b.territory)});
            ph.branch_start[k] = g.to_world(start);
        } else {
            ph.branch_start[k] = ph.branch_end[static_cast<std::size_t>(b.parent)];
        }
        ph.branch_end[k] = ph.branch_start[k] + b.direction * b.length_mm;
    }
    ph.gt_ostia.valve_center = valve;
    ph.gt_ostia.source = PointSource::External;
    bool have_left = false, have_right = false;
    for (const auto& st : stubs) {
        (st.side == OstiumSide::Left ? ph.gt_ostia.left_ostium : ph.gt_ostia.right_ostium) = g.to_world(st.face);
        (st.side == OstiumSide::Left ? have_left : have_right) = true;
    }
    if (!have_left || !have_right || stubs.size() != 2) {
        throw InvalidInput("phantom needs exactly one left and one right root branch");
    }

    // Rasterize aorta and vessels.
    ph.aorta = MaskVolume(g, 0);
    ph.vessels = MaskVolume(g, 0);
    const double top_z = g.to_world({0, 0, spec.dims.z - 1}).z - 3.0;
    const double root_height = spec.bulbous_root ? spec.bulb_height_mm : 0.0;
    constexpr double eps = 1e-9;
    auto radial2 = [](const Vec3& d, const Vec3& dir, double t) {
        const Vec3 r = d - dir * t;
        return r.dot(r);
    };
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const Index3 v = g.index(i);
        const Vec3 p = g.to_world(v);
        const Vec3 dv = p - valve;
        // Root: hemispherical bottom centred on the valve, straight above it.
        const double rr2 = root_radius * root_radius + eps;
        const double h2 = dv.x * dv.x + dv.y * dv.y;
        bool in_aorta = dv.z < 0.0 ? dv.dot(dv) <= rr2 : (dv.z <= root_height + eps && h2 <= rr2);
        if (dv.z >= -eps && p.z <= top_z + eps && h2 <= spec.aorta_radius_mm * spec.aorta_radius_mm + eps) {
            in_aorta = true;
        }
        for (const auto& st : stubs) {
            const Vec3 d = p - st.base;
            const double t = d.dot(st.dir);
            if (t >= -eps && t <= st.length + eps && radial2(d, st.dir, t) <= st.radius * st.radius + eps) {
                in_aorta = true;
            }
        }
        ph.aorta[i] = in_aorta ? 1 : 0;
        if (in_aorta) {
            continue;
        }
        for (std::size_t k = 0; k < spec.branches.size(); ++k) {
            const auto& b = spec.branches[k];
            const Vec3 d = p - ph.branch_start[k];
            const double t = d.dot(b.direction);
            const double r2 = b.radius_mm * b.radius_mm + eps;
            bool in = false;
            if (t < -eps) {
                in = b.parent >= 0 && d.dot(d) <= r2;
            } else if (t > b.length_mm) {
                const Vec3 e = p - ph.branch_end[k];
                in = e.dot(e) <= r2;
            } else {
                in = radial2(d, b.direction, t) <= r2;
            }
            if (in) {
                ph.vessels[i] = 1;
                break;
            }
        }
    }

    // Pericardium: everything within the margin of the vessels and the
    // aortic root.
    MaskVolume heart = ph.vessels;
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const Vec3 dv = g.to_world(g.index(i)) - valve;
        if (ph.aorta[i] && dv.z <= root_height + root_radius) {
            heart[i] = 1;
        }
    }
    ph.pericardium = dilate_ball(heart, spec.pericardium_margin_mm);
    const auto vessel_dist = edt(ph.vessels, DistanceTarget::Foreground).distance;

    // Lesion boxes.
    ScoringConfig cfg;
    std::vector<detail::BoxSpec> boxes;
    std::optional<detail::BoxSpec> aortic_part;
    for (const auto& l : spec.lesions) {
        if (l.branch < 0 || l.branch >= static_cast<int>(spec.branches.size())) {
            throw InvalidInput("phantom lesion refers to an unknown branch");
        }
        if (l.hu < 130 || l.hu > 3000) {
            throw InvalidInput("phantom lesion HU must lie in [130, 3000]");
        }
        const auto& b = spec.branches[static_cast<std::size_t>(l.branch)];
        Index3 n;
        for (int a = 0; a < 3; ++a) {
            n[a] = std::max(1, static_cast<int>(std::lround(l.extent_mm[a] / spec.spacing[a])));
        }
        detail::BoxSpec box{{}, {}, b.territory, l.hu};
        if (l.ostial) {
            if (b.parent >= 0) {
                throw InvalidInput("ostial lesions must sit on a root branch");
            }
            const int a = detail::axis_of(b.direction);
            const int sgn = b.direction[a] > 0 ? 1 : -1;
            const Index3 start = g.to_voxel(ph.branch_start[static_cast<std::size_t>(l.branch)]);
            Index3 first = start;
            first[a] -= sgn;  // first layer past the junction plane
            Index3 c = first;
            for (int k = 0; k < 3; ++k) {
                if (k != a) {
                    c[k] -= n[k] / 2;
                }
            }
            box.lo = c;
            box.hi = c + n - Index3{1, 1, 1};
            if (sgn < 0) {
                box.lo[a] = first[a] - n[a] + 1;
                box.hi[a] = first[a];
            }
            if (spec.distractors.straddling_ostial_lesion) {
                detail::BoxSpec ap = box;
                ap.label = TerritoryCode::Aorta;
                if (sgn > 0) {
                    ap.hi[a] = box.lo[a] - 1;
                    ap.lo[a] = ap.hi[a] - 4;
                } else {
                    ap.lo[a] = box.hi[a] + 1;
                    ap.hi[a] = ap.lo[a] + 4;
                }
                aortic_part = ap;
            }
        } else {
            const Vec3 centre = ph.branch_start[static_cast<std::size_t>(l.branch)] + b.direction * l.offset_mm;
            const Index3 c = g.to_voxel(centre);
            box.lo = c - Index3{n.x / 2, n.y / 2, n.z / 2};
            box.hi = box.lo + n - Index3{1, 1, 1};
        }
        if (!g.contains(box.lo) || !g.contains(box.hi)) {
            throw InvalidInput("phantom lesion box leaves the grid");
        }
        detail::fill_box(box.lo, box.hi, [&](const Index3& v) {
            if (vessel_dist.at(v) > 3.0 + 1e-9) {
                throw InvalidInput("phantom lesion voxel lies outside its vessel's 3 mm neighbourhood");
            }
            if (ph.aorta.at(v)) {
                throw InvalidInput("phantom lesion voxel lies inside the aorta");
            }
        });
        for (const auto& o : boxes) {
            if (!detail::boxes_apart(o, box, 2)) {
                throw InvalidInput("phantom lesion boxes must be at least two voxels apart");
            }
        }
        boxes.push_back(box);
    }

    // Image and ground truth.
    ph.image = HuVolume(g, kAirHu);
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        if (ph.pericardium[i]) {
            ph.image[i] = kTissueHu;
        }
        if (ph.aorta[i] || ph.vessels[i]) {
            ph.image[i] = kBloodHu;
        }
    }
    ph.gt_labels = LabelVolume(g, 0);
    auto paint = [&](const detail::BoxSpec& b) {
        detail::fill_box(b.lo, b.hi, [&](const Index3& v) {
            ph.image.at(v) = static_cast<std::int16_t>(b.hu);
            ph.gt_labels.at(v) = static_cast<std::uint8_t>(b.label);
        });
    };
    for (const auto& b : boxes) {
        paint(b);
    }
    if (aortic_part) {
        paint(*aortic_part);
    }

    for (auto c : kCoronaryTerritories) {
        ph.gt_report.per_territory[c] = {};
    }
    int id = 0;
    for (const auto& b : boxes) {
        const auto t = detail::box_score(b, g, cfg);
        auto& pt = ph.gt_report.per_territory[b.label];
        pt.agatston += t.agatston;
        pt.volume_mm3 += t.volume_mm3;
        pt.mass_mg += t.mass_mg;
        pt.lesion_count += 1;
        LesionReport lr;
        lr.id = ++id;
        lr.territories[b.label] = detail::box_count(b);
        lr.centroid_world = (g.to_world(b.lo) + g.to_world(b.hi)) * 0.5;
        lr.volume_mm3 = t.volume_mm3;
        lr.max_hu = b.hu;
        lr.agatston = t.agatston;
        ph.gt_report.lesions.push_back(lr);
    }
    for (auto c : kCoronaryTerritories) {
        const auto& t = ph.gt_report.per_territory[c];
        ph.gt_report.total.agatston += t.agatston;
        ph.gt_report.total.volume_mm3 += t.volume_mm3;
        ph.gt_report.total.mass_mg += t.mass_mg;
        ph.gt_report.total.lesion_count += t.lesion_count;
    }
    ph.gt_report.risk5 = risk_category(ph.gt_report.total.agatston, RiskScheme::Five);
    ph.gt_report.risk4 = risk_category(ph.gt_report.total.agatston, RiskScheme::Four);

    // Distractors.
    const auto& dis = spec.distractors;
    std::vector<detail::BoxSpec> placed = boxes;
    if (aortic_part) {
        placed.push_back(*aortic_part);
    }
    auto free_of_vessels = [&](const Index3& lo, const Index3& hi, double min_mm) {
        bool ok = g.contains(lo) && g.contains(hi);
        if (ok) {
            detail::fill_box(lo, hi, [&](const Index3& v) { ok = ok && vessel_dist.at(v) > min_mm; });
        }
        return ok;
    };
    auto stamp = [&](const Index3& lo, const Index3& hi, int hu) {
        const detail::BoxSpec b{lo, hi, TerritoryCode::Background, hu};
        for (const auto& o : placed) {
            if (!detail::boxes_apart(o, b, 2)) {
                throw InvalidInput("phantom distractor overlaps a lesion");
            }
        }
        detail::fill_box(lo, hi, [&](const Index3& v) { ph.image.at(v) = static_cast<std::int16_t>(hu); });
        placed.push_back(b);
    };
    auto mm_box = [&](const Vec3& centre, const Vec3& size) {
        const Index3 c = g.to_voxel(centre);
        Index3 n;
        for (int a = 0; a < 3; ++a) {
            n[a] = std::max(1, static_cast<int>(std::lround(size[a] / spec.spacing[a])));
        }
        const Index3 lo = c - Index3{n.x / 2, n.y / 2, n.z / 2};
        return std::pair{lo, lo + n - Index3{1, 1, 1}};
    };
    if (dis.valve_calcification) {
        const auto [lo, hi] = mm_box(valve + Vec3{2.0, 0.0, -3.0}, {3.0, 3.0, 2.0});
        const auto [mlo, mhi] = mm_box(valve + Vec3{-(root_radius + 2.5), 0.0, -3.0}, {2.0, 2.0, 2.0});
        if (!free_of_vessels(lo, hi, 4.0) || !free_of_vessels(mlo, mhi, 4.0)) {
            throw InvalidInput("phantom valve calcification lies near a vessel");
        }
        stamp(lo, hi, 700);
        stamp(mlo, mhi, 450);
    }
    if (dis.bone_outside_pericardium) {
        const auto peri_dist = edt(ph.pericardium, DistanceTarget::Foreground).distance;
        const Index3 n{std::max(1, static_cast<int>(std::lround(4.0 / spec.spacing.x))),
                       std::max(1, static_cast<int>(std::lround(4.0 / spec.spacing.y))),
                       std::max(1, static_cast<int>(std::lround(8.0 / spec.spacing.z)))};
        bool done = false;
        for (int corner = 0; corner < 8 && !done; ++corner) {
            Index3 lo;
            for (int a = 0; a < 3; ++a) {
                lo[a] = (corner >> a) & 1 ? spec.dims[a] - 2 - n[a] : 1;
            }
            const Index3 hi = lo + n - Index3{1, 1, 1};
            if (lo.x < 0 || lo.y < 0 || lo.z < 0 || !g.contains(hi)) {
                continue;
            }
            bool ok = true;
            detail::fill_box(lo, hi, [&](const Index3& v) { ok = ok && peri_dist.at(v) > 3.0; });
            if (ok) {
                stamp(lo, hi, 1200);
                done = true;
            }
        }
        if (!done) {
            throw InvalidInput("no room outside the pericardium for the bone distractor");
        }
    }
    if (dis.noise_speckles) {
        detail::PhantomRng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
        int placed_count = 0;
        for (int attempt = 0; attempt < 100000 && placed_count < spec.speckle_count; ++attempt) {
            const Index3 v{rng.integer(0, spec.dims.x - 1), rng.integer(0, spec.dims.y - 1),
                           rng.integer(0, spec.dims.z - 1)};
            if (!ph.pericardium.at(v) || vessel_dist.at(v) <= 5.0) {
                continue;
            }
            const detail::BoxSpec b{v, v, TerritoryCode::Background, 200};
            if (std::any_of(placed.begin(), placed.end(), [&](const auto& o) { return !detail::boxes_apart(o, b, 2); })) {
                continue;
            }
            stamp(v, v, 200);
            ++placed_count;
        }
        if (placed_count < spec.speckle_count) {
            throw InvalidInput("could not place all noise speckles");
        }
    }
    return ph;
}

inline Phantom generate_phantom(std::uint64_t seed, const PhantomDistractors& distractors = {}) {
    auto spec = default_phantom_spec(seed);
    spec.distractors = distractors;
    return generate_phantom(spec);
}

// ---------------------------------------------------------------------------
// Study directory

inline nlohmann::ordered_json gt_report_json(const ScoreReport& r) { return report_json(r); }

inline void write_phantom_study(const Phantom& ph, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ParseError(ParseError::Kind::Io, dir.string(), "cannot create directory: " + ec.message());
    }
    write_metaimage(ph.image, (dir / "image.mha").string());
    write_metaimage(ph.pericardium, (dir / "pericardium.mha").string());
    write_metaimage(ph.aorta, (dir / "aorta.mha").string());
    write_metaimage(ph.vessels, (dir / "vessels.mha").string());
    write_metaimage(ph.gt_labels, (dir / "gt_labels.mha").string());
    save_ostia(ph.gt_ostia, (dir / "gt_ostia.json").string());
    auto write_json = [&](const nlohmann::ordered_json& j, const char* name) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) {
            throw ParseError(ParseError::Kind::Io, name, "cannot write " + (dir / name).string());
        }
        os << j.dump(2) << "\n";
    };
    write_json(gt_report_json(ph.gt_report), "gt_report.json");
    write_json(phantom_spec_json(ph.spec), "spec.json");
}

}  // namespace cac
