// Acceptance suite: one PASS/FAIL line per criterion.
//
//   cac_acceptance <path-to-cacscore>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "cac/cac.hpp"
#include "support/oracles.hpp"

using namespace cac;
namespace fs = std::filesystem;

namespace {

constexpr double kScoreTol = 1e-9;
constexpr double kEdtTol = 1e-9;
constexpr double kStatTol = 1e-12;
constexpr double kGradRelTol = 1e-6;
constexpr double kRuntimeBudgetS = 30.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failures; the first few are kept for the report line.
struct Tally {
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::string first;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (!ok) {
            if (failures < 3) {
                first += (first.empty() ? "" : "; ") + what;
            }
            ++failures;
        }
    }
    Outcome outcome(const std::string& summary) const {
        if (failures == 0) {
            return {true, summary};
        }
        return {false, std::to_string(failures) + "/" + std::to_string(checks) + " checks failed: " + first};
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t label_diff(const LabelVolume& a, const LabelVolume& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        n += a[i] != b[i];
    }
    return n;
}

MaskVolume territory_mask(const LabelVolume& v, TerritoryCode t) {
    MaskVolume m(v.grid(), 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        m[i] = v[i] == static_cast<std::uint8_t>(t) ? 1 : 0;
    }
    return m;
}

bool scores_match(const ScoreReport& got, const ScoreReport& want, double tol, std::string& why) {
    for (auto t : kCoronaryTerritories) {
        const auto& a = got.per_territory.at(t);
        const auto& b = want.per_territory.at(t);
        if (std::abs(a.agatston - b.agatston) > tol || std::abs(a.volume_mm3 - b.volume_mm3) > tol) {
            std::ostringstream os;
            os << to_string(t) << " Agatston " << a.agatston << " vs " << b.agatston << ", volume " << a.volume_mm3
               << " vs " << b.volume_mm3;
            why = os.str();
            return false;
        }
    }
    if (std::abs(got.total.agatston - want.total.agatston) > tol ||
        std::abs(got.total.volume_mm3 - want.total.volume_mm3) > tol) {
        why = "total differs";
        return false;
    }
    return true;
}

bool scores_identical(const ScoreReport& a, const ScoreReport& b) {
    for (auto t : kCoronaryTerritories) {
        const auto& x = a.per_territory.at(t);
        const auto& y = b.per_territory.at(t);
        if (x.agatston != y.agatston || x.volume_mm3 != y.volume_mm3 || x.mass_mg != y.mass_mg ||
            x.lesion_count != y.lesion_count) {
            return false;
        }
    }
    return true;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineResult score(const Phantom& ph) { return run_pipeline(ph.image, ph.pericardium, ph.aorta, ph.vessels); }

// Scanner-sized variant of the seeded phantom: 512 x 512 x 60.
PhantomSpec large_spec(std::uint64_t seed) {
    auto spec = default_phantom_spec(seed);
    spec.dims = {512, 512, 60};
    spec.spacing = {0.4, 0.4, 1.2};
    spec.valve_voxel = {200, 260, 30};
    return spec;
}

// ---------------------------------------------------------------------------

Outcome phantom_exactness() {
    Tally t;
    double worst = 0.0;
    std::vector<PhantomSpec> specs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        specs.push_back(default_phantom_spec(seed));
    }
    specs.push_back(large_spec(21));
    for (const auto& spec : specs) {
        const auto ph = generate_phantom(spec);
        const std::string tag = "seed " + std::to_string(spec.seed);
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = score(ph);
        const double secs = seconds_since(t0);
        worst = std::max(worst, secs);
        t.expect(secs <= kRuntimeBudgetS, tag + " took " + std::to_string(secs) + " s");
        const std::size_t diff = label_diff(r.label_map, ph.gt_labels);
        t.expect(diff == 0, tag + ": " + std::to_string(diff) + " voxels differ");
        const MaskVolume everywhere(ph.image.grid(), 1);
        for (auto c : kCoronaryTerritories) {
            const auto m = overlap_metrics(territory_mask(r.label_map, c), territory_mask(ph.gt_labels, c), everywhere);
            t.expect(m.dice == 1.0, tag + " " + std::string(to_string(c)) + " Dice " + std::to_string(m.dice));
        }
        std::string why;
        t.expect(scores_match(r.report, ph.gt_report, kScoreTol, why), tag + ": " + why);
    }
    std::ostringstream os;
    os << specs.size() << " phantoms (20 at 208x176x72, 1 at 512x512x60) voxel-exact, scores within " << kScoreTol
       << ", slowest " << worst << " s";
    return t.outcome(os.str());
}

Outcome distractor_rejection() {
    Tally t;
    const std::array<const char*, 4> names{"bone", "noise", "valve", "straddle"};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto base = generate_phantom(seed);
        const auto base_r = score(base);
        const std::size_t raw0 = count_nonzero(threshold_calcium(base.image));
        for (std::size_t k = 0; k < names.size(); ++k) {
            PhantomDistractors d;
            (k == 0 ? d.bone_outside_pericardium : k == 1 ? d.noise_speckles : k == 2 ? d.valve_calcification
                                                                                       : d.straddling_ostial_lesion) = true;
            const auto ph = generate_phantom(seed, d);
            const std::string tag = "seed " + std::to_string(seed) + " " + names[k];
            t.expect(count_nonzero(threshold_calcium(ph.image)) > raw0, tag + ": raw count did not increase");
            t.expect(scores_identical(score(ph).report, base_r.report), tag + ": scores changed");
        }
    }
    return t.outcome("5 seeds x 4 distractors: raw >=130 HU count up, per-territory scores unchanged exactly");
}

Outcome ostial_split() {
    Tally t;
    std::size_t aortic_total = 0;
    PhantomDistractors d;
    d.straddling_ostial_lesion = true;
    constexpr auto kAorta = static_cast<std::uint8_t>(TerritoryCode::Aorta);
    constexpr auto kLM = static_cast<std::uint8_t>(TerritoryCode::LM);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto ph = generate_phantom(seed, d);
        const std::string tag = "seed " + std::to_string(seed);
        // The straddling object is one connected candidate spanning both sides.
        const auto candidates = extract_lesions(threshold_calcium(ph.image), ph.image);
        bool straddles = false;
        for (const auto& l : candidates) {
            bool has_aortic = false, has_lm = false;
            for (const auto& v : l.voxels) {
                has_aortic |= ph.gt_labels.at(v) == kAorta;
                has_lm |= ph.gt_labels.at(v) == kLM;
            }
            straddles |= has_aortic && has_lm;
        }
        t.expect(straddles, tag + ": no straddling candidate");
        const auto r = score(ph);
        std::size_t aortic = 0;
        for (std::size_t i = 0; i < ph.gt_labels.size(); ++i) {
            if (ph.gt_labels[i] == kAorta) {
                ++aortic;
                t.expect(!is_coronary(static_cast<TerritoryCode>(r.label_map[i])), tag + ": aortic voxel scored");
            } else if (ph.gt_labels[i] != 0) {
                t.expect(r.label_map[i] == ph.gt_labels[i], tag + ": coronary voxel mislabelled");
            }
        }
        aortic_total += aortic;
        t.expect(aortic > 0, tag + ": phantom has no aortic part");
        std::string why;
        t.expect(scores_match(r.report, ph.gt_report, kScoreTol, why), tag + ": " + why);
    }
    return t.outcome("20 phantoms: " + std::to_string(aortic_total) +
                     " aortic-side voxels excluded, coronary remainder labelled as ground truth");
}

Outcome kernel_oracles() {
    Tally t;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Grid3 g({12, 12, 12}, {0.4 + 0.05 * static_cast<double>(seed % 7), 0.7, 1.0 + 0.5 * static_cast<double>(seed % 4)});
        const auto m = oracle::random_mask(g, 0.02 + 0.01 * static_cast<double>(seed % 6), seed);
        if (count_nonzero(m) == 0) {
            t.expect(false, "seed " + std::to_string(seed) + " drew an empty mask");
            continue;
        }
        for (bool fg : {true, false}) {
            const auto d = edt(m, fg ? DistanceTarget::Foreground : DistanceTarget::Background);
            const auto ref = oracle::brute_force_edt(m, fg);
            double worst = 0.0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                worst = std::max(worst, std::abs(d.distance[i] - ref[i]));
            }
            t.expect(worst <= kEdtTol, "EDT seed " + std::to_string(seed) + " error " + std::to_string(worst));
        }
        const auto ref = oracle::brute_force_edt(m, true);
        for (double r : {0.83, 1.77, 2.91}) {
            const auto dil = dilate_ball(m, r);
            bool same = true;
            for (std::size_t i = 0; i < m.size(); ++i) {
                same &= (dil[i] != 0) == (ref[i] <= r);
            }
            t.expect(same, "dilation seed " + std::to_string(seed) + " r " + std::to_string(r));
        }
    }
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Grid3 g({12, 11, 9}, {1, 1, 1});
        const auto m = oracle::random_mask(g, 0.1 + 0.05 * static_cast<double>(seed % 6), seed + 100);
        for (auto c : {Connectivity::Six, Connectivity::Eighteen, Connectivity::TwentySix}) {
            const auto cs = connected_components(m, c);
            t.expect(oracle::same_partition(cs.labels, oracle::flood_fill_labels(m, static_cast<int>(c))) &&
                         static_cast<int>(cs.count) == oracle::count_components(m, static_cast<int>(c)),
                     "components seed " + std::to_string(seed));
        }
    }
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Grid3 g({16, 16, 12}, {1, 1, 1});
        const auto m = oracle::random_mask(g, 0.2 + 0.05 * static_cast<double>(seed % 5), seed + 200);
        const auto skel = skeletonize_3d(m);
        t.expect(oracle::count_components(skel, 26) == oracle::count_components(m, 26),
                 "skeleton component count seed " + std::to_string(seed));
        t.expect(skeletonize_3d(skel) == skel, "skeleton not idempotent seed " + std::to_string(seed));
    }
    return t.outcome("EDT vs brute force within 1e-9 mm, dilation = distance threshold, components = flood fill, "
                     "skeleton keeps 26-components and is idempotent (50 seeds each)");
}

Outcome statistics_oracles() {
    Tally t;
    double worst = 0.0;
    auto near = [&](double a, double b, const std::string& what) {
        worst = std::max(worst, std::abs(a - b));
        t.expect(std::abs(a - b) <= kStatTol, what);
    };
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 3 + seed % 60;
        std::vector<std::array<double, 2>> r(n);
        std::vector<double> x(n), y(n);
        std::vector<int> a(40), b(40);
        for (std::size_t i = 0; i < n; ++i) {
            r[i][0] = oracle::uniform01(rng) * 400;
            r[i][1] = r[i][0] + (oracle::uniform01(rng) - 0.5) * 40;
            x[i] = oracle::uniform01(rng) * 100;
            y[i] = 0.5 * x[i] + oracle::uniform01(rng) * 50;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = 1 + static_cast<int>(rng() % 5);
            b[i] = oracle::uniform01(rng) < 0.7 ? a[i] : 1 + static_cast<int>(rng() % 5);
        }
        const std::string s = " seed " + std::to_string(seed);
        near(icc_2_1(r), oracle::icc21_anova(r), "ICC" + s);
        near(pearson_r(x, y), oracle::pearson_direct(x, y), "Pearson" + s);
        near(cohens_kappa(a, b), oracle::kappa_contingency(a, b), "kappa" + s);
    }
    const std::array<double, 8> scores{0, 1, 10, 10.5, 100, 101, 400, 401};
    const std::array<int, 8> expected{1, 2, 2, 3, 3, 4, 4, 5};
    for (std::size_t k = 0; k < scores.size(); ++k) {
        t.expect(risk_category(scores[k], RiskScheme::Five) == expected[k],
                 "risk of " + std::to_string(scores[k]));
    }
    std::ostringstream os;
    os << "ICC(2,1), kappa, Pearson on 100 seeds, max deviation " << worst << "; five-class risk table matches";
    return t.outcome(os.str());
}

Outcome classifier_checks() {
    Tally t;
    std::vector<BranchSample> toy;
    for (int k = 0; k < 8; ++k) {
        toy.push_back({{3.0 + 3.5 * k, 1.4 + 0.07 * k, 30.0 + 2.0 * (k % 3)}, TerritoryCode::LAD});
        toy.push_back({{62.0 + 6.0 * k, 1.5 - 0.05 * (k % 4), 26.0 + 3.0 * (k % 2)}, TerritoryCode::LCX});
    }
    const auto c = fit_branch_classifier(toy);
    std::mt19937_64 rng(17);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        std::array<double, 4> w{};
        for (auto& v : w) {
            v = (oracle::uniform01(rng) - 0.5) * 4.0;
        }
        const auto g = penalized_gradient(toy, c, w);
        for (std::size_t k = 0; k < 4; ++k) {
            const double h = 1e-5;
            auto wp = w, wm = w;
            wp[k] += h;
            wm[k] -= h;
            const double fd = (penalized_log_likelihood(toy, c, wp) - penalized_log_likelihood(toy, c, wm)) / (2 * h);
            const double rel = std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k]));
            worst = std::max(worst, rel);
            t.expect(rel <= kGradRelTol, "gradient component " + std::to_string(k));
        }
    }
    std::size_t correct = 0;
    for (const auto& s : toy) {
        correct += classify_branch(c, s.features).label == s.label ? 1 : 0;
    }
    t.expect(correct == toy.size(), "toy accuracy " + std::to_string(correct) + "/" + std::to_string(toy.size()));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = score(generate_phantom(seed));
        const auto& gl = r.graph_left;
        int stems = 0;
        bool all_labelled = true;
        for (const auto& e : gl.edges) {
            all_labelled &= e.label.has_value();
            if (e.label != TerritoryCode::LAD) {
                continue;
            }
            const auto parent = gl.in_edge(e.from);
            stems += !parent || gl.edges[static_cast<std::size_t>(*parent)].label != TerritoryCode::LAD ? 1 : 0;
        }
        t.expect(stems == 1 && all_labelled, "seed " + std::to_string(seed) + ": " + std::to_string(stems) + " LAD stems");
    }
    std::ostringstream os;
    os << "gradient vs central differences max rel " << worst << ", toy accuracy 1.0, one LAD on 20 left trees";
    return t.outcome(os.str());
}

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
    Tally t;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto a = generate_phantom(seed, PhantomDistractors::all());
        const auto b = generate_phantom(seed, PhantomDistractors::all());
        t.expect(a.image == b.image && a.pericardium == b.pericardium && a.aorta == b.aorta &&
                     a.vessels == b.vessels && a.gt_labels == b.gt_labels,
                 "phantom seed " + std::to_string(seed) + " not reproducible");
    }
    const fs::path d1 = work / "det_a", d2 = work / "det_b";
    for (const auto& d : {d1, d2}) {
        t.expect(run_cli(cli, "phantom --seed 6 --distractor all --out \"" + d.string() + "\"") == 0, "phantom exit code");
    }
    for (const auto& entry : fs::directory_iterator(d1)) {
        const auto name = entry.path().filename();
        t.expect(slurp(entry.path()) == slurp(d2 / name), "phantom file " + name.string() + " differs");
    }
    const std::string in = "--image \"" + (d1 / "image.mha").string() + "\" --pericardium \"" +
                           (d1 / "pericardium.mha").string() + "\" --aorta \"" + (d1 / "aorta.mha").string() +
                           "\" --vessels \"" + (d1 / "vessels.mha").string() + "\"";
    for (const char* run : {"1", "2"}) {
        const auto out = work / (std::string("score_") + run);
        t.expect(run_cli(cli, "score " + in + " --out-report \"" + (out / "report.json").string() + "\" --out-labels \"" +
                                  (out / "labels.mha").string() + "\"") == 0,
                 "score exit code");
    }
    const std::string r1 = slurp(work / "score_1" / "report.json");
    t.expect(!r1.empty() && r1 == slurp(work / "score_2" / "report.json"), "report files differ");
    const std::string l1 = slurp(work / "score_1" / "labels.mha");
    t.expect(!l1.empty() && l1 == slurp(work / "score_2" / "labels.mha"), "label files differ");
    return t.outcome("two score runs byte-identical (report " + std::to_string(r1.size()) + " B, labels " +
                     std::to_string(l1.size()) + " B); phantoms bit-reproducible per seed");
}

template <class T>
bool round_trip_bit_exact(const Volume<T>& v, const fs::path& p) {
    write_metaimage(v, p.string());
    const auto back = read_metaimage_as<T>(p.string());
    const fs::path p2 = p.string() + ".again.mha";
    write_metaimage(back, p2.string());
    return back.grid().dims() == v.grid().dims() && back.grid().spacing() == v.grid().spacing() &&
           back.grid().origin() == v.grid().origin() &&
           std::memcmp(back.storage().data(), v.storage().data(), v.size() * sizeof(T)) == 0 && slurp(p) == slurp(p2);
}

Outcome format_conformance(const std::string& cli, const fs::path& work) {
    Tally t;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed);
        const Grid3 g({3 + static_cast<int>(seed % 4), 5, 2 + static_cast<int>(seed % 3)},
                      {0.3 + oracle::uniform01(rng), 0.488281, 3.0}, {-124.755859 * seed, 17.25, 1017.5});
        HuVolume hu(g);
        MaskVolume mask(g);
        FloatVolume real(g);
        for (std::size_t i = 0; i < g.voxel_count(); ++i) {
            hu[i] = static_cast<std::int16_t>(static_cast<int>(rng() % 65536) - 32768);
            mask[i] = static_cast<std::uint8_t>(rng() % 256);
            real[i] = static_cast<float>((oracle::uniform01(rng) - 0.5) * 1e6);
        }
        real[0] = -0.0f;
        real[1] = std::numeric_limits<float>::denorm_min();
        real[2] = std::numeric_limits<float>::quiet_NaN();
        const std::string s = std::to_string(seed);
        t.expect(round_trip_bit_exact(hu, work / ("hu" + s + ".mha")), "MET_SHORT seed " + s);
        t.expect(round_trip_bit_exact(mask, work / ("u8" + s + ".mha")), "MET_UCHAR seed " + s);
        t.expect(round_trip_bit_exact(real, work / ("f32" + s + ".mha")), "MET_FLOAT seed " + s);
    }

    const std::string good = "ObjectType = Image\nNDims = 3\nDimSize = 4 4 4\nElementSpacing = 0.5 0.5 3.0\n"
                             "Offset = 0 0 0\nElementType = MET_SHORT\nElementDataFile = LOCAL\n";
    struct Case {
        const char* name;
        std::string text;
        ParseError::Kind kind;
        const char* key;
    };
    auto drop = [&](const std::string& line) {
        std::string h = good;
        h.erase(h.find(line), line.size());
        return h;
    };
    std::string other_type = good;
    other_type.replace(other_type.find("MET_SHORT"), 9, "MET_DOUBLE");
    const std::vector<Case> cases{
        {"missing ElementSpacing", drop("ElementSpacing = 0.5 0.5 3.0\n") + std::string(128, '\0'),
         ParseError::Kind::MissingKey, "ElementSpacing"},
        {"missing DimSize", drop("DimSize = 4 4 4\n") + std::string(128, '\0'), ParseError::Kind::MissingKey, "DimSize"},
        {"unsupported ElementType", other_type + std::string(512, '\0'), ParseError::Kind::UnsupportedValue,
         "ElementType"},
        {"truncated payload", good + std::string(126, '\0'), ParseError::Kind::DataLength, "DimSize"},
    };
    t.expect(read_metaimage_as<std::int16_t>([&] {
                 const auto p = work / "good.mha";
                 std::ofstream(p, std::ios::binary) << good << std::string(128, '\0');
                 return p.string();
             }())
                     .grid()
                     .dims() == Index3{4, 4, 4},
             "well-formed header rejected");
    for (const auto& c : cases) {
        const auto p = work / (std::string("bad_") + std::to_string(&c - cases.data()) + ".mha");
        std::ofstream(p, std::ios::binary) << c.text;
        try {
            read_metaimage(p.string());
            t.expect(false, std::string(c.name) + ": accepted");
        } catch (const ParseError& e) {
            t.expect(e.kind() == c.kind && e.key() == c.key,
                     std::string(c.name) + ": got key '" + e.key() + "'");
        }
        t.expect(run_cli(cli, "score --image \"" + p.string() + "\" --pericardium \"" + p.string() + "\" --aorta \"" +
                                  p.string() + "\" --vessels \"" + p.string() + "\" --out-report \"" +
                                  (work / "x.json").string() + "\" --out-labels \"" + (work / "x.mha").string() + "\"") ==
                     2,
                 std::string(c.name) + ": CLI exit code is not 2");
    }
    return t.outcome("MET_SHORT/MET_UCHAR/MET_FLOAT round trips bit-exact on 10 seeds; " + std::to_string(cases.size()) +
                     " malformed headers give named errors and CLI exit 2");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cac_acceptance <path-to-cacscore>\n";
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path work = fs::temp_directory_path() / ("cac_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"phantom end-to-end exactness", phantom_exactness},
        {"distractor rejection", distractor_rejection},
        {"ostial split correctness", ostial_split},
        {"kernel oracles", kernel_oracles},
        {"statistics oracles", statistics_oracles},
        {"classifier checks", classifier_checks},
        {"determinism", [&] { return determinism(cli, work); }},
        {"format conformance", [&] { return format_conformance(cli, work); }},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << k + 1 << "] " << criteria[k].first << ": " << o.detail
                  << " (" << static_cast<int>(seconds_since(t0)) << " s)" << std::endl;
    }
    fs::remove_all(work);
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
