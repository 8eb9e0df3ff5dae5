// cacscore: command-line front end for the calcium scoring pipeline.
//
//   cacscore score    --image P --pericardium P --aorta P --vessels P --out-report P --out-labels P
//   cacscore phantom  --seed N [--spec P] --out DIR
//   cacscore metrics  --pred P --gt P --candidate-region P --out P
//   cacscore graph    --vessels P --aorta P --ostia P --out P
//   cacscore train-classifier --samples CSV --out P
//
// Exit codes: 0 success, 2 input or parse error, 3 pipeline stage error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cac/cac.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitStage = 3;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw cac::ParseError(cac::ParseError::Kind::Io, path.string(), "cannot write " + path.string());
    }
    os << text;
    if (!os) {
        throw cac::ParseError(cac::ParseError::Kind::Io, path.string(), "write failed: " + path.string());
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw cac::ParseError(cac::ParseError::Kind::Io, path, "cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Masks may be stored with any element type but must hold only 0 and 1.
cac::MaskVolume read_mask(const std::string& path, std::string_view what) {
    return std::visit(
        [&](const auto& v) {
            cac::require_binary(v, std::string(what) + " (" + path + ")");
            cac::MaskVolume m(v.grid(), 0);
            for (std::size_t i = 0; i < v.size(); ++i) {
                m[i] = v[i] != 0 ? 1 : 0;
            }
            return m;
        },
        cac::read_metaimage(path));
}

cac::BranchClassifier classifier_or_default(const std::string& path) {
    return path.empty() ? cac::default_branch_classifier() : cac::load_classifier(path);
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
    std::string image, pericardium, aorta, vessels, ostia, config, classifier;
    std::string out_report, out_labels, out_graphs;
    bool orcascore_labels = false;
    bool timings = false;
};

int run_score(const ScoreArgs& a) {
    const cac::PipelineConfig cfg = a.config.empty() ? cac::PipelineConfig{} : cac::load_config(a.config);
    const auto classifier = classifier_or_default(a.classifier);
    cac::PipelineOptions opts;
    opts.orcascore_labels = a.orcascore_labels;
    opts.record_timings = a.timings;
    opts.classifier = &classifier;
    if (!a.ostia.empty()) {
        opts.ostia = cac::load_ostia(a.ostia);
    }
    const auto peri = read_mask(a.pericardium, "pericardium mask");
    const auto aorta = read_mask(a.aorta, "aorta mask");
    const auto vessels = read_mask(a.vessels, "vessel mask");
    const auto r = std::visit([&](const auto& img) { return cac::run_pipeline(img, peri, aorta, vessels, cfg, opts); },
                              cac::read_metaimage(a.image));

    write_text(a.out_report, cac::pipeline_report_json(r).dump(2) + "\n");
    cac::write_metaimage(r.label_map, a.out_labels);
    if (!a.out_graphs.empty()) {
        const fs::path dir(a.out_graphs);
        write_text(dir / "graph_left.json", cac::graph_to_json(r.graph_left).dump(2) + "\n");
        write_text(dir / "graph_right.json", cac::graph_to_json(r.graph_right).dump(2) + "\n");
        write_text(dir / "graph_left.dot", cac::graph_dot(r.graph_left, "left"));
        write_text(dir / "graph_right.dot", cac::graph_dot(r.graph_right, "right"));
    }
    for (const auto& w : r.diagnostics.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << "Agatston " << r.report.total.agatston << " AU, volume " << r.report.total.volume_mm3 << " mm3, "
              << r.report.lesions.size() << " lesions, risk " << r.report.risk5 << "/5\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct PhantomArgs {
    std::uint64_t seed = 0;
    std::string spec, out;
    std::vector<std::string> distractors;
};

int run_phantom(const PhantomArgs& a) {
    cac::PhantomSpec spec = cac::default_phantom_spec(a.seed);
    if (!a.spec.empty()) {
        spec = cac::parse_phantom_spec(read_text(a.spec), spec);
    }
    for (const auto& d : a.distractors) {
        auto& ds = spec.distractors;
        if (d == "all") {
            ds = cac::PhantomDistractors::all();
        } else if (d == "bone") {
            ds.bone_outside_pericardium = true;
        } else if (d == "noise") {
            ds.noise_speckles = true;
        } else if (d == "valve") {
            ds.valve_calcification = true;
        } else if (d == "straddle") {
            ds.straddling_ostial_lesion = true;
        }
    }
    const auto ph = cac::generate_phantom(spec);
    cac::write_phantom_study(ph, a.out);
    std::cout << "phantom seed " << spec.seed << ": " << ph.gt_report.lesions.size() << " lesions, Agatston "
              << ph.gt_report.total.agatston << " AU -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string pred, gt, region, out;
};

int run_metrics(const MetricsArgs& a) {
    const auto pred = cac::read_metaimage_as<std::uint8_t>(a.pred);
    const auto gt = cac::read_metaimage_as<std::uint8_t>(a.gt);
    const auto region = read_mask(a.region, "candidate region");
    cac::assert_same_grid(pred, gt);
    auto select = [](const cac::LabelVolume& v, auto keep) {
        cac::MaskVolume m(v.grid(), 0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            m[i] = keep(static_cast<cac::TerritoryCode>(v[i])) ? 1 : 0;
        }
        return m;
    };
    auto coronary = [](cac::TerritoryCode c) { return cac::is_coronary(c); };
    nlohmann::ordered_json j;
    j["coronary"] = cac::metrics_json(cac::overlap_metrics(select(pred, coronary), select(gt, coronary), region));
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (auto t : cac::kCoronaryTerritories) {
        auto is_t = [t](cac::TerritoryCode c) { return c == t; };
        per[std::string(cac::to_string(t))] =
            cac::metrics_json(cac::overlap_metrics(select(pred, is_t), select(gt, is_t), region));
    }
    j["per_territory"] = per;
    write_text(a.out, j.dump(2) + "\n");
    std::cout << "coronary Dice " << j["coronary"]["dice"].get<double>() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct GraphArgs {
    std::string vessels, aorta, ostia, out, classifier;
    double max_gap_mm = 10.0;
};

int run_graph(const GraphArgs& a) {
    const auto vessels = read_mask(a.vessels, "vessel mask");
    const auto aorta = read_mask(a.aorta, "aorta mask");
    cac::assert_same_grid(vessels, aorta);
    const auto ostia = cac::load_ostia(a.ostia);
    const auto classifier = classifier_or_default(a.classifier);
    nlohmann::ordered_json j;
    try {
        j["left"] = cac::graph_to_json(
            cac::build_labeled_tree(vessels, ostia.left_ostium, cac::OstiumSide::Left, a.max_gap_mm, classifier));
        j["right"] = cac::graph_to_json(
            cac::build_labeled_tree(vessels, ostia.right_ostium, cac::OstiumSide::Right, a.max_gap_mm, classifier));
    } catch (const cac::StageError&) {
        throw;
    } catch (const cac::Error& e) {
        throw cac::StageError("vessel_tree", e.what());
    }
    write_text(a.out, j.dump(2) + "\n");
    std::cout << "left " << j["left"]["edges"].size() << " edges, right " << j["right"]["edges"].size() << " edges\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string samples, out;
    double l2 = cac::FitParams{}.l2;
};

int run_train(const TrainArgs& a) {
    const auto samples = a.samples.empty() ? cac::default_training_set() : cac::parse_training_csv(read_text(a.samples));
    cac::FitParams params;
    params.l2 = a.l2;
    const auto c = cac::fit_branch_classifier(samples, params);
    std::size_t correct = 0;
    for (const auto& s : samples) {
        correct += cac::classify_branch(c, s.features).label == s.label ? 1 : 0;
    }
    write_text(a.out, cac::classifier_json(c) + "\n");
    std::cout << samples.size() << " samples, training accuracy "
              << static_cast<double>(correct) / static_cast<double>(samples.size()) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coronary artery calcium scoring from CT and organ masks"};
    app.require_subcommand(1);

    ScoreArgs score;
    auto* sc = app.add_subcommand("score", "Score a study and write the report and label map");
    sc->add_option("--image", score.image, "CT image in HU (.mha/.mhd)")->required();
    sc->add_option("--pericardium", score.pericardium, "Pericardium mask")->required();
    sc->add_option("--aorta", score.aorta, "Aorta mask")->required();
    sc->add_option("--vessels", score.vessels, "Coronary vessel mask")->required();
    sc->add_option("--ostia", score.ostia, "Valve and ostia points (JSON); estimated when omitted");
    sc->add_option("--config", score.config, "key = value config file");
    sc->add_option("--classifier", score.classifier, "LAD/LCX classifier JSON");
    sc->add_flag("--orcascore-labels", score.orcascore_labels, "Report LM calcium as LAD");
    sc->add_flag("--timings", score.timings, "Record stage timings in the report");
    sc->add_option("--out-report", score.out_report, "Report JSON")->required();
    sc->add_option("--out-labels", score.out_labels, "Territory label map (.mha)")->required();
    sc->add_option("--out-graphs", score.out_graphs, "Directory for vessel graph JSON and DOT files");

    PhantomArgs phantom;
    auto* ph = app.add_subcommand("phantom", "Generate a synthetic study with ground truth");
    ph->add_option("--seed", phantom.seed, "Random seed")->required();
    ph->add_option("--spec", phantom.spec, "Phantom spec JSON overriding the seeded defaults");
    ph->add_option("--distractor", phantom.distractors, "bone, noise, valve, straddle or all")
        ->check(CLI::IsMember({"bone", "noise", "valve", "straddle", "all"}));
    ph->add_option("--out", phantom.out, "Output directory")->required();

    MetricsArgs metrics;
    auto* me = app.add_subcommand("metrics", "Voxel overlap between two label maps");
    me->add_option("--pred", metrics.pred, "Predicted label map")->required();
    me->add_option("--gt", metrics.gt, "Reference label map")->required();
    me->add_option("--candidate-region", metrics.region, "Candidate region mask")->required();
    me->add_option("--out", metrics.out, "Metrics JSON")->required();

    GraphArgs graph;
    auto* gr = app.add_subcommand("graph", "Build and label the left and right vessel graphs");
    gr->add_option("--vessels", graph.vessels, "Coronary vessel mask")->required();
    gr->add_option("--aorta", graph.aorta, "Aorta mask")->required();
    gr->add_option("--ostia", graph.ostia, "Valve and ostia points (JSON)")->required();
    gr->add_option("--classifier", graph.classifier, "LAD/LCX classifier JSON");
    gr->add_option("--max-gap-mm", graph.max_gap_mm, "Largest gap bridged between vessel fragments");
    gr->add_option("--out", graph.out, "Graph JSON")->required();

    TrainArgs train;
    auto* tr = app.add_subcommand("train-classifier", "Fit the LAD/LCX branch classifier");
    tr->add_option("--samples", train.samples, "CSV angle_deg,radius_mm,length_mm,label; built-in set when omitted");
    tr->add_option("--l2", train.l2, "L2 penalty");
    tr->add_option("--out", train.out, "Classifier JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitInput;
    }

    try {
        if (sc->parsed()) {
            return run_score(score);
        }
        if (ph->parsed()) {
            return run_phantom(phantom);
        }
        if (me->parsed()) {
            return run_metrics(metrics);
        }
        if (gr->parsed()) {
            return run_graph(graph);
        }
        return run_train(train);
    } catch (const cac::StageError& e) {
        std::cerr << "error: stage " << e.stage() << ": " << e.what() << "\n";
        return kExitStage;
    } catch (const cac::ParseError& e) {
        std::cerr << "error: " << e.key() << ": " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
