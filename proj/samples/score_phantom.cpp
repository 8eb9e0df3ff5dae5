// Generates a synthetic study, scores it and compares against ground truth.
//
//   ./score_phantom [seed]

#include <cstdlib>
#include <iostream>

#include "cac/cac.hpp"

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
    const auto ph = cac::generate_phantom(seed, cac::PhantomDistractors::all());

    const auto r = cac::run_pipeline(ph.image, ph.pericardium, ph.aorta, ph.vessels);

    std::cout << "territory\tAgatston\treference\n";
    for (auto t : cac::kCoronaryTerritories) {
        std::cout << cac::to_string(t) << "\t\t" << r.report.per_territory.at(t).agatston << "\t"
                  << ph.gt_report.per_territory.at(t).agatston << "\n";
    }
    std::cout << "total\t\t" << r.report.total.agatston << "\t" << ph.gt_report.total.agatston << "\n";
    std::cout << "risk class\t" << r.report.risk5 << " of 5\n";

    const auto pred = cac::overlap_metrics(r.label_map, ph.gt_labels, ph.pericardium);
    std::cout << "Dice vs ground truth: " << pred.dice << "\n";
    return 0;
}
