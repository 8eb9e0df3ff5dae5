#pragma once

// Agreement statistics: voxel overlap within a candidate region, weighted
// means, ICC(2,1), Cohen's kappa and Pearson correlation.

#include <map>
#include <span>

#include <json.hpp>

#include "cac/scoring.hpp"

namespace cac {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct OverlapMetrics {
    double dice = 1.0;
    double sensitivity = 1.0;
    double specificity = 1.0;
    ConfusionCounts counts;
    std::size_t outside_region = 0;  // pred or gt voxels outside the candidate region
};

template <class A, class B, class C>
OverlapMetrics overlap_metrics(const Volume<A>& pred, const Volume<B>& gt, const Volume<C>& candidate_region) {
    assert_same_grid(pred, gt);
    assert_same_grid(pred, candidate_region);
    OverlapMetrics m;
    auto& c = m.counts;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != A{0};
        const bool g = gt[i] != B{0};
        if (candidate_region[i] == C{0}) {
            m.outside_region += (p || g) ? 1 : 0;
            continue;
        }
        if (p && g) {
            ++c.tp;
        } else if (p) {
            ++c.fp;
        } else if (g) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    if (c.tp + c.fp + c.fn > 0) {
        m.dice = 2.0 * d(c.tp) / (2.0 * d(c.tp) + d(c.fp) + d(c.fn));
    }
    if (c.tp + c.fn > 0) {
        m.sensitivity = d(c.tp) / d(c.tp + c.fn);
    }
    if (c.tn + c.fp > 0) {
        m.specificity = d(c.tn) / d(c.tn + c.fp);
    }
    return m;
}

inline nlohmann::ordered_json metrics_json(const OverlapMetrics& m) {
    nlohmann::ordered_json j;
    j["dice"] = m.dice;
    j["sensitivity"] = m.sensitivity;
    j["specificity"] = m.specificity;
    j["tp"] = m.counts.tp;
    j["fp"] = m.counts.fp;
    j["fn"] = m.counts.fn;
    j["tn"] = m.counts.tn;
    j["outside_region"] = m.outside_region;
    return j;
}

inline double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) {
        throw InvalidInput("weighted_mean: " + std::to_string(values.size()) + " values but " +
                           std::to_string(weights.size()) + " weights");
    }
    detail::CompensatedSum num, den;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(weights[i] >= 0.0)) {
            throw InvalidInput("weighted_mean: negative weight");
        }
        num.add(weights[i] * values[i]);
        den.add(weights[i]);
    }
    if (den.value() <= 0.0) {
        throw InvalidInput("weighted_mean: all weights are zero");
    }
    return num.value() / den.value();
}

inline double mean(std::span<const double> values) {
    const std::vector<double> w(values.size(), 1.0);
    return weighted_mean(values, w);
}

/// ICC(2,1) for n subjects rated by two raters (two-way random effects,
/// absolute agreement, single measurement).
inline double icc_2_1(std::span<const std::array<double, 2>> ratings) {
    const std::size_t n = ratings.size();
    if (n < 3) {
        throw InvalidInput("icc_2_1 needs at least 3 subjects");
    }
    constexpr double k = 2.0;
    const double nn = static_cast<double>(n);
    detail::CompensatedSum total;
    std::array<detail::CompensatedSum, 2> cols;
    for (const auto& r : ratings) {
        total.add(r[0] + r[1]);
        cols[0].add(r[0]);
        cols[1].add(r[1]);
    }
    const double grand = total.value() / (nn * k);
    detail::CompensatedSum ssr, ssc, sse;
    for (const auto& r : ratings) {
        const double rm = 0.5 * (r[0] + r[1]) - grand;
        ssr.add(k * rm * rm);
    }
    std::array<double, 2> cm{};
    for (int j = 0; j < 2; ++j) {
        cm[j] = cols[j].value() / nn - grand;
        ssc.add(nn * cm[j] * cm[j]);
    }
    for (const auto& r : ratings) {
        const double rm = 0.5 * (r[0] + r[1]) - grand;
        for (int j = 0; j < 2; ++j) {
            const double e = r[j] - grand - rm - cm[j];
            sse.add(e * e);
        }
    }
    const double msr = ssr.value() / (nn - 1.0);
    const double msc = ssc.value() / (k - 1.0);
    const double mse = sse.value() / ((nn - 1.0) * (k - 1.0));
    const double den = msr + (k - 1.0) * mse + (k / nn) * (msc - mse);
    if (!(den > 0.0)) {
        throw InvalidInput("icc_2_1 undefined: denominator " + std::to_string(den));
    }
    return (msr - mse) / den;
}

inline double icc_2_1(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidInput("icc_2_1: rater columns differ in length");
    }
    std::vector<std::array<double, 2>> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        r[i] = {a[i], b[i]};
    }
    return icc_2_1(r);
}

inline double cohens_kappa(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw InvalidInput("cohens_kappa: sequences differ in length");
    }
    if (a.empty()) {
        throw InvalidInput("cohens_kappa: empty sequences");
    }
    std::map<int, std::size_t> ma, mb;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ma[a[i]];
        ++mb[b[i]];
        agree += a[i] == b[i] ? 1 : 0;
    }
    const double n = static_cast<double>(a.size());
    const double po = static_cast<double>(agree) / n;
    detail::CompensatedSum pe_sum;
    for (const auto& [cat, na] : ma) {
        const auto it = mb.find(cat);
        if (it != mb.end()) {
            pe_sum.add((static_cast<double>(na) / n) * (static_cast<double>(it->second) / n));
        }
    }
    const double pe = pe_sum.value();
    if (pe == 1.0) {
        if (po == 1.0) {
            return 1.0;
        }
        throw InvalidInput("cohens_kappa undefined: chance agreement is 1");
    }
    return (po - pe) / (1.0 - pe);
}

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidInput("pearson_r: sequences differ in length");
    }
    if (x.size() < 2) {
        throw InvalidInput("pearson_r needs at least 2 pairs");
    }
    const double mx = mean(x);
    const double my = mean(y);
    detail::CompensatedSum sxy, sxx, syy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if (sxx.value() == 0.0 || syy.value() == 0.0) {
        throw InvalidInput("pearson_r undefined: zero variance");
    }
    return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

}  // namespace cac
