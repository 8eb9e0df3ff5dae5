#pragma once

// Binary LAD-vs-LCx branch classifier: L2-penalised logistic regression on
// standardised (angle, radius, subtree length) features, fitted by
// iteratively reweighted least squares.

#include <fstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "cac/volume.hpp"

namespace cac {

struct BranchFeatures {
    double angle_deg = 0.0;
    double radius_mm = 0.0;
    double length_mm = 0.0;

    std::array<double, 3> as_array() const { return {angle_deg, radius_mm, length_mm}; }
};

struct BranchSample {
    BranchFeatures features;
    TerritoryCode label = TerritoryCode::LAD;  // LAD or LCX
};

struct BranchClassifier {
    std::array<double, 4> weights{0.0, 0.0, 0.0, 0.0};  // bias first
    std::array<double, 3> feature_means{0.0, 0.0, 0.0};
    std::array<double, 3> feature_scales{1.0, 1.0, 1.0};

    std::array<double, 4> design_row(const BranchFeatures& f) const {
        const auto v = f.as_array();
        return {1.0, (v[0] - feature_means[0]) / feature_scales[0], (v[1] - feature_means[1]) / feature_scales[1],
                (v[2] - feature_means[2]) / feature_scales[2]};
    }

    /// Probability that the branch is the LAD.
    double probability(const BranchFeatures& f) const {
        const auto x = design_row(f);
        double z = 0.0;
        for (int k = 0; k < 4; ++k) {
            z += weights[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
        }
        return 1.0 / (1.0 + std::exp(-z));
    }
};

struct Classification {
    TerritoryCode label;
    double probability;
};

/// LAD when p >= 0.5, LCX otherwise.
inline Classification classify_branch(const BranchClassifier& c, const BranchFeatures& f) {
    const double p = c.probability(f);
    return {p >= 0.5 ? TerritoryCode::LAD : TerritoryCode::LCX, p};
}

struct FitParams {
    double l2 = 1e-3;
    double tolerance = 1e-8;
    int max_iterations = 200;
};

namespace detail {

struct LogisticProblem {
    Eigen::MatrixXd x;  // n x 4 design (standardised, bias column first)
    Eigen::VectorXd y;  // 1 = LAD
    double l2 = 1e-3;
};

inline LogisticProblem make_problem(const std::vector<BranchSample>& samples, const BranchClassifier& c, double l2) {
    LogisticProblem p;
    p.x.resize(static_cast<Eigen::Index>(samples.size()), 4);
    p.y.resize(static_cast<Eigen::Index>(samples.size()));
    p.l2 = l2;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto row = c.design_row(samples[i].features);
        for (int k = 0; k < 4; ++k) {
            p.x(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)];
        }
        p.y(static_cast<Eigen::Index>(i)) = samples[i].label == TerritoryCode::LAD ? 1.0 : 0.0;
    }
    return p;
}

inline Eigen::VectorXd penalty_mask() {
    Eigen::VectorXd m = Eigen::VectorXd::Ones(4);
    m(0) = 0.0;
    return m;
}

}  // namespace detail

/// Penalised log-likelihood sum_i [y log p + (1-y) log(1-p)] - l2/2 |w_{1..3}|^2
/// on the standardised design of `c`.
inline double penalized_log_likelihood(const std::vector<BranchSample>& samples, const BranchClassifier& c,
                                       const std::array<double, 4>& w, double l2 = 1e-3) {
    const auto p = detail::make_problem(samples, c, l2);
    const Eigen::Vector4d wv(w[0], w[1], w[2], w[3]);
    const Eigen::VectorXd z = p.x * wv;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        // log sigmoid(z) and log(1 - sigmoid(z)) in overflow-safe form
        const double lp = -std::log1p(std::exp(-std::abs(z(i)))) + std::min(z(i), 0.0);
        const double lq = lp - z(i);
        ll += p.y(i) * lp + (1.0 - p.y(i)) * lq;
    }
    const Eigen::Vector4d mask = detail::penalty_mask();
    return ll - 0.5 * l2 * wv.cwiseProduct(mask).squaredNorm();
}

/// Gradient of penalized_log_likelihood with respect to the weights.
inline std::array<double, 4> penalized_gradient(const std::vector<BranchSample>& samples, const BranchClassifier& c,
                                                const std::array<double, 4>& w, double l2 = 1e-3) {
    const auto p = detail::make_problem(samples, c, l2);
    const Eigen::Vector4d wv(w[0], w[1], w[2], w[3]);
    const Eigen::VectorXd mu = (1.0 / (1.0 + (-(p.x * wv)).array().exp())).matrix();
    const Eigen::Vector4d g = p.x.transpose() * (p.y - mu) - l2 * wv.cwiseProduct(Eigen::Vector4d(detail::penalty_mask()));
    return {g(0), g(1), g(2), g(3)};
}

inline BranchClassifier fit_branch_classifier(const std::vector<BranchSample>& samples, const FitParams& params = {}) {
    bool has_lad = false, has_lcx = false;
    for (const auto& s : samples) {
        if (s.label == TerritoryCode::LAD) {
            has_lad = true;
        } else if (s.label == TerritoryCode::LCX) {
            has_lcx = true;
        } else {
            throw InvalidInput("branch training labels must be LAD or LCX");
        }
    }
    if (!has_lad || !has_lcx) {
        throw InvalidInput("branch classifier training needs both LAD and LCX samples");
    }
    if (samples.size() < 4) {
        throw InvalidInput("branch classifier training needs at least 4 samples");
    }

    BranchClassifier c;
    const double n = static_cast<double>(samples.size());
    for (int k = 0; k < 3; ++k) {
        double mean = 0.0;
        for (const auto& s : samples) {
            mean += s.features.as_array()[static_cast<std::size_t>(k)];
        }
        mean /= n;
        double var = 0.0;
        for (const auto& s : samples) {
            const double d = s.features.as_array()[static_cast<std::size_t>(k)] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / n);
        c.feature_means[static_cast<std::size_t>(k)] = mean;
        c.feature_scales[static_cast<std::size_t>(k)] = sd > 0.0 ? sd : 1.0;
    }

    const auto p = detail::make_problem(samples, c, params.l2);
    const Eigen::Vector4d mask = detail::penalty_mask();
    Eigen::Vector4d w = Eigen::Vector4d::Zero();
    for (int it = 0; it < params.max_iterations; ++it) {
        const Eigen::VectorXd mu = (1.0 / (1.0 + (-(p.x * w)).array().exp())).matrix();
        const Eigen::VectorXd s = mu.array() * (1.0 - mu.array());
        const Eigen::Vector4d grad = p.x.transpose() * (p.y - mu) - params.l2 * w.cwiseProduct(mask);
        Eigen::Matrix4d h = p.x.transpose() * s.asDiagonal() * p.x;
        h.diagonal() += params.l2 * mask;
        const Eigen::Vector4d step = h.ldlt().solve(grad);
        w += step;
        if (step.cwiseAbs().maxCoeff() < params.tolerance) {
            break;
        }
    }
    c.weights = {w(0), w(1), w(2), w(3)};
    return c;
}

/// Built-in training set: LAD-like branches continue the parent with a small
/// angle and a thick, long subtree; LCx-like branches leave at a wide angle.
inline std::vector<BranchSample> default_training_set() {
    std::vector<BranchSample> s;
    const double lad[][3] = {{5, 2.0, 60},  {10, 1.9, 55}, {15, 2.1, 50}, {20, 1.8, 45}, {25, 1.7, 48},
                             {30, 1.9, 40}, {35, 1.6, 42}, {40, 1.8, 38}, {45, 1.7, 35}, {12, 1.5, 30}};
    const double lcx[][3] = {{55, 1.5, 30},  {60, 1.4, 35},  {70, 1.3, 28}, {80, 1.6, 40}, {90, 1.2, 25},
                             {100, 1.4, 32}, {110, 1.3, 22}, {65, 1.8, 45}, {85, 1.5, 38}, {120, 1.1, 20}};
    for (const auto& r : lad) {
        s.push_back({{r[0], r[1], r[2]}, TerritoryCode::LAD});
    }
    for (const auto& r : lcx) {
        s.push_back({{r[0], r[1], r[2]}, TerritoryCode::LCX});
    }
    return s;
}

inline const BranchClassifier& default_branch_classifier() {
    static const BranchClassifier c = fit_branch_classifier(default_training_set());
    return c;
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string classifier_json(const BranchClassifier& c) {
    nlohmann::ordered_json j;
    j["weights"] = c.weights;
    j["feature_means"] = c.feature_means;
    j["feature_scales"] = c.feature_scales;
    return j.dump(2) + "\n";
}

inline BranchClassifier parse_classifier(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(ParseError::Kind::InvalidValue, "classifier", std::string("malformed JSON: ") + e.what());
    }
    BranchClassifier c;
    auto read = [&](const char* key, auto& arr) {
        if (!j.contains(key)) {
            throw ParseError(ParseError::Kind::MissingKey, key, "missing field");
        }
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != arr.size()) {
            throw ParseError(ParseError::Kind::InvalidValue, key, "wrong array length");
        }
        for (std::size_t k = 0; k < arr.size(); ++k) {
            if (!a[k].is_number()) {
                throw ParseError(ParseError::Kind::InvalidValue, key, "expected numbers");
            }
            arr[k] = a[k].get<double>();
        }
    };
    read("weights", c.weights);
    read("feature_means", c.feature_means);
    read("feature_scales", c.feature_scales);
    for (double s : c.feature_scales) {
        if (!(s > 0.0)) {
            throw ParseError(ParseError::Kind::InvalidValue, "feature_scales", "scales must be > 0");
        }
    }
    return c;
}

inline BranchClassifier load_classifier(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(ParseError::Kind::Io, "classifier", "cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_classifier(ss.str());
}

/// Training CSV with header `angle_deg,radius_mm,length_mm,label`, label LAD
/// or LCX.
inline std::vector<BranchSample> parse_training_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(ParseError::Kind::MissingKey, "header", "empty training CSV");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "angle_deg,radius_mm,length_mm,label") {
        throw ParseError(ParseError::Kind::InvalidValue, "header", "expected header angle_deg,radius_mm,length_mm,label");
    }
    std::vector<BranchSample> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            cells.push_back(cell);
        }
        const std::string where = "row " + std::to_string(row);
        if (cells.size() != 4) {
            throw ParseError(ParseError::Kind::InvalidValue, where, "expected 4 columns");
        }
        BranchSample s;
        try {
            s.features = {std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2])};
        } catch (const std::exception&) {
            throw ParseError(ParseError::Kind::InvalidValue, where, "non-numeric feature");
        }
        const auto label = territory_from_string(cells[3]);
        if (!label || (*label != TerritoryCode::LAD && *label != TerritoryCode::LCX)) {
            throw ParseError(ParseError::Kind::InvalidValue, where, "label must be LAD or LCX");
        }
        s.label = *label;
        out.push_back(s);
    }
    return out;
}

}  // namespace cac
