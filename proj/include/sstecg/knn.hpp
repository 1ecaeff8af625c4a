#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <vector>

#include "sstecg/common.hpp"

namespace sstecg::ml {

// Per-feature z-score transform fitted on training data.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x) {
        Standardizer s;
        s.mean = x.colwise().mean();
        s.scale.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double var =
                (x.col(j).array() - s.mean(j)).square().sum() /
                std::max<double>(1.0, static_cast<double>(x.rows() - 1));
            const double sd = std::sqrt(var);
            s.scale(j) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return (x.rowwise() - mean.transpose()).array().rowwise() /
               scale.transpose().array();
    }

    Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const {
        return (x - mean).cwiseQuotient(scale);
    }
};

// K-nearest-neighbor classifier on standardized Euclidean distance.
// Majority vote among the k nearest; vote ties fall back to the label of the
// single nearest neighbor. Distance ties resolve to the lower exemplar index.
struct KnnModel {
    Eigen::MatrixXd exemplars;  // standardized rows
    std::vector<int> labels;
    int k = 9;
    Standardizer standardizer;
};

inline KnnModel knn_fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int k = 9) {
    if (x.rows() == 0) throw InvalidArgument("knn_fit: empty training set");
    if (static_cast<size_t>(x.rows()) != y.size()) throw InvalidArgument("knn_fit: label mismatch");
    if (k < 1 || k > x.rows()) throw InvalidArgument("knn_fit: k out of range");
    if (k % 2 == 0) throw InvalidArgument("knn_fit: k must be odd");
    KnnModel m;
    m.k = k;
    m.standardizer = Standardizer::fit(x);
    m.exemplars = m.standardizer.apply(x);
    m.labels = y;
    return m;
}

inline int knn_predict(const KnnModel& m, const Eigen::VectorXd& x_raw) {
    const Eigen::VectorXd x = m.standardizer.apply_row(x_raw);
    const Eigen::VectorXd d2 =
        (m.exemplars.rowwise() - x.transpose()).rowwise().squaredNorm();
    const int k = m.k;
    std::vector<int> order(static_cast<size_t>(d2.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        if (d2(a) != d2(b)) return d2(a) < d2(b);
        return a < b;
    });
    std::map<int, int> votes;
    for (int i = 0; i < k; ++i) votes[m.labels[static_cast<size_t>(order[static_cast<size_t>(i)])]] += 1;
    int best_label = m.labels[static_cast<size_t>(order[0])];
    int best_votes = 0;
    bool tie = false;
    for (const auto& [label, v] : votes) {
        if (v > best_votes) {
            best_votes = v;
            best_label = label;
            tie = false;
        } else if (v == best_votes) {
            tie = true;
        }
    }
    if (tie) return m.labels[static_cast<size_t>(order[0])];
    return best_label;
}

inline std::vector<int> knn_fit_predict(const Eigen::MatrixXd& train_x,
                                        const std::vector<int>& train_y,
                                        const Eigen::MatrixXd& test_x, int k = 9) {
    const KnnModel m = knn_fit(train_x, train_y, k);
    std::vector<int> out;
    out.reserve(static_cast<size_t>(test_x.rows()));
    for (Eigen::Index i = 0; i < test_x.rows(); ++i) out.push_back(knn_predict(m, test_x.row(i)));
    return out;
}

}  // namespace sstecg::ml
