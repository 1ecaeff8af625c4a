#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "sstecg/common.hpp"

namespace sstecg::ml {

// Confusion matrix with reference on rows and prediction on columns.
// Se(i) = n_ii / row sum, +P(i) = n_ii / column sum, ACC = trace / total.
// Labels outside [0, n_classes) land in an extra "other" bucket.
struct EvalReport {
    std::vector<std::string> classes;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> confusion;
    std::vector<double> se;   // per class, percent
    std::vector<double> ppv;  // per class, percent
    double acc = 0;           // percent
    bool has_other = false;
    std::int64_t total = 0;
};

inline EvalReport evaluate(std::span<const int> predictions, std::span<const int> references,
                           const std::vector<std::string>& class_names) {
    if (predictions.size() != references.size()) {
        throw InvalidArgument("evaluate: predictions and references differ in length");
    }
    const int n = static_cast<int>(class_names.size());
    EvalReport rep;
    rep.classes = class_names;
    rep.confusion.setZero(n + 1, n + 1);
    auto bucket = [&](int label) { return label >= 0 && label < n ? label : n; };
    for (size_t i = 0; i < references.size(); ++i) {
        const int r = bucket(references[i]);
        const int p = bucket(predictions[i]);
        if (r == n || p == n) rep.has_other = true;
        rep.confusion(r, p) += 1;
    }
    rep.total = static_cast<std::int64_t>(references.size());
    if (!rep.has_other) rep.confusion.conservativeResize(n, n);

    std::int64_t diag = 0;
    for (int i = 0; i < n; ++i) {
        const std::int64_t row = rep.confusion.row(i).sum();
        const std::int64_t col = rep.confusion.col(i).sum();
        rep.se.push_back(row > 0 ? 100.0 * static_cast<double>(rep.confusion(i, i)) /
                                       static_cast<double>(row)
                                 : 0.0);
        rep.ppv.push_back(col > 0 ? 100.0 * static_cast<double>(rep.confusion(i, i)) /
                                        static_cast<double>(col)
                                  : 0.0);
        diag += rep.confusion(i, i);
    }
    rep.acc = rep.total > 0 ? 100.0 * static_cast<double>(diag) / static_cast<double>(rep.total) : 0.0;
    return rep;
}

// Evaluate directly from a prebuilt confusion matrix (reference on rows).
inline EvalReport evaluate_confusion(
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& confusion,
    const std::vector<std::string>& class_names) {
    if (confusion.rows() != confusion.cols() ||
        confusion.rows() != static_cast<Eigen::Index>(class_names.size())) {
        throw InvalidArgument("evaluate_confusion: shape mismatch");
    }
    EvalReport rep;
    rep.classes = class_names;
    rep.confusion = confusion;
    rep.total = confusion.sum();
    std::int64_t diag = 0;
    for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
        const std::int64_t row = confusion.row(i).sum();
        const std::int64_t col = confusion.col(i).sum();
        rep.se.push_back(row > 0 ? 100.0 * static_cast<double>(confusion(i, i)) /
                                       static_cast<double>(row)
                                 : 0.0);
        rep.ppv.push_back(col > 0 ? 100.0 * static_cast<double>(confusion(i, i)) /
                                        static_cast<double>(col)
                                  : 0.0);
        diag += confusion(i, i);
    }
    rep.acc = rep.total > 0 ? 100.0 * static_cast<double>(diag) / static_cast<double>(rep.total) : 0.0;
    return rep;
}

}  // namespace sstecg::ml
