#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <list>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <vector>

#include "sstecg/common.hpp"
#include "sstecg/knn.hpp"  // Standardizer

namespace sstecg::ml {

struct SvmParams {
    double C = 1.0;
    double gamma = 1.0;                  // RBF: exp(-gamma ||x - x'||^2)
    std::map<int, double> class_weights; // multiplies C per class; default 1
    double tol = 1e-3;                   // KKT stopping tolerance
    std::int64_t max_iter = 20'000'000;
    std::size_t cache_mb = 256;

    double weight_for(int cls) const {
        const auto it = class_weights.find(cls);
        return it == class_weights.end() ? 1.0 : it->second;
    }
};

namespace detail {

// RBF kernel rows over standardized features with an LRU row cache.
class RbfKernel {
  public:
    RbfKernel(const Eigen::MatrixXd& x, double gamma, std::size_t cache_bytes)
        : x_(x), gamma_(gamma) {
        sq_ = x.rowwise().squaredNorm();
        const std::size_t row_bytes = static_cast<std::size_t>(x.rows()) * sizeof(double);
        max_rows_ = row_bytes > 0 ? std::max<std::size_t>(2, cache_bytes / row_bytes) : 2;
    }

    const Eigen::VectorXd& row(int i) {
        if (const auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        Eigen::VectorXd k = (x_ * x_.row(i).transpose());
        k = (-gamma_ * (sq_.array() + sq_(i) - 2.0 * k.array())).exp();
        lru_.emplace_front(i, std::move(k));
        index_[i] = lru_.begin();
        if (lru_.size() > max_rows_) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        return lru_.front().second;
    }

    double entry(int i, int j) const {
        const double d2 = sq_(i) + sq_(j) - 2.0 * x_.row(i).dot(x_.row(j));
        return std::exp(-gamma_ * d2);
    }

  private:
    const Eigen::MatrixXd& x_;
    double gamma_;
    Eigen::VectorXd sq_;
    std::size_t max_rows_;
    std::list<std::pair<int, Eigen::VectorXd>> lru_;
    std::unordered_map<int, std::list<std::pair<int, Eigen::VectorXd>>::iterator> index_;
};

}  // namespace detail

struct SmoResult {
    Eigen::VectorXd alpha;  // box-constrained duals, >= 0
    double rho = 0;         // decision f(x) = sum alpha_i y_i K(x_i, x) - rho
    double objective = 0;   // 1/2 a^T Q a - e^T a (minimization form)
    double kkt_gap = 0;
    std::int64_t iterations = 0;
};

// Two-variable SMO with maximal-violating-pair selection (no shrinking) for
// the weighted soft-margin dual:
//   min 1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C_i.
inline SmoResult smo_solve(detail::RbfKernel& kernel, const std::vector<int>& y,
                           const std::vector<double>& box_c, double tol,
                           std::int64_t max_iter) {
    const int n = static_cast<int>(y.size());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

    const auto in_up = [&](int t) {
        return y[static_cast<size_t>(t)] > 0 ? alpha(t) < box_c[static_cast<size_t>(t)]
                                             : alpha(t) > 0.0;
    };
    const auto in_low = [&](int t) {
        return y[static_cast<size_t>(t)] > 0 ? alpha(t) > 0.0
                                             : alpha(t) < box_c[static_cast<size_t>(t)];
    };

    SmoResult res;
    std::int64_t iter = 0;
    double m_val = 0, big_m = 0;
    for (; iter < max_iter; ++iter) {
        int i = -1, j = -1;
        m_val = -std::numeric_limits<double>::infinity();
        big_m = std::numeric_limits<double>::infinity();
        for (int t = 0; t < n; ++t) {
            const double v = -y[static_cast<size_t>(t)] * grad(t);
            if (in_up(t) && v > m_val) {
                m_val = v;
                i = t;
            }
            if (in_low(t) && v < big_m) {
                big_m = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || m_val - big_m <= tol) break;

        const Eigen::VectorXd& ki = kernel.row(i);
        const Eigen::VectorXd& kj = kernel.row(j);
        const double yi = y[static_cast<size_t>(i)], yj = y[static_cast<size_t>(j)];
        const double ci = box_c[static_cast<size_t>(i)], cj = box_c[static_cast<size_t>(j)];
        const double old_ai = alpha(i), old_aj = alpha(j);

        // curvature along the feasible direction, same in both label cases
        double quad = ki(i) + kj(j) - 2.0 * ki(j);
        if (quad <= 0.0) quad = 1e-12;

        if (yi != yj) {
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = old_ai - old_aj;
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0) {
                if (alpha(j) < 0) {
                    alpha(j) = 0;
                    alpha(i) = diff;
                }
            } else {
                if (alpha(i) < 0) {
                    alpha(i) = 0;
                    alpha(j) = -diff;
                }
            }
            if (diff > ci - cj) {
                if (alpha(i) > ci) {
                    alpha(i) = ci;
                    alpha(j) = ci - diff;
                }
            } else {
                if (alpha(j) > cj) {
                    alpha(j) = cj;
                    alpha(i) = cj + diff;
                }
            }
        } else {
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = old_ai + old_aj;
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > ci) {
                if (alpha(i) > ci) {
                    alpha(i) = ci;
                    alpha(j) = sum - ci;
                }
            } else {
                if (alpha(j) < 0) {
                    alpha(j) = 0;
                    alpha(i) = sum;
                }
            }
            if (sum > cj) {
                if (alpha(j) > cj) {
                    alpha(j) = cj;
                    alpha(i) = sum - cj;
                }
            } else {
                if (alpha(i) < 0) {
                    alpha(i) = 0;
                    alpha(j) = sum;
                }
            }
        }

        const double dai = alpha(i) - old_ai;
        const double daj = alpha(j) - old_aj;
        if (dai == 0.0 && daj == 0.0) break;  // numerically stuck at the box
        for (int t = 0; t < n; ++t) {
            const double yt = y[static_cast<size_t>(t)];
            grad(t) += yt * yi * ki(t) * dai + yt * yj * kj(t) * daj;
        }
    }
    if (iter >= max_iter) throw ConvergenceError("smo_solve: iteration budget exhausted");

    // rho from free points, or midway between the bounds
    double sum_free = 0;
    int n_free = 0;
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
        const double yg = y[static_cast<size_t>(t)] * grad(t);
        if (alpha(t) >= box_c[static_cast<size_t>(t)] - 1e-12) {
            if (y[static_cast<size_t>(t)] < 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else if (alpha(t) <= 1e-12) {
            if (y[static_cast<size_t>(t)] > 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else {
            sum_free += yg;
            ++n_free;
        }
    }
    res.rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
    res.alpha = alpha;
    res.objective = 0.5 * alpha.dot(grad - Eigen::VectorXd::Constant(n, 1.0));
    res.kkt_gap = std::max(0.0, m_val - big_m);
    res.iterations = iter;
    return res;
}

// One binary classifier of the one-vs-one set. coef holds alpha_i * y_i for
// each stored support vector (standardized feature space).
struct PairModel {
    int class_pos = 0;
    int class_neg = 0;
    Eigen::MatrixXd support_vectors;
    Eigen::VectorXd coef;
    double rho = 0;
    double objective = 0;
    double kkt_gap = 0;
    std::int64_t iterations = 0;
};

struct SvmModel {
    std::vector<int> classes;  // ascending
    std::vector<PairModel> pairs;
    Standardizer standardizer;
    SvmParams params;

    double decision(const PairModel& p, const Eigen::VectorXd& x_std) const {
        const Eigen::VectorXd d2 =
            (p.support_vectors.rowwise() - x_std.transpose()).rowwise().squaredNorm();
        return (d2.array() * -params.gamma).exp().matrix().dot(p.coef) - p.rho;
    }
};

// Weighted one-vs-one C-SVC with RBF kernel. Features are standardized with
// training-set statistics folded into the model.
inline SvmModel svm_train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const SvmParams& params) {
    if (x.rows() < 2 || static_cast<size_t>(x.rows()) != y.size()) {
        throw InvalidArgument("svm_train: bad training set shape");
    }
    if (!x.allFinite()) throw InvalidArgument("svm_train: features must be finite");

    std::map<int, int> counts;
    for (int c : y) counts[c] += 1;
    if (counts.size() < 2) throw InvalidArgument("svm_train: need at least two classes");
    for (const auto& [c, cnt] : counts) {
        if (cnt < 2) {
            throw DataError("svm_train: class " + std::to_string(c) + " has fewer than 2 samples");
        }
    }

    SvmModel model;
    model.params = params;
    for (const auto& [c, cnt] : counts) model.classes.push_back(c);
    model.standardizer = Standardizer::fit(x);
    const Eigen::MatrixXd xs = model.standardizer.apply(x);

    for (size_t a = 0; a < model.classes.size(); ++a) {
        for (size_t b = a + 1; b < model.classes.size(); ++b) {
            const int ca = model.classes[a], cb = model.classes[b];
            std::vector<int> rows;
            for (size_t i = 0; i < y.size(); ++i) {
                if (y[i] == ca || y[i] == cb) rows.push_back(static_cast<int>(i));
            }
            Eigen::MatrixXd xp(static_cast<Eigen::Index>(rows.size()), xs.cols());
            std::vector<int> yp(rows.size());
            std::vector<double> box(rows.size());
            for (size_t i = 0; i < rows.size(); ++i) {
                xp.row(static_cast<Eigen::Index>(i)) = xs.row(rows[i]);
                const bool pos = y[static_cast<size_t>(rows[i])] == ca;
                yp[i] = pos ? 1 : -1;
                box[i] = params.C * params.weight_for(pos ? ca : cb);
            }
            detail::RbfKernel kernel(xp, params.gamma, params.cache_mb << 20);
            const SmoResult sol = smo_solve(kernel, yp, box, params.tol, params.max_iter);

            PairModel pm;
            pm.class_pos = ca;
            pm.class_neg = cb;
            pm.rho = sol.rho;
            pm.objective = sol.objective;
            pm.kkt_gap = sol.kkt_gap;
            pm.iterations = sol.iterations;
            std::vector<int> sv;
            for (int i = 0; i < sol.alpha.size(); ++i) {
                if (sol.alpha(i) > 1e-12) sv.push_back(i);
            }
            pm.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), xs.cols());
            pm.coef.resize(static_cast<Eigen::Index>(sv.size()));
            for (size_t i = 0; i < sv.size(); ++i) {
                pm.support_vectors.row(static_cast<Eigen::Index>(i)) = xp.row(sv[i]);
                pm.coef(static_cast<Eigen::Index>(i)) =
                    sol.alpha(sv[i]) * yp[static_cast<size_t>(sv[i])];
            }
            model.pairs.push_back(std::move(pm));
        }
    }
    return model;
}

// One-vs-one voting across a set of pair decisions; vote ties break on the
// larger accumulated |decision value|, then the lower class index.
inline int vote_decision(const std::vector<int>& classes,
                         const std::vector<std::pair<std::pair<int, int>, double>>& decisions) {
    std::map<int, int> votes;
    std::map<int, double> strength;
    for (int c : classes) {
        votes[c] = 0;
        strength[c] = 0.0;
    }
    for (const auto& [pair_cls, d] : decisions) {
        const int winner = d > 0 ? pair_cls.first : pair_cls.second;
        votes[winner] += 1;
        strength[winner] += std::abs(d);
    }
    int best = classes.front();
    for (int c : classes) {
        if (votes[c] > votes[best]) {
            best = c;
        } else if (votes[c] == votes[best] && c != best) {
            if (strength[c] > strength[best]) best = c;
        }
    }
    return best;
}

inline int svm_predict(const SvmModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.standardizer.mean.size()) {
        throw InvalidArgument("svm_predict: feature dimension mismatch");
    }
    if (!x.allFinite()) throw InvalidArgument("svm_predict: features must be finite");
    const Eigen::VectorXd xs = model.standardizer.apply_row(x);
    std::vector<std::pair<std::pair<int, int>, double>> decisions;
    decisions.reserve(model.pairs.size());
    for (const auto& p : model.pairs) {
        decisions.push_back({{p.class_pos, p.class_neg}, model.decision(p, xs)});
    }
    return vote_decision(model.classes, decisions);
}

// Two-lead merge: pool the one-vs-one decisions of both per-lead models and
// take the most common class.
inline int svm_predict_merged(const SvmModel& lead_a, const SvmModel& lead_b,
                              const Eigen::VectorXd& xa, const Eigen::VectorXd& xb) {
    const Eigen::VectorXd xsa = lead_a.standardizer.apply_row(xa);
    const Eigen::VectorXd xsb = lead_b.standardizer.apply_row(xb);
    std::vector<std::pair<std::pair<int, int>, double>> decisions;
    for (const auto& p : lead_a.pairs) {
        decisions.push_back({{p.class_pos, p.class_neg}, lead_a.decision(p, xsa)});
    }
    for (const auto& p : lead_b.pairs) {
        decisions.push_back({{p.class_pos, p.class_neg}, lead_b.decision(p, xsb)});
    }
    std::set<int> cls(lead_a.classes.begin(), lead_a.classes.end());
    cls.insert(lead_b.classes.begin(), lead_b.classes.end());
    return vote_decision(std::vector<int>(cls.begin(), cls.end()), decisions);
}

// ---------------------------------------------------------------------------
// stratified cross-validation and grid search
// ---------------------------------------------------------------------------

// Stratified fold ids: indices are shuffled within each class with the given
// seed and dealt round-robin, so every fold keeps the class proportions.
inline std::vector<int> stratified_folds(const std::vector<int>& y, int folds,
                                         std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("stratified_folds: need at least 2 folds");
    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(static_cast<int>(i));
    for (const auto& [c, idx] : by_class) {
        if (static_cast<int>(idx.size()) < folds) {
            throw DataError("stratified_folds: class " + std::to_string(c) +
                            " has fewer samples than folds");
        }
    }
    std::vector<int> fold_of(y.size(), 0);
    std::mt19937_64 rng(seed);
    for (auto& [c, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t i = 0; i < idx.size(); ++i) {
            fold_of[static_cast<size_t>(idx[i])] = static_cast<int>(i % static_cast<size_t>(folds));
        }
    }
    return fold_of;
}

struct GridSpec {
    std::vector<double> c_values;
    std::vector<double> gamma_values;
    std::vector<std::map<int, double>> weight_sets;
};

struct GridSearchResult {
    SvmParams best;
    double best_score = -1;  // mean balanced accuracy across folds
    std::vector<std::pair<SvmParams, double>> evaluated;
};

// Mean per-class recall of predictions against references.
inline double balanced_accuracy(const std::vector<int>& pred, const std::vector<int>& ref) {
    std::map<int, std::pair<std::int64_t, std::int64_t>> per_class;  // hits, total
    for (size_t i = 0; i < ref.size(); ++i) {
        auto& pc = per_class[ref[i]];
        pc.second += 1;
        if (pred[i] == ref[i]) pc.first += 1;
    }
    double acc = 0;
    for (const auto& [c, pc] : per_class) {
        acc += static_cast<double>(pc.first) / static_cast<double>(pc.second);
    }
    return per_class.empty() ? 0.0 : acc / static_cast<double>(per_class.size());
}

inline GridSearchResult grid_search_cv(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                       const GridSpec& grid, int folds = 10,
                                       std::uint64_t seed = 1,
                                       const SvmParams& base = {}) {
    if (grid.c_values.empty() || grid.gamma_values.empty()) {
        throw InvalidArgument("grid_search_cv: empty grid");
    }
    const auto fold_of = stratified_folds(y, folds, seed);
    GridSearchResult result;
    const std::vector<std::map<int, double>> weight_sets =
        grid.weight_sets.empty() ? std::vector<std::map<int, double>>{{}} : grid.weight_sets;

    for (double c : grid.c_values) {
        for (double g : grid.gamma_values) {
            for (const auto& w : weight_sets) {
                SvmParams p = base;
                p.C = c;
                p.gamma = g;
                p.class_weights = w;
                double score_sum = 0;
                for (int f = 0; f < folds; ++f) {
                    std::vector<int> tr_rows, va_rows;
                    for (size_t i = 0; i < y.size(); ++i) {
                        (fold_of[i] == f ? va_rows : tr_rows).push_back(static_cast<int>(i));
                    }
                    Eigen::MatrixXd xt(static_cast<Eigen::Index>(tr_rows.size()), x.cols());
                    std::vector<int> yt(tr_rows.size());
                    for (size_t i = 0; i < tr_rows.size(); ++i) {
                        xt.row(static_cast<Eigen::Index>(i)) = x.row(tr_rows[i]);
                        yt[i] = y[static_cast<size_t>(tr_rows[i])];
                    }
                    const SvmModel m = svm_train(xt, yt, p);
                    std::vector<int> pred(va_rows.size()), ref(va_rows.size());
                    for (size_t i = 0; i < va_rows.size(); ++i) {
                        pred[i] = svm_predict(m, x.row(va_rows[i]));
                        ref[i] = y[static_cast<size_t>(va_rows[i])];
                    }
                    score_sum += balanced_accuracy(pred, ref);
                }
                const double score = score_sum / folds;
                result.evaluated.push_back({p, score});
                if (score > result.best_score) {
                    result.best_score = score;
                    result.best = p;
                }
            }
        }
    }
    return result;
}

}  // namespace sstecg::ml
