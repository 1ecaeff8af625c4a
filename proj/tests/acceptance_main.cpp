// Acceptance suite: one criterion per line, PASS / FAIL / SKIP with the
// measured numbers. Criteria that need the physical ECG database are skipped
// when no data directory is supplied (--data or SSTECG_DATA); everything
// synthetic runs unconditionally. Exit code is nonzero iff a criterion fails.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sstecg/dsp.hpp"
#include "sstecg/features.hpp"
#include "sstecg/fft.hpp"
#include "sstecg/knn.hpp"
#include "sstecg/metrics.hpp"
#include "sstecg/pipeline.hpp"
#include "sstecg/rpeak.hpp"
#include "sstecg/sst.hpp"
#include "sstecg/svm.hpp"
#include "sstecg/synth.hpp"
#include "sstecg/wfdb.hpp"

using namespace sstecg;
namespace fs = std::filesystem;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct Outcome {
    enum class Status { pass, fail, skip } status;
    std::string detail;

    static Outcome pass(std::string d) { return {Status::pass, std::move(d)}; }
    static Outcome fail(std::string d) { return {Status::fail, std::move(d)}; }
    static Outcome skip(std::string d) { return {Status::skip, std::move(d)}; }
};

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", v);
    return buf;
}

// ---------------------------------------------------------------------------
// shared synthetic helpers
// ---------------------------------------------------------------------------

Signal cosine(double f, double fs, size_t n, double amp = 1.0) {
    Signal x(n);
    for (size_t i = 0; i < n; ++i) x[i] = amp * std::cos(two_pi * f * static_cast<double>(i) / fs);
    return x;
}

struct Planes {
    sst::TfPlane squeezed;
    std::vector<double> bins;
    sst::MotherWavelet wavelet;
};

Planes analyze(const Signal& x, double fs, double center) {
    Planes p;
    p.wavelet = sst::MotherWavelet(center, 0.8 * center);
    const auto scales = sst::log_scales(p.wavelet, 0.25 * center, 4.0 * center, 32);
    const auto cw = sst::cwt(x, fs, scales, p.wavelet);
    const auto field = sst::reassign(cw);
    p.bins = sst::linear_bins(0.25 * center, 4.0 * center, 512);
    p.squeezed = sst::squeeze(cw, field, p.bins);
    return p;
}

// ---------------------------------------------------------------------------
// C5: pure-arithmetic metrics check against the published tables
// ---------------------------------------------------------------------------

Outcome criterion5() {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> four(4, 4);
    four << 36721, 2694, 553, 4203,
              239, 1489,  81,   26,
              124,  473, 2487, 125,
               33,    7,   25, 323;
    const auto rep = ml::evaluate_confusion(four, {"N", "S", "V", "F"});
    const double expect_se[4] = {83.13, 81.14, 77.50, 83.25};
    const double expect_ppv[4] = {98.93, 31.93, 79.05, 6.91};
    auto r2 = [](double v) { return std::round(v * 100.0) / 100.0; };
    for (int i = 0; i < 4; ++i) {
        if (r2(rep.se[static_cast<size_t>(i)]) != expect_se[i] ||
            r2(rep.ppv[static_cast<size_t>(i)]) != expect_ppv[i]) {
            return Outcome::fail("four-class Se/+P mismatch at class " + std::to_string(i));
        }
    }

    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> two(2, 2);
    two << 5004, 428, 5879, 38292;
    const auto brep = ml::evaluate_confusion(two, {"abnormal", "N"});
    if (r2(brep.se[0]) != 92.12 || r2(brep.se[1]) != 86.69 || r2(brep.acc) != 87.29) {
        return Outcome::fail("binary Se/Sp/ACC mismatch: " + pct(brep.se[0]) + "/" +
                             pct(brep.se[1]) + "/" + pct(brep.acc));
    }
    return Outcome::pass("four-class Se/+P all at 2 decimals; binary 92.12/86.69/87.29 exact");
}

// ---------------------------------------------------------------------------
// C6: SST property suite on synthetic signals
// ---------------------------------------------------------------------------

Eigen::MatrixXcd cwt_direct_oracle(const Signal& x, double fs, const std::vector<double>& scales,
                                   const sst::MotherWavelet& w) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(scales.size()), n);
    for (size_t s = 0; s < scales.size(); ++s) {
        const double a = scales[s];
        std::vector<std::complex<double>> kernel(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            std::complex<double> acc = 0.0;
            for (int k = 0; k < n; ++k) {
                const double f = dft_bin_hz(k, n, fs);
                if (f <= 0.0) continue;
                acc += 2.0 * std::sqrt(a) * w.hat(a * f) *
                       std::polar(1.0, two_pi * k * j / static_cast<double>(n));
            }
            kernel[static_cast<size_t>(j)] = acc / static_cast<double>(n);
        }
        for (int m = 0; m < n; ++m) {
            std::complex<double> acc = 0.0;
            for (int t = 0; t < n; ++t) {
                acc += x[static_cast<size_t>(t)] * kernel[static_cast<size_t>((m - t + n) % n)];
            }
            out(static_cast<Eigen::Index>(s), m) = acc;
        }
    }
    return out;
}

Outcome criterion6() {
    const double fs = 360.0;
    std::ostringstream detail;

    // tone instantaneous-frequency recovery across a 10-frequency grid
    {
        const size_t n = 4096;
        const double center = 1.2;
        double worst_frac = 1.0;
        for (int k = 0; k < 10; ++k) {
            const double f0 = 0.85 * center + (0.3 * center) * k / 9.0;
            const auto p = analyze(cosine(f0, fs, n), fs, center);
            const auto ridge = sst::extract_ridge(p.squeezed, center, 0.3 * center);
            const double bin = p.bins[1] - p.bins[0];
            size_t ok = 0, total = 0;
            for (size_t t = n / 4; t < 3 * n / 4; ++t) {
                ++total;
                if (std::abs(ridge[t] - f0) <= bin) ++ok;
            }
            worst_frac = std::min(worst_frac, static_cast<double>(ok) / static_cast<double>(total));
        }
        if (worst_frac < 0.99) {
            return Outcome::fail("tone IF recovery only " + pct(100 * worst_frac) +
                                 " of interior times within 1 bin");
        }
        detail << "tone IF >= " << pct(100 * worst_frac) << " in 1 bin";
    }

    // chirp ridge within 2 bins
    {
        const size_t n = 4096;
        synth::AnhSpec spec;
        spec.f0_hz = 1.0;
        spec.chirp_rate_hz_per_s = 0.03;
        spec.eps = 0.05;
        const auto gt = synth::generate(spec, fs, static_cast<double>(n) / fs, 1);
        const auto p = analyze(gt.signal, fs, 1.2);
        const auto ridge = sst::extract_ridge(p.squeezed, 1.2, 0.36);
        const double bin = p.bins[1] - p.bins[0];
        double worst = 0;
        for (size_t t = n / 4; t < 3 * n / 4; ++t) {
            worst = std::max(worst, std::abs(ridge[t] - gt.true_if[t]) / bin);
        }
        if (worst > 2.0) {
            return Outcome::fail("chirp ridge error " + std::to_string(worst) + " bins");
        }
        detail << "; chirp ridge <= " << std::fixed << std::setprecision(2) << worst << " bins";
    }

    // round-trip reconstruction on a generator signal with eps <= 0.05
    {
        const size_t n = 8192;
        synth::AnhSpec spec;
        spec.f0_hz = 1.2;
        spec.amp_mod_depth = 0.08;
        spec.amp_mod_freq_hz = 0.05;
        spec.fm_depth = 0.05;
        spec.fm_freq_hz = 0.08;
        spec.eps = 0.05;
        const auto gt = synth::generate(spec, fs, static_cast<double>(n) / fs, 1);
        const auto p = analyze(gt.signal, fs, 1.2);
        const auto ridge = sst::extract_ridge(p.squeezed, 1.2, 0.36);
        const auto est = sst::reconstruct(p.squeezed, ridge, static_cast<int>(p.bins.size()),
                                          p.wavelet);
        double num = 0, den = 0;
        for (size_t t = n / 8; t < 7 * n / 8; ++t) {
            const double rebuilt = est.amplitude[t] * std::cos(two_pi * est.phase[t]);
            num += (rebuilt - gt.signal[t]) * (rebuilt - gt.signal[t]);
            den += gt.signal[t] * gt.signal[t];
        }
        const double rel = std::sqrt(num / den);
        if (rel > 0.05) return Outcome::fail("round-trip L2 error " + pct(100 * rel));
        detail << "; round-trip L2 " << pct(100 * rel);
    }

    // spectral path vs direct summation on a 256-sample input
    {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g(0.0, 1.0);
        Signal x(256);
        for (auto& v : x) v = g(rng);
        const sst::MotherWavelet w(8.0, 6.0);
        const auto scales = sst::log_scales(w, 4.0, 16.0, 8);
        const auto fftpath = sst::cwt(x, 64.0, scales, w);
        const auto direct = cwt_direct_oracle(x, 64.0, scales, w);
        const double rel = (fftpath.plane.values - direct).cwiseAbs().maxCoeff() /
                           direct.cwiseAbs().maxCoeff();
        if (rel > 1e-8) return Outcome::fail("cwt oracle relative error " + std::to_string(rel));
        std::ostringstream o;
        o << std::scientific << std::setprecision(1) << rel;
        detail << "; cwt vs oracle " << o.str();
    }
    return Outcome::pass(detail.str());
}

// ---------------------------------------------------------------------------
// C7: phase-cycle / beat correspondence and TH1 recovery
// ---------------------------------------------------------------------------

Outcome criterion7() {
    const double fs = 360.0;
    std::ostringstream detail;

    // clean 60 s at 1.2 Hz: one peak per interior cycle, tight zeta spread
    {
        const auto spec = synth::AnhSpec::ecg_like_default(1.2);
        const auto gt = synth::generate(spec, fs, 60.0, 1);
        const auto peaks = rpeak::detect_elgendi(gt.signal, fs);
        const auto pre = dsp::preprocess_xm(gt.signal, fs);
        const auto phase = sst::sst_blocks(pre, fs, peaks.indices);

        const auto margin = static_cast<std::int64_t>(fs);
        std::vector<std::int64_t> bounds;
        for (size_t i = 1; i < phase.phase.size(); ++i) {
            if (std::floor(phase.phase[i]) > std::floor(phase.phase[i - 1])) {
                const auto idx = static_cast<std::int64_t>(i);
                if (idx >= margin && idx + margin < static_cast<std::int64_t>(phase.phase.size())) {
                    bounds.push_back(idx);
                }
            }
        }
        if (bounds.size() < 60) return Outcome::fail("too few phase cycles on clean input");
        for (size_t b = 0; b + 1 < bounds.size(); ++b) {
            size_t inside = 0;
            for (auto p : peaks.indices) {
                if (p >= bounds[b] && p < bounds[b + 1]) ++inside;
            }
            if (inside != 1) {
                return Outcome::fail("cycle " + std::to_string(b) + " holds " +
                                     std::to_string(inside) + " peaks");
            }
        }

        const auto zetas = features::phase_at_peaks(phase, peaks.indices);
        std::vector<double> interior(zetas.begin() + 2, zetas.end() - 2);
        const double sd = std::sqrt(variance(interior));
        if (sd > 0.02) return Outcome::fail("std(zeta) = " + std::to_string(sd) + " cycles");
        detail << "one peak in each of " << bounds.size() - 1 << " cycles; std(zeta) "
               << std::fixed << std::setprecision(4) << sd << " cycles";
    }

    // one widened, attenuated beat: missed by the base detector, recovered
    {
        auto spec = synth::AnhSpec::ecg_like_default(1.2);
        spec.perturbs = {{30, 0.8, 4.0, 0.0}};
        const auto gt = synth::generate(spec, fs, 60.0, 1);
        const auto base = rpeak::detect_elgendi(gt.signal, fs);
        const auto base_score = rpeak::score_detection(base.indices, gt.true_peaks, fs, 50.0);
        if (base_score.fn != 1) {
            return Outcome::fail("dropout construction missed " + std::to_string(base_score.fn) +
                                 " beats instead of 1");
        }
        const auto pre = dsp::preprocess_xm(gt.signal, fs);
        const auto phase = sst::sst_blocks(pre, fs, base.indices);
        const auto rec = rpeak::recover_missed(base, phase, gt.signal, fs);
        const auto rec_score = rpeak::score_detection(rec.indices, gt.true_peaks, fs, 50.0);
        if (rec_score.fn != 0 || rec_score.fp != 0) {
            return Outcome::fail("recovery left fn=" + std::to_string(rec_score.fn) +
                                 " fp=" + std::to_string(rec_score.fp));
        }
        detail << "; injected beat recovered by TH1";
    }
    return Outcome::pass(detail.str());
}

// ---------------------------------------------------------------------------
// C8: SMO dual objective vs dense QP brute force
// ---------------------------------------------------------------------------

Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v, const std::vector<int>& y,
                                       const std::vector<double>& box) {
    const int n = static_cast<int>(v.size());
    auto clipped = [&](double nu) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            x(i) = std::clamp(v(i) - nu * y[static_cast<size_t>(i)], 0.0,
                              box[static_cast<size_t>(i)]);
        }
        return x;
    };
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < n; ++i) {
        lo = std::min(lo, -std::abs(v(i)) - box[static_cast<size_t>(i)]);
        hi = std::max(hi, std::abs(v(i)) + box[static_cast<size_t>(i)]);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Eigen::VectorXd x = clipped(mid);
        double r = 0;
        for (int i = 0; i < n; ++i) r += y[static_cast<size_t>(i)] * x(i);
        if (r > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return clipped(0.5 * (lo + hi));
}

Outcome criterion8() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> uc(0.5, 20.0), ug(0.3, 3.0), uw(0.5, 4.0);
    std::uniform_int_distribution<int> un(6, 20), ud(2, 4);

    double worst_obj = 0, worst_gap = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = un(rng), d = ud(rng);
        Eigen::MatrixXd x(n, d);
        std::vector<int> y(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) x(i, j) = g(rng);
            y[static_cast<size_t>(i)] = i % 2 == 0 ? 1 : -1;
        }
        const double c = uc(rng), gamma = ug(rng);
        const double w_pos = uw(rng), w_neg = uw(rng);

        std::vector<double> box(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            box[static_cast<size_t>(i)] = c * (y[static_cast<size_t>(i)] > 0 ? w_pos : w_neg);
        }
        ml::detail::RbfKernel kernel(x, gamma, 64 << 20);
        const auto smo = ml::smo_solve(kernel, y, box, 1e-4, 10'000'000);

        // dense projected-gradient solve of the same dual
        Eigen::MatrixXd q(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                q(i, j) = y[static_cast<size_t>(i)] * y[static_cast<size_t>(j)] *
                          std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
            }
        }
        Eigen::VectorXd pv = Eigen::VectorXd::Ones(n).normalized();
        for (int it = 0; it < 50; ++it) pv = (q * pv).normalized();
        const double lip = std::max(1e-9, pv.dot(q * pv));
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        for (int it = 0; it < 200000; ++it) {
            alpha = project_box_hyperplane(alpha - (q * alpha - ones) / lip, y, box);
        }
        const double ref_obj = 0.5 * alpha.dot(q * alpha) - alpha.sum();

        const double rel = std::abs(smo.objective - ref_obj) / std::max(1.0, std::abs(ref_obj));
        worst_obj = std::max(worst_obj, rel);
        worst_gap = std::max(worst_gap, smo.kkt_gap);
        if (rel > 1e-4) {
            return Outcome::fail("objective mismatch " + std::to_string(rel) + " on trial " +
                                 std::to_string(trial));
        }
        if (smo.kkt_gap > 1e-3) {
            return Outcome::fail("KKT gap " + std::to_string(smo.kkt_gap));
        }
    }
    std::ostringstream detail;
    detail << std::scientific << std::setprecision(1) << "worst objective gap " << worst_obj
           << ", worst KKT residual " << worst_gap << " over 10 problems";
    return Outcome::pass(detail.str());
}

// ---------------------------------------------------------------------------
// C9: quality KNN (real labels when available, synthetic fallback otherwise)
// ---------------------------------------------------------------------------

Outcome criterion9_fallback() {
    // three noise levels over clean ECG-like signals: LQ sigma 0.9, MQ 0.25,
    // HQ 0.02; two 120 s records per level at 1.1 / 1.2 Hz; features at the
    // detected peaks; stratified 10-fold CV with k = 9
    const double fs = 360.0;
    const double sigmas[3] = {0.9, 0.25, 0.02};
    std::vector<std::array<double, 5>> feats;
    std::vector<int> y;
    pipeline::PipelineConfig cfg;
    for (int lvl = 0; lvl < 3; ++lvl) {
        for (int recnum = 0; recnum < 2; ++recnum) {
            auto spec = synth::AnhSpec::ecg_like_default(1.1 + 0.1 * recnum);
            spec.noise_sigma = sigmas[static_cast<size_t>(lvl)];
            const auto gt = synth::generate(spec, fs, 120.0, 10 * lvl + recnum + 1);
            const auto an = pipeline::analyze_lead(gt.signal, fs, cfg);
            const auto rows = features::beat_features("s", gt.signal, fs,
                                                      an.with_recovery.indices, an.phase, an.pre,
                                                      an.runs);
            for (const auto& r : rows) {
                feats.push_back({r.zeta, r.r_amp, r.rr_prev, r.rr_next, r.rr_mean10});
                y.push_back(lvl);
            }
        }
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(feats.size()), 5);
    for (size_t i = 0; i < feats.size(); ++i) {
        for (int c = 0; c < 5; ++c) x(static_cast<Eigen::Index>(i), c) = feats[i][static_cast<size_t>(c)];
    }
    const auto folds = ml::stratified_folds(y, 10, 1);
    std::vector<int> pred(y.size());
    for (int f = 0; f < 10; ++f) {
        std::vector<int> tr, va;
        for (size_t i = 0; i < y.size(); ++i) (folds[i] == f ? va : tr).push_back(static_cast<int>(i));
        Eigen::MatrixXd xt(static_cast<Eigen::Index>(tr.size()), 5);
        std::vector<int> yt(tr.size());
        for (size_t i = 0; i < tr.size(); ++i) {
            xt.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
            yt[i] = y[static_cast<size_t>(tr[i])];
        }
        const auto m = ml::knn_fit(xt, yt, 9);
        for (int i : va) pred[static_cast<size_t>(i)] = ml::knn_predict(m, x.row(i));
    }
    int hit = 0;
    for (size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
    const double acc = 100.0 * hit / static_cast<double>(y.size());
    if (acc < 90.0) return Outcome::fail("synthetic fallback accuracy " + pct(acc));
    return Outcome::pass("synthetic 3-level fallback (sigma 0.9/0.25/0.02, k=9): " + pct(acc) +
                         " over " + std::to_string(y.size()) + " beats");
}

// ---------------------------------------------------------------------------
// data-gated criteria: shared pass over the physical database
// ---------------------------------------------------------------------------

struct DataResults {
    bool ran = false;
    std::string error;
    int n_records = 0;
    rpeak::DetectionScore lead0_base, lead0_rec, lead1_base, lead1_rec;
    std::vector<wfdb::EcgRecord> ann_records;  // annotations only
    std::vector<features::BeatFeatures> lead0_features;
};

DataResults run_data_pass(const std::string& dir, std::ostream& log) {
    DataResults res;
    std::vector<fs::path> paths;
    try {
        paths = pipeline::list_record_paths(dir);
    } catch (const Error& e) {
        res.error = e.what();
        return res;
    }
    res.n_records = static_cast<int>(paths.size());
    log << "data pass over " << paths.size() << " records...\n";

    pipeline::PipelineConfig cfg;
    struct PerRecord {
        rpeak::DetectionScore l0b, l0r, l1b, l1r;
        bool has_lead1 = false;
        wfdb::EcgRecord ann_only;
        std::vector<features::BeatFeatures> feats;
        std::string error;
    };
    std::vector<PerRecord> rows(paths.size());

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= paths.size()) return;
            PerRecord& row = rows[i];
            try {
                auto rec = pipeline::load_record(paths[i]);
                std::vector<std::int64_t> ref;
                for (const auto& a : rec.beats()) ref.push_back(a.sample_index);

                for (size_t lead = 0; lead < std::min<size_t>(2, rec.leads.size()); ++lead) {
                    const auto an = pipeline::analyze_lead(rec.leads[lead].samples, rec.fs, cfg);
                    if (!ref.empty()) {
                        const auto base =
                            rpeak::score_detection(an.base.indices, ref, rec.fs, cfg.score_tol_ms);
                        const auto with_rec = rpeak::score_detection(an.with_recovery.indices, ref,
                                                                     rec.fs, cfg.score_tol_ms);
                        if (lead == 0) {
                            row.l0b = base;
                            row.l0r = with_rec;
                        } else {
                            row.l1b = base;
                            row.l1r = with_rec;
                            row.has_lead1 = true;
                        }
                    }
                    if (lead == 0) {
                        std::vector<std::int64_t> peaks;
                        std::vector<std::optional<wfdb::AamiClass>> labels;
                        for (const auto& a : rec.beats()) {
                            peaks.push_back(a.sample_index);
                            labels.push_back(a.aami);
                        }
                        row.feats = features::beat_features(rec.record_id, rec.leads[0].samples,
                                                            rec.fs, peaks, an.phase, an.pre,
                                                            an.runs, labels, cfg.detector.w1_ms);
                    }
                }
                row.ann_only = rec;
                for (auto& lead : row.ann_only.leads) lead.samples.clear();
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    const unsigned jobs = std::max(2u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (auto& row : rows) {
        if (!row.error.empty()) {
            res.error = row.error;
            return res;
        }
        auto add = [](rpeak::DetectionScore& agg, const rpeak::DetectionScore& s) {
            agg.tp += s.tp;
            agg.fn += s.fn;
            agg.fp += s.fp;
        };
        add(res.lead0_base, row.l0b);
        add(res.lead0_rec, row.l0r);
        if (row.has_lead1) {
            add(res.lead1_base, row.l1b);
            add(res.lead1_rec, row.l1r);
        }
        res.ann_records.push_back(std::move(row.ann_only));
        res.lead0_features.insert(res.lead0_features.end(), row.feats.begin(), row.feats.end());
    }
    res.ran = true;
    return res;
}

Outcome criterion1(const DataResults& d) {
    if (!d.ran) return Outcome::skip("requires the 48-record database (" + d.error + ")");
    if (d.n_records != 48) {
        return Outcome::fail("expected 48 records, found " + std::to_string(d.n_records));
    }
    const double se = 100.0 * d.lead0_rec.se();
    const double ppv = 100.0 * d.lead0_rec.ppv();
    std::ostringstream o;
    o << "lead II with recovery: TP " << d.lead0_rec.tp << " FN " << d.lead0_rec.fn << " FP "
      << d.lead0_rec.fp << " Se " << pct(se) << " +P " << pct(ppv) << " (base FN "
      << d.lead0_base.fn << ")";
    if (se < 99.7 || ppv < 99.8) return Outcome::fail(o.str());
    if (d.lead0_rec.fn > d.lead0_base.fn) {
        return Outcome::fail(o.str() + "; recovery increased FN");
    }
    return Outcome::pass(o.str());
}

Outcome criterion2(const DataResults& d) {
    if (!d.ran) return Outcome::skip("requires the 48-record database (" + d.error + ")");
    const double se_rec = 100.0 * d.lead1_rec.se();
    const double se_base = 100.0 * d.lead1_base.se();
    const double ppv_rec = 100.0 * d.lead1_rec.ppv();
    std::ostringstream o;
    o << "precordial: Se " << pct(se_rec) << " (base " << pct(se_base) << ") +P " << pct(ppv_rec);
    if (se_rec < se_base) return Outcome::fail(o.str() + "; recovery lowered Se");
    if (std::abs(se_rec - 95.66) > 1.0 || std::abs(ppv_rec - 96.51) > 1.0) {
        return Outcome::fail(o.str() + "; outside +-1.0 pp of 95.66/96.51");
    }
    return Outcome::pass(o.str());
}

Outcome criterion10(const DataResults& d) {
    if (!d.ran) return Outcome::skip("requires the 48-record database (" + d.error + ")");
    try {
        const auto split = wfdb::split_ds(d.ann_records);
        return Outcome::pass("DS1/DS2 per-type counts all equal the reference table");
    } catch (const Error& e) {
        return Outcome::fail(e.what());
    }
}

struct SplitTables {
    Eigen::MatrixXd train_x, test_x;
    std::vector<int> train_y, test_y;
};

SplitTables build_tables(const DataResults& d, bool binary) {
    std::set<std::string> ds1(wfdb::ds1_record_ids().begin(), wfdb::ds1_record_ids().end());
    std::set<std::string> ds2(wfdb::ds2_record_ids().begin(), wfdb::ds2_record_ids().end());
    std::vector<const features::BeatFeatures*> tr, te;
    for (const auto& f : d.lead0_features) {
        if (!f.label || *f.label == wfdb::AamiClass::Q) continue;
        if (ds1.count(f.record_id)) tr.push_back(&f);
        if (ds2.count(f.record_id)) te.push_back(&f);
    }
    SplitTables t;
    auto fill = [&](const std::vector<const features::BeatFeatures*>& src, Eigen::MatrixXd& x,
                    std::vector<int>& y) {
        x.resize(static_cast<Eigen::Index>(src.size()), 6);
        for (size_t i = 0; i < src.size(); ++i) {
            const auto& r = *src[i];
            x.row(static_cast<Eigen::Index>(i)) << r.zeta, r.r_amp, r.rr_prev, r.rr_next,
                r.rr_mean10, r.qrs_dur;
            const int cls = static_cast<int>(*r.label);
            y.push_back(binary ? (cls == 0 ? 0 : 1) : cls);
        }
    };
    fill(tr, t.train_x, t.train_y);
    fill(te, t.test_x, t.test_y);
    return t;
}

Outcome criterion3(const DataResults& d) {
    if (!d.ran) return Outcome::skip("requires the 48-record database (" + d.error + ")");
    const auto t = build_tables(d, true);
    ml::SvmParams p;
    p.C = 8.38;
    p.gamma = 0.52;
    p.class_weights = {{0, 1.0}, {1, 5.0}};
    const auto model = ml::svm_train(t.train_x, t.train_y, p);
    std::vector<int> pred;
    for (Eigen::Index i = 0; i < t.test_x.rows(); ++i) {
        pred.push_back(ml::svm_predict(model, t.test_x.row(i)));
    }
    const auto rep = ml::evaluate(pred, t.test_y, {"N", "abnormal"});
    std::ostringstream o;
    o << "binary DS2: ACC " << pct(rep.acc) << " abnormal Se " << pct(rep.se[1]) << " on "
      << t.test_y.size() << " beats";
    if (std::abs(rep.acc - 87.29) > 2.0) return Outcome::fail(o.str() + "; ACC outside +-2 pp");
    if (std::abs(rep.se[1] - 92.12) > 3.0) return Outcome::fail(o.str() + "; Se outside +-3 pp");
    return Outcome::pass(o.str());
}

Outcome criterion4(const DataResults& d) {
    if (!d.ran) return Outcome::skip("requires the 48-record database (" + d.error + ")");
    const auto t = build_tables(d, false);
    ml::SvmParams p;
    p.C = 3.98;
    p.gamma = 1.98;
    p.class_weights = {{0, 0.42}, {1, 55.0}, {2, 0.85}, {3, 5.3}};
    const auto model = ml::svm_train(t.train_x, t.train_y, p);
    std::vector<int> pred;
    for (Eigen::Index i = 0; i < t.test_x.rows(); ++i) {
        pred.push_back(ml::svm_predict(model, t.test_x.row(i)));
    }
    const auto rep = ml::evaluate(pred, t.test_y, {"N", "S", "V", "F"});
    std::ostringstream o;
    o << "four-class DS2: ACC " << pct(rep.acc) << " Se(N) " << pct(rep.se[0]) << " on "
      << t.test_y.size() << " beats";
    if (std::abs(rep.acc - 83.20) > 3.0) return Outcome::fail(o.str() + "; ACC outside +-3 pp");
    if (std::abs(rep.se[0] - 83.13) > 3.0) return Outcome::fail(o.str() + "; Se(N) outside +-3 pp");
    return Outcome::pass(o.str());
}

Outcome criterion9(const DataResults& d, const std::string& labels_path) {
    if (!d.ran || labels_path.empty()) return criterion9_fallback();

    std::ifstream lf(labels_path);
    if (!lf) return Outcome::fail("cannot open labels: " + labels_path);
    std::map<std::pair<std::string, std::int64_t>, int> labels;
    const std::map<std::string, int> level = {{"LQ", 0}, {"MQ", 1}, {"HQ", 2}};
    std::string line;
    while (std::getline(lf, line)) {
        std::stringstream ss(line);
        std::string id, idx, q;
        if (!std::getline(ss, id, ',') || !std::getline(ss, idx, ',') || !std::getline(ss, q, ','))
            continue;
        if (!level.count(q)) continue;
        labels[{id, std::stoll(idx)}] = level.at(q);
    }

    std::vector<std::array<double, 5>> feats;
    std::vector<int> y;
    for (const auto& f : d.lead0_features) {
        const auto it = labels.find({f.record_id, f.sample_index});
        if (it == labels.end()) continue;
        feats.push_back({f.zeta, f.r_amp, f.rr_prev, f.rr_next, f.rr_mean10});
        y.push_back(it->second);
    }
    if (y.size() < 100) return Outcome::fail("too few labeled beats joined");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(feats.size()), 5);
    for (size_t i = 0; i < feats.size(); ++i) {
        for (int c = 0; c < 5; ++c) x(static_cast<Eigen::Index>(i), c) = feats[i][static_cast<size_t>(c)];
    }
    const auto folds = ml::stratified_folds(y, 10, 1);
    std::vector<int> pred(y.size());
    for (int f = 0; f < 10; ++f) {
        std::vector<int> tr, va;
        for (size_t i = 0; i < y.size(); ++i) (folds[i] == f ? va : tr).push_back(static_cast<int>(i));
        Eigen::MatrixXd xt(static_cast<Eigen::Index>(tr.size()), 5);
        std::vector<int> yt(tr.size());
        for (size_t i = 0; i < tr.size(); ++i) {
            xt.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
            yt[i] = y[static_cast<size_t>(tr[i])];
        }
        const auto m = ml::knn_fit(xt, yt, 9);
        for (int i : va) pred[static_cast<size_t>(i)] = ml::knn_predict(m, x.row(i));
    }
    int hit = 0;
    for (size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
    const double acc = 100.0 * hit / static_cast<double>(y.size());
    std::ostringstream o;
    o << "labeled quality CV accuracy " << pct(acc) << " over " << y.size() << " beats";
    if (std::abs(acc - 93.91) > 2.0) return Outcome::fail(o.str() + "; outside +-2 pp of 93.91");
    return Outcome::pass(o.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::string data_dir, labels_path;
    if (const char* env = std::getenv("SSTECG_DATA")) data_dir = env;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--data" && i + 1 < argc) data_dir = argv[++i];
        if (arg == "--labels" && i + 1 < argc) labels_path = argv[++i];
    }

    DataResults data;
    if (!data_dir.empty()) {
        data = run_data_pass(data_dir, std::cout);
        if (!data.ran) std::cout << "data pass failed: " << data.error << "\n";
    } else {
        data.error = "no data directory supplied";
    }

    struct Entry {
        int id;
        std::string name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries = {
        {1, "full-database lead II detection", [&] { return criterion1(data); }},
        {2, "precordial detection ordering", [&] { return criterion2(data); }},
        {3, "binary classifier on DS2", [&] { return criterion3(data); }},
        {4, "four-class classifier on DS2", [&] { return criterion4(data); }},
        {5, "metrics arithmetic vs published tables", [] { return criterion5(); }},
        {6, "SST property suite", [] { return criterion6(); }},
        {7, "phase-cycle beat correspondence + TH1 recovery", [] { return criterion7(); }},
        {8, "SMO dual vs dense QP brute force", [] { return criterion8(); }},
        {9, "quality KNN", [&] { return criterion9(data, labels_path); }},
        {10, "dataset split integrity", [&] { return criterion10(data); }},
    };

    int failures = 0, skipped = 0;
    for (const auto& e : entries) {
        Outcome out = Outcome::fail("unhandled exception");
        try {
            out = e.run();
        } catch (const std::exception& ex) {
            out = Outcome::fail(std::string("exception: ") + ex.what());
        }
        const char* tag = out.status == Outcome::Status::pass   ? "PASS"
                          : out.status == Outcome::Status::fail ? "FAIL"
                                                                : "SKIP";
        if (out.status == Outcome::Status::fail) ++failures;
        if (out.status == Outcome::Status::skip) ++skipped;
        std::printf("[C%-2d] %-4s %s: %s\n", e.id, tag, e.name.c_str(), out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu criteria, %d failed, %d skipped\n", entries.size(), failures,
                skipped);
    return failures == 0 ? 0 : 1;
}
