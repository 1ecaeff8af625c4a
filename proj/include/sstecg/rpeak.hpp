#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "sstecg/common.hpp"
#include "sstecg/dsp.hpp"
#include "sstecg/sst.hpp"

namespace sstecg::rpeak {

struct DetectorConfig {
    double w1_ms = 97;           // QRS moving-average window
    double w2_ms = 611;          // beat moving-average window
    double beta = 0.08;          // threshold offset as a fraction of mean squared signal
    double refractory_ms = 250;
    double recovery_scale = 0.7; // TH1 factor
    double min_gap_ms = 200;     // minimum cycle length eligible for recovery
    double band_lo_hz = 8;
    double band_hi_hz = 20;
    int band_order = 3;

    void validate() const {
        if (!(w1_ms < w2_ms)) throw InvalidArgument("DetectorConfig: need w1 < w2");
        if (!(refractory_ms > 0)) throw InvalidArgument("DetectorConfig: refractory must be positive");
    }
};

enum class PeakSource : std::uint8_t { base, recovered };

struct PeakList {
    std::vector<std::int64_t> indices;  // strictly increasing
    std::vector<PeakSource> source;

    size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
};

struct DetectionScore {
    std::int64_t tp = 0, fn = 0, fp = 0;
    double se() const { return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
    double ppv() const { return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
};

// Threshold-exceeding runs of the QRS moving average; kept around so QRS
// duration can reuse the detector state.
struct DetectorDebug {
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;  // [first, last] inclusive
    Signal ma_qrs;
    Signal threshold;
};

namespace detail {

inline int odd_window(double ms, double fs) {
    int w = std::max(1, static_cast<int>(std::llround(ms * fs / 1000.0)));
    if (w % 2 == 0) ++w;
    return w;
}

// Sharpness of the deflection around a peak: max |first difference| within
// +-25 ms.
inline double slope_at(std::span<const double> ecg, std::int64_t peak, double fs) {
    const auto r = static_cast<std::int64_t>(std::llround(0.025 * fs));
    const auto n = static_cast<std::int64_t>(ecg.size());
    const std::int64_t lo = std::max<std::int64_t>(0, peak - r);
    const std::int64_t hi = std::min(n - 1, peak + r);
    double best = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
        best = std::max(best, std::abs(ecg[static_cast<size_t>(i + 1)] - ecg[static_cast<size_t>(i)]));
    }
    return best;
}

}  // namespace detail

// Keep the sharper of any two peaks closer than the refractory period;
// iterate until no violations remain.
inline PeakList refractory_filter(const PeakList& peaks, std::span<const double> ecg, double fs,
                                  double refractory_ms = 250) {
    const auto gap = static_cast<std::int64_t>(std::llround(refractory_ms * fs / 1000.0));
    std::vector<std::int64_t> idx = peaks.indices;
    std::vector<PeakSource> src = peaks.source;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i + 1 < idx.size(); ++i) {
            if (idx[i + 1] - idx[i] >= gap) continue;
            const double s_a = detail::slope_at(ecg, idx[i], fs);
            const double s_b = detail::slope_at(ecg, idx[i + 1], fs);
            const size_t drop = s_b > s_a ? i : i + 1;
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(drop));
            src.erase(src.begin() + static_cast<std::ptrdiff_t>(drop));
            changed = true;
            break;
        }
    }
    return PeakList{std::move(idx), std::move(src)};
}

// Two-moving-average detector: bandpass, square, compare the QRS moving
// average against the beat moving average plus beta * mean(squared), keep
// runs longer than w1, take the largest |ecg| sample inside each run, then
// apply the refractory rule.
inline PeakList detect_elgendi(std::span<const double> ecg, double fs,
                               const DetectorConfig& cfg = {}, DetectorDebug* debug = nullptr) {
    cfg.validate();
    PeakList out;
    if (ecg.size() < static_cast<size_t>(fs)) return out;

    const auto bp = dsp::design_butter_bandpass(cfg.band_order, cfg.band_lo_hz, cfg.band_hi_hz, fs);
    Signal y = dsp::filtfilt(bp, ecg);
    for (auto& v : y) v *= v;

    const int w1 = detail::odd_window(cfg.w1_ms, fs);
    const int w2 = detail::odd_window(cfg.w2_ms, fs);
    const Signal ma_qrs = dsp::moving_average(y, w1);
    const Signal ma_beat = dsp::moving_average(y, w2);
    const double alpha = cfg.beta * mean(y);

    const auto n = static_cast<std::int64_t>(ecg.size());
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    std::int64_t run_start = -1;
    for (std::int64_t i = 0; i < n; ++i) {
        const bool active = ma_qrs[static_cast<size_t>(i)] >
                            ma_beat[static_cast<size_t>(i)] + alpha;
        if (active && run_start < 0) run_start = i;
        if (!active && run_start >= 0) {
            runs.emplace_back(run_start, i - 1);
            run_start = -1;
        }
    }
    if (run_start >= 0) runs.emplace_back(run_start, n - 1);

    if (debug) {
        debug->runs = runs;
        debug->ma_qrs = ma_qrs;
        debug->threshold.resize(static_cast<size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            debug->threshold[static_cast<size_t>(i)] = ma_beat[static_cast<size_t>(i)] + alpha;
        }
    }

    for (const auto& [lo, hi] : runs) {
        if (hi - lo + 1 <= w1) continue;
        std::int64_t best = lo;
        double best_v = -1.0;
        for (std::int64_t i = lo; i <= hi; ++i) {
            const double v = std::abs(ecg[static_cast<size_t>(i)]);
            if (v > best_v) {
                best_v = v;
                best = i;
            }
        }
        out.indices.push_back(best);
        out.source.push_back(PeakSource::base);
    }
    return refractory_filter(out, ecg, fs, cfg.refractory_ms);
}

// Phase-guided missed-beat recovery. Cycle intervals with no detected peak
// admit the interval maximum as a candidate when (a) the interval is longer
// than min_gap, (b) the candidate exceeds TH1 = recovery_scale * (median of
// the last 4 peak amplitudes - median ecg over the span of those peaks), and
// (c) its relative phase lies within a quarter cycle of the running median
// phase of the last 8 confirmed beats. Base peaks are never removed.
inline PeakList recover_missed(const PeakList& peaks, const sst::PhaseEstimate& phase,
                               std::span<const double> ecg, double fs,
                               const DetectorConfig& cfg = {}) {
    cfg.validate();
    if (phase.phase.size() != ecg.size()) {
        throw InvalidArgument("recover_missed: phase does not cover the record");
    }
    const auto n = static_cast<std::int64_t>(ecg.size());
    const auto refr = static_cast<std::int64_t>(std::llround(cfg.refractory_ms * fs / 1000.0));
    const auto min_gap = static_cast<std::int64_t>(std::llround(cfg.min_gap_ms * fs / 1000.0));

    // integer-cycle crossings of the stitched phase
    std::vector<std::int64_t> bounds;
    for (std::int64_t i = 1; i < n; ++i) {
        if (std::floor(phase.phase[static_cast<size_t>(i)]) >
            std::floor(phase.phase[static_cast<size_t>(i - 1)])) {
            bounds.push_back(i);
        }
    }

    std::vector<std::int64_t> idx = peaks.indices;
    std::vector<PeakSource> src = peaks.source;

    auto zeta_at = [&](std::int64_t p) {
        return wrap_to_half_cycle(phase.phase[static_cast<size_t>(p)]);
    };

    for (size_t b = 0; b + 1 < bounds.size(); ++b) {
        const std::int64_t lo = bounds[b], hi = bounds[b + 1];
        if (hi - lo <= min_gap) continue;
        auto it = std::lower_bound(idx.begin(), idx.end(), lo);
        if (it != idx.end() && *it < hi) continue;  // cycle already holds a peak

        // last 4 detected peaks strictly before the interval
        const auto before = static_cast<size_t>(std::distance(idx.begin(), it));
        if (before < 4) continue;
        std::vector<double> amps;
        for (size_t k = before - 4; k < before; ++k) amps.push_back(ecg[static_cast<size_t>(idx[k])]);
        const std::int64_t span_lo = idx[before - 4], span_hi = idx[before - 1];
        const double med_ecg =
            median(std::span<const double>(ecg.data() + span_lo,
                                           static_cast<size_t>(span_hi - span_lo + 1)));
        const double th1 = cfg.recovery_scale * (median(amps) - med_ecg);

        std::int64_t cand = lo;
        double cand_v = -std::numeric_limits<double>::infinity();
        for (std::int64_t i = lo; i < hi; ++i) {
            if (ecg[static_cast<size_t>(i)] > cand_v) {
                cand_v = ecg[static_cast<size_t>(i)];
                cand = i;
            }
        }
        if (!(cand_v > th1)) continue;

        // expected relative phase: running median over up to 8 prior beats
        std::vector<double> zetas;
        for (size_t k = before >= 8 ? before - 8 : 0; k < before; ++k) zetas.push_back(zeta_at(idx[k]));
        const double expected = median(zetas);
        if (circular_distance_cycles(zeta_at(cand), expected) >= 0.25) continue;

        // honor the refractory period against every current peak
        const auto ins = std::lower_bound(idx.begin(), idx.end(), cand);
        const bool near_next = ins != idx.end() && *ins - cand < refr;
        const bool near_prev = ins != idx.begin() && cand - *(ins - 1) < refr;
        if (near_next || near_prev) continue;

        const auto pos = static_cast<size_t>(std::distance(idx.begin(), ins));
        idx.insert(ins, cand);
        src.insert(src.begin() + static_cast<std::ptrdiff_t>(pos), PeakSource::recovered);
    }
    return PeakList{std::move(idx), std::move(src)};
}

// Greedy one-to-one nearest matching within the tolerance window.
inline DetectionScore score_detection(std::span<const std::int64_t> detected,
                                      std::span<const std::int64_t> reference, double fs,
                                      double tol_ms = 150) {
    const auto tol = static_cast<std::int64_t>(std::llround(tol_ms * fs / 1000.0));
    std::vector<bool> used(reference.size(), false);
    std::int64_t tp = 0;
    for (auto d : detected) {
        const auto it = std::lower_bound(reference.begin(), reference.end(), d);
        std::int64_t best = -1, best_dist = tol + 1;
        const auto try_match = [&](std::ptrdiff_t j) {
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(reference.size())) return;
            if (used[static_cast<size_t>(j)]) return;
            const std::int64_t dist = std::abs(reference[static_cast<size_t>(j)] - d);
            if (dist <= tol && dist < best_dist) {
                best = j;
                best_dist = dist;
            }
        };
        const auto j0 = std::distance(reference.begin(), it);
        try_match(j0 - 1);
        try_match(j0);
        if (best >= 0) {
            used[static_cast<size_t>(best)] = true;
            ++tp;
        }
    }
    DetectionScore s;
    s.tp = tp;
    s.fn = static_cast<std::int64_t>(reference.size()) - tp;
    s.fp = static_cast<std::int64_t>(detected.size()) - tp;
    return s;
}

}  // namespace sstecg::rpeak
