#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sstecg/common.hpp"
#include "sstecg/dsp.hpp"
#include "sstecg/rpeak.hpp"
#include "sstecg/sst.hpp"
#include "sstecg/wfdb.hpp"

namespace sstecg::features {

struct BeatFeatures {
    std::string record_id;
    std::int64_t beat_index = 0;   // position within the retained beat sequence
    std::int64_t sample_index = 0; // R-peak sample
    double zeta = 0;               // phase at the R-peak, cycles in (-0.5, 0.5]
    double r_amp = 0;              // trend-corrected ECG at the peak, mV
    double rr_prev = 0;            // s
    double rr_next = 0;            // s
    double rr_mean10 = 0;          // mean of the 10 trailing rr_prev values, s
    double qrs_dur = 0;            // s
    std::optional<wfdb::AamiClass> label;
};

// Relative phase of each peak: fractional part of the unwrapped phase in
// cycles, mapped to (-0.5, 0.5]. Peaks outside the phase support yield NaN.
inline std::vector<double> phase_at_peaks(const sst::PhaseEstimate& phase,
                                          std::span<const std::int64_t> peaks) {
    std::vector<double> out;
    out.reserve(peaks.size());
    const auto n = static_cast<std::int64_t>(phase.phase.size());
    for (auto p : peaks) {
        if (p < 0 || p >= n) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        out.push_back(wrap_to_half_cycle(phase.phase[static_cast<size_t>(p)]));
    }
    return out;
}

namespace detail {

// QRS duration from the detector run containing (or nearest within w1 of)
// the peak, clamped to [40, 200] ms. NaN when no run is close enough.
inline double qrs_duration(const rpeak::DetectorDebug& dbg, std::int64_t peak, double fs,
                           double w1_ms) {
    const auto reach = static_cast<std::int64_t>(std::llround(w1_ms * fs / 1000.0));
    std::int64_t best_len = -1, best_dist = reach + 1;
    for (const auto& [lo, hi] : dbg.runs) {
        std::int64_t dist = 0;
        if (peak < lo)
            dist = lo - peak;
        else if (peak > hi)
            dist = peak - hi;
        if (dist < best_dist) {
            best_dist = dist;
            best_len = hi - lo + 1;
        }
        if (lo > peak + reach) break;
    }
    if (best_len < 0 || best_dist > reach) return std::numeric_limits<double>::quiet_NaN();
    const double dur = static_cast<double>(best_len) / fs;
    return std::clamp(dur, 0.040, 0.200);
}

}  // namespace detail

// Per-beat six-feature rows. Beats lacking any feature are excluded: the
// first beat (no rr_prev), the last (no rr_next), the first ten (rr_mean10
// needs ten trailing intervals) and beats with no usable QRS run or phase.
// Records with fewer than 12 peaks yield nothing.
inline std::vector<BeatFeatures> beat_features(
    const std::string& record_id, std::span<const double> ecg, double fs,
    std::span<const std::int64_t> peaks, const sst::PhaseEstimate& phase,
    const dsp::PreprocSignal& pre, const rpeak::DetectorDebug& runs,
    std::span<const std::optional<wfdb::AamiClass>> labels = {}, double w1_ms = 97) {
    std::vector<BeatFeatures> out;
    if (!labels.empty() && labels.size() != peaks.size()) {
        throw InvalidArgument("beat_features: labels must align with peaks");
    }
    const auto m = static_cast<std::int64_t>(peaks.size());
    if (m < 12) return out;
    const auto zetas = phase_at_peaks(phase, peaks);

    std::vector<double> rr(static_cast<size_t>(m), 0.0);  // rr_prev per peak
    for (std::int64_t i = 1; i < m; ++i) {
        rr[static_cast<size_t>(i)] =
            static_cast<double>(peaks[static_cast<size_t>(i)] - peaks[static_cast<size_t>(i - 1)]) / fs;
    }

    std::int64_t kept = 0;
    for (std::int64_t i = 10; i + 1 < m; ++i) {
        const auto p = peaks[static_cast<size_t>(i)];
        BeatFeatures b;
        b.record_id = record_id;
        b.sample_index = p;
        b.zeta = zetas[static_cast<size_t>(i)];
        if (std::isnan(b.zeta)) continue;
        b.r_amp = ecg[static_cast<size_t>(p)] - pre.trend[static_cast<size_t>(p)];
        b.rr_prev = rr[static_cast<size_t>(i)];
        b.rr_next = rr[static_cast<size_t>(i + 1)];
        double acc = 0.0;
        for (std::int64_t k = i - 9; k <= i; ++k) acc += rr[static_cast<size_t>(k)];
        b.rr_mean10 = acc / 10.0;
        b.qrs_dur = detail::qrs_duration(runs, p, fs, w1_ms);
        if (std::isnan(b.qrs_dur)) continue;
        if (!labels.empty()) b.label = labels[static_cast<size_t>(i)];
        b.beat_index = kept++;
        out.push_back(std::move(b));
    }
    return out;
}

// Per-beat band-energy integrals of the reconstructed harmonic components:
// z_l = integral over the beat interval of the amplitude of the component
// rebuilt around l x the fundamental ridge. Harmonic bands beyond the plane
// are truncated.
struct ZIndex {
    std::vector<double> z;
    int truncated_to = 0;  // harmonics actually computed
};

inline ZIndex z_index(const sst::TfPlane& s, const std::vector<double>& ridge,
                      std::pair<std::int64_t, std::int64_t> beat_interval, int harmonics,
                      const sst::MotherWavelet& wavelet, int halfwidth_bins = 3) {
    if (harmonics < 1) throw InvalidArgument("z_index: need at least one harmonic");
    const auto [lo, hi] = beat_interval;
    const auto nt = static_cast<std::int64_t>(s.n_times());
    if (lo < 0 || hi <= lo || hi > nt) throw InvalidArgument("z_index: bad beat interval");

    const double f_max = s.axis.back();
    double ridge_max = 0.0;
    for (std::int64_t t = lo; t < hi; ++t) ridge_max = std::max(ridge_max, ridge[static_cast<size_t>(t)]);

    ZIndex out;
    for (int l = 1; l <= harmonics; ++l) {
        if (l * ridge_max > f_max + 1e-12 || l * ridge_max > s.fs / 2.0) break;
        std::vector<double> harmonic_ridge(ridge.size());
        for (size_t t = 0; t < ridge.size(); ++t) harmonic_ridge[t] = l * ridge[t];
        const auto est = sst::reconstruct(s, harmonic_ridge, halfwidth_bins, wavelet);
        double acc = 0.0;
        for (std::int64_t t = lo; t < hi; ++t) acc += est.amplitude[static_cast<size_t>(t)];
        out.z.push_back(acc / s.fs);
        out.truncated_to = l;
    }
    if (out.z.empty()) throw InvalidArgument("z_index: fundamental band beyond plane range");
    return out;
}

inline void write_features_csv(const std::string& path, std::span<const BeatFeatures> rows) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open " + path);
    f << "record_id,beat_index,zeta,r_amp,rr_prev,rr_next,rr_mean10,qrs_dur,label\n";
    for (const auto& b : rows) {
        f << b.record_id << ',' << b.beat_index << ',' << b.zeta << ',' << b.r_amp << ','
          << b.rr_prev << ',' << b.rr_next << ',' << b.rr_mean10 << ',' << b.qrs_dur << ','
          << (b.label ? wfdb::aami_name(*b.label) : "") << "\n";
    }
}

}  // namespace sstecg::features
