#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sstecg/common.hpp"
#include "sstecg/dsp.hpp"
#include "sstecg/fft.hpp"

namespace sstecg::sst {

// Compactly supported bump wavelet defined in the frequency domain:
// psi_hat(xi) = exp(1 / (((xi - center)/sigma)^2 - 1)) on (center-sigma,
// center+sigma), zero elsewhere. center and sigma are in Hz at unit scale.
struct MotherWavelet {
    double center = 1.0;
    double sigma = 0.8;

    MotherWavelet() = default;
    MotherWavelet(double c, double s) : center(c), sigma(s) {
        if (!(sigma > 0.0 && sigma < center)) {
            throw InvalidArgument("MotherWavelet: need 0 < sigma < center");
        }
    }

    double hat(double xi) const {
        const double u = (xi - center) / sigma;
        const double d = u * u - 1.0;
        if (d >= -1e-14) return 0.0;
        return std::exp(1.0 / d);
    }

    // R_psi = integral of psi_hat(z)/z dz over the support (Simpson rule).
    double r_psi() const {
        const int n = 4096;  // even
        const double lo = center - sigma, hi = center + sigma;
        const double h = (hi - lo) / n;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double z = lo + h * i;
            const double f = z > 0.0 ? hat(z) / z : 0.0;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            acc += w * f;
        }
        return acc * h / 3.0;
    }
};

enum class PlaneKind { cwt, squeezed };

// Complex time-scale or time-frequency matrix. Rows follow `axis` (scales for
// kind=cwt, Hz bins for kind=squeezed), columns follow `time_axis`.
struct TfPlane {
    Eigen::MatrixXcd values;
    std::vector<double> time_axis;
    std::vector<double> axis;
    PlaneKind kind = PlaneKind::cwt;
    double fs = 0;

    Eigen::Index n_rows() const { return values.rows(); }
    Eigen::Index n_times() const { return values.cols(); }
};

struct CwtResult {
    TfPlane plane;                     // kind = cwt, axis = scales
    Eigen::MatrixXcd time_derivative;  // d/db of each row, via the derivative wavelet
    MotherWavelet wavelet;
    int excluded_scales = 0;  // scales whose dilated support crossed Nyquist
    std::vector<std::string> warnings;
};

// Log-spaced scales such that the dilated wavelet peak center/a sweeps
// [f_peak_lo, f_peak_hi], with the given number of voices per octave.
inline std::vector<double> log_scales(const MotherWavelet& w, double f_peak_lo, double f_peak_hi,
                                      int voices_per_octave) {
    if (!(0.0 < f_peak_lo && f_peak_lo < f_peak_hi)) {
        throw InvalidArgument("log_scales: need 0 < f_peak_lo < f_peak_hi");
    }
    if (voices_per_octave < 1) throw InvalidArgument("log_scales: voices must be >= 1");
    const double a_min = w.center / f_peak_hi;
    const double a_max = w.center / f_peak_lo;
    const double octaves = std::log2(a_max / a_min);
    const int n = static_cast<int>(std::ceil(octaves * voices_per_octave)) + 1;
    std::vector<double> scales(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        scales[static_cast<size_t>(i)] =
            a_min * std::pow(2.0, octaves * static_cast<double>(i) / (n - 1));
    }
    return scales;
}

// Spectral CWT of a real signal on the analytic side: the one-sided signal
// spectrum (doubled) is multiplied per scale by sqrt(a) psi_hat(a f) and
// inverse-transformed. The time derivative uses the same product with an
// extra i 2 pi f. Scales whose dilated support crosses Nyquist are dropped.
inline CwtResult cwt(std::span<const double> x, double fs, const std::vector<double>& scales,
                     const MotherWavelet& wavelet) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw InvalidArgument("cwt: signal too short");
    if (scales.empty()) throw InvalidArgument("cwt: no scales");

    std::vector<double> kept;
    CwtResult res;
    res.wavelet = wavelet;
    for (double a : scales) {
        if (!(a > 0.0)) throw InvalidArgument("cwt: scales must be positive");
        if ((wavelet.center + wavelet.sigma) / a > fs / 2.0) {
            ++res.excluded_scales;
            continue;
        }
        kept.push_back(a);
    }
    if (kept.empty()) throw InvalidArgument("cwt: all scales exceed Nyquist");
    if (res.excluded_scales > 0) {
        res.warnings.push_back("cwt: excluded " + std::to_string(res.excluded_scales) +
                               " scales with support beyond Nyquist");
    }

    Fft fft(n);
    std::vector<std::complex<double>> spec(static_cast<size_t>(n));
    {
        std::vector<std::complex<double>> in(x.begin(), x.end());
        fft.forward(in.data(), spec.data());
    }

    const auto n_scales = static_cast<Eigen::Index>(kept.size());
    res.plane.values.resize(n_scales, n);
    res.time_derivative.resize(n_scales, n);
    res.plane.kind = PlaneKind::cwt;
    res.plane.fs = fs;
    res.plane.axis = kept;
    res.plane.time_axis.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) res.plane.time_axis[static_cast<size_t>(i)] = i / fs;

    std::vector<std::complex<double>> prod(static_cast<size_t>(n)),
        row(static_cast<size_t>(n));
    for (Eigen::Index s = 0; s < n_scales; ++s) {
        const double a = kept[static_cast<size_t>(s)];
        const double root_a = std::sqrt(a);
        for (int k = 0; k < n; ++k) {
            const double f = dft_bin_hz(k, n, fs);
            const double m = f > 0.0 ? 2.0 * root_a * wavelet.hat(a * f) : 0.0;
            prod[static_cast<size_t>(k)] = spec[static_cast<size_t>(k)] * m;
        }
        fft.inverse(prod.data(), row.data());
        for (int t = 0; t < n; ++t) res.plane.values(s, t) = row[static_cast<size_t>(t)];

        for (int k = 0; k < n; ++k) {
            const double f = dft_bin_hz(k, n, fs);
            prod[static_cast<size_t>(k)] *=
                std::complex<double>(0.0, 2.0 * std::numbers::pi * f);
        }
        fft.inverse(prod.data(), row.data());
        for (int t = 0; t < n; ++t) res.time_derivative(s, t) = row[static_cast<size_t>(t)];
    }
    return res;
}

// Per-coefficient instantaneous-frequency estimate omega = Im(dW/W)/(2 pi),
// masked where |W| falls below the threshold. The effective threshold is
// max(gamma_abs, 1e-8 * median |W|).
struct ReassignmentField {
    Eigen::ArrayXXd omega;  // Hz
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
    double gamma = 0;
};

inline ReassignmentField reassign(const CwtResult& w, double gamma_abs = 0.0) {
    if (w.plane.kind != PlaneKind::cwt) throw InvalidArgument("reassign: expected a cwt plane");
    const auto& W = w.plane.values;
    const Eigen::ArrayXXd mag = W.cwiseAbs().array();

    std::vector<double> flat(mag.data(), mag.data() + mag.size());
    const double gamma = std::max(gamma_abs, 1e-8 * median(flat));

    ReassignmentField field;
    field.gamma = gamma;
    field.valid = (mag >= gamma) && (mag > 0.0);
    field.omega.resize(W.rows(), W.cols());
    const double inv_two_pi = 1.0 / (2.0 * std::numbers::pi);
    for (Eigen::Index t = 0; t < W.cols(); ++t) {
        for (Eigen::Index s = 0; s < W.rows(); ++s) {
            if (!field.valid(s, t)) {
                field.omega(s, t) = std::numeric_limits<double>::infinity();
                continue;
            }
            // Im(dW / W) without the full complex division
            const std::complex<double> wv = W(s, t);
            const std::complex<double> dv = w.time_derivative(s, t);
            const double m = mag(s, t);
            field.omega(s, t) =
                (dv.imag() * wv.real() - dv.real() * wv.imag()) / (m * m) * inv_two_pi;
        }
    }
    return field;
}

inline std::vector<double> linear_bins(double f_lo, double f_hi, int n_bins) {
    if (!(f_lo < f_hi) || n_bins < 2) throw InvalidArgument("linear_bins: bad range");
    std::vector<double> bins(static_cast<size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) {
        bins[static_cast<size_t>(i)] = f_lo + (f_hi - f_lo) * i / (n_bins - 1);
    }
    return bins;
}

struct SqueezeDiagnostics {
    std::int64_t dropped = 0;  // coefficients whose omega fell outside the bins
};

// Reallocate W(a,b) a^{-3/2} da onto the frequency bin nearest omega(a,b)
// (nearest-bin indicator kernel), normalized per bin width so that summing
// the squeezed plane over bins times the bin width recovers the scale
// integral.
inline TfPlane squeeze(const CwtResult& w, const ReassignmentField& field,
                       const std::vector<double>& freq_bins, SqueezeDiagnostics* diag = nullptr) {
    const auto& W = w.plane.values;
    if (field.omega.rows() != W.rows() || field.omega.cols() != W.cols()) {
        throw InvalidArgument("squeeze: reassignment field not aligned with plane");
    }
    if (freq_bins.size() < 2) throw InvalidArgument("squeeze: need at least 2 bins");
    const double b0 = freq_bins.front();
    const double dxi = freq_bins[1] - freq_bins[0];
    const auto nb = static_cast<Eigen::Index>(freq_bins.size());

    const auto& scales = w.plane.axis;
    std::vector<double> da(scales.size());
    for (size_t i = 0; i < scales.size(); ++i) {
        if (i == 0)
            da[i] = scales.size() > 1 ? scales[1] - scales[0] : scales[0];
        else if (i + 1 == scales.size())
            da[i] = scales[i] - scales[i - 1];
        else
            da[i] = 0.5 * (scales[i + 1] - scales[i - 1]);
    }

    // per-scale measure weight a^{-3/2} da / dxi, hoisted out of the cell loop
    std::vector<double> weight(scales.size());
    for (size_t i = 0; i < scales.size(); ++i) {
        weight[i] = da[i] / (scales[i] * std::sqrt(scales[i]) * dxi);
    }

    TfPlane out;
    out.kind = PlaneKind::squeezed;
    out.fs = w.plane.fs;
    out.axis = freq_bins;
    out.time_axis = w.plane.time_axis;
    out.values = Eigen::MatrixXcd::Zero(nb, W.cols());

    std::int64_t dropped = 0;
    const double inv_dxi = 1.0 / dxi;
    for (Eigen::Index t = 0; t < W.cols(); ++t) {
        for (Eigen::Index s = 0; s < W.rows(); ++s) {
            if (!field.valid(s, t)) continue;
            const auto j =
                static_cast<Eigen::Index>(std::llround((field.omega(s, t) - b0) * inv_dxi));
            if (j < 0 || j >= nb) {
                ++dropped;
                continue;
            }
            out.values(j, t) += W(s, t) * weight[static_cast<size_t>(s)];
        }
    }
    if (diag) diag->dropped = dropped;
    return out;
}

// Maximum-energy ridge through |S| inside the band, regularized by a
// quadratic per-step jump penalty. The penalty weight is set so a jump of
// 3 bins costs 10% of the median column maximum.
inline std::vector<double> extract_ridge(const TfPlane& s, double band_center,
                                         double band_halfwidth, int max_jump_bins = 10) {
    if (s.kind != PlaneKind::squeezed) throw InvalidArgument("extract_ridge: expected squeezed plane");
    const auto& bins = s.axis;
    Eigen::Index lo = -1, hi = -1;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(bins.size()); ++j) {
        if (std::abs(bins[static_cast<size_t>(j)] - band_center) <= band_halfwidth) {
            if (lo < 0) lo = j;
            hi = j;
        }
    }
    if (lo < 0) throw InvalidArgument("extract_ridge: empty band");
    const Eigen::Index nb = hi - lo + 1;
    const Eigen::Index nt = s.n_times();

    Eigen::ArrayXXd energy(nb, nt);
    for (Eigen::Index t = 0; t < nt; ++t) {
        for (Eigen::Index j = 0; j < nb; ++j) energy(j, t) = std::abs(s.values(lo + j, t));
    }

    std::vector<double> col_max(static_cast<size_t>(nt));
    for (Eigen::Index t = 0; t < nt; ++t) col_max[static_cast<size_t>(t)] = energy.col(t).maxCoeff();
    const double med = median(col_max);
    const double lambda = med > 0.0 ? 0.1 * med / 9.0 : 0.0;

    // DP forward pass, jumps capped at max_jump_bins per step
    Eigen::ArrayXXd score(nb, nt);
    Eigen::ArrayXXi back(nb, nt);
    score.col(0) = energy.col(0);
    back.col(0).setConstant(-1);
    for (Eigen::Index t = 1; t < nt; ++t) {
        for (Eigen::Index j = 0; j < nb; ++j) {
            double best = -std::numeric_limits<double>::infinity();
            Eigen::Index best_k = j;
            const Eigen::Index k_lo = std::max<Eigen::Index>(0, j - max_jump_bins);
            const Eigen::Index k_hi = std::min<Eigen::Index>(nb - 1, j + max_jump_bins);
            for (Eigen::Index k = k_lo; k <= k_hi; ++k) {
                const double jump = static_cast<double>(j - k);
                const double cand = score(k, t - 1) - lambda * jump * jump;
                if (cand > best) {
                    best = cand;
                    best_k = k;
                }
            }
            score(j, t) = best + energy(j, t);
            back(j, t) = static_cast<int>(best_k);
        }
    }

    std::vector<double> ridge(static_cast<size_t>(nt));
    Eigen::Index j = 0;
    score.col(nt - 1).maxCoeff(&j);
    for (Eigen::Index t = nt - 1; t >= 0; --t) {
        ridge[static_cast<size_t>(t)] = bins[static_cast<size_t>(lo + j)];
        if (t > 0) j = back(j, t);
    }
    return ridge;
}

// Reconstructed component: amplitude, unwrapped phase (in cycles) and the
// per-sample ridge frequency. Samples where the amplitude vanished carry the
// previous phase and are flagged.
struct PhaseEstimate {
    Signal amplitude;
    Signal phase;       // cycles, unwrapped
    Signal ridge_freq;  // Hz
    std::vector<int> block_id;
    std::vector<std::uint8_t> degenerate;  // 1 where phase was carried forward
    double fs = 0;
};

inline PhaseEstimate reconstruct(const TfPlane& s, const std::vector<double>& ridge,
                                 int halfwidth_bins, const MotherWavelet& wavelet) {
    if (s.kind != PlaneKind::squeezed) throw InvalidArgument("reconstruct: expected squeezed plane");
    const auto nt = s.n_times();
    if (static_cast<Eigen::Index>(ridge.size()) != nt) {
        throw InvalidArgument("reconstruct: ridge length mismatch");
    }
    const auto nb = static_cast<Eigen::Index>(s.axis.size());
    const double b0 = s.axis.front();
    const double dxi = s.axis[1] - s.axis[0];
    const double r_psi = wavelet.r_psi();

    PhaseEstimate est;
    est.fs = s.fs;
    est.amplitude.resize(static_cast<size_t>(nt));
    est.phase.resize(static_cast<size_t>(nt));
    est.ridge_freq = ridge;
    est.block_id.assign(static_cast<size_t>(nt), 0);
    est.degenerate.assign(static_cast<size_t>(nt), 0);

    double prev_phase = 0.0;
    bool have_prev = false;
    for (Eigen::Index t = 0; t < nt; ++t) {
        const auto j0 = static_cast<Eigen::Index>(
            std::llround((ridge[static_cast<size_t>(t)] - b0) / dxi));
        const Eigen::Index j_lo = std::max<Eigen::Index>(0, j0 - halfwidth_bins);
        const Eigen::Index j_hi = std::min<Eigen::Index>(nb - 1, j0 + halfwidth_bins);
        std::complex<double> acc = 0.0;
        for (Eigen::Index j = j_lo; j <= j_hi; ++j) acc += s.values(j, t);
        const std::complex<double> r = acc * dxi / r_psi;
        const double amp = std::abs(r);
        est.amplitude[static_cast<size_t>(t)] = amp;
        if (amp < 1e-300) {
            est.phase[static_cast<size_t>(t)] = prev_phase;
            est.degenerate[static_cast<size_t>(t)] = 1;
            continue;
        }
        const double raw = std::arg(r) / (2.0 * std::numbers::pi);
        double ph = raw;
        if (have_prev) {
            const double delta = raw - prev_phase;
            ph = prev_phase + (delta - std::round(delta));
        }
        est.phase[static_cast<size_t>(t)] = ph;
        prev_phase = ph;
        have_prev = true;
    }
    return est;
}

struct BlockConfig {
    int block = 4096;          // samples per block (power of two)
    double overlap = 0.5;      // fraction of block shared with the next one
    int voices = 32;           // voices per octave
    int bins = 512;            // linear squeeze bins over the covered band
    double gamma_abs = 0.0;    // absolute CWT threshold added to the median floor
    double band_rel = 0.3;     // ridge band halfwidth as a fraction of IFF
    double sigma_rel = 0.8;    // wavelet FWHM parameter as a fraction of IFF
    int recon_halfwidth = 3;   // bins on each side of the ridge
    double fallback_iff = 1.2; // Hz, first block with < 2 rough peaks
    double span_low = 0.25;    // scale coverage: peak band [span_low, span_high] x IFF
    double span_high = 4.0;
    int max_jump_bins = 10;

    void validate() const {
        if (block < 16 || (block & (block - 1)) != 0) {
            throw InvalidArgument("BlockConfig: block size must be a power of two");
        }
        if (!(overlap >= 0.0 && overlap <= 0.9)) {
            throw InvalidArgument("BlockConfig: overlap must be in [0, 0.9]");
        }
    }
};

namespace detail {

struct BlockPhase {
    std::int64_t start = 0;
    std::int64_t len = 0;
    PhaseEstimate est;
};

inline double block_iff(std::span<const std::int64_t> rough_peaks, std::int64_t lo,
                        std::int64_t hi, double fs, double fallback) {
    std::vector<double> freqs;
    std::int64_t prev = -1;
    for (auto p : rough_peaks) {
        if (p < lo || p >= hi) continue;
        if (prev >= 0 && p > prev) freqs.push_back(fs / static_cast<double>(p - prev));
        prev = p;
    }
    if (freqs.empty()) return fallback;
    return median(freqs);
}

}  // namespace detail

// Blockwise SST of the preprocessed signal with 50% overlap and seam
// stitching: each overlap takes the phase of the block whose center is
// nearer, with an integer-cycle offset chosen at the seam; amplitudes are
// cross-faded linearly.
inline PhaseEstimate sst_blocks(const dsp::PreprocSignal& pre, double fs,
                                std::span<const std::int64_t> rough_peaks,
                                const BlockConfig& cfg = {}) {
    cfg.validate();
    const auto n = static_cast<std::int64_t>(pre.x_m.size());
    if (n < 16) throw InvalidArgument("sst_blocks: signal too short");

    const std::int64_t block = std::min<std::int64_t>(cfg.block, n);
    const auto hop = static_cast<std::int64_t>(
        std::llround(static_cast<double>(block) * (1.0 - cfg.overlap)));

    std::vector<std::int64_t> starts;
    for (std::int64_t s = 0; s + block < n; s += std::max<std::int64_t>(1, hop)) starts.push_back(s);
    if (starts.empty() || starts.back() + block < n) starts.push_back(n - block);

    double iff = cfg.fallback_iff;
    std::vector<detail::BlockPhase> blocks;
    blocks.reserve(starts.size());
    for (auto s : starts) {
        iff = detail::block_iff(rough_peaks, s, s + block, fs, iff);
        const MotherWavelet w(iff, cfg.sigma_rel * iff);
        const auto scales = log_scales(w, cfg.span_low * iff, cfg.span_high * iff, cfg.voices);
        std::span<const double> seg(pre.x_m.data() + s, static_cast<size_t>(block));
        const CwtResult cw = cwt(seg, fs, scales, w);
        const ReassignmentField field = reassign(cw, cfg.gamma_abs);
        const auto bins = linear_bins(cfg.span_low * iff, cfg.span_high * iff, cfg.bins);
        const TfPlane sq = squeeze(cw, field, bins);
        const auto ridge = extract_ridge(sq, iff, cfg.band_rel * iff, cfg.max_jump_bins);
        detail::BlockPhase bp;
        bp.start = s;
        bp.len = block;
        bp.est = reconstruct(sq, ridge, cfg.recon_halfwidth, w);
        blocks.push_back(std::move(bp));
    }

    PhaseEstimate out;
    out.fs = fs;
    out.amplitude.assign(static_cast<size_t>(n), 0.0);
    out.phase.assign(static_cast<size_t>(n), 0.0);
    out.ridge_freq.assign(static_cast<size_t>(n), 0.0);
    out.block_id.assign(static_cast<size_t>(n), 0);
    out.degenerate.assign(static_cast<size_t>(n), 0);

    std::int64_t filled_end = 0;  // samples [0, filled_end) already stitched
    for (size_t b = 0; b < blocks.size(); ++b) {
        auto& blk = blocks[b];
        const std::int64_t bs = blk.start, be = blk.start + blk.len;
        std::int64_t seam = bs;  // first sample taken from this block
        double offset = 0.0;
        if (b > 0 && filled_end > bs) {
            seam = std::min(be - 1, (bs + filled_end) / 2);  // overlap midpoint
            const double prev_phase = out.phase[static_cast<size_t>(seam)];
            const double this_phase = blk.est.phase[static_cast<size_t>(seam - bs)];
            offset = std::round(prev_phase - this_phase);
            // linear amplitude cross-fade over the shared region
            for (std::int64_t i = bs; i < filled_end && i < be; ++i) {
                const double wgt = static_cast<double>(i - bs) /
                                   static_cast<double>(std::max<std::int64_t>(1, filled_end - bs));
                out.amplitude[static_cast<size_t>(i)] =
                    (1.0 - wgt) * out.amplitude[static_cast<size_t>(i)] +
                    wgt * blk.est.amplitude[static_cast<size_t>(i - bs)];
            }
        } else if (b > 0) {
            // disjoint blocks: keep phase continuous at the gap boundary
            const double prev_phase = out.phase[static_cast<size_t>(filled_end - 1)];
            offset = std::round(prev_phase - blk.est.phase.front());
        }
        for (std::int64_t i = std::max(seam, b == 0 ? bs : seam); i < be; ++i) {
            const auto loc = static_cast<size_t>(i - bs);
            out.phase[static_cast<size_t>(i)] = blk.est.phase[loc] + offset;
            out.ridge_freq[static_cast<size_t>(i)] = blk.est.ridge_freq[loc];
            out.block_id[static_cast<size_t>(i)] = static_cast<int>(b);
            out.degenerate[static_cast<size_t>(i)] = blk.est.degenerate[loc];
            if (i >= filled_end) out.amplitude[static_cast<size_t>(i)] = blk.est.amplitude[loc];
        }
        filled_end = be;
    }
    return out;
}

// Flat-binary plane dump: "SSTP" magic, u32 version, u32 kind, u64 rows,
// u64 cols, f64 fs, axis doubles, time doubles, then row-major re/im pairs.
inline void write_plane_binary(const TfPlane& p, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_plane_binary: cannot open " + path);
    const char magic[4] = {'S', 'S', 'T', 'P'};
    f.write(magic, 4);
    const std::uint32_t version = 1, kind = p.kind == PlaneKind::cwt ? 0u : 1u;
    const std::uint64_t rows = static_cast<std::uint64_t>(p.n_rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(p.n_times());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&kind), 4);
    f.write(reinterpret_cast<const char*>(&rows), 8);
    f.write(reinterpret_cast<const char*>(&cols), 8);
    f.write(reinterpret_cast<const char*>(&p.fs), 8);
    f.write(reinterpret_cast<const char*>(p.axis.data()),
            static_cast<std::streamsize>(p.axis.size() * 8));
    f.write(reinterpret_cast<const char*>(p.time_axis.data()),
            static_cast<std::streamsize>(p.time_axis.size() * 8));
    for (Eigen::Index r = 0; r < p.n_rows(); ++r) {
        for (Eigen::Index t = 0; t < p.n_times(); ++t) {
            const double re = p.values(r, t).real(), im = p.values(r, t).imag();
            f.write(reinterpret_cast<const char*>(&re), 8);
            f.write(reinterpret_cast<const char*>(&im), 8);
        }
    }
    if (!f) throw DataError("write_plane_binary: write failed for " + path);
}

inline void write_plane_csv(const TfPlane& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("write_plane_csv: cannot open " + path);
    f << "# kind=" << (p.kind == PlaneKind::cwt ? "cwt" : "squeezed") << " fs=" << p.fs << "\n";
    f << "axis\\time";
    for (double t : p.time_axis) f << "," << t;
    f << "\n";
    for (Eigen::Index r = 0; r < p.n_rows(); ++r) {
        f << p.axis[static_cast<size_t>(r)];
        for (Eigen::Index t = 0; t < p.n_times(); ++t) f << "," << std::abs(p.values(r, t));
        f << "\n";
    }
}

}  // namespace sstecg::sst
