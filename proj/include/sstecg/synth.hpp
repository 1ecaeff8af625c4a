#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "sstecg/common.hpp"

namespace sstecg::synth {

// One localized raised-cosine bump of the periodic wave-shape template,
// centered at `center` (cycle position in [0,1)) with half-width `width`.
struct BumpSpec {
    double center = 0.5;
    double width = 0.05;
    double amp = 1.0;
};

// One explicit oscillatory component B_l(t) cos(2 pi (l phi(t) + psi_l(t)))
// for the time-varying-shape generator.
struct HarmonicSpec {
    double amp = 1.0;
    double phase_offset_cycles = 0.0;
    double amp_mod_depth = 0.0;   // slow multiplicative modulation of amp
    double amp_mod_freq_hz = 0.0;
    double phase_mod_depth = 0.0;  // slow additive modulation of psi_l, cycles
    double phase_mod_freq_hz = 0.0;
};

// Per-cycle wave-shape perturbation (dropout injection, ectopic shapes).
struct BeatPerturb {
    int cycle = 0;
    double amp_scale = 1.0;
    double width_scale = 1.0;
    double phase_shift_cycles = 0.0;
};

enum class ShapeKind { cosine, harmonics, ecg_like };

// Amplitude-modulated, frequency-modulated oscillation with a 1-periodic
// wave-shape template plus optional white Gaussian noise:
//   Y(t) = A(t) s(phi(t)) + noise.
// A(t) = amp_base (1 + amp_mod_depth sin(2 pi amp_mod_freq t + amp_mod_phase))
// phi'(t) = f0 (1 + fm_depth sin(2 pi fm_freq t)) + chirp_rate t
struct AnhSpec {
    double amp_base = 1.0;
    double amp_mod_depth = 0.0;
    double amp_mod_freq_hz = 0.0;
    double amp_mod_phase = 0.0;

    double f0_hz = 1.2;
    double fm_depth = 0.0;
    double fm_freq_hz = 0.0;
    double chirp_rate_hz_per_s = 0.0;

    ShapeKind shape = ShapeKind::cosine;
    std::vector<HarmonicSpec> harmonics;  // used when shape == harmonics
    std::vector<BumpSpec> bumps;          // used when shape == ecg_like
    std::vector<BeatPerturb> perturbs;    // applies to ecg_like cycles

    double noise_sigma = 0.0;
    double eps = 0.05;  // regularity budget for |A'| and |phi''| vs phi'

    double amplitude_at(double t) const {
        return amp_base * (1.0 + amp_mod_depth * std::sin(2.0 * std::numbers::pi *
                                                              amp_mod_freq_hz * t +
                                                          amp_mod_phase));
    }

    double phase_at(double t) const {  // cycles
        double p = f0_hz * t + 0.5 * chirp_rate_hz_per_s * t * t;
        if (fm_depth != 0.0 && fm_freq_hz != 0.0) {
            p -= f0_hz * fm_depth / (2.0 * std::numbers::pi * fm_freq_hz) *
                 (std::cos(2.0 * std::numbers::pi * fm_freq_hz * t) - 1.0);
        }
        return p;
    }

    double inst_freq_at(double t) const {  // Hz
        return f0_hz * (1.0 + fm_depth * std::sin(2.0 * std::numbers::pi * fm_freq_hz * t)) +
               chirp_rate_hz_per_s * t;
    }

    double phase_accel_at(double t) const {
        return f0_hz * fm_depth * 2.0 * std::numbers::pi * fm_freq_hz *
                   std::cos(2.0 * std::numbers::pi * fm_freq_hz * t) +
               chirp_rate_hz_per_s;
    }

    double amp_slope_at(double t) const {
        return amp_base * amp_mod_depth * 2.0 * std::numbers::pi * amp_mod_freq_hz *
               std::cos(2.0 * std::numbers::pi * amp_mod_freq_hz * t + amp_mod_phase);
    }

    // Template value at cycle position u in [0,1) for cycle index k
    // (perturbations apply per cycle). Harmonic shapes also need absolute
    // time for their slow modulations.
    double shape_at(double u, int cycle, double t) const {
        switch (shape) {
            case ShapeKind::cosine:
                return std::cos(2.0 * std::numbers::pi * u);
            case ShapeKind::harmonics: {
                double v = 0.0;
                int l = 1;
                for (const auto& h : harmonics) {
                    const double c =
                        h.amp * (1.0 + h.amp_mod_depth *
                                           std::sin(2.0 * std::numbers::pi * h.amp_mod_freq_hz * t));
                    const double psi =
                        h.phase_offset_cycles +
                        h.phase_mod_depth *
                            std::sin(2.0 * std::numbers::pi * h.phase_mod_freq_hz * t);
                    v += c * std::cos(2.0 * std::numbers::pi * (l * u + psi));
                    ++l;
                }
                return v;
            }
            case ShapeKind::ecg_like: {
                double amp_scale = 1.0, width_scale = 1.0, shift = 0.0;
                for (const auto& p : perturbs) {
                    if (p.cycle == cycle) {
                        amp_scale = p.amp_scale;
                        width_scale = p.width_scale;
                        shift = p.phase_shift_cycles;
                        break;
                    }
                }
                double v = 0.0;
                for (const auto& b : bumps) {
                    const double w = b.width * width_scale;
                    // periodic distance to the bump center
                    double d = wrap_to_half_cycle(u - b.center - shift);
                    if (std::abs(d) < w) {
                        v += amp_scale * b.amp * 0.5 *
                             (1.0 + std::cos(std::numbers::pi * d / w));
                    }
                }
                return v;
            }
        }
        return 0.0;
    }

    // Noiseless model value at absolute time t.
    double clean_at(double t) const {
        const double phi = phase_at(t);
        const double u = phi - std::floor(phi);
        return amplitude_at(t) * shape_at(u, static_cast<int>(std::floor(phi)), t);
    }

    // Cycle position of the template maximum, from a fine grid.
    double peak_position() const {
        if (shape == ShapeKind::cosine) return 0.0;
        double best_u = 0.0, best_v = -1e300;
        const int n = 8192;
        for (int i = 0; i < n; ++i) {
            const double u = static_cast<double>(i) / n;
            const double v = shape_at(u, /*cycle=*/-1, 0.0);
            if (v > best_v) {
                best_v = v;
                best_u = u;
            }
        }
        return best_u;
    }

    // P-QRS-T-like template: five localized bumps, asymmetric around the R
    // peak so the fundamental phase does not sit on a cycle boundary.
    static AnhSpec ecg_like_default(double f0) {
        AnhSpec s;
        s.f0_hz = f0;
        s.shape = ShapeKind::ecg_like;
        s.bumps = {
            {0.15, 0.05, 0.12},   // P
            {0.27, 0.02, -0.10},  // Q
            {0.30, 0.025, 1.00},  // R
            {0.33, 0.02, -0.15},  // S
            {0.52, 0.07, 0.35},   // T
        };
        return s;
    }
};

struct GroundTruth {
    Signal signal;
    double fs = 0;
    std::vector<std::int64_t> true_peaks;  // sample index of the per-cycle shape maximum
    Signal true_phase;                     // phi(t) in cycles
    Signal true_if;                        // phi'(t) in Hz
};

namespace detail {

// phi is strictly increasing; invert by bisection on [lo, hi].
inline double invert_phase(const AnhSpec& spec, double target_cycles, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (spec.phase_at(mid) < target_cycles)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Sample the model on a uniform grid, record ground truth, and validate the
// regularity budget. A violated bound rejects the spec with its name.
inline GroundTruth generate(const AnhSpec& spec, double fs, double duration_s,
                            std::uint64_t seed) {
    if (fs <= 0 || duration_s <= 0) throw InvalidArgument("generate: fs and duration must be positive");
    const auto n = static_cast<std::int64_t>(std::llround(fs * duration_s));
    if (n < 2) throw InvalidArgument("generate: duration too short");

    // sampled regularity checks
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double ip = spec.inst_freq_at(t);
        if (!(ip > 0.0)) throw InvalidArgument("generate: phi' must stay positive");
        if (std::abs(spec.amp_slope_at(t)) > spec.eps * ip + 1e-12) {
            std::ostringstream os;
            os << "generate: |A'| <= eps*phi' violated at t=" << t;
            throw InvalidArgument(os.str());
        }
        if (std::abs(spec.phase_accel_at(t)) > spec.eps * ip + 1e-12) {
            std::ostringstream os;
            os << "generate: |phi''| <= eps*phi' violated at t=" << t;
            throw InvalidArgument(os.str());
        }
    }

    GroundTruth gt;
    gt.fs = fs;
    gt.signal.resize(static_cast<size_t>(n));
    gt.true_phase.resize(static_cast<size_t>(n));
    gt.true_if.resize(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        gt.signal[static_cast<size_t>(i)] = spec.clean_at(t);
        gt.true_phase[static_cast<size_t>(i)] = spec.phase_at(t);
        gt.true_if[static_cast<size_t>(i)] = spec.inst_freq_at(t);
    }

    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, spec.noise_sigma);
        for (auto& v : gt.signal) v += g(rng);
    }

    // one true peak per unit increment of phi; per-cycle phase shifts move
    // that cycle's peak with them
    const double u_r = spec.peak_position();
    const double phi_end = spec.phase_at(duration_s);
    const double t_last = static_cast<double>(n - 1) / fs;
    for (std::int64_t k = static_cast<std::int64_t>(std::ceil(spec.phase_at(0.0) - u_r));; ++k) {
        double shift = 0.0;
        for (const auto& p : spec.perturbs) {
            if (p.cycle == static_cast<int>(k)) shift = p.phase_shift_cycles;
        }
        const double target = static_cast<double>(k) + u_r + shift;
        if (target > phi_end) break;
        if (target < spec.phase_at(0.0)) continue;
        const double t = detail::invert_phase(spec, target, 0.0, duration_s);
        const auto idx = static_cast<std::int64_t>(std::llround(t * fs));
        if (idx >= 0 && idx < n && t <= t_last + 0.5 / fs) gt.true_peaks.push_back(std::min(idx, n - 1));
    }
    return gt;
}

// Resample cycle k onto the unit interval with the local linear dilation and
// return the sup-norm deviation from the template. Only meaningful for
// noiseless, time-invariant shapes.
inline double check_dilation(const AnhSpec& spec, int cycle, int grid = 2048) {
    if (spec.noise_sigma != 0.0) throw InvalidArgument("check_dilation: requires noiseless spec");
    const double horizon = (static_cast<double>(cycle) + 2.0) / spec.f0_hz * 4.0 + 8.0;
    const double t_lo = detail::invert_phase(spec, cycle, 0.0, horizon);
    const double t_hi = detail::invert_phase(spec, cycle + 1.0, 0.0, horizon);
    double worst = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double u = static_cast<double>(i) / grid;
        const double t = t_lo + u * (t_hi - t_lo);
        const double resampled = spec.clean_at(t) / spec.amplitude_at(t);
        const double ref = spec.shape_at(u, cycle, t);
        worst = std::max(worst, std::abs(resampled - ref));
    }
    return worst;
}

}  // namespace sstecg::synth
