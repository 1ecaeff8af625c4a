#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "sstecg/common.hpp"

namespace sstecg::dsp {

// One second-order section, a0 normalized to 1. First-order sections set
// b2 = a2 = 0.
struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

struct IirFilter {
    std::vector<Biquad> sections;
    int order = 0;       // analog prototype order
    int n_poles = 0;     // total digital poles (2*order for bandpass)
    double f_lo = 0;     // Hz; 0 for lowpass
    double f_hi = 0;     // Hz; upper band edge or lowpass cutoff
    double fs = 0;

    // H(e^{i 2 pi f / fs}) of the cascade.
    std::complex<double> response(double f_hz) const {
        const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
        const std::complex<double> z2 = z1 * z1;
        std::complex<double> h = 1.0;
        for (const auto& s : sections) {
            h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
        }
        return h;
    }

    // Triangle stability condition per section: |a2| < 1 and |a1| < 1 + a2.
    bool stable() const {
        for (const auto& s : sections) {
            if (std::abs(s.a2) >= 1.0) return false;
            if (std::abs(s.a1) >= 1.0 + s.a2) return false;
        }
        return true;
    }
};

namespace detail {

inline std::complex<double> bilinear(std::complex<double> s_pole, double fs) {
    const double k = 2.0 * fs;
    return (k + s_pole) / (k - s_pole);
}

inline double prewarp(double f_hz, double fs) {
    return 2.0 * fs * std::tan(std::numbers::pi * f_hz / fs);
}

// Analog Butterworth prototype poles with nonnegative imaginary part;
// the real pole (odd orders) is listed with imag = 0.
inline std::vector<std::complex<double>> butter_proto_upper(int order) {
    std::vector<std::complex<double>> poles;
    for (int k = 1; k <= order; ++k) {
        const double theta =
            std::numbers::pi * static_cast<double>(2 * k + order - 1) / (2.0 * order);
        std::complex<double> p(std::cos(theta), std::sin(theta));
        if (p.imag() > 1e-12) poles.push_back(p);
        if (std::abs(p.imag()) <= 1e-12) poles.emplace_back(p.real(), 0.0);
    }
    return poles;
}

inline Biquad pole_pair_section(std::complex<double> z_pole) {
    Biquad s;
    s.a1 = -2.0 * z_pole.real();
    s.a2 = std::norm(z_pole);
    return s;
}

}  // namespace detail

// Analog Butterworth lowpass mapped by bilinear transform with frequency
// prewarping; odd orders produce one first-order section.
inline IirFilter design_butter_lowpass(int order, double fc, double fs) {
    if (order < 1) throw InvalidArgument("butter lowpass: order must be >= 1");
    if (!(fc > 0.0 && fc < fs / 2.0)) throw InvalidArgument("butter lowpass: cutoff out of range");
    const double wc = detail::prewarp(fc, fs);

    IirFilter f;
    f.order = order;
    f.n_poles = order;
    f.f_lo = 0.0;
    f.f_hi = fc;
    f.fs = fs;

    for (const auto& p : detail::butter_proto_upper(order)) {
        const std::complex<double> sp = p * wc;
        if (std::abs(p.imag()) <= 1e-12) {
            // real pole -> first-order section with a zero at z = -1
            const double zp = detail::bilinear(sp, fs).real();
            Biquad s;
            s.b0 = 1.0;
            s.b1 = 1.0;
            s.a1 = -zp;
            f.sections.push_back(s);
        } else {
            Biquad s = detail::pole_pair_section(detail::bilinear(sp, fs));
            s.b0 = 1.0;
            s.b1 = 2.0;
            s.b2 = 1.0;
            f.sections.push_back(s);
        }
    }
    // unity DC gain, distributed evenly over sections
    const double g = std::abs(f.response(0.0));
    const double per = std::pow(1.0 / g, 1.0 / static_cast<double>(f.sections.size()));
    for (auto& s : f.sections) {
        s.b0 *= per;
        s.b1 *= per;
        s.b2 *= per;
    }
    return f;
}

// Bandpass Butterworth: each prototype pole maps to a conjugate pole pair via
// s -> (s^2 + w0^2) / (B s); zeros land at z = +1 and z = -1 (one pair per
// section). Gain is normalized at the warped geometric center frequency.
inline IirFilter design_butter_bandpass(int order, double f_lo, double f_hi, double fs) {
    if (order < 1) throw InvalidArgument("butter bandpass: order must be >= 1");
    if (!(0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0)) {
        throw InvalidArgument("butter bandpass: band edges out of range");
    }
    const double w_lo = detail::prewarp(f_lo, fs);
    const double w_hi = detail::prewarp(f_hi, fs);
    const double w0 = std::sqrt(w_lo * w_hi);
    const double bw = w_hi - w_lo;

    IirFilter f;
    f.order = order;
    f.n_poles = 2 * order;
    f.f_lo = f_lo;
    f.f_hi = f_hi;
    f.fs = fs;

    // roots of s^2 - p*B*s + w0^2 = 0 for every prototype pole p (full set)
    std::vector<std::complex<double>> analog;
    for (const auto& p : detail::butter_proto_upper(order)) {
        std::vector<std::complex<double>> protos;
        protos.push_back(p);
        if (std::abs(p.imag()) > 1e-12) protos.push_back(std::conj(p));
        for (const auto& q : protos) {
            const std::complex<double> disc = std::sqrt(q * q * bw * bw - 4.0 * w0 * w0);
            analog.push_back((q * bw + disc) / 2.0);
            analog.push_back((q * bw - disc) / 2.0);
        }
    }
    // keep one representative of each conjugate pair
    for (const auto& sp : analog) {
        if (sp.imag() < -1e-12) continue;
        Biquad s = detail::pole_pair_section(detail::bilinear(sp, fs));
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;  // zeros at z = +1 and z = -1
        f.sections.push_back(s);
    }

    // normalize |H| = 1 at the digital image of the analog center frequency
    const double f_center = fs / std::numbers::pi * std::atan(w0 / (2.0 * fs));
    const double g = std::abs(f.response(f_center));
    const double per = std::pow(1.0 / g, 1.0 / static_cast<double>(f.sections.size()));
    for (auto& s : f.sections) {
        s.b0 *= per;
        s.b1 *= per;
        s.b2 *= per;
    }
    return f;
}

namespace detail {

struct BiquadState {
    double s1 = 0, s2 = 0;
};

inline double step_df2t(const Biquad& c, BiquadState& st, double x) {
    const double y = c.b0 * x + st.s1;
    st.s1 = c.b1 * x - c.a1 * y + st.s2;
    st.s2 = c.b2 * x - c.a2 * y;
    return y;
}

// Initial state equal to the steady-state response to a constant input x0;
// removes the step transient at the start of a pass.
inline BiquadState step_steady_state(const Biquad& c, double x0) {
    const double dc = (c.b0 + c.b1 + c.b2) / (1.0 + c.a1 + c.a2);
    BiquadState st;
    const double y0 = dc * x0;
    st.s2 = c.b2 * x0 - c.a2 * y0;
    st.s1 = c.b1 * x0 - c.a1 * y0 + st.s2;
    return st;
}

inline void filter_in_place(const IirFilter& f, std::vector<double>& x, bool match_step) {
    for (const auto& sec : f.sections) {
        BiquadState st =
            match_step && !x.empty() ? step_steady_state(sec, x.front()) : BiquadState{};
        for (auto& v : x) v = step_df2t(sec, st, v);
    }
}

}  // namespace detail

// Single forward pass (step-matched initial conditions).
inline Signal filter(const IirFilter& f, std::span<const double> x) {
    Signal y(x.begin(), x.end());
    detail::filter_in_place(f, y, true);
    return y;
}

// Zero-phase forward-backward filtering with odd-reflection padding of
// 3 * (2 * n_poles + 1) samples at each end.
inline Signal filtfilt(const IirFilter& f, std::span<const double> x) {
    if (x.empty()) return {};
    const size_t n = x.size();
    size_t pad = static_cast<size_t>(3 * (2 * f.n_poles + 1));
    if (pad >= n) pad = n - 1;

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    detail::filter_in_place(f, ext, true);
    std::reverse(ext.begin(), ext.end());
    detail::filter_in_place(f, ext, true);
    std::reverse(ext.begin(), ext.end());

    return Signal(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                  ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

// Centered moving mean with shrinking windows at the edges. window_len must
// be odd so the window is symmetric.
inline Signal moving_average(std::span<const double> x, int window_len) {
    if (window_len <= 0) throw InvalidArgument("moving_average: window_len must be positive");
    if (window_len % 2 == 0) throw InvalidArgument("moving_average: window_len must be odd");
    if (window_len == 1) return Signal(x.begin(), x.end());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t h = window_len / 2;
    std::vector<double> prefix(static_cast<size_t>(n) + 1, 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) prefix[static_cast<size_t>(i + 1)] = prefix[static_cast<size_t>(i)] + x[static_cast<size_t>(i)];
    Signal out(static_cast<size_t>(n));
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - h);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + h);
        out[static_cast<size_t>(i)] =
            (prefix[static_cast<size_t>(hi + 1)] - prefix[static_cast<size_t>(lo)]) /
            static_cast<double>(hi - lo + 1);
    }
    return out;
}

struct PreprocSignal {
    Signal x_m;    // log-envelope, mean-removed
    Signal trend;  // lowpass trend in mV
    double mu = 0;
};

// X_m(t) = log(1 + |ecg - T|) - mean(...), with T a zero-phase lowpass trend.
inline PreprocSignal preprocess_xm(std::span<const double> ecg, double fs,
                                   double trend_cutoff_hz = 0.5) {
    if (ecg.empty()) throw InvalidArgument("preprocess_xm: empty input");
    PreprocSignal out;
    out.trend = filtfilt(design_butter_lowpass(3, trend_cutoff_hz, fs), ecg);
    out.x_m.resize(ecg.size());
    for (size_t i = 0; i < ecg.size(); ++i) {
        out.x_m[i] = std::log1p(std::abs(ecg[i] - out.trend[i]));
    }
    out.mu = mean(out.x_m);
    for (auto& v : out.x_m) v -= out.mu;
    return out;
}

}  // namespace sstecg::dsp
