#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "sstecg/common.hpp"

namespace sstecg {

// Thin RAII wrapper over FFTW c2c plans of a fixed size. Each instance owns
// its buffers, so distinct instances can execute concurrently; only plan
// creation/destruction is serialized (FFTW requirement).
class Fft {
  public:
    explicit Fft(int n) : n_(n) {
        if (n <= 0) throw InvalidArgument("Fft: size must be positive");
        in_ = fftw_alloc_complex(static_cast<size_t>(n));
        out_ = fftw_alloc_complex(static_cast<size_t>(n));
        std::lock_guard<std::mutex> lock(plan_mutex());
        fwd_ = fftw_plan_dft_1d(n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_1d(n, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    ~Fft() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(in_);
        fftw_free(out_);
    }

    int size() const { return n_; }

    void forward(const std::complex<double>* in, std::complex<double>* out) {
        run(fwd_, in, out, 1.0);
    }

    // Inverse transform normalized by 1/n.
    void inverse(const std::complex<double>* in, std::complex<double>* out) {
        run(inv_, in, out, 1.0 / static_cast<double>(n_));
    }

    std::vector<std::complex<double>> forward(const std::vector<double>& x) {
        std::vector<std::complex<double>> in(x.begin(), x.end()), out(x.size());
        forward(in.data(), out.data());
        return out;
    }

  private:
    void run(fftw_plan plan, const std::complex<double>* in, std::complex<double>* out,
             double scale) {
        for (int i = 0; i < n_; ++i) {
            in_[i][0] = in[i].real();
            in_[i][1] = in[i].imag();
        }
        fftw_execute(plan);
        for (int i = 0; i < n_; ++i) {
            out[i] = std::complex<double>(out_[i][0] * scale, out_[i][1] * scale);
        }
    }

    static std::mutex& plan_mutex() {
        static std::mutex m;
        return m;
    }

    int n_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

// DFT bin frequency in Hz for bin k of an n-point transform at rate fs
// (negative for the upper half).
inline double dft_bin_hz(int k, int n, double fs) {
    const int half = n / 2;
    const int kk = (k <= half) ? k : k - n;
    return fs * static_cast<double>(kk) / static_cast<double>(n);
}

}  // namespace sstecg
