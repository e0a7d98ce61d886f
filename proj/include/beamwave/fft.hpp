#pragma once

// Minimal self-contained complex FFT used by the spectral layer.  Power-of-two
// sizes take the iterative radix-2 path; other (even) sizes fall back to a
// direct DFT, which is exact enough for the small grids where it occurs.
//
// Twiddle factors come from a cached table computed directly with sin/cos
// rather than a multiplicative recurrence; the fourth-derivative symbol
// amplifies high-mode roundoff by k_max^4, so the table's extra accuracy is
// what keeps profile residuals near 1e-12 on production grids.

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace beamwave::detail {

using cplx = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// w_j = exp(-2 pi i j / n) for j < n/2, shared across calls.
inline std::shared_ptr<const std::vector<cplx>> twiddle_table(std::size_t n) {
    static std::mutex mtx;
    static std::unordered_map<std::size_t, std::shared_ptr<const std::vector<cplx>>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto table = std::make_shared<std::vector<cplx>>(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        const double ang = -2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n);
        (*table)[j] = cplx(std::cos(ang), std::sin(ang));
    }
    cache.emplace(n, table);
    return table;
}

/// In-place radix-2 Cooley-Tukey transform, unnormalized.
/// sign = -1: forward (e^{-i 2 pi k m / n}); sign = +1: inverse synthesis.
inline void fft_radix2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    auto table = twiddle_table(n);
    const auto& w = *table;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                cplx tw = w[j * stride];
                if (sign > 0) tw = std::conj(tw);
                cplx u = a[i + j];
                cplx v = a[i + j + len / 2] * tw;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
}

/// Direct DFT, unnormalized; used for non-power-of-two sizes.
inline void dft_naive(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    std::vector<cplx> out(n, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = sign * 2.0 * M_PI *
                               static_cast<double>((k * m) % n) / static_cast<double>(n);
            out[k] += a[m] * cplx(std::cos(ang), std::sin(ang));
        }
    }
    a.swap(out);
}

/// Unnormalized transform; caller owns normalization conventions.
inline void transform(std::vector<cplx>& a, int sign) {
    if (is_power_of_two(a.size()))
        fft_radix2(a, sign);
    else
        dft_naive(a, sign);
}

} // namespace beamwave::detail
