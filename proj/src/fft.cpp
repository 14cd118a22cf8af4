#include "fft.hpp"

#include <numbers>
#include <stdexcept>

namespace mpfw::detail {

namespace {

void bit_reverse(cplx* a, std::size_t n) {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
}

// tw[j] = exp(sign * 2 pi i j / n) for j in [0, n/2)
std::vector<cplx> twiddle_table(std::size_t n, int sign) {
    std::vector<cplx> tw(n / 2);
    const double w = double(sign) * 2.0 * std::numbers::pi / double(n);
    for (std::size_t j = 0; j < n / 2; ++j) tw[j] = std::polar(1.0, w * double(j));
    return tw;
}

void fft_core(cplx* a, std::size_t n, const cplx* tw) {
    bit_reverse(a, n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + half] * tw[j * step];
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
}

} // namespace

void fft_pow2(cplx* data, std::size_t n, std::size_t stride, int sign) {
    if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: length must be a power of two");
    const auto tw = twiddle_table(n, sign);
    if (stride == 1) {
        fft_core(data, n, tw.data());
        return;
    }
    std::vector<cplx> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = data[i * stride];
    fft_core(buf.data(), n, tw.data());
    for (std::size_t i = 0; i < n; ++i) data[i * stride] = buf[i];
}

void fft2d(std::vector<cplx>& a, std::uint32_t n, int sign) {
    const auto tw = twiddle_table(n, sign);
    const std::size_t nn = n;
    for (std::size_t r = 0; r < nn; ++r) fft_core(a.data() + r * nn, nn, tw.data());
    std::vector<cplx> buf(nn);
    for (std::size_t c = 0; c < nn; ++c) {
        for (std::size_t r = 0; r < nn; ++r) buf[r] = a[r * nn + c];
        fft_core(buf.data(), nn, tw.data());
        for (std::size_t r = 0; r < nn; ++r) a[r * nn + c] = buf[r];
    }
}

} // namespace mpfw::detail
