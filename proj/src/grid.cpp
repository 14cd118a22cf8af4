#include "mpfw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace mpfw {

namespace {

void check_grid_size(std::uint32_t n) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("grid size must be a power of two and at least 8, got " +
                                    std::to_string(n));
}

void check_finite(std::span<const cplx> v, std::uint32_t n, const char* what) {
    for (std::size_t t = 0; t < v.size(); ++t) {
        if (!std::isfinite(v[t].real()) || !std::isfinite(v[t].imag()))
            throw std::invalid_argument(std::string(what) + ": non-finite value at index (" +
                                        std::to_string(t / n) + "," + std::to_string(t % n) + ")");
    }
}

} // namespace

GridFunction2D::GridFunction2D(std::uint32_t n) : n_(n) {
    check_grid_size(n);
    v_.assign(std::size_t(n) * n, cplx(0.0, 0.0));
}

GridFunction2D::GridFunction2D(std::uint32_t n, std::vector<cplx> samples)
    : n_(n), v_(std::move(samples)) {
    check_grid_size(n);
    if (v_.size() != std::size_t(n) * n)
        throw std::invalid_argument("GridFunction2D: expected " + std::to_string(std::size_t(n) * n) +
                                    " samples, got " + std::to_string(v_.size()));
}

Spectrum2D::Spectrum2D(std::uint32_t n) : n_(n) {
    check_grid_size(n);
    v_.assign(std::size_t(n) * n, cplx(0.0, 0.0));
}

Spectrum2D::Spectrum2D(std::uint32_t n, std::vector<cplx> coeffs)
    : n_(n), v_(std::move(coeffs)) {
    check_grid_size(n);
    if (v_.size() != std::size_t(n) * n)
        throw std::invalid_argument("Spectrum2D: expected " + std::to_string(std::size_t(n) * n) +
                                    " coefficients, got " + std::to_string(v_.size()));
}

namespace {

std::uint32_t freq_index(std::int32_t f, std::uint32_t n) {
    const std::int32_t half = std::int32_t(n) / 2;
    if (f < -half || f >= half)
        throw std::out_of_range("frequency " + std::to_string(f) + " outside [-" +
                                std::to_string(half) + "," + std::to_string(half) + ")");
    return f >= 0 ? std::uint32_t(f) : std::uint32_t(f + std::int32_t(n));
}

} // namespace

cplx& Spectrum2D::at_freq(std::int32_t f1, std::int32_t f2) {
    return at(freq_index(f1, n_), freq_index(f2, n_));
}

const cplx& Spectrum2D::at_freq(std::int32_t f1, std::int32_t f2) const {
    return at(freq_index(f1, n_), freq_index(f2, n_));
}

Spectrum2D forward_transform(const GridFunction2D& F) {
    check_finite(F.data(), F.n(), "forward_transform");
    std::vector<cplx> a(F.data().begin(), F.data().end());
    detail::fft2d(a, F.n(), -1);
    const double scale = 1.0 / (double(F.n()) * double(F.n()));
    for (auto& z : a) z *= scale;
    return Spectrum2D(F.n(), std::move(a));
}

GridFunction2D inverse_transform(const Spectrum2D& S) {
    check_finite(S.data(), S.n(), "inverse_transform");
    std::vector<cplx> a(S.data().begin(), S.data().end());
    detail::fft2d(a, S.n(), +1);
    return GridFunction2D(S.n(), std::move(a));
}

double detail::pairwise_sum(const double* x, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += x[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, count - half);
}

double lp_norm(const GridFunction2D& F, double p) {
    if (!(p > 0.0))
        throw std::invalid_argument("lp_norm: exponent must be positive, got " + std::to_string(p));
    if (p == kInf) {
        double m = 0.0;
        for (const auto& z : F.data()) m = std::max(m, std::abs(z));
        return m;
    }
    std::vector<double> terms(F.size());
    for (std::size_t t = 0; t < terms.size(); ++t) terms[t] = std::pow(std::abs(F.data()[t]), p);
    const double cell = 1.0 / (double(F.n()) * double(F.n()));
    return std::pow(detail::pairwise_sum(terms.data(), terms.size()) * cell, 1.0 / p);
}

double weak_lp(const GridFunction2D& F, double p) {
    if (!(p > 0.0))
        throw std::invalid_argument("weak_lp: exponent must be positive, got " + std::to_string(p));
    std::vector<double> mods(F.size());
    for (std::size_t t = 0; t < mods.size(); ++t) mods[t] = std::abs(F.data()[t]);
    std::sort(mods.begin(), mods.end(), std::greater<double>());
    const double cells = double(F.n()) * double(F.n());
    double best = 0.0;
    for (std::size_t k = 1; k <= mods.size(); ++k) {
        // level just below the k-th largest modulus captures measure k / n^2
        const double lam = mods[k - 1];
        const double meas = double(k) / cells;
        const double val = p == kInf ? lam : lam * std::pow(meas, 1.0 / p);
        best = std::max(best, val);
    }
    return best;
}

namespace {

double seq_norm_accum_finish(double acc, double q) { return q == kInf ? acc : std::sqrt(acc); }

} // namespace

double mixed_norm(std::span<const GridFunction2D> family, const MixedNormSpec& spec,
                  std::size_t inner_extent) {
    if (family.empty()) throw std::invalid_argument("mixed_norm: empty family");
    const std::uint32_t n = family[0].n();
    for (const auto& F : family)
        if (F.n() != n) throw std::invalid_argument("mixed_norm: members have mismatched grid sizes");
    if (!(spec.outer > 0.0))
        throw std::invalid_argument("mixed_norm: outer exponent must be positive");
    if (spec.inner_chain.size() > 2)
        throw std::invalid_argument("mixed_norm: inner chain longer than two entries");
    for (double q : spec.inner_chain)
        if (q != 2.0 && q != kInf)
            throw std::invalid_argument("mixed_norm: inner exponents must be 2 or infinity");

    const std::size_t K = family.size();
    const std::size_t npts = std::size_t(n) * n;
    std::vector<double> g(npts, 0.0);

    if (spec.inner_chain.empty()) {
        if (K != 1)
            throw std::invalid_argument("mixed_norm: empty inner chain requires a single member");
        for (std::size_t t = 0; t < npts; ++t) g[t] = std::abs(family[0].data()[t]);
    } else if (spec.inner_chain.size() == 1) {
        const double q = spec.inner_chain[0];
        for (std::size_t t = 0; t < npts; ++t) {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double m = std::abs(family[k].data()[t]);
                acc = q == kInf ? std::max(acc, m) : acc + m * m;
            }
            g[t] = seq_norm_accum_finish(acc, q);
        }
    } else {
        const std::size_t L = inner_extent == 0 ? K : inner_extent;
        if (L == 0 || K % L != 0)
            throw std::invalid_argument("mixed_norm: inner extent does not divide family size");
        const std::size_t M = K / L;
        const double qo = spec.inner_chain[0];
        const double qi = spec.inner_chain[1];
        for (std::size_t t = 0; t < npts; ++t) {
            double acco = 0.0;
            for (std::size_t m = 0; m < M; ++m) {
                double acci = 0.0;
                for (std::size_t l = 0; l < L; ++l) {
                    const double v = std::abs(family[m * L + l].data()[t]);
                    acci = qi == kInf ? std::max(acci, v) : acci + v * v;
                }
                const double inner = seq_norm_accum_finish(acci, qi);
                acco = qo == kInf ? std::max(acco, inner) : acco + inner * inner;
            }
            g[t] = seq_norm_accum_finish(acco, qo);
        }
    }

    if (spec.outer == kInf) {
        double m = 0.0;
        for (double v : g) m = std::max(m, v);
        return m;
    }
    for (double& v : g) v = std::pow(v, spec.outer);
    const double cell = 1.0 / (double(n) * double(n));
    return std::pow(detail::pairwise_sum(g.data(), g.size()) * cell, 1.0 / spec.outer);
}

std::uint64_t detail::mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

namespace {

// Two independent standard Gaussians from one (seed, counter) key.
void gauss_pair(std::uint64_t seed, std::uint64_t counter, double& g1, double& g2) {
    const std::uint64_t k1 = detail::mix64(seed + 0x9e3779b97f4a7c15ULL * (2 * counter + 1));
    const std::uint64_t k2 = detail::mix64(seed + 0x9e3779b97f4a7c15ULL * (2 * counter + 2));
    const double u1 = (double(k1 >> 11) + 1.0) * 0x1.0p-53; // in (0,1]
    const double u2 = double(k2 >> 11) * 0x1.0p-53;         // in [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    g1 = r * std::cos(th);
    g2 = r * std::sin(th);
}

} // namespace

GridFunction2D random_field(std::uint64_t seed, std::uint32_t n, double decay, bool real_output) {
    check_grid_size(n);
    if (!(decay >= 0.0)) throw std::invalid_argument("random_field: decay must be >= 0");
    const std::uint64_t key = detail::mix64(seed ^ detail::mix64(n));
    Spectrum2D S(n);
    for (std::uint32_t a = 0; a < n; ++a) {
        const double f1 = double(S.freq_of(a));
        for (std::uint32_t b = 0; b < n; ++b) {
            const double f2 = double(S.freq_of(b));
            double g1 = 0.0, g2 = 0.0;
            gauss_pair(key, std::uint64_t(a) * n + b, g1, g2);
            const double amp = std::pow(1.0 + std::hypot(f1, f2), -decay);
            S.at(a, b) = cplx(g1, g2) * (amp / std::numbers::sqrt2);
        }
    }
    if (real_output) {
        Spectrum2D W(n);
        for (std::uint32_t a = 0; a < n; ++a) {
            const std::uint32_t ar = (n - a) % n;
            for (std::uint32_t b = 0; b < n; ++b) {
                const std::uint32_t br = (n - b) % n;
                W.at(a, b) = (S.at(a, b) + std::conj(S.at(ar, br))) / std::numbers::sqrt2;
            }
        }
        GridFunction2D F = inverse_transform(W);
        for (auto& z : F.data()) z = cplx(z.real(), 0.0);
        return F;
    }
    return inverse_transform(S);
}

} // namespace mpfw
