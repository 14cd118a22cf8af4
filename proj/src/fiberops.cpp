#include "mpfw/fiberops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace mpfw {

namespace {

void check_axis(int axis) {
    if (axis != 1 && axis != 2)
        throw std::invalid_argument("axis must be 1 or 2, got " + std::to_string(axis));
}

} // namespace

GridFunction2D apply_fiber(const GridFunction2D& F, const Symbol1D& sym, int axis) {
    check_axis(axis);
    if (sym.n() != F.n())
        throw std::invalid_argument("apply_fiber: symbol length " + std::to_string(sym.n()) +
                                    " does not match grid size " + std::to_string(F.n()));
    const std::uint32_t n = F.n();
    std::vector<cplx> a(F.data().begin(), F.data().end());
    const double scale = 1.0 / double(n);
    if (axis == 1) {
        for (std::uint32_t j = 0; j < n; ++j) {
            detail::fft_pow2(a.data() + j, n, n, -1);
            for (std::uint32_t i = 0; i < n; ++i) a[std::size_t(i) * n + j] *= sym.at(i) * scale;
            detail::fft_pow2(a.data() + j, n, n, +1);
        }
    } else {
        for (std::uint32_t i = 0; i < n; ++i) {
            cplx* row = a.data() + std::size_t(i) * n;
            detail::fft_pow2(row, n, 1, -1);
            for (std::uint32_t j = 0; j < n; ++j) row[j] *= sym.at(j) * scale;
            detail::fft_pow2(row, n, 1, +1);
        }
    }
    return GridFunction2D(n, std::move(a));
}

Spectrum2D apply_axis_symbol(const Spectrum2D& S, const Symbol1D& sym, int axis) {
    check_axis(axis);
    if (sym.n() != S.n())
        throw std::invalid_argument("apply_axis_symbol: symbol length does not match grid size");
    const std::uint32_t n = S.n();
    std::vector<cplx> v(S.data().begin(), S.data().end());
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b)
            v[std::size_t(a) * n + b] *= sym.at(axis == 1 ? a : b);
    return Spectrum2D(n, std::move(v));
}

GridFunction2D lp_projection(const GridFunction2D& F, const DyadicSymbolFamily& family,
                             ProjKind kind, int k, int axis) {
    if (k < family.k_min() || k > family.k_max())
        throw std::invalid_argument("lp_projection: scale " + std::to_string(k) + " outside [" +
                                    std::to_string(family.k_min()) + "," +
                                    std::to_string(family.k_max()) + "]");
    return apply_fiber(F, kind == ProjKind::P ? family.phi(k) : family.psi(k), axis);
}

GridFunction2D square_function(const GridFunction2D& F, const DyadicSymbolFamily& family,
                               ProjKind kind, int axis) {
    const std::uint32_t n = F.n();
    std::vector<double> acc(std::size_t(n) * n, 0.0);
    for (int k = family.k_min(); k <= family.k_max(); ++k) {
        GridFunction2D proj = lp_projection(F, family, kind, k, axis);
        for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += std::norm(proj.data()[t]);
    }
    std::vector<cplx> out(acc.size());
    for (std::size_t t = 0; t < acc.size(); ++t) out[t] = cplx(std::sqrt(acc[t]), 0.0);
    return GridFunction2D(n, std::move(out));
}

namespace {

// Uncentered periodic maximal value over windows of dyadic lengths, one fiber
// at a time. Position x sits in doubled coordinates at x + n; the windows of
// length len covering it start at s in [x+n-len+1, x+n]. A monotonic deque
// over the window averages makes each length O(n), the fiber O(n log n).
void maximal_fiber(const double* f, std::size_t n, std::size_t stride, double* out,
                   std::size_t out_stride) {
    std::vector<double> pref(3 * n + 1, 0.0);
    for (std::size_t i = 0; i < 3 * n; ++i) pref[i + 1] = pref[i] + f[(i % n) * stride];
    std::vector<double> best(n, 0.0);
    for (std::size_t len = 1; len <= n; len <<= 1) {
        const auto avg = [&](std::size_t s) { return (pref[s + len] - pref[s]) / double(len); };
        std::deque<std::size_t> dq;
        for (std::size_t s = 0; s < 2 * n; ++s) {
            while (!dq.empty() && avg(dq.back()) <= avg(s)) dq.pop_back();
            dq.push_back(s);
            if (s >= n) {
                while (dq.front() + len <= s) dq.pop_front();
                const std::size_t x = s - n;
                best[x] = std::max(best[x], avg(dq.front()));
            }
        }
    }
    for (std::size_t x = 0; x < n; ++x) out[x * out_stride] = best[x];
}

} // namespace

GridFunction2D hl_maximal_fiber(const GridFunction2D& F, int axis) {
    check_axis(axis);
    const std::uint32_t n = F.n();
    std::vector<double> mods(std::size_t(n) * n);
    for (std::size_t t = 0; t < mods.size(); ++t) mods[t] = std::abs(F.data()[t]);
    std::vector<double> res(mods.size(), 0.0);
    if (axis == 1) {
        for (std::uint32_t j = 0; j < n; ++j)
            maximal_fiber(mods.data() + j, n, n, res.data() + j, n);
    } else {
        for (std::uint32_t i = 0; i < n; ++i)
            maximal_fiber(mods.data() + std::size_t(i) * n, n, 1,
                          res.data() + std::size_t(i) * n, 1);
    }
    std::vector<cplx> out(res.size());
    for (std::size_t t = 0; t < res.size(); ++t) out[t] = cplx(res[t], 0.0);
    return GridFunction2D(n, std::move(out));
}

std::vector<GridFunction2D> scale_family(const GridFunction2D& F, const DyadicSymbolFamily& family,
                                         ProjKind kind, int axis) {
    std::vector<GridFunction2D> out;
    out.reserve(family.scale_count());
    for (int k = family.k_min(); k <= family.k_max(); ++k)
        out.push_back(lp_projection(F, family, kind, k, axis));
    return out;
}

} // namespace mpfw
