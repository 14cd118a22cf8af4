#include "mpfw/bumps.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpfw {

namespace {

double glue_piece(double t) { return t <= 0.0 ? 0.0 : std::exp(-1.0 / t); }

// Rises smoothly from 0 at t <= 0 to 1 at t >= 1.
double glue(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = glue_piece(t);
    const double b = glue_piece(1.0 - t);
    return a / (a + b);
}

} // namespace

BumpProfile::BumpProfile(double plateau_radius, double support_radius)
    : r0_(plateau_radius), r1_(support_radius) {
    if (!(r0_ > 0.0) || !(r1_ > r0_))
        throw std::invalid_argument("BumpProfile: need 0 < plateau radius < support radius, got (" +
                                    std::to_string(r0_) + ", " + std::to_string(r1_) + ")");
}

double BumpProfile::operator()(double xi) const {
    const double x = std::abs(xi);
    if (x <= r0_) return 1.0;
    if (x >= r1_) return 0.0;
    return glue((r1_ - x) / (r1_ - r0_));
}

BumpProfile make_mother_bump(double r0, double r1) { return BumpProfile(r0, r1); }

Symbol1D::Symbol1D(std::uint32_t n) : n_(n), sup_(0.0) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("Symbol1D: grid size must be a power of two and at least 8");
    v_.assign(n, cplx(0.0, 0.0));
}

Symbol1D::Symbol1D(std::uint32_t n, std::vector<cplx> values) : n_(n), v_(std::move(values)) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("Symbol1D: grid size must be a power of two and at least 8");
    if (v_.size() != n)
        throw std::invalid_argument("Symbol1D: expected " + std::to_string(n) + " values, got " +
                                    std::to_string(v_.size()));
    sup_ = 0.0;
    for (std::size_t a = 0; a < v_.size(); ++a) {
        if (!std::isfinite(v_[a].real()) || !std::isfinite(v_[a].imag()))
            throw std::invalid_argument("Symbol1D: non-finite value at index " + std::to_string(a));
        sup_ = std::max(sup_, std::abs(v_[a]));
    }
}

const cplx& Symbol1D::at_freq(std::int32_t f) const {
    const std::int32_t half = std::int32_t(n_) / 2;
    if (f < -half || f >= half)
        throw std::out_of_range("Symbol1D: frequency " + std::to_string(f) + " outside [-" +
                                std::to_string(half) + "," + std::to_string(half) + ")");
    return v_[f >= 0 ? std::uint32_t(f) : std::uint32_t(f + std::int32_t(n_))];
}

DyadicSymbolFamily::DyadicSymbolFamily(BumpProfile profile, std::uint32_t n, int k_min, int k_max,
                                       std::vector<Symbol1D> phis, std::vector<Symbol1D> psis)
    : profile_(profile), n_(n), k_min_(k_min), k_max_(k_max), phis_(std::move(phis)),
      psis_(std::move(psis)) {}

const Symbol1D& DyadicSymbolFamily::phi(int k) const {
    if (k < k_min_ - 1 || k > k_max_)
        throw std::out_of_range("DyadicSymbolFamily: phi scale " + std::to_string(k) +
                                " outside [" + std::to_string(k_min_ - 1) + "," +
                                std::to_string(k_max_) + "]");
    return phis_[std::size_t(k - (k_min_ - 1))];
}

const Symbol1D& DyadicSymbolFamily::psi(int k) const {
    if (k < k_min_ || k > k_max_)
        throw std::out_of_range("DyadicSymbolFamily: psi scale " + std::to_string(k) +
                                " outside [" + std::to_string(k_min_) + "," +
                                std::to_string(k_max_) + "]");
    return psis_[std::size_t(k - k_min_)];
}

DyadicSymbolFamily make_family(const BumpProfile& profile, std::uint32_t n, int k_min, int k_max) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("make_family: grid size must be a power of two and at least 8");
    if (k_min < 0)
        throw std::invalid_argument("make_family: k_min must be >= 0, got " + std::to_string(k_min));
    if (k_min > k_max)
        throw std::invalid_argument("make_family: k_min exceeds k_max");
    const double half = double(n) / 2.0;
    if (!(std::ldexp(profile.support_radius(), k_max) < half)) {
        int adm = -1;
        while (std::ldexp(profile.support_radius(), adm + 1) < half) ++adm;
        throw std::invalid_argument(
            "make_family: top scale " + std::to_string(k_max) +
            " reaches Nyquist on an n = " + std::to_string(n) +
            " grid; largest admissible k_max is " + std::to_string(adm));
    }

    auto sample_phi = [&](int k) {
        std::vector<cplx> v(n);
        Symbol1D layout(n); // for freq_of only
        for (std::uint32_t a = 0; a < n; ++a) {
            const double f = double(layout.freq_of(a));
            v[a] = cplx(profile(std::ldexp(f, -k)), 0.0);
        }
        return Symbol1D(n, std::move(v));
    };

    std::vector<Symbol1D> phis;
    phis.reserve(std::size_t(k_max - k_min + 2));
    for (int k = k_min - 1; k <= k_max; ++k) phis.push_back(sample_phi(k));

    std::vector<Symbol1D> psis;
    psis.reserve(std::size_t(k_max - k_min + 1));
    for (int k = k_min; k <= k_max; ++k) {
        const Symbol1D& hi = phis[std::size_t(k - (k_min - 1))];
        const Symbol1D& lo = phis[std::size_t(k - 1 - (k_min - 1))];
        std::vector<cplx> v(n);
        for (std::uint32_t a = 0; a < n; ++a) v[a] = hi.at(a) - lo.at(a);
        psis.emplace_back(n, std::move(v));
    }

    return DyadicSymbolFamily(profile, n, k_min, k_max, std::move(phis), std::move(psis));
}

AdaptednessReport check_adapted(const Symbol1D& sym, double interval_half_width,
                                std::uint32_t order, double budget) {
    if (order > 6)
        throw std::invalid_argument("check_adapted: derivative order capped at 6, got " +
                                    std::to_string(order));
    if (!(interval_half_width > 0.0))
        throw std::invalid_argument("check_adapted: interval half-width must be positive");

    const std::uint32_t n = sym.n();
    AdaptednessReport rep;
    rep.budget = budget;
    rep.support_ok = true;
    for (std::uint32_t a = 0; a < n; ++a) {
        if (std::abs(double(sym.freq_of(a))) > interval_half_width && sym.at(a) != cplx(0.0, 0.0))
            rep.support_ok = false;
    }

    // Iterated central differences with periodic wrap; grid step is 1.
    std::vector<cplx> cur(sym.data().begin(), sym.data().end());
    double Lpow = 1.0;
    for (std::uint32_t alpha = 0; alpha <= order; ++alpha) {
        double sup = 0.0;
        for (const auto& z : cur) sup = std::max(sup, std::abs(z));
        rep.constants.push_back(sup * Lpow);
        rep.order_ok.push_back(sup * Lpow <= budget);
        rep.smallest_c = std::max(rep.smallest_c, sup * Lpow);
        if (alpha == order) break;
        std::vector<cplx> next(n);
        for (std::uint32_t a = 0; a < n; ++a) {
            const cplx hi = cur[(a + 1) % n];
            const cplx lo = cur[(a + n - 1) % n];
            next[a] = (hi - lo) * 0.5;
        }
        cur = std::move(next);
        Lpow *= interval_half_width;
    }

    rep.passed = rep.support_ok;
    for (bool ok : rep.order_ok) rep.passed = rep.passed && ok;
    return rep;
}

std::pair<Symbol1D, Symbol1D> vartheta_rho_system(double b, std::uint32_t n, int k) {
    if (!(b >= -2.0 && b <= 2.0))
        throw std::invalid_argument("vartheta_rho_system: shift must lie in [-2, 2], got " +
                                    std::to_string(b));
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("vartheta_rho_system: grid size must be a power of two, >= 8");
    const double a = double(k) + b;
    // theta_a is supported in [-2^{a+0.6}, 2^{a+0.6}]
    if (!(std::exp2(a + 0.6) < double(n) / 2.0))
        throw std::invalid_argument("vartheta_rho_system: scale " + std::to_string(a) +
                                    " reaches Nyquist on an n = " + std::to_string(n) + " grid");

    const BumpProfile narrow(std::exp2(-0.6), std::exp2(-0.4));
    std::vector<cplx> theta(n), rho(n);
    Symbol1D layout(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const double f = double(layout.freq_of(i));
        theta[i] = cplx(narrow(std::exp2(-a - 1.0) * f) - narrow(std::exp2(-a) * f), 0.0);
        rho[i] = cplx(narrow(std::exp2(-a - 0.6) * f) - narrow(std::exp2(-a - 0.5) * f), 0.0);
    }
    Symbol1D theta_sym(n, std::move(theta));
    Symbol1D rho_sym(n, std::move(rho));
    for (std::uint32_t i = 0; i < n; ++i) {
        if (rho_sym.at(i) != cplx(0.0, 0.0) && theta_sym.at(i) != cplx(1.0, 0.0))
            throw std::runtime_error("vartheta_rho_system: containment identity failed at index " +
                                     std::to_string(i));
    }
    return {std::move(theta_sym), std::move(rho_sym)};
}

} // namespace mpfw
