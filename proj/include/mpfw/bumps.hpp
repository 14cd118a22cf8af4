#pragma once

#include <cstdint>
#include <vector>

#include "mpfw/grid.hpp"

namespace mpfw {

/// Smooth even cutoff profile: exactly 1 on [-r0, r0], exactly 0 outside
/// [-r1, r1], glued with the exponential transition t -> e^{-1/t}. The
/// evaluation is closed-form, infinitely differentiable in the open glue
/// region, and takes values in [0, 1].
class BumpProfile {
public:
    BumpProfile(double plateau_radius, double support_radius);

    double operator()(double xi) const;

    double plateau_radius() const { return r0_; }
    double support_radius() const { return r1_; }
    /// Continuous derivatives guaranteed by the construction (unbounded).
    int smoothness_order() const { return std::numeric_limits<int>::max(); }

private:
    double r0_;
    double r1_;
};

/// Default mother profile: plateau [-1, 1], support [-2, 2].
BumpProfile make_mother_bump(double r0 = 1.0, double r1 = 2.0);

/// A 1-D multiplier sampled at the integer frequencies of an n-point axis,
/// FFT storage layout (index a holds frequency a for a < n/2, else a - n).
/// Values are validated finite at construction; the sup modulus is recorded.
class Symbol1D {
public:
    explicit Symbol1D(std::uint32_t n);
    Symbol1D(std::uint32_t n, std::vector<cplx> values);

    std::uint32_t n() const { return n_; }
    std::size_t size() const { return v_.size(); }

    const cplx& at(std::uint32_t a) const { return v_[a]; }
    const cplx& at_freq(std::int32_t f) const;
    std::int32_t freq_of(std::uint32_t a) const {
        return a < n_ / 2 ? std::int32_t(a) : std::int32_t(a) - std::int32_t(n_);
    }

    double sup_abs() const { return sup_; }
    std::span<const cplx> data() const { return v_; }

private:
    std::uint32_t n_;
    std::vector<cplx> v_;
    double sup_;
};

/// Low-pass / annular multiplier family on dyadic scales:
/// phi_k(xi) = phi(2^-k xi), psi_k = phi_k - phi_{k-1} sample-by-sample, so
/// partial sums of psi telescope exactly to differences of phi.
class DyadicSymbolFamily {
public:
    DyadicSymbolFamily(BumpProfile profile, std::uint32_t n, int k_min, int k_max,
                       std::vector<Symbol1D> phis, std::vector<Symbol1D> psis);

    const BumpProfile& profile() const { return profile_; }
    std::uint32_t n() const { return n_; }
    int k_min() const { return k_min_; }
    int k_max() const { return k_max_; }
    std::size_t scale_count() const { return std::size_t(k_max_ - k_min_ + 1); }

    /// Valid for k in [k_min - 1, k_max].
    const Symbol1D& phi(int k) const;
    /// Valid for k in [k_min, k_max].
    const Symbol1D& psi(int k) const;

private:
    BumpProfile profile_;
    std::uint32_t n_;
    int k_min_;
    int k_max_;
    std::vector<Symbol1D> phis_; // index k - (k_min - 1)
    std::vector<Symbol1D> psis_; // index k - k_min
};

/// Samples phi_k and psi_k on the grid. Requires k_min >= 0 and the top
/// scale to fit below Nyquist: 2^k_max * r1 < n/2. On overflow the error
/// reports the largest admissible k_max.
DyadicSymbolFamily make_family(const BumpProfile& profile, std::uint32_t n, int k_min, int k_max);

/// Adaptedness verdict for a symbol against the interval [-L, L]: support
/// containment plus finite-difference derivative bounds
/// sup |Delta^alpha sym| * L^alpha <= budget for each alpha <= order.
struct AdaptednessReport {
    bool support_ok = false;
    double budget = 1.0;
    std::vector<double> constants; // index alpha in [0, order]
    std::vector<bool> order_ok;    // constants[alpha] <= budget
    double smallest_c = 0.0;       // max over alpha, the least admissible budget
    bool passed = false;           // support_ok and every order_ok
};

/// Central finite differences at grid resolution with periodic wrap;
/// order is capped at 6 to keep difference noise bounded.
AdaptednessReport check_adapted(const Symbol1D& sym, double interval_half_width,
                                std::uint32_t order, double budget = 1.0);

/// The narrow-plateau annular pair at fractional scale a = k + b:
/// theta_a(xi) = phi(2^{-a-1} xi) - phi(2^{-a} xi),
/// rho_a(xi)   = phi(2^{-a-0.6} xi) - phi(2^{-a-0.5} xi),
/// built from the mother with plateau 2^-0.6 and support 2^-0.4, so that
/// theta_a is identically 1 on the support of rho_a (verified pointwise).
std::pair<Symbol1D, Symbol1D> vartheta_rho_system(double b, std::uint32_t n, int k);

} // namespace mpfw
