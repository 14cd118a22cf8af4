#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mpfw/bumps.hpp"
#include "mpfw/fiberops.hpp"
#include "mpfw/grid.hpp"

namespace mpfw {

/// A 2-D multiplier tabulated at integer frequency pairs, FFT storage layout
/// on both axes (like Spectrum2D). Values are validated finite at
/// construction and the sup modulus is recorded. A 1-D adaptedness verdict
/// for a ray restriction may be attached by callers that computed one.
class Symbol2D {
public:
    explicit Symbol2D(std::uint32_t n);
    Symbol2D(std::uint32_t n, std::vector<cplx> values);

    std::uint32_t n() const { return n_; }
    std::size_t size() const { return v_.size(); }

    const cplx& at(std::uint32_t a, std::uint32_t b) const {
        return v_[std::size_t(a) * n_ + b];
    }
    /// Access by signed frequency, each component in [-n/2, n/2).
    const cplx& at_freq(std::int32_t f1, std::int32_t f2) const;

    std::int32_t freq_of(std::uint32_t a) const {
        return a < n_ / 2 ? std::int32_t(a) : std::int32_t(a) - std::int32_t(n_);
    }

    double sup_abs() const { return sup_; }
    std::span<const cplx> data() const { return v_; }

    void set_ray_report(AdaptednessReport rep) { ray_report_ = std::move(rep); }
    const std::optional<AdaptednessReport>& ray_report() const { return ray_report_; }

private:
    std::uint32_t n_;
    std::vector<cplx> v_;
    double sup_;
    std::optional<AdaptednessReport> ray_report_;
};

/// Tabulates f over the signed frequency box [-n/2, n/2)^2.
Symbol2D make_symbol2d(std::uint32_t n,
                       const std::function<cplx(std::int32_t, std::int32_t)>& f);

/// 1-D restriction of a 2-D symbol along the integer direction (d1, d2):
/// index t holds the value at (t*d1, t*d2), zero where that point leaves the
/// frequency box. Feed the result to check_adapted for a ray report.
Symbol1D ray_restriction(const Symbol2D& m, int d1, int d2);

/// A 4-argument multiplier evaluated on demand at signed frequencies
/// (xi1, xi2, eta1, eta2). Never tabulated: n^4 entries would not fit, so
/// structured operators avoid materializing it.
struct Symbol4D {
    std::uint32_t n = 0;
    std::function<cplx(std::int32_t, std::int32_t, std::int32_t, std::int32_t)> eval;
};

/// Reference bilinear multiplier action, direct double spectral sum:
/// out(x) = sum_{xi,eta} F1^(xi) F2^(eta) m(xi,eta) e^{2 pi i x.(xi+eta)/n}.
/// O(n^4); restricted to n <= 32 and meant as the oracle for the structured
/// operators below.
GridFunction2D bilinear_direct(const GridFunction2D& F1, const GridFunction2D& F2,
                               const Symbol4D& m);

/// Bilinear action of the separate-variable symbol m1(xi1, eta2): the first
/// input is filtered along its first axis, the second along its second axis.
/// Evaluated in O(n^3 log n) by factorizing the frequency sum over fibers.
GridFunction2D twisted_paraproduct(const GridFunction2D& F1, const GridFunction2D& F2,
                                   const Symbol2D& m1);

/// Bilinear action of m(xi,eta) = m1(xi1,eta2) m2(xi2,eta1), the fully
/// cross-paired tensor symbol, in O(n^3 log n) via per-pair fiber transforms.
GridFunction2D tensor_bilinear(const GridFunction2D& F1, const GridFunction2D& F2,
                               const Symbol2D& m1, const Symbol2D& m2);

/// Double scale sum over pairs k <= l in the shared window:
/// sum (Q_{1,k}^{(1)} P_{2,l}^{(2)} F1) (Q_{2,l}^{(1)} P_{1,k}^{(2)} F2),
/// annular action on the first axis of both inputs, low-pass on the second,
/// with the two families' roles swapped between the inputs.
GridFunction2D T1(const GridFunction2D& F1, const GridFunction2D& F2,
                  const DyadicSymbolFamily& fam1, const DyadicSymbolFamily& fam2);

/// Companion double scale sum: low-pass pair on the first input, annular
/// pair on the second: sum_{k<=l} (P_{1,k}^{(1)} P_{2,l}^{(2)} F1)
/// (Q_{2,l}^{(1)} Q_{1,k}^{(2)} F2).
GridFunction2D T2(const GridFunction2D& F1, const GridFunction2D& F2,
                  const DyadicSymbolFamily& fam1, const DyadicSymbolFamily& fam2);

/// One fiber filtering applied to one input slot: kind and scale pick the
/// family symbol, axis picks the fiber direction, family indexes into the
/// family list passed alongside.
struct FiberRole {
    ProjKind kind = ProjKind::P;
    int axis = 1;
    std::size_t family = 0;
};

/// Per-slot role lists for the generic single-scale-sum operator.
struct RolePattern {
    std::vector<FiberRole> slot1;
    std::vector<FiberRole> slot2;
};

/// Generic single scale sum sum_k (A_k F1)(B_k F2) where A_k and B_k are the
/// per-slot compositions described by the role lists (one or two roles per
/// slot, distinct axes). Subsumes the three fixed variants below and the
/// summand of max_truncated_twist.
GridFunction2D one_param_generic(const GridFunction2D& F1, const GridFunction2D& F2,
                                 const RolePattern& roles,
                                 std::span<const DyadicSymbolFamily> fams);

/// The three fixed single-sum shapes, over exactly three families:
/// fams[0] and fams[1] are the indexed low-pass families, fams[2] carries
/// the unindexed annular symbols.
///   1: sum_k (Q_k^{(1)} P_{1,k}^{(2)} F1) (P_{2,k}^{(1)} F2)
///   2: sum_k (P_{1,k}^{(1)} P_{2,k}^{(2)} F1) (Q_k^{(1)} F2)
///   3: sum_k (P_{1,k}^{(1)} Q_k^{(2)} F1) (P_{2,k}^{(1)} F2)
/// Delegates to one_param_generic, so results are bit-identical to the
/// equivalent role pattern.
GridFunction2D case7_operator(const GridFunction2D& F1, const GridFunction2D& F2,
                              int variant, std::span<const DyadicSymbolFamily> fams);

/// Maximally truncated single scale sum. The summand at scale s is
/// (P_s^{(1)} F1)(Q_s^{(2)} F2) with both symbols from the one family; the
/// truncation parameter N selects offsets |k| < N around the window center,
/// and the output for each requested N is the pointwise sup over N' <= N of
/// the modulus of the partial sum (a real field). N = 0 gives the zero
/// field; outputs are pointwise nondecreasing in N.
std::vector<GridFunction2D> max_truncated_twist(const GridFunction2D& F1,
                                                const GridFunction2D& F2,
                                                const DyadicSymbolFamily& fam,
                                                std::span<const int> truncations);

/// Reference trilinear action with cyclically paired 2-D symbols:
/// out(x) = sum_{xi,eta,tau} F1^ F2^ F3^ m1(xi1,eta2) m2(eta1,tau2)
/// m3(tau1,xi2) e^{2 pi i x.(xi+eta+tau)/n}, direct triple spectral sum.
/// O(n^6); restricted to n <= 16. Larger grids go through the
/// cone-decomposed scale-sum route instead.
GridFunction2D tripletwist(const GridFunction2D& F1, const GridFunction2D& F2,
                           const GridFunction2D& F3, const Symbol2D& m1,
                           const Symbol2D& m2, const Symbol2D& m3);

/// Triple scale sum over (k, l, m) in the shared window of six families
/// (annular families first, low-pass families last):
/// sum (Q_{1,k}^{(1)} P_{4,m}^{(2)} F1) (Q_{2,l}^{(1)} P_{5,k}^{(2)} F2)
///     (Q_{3,m}^{(1)} P_{6,l}^{(2)} F3).
GridFunction2D U1(const GridFunction2D& F1, const GridFunction2D& F2,
                  const GridFunction2D& F3, std::span<const DyadicSymbolFamily> fams);

/// Companion triple scale sum with the low-pass pair on the first input:
/// sum (P_{5,k}^{(1)} P_{4,m}^{(2)} F1) (Q_{2,l}^{(1)} Q_{1,k}^{(2)} F2)
///     (Q_{3,m}^{(1)} P_{6,l}^{(2)} F3).
GridFunction2D U2(const GridFunction2D& F1, const GridFunction2D& F2,
                  const GridFunction2D& F3, std::span<const DyadicSymbolFamily> fams);

} // namespace mpfw
