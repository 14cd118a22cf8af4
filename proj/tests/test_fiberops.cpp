#include <cmath>
#include <cstring>
#include <numbers>

#include "doctest.h"
#include "mpfw/fiberops.hpp"
#include "oracles.hpp"

using namespace mpfw;

namespace {

double max_abs_diff(const GridFunction2D& A, const GridFunction2D& B) {
    double worst = 0.0;
    for (std::size_t t = 0; t < A.size(); ++t)
        worst = std::max(worst, std::abs(A.data()[t] - B.data()[t]));
    return worst;
}

GridFunction2D exponential(std::uint32_t n, std::int32_t a1, std::int32_t a2) {
    GridFunction2D F(n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            const double ph = 2.0 * std::numbers::pi * (double(a1) * i + double(a2) * j) / n;
            F.at(i, j) = std::polar(1.0, ph);
        }
    return F;
}

// Direct per-fiber multiplier action, O(n^2) per fiber in long double.
GridFunction2D apply_fiber_oracle(const GridFunction2D& F, const Symbol1D& sym, int axis) {
    const std::uint32_t n = F.n();
    GridFunction2D out(n);
    for (std::uint32_t fixed = 0; fixed < n; ++fixed) {
        std::vector<oracle::cplxl> fib(n), hat(n);
        for (std::uint32_t t = 0; t < n; ++t) {
            const cplx z = axis == 1 ? F.at(t, fixed) : F.at(fixed, t);
            fib[t] = oracle::cplxl(z.real(), z.imag());
        }
        for (std::uint32_t a = 0; a < n; ++a) {
            oracle::cplxl acc(0.0L, 0.0L);
            for (std::uint32_t t = 0; t < n; ++t) {
                const long double ph = -2.0L * oracle::kPiL * (long double)(t * a) / n;
                acc += fib[t] * oracle::cplxl(std::cos(ph), std::sin(ph));
            }
            const cplx sv = sym.at(a);
            hat[a] = acc / (long double)n * oracle::cplxl(sv.real(), sv.imag());
        }
        for (std::uint32_t t = 0; t < n; ++t) {
            oracle::cplxl acc(0.0L, 0.0L);
            for (std::uint32_t a = 0; a < n; ++a) {
                const long double ph = 2.0L * oracle::kPiL * (long double)(t * a) / n;
                acc += hat[a] * oracle::cplxl(std::cos(ph), std::sin(ph));
            }
            cplx& dst = axis == 1 ? out.at(t, fixed) : out.at(fixed, t);
            dst = cplx((double)acc.real(), (double)acc.imag());
        }
    }
    return out;
}

Symbol1D random_symbol(std::uint32_t n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    std::vector<cplx> v(n);
    for (auto& z : v) z = cplx(ud(gen), ud(gen));
    return Symbol1D(n, std::move(v));
}

} // namespace

TEST_CASE("identity symbol leaves the field unchanged") {
    auto F = oracle::random_gaussian_field(16, 3);
    Symbol1D one(16, std::vector<cplx>(16, cplx(1.0, 0.0)));
    for (int axis : {1, 2}) {
        GridFunction2D G = apply_fiber(F, one, axis);
        CHECK(max_abs_diff(G, F) < 1e-12);
    }
}

TEST_CASE("exponentials are eigenfunctions of fiber multipliers") {
    const std::uint32_t n = 16;
    GridFunction2D F = exponential(n, 3, -5);
    Symbol1D sym = random_symbol(n, 8);
    GridFunction2D G1 = apply_fiber(F, sym, 1);
    GridFunction2D G2 = apply_fiber(F, sym, 2);
    double worst1 = 0.0, worst2 = 0.0;
    for (std::size_t t = 0; t < F.size(); ++t) {
        worst1 = std::max(worst1, std::abs(G1.data()[t] - sym.at_freq(3) * F.data()[t]));
        worst2 = std::max(worst2, std::abs(G2.data()[t] - sym.at_freq(-5) * F.data()[t]));
    }
    CHECK(worst1 < 1e-12);
    CHECK(worst2 < 1e-12);
}

TEST_CASE("apply_fiber matches the per-fiber Fourier-sum oracle at n = 8") {
    auto F = oracle::random_gaussian_field(8, 14);
    Symbol1D sym = random_symbol(8, 15);
    for (int axis : {1, 2}) {
        GridFunction2D got = apply_fiber(F, sym, axis);
        GridFunction2D want = apply_fiber_oracle(F, sym, axis);
        CHECK(max_abs_diff(got, want) < 1e-12);
    }
}

TEST_CASE("apply_fiber validates sizes and axes") {
    auto F = oracle::random_gaussian_field(16, 1);
    Symbol1D sym = random_symbol(8, 1);
    CHECK_THROWS_AS(apply_fiber(F, sym, 1), std::invalid_argument);
    Symbol1D ok = random_symbol(16, 1);
    CHECK_THROWS_AS(apply_fiber(F, ok, 0), std::invalid_argument);
    CHECK_THROWS_AS(apply_fiber(F, ok, 3), std::invalid_argument);
}

TEST_CASE("apply_axis_symbol is the spectral face of apply_fiber") {
    auto F = oracle::random_gaussian_field(32, 77);
    Symbol1D sym = random_symbol(32, 78);
    for (int axis : {1, 2}) {
        GridFunction2D via_fiber = apply_fiber(F, sym, axis);
        GridFunction2D via_spec = inverse_transform(apply_axis_symbol(forward_transform(F), sym, axis));
        CHECK(max_abs_diff(via_fiber, via_spec) < 1e-12);
    }
}

TEST_CASE("axis-1 and axis-2 multipliers commute") {
    auto F = oracle::random_gaussian_field(32, 41);
    Symbol1D s = random_symbol(32, 42);
    Symbol1D t = random_symbol(32, 43);
    GridFunction2D a = apply_fiber(apply_fiber(F, s, 1), t, 2);
    GridFunction2D b = apply_fiber(apply_fiber(F, t, 2), s, 1);
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("same-axis composition multiplies the symbols") {
    auto F = oracle::random_gaussian_field(32, 51);
    Symbol1D s = random_symbol(32, 52);
    Symbol1D t = random_symbol(32, 53);
    std::vector<cplx> prod(32);
    for (std::uint32_t a = 0; a < 32; ++a) prod[a] = s.at(a) * t.at(a);
    Symbol1D st(32, std::move(prod));
    for (int axis : {1, 2}) {
        GridFunction2D two_step = apply_fiber(apply_fiber(F, s, axis), t, axis);
        GridFunction2D one_step = apply_fiber(F, st, axis);
        CHECK(max_abs_diff(two_step, one_step) < 1e-12);
    }
}

TEST_CASE("apply_fiber is linear") {
    auto F = oracle::random_gaussian_field(16, 61);
    auto G = oracle::random_gaussian_field(16, 62);
    Symbol1D s = random_symbol(16, 63);
    const cplx a(1.25, -0.5), b(-0.75, 2.0);
    GridFunction2D lhsArg(16);
    for (std::size_t t = 0; t < lhsArg.size(); ++t)
        lhsArg.data()[t] = a * F.data()[t] + b * G.data()[t];
    GridFunction2D lhs = apply_fiber(lhsArg, s, 1);
    GridFunction2D fa = apply_fiber(F, s, 1);
    GridFunction2D gb = apply_fiber(G, s, 1);
    double worst = 0.0;
    for (std::size_t t = 0; t < lhs.size(); ++t)
        worst = std::max(worst, std::abs(lhs.data()[t] - (a * fa.data()[t] + b * gb.data()[t])));
    CHECK(worst < 1e-12);
}

TEST_CASE("widely separated P swallows into Q") {
    const std::uint32_t n = 64;
    auto F = oracle::random_gaussian_field(n, 71);
    auto fam = make_family(make_mother_bump(), n, 0, 3);
    // annulus of psi_0 sits inside the plateau of phi_3
    GridFunction2D qp = lp_projection(lp_projection(F, fam, ProjKind::P, 3, 1), fam, ProjKind::Q, 0, 1);
    GridFunction2D q = lp_projection(F, fam, ProjKind::Q, 0, 1);
    CHECK(max_abs_diff(qp, q) < 1e-13);
    // spectral side is exact: the plateau multiplies by the double 1.0, the
    // complement by 0.0 (equal up to the sign of zero)
    Spectrum2D S = forward_transform(F);
    Spectrum2D viaP = apply_axis_symbol(apply_axis_symbol(S, fam.phi(3), 1), fam.psi(0), 1);
    Spectrum2D direct = apply_axis_symbol(S, fam.psi(0), 1);
    for (std::size_t t = 0; t < viaP.size(); ++t) CHECK(viaP.data()[t] == direct.data()[t]);
}

TEST_CASE("Q annihilates exponentials in the plateau gap") {
    const std::uint32_t n = 64;
    auto fam = make_family(make_mother_bump(), n, 0, 3);
    // psi_2(2) = phi(2/4) - phi(2/2) = 1 - 1 = 0
    GridFunction2D F = exponential(n, 2, 0);
    GridFunction2D QF = lp_projection(F, fam, ProjKind::Q, 2, 1);
    CHECK(lp_norm(QF, kInf) < 1e-13);
}

TEST_CASE("P then Q equals the product-symbol application") {
    const std::uint32_t n = 64;
    auto F = oracle::random_gaussian_field(n, 81);
    auto fam = make_family(make_mother_bump(), n, 0, 3);
    GridFunction2D pq = lp_projection(lp_projection(F, fam, ProjKind::Q, 2, 2), fam, ProjKind::P, 2, 2);
    std::vector<cplx> prod(n);
    for (std::uint32_t a = 0; a < n; ++a) prod[a] = fam.phi(2).at(a) * fam.psi(2).at(a);
    GridFunction2D direct = apply_fiber(F, Symbol1D(n, std::move(prod)), 2);
    CHECK(max_abs_diff(pq, direct) < 1e-12);
}

TEST_CASE("lp_projection rejects out-of-range scales") {
    auto F = oracle::random_gaussian_field(64, 2);
    auto fam = make_family(make_mother_bump(), 64, 1, 3);
    CHECK_THROWS_AS(lp_projection(F, fam, ProjKind::Q, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(lp_projection(F, fam, ProjKind::P, 4, 1), std::invalid_argument);
}

TEST_CASE("square_function of an exponential is the scale-profile constant") {
    const std::uint32_t n = 64;
    auto fam = make_family(make_mother_bump(), n, 0, 3);
    GridFunction2D F = exponential(n, 3, 1);
    GridFunction2D S = square_function(F, fam, ProjKind::Q, 1);
    double want = 0.0;
    for (int k = 0; k <= 3; ++k) want += std::norm(fam.psi(k).at_freq(3));
    want = std::sqrt(want);
    for (std::size_t t = 0; t < S.size(); ++t) CHECK(std::abs(S.data()[t] - cplx(want, 0.0)) < 1e-12);
}

TEST_CASE("square_function of zero is zero") {
    GridFunction2D Z(32);
    auto fam = make_family(make_mother_bump(), 32, 0, 2);
    GridFunction2D S = square_function(Z, fam, ProjKind::Q, 2);
    CHECK(lp_norm(S, kInf) == 0.0);
}

TEST_CASE("square-function energy splits across scales") {
    const std::uint32_t n = 64;
    auto F = oracle::random_gaussian_field(n, 91);
    auto fam = make_family(make_mother_bump(), n, 0, 3);
    for (int axis : {1, 2}) {
        GridFunction2D S = square_function(F, fam, ProjKind::Q, axis);
        const double lhs = std::pow(lp_norm(S, 2.0), 2.0);
        double rhs = 0.0;
        for (int k = 0; k <= 3; ++k)
            rhs += std::pow(lp_norm(lp_projection(F, fam, ProjKind::Q, k, axis), 2.0), 2.0);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(lhs, rhs));
    }
}

TEST_CASE("default-profile psi squares sum to at most one") {
    auto fam = make_family(make_mother_bump(), 256, 0, 5);
    for (std::uint32_t a = 0; a < 256; ++a) {
        double s = 0.0;
        for (int k = 0; k <= 5; ++k) s += std::norm(fam.psi(k).at(a));
        CHECK(s <= 1.0 + 1e-15);
    }
}

TEST_CASE("maximal function of a constant is its modulus") {
    GridFunction2D F(16);
    for (auto& z : F.data()) z = cplx(-3.0, 4.0);
    for (int axis : {1, 2}) {
        GridFunction2D M = hl_maximal_fiber(F, axis);
        for (const auto& z : M.data()) CHECK(std::abs(z - cplx(5.0, 0.0)) < 1e-14);
    }
}

TEST_CASE("maximal function of a spike matches the exhaustive window oracle") {
    const std::uint32_t n = 8;
    GridFunction2D F(n);
    F.at(2, 3) = cplx(1.0, 0.0);
    GridFunction2D M = hl_maximal_fiber(F, 2); // fiber i = 2 varies j
    // exhaustive oracle over all dyadic windows on the spike fiber
    for (std::uint32_t j = 0; j < n; ++j) {
        double best = 0.0;
        for (std::uint32_t len = 1; len <= n; len <<= 1)
            for (std::uint32_t s = 0; s < n; ++s) {
                bool covers_j = false;
                double sum = 0.0;
                for (std::uint32_t t = 0; t < len; ++t) {
                    const std::uint32_t p = (s + t) % n;
                    if (p == j) covers_j = true;
                    sum += std::abs(F.at(2, p));
                }
                if (covers_j) best = std::max(best, sum / double(len));
            }
        CHECK(M.at(2, j).real() == doctest::Approx(best).epsilon(1e-14));
    }
    // closed form: distance 1 -> 1/2, distances 2 and 3 -> 1/4, distance 4 -> 1/8
    CHECK(M.at(2, 4).real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(M.at(2, 2).real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(M.at(2, 5).real() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(M.at(2, 0).real() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(M.at(2, 7).real() == doctest::Approx(0.125).epsilon(1e-14));
    // off-fiber rows keep their zero fibers at zero
    CHECK(M.at(1, 3).real() == 0.0);
}

TEST_CASE("maximal function dominates the modulus and commutes with shifts") {
    const std::uint32_t n = 32;
    auto F = oracle::random_gaussian_field(n, 17);
    for (int axis : {1, 2}) {
        GridFunction2D M = hl_maximal_fiber(F, axis);
        for (std::size_t t = 0; t < F.size(); ++t)
            CHECK(M.data()[t].real() >= std::abs(F.data()[t]) - 1e-14);
    }
    // translate along axis 2 by 5 cells
    GridFunction2D G(n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) G.at(i, j) = F.at(i, (j + 5) % n);
    GridFunction2D MF = hl_maximal_fiber(F, 2);
    GridFunction2D MG = hl_maximal_fiber(G, 2);
    double worst = 0.0;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
            worst = std::max(worst, std::abs(MG.at(i, j) - MF.at(i, (j + 5) % n)));
    CHECK(worst < 1e-13);
}

TEST_CASE("maximal function matches the exhaustive oracle on random data") {
    const std::uint32_t n = 16;
    auto F = oracle::random_gaussian_field(n, 19);
    GridFunction2D M = hl_maximal_fiber(F, 1);
    for (std::uint32_t j = 0; j < n; ++j)
        for (std::uint32_t i = 0; i < n; ++i) {
            long double best = 0.0L;
            for (std::uint32_t len = 1; len <= n; len <<= 1)
                for (std::uint32_t s = 0; s < n; ++s) {
                    bool covers = false;
                    long double sum = 0.0L;
                    for (std::uint32_t t = 0; t < len; ++t) {
                        const std::uint32_t p = (s + t) % n;
                        if (p == i) covers = true;
                        sum += std::abs(F.at(p, j));
                    }
                    if (covers) best = std::max(best, sum / (long double)len);
                }
            CHECK(M.at(i, j).real() == doctest::Approx((double)best).epsilon(1e-13));
        }
}

TEST_CASE("scale_family lists the projections in scale order") {
    const std::uint32_t n = 64;
    auto F = oracle::random_gaussian_field(n, 23);
    auto fam = make_family(make_mother_bump(), n, 1, 3);
    auto list = scale_family(F, fam, ProjKind::Q, 1);
    REQUIRE(list.size() == 3);
    for (int k = 1; k <= 3; ++k) {
        GridFunction2D direct = lp_projection(F, fam, ProjKind::Q, k, 1);
        CHECK(std::memcmp(list[std::size_t(k - 1)].data().data(), direct.data().data(),
                          direct.size() * sizeof(cplx)) == 0);
    }
    const double viaMixed = mixed_norm(list, {2.0, {2.0}});
    const double viaSquare = lp_norm(square_function(F, fam, ProjKind::Q, 1), 2.0);
    CHECK(std::abs(viaMixed - viaSquare) <= 1e-12 * viaSquare);
}
