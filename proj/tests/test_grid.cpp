#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "mpfw/grid.hpp"
#include "mpfw/io.hpp"
#include "oracles.hpp"

using namespace mpfw;

namespace {

double rel_diff(std::span<const cplx> a, std::span<const cplx> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        num += std::norm(a[t] - b[t]);
        den += std::norm(b[t]);
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

} // namespace

TEST_CASE("forward transform of the constant is a pure DC coefficient") {
    GridFunction2D F(8);
    for (auto& z : F.data()) z = cplx(1.0, 0.0);
    Spectrum2D S = forward_transform(F);
    CHECK(std::abs(S.at_freq(0, 0) - cplx(1.0, 0.0)) < 1e-14);
    double off = 0.0;
    for (std::uint32_t a = 0; a < 8; ++a)
        for (std::uint32_t b = 0; b < 8; ++b)
            if (a != 0 || b != 0) off = std::max(off, std::abs(S.at(a, b)));
    CHECK(off < 1e-14);
}

TEST_CASE("pure exponential concentrates on one frequency") {
    const std::uint32_t n = 32;
    GridFunction2D F(n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            const double ph = 2.0 * std::numbers::pi * (3.0 * i - 5.0 * j) / n;
            F.at(i, j) = std::polar(1.0, ph);
        }
    Spectrum2D S = forward_transform(F);
    CHECK(std::abs(S.at_freq(3, -5) - cplx(1.0, 0.0)) < 1e-12);
    double off = 0.0;
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b)
            if (!(S.freq_of(a) == 3 && S.freq_of(b) == -5))
                off = std::max(off, std::abs(S.at(a, b)));
    CHECK(off < 1e-12);
}

TEST_CASE("forward transform matches the direct Fourier sum at n = 8") {
    auto F = oracle::random_gaussian_field(8, 2026);
    Spectrum2D S = forward_transform(F);
    auto ref = oracle::dft2d(F);
    double worst = 0.0;
    for (std::size_t t = 0; t < ref.size(); ++t)
        worst = std::max(worst, std::abs(S.data()[t] - cplx((double)ref[t].real(),
                                                            (double)ref[t].imag())));
    CHECK(worst < 1e-12);
}

TEST_CASE("inverse transform matches the direct inverse sum at n = 8") {
    auto seedField = oracle::random_gaussian_field(8, 77);
    Spectrum2D S(8, std::vector<cplx>(seedField.data().begin(), seedField.data().end()));
    GridFunction2D F = inverse_transform(S);
    auto ref = oracle::idft2d(S);
    double worst = 0.0, scale = 0.0;
    for (std::size_t t = 0; t < ref.size(); ++t) {
        worst = std::max(worst, std::abs(F.data()[t] - cplx((double)ref[t].real(),
                                                            (double)ref[t].imag())));
        scale = std::max(scale, std::abs(F.data()[t]));
    }
    CHECK(worst < 1e-12 * std::max(1.0, scale));
}

TEST_CASE("inverse of the zero spectrum is zero, unit coefficient is an exponential") {
    Spectrum2D Z(16);
    GridFunction2D F0 = inverse_transform(Z);
    for (const auto& z : F0.data()) CHECK(std::abs(z) == 0.0);

    Spectrum2D S(16);
    S.at_freq(1, 0) = cplx(1.0, 0.0);
    GridFunction2D F = inverse_transform(S);
    for (std::uint32_t i = 0; i < 16; ++i)
        for (std::uint32_t j = 0; j < 16; ++j) {
            const cplx want = std::polar(1.0, 2.0 * std::numbers::pi * double(i) / 16.0);
            CHECK(std::abs(F.at(i, j) - want) < 1e-13);
        }
}

TEST_CASE("round trip is the identity across grid sizes") {
    for (std::uint32_t n : {8u, 16u, 32u, 64u, 128u, 256u}) {
        auto F = oracle::random_gaussian_field(n, 100 + n);
        GridFunction2D back = inverse_transform(forward_transform(F));
        CHECK(rel_diff(back.data(), F.data()) < 1e-12);
    }
}

TEST_CASE("Parseval holds to 1e-12") {
    auto F = oracle::random_gaussian_field(64, 5);
    Spectrum2D S = forward_transform(F);
    double e = 0.0;
    for (const auto& z : S.data()) e += std::norm(z);
    const double specNorm = std::sqrt(e);
    const double gridNorm = lp_norm(F, 2.0);
    CHECK(std::abs(gridNorm - specNorm) <= 1e-12 * gridNorm);
}

TEST_CASE("non-finite inputs are rejected with the offending index") {
    GridFunction2D F(8);
    F.at(3, 5) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
    CHECK_THROWS_WITH_AS(forward_transform(F), doctest::Contains("(3,5)"), std::invalid_argument);

    Spectrum2D S(8);
    S.at(2, 7) = cplx(0.0, std::numeric_limits<double>::infinity());
    CHECK_THROWS_WITH_AS(inverse_transform(S), doctest::Contains("(2,7)"), std::invalid_argument);
}

TEST_CASE("lp_norm basics") {
    GridFunction2D F(8);
    for (auto& z : F.data()) z = cplx(-2.5, 0.0);
    for (double p : {0.5, 1.0, 2.0, 3.0, kInf}) CHECK(lp_norm(F, p) == doctest::Approx(2.5).epsilon(1e-14));

    GridFunction2D cellF(8);
    cellF.at(4, 2) = cplx(1.0, 0.0);
    CHECK(lp_norm(cellF, 2.0) == doctest::Approx(0.125).epsilon(1e-14));

    CHECK_THROWS_AS(lp_norm(F, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(lp_norm(F, -1.0), std::invalid_argument);
}

TEST_CASE("lp_norm matches extended-precision summation") {
    auto F = oracle::random_gaussian_field(32, 9);
    for (double p : {1.0, 2.0, 3.0, 4.5}) {
        const long double ref = oracle::lp_norm(F, (long double)p);
        CHECK(std::abs(lp_norm(F, p) - (double)ref) <= 1e-13 * (double)ref);
    }
}

TEST_CASE("lp_norm is homogeneous and monotone in p on the unit-mass grid") {
    auto F = oracle::random_gaussian_field(16, 11);
    CHECK(lp_norm(F, 1.5) * 3.0 == doctest::Approx([&] {
              GridFunction2D G = F;
              for (auto& z : G.data()) z *= 3.0;
              return lp_norm(G, 1.5);
          }()).epsilon(1e-13));
    const double ps[] = {0.5, 1.0, 2.0, 3.0, 8.0, kInf};
    for (std::size_t i = 0; i + 1 < std::size(ps); ++i)
        CHECK(lp_norm(F, ps[i]) <= lp_norm(F, ps[i + 1]) * (1.0 + 1e-13));
}

TEST_CASE("weak_lp: trivial values and domination by the strong norm") {
    GridFunction2D Z(8);
    CHECK(weak_lp(Z, 1.0) == 0.0);

    GridFunction2D cellF(8);
    cellF.at(0, 0) = cplx(1.0, 0.0);
    CHECK(weak_lp(cellF, 1.0) == doctest::Approx(1.0 / 64.0).epsilon(1e-14));

    auto F = oracle::random_gaussian_field(32, 4);
    for (double p : {0.7, 1.0, 2.0, 4.0}) CHECK(weak_lp(F, p) <= lp_norm(F, p) * (1.0 + 1e-13));
    CHECK_THROWS_AS(weak_lp(F, 0.0), std::invalid_argument);
}

TEST_CASE("mixed_norm degenerate cases agree with lp_norm") {
    auto F = oracle::random_gaussian_field(16, 21);
    const GridFunction2D fam[] = {F};
    for (double p : {1.0, 2.0, 3.0, kInf}) {
        CHECK(mixed_norm(fam, {p, {}}) == doctest::Approx(lp_norm(F, p)).epsilon(1e-13));
        CHECK(mixed_norm(fam, {p, {2.0}}) == doctest::Approx(lp_norm(F, p)).epsilon(1e-13));
        CHECK(mixed_norm(fam, {p, {kInf}}) == doctest::Approx(lp_norm(F, p)).epsilon(1e-13));
        CHECK(mixed_norm(fam, {p, {kInf, 2.0}}) == doctest::Approx(lp_norm(F, p)).epsilon(1e-13));
    }
}

TEST_CASE("mixed_norm of disjointly supported members adds in quadrature") {
    GridFunction2D A(8), B(8);
    A.at(1, 1) = cplx(3.0, 0.0);
    B.at(5, 6) = cplx(4.0, 0.0);
    const GridFunction2D fam[] = {A, B};
    const double want = std::sqrt(lp_norm(A, 2.0) * lp_norm(A, 2.0) + lp_norm(B, 2.0) * lp_norm(B, 2.0));
    CHECK(mixed_norm(fam, {2.0, {2.0}}) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("mixed_norm L3(linf) matches a pointwise recomputation") {
    const std::uint32_t n = 16;
    GridFunction2D F0 = oracle::random_gaussian_field(n, 31);
    GridFunction2D F1 = oracle::random_gaussian_field(n, 32);
    GridFunction2D F2 = oracle::random_gaussian_field(n, 33);
    const GridFunction2D fam[] = {F0, F1, F2};
    long double acc = 0.0L;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            const long double m = std::max({std::abs(F0.at(i, j)), std::abs(F1.at(i, j)),
                                            std::abs(F2.at(i, j))});
            acc += m * m * m;
        }
    const double ref = (double)std::pow(acc / (long double)(n * n), 1.0L / 3.0L);
    CHECK(mixed_norm(fam, {3.0, {kInf}}) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("mixed_norm with a doubly indexed family") {
    // 2 outer blocks x 3 inner scales; compare against direct recomputation.
    const std::uint32_t n = 8;
    std::vector<GridFunction2D> fam;
    for (int k = 0; k < 6; ++k) fam.push_back(oracle::random_gaussian_field(n, 40 + k));
    const MixedNormSpec spec{2.0, {kInf, 2.0}};
    long double acc = 0.0L;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            long double best = 0.0L;
            for (int m = 0; m < 2; ++m) {
                long double s = 0.0L;
                for (int l = 0; l < 3; ++l) s += std::norm(fam[m * 3 + l].at(i, j));
                best = std::max(best, std::sqrt(s));
            }
            acc += best * best;
        }
    const double ref = (double)std::sqrt(acc / (long double)(n * n));
    CHECK(mixed_norm(fam, spec, 3) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("mixed_norm rejects malformed requests") {
    auto F = oracle::random_gaussian_field(8, 1);
    auto G = oracle::random_gaussian_field(16, 1);
    std::vector<GridFunction2D> fam;
    CHECK_THROWS_AS(mixed_norm(fam, {2.0, {2.0}}), std::invalid_argument);
    fam.push_back(F);
    fam.push_back(G);
    CHECK_THROWS_AS(mixed_norm(fam, {2.0, {2.0}}), std::invalid_argument);
    fam.pop_back();
    CHECK_THROWS_AS(mixed_norm(fam, {2.0, {2.0, 2.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(mixed_norm(fam, {2.0, {3.0}}), std::invalid_argument);
    CHECK_THROWS_AS(mixed_norm(fam, {0.0, {2.0}}), std::invalid_argument);
    fam.push_back(F);
    CHECK_THROWS_AS(mixed_norm(fam, {2.0, {}}), std::invalid_argument);
    CHECK_THROWS_AS(mixed_norm(fam, {2.0, {2.0, kInf}}, 4), std::invalid_argument);
}

TEST_CASE("random_field is deterministic in its key") {
    GridFunction2D A = random_field(123, 32, 1.5);
    GridFunction2D B = random_field(123, 32, 1.5);
    CHECK(std::memcmp(A.data().data(), B.data().data(), A.size() * sizeof(cplx)) == 0);
    GridFunction2D C = random_field(124, 32, 1.5);
    CHECK(std::memcmp(A.data().data(), C.data().data(), A.size() * sizeof(cplx)) != 0);
}

TEST_CASE("random_field with zero decay has a statistically flat spectrum") {
    // Sample variance of |coeff| across frequencies vs the Rayleigh value
    // 1 - pi/4, for 100 seeds at n = 128.
    const std::uint32_t n = 128;
    const double want = 1.0 - std::numbers::pi / 4.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Spectrum2D S = forward_transform(random_field(seed, n, 0.0));
        long double sum = 0.0L, sum2 = 0.0L;
        for (const auto& z : S.data()) {
            const long double m = std::abs(z);
            sum += m;
            sum2 += m * m;
        }
        const long double cnt = (long double)(S.size());
        const double var = (double)(sum2 / cnt - (sum / cnt) * (sum / cnt));
        CHECK(std::abs(var - want) < 0.2 * want);
    }
}

TEST_CASE("random_field decay concentrates spectral mass at low frequency") {
    Spectrum2D S = forward_transform(random_field(7, 64, 4.0));
    double high = 0.0, total = 0.0;
    for (std::uint32_t a = 0; a < 64; ++a)
        for (std::uint32_t b = 0; b < 64; ++b) {
            const double f1 = S.freq_of(a), f2 = S.freq_of(b);
            const double e = std::norm(S.at(a, b));
            total += e;
            if (std::hypot(f1, f2) >= 16.0) high += e;
        }
    CHECK(std::sqrt(high / total) < 0.1);
}

TEST_CASE("random_field real mode yields real samples with a symmetric spectrum") {
    GridFunction2D F = random_field(55, 32, 1.0, true);
    for (const auto& z : F.data()) CHECK(z.imag() == 0.0);
    Spectrum2D S = forward_transform(F);
    double worst = 0.0;
    for (std::uint32_t a = 0; a < 32; ++a)
        for (std::uint32_t b = 0; b < 32; ++b) {
            const cplx lhs = S.at(a, b);
            const cplx rhs = std::conj(S.at((32 - a) % 32, (32 - b) % 32));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    CHECK(worst < 1e-12);
}

TEST_CASE("MPFW1 files round-trip bit-exactly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mpfw_io_test";
    fs::create_directories(dir);

    GridFunction2D F = random_field(9, 16, 0.5);
    const std::string fpath = (dir / "f.mpfw").string();
    write_field(fpath, F);
    GridFunction2D F2 = read_field(fpath);
    CHECK(F2.n() == F.n());
    CHECK(std::memcmp(F.data().data(), F2.data().data(), F.size() * sizeof(cplx)) == 0);

    Spectrum2D S = forward_transform(F);
    const std::string spath = (dir / "s.mpfw").string();
    write_spectrum(spath, S);
    Spectrum2D S2 = read_spectrum(spath);
    CHECK(std::memcmp(S.data().data(), S2.data().data(), S.size() * sizeof(cplx)) == 0);

    CHECK_THROWS_AS(read_spectrum(fpath), std::runtime_error);
    CHECK_THROWS_AS(read_field(spath), std::runtime_error);
    CHECK(std::holds_alternative<GridFunction2D>(read_mpfw(fpath)));
    CHECK(std::holds_alternative<Spectrum2D>(read_mpfw(spath)));

    std::ofstream bad((dir / "bad.mpfw").string(), std::ios::binary);
    bad << "NOTMW1xxxx";
    bad.close();
    CHECK_THROWS_AS(read_field((dir / "bad.mpfw").string()), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("grid construction validates sizes") {
    CHECK_THROWS_AS(GridFunction2D(6), std::invalid_argument);
    CHECK_THROWS_AS(GridFunction2D(4), std::invalid_argument);
    CHECK_THROWS_AS(Spectrum2D(12), std::invalid_argument);
    CHECK_THROWS_AS(GridFunction2D(8, std::vector<cplx>(63)), std::invalid_argument);
}
