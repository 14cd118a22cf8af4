#include "mpfw/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace mpfw {

namespace {

void check_match(std::uint32_t n, std::uint32_t other, const char* op, const char* what) {
    if (other != n)
        throw std::invalid_argument(std::string(op) + ": " + what + " size " +
                                    std::to_string(other) + " does not match grid size " +
                                    std::to_string(n));
}

std::string window_str(const DyadicSymbolFamily& f) {
    return "[" + std::to_string(f.k_min()) + ", " + std::to_string(f.k_max()) + "]";
}

void check_shared_window(const DyadicSymbolFamily& ref, const DyadicSymbolFamily& f,
                         const char* op) {
    if (ref.k_min() != f.k_min() || ref.k_max() != f.k_max())
        throw std::invalid_argument(std::string(op) + ": scale windows differ: " +
                                    window_str(ref) + " vs " + window_str(f));
}

std::vector<cplx> unit_roots(std::uint32_t n) {
    std::vector<cplx> w(n);
    for (std::uint32_t t = 0; t < n; ++t) {
        const double ph = 2.0 * std::numbers::pi * double(t) / double(n);
        w[t] = cplx(std::cos(ph), std::sin(ph));
    }
    return w;
}

void mult_axis(Spectrum2D& S, const Symbol1D& sym, int axis) {
    const std::uint32_t n = S.n();
    if (axis == 1) {
        for (std::uint32_t a = 0; a < n; ++a) {
            const cplx s = sym.at(a);
            for (std::uint32_t b = 0; b < n; ++b) S.at(a, b) *= s;
        }
    } else {
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = 0; b < n; ++b) S.at(a, b) *= sym.at(b);
    }
}

// Composite fiber projection: multiply the spectrum by the given per-axis
// symbols (either may be absent) and return to physical space.
GridFunction2D proj2(const Spectrum2D& S, const Symbol1D* ax1, const Symbol1D* ax2) {
    Spectrum2D t = S;
    if (ax1) mult_axis(t, *ax1, 1);
    if (ax2) mult_axis(t, *ax2, 2);
    return inverse_transform(t);
}

void accumulate_product(GridFunction2D& out, const GridFunction2D& A, const GridFunction2D& B) {
    auto o = out.data();
    auto a = A.data();
    auto b = B.data();
    for (std::size_t t = 0; t < o.size(); ++t) o[t] += a[t] * b[t];
}

void accumulate_product(GridFunction2D& out, const GridFunction2D& A, const GridFunction2D& B,
                        const GridFunction2D& C) {
    auto o = out.data();
    auto a = A.data();
    auto b = B.data();
    auto c = C.data();
    for (std::size_t t = 0; t < o.size(); ++t) o[t] += a[t] * b[t] * c[t];
}

} // namespace

Symbol2D::Symbol2D(std::uint32_t n) : n_(n), sup_(0.0) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("Symbol2D: grid size must be a power of two and at least 8");
    v_.assign(std::size_t(n) * n, cplx(0.0, 0.0));
}

Symbol2D::Symbol2D(std::uint32_t n, std::vector<cplx> values) : n_(n), v_(std::move(values)) {
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("Symbol2D: grid size must be a power of two and at least 8");
    if (v_.size() != std::size_t(n) * n)
        throw std::invalid_argument("Symbol2D: expected " + std::to_string(std::size_t(n) * n) +
                                    " values, got " + std::to_string(v_.size()));
    sup_ = 0.0;
    for (std::size_t t = 0; t < v_.size(); ++t) {
        if (!std::isfinite(v_[t].real()) || !std::isfinite(v_[t].imag()))
            throw std::invalid_argument("Symbol2D: non-finite value at (" +
                                        std::to_string(t / n) + ", " + std::to_string(t % n) +
                                        ")");
        sup_ = std::max(sup_, std::abs(v_[t]));
    }
}

const cplx& Symbol2D::at_freq(std::int32_t f1, std::int32_t f2) const {
    const std::int32_t half = std::int32_t(n_) / 2;
    if (f1 < -half || f1 >= half || f2 < -half || f2 >= half)
        throw std::out_of_range("Symbol2D: frequency (" + std::to_string(f1) + ", " +
                                std::to_string(f2) + ") outside [-" + std::to_string(half) +
                                ", " + std::to_string(half) + ")");
    const std::uint32_t a = f1 >= 0 ? std::uint32_t(f1) : std::uint32_t(f1 + std::int32_t(n_));
    const std::uint32_t b = f2 >= 0 ? std::uint32_t(f2) : std::uint32_t(f2 + std::int32_t(n_));
    return at(a, b);
}

Symbol2D make_symbol2d(std::uint32_t n,
                       const std::function<cplx(std::int32_t, std::int32_t)>& f) {
    if (!f) throw std::invalid_argument("make_symbol2d: evaluator is empty");
    if (!is_pow2(n) || n < 8)
        throw std::invalid_argument("make_symbol2d: grid size must be a power of two and at least 8");
    std::vector<cplx> v(std::size_t(n) * n);
    for (std::uint32_t a = 0; a < n; ++a) {
        const std::int32_t f1 = a < n / 2 ? std::int32_t(a) : std::int32_t(a) - std::int32_t(n);
        for (std::uint32_t b = 0; b < n; ++b) {
            const std::int32_t f2 =
                b < n / 2 ? std::int32_t(b) : std::int32_t(b) - std::int32_t(n);
            v[std::size_t(a) * n + b] = f(f1, f2);
        }
    }
    return Symbol2D(n, std::move(v));
}

Symbol1D ray_restriction(const Symbol2D& m, int d1, int d2) {
    if (d1 == 0 && d2 == 0)
        throw std::invalid_argument("ray_restriction: direction must be nonzero");
    const std::uint32_t n = m.n();
    const std::int64_t half = std::int64_t(n) / 2;
    std::vector<cplx> v(n, cplx(0.0, 0.0));
    for (std::uint32_t a = 0; a < n; ++a) {
        const std::int64_t t = a < n / 2 ? std::int64_t(a) : std::int64_t(a) - std::int64_t(n);
        const std::int64_t p1 = t * d1;
        const std::int64_t p2 = t * d2;
        if (p1 >= -half && p1 < half && p2 >= -half && p2 < half)
            v[a] = m.at_freq(std::int32_t(p1), std::int32_t(p2));
    }
    return Symbol1D(n, std::move(v));
}

GridFunction2D bilinear_direct(const GridFunction2D& F1, const GridFunction2D& F2,
                               const Symbol4D& m) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "bilinear_direct", "second input");
    check_match(n, m.n, "bilinear_direct", "multiplier");
    if (!m.eval) throw std::invalid_argument("bilinear_direct: multiplier evaluator is empty");
    if (n > 32)
        throw std::invalid_argument(
            "bilinear_direct: direct summation is limited to n <= 32, got n = " +
            std::to_string(n) +
            "; use twisted_paraproduct, tensor_bilinear, or a scale-window operator instead");
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    std::vector<std::int32_t> fr(n);
    for (std::uint32_t a = 0; a < n; ++a) fr[a] = S1.freq_of(a);
    Spectrum2D out(n);
    for (std::uint32_t w1 = 0; w1 < n; ++w1) {
        for (std::uint32_t w2 = 0; w2 < n; ++w2) {
            cplx acc(0.0, 0.0);
            for (std::uint32_t a1 = 0; a1 < n; ++a1) {
                const std::uint32_t e1 = (w1 + n - a1) % n;
                for (std::uint32_t a2 = 0; a2 < n; ++a2) {
                    const std::uint32_t e2 = (w2 + n - a2) % n;
                    const cplx mv = m.eval(fr[a1], fr[a2], fr[e1], fr[e2]);
                    if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag()))
                        throw std::domain_error(
                            "bilinear_direct: multiplier value at ((" + std::to_string(fr[a1]) +
                            ", " + std::to_string(fr[a2]) + "), (" + std::to_string(fr[e1]) +
                            ", " + std::to_string(fr[e2]) + ")) is not finite");
                    acc += S1.at(a1, a2) * S2.at(e1, e2) * mv;
                }
            }
            out.at(w1, w2) = acc;
        }
    }
    return inverse_transform(out);
}

GridFunction2D twisted_paraproduct(const GridFunction2D& F1, const GridFunction2D& F2,
                                   const Symbol2D& m1) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "twisted_paraproduct", "second input");
    check_match(n, m1.n(), "twisted_paraproduct", "symbol");
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    // K(xi1, x2): partial inverse of the first spectrum along its second axis.
    std::vector<cplx> K(S1.data().begin(), S1.data().end());
    for (std::uint32_t a = 0; a < n; ++a) detail::fft_pow2(K.data() + std::size_t(a) * n, n, 1, +1);
    // H(x1, eta2): partial inverse of the second spectrum along its first axis.
    std::vector<cplx> H(S2.data().begin(), S2.data().end());
    for (std::uint32_t b = 0; b < n; ++b) detail::fft_pow2(H.data() + b, n, n, +1);
    const std::vector<cplx> w = unit_roots(n);
    GridFunction2D out(n);
    std::vector<cplx> fiber(n);
    for (std::uint32_t b2 = 0; b2 < n; ++b2) {
        for (std::uint32_t x2 = 0; x2 < n; ++x2) {
            for (std::uint32_t a1 = 0; a1 < n; ++a1)
                fiber[a1] = m1.at(a1, b2) * K[std::size_t(a1) * n + x2];
            detail::fft_pow2(fiber.data(), n, 1, +1);
            const cplx ph = w[(std::size_t(x2) * b2) % n];
            for (std::uint32_t x1 = 0; x1 < n; ++x1)
                out.at(x1, x2) += fiber[x1] * H[std::size_t(x1) * n + b2] * ph;
        }
    }
    return out;
}

GridFunction2D tensor_bilinear(const GridFunction2D& F1, const GridFunction2D& F2,
                               const Symbol2D& m1, const Symbol2D& m2) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "tensor_bilinear", "second input");
    check_match(n, m1.n(), "tensor_bilinear", "first symbol");
    check_match(n, m2.n(), "tensor_bilinear", "second symbol");
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    // Transpose so the fiber over the first frequency index is contiguous.
    std::vector<cplx> t1(std::size_t(n) * n), t2(std::size_t(n) * n);
    for (std::uint32_t a = 0; a < n; ++a)
        for (std::uint32_t b = 0; b < n; ++b) {
            t1[std::size_t(b) * n + a] = S1.at(a, b);
            t2[std::size_t(b) * n + a] = S2.at(a, b);
        }
    std::vector<cplx> A(std::size_t(n) * n, cplx(0.0, 0.0)); // indexed (x1, xi2+eta2 mod n)
    std::vector<cplx> u(n), v(n);
    for (std::uint32_t b2 = 0; b2 < n; ++b2) {
        const cplx* s2row = &t2[std::size_t(b2) * n];
        for (std::uint32_t a2 = 0; a2 < n; ++a2) {
            const cplx* s1row = &t1[std::size_t(a2) * n];
            for (std::uint32_t t = 0; t < n; ++t) u[t] = s1row[t] * m1.at(t, b2);
            for (std::uint32_t t = 0; t < n; ++t) v[t] = s2row[t] * m2.at(a2, t);
            detail::fft_pow2(u.data(), n, 1, +1);
            detail::fft_pow2(v.data(), n, 1, +1);
            const std::uint32_t tau = (a2 + b2) % n;
            for (std::uint32_t x1 = 0; x1 < n; ++x1) A[std::size_t(x1) * n + tau] += u[x1] * v[x1];
        }
    }
    for (std::uint32_t x1 = 0; x1 < n; ++x1)
        detail::fft_pow2(A.data() + std::size_t(x1) * n, n, 1, +1);
    return GridFunction2D(n, std::move(A));
}

GridFunction2D T1(const GridFunction2D& F1, const GridFunction2D& F2,
                  const DyadicSymbolFamily& fam1, const DyadicSymbolFamily& fam2) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "T1", "second input");
    check_match(n, fam1.n(), "T1", "first family");
    check_match(n, fam2.n(), "T1", "second family");
    check_shared_window(fam1, fam2, "T1");
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    GridFunction2D out(n);
    for (int l = fam1.k_min(); l <= fam1.k_max(); ++l) {
        for (int k = fam1.k_min(); k <= l; ++k) {
            const GridFunction2D A = proj2(S1, &fam1.psi(k), &fam2.phi(l));
            const GridFunction2D B = proj2(S2, &fam2.psi(l), &fam1.phi(k));
            accumulate_product(out, A, B);
        }
    }
    out.set_scale_window(fam1.k_min(), fam1.k_max());
    return out;
}

GridFunction2D T2(const GridFunction2D& F1, const GridFunction2D& F2,
                  const DyadicSymbolFamily& fam1, const DyadicSymbolFamily& fam2) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "T2", "second input");
    check_match(n, fam1.n(), "T2", "first family");
    check_match(n, fam2.n(), "T2", "second family");
    check_shared_window(fam1, fam2, "T2");
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    GridFunction2D out(n);
    for (int l = fam1.k_min(); l <= fam1.k_max(); ++l) {
        for (int k = fam1.k_min(); k <= l; ++k) {
            const GridFunction2D A = proj2(S1, &fam1.phi(k), &fam2.phi(l));
            const GridFunction2D B = proj2(S2, &fam2.psi(l), &fam1.psi(k));
            accumulate_product(out, A, B);
        }
    }
    out.set_scale_window(fam1.k_min(), fam1.k_max());
    return out;
}

namespace {

void check_roles(const std::vector<FiberRole>& slot, const char* name, std::size_t fam_count) {
    if (slot.empty())
        throw std::invalid_argument(std::string("one_param_generic: ") + name + " has no roles");
    if (slot.size() > 2)
        throw std::invalid_argument(std::string("one_param_generic: ") + name +
                                    " has more than two roles");
    for (const FiberRole& r : slot) {
        if (r.axis != 1 && r.axis != 2)
            throw std::invalid_argument(std::string("one_param_generic: ") + name +
                                        " uses axis " + std::to_string(r.axis) +
                                        "; axes are 1 and 2");
        if (r.family >= fam_count)
            throw std::invalid_argument(std::string("one_param_generic: ") + name +
                                        " references family " + std::to_string(r.family) +
                                        " but only " + std::to_string(fam_count) +
                                        " were given");
    }
    if (slot.size() == 2 && slot[0].axis == slot[1].axis)
        throw std::invalid_argument(std::string("one_param_generic: ") + name +
                                    " has two roles on axis " + std::to_string(slot[0].axis));
}

} // namespace

GridFunction2D one_param_generic(const GridFunction2D& F1, const GridFunction2D& F2,
                                 const RolePattern& roles,
                                 std::span<const DyadicSymbolFamily> fams) {
    if (fams.empty()) throw std::invalid_argument("one_param_generic: no families given");
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "one_param_generic", "second input");
    for (std::size_t f = 0; f < fams.size(); ++f) {
        check_match(n, fams[f].n(), "one_param_generic", "family");
        check_shared_window(fams[0], fams[f], "one_param_generic");
    }
    check_roles(roles.slot1, "slot 1", fams.size());
    check_roles(roles.slot2, "slot 2", fams.size());
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    GridFunction2D out(n);
    for (int k = fams[0].k_min(); k <= fams[0].k_max(); ++k) {
        const Symbol1D* s1[2] = {nullptr, nullptr};
        const Symbol1D* s2[2] = {nullptr, nullptr};
        for (const FiberRole& r : roles.slot1)
            s1[r.axis - 1] =
                r.kind == ProjKind::P ? &fams[r.family].phi(k) : &fams[r.family].psi(k);
        for (const FiberRole& r : roles.slot2)
            s2[r.axis - 1] =
                r.kind == ProjKind::P ? &fams[r.family].phi(k) : &fams[r.family].psi(k);
        const GridFunction2D A = proj2(S1, s1[0], s1[1]);
        const GridFunction2D B = proj2(S2, s2[0], s2[1]);
        accumulate_product(out, A, B);
    }
    out.set_scale_window(fams[0].k_min(), fams[0].k_max());
    return out;
}

GridFunction2D case7_operator(const GridFunction2D& F1, const GridFunction2D& F2, int variant,
                              std::span<const DyadicSymbolFamily> fams) {
    if (fams.size() != 3)
        throw std::invalid_argument(
            "case7_operator: need exactly 3 families (two indexed low-pass families then the "
            "annular family), got " +
            std::to_string(fams.size()));
    RolePattern r;
    switch (variant) {
    case 1:
        r.slot1 = {{ProjKind::Q, 1, 2}, {ProjKind::P, 2, 0}};
        r.slot2 = {{ProjKind::P, 1, 1}};
        break;
    case 2:
        r.slot1 = {{ProjKind::P, 1, 0}, {ProjKind::P, 2, 1}};
        r.slot2 = {{ProjKind::Q, 1, 2}};
        break;
    case 3:
        r.slot1 = {{ProjKind::P, 1, 0}, {ProjKind::Q, 2, 2}};
        r.slot2 = {{ProjKind::P, 1, 1}};
        break;
    default:
        throw std::invalid_argument("case7_operator: unknown variant " + std::to_string(variant) +
                                    "; valid variants are 1, 2, 3");
    }
    return one_param_generic(F1, F2, r, fams);
}

std::vector<GridFunction2D> max_truncated_twist(const GridFunction2D& F1,
                                                const GridFunction2D& F2,
                                                const DyadicSymbolFamily& fam,
                                                std::span<const int> truncations) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "max_truncated_twist", "second input");
    check_match(n, fam.n(), "max_truncated_twist", "family");
    const int k_min = fam.k_min();
    const int k_max = fam.k_max();
    const int center = (k_min + k_max) / 2;
    const int max_half = std::max(center - k_min, k_max - center) + 1;
    int top = 0;
    for (const int N : truncations) {
        if (N < 0)
            throw std::invalid_argument("max_truncated_twist: negative truncation " +
                                        std::to_string(N));
        if (N > max_half)
            throw std::invalid_argument("max_truncated_twist: truncation " + std::to_string(N) +
                                        " exceeds the scale window; largest usable value is " +
                                        std::to_string(max_half));
        top = std::max(top, N);
    }
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    GridFunction2D partial(n);
    GridFunction2D best(n);
    std::vector<GridFunction2D> by_level;
    by_level.reserve(std::size_t(top) + 1);
    by_level.push_back(best); // level 0: empty sum
    for (int level = 1; level <= top; ++level) {
        const int off = level - 1;
        std::vector<int> shell;
        if (off == 0)
            shell = {0};
        else
            shell = {-off, off};
        for (const int k : shell) {
            const int s = center + k;
            if (s < k_min || s > k_max) continue;
            const GridFunction2D A = proj2(S1, &fam.phi(s), nullptr);
            const GridFunction2D B = proj2(S2, nullptr, &fam.psi(s));
            accumulate_product(partial, A, B);
        }
        auto bst = best.data();
        auto prt = partial.data();
        for (std::size_t t = 0; t < bst.size(); ++t)
            bst[t] = cplx(std::max(bst[t].real(), std::abs(prt[t])), 0.0);
        by_level.push_back(best);
    }
    std::vector<GridFunction2D> out;
    out.reserve(truncations.size());
    for (const int N : truncations) {
        GridFunction2D g = by_level[std::size_t(N)];
        g.set_scale_window(k_min, k_max);
        out.push_back(std::move(g));
    }
    return out;
}

GridFunction2D tripletwist(const GridFunction2D& F1, const GridFunction2D& F2,
                           const GridFunction2D& F3, const Symbol2D& m1, const Symbol2D& m2,
                           const Symbol2D& m3) {
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), "tripletwist", "second input");
    check_match(n, F3.n(), "tripletwist", "third input");
    check_match(n, m1.n(), "tripletwist", "first symbol");
    check_match(n, m2.n(), "tripletwist", "second symbol");
    check_match(n, m3.n(), "tripletwist", "third symbol");
    if (n > 16)
        throw std::invalid_argument(
            "tripletwist: the direct triple sum is limited to n <= 16, got n = " +
            std::to_string(n) +
            "; decompose the symbols into cones and use the scale-sum route instead");
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    const Spectrum2D S3 = forward_transform(F3);
    Spectrum2D acc(n);
    for (std::uint32_t a1 = 0; a1 < n; ++a1) {
        for (std::uint32_t a2 = 0; a2 < n; ++a2) {
            const cplx s1 = S1.at(a1, a2);
            if (s1 == cplx(0.0, 0.0)) continue;
            for (std::uint32_t b1 = 0; b1 < n; ++b1) {
                for (std::uint32_t b2 = 0; b2 < n; ++b2) {
                    const cplx pab = s1 * S2.at(b1, b2) * m1.at(a1, b2);
                    for (std::uint32_t c1 = 0; c1 < n; ++c1) {
                        const std::uint32_t w1 = (a1 + b1 + c1) % n;
                        const cplx m3v = m3.at(c1, a2);
                        for (std::uint32_t c2 = 0; c2 < n; ++c2) {
                            const std::uint32_t w2 = (a2 + b2 + c2) % n;
                            acc.at(w1, w2) += pab * S3.at(c1, c2) * m2.at(b1, c2) * m3v;
                        }
                    }
                }
            }
        }
    }
    return inverse_transform(acc);
}

namespace {

GridFunction2D u_scale_sum(const GridFunction2D& F1, const GridFunction2D& F2,
                           const GridFunction2D& F3, std::span<const DyadicSymbolFamily> fams,
                           bool annular_first_slot, const char* op) {
    if (fams.size() != 6)
        throw std::invalid_argument(std::string(op) + ": need exactly 6 families, got " +
                                    std::to_string(fams.size()));
    const std::uint32_t n = F1.n();
    check_match(n, F2.n(), op, "second input");
    check_match(n, F3.n(), op, "third input");
    for (std::size_t f = 0; f < fams.size(); ++f) {
        check_match(n, fams[f].n(), op, "family");
        check_shared_window(fams[0], fams[f], op);
    }
    const int k_min = fams[0].k_min();
    const int k_max = fams[0].k_max();
    const std::size_t W = std::size_t(k_max - k_min + 1);
    const Spectrum2D S1 = forward_transform(F1);
    const Spectrum2D S2 = forward_transform(F2);
    const Spectrum2D S3 = forward_transform(F3);
    // Third factor depends on (m, l): table of W^2 fields, built once.
    std::vector<GridFunction2D> C;
    C.reserve(W * W);
    for (int m = k_min; m <= k_max; ++m)
        for (int l = k_min; l <= k_max; ++l)
            C.push_back(proj2(S3, &fams[2].psi(m), &fams[5].phi(l)));
    GridFunction2D out(n);
    for (int k = k_min; k <= k_max; ++k) {
        // First factor at this k, per m; second factor at this k, per l.
        std::vector<GridFunction2D> A, B;
        A.reserve(W);
        B.reserve(W);
        for (int m = k_min; m <= k_max; ++m)
            A.push_back(annular_first_slot ? proj2(S1, &fams[0].psi(k), &fams[3].phi(m))
                                           : proj2(S1, &fams[4].phi(k), &fams[3].phi(m)));
        for (int l = k_min; l <= k_max; ++l)
            B.push_back(annular_first_slot ? proj2(S2, &fams[1].psi(l), &fams[4].phi(k))
                                           : proj2(S2, &fams[1].psi(l), &fams[0].psi(k)));
        for (int l = k_min; l <= k_max; ++l)
            for (int m = k_min; m <= k_max; ++m)
                accumulate_product(out, A[std::size_t(m - k_min)], B[std::size_t(l - k_min)],
                                   C[std::size_t(m - k_min) * W + std::size_t(l - k_min)]);
    }
    out.set_scale_window(k_min, k_max);
    return out;
}

} // namespace

GridFunction2D U1(const GridFunction2D& F1, const GridFunction2D& F2, const GridFunction2D& F3,
                  std::span<const DyadicSymbolFamily> fams) {
    return u_scale_sum(F1, F2, F3, fams, true, "U1");
}

GridFunction2D U2(const GridFunction2D& F1, const GridFunction2D& F2, const GridFunction2D& F3,
                  std::span<const DyadicSymbolFamily> fams) {
    return u_scale_sum(F1, F2, F3, fams, false, "U2");
}

} // namespace mpfw
