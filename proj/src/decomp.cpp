#include "mpfw/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "fft.hpp"

namespace mpfw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver (cyclic Jacobi). The matrices here are small
// penalty-scaled Gram matrices, (2M+1) square, so no external solver is
// warranted.

struct EigenSystem {
    std::vector<double> values;  // m entries
    std::vector<double> vectors; // row-major, column j = eigenvector j
};

EigenSystem jacobi_symmetric(std::vector<double> A, int m) {
    std::vector<double> V(std::size_t(m) * m, 0.0);
    for (int i = 0; i < m; ++i) V[std::size_t(i) * m + i] = 1.0;
    auto off_norm = [&]() {
        double s = 0.0;
        for (int p = 0; p < m; ++p)
            for (int q = p + 1; q < m; ++q) s += A[std::size_t(p) * m + q] * A[std::size_t(p) * m + q];
        return std::sqrt(2.0 * s);
    };
    double scale = 0.0;
    for (double a : A) scale = std::max(scale, std::abs(a));
    if (scale == 0.0) return {std::vector<double>(m, 0.0), std::move(V)};
    const double tol = 1e-15 * scale * m;
    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < m - 1; ++p) {
            for (int q = p + 1; q < m; ++q) {
                const double apq = A[std::size_t(p) * m + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (A[std::size_t(q) * m + q] - A[std::size_t(p) * m + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                A[std::size_t(p) * m + p] -= t * apq;
                A[std::size_t(q) * m + q] += t * apq;
                A[std::size_t(p) * m + q] = 0.0;
                A[std::size_t(q) * m + p] = 0.0;
                for (int i = 0; i < m; ++i) {
                    if (i != p && i != q) {
                        const double aip = A[std::size_t(i) * m + p];
                        const double aiq = A[std::size_t(i) * m + q];
                        A[std::size_t(i) * m + p] = A[std::size_t(p) * m + i] = c * aip - s * aiq;
                        A[std::size_t(i) * m + q] = A[std::size_t(q) * m + i] = s * aip + c * aiq;
                    }
                    const double vip = V[std::size_t(i) * m + p];
                    const double viq = V[std::size_t(i) * m + q];
                    V[std::size_t(i) * m + p] = c * vip - s * viq;
                    V[std::size_t(i) * m + q] = s * vip + c * viq;
                }
            }
        }
    }
    if (off_norm() > tol)
        throw std::runtime_error("cone_decompose: Jacobi eigensolver failed to converge");
    std::vector<double> lam(m);
    for (int i = 0; i < m; ++i) lam[i] = A[std::size_t(i) * m + i];
    return {std::move(lam), std::move(V)};
}

// ---------------------------------------------------------------------------
// Per-axis least-squares machinery. For each axis weight w the Gram matrix
// G[a,b] = (1/L) int w(u) e^{-2 pi i (n_a - n_b) u / L} du is assembled from
// the cosine transform of w (w is even), then solved jointly with the
// diagonal mode penalty d(n) = (1 + |n|)^p through one symmetric
// eigendecomposition of D^{-1/2} G D^{-1/2}.

struct AxisSystem {
    int m = 0;                   // 2M + 1
    std::vector<double> lambda;  // generalized eigenvalues
    std::vector<double> V;       // row-major; columns satisfy V^T G V = diag(lambda), V^T D V = I
};

template <class Weight>
std::vector<double> gram_matrix(const Weight& w, int modes, double box_len) {
    const int m = 2 * modes + 1;
    const int Q = 4096;
    std::vector<double> wval(Q), node(Q);
    for (int q = 0; q < Q; ++q) {
        node[q] = -box_len / 2.0 + q * (box_len / Q);
        wval[q] = w(node[q]);
    }
    std::vector<double> wh(std::size_t(4) * modes + 1);
    for (int j = -2 * modes; j <= 2 * modes; ++j) {
        double acc = 0.0;
        for (int q = 0; q < Q; ++q) acc += wval[q] * std::cos(kTwoPi * j * node[q] / box_len);
        wh[std::size_t(j + 2 * modes)] = acc / Q;
    }
    std::vector<double> G(std::size_t(m) * m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) G[std::size_t(a) * m + b] = wh[std::size_t(a - b + 2 * modes)];
    return G;
}

template <class Weight>
AxisSystem axis_system(const Weight& w, int modes, double box_len, double penalty_power) {
    const int m = 2 * modes + 1;
    std::vector<double> dis(m);
    for (int i = 0; i < m; ++i)
        dis[i] = 1.0 / std::sqrt(std::pow(1.0 + std::abs(i - modes), penalty_power));
    std::vector<double> B = gram_matrix(w, modes, box_len);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) B[std::size_t(a) * m + b] *= dis[a] * dis[b];
    EigenSystem eig = jacobi_symmetric(std::move(B), m);
    AxisSystem sys;
    sys.m = m;
    sys.lambda = std::move(eig.values);
    sys.V = std::move(eig.vectors);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sys.V[std::size_t(i) * m + j] *= dis[i];
    return sys;
}

// Solves (G1 x G2 + alpha D1 x D2) c = rhs in the joint eigenbasis.
std::vector<cplx> penalized_solve(const AxisSystem& s1, const AxisSystem& s2,
                                  const std::vector<cplx>& rhs, double alpha) {
    const int m = s1.m;
    std::vector<cplx> t1(std::size_t(m) * m, cplx(0.0, 0.0));
    std::vector<cplx> y(std::size_t(m) * m, cplx(0.0, 0.0));
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < m; ++a) {
            const double v = s1.V[std::size_t(a) * m + i];
            if (v == 0.0) continue;
            for (int j = 0; j < m; ++j) t1[std::size_t(i) * m + j] += v * rhs[std::size_t(a) * m + j];
        }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            cplx acc(0.0, 0.0);
            for (int b = 0; b < m; ++b) acc += t1[std::size_t(i) * m + b] * s2.V[std::size_t(b) * m + j];
            y[std::size_t(i) * m + j] = acc / (s1.lambda[i] * s2.lambda[j] + alpha);
        }
    std::vector<cplx> t2(std::size_t(m) * m, cplx(0.0, 0.0));
    for (int a = 0; a < m; ++a)
        for (int i = 0; i < m; ++i) {
            const double v = s1.V[std::size_t(a) * m + i];
            if (v == 0.0) continue;
            for (int j = 0; j < m; ++j) t2[std::size_t(a) * m + j] += v * y[std::size_t(i) * m + j];
        }
    std::vector<cplx> c(std::size_t(m) * m, cplx(0.0, 0.0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            cplx acc(0.0, 0.0);
            for (int j = 0; j < m; ++j) acc += t2[std::size_t(a) * m + j] * s2.V[std::size_t(b) * m + j];
            c[std::size_t(a) * m + b] = acc;
        }
    return c;
}

double psi_env(const BumpProfile& p, double u) { return p(u) - p(2.0 * u); }

// Envelope factors of a cone piece in the rescaled variable u = 2^-k zeta.
double env_axis1(const BumpProfile& p, Cone cone, double u) {
    return cone == Cone::lower ? p(u) : psi_env(p, u);
}
double env_axis2(const BumpProfile& p, Cone cone, double u) {
    return cone == Cone::lower ? psi_env(p, u) : p(2.0 * u);
}

// Catmull-Rom interpolation through four equally spaced samples.
cplx catmull_rom(const cplx p[4], double t) {
    return 0.5 * (2.0 * p[1] + (p[2] - p[0]) * t +
                  (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * (t * t) +
                  (3.0 * p[1] - p[0] - 3.0 * p[2] + p[3]) * (t * t * t));
}

cplx bicubic_table_eval(const Symbol2D& m, double z1, double z2) {
    const std::int32_t half = std::int32_t(m.n() / 2);
    auto clamped = [&](std::int32_t f) { return std::clamp(f, -half, half - 1); };
    const double f1 = std::floor(z1), f2 = std::floor(z2);
    const auto i0 = std::int32_t(f1);
    const auto j0 = std::int32_t(f2);
    const double t1 = z1 - f1, t2 = z2 - f2;
    cplx col[4];
    for (int di = -1; di <= 2; ++di) {
        cplx row[4];
        for (int dj = -1; dj <= 2; ++dj)
            row[dj + 1] = m.at_freq(clamped(i0 + di), clamped(j0 + dj));
        col[di + 1] = catmull_rom(row, t2);
    }
    return catmull_rom(col, t1);
}

DecayReport make_decay_report(const std::vector<ConeBlock>& blocks, int modes) {
    const int m = 2 * modes + 1;
    std::vector<double> peak1(std::size_t(modes) + 1, 0.0), peak2(std::size_t(modes) + 1, 0.0);
    DecayReport rep;
    for (const ConeBlock& blk : blocks) {
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                const double mag = std::abs(blk.c[std::size_t(a) * m + b]);
                const int i1 = std::abs(a - modes), i2 = std::abs(b - modes);
                peak1[std::size_t(i1)] = std::max(peak1[std::size_t(i1)], mag);
                peak2[std::size_t(i2)] = std::max(peak2[std::size_t(i2)], mag);
                rep.c_two = std::max(rep.c_two, mag * (1.0 + i1) * (1.0 + i1) * (1.0 + i2) * (1.0 + i2));
            }
    }
    auto fit = [&](const std::vector<double>& peak) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int cnt = 0;
        for (int i = 1; i <= modes; ++i) {
            if (peak[std::size_t(i)] <= 1e-300) continue;
            const double x = std::log1p(double(i)), y = std::log(peak[std::size_t(i)]);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++cnt;
        }
        if (cnt < 2) return 0.0;
        const double den = sxx - sx * sx / cnt;
        if (den <= 0.0) return 0.0;
        return -(sxy - sx * sy / cnt) / den;
    };
    rep.exponent_n1 = fit(peak1);
    rep.exponent_n2 = fit(peak2);
    return rep;
}

int widest_top_scale(double support_radius, std::uint32_t n) {
    const double half = n / 2.0;
    if (!(std::ldexp(support_radius, 0) < half)) return -1;
    int k = 0;
    while (std::ldexp(support_radius, k + 1) < half) ++k;
    return k;
}

ConeDecomposition decompose_impl(const Symbol2D& m, const BumpProfile& profile, int modes,
                                 const SmoothSymbol2D& eval, const ConeOptions& opt) {
    if (modes < 1)
        throw std::invalid_argument("cone_decompose: mode cutoff must be at least 1, got " +
                                    std::to_string(modes));
    if (opt.oversample < 1 || opt.node_floor < 1)
        throw std::invalid_argument("cone_decompose: oversampling factor and node floor must be positive");
    if (!(opt.alpha > 0.0) || !(opt.penalty_power >= 0.0))
        throw std::invalid_argument("cone_decompose: need alpha > 0 and penalty_power >= 0");
    const double r1 = profile.support_radius();
    const double L = opt.box_len;
    if (!(L > 2.0 * r1))
        throw std::invalid_argument("cone_decompose: box length " + std::to_string(L) +
                                    " must exceed twice the support radius " + std::to_string(r1));
    const std::uint32_t n = m.n();
    const int top = widest_top_scale(r1, n);
    const int k_max = opt.k_max >= 0 ? opt.k_max : top;
    const int k_min = opt.k_min;
    if (top < 0 || k_max > top)
        throw std::invalid_argument("cone_decompose: top scale k = " + std::to_string(k_max) +
                                    " pushes the piece support past the frequency radius n/2 = " +
                                    std::to_string(n / 2));
    if (k_min > k_max)
        throw std::invalid_argument("cone_decompose: empty scale window [" + std::to_string(k_min) +
                                    ", " + std::to_string(k_max) + "]");

    const int mm = 2 * modes + 1;
    const AxisSystem sys_phi = axis_system([&](double u) { const double v = profile(u); return v * v; },
                                           modes, L, opt.penalty_power);
    const AxisSystem sys_psi = axis_system([&](double u) { const double v = psi_env(profile, u); return v * v; },
                                           modes, L, opt.penalty_power);
    const AxisSystem sys_phi2 = axis_system([&](double u) { const double v = profile(2.0 * u); return v * v; },
                                            modes, L, opt.penalty_power);

    std::vector<ConeBlock> blocks;
    blocks.reserve(std::size_t(k_max - k_min + 1) * 2);
    std::vector<cplx> rhs(std::size_t(mm) * mm);
    for (int k = k_min; k <= k_max; ++k) {
        int Q = std::max({int(std::ceil(opt.oversample * L * std::ldexp(1.0, k))),
                          opt.oversample * mm, opt.node_floor});
        if (Q % 2 == 0) ++Q;
        const double s = std::ldexp(1.0, k);
        std::vector<double> node(static_cast<std::size_t>(Q));
        for (int q = 0; q < Q; ++q) node[std::size_t(q)] = -L / 2.0 + q * (L / Q);
        std::vector<cplx> E(std::size_t(mm) * Q);
        for (int j = 0; j < mm; ++j)
            for (int q = 0; q < Q; ++q)
                E[std::size_t(j) * Q + q] = std::polar(1.0, -kTwoPi * (j - modes) * node[std::size_t(q)] / L);
        for (Cone cone : {Cone::lower, Cone::upper}) {
            std::vector<double> w1(static_cast<std::size_t>(Q)), w2(static_cast<std::size_t>(Q));
            for (int q = 0; q < Q; ++q) {
                const double a = env_axis1(profile, cone, node[std::size_t(q)]);
                const double b = env_axis2(profile, cone, node[std::size_t(q)]);
                w1[std::size_t(q)] = a * a;
                w2[std::size_t(q)] = b * b;
            }
            std::fill(rhs.begin(), rhs.end(), cplx(0.0, 0.0));
            std::vector<cplx> tmp(static_cast<std::size_t>(mm));
            for (int q1 = 0; q1 < Q; ++q1) {
                if (w1[std::size_t(q1)] == 0.0) continue;
                std::fill(tmp.begin(), tmp.end(), cplx(0.0, 0.0));
                bool any = false;
                for (int q2 = 0; q2 < Q; ++q2) {
                    if (w2[std::size_t(q2)] == 0.0) continue;
                    const cplx val = eval(s * node[std::size_t(q1)], s * node[std::size_t(q2)]) *
                                     (w1[std::size_t(q1)] * w2[std::size_t(q2)]);
                    if (val == cplx(0.0, 0.0)) continue;
                    any = true;
                    for (int j2 = 0; j2 < mm; ++j2) tmp[std::size_t(j2)] += val * E[std::size_t(j2) * Q + q2];
                }
                if (!any) continue;
                for (int j1 = 0; j1 < mm; ++j1) {
                    const cplx e1 = E[std::size_t(j1) * Q + q1];
                    for (int j2 = 0; j2 < mm; ++j2) rhs[std::size_t(j1) * mm + j2] += e1 * tmp[std::size_t(j2)];
                }
            }
            const double quad = 1.0 / (double(Q) * double(Q));
            for (cplx& v : rhs) v *= quad;
            ConeBlock blk;
            blk.cone = cone;
            blk.k = k;
            blk.c = cone == Cone::lower ? penalized_solve(sys_phi, sys_psi, rhs, opt.alpha)
                                        : penalized_solve(sys_psi, sys_phi2, rhs, opt.alpha);
            blocks.push_back(std::move(blk));
        }
    }

    DecayReport decay = make_decay_report(blocks, modes);
    return ConeDecomposition{profile, 2.0 / L,    modes,  k_min, k_max, n,
                             m.at_freq(0, 0),     opt,    std::move(blocks), decay, m};
}

// Mode sum of one block times its envelope, accumulated into an n x n
// frequency table (FFT index layout). Rows and columns where the envelope
// vanishes are skipped.
void accumulate_piece(const ConeDecomposition& dec, const ConeBlock& blk, std::uint32_t n,
                      std::vector<cplx>& table) {
    const int modes = dec.modes;
    const int mm = 2 * modes + 1;
    const double L = 2.0 / dec.phase_c;
    const double inv_s = std::ldexp(1.0, -blk.k);
    std::vector<std::uint32_t> act1, act2;
    std::vector<double> e1v, e2v;
    std::vector<cplx> ph1, ph2;
    for (std::uint32_t a = 0; a < n; ++a) {
        const double u = (a < n / 2 ? double(a) : double(a) - double(n)) * inv_s;
        const double v1 = env_axis1(dec.profile, blk.cone, u);
        const double v2 = env_axis2(dec.profile, blk.cone, u);
        if (v1 != 0.0) { act1.push_back(a); e1v.push_back(v1); }
        if (v2 != 0.0) { act2.push_back(a); e2v.push_back(v2); }
    }
    if (act1.empty() || act2.empty()) return;
    auto mode_phases = [&](const std::vector<std::uint32_t>& act) {
        std::vector<cplx> ph(act.size() * std::size_t(mm));
        for (std::size_t r = 0; r < act.size(); ++r) {
            const std::uint32_t a = act[r];
            const double u = (a < n / 2 ? double(a) : double(a) - double(n)) * inv_s;
            for (int j = 0; j < mm; ++j)
                ph[r * std::size_t(mm) + std::size_t(j)] = std::polar(1.0, kTwoPi * (j - modes) * u / L);
        }
        return ph;
    };
    ph1 = mode_phases(act1);
    ph2 = mode_phases(act2);
    std::vector<cplx> t(act1.size() * std::size_t(mm), cplx(0.0, 0.0));
    for (std::size_t r = 0; r < act1.size(); ++r)
        for (int j1 = 0; j1 < mm; ++j1) {
            const cplx e = ph1[r * std::size_t(mm) + std::size_t(j1)];
            for (int j2 = 0; j2 < mm; ++j2)
                t[r * std::size_t(mm) + std::size_t(j2)] += e * blk.c[std::size_t(j1) * mm + j2];
        }
    for (std::size_t r = 0; r < act1.size(); ++r) {
        const std::uint32_t a = act1[r];
        for (std::size_t cidx = 0; cidx < act2.size(); ++cidx) {
            const std::uint32_t b = act2[cidx];
            cplx acc(0.0, 0.0);
            for (int j2 = 0; j2 < mm; ++j2)
                acc += t[r * std::size_t(mm) + std::size_t(j2)] * ph2[cidx * std::size_t(mm) + std::size_t(j2)];
            table[std::size_t(a) * n + b] += acc * (e1v[r] * e2v[cidx]);
        }
    }
}

} // namespace

const ConeBlock& ConeDecomposition::block(Cone cone, int k) const {
    for (const ConeBlock& blk : blocks)
        if (blk.cone == cone && blk.k == k) return blk;
    throw std::out_of_range("ConeDecomposition::block: no piece for cone " +
                            std::string(cone == Cone::lower ? "lower" : "upper") + " at scale " +
                            std::to_string(k));
}

ConeDecomposition cone_decompose(const Symbol2D& m, const BumpProfile& profile, int modes,
                                 const ConeOptions& opt) {
    return decompose_impl(
        m, profile, modes, [&m](double z1, double z2) { return bicubic_table_eval(m, z1, z2); }, opt);
}

ConeDecomposition cone_decompose(const Symbol2D& m, const BumpProfile& profile, int modes,
                                 const SmoothSymbol2D& eval, const ConeOptions& opt) {
    if (!eval) throw std::invalid_argument("cone_decompose: empty symbol evaluator");
    return decompose_impl(m, profile, modes, eval, opt);
}

std::pair<Symbol2D, ConeResidual> cone_reconstruct(const ConeDecomposition& dec, std::uint32_t n) {
    if (n != dec.n)
        throw std::invalid_argument("cone_reconstruct: grid size " + std::to_string(n) +
                                    " does not match the decomposition's grid " + std::to_string(dec.n));
    std::vector<cplx> table(std::size_t(n) * n, cplx(0.0, 0.0));
    for (const ConeBlock& blk : dec.blocks) accumulate_piece(dec, blk, n, table);
    Symbol2D recon(n, std::move(table));
    ConeResidual res;
    const double rmin = std::ldexp(dec.profile.support_radius(), dec.k_min);
    const double rmax = std::ldexp(dec.profile.plateau_radius(), dec.k_max);
    double sumsq = 0.0;
    for (std::uint32_t a = 0; a < n; ++a) {
        const double z1 = recon.freq_of(a);
        for (std::uint32_t b = 0; b < n; ++b) {
            const double z2 = recon.freq_of(b);
            const double r = std::hypot(z1, z2);
            if (r < rmin || r > rmax) continue;
            const double err = std::abs(recon.at(a, b) - dec.original.at(a, b));
            res.max_err = std::max(res.max_err, err);
            sumsq += err * err;
        }
    }
    res.l2_err = std::sqrt(sumsq / (double(n) * double(n)));
    return {std::move(recon), res};
}

Symbol2D cone_piece_symbol(const ConeDecomposition& dec, std::size_t block_index, std::uint32_t n) {
    if (n != dec.n)
        throw std::invalid_argument("cone_piece_symbol: grid size " + std::to_string(n) +
                                    " does not match the decomposition's grid " + std::to_string(dec.n));
    if (block_index >= dec.blocks.size())
        throw std::out_of_range("cone_piece_symbol: block index " + std::to_string(block_index) +
                                " out of range, have " + std::to_string(dec.blocks.size()) + " pieces");
    std::vector<cplx> table(std::size_t(n) * n, cplx(0.0, 0.0));
    accumulate_piece(dec, dec.blocks[block_index], n, table);
    return Symbol2D(n, std::move(table));
}

void write_cone_csv(std::ostream& out, const ConeDecomposition& dec) {
    out << "cone,k,n1,n2,re,im\n";
    const int mm = 2 * dec.modes + 1;
    for (const ConeBlock& blk : dec.blocks) {
        const char* cone = blk.cone == Cone::lower ? "lower" : "upper";
        for (int a = 0; a < mm; ++a)
            for (int b = 0; b < mm; ++b) {
                const cplx v = blk.c[std::size_t(a) * mm + b];
                out << cone << ',' << blk.k << ',' << (a - dec.modes) << ',' << (b - dec.modes)
                    << ',' << num17(v.real()) << ',' << num17(v.imag()) << '\n';
            }
    }
}

// ---------------------------------------------------------------------------
// Telescoping identity.

namespace {

std::vector<cplx> spectrum_1d(std::span<const cplx> f) {
    std::vector<cplx> s(f.begin(), f.end());
    detail::fft_pow2(s.data(), std::uint32_t(s.size()), 1, -1);
    const double inv = 1.0 / double(s.size());
    for (cplx& v : s) v *= inv;
    return s;
}

std::vector<cplx> filter_1d(const std::vector<cplx>& spec, const Symbol1D& sym) {
    const auto n = std::uint32_t(spec.size());
    std::vector<cplx> out(spec.size());
    for (std::uint32_t a = 0; a < n; ++a) out[a] = spec[a] * sym.at(a);
    detail::fft_pow2(out.data(), n, 1, +1);
    return out;
}

} // namespace

double telescoping_check(std::span<const cplx> f, std::span<const cplx> g,
                         const DyadicSymbolFamily& famP, const DyadicSymbolFamily& famQ,
                         int k0, int k1) {
    const std::uint32_t n = famP.n();
    if (famQ.n() != n)
        throw std::invalid_argument("telescoping_check: family grids differ: " + std::to_string(n) +
                                    " vs " + std::to_string(famQ.n()));
    if (f.size() != n || g.size() != n)
        throw std::invalid_argument("telescoping_check: sample vectors must have length " +
                                    std::to_string(n));
    if (k0 > k1)
        throw std::invalid_argument("telescoping_check: empty window [" + std::to_string(k0) + ", " +
                                    std::to_string(k1) + "]");
    if (k0 < famP.k_min() || k1 > famP.k_max() || k0 < famQ.k_min() || k1 > famQ.k_max())
        throw std::invalid_argument("telescoping_check: window [" + std::to_string(k0) + ", " +
                                    std::to_string(k1) + "] not covered by both families");
    for (int k = k0; k <= k1; ++k) {
        const Symbol1D& psi = famQ.psi(k);
        const Symbol1D& hi = famP.phi(k);
        const Symbol1D& lo = famP.phi(k - 1);
        for (std::uint32_t a = 0; a < n; ++a)
            if (psi.at(a) != hi.at(a) - lo.at(a))
                throw std::invalid_argument(
                    "telescoping_check: psi_" + std::to_string(k) +
                    " of the second family is not the difference of consecutive phi of the first");
    }
    const std::vector<cplx> sf = spectrum_1d(f);
    const std::vector<cplx> sg = spectrum_1d(g);
    std::vector<cplx> acc(n, cplx(0.0, 0.0));
    for (int k = k0; k <= k1; ++k) {
        const std::vector<cplx> pf = filter_1d(sf, famP.phi(k));
        const std::vector<cplx> qg = filter_1d(sg, famQ.psi(k));
        const std::vector<cplx> qf = filter_1d(sf, famQ.psi(k));
        const std::vector<cplx> pg = filter_1d(sg, famP.phi(k - 1));
        for (std::uint32_t x = 0; x < n; ++x) acc[x] += pf[x] * qg[x] + qf[x] * pg[x];
    }
    const std::vector<cplx> pf_hi = filter_1d(sf, famP.phi(k1));
    const std::vector<cplx> pg_hi = filter_1d(sg, famP.phi(k1));
    const std::vector<cplx> pf_lo = filter_1d(sf, famP.phi(k0 - 1));
    const std::vector<cplx> pg_lo = filter_1d(sg, famP.phi(k0 - 1));
    double worst = 0.0;
    for (std::uint32_t x = 0; x < n; ++x) {
        const cplx defect = acc[x] - (pf_hi[x] * pg_hi[x] - pf_lo[x] * pg_lo[x]);
        worst = std::max(worst, std::abs(defect));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Fiber-wise Calderon-Zygmund decomposition.

namespace {

int log2_of(std::uint32_t n) {
    int l = 0;
    while ((1u << l) < n) ++l;
    return l;
}

void select_intervals(const std::vector<std::vector<double>>& sums, int level, std::uint32_t index,
                      double threshold, std::vector<CzInterval>& out) {
    const auto length = std::uint32_t(1) << level;
    if (sums[std::size_t(level)][index] / double(length) > threshold) {
        out.push_back(CzInterval{index * length, length});
        return;
    }
    if (level == 0) return;
    select_intervals(sums, level - 1, 2 * index, threshold, out);
    select_intervals(sums, level - 1, 2 * index + 1, threshold, out);
}

} // namespace

CZDecomposition fiberwise_cz(const GridFunction2D& F, double lambda, double p2, double p3prime) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("fiberwise_cz: level must be positive, got " + std::to_string(lambda));
    if (!(p2 > 1.0) || !std::isfinite(p2))
        throw std::invalid_argument("fiberwise_cz: need 1 < p2 < inf, got " + std::to_string(p2));
    if (!(p3prime > 0.0))
        throw std::invalid_argument("fiberwise_cz: need p3prime > 0, got " + std::to_string(p3prime));
    const std::uint32_t n = F.n();
    const double threshold = std::pow(lambda, p3prime);
    const int levels = log2_of(n);

    CZDecomposition dec{n, lambda, p2, p3prime, threshold,
                        GridFunction2D(n, std::vector<cplx>(F.data().begin(), F.data().end())),
                        {}};
    dec.fibers.reserve(n);
    std::vector<std::vector<double>> sums(std::size_t(levels) + 1);
    for (std::uint32_t x2 = 0; x2 < n; ++x2) {
        sums[0].assign(n, 0.0);
        for (std::uint32_t x = 0; x < n; ++x) sums[0][x] = std::pow(std::abs(F.at(x, x2)), p2);
        for (int l = 1; l <= levels; ++l) {
            const std::uint32_t cnt = n >> l;
            sums[std::size_t(l)].assign(cnt, 0.0);
            for (std::uint32_t i = 0; i < cnt; ++i)
                sums[std::size_t(l)][i] = sums[std::size_t(l - 1)][2 * i] + sums[std::size_t(l - 1)][2 * i + 1];
        }
        std::vector<CzInterval> picked;
        select_intervals(sums, levels, 0, threshold, picked);
        CzFiber fiber;
        fiber.x2 = x2;
        fiber.root_selected = picked.size() == 1 && picked[0].length == n;
        for (const CzInterval& iv : picked) {
            CzAtom atom;
            atom.interval = iv;
            atom.samples.resize(iv.length);
            cplx mean(0.0, 0.0);
            for (std::uint32_t x = 0; x < iv.length; ++x) mean += F.at(iv.offset + x, x2);
            mean /= double(iv.length);
            for (std::uint32_t x = 0; x < iv.length; ++x)
                atom.samples[x] = F.at(iv.offset + x, x2) - mean;
            cplx defect(0.0, 0.0);
            for (const cplx& v : atom.samples) defect += v;
            defect /= double(iv.length);
            for (cplx& v : atom.samples) v -= defect;
            atom.removed_mean = mean + defect;
            for (std::uint32_t x = 0; x < iv.length; ++x)
                dec.good.at(iv.offset + x, x2) = F.at(iv.offset + x, x2) - atom.samples[x];
            fiber.atoms.push_back(std::move(atom));
        }
        dec.fibers.push_back(std::move(fiber));
    }
    return dec;
}

CzVerifyReport cz_verify(const CZDecomposition& dec, const GridFunction2D& F) {
    const std::uint32_t n = dec.n;
    if (F.n() != n || dec.good.n() != n)
        throw std::invalid_argument("cz_verify: grid size mismatch between decomposition and field");
    CzVerifyReport rep;
    rep.good_sup_bound = std::pow(2.0, 1.0 / dec.p2) * std::pow(dec.lambda, dec.p3prime / dec.p2);
    const double atom_const_bound = std::pow(2.0, 1.0 + 1.0 / dec.p2);
    rep.passed = dec.fibers.size() == n;
    std::vector<cplx> overlay(n);
    for (const CzFiber& fiber : dec.fibers) {
        CzFiberDiag diag;
        diag.x2 = fiber.x2;
        if (fiber.x2 >= n) {
            diag.recon_ok = diag.dyadic_ok = false;
            rep.passed = false;
            rep.fibers.push_back(diag);
            continue;
        }
        const std::uint32_t x2 = fiber.x2;
        double fib_sup = 0.0, fib_pow = 0.0;
        for (std::uint32_t x = 0; x < n; ++x) {
            const double mag = std::abs(F.at(x, x2));
            fib_sup = std::max(fib_sup, mag);
            fib_pow += std::pow(mag, dec.p2);
        }

        double measure_sum = 0.0;
        int idx = 0;
        for (const CzAtom& atom : fiber.atoms) {
            const CzInterval iv = atom.interval;
            bool atom_ok = true;
            const bool shape_ok = iv.length >= 1 && (iv.length & (iv.length - 1)) == 0 &&
                                  iv.offset % iv.length == 0 && iv.offset + iv.length <= n &&
                                  atom.samples.size() == iv.length;
            if (!shape_ok) {
                diag.dyadic_ok = false;
                atom_ok = false;
            } else {
                measure_sum += double(iv.length) / double(n);
                cplx mean(0.0, 0.0);
                double amax = 0.0, apow = 0.0;
                for (const cplx& v : atom.samples) {
                    mean += v;
                    amax = std::max(amax, std::abs(v));
                    apow += std::pow(std::abs(v), dec.p2);
                }
                mean /= double(iv.length);
                if (std::abs(mean) > 1e-12 * amax * double(iv.length)) {
                    diag.mean_ok = false;
                    atom_ok = false;
                }
                const double ratio = std::pow(apow / double(iv.length), 1.0 / dec.p2) /
                                     std::pow(dec.threshold, 1.0 / dec.p2);
                if (!fiber.root_selected) {
                    rep.atom_constant = std::max(rep.atom_constant, ratio);
                    if (ratio > atom_const_bound) {
                        diag.atom_norm_ok = false;
                        atom_ok = false;
                    }
                }
            }
            if (!atom_ok && diag.first_bad_atom < 0) diag.first_bad_atom = idx;
            ++idx;
        }

        // Disjointness over the structurally valid intervals.
        std::vector<CzInterval> ivs;
        for (const CzAtom& a : fiber.atoms)
            if (a.interval.length >= 1 && a.interval.offset + a.interval.length <= n) ivs.push_back(a.interval);
        std::sort(ivs.begin(), ivs.end(),
                  [](const CzInterval& a, const CzInterval& b) { return a.offset < b.offset; });
        for (std::size_t i = 1; i < ivs.size(); ++i)
            if (ivs[i].offset < ivs[i - 1].offset + ivs[i - 1].length) diag.disjoint_ok = false;

        for (std::uint32_t x = 0; x < n; ++x) overlay[x] = dec.good.at(x, x2);
        for (const CzAtom& atom : fiber.atoms) {
            if (atom.interval.offset + atom.interval.length > n ||
                atom.samples.size() != atom.interval.length)
                continue;
            for (std::uint32_t x = 0; x < atom.interval.length; ++x)
                overlay[atom.interval.offset + x] += atom.samples[x];
        }
        for (std::uint32_t x = 0; x < n; ++x)
            diag.max_recon_err = std::max(diag.max_recon_err, std::abs(overlay[x] - F.at(x, x2)));
        diag.recon_ok = diag.max_recon_err <= 1e-12 * fib_sup;

        diag.covering_margin = measure_sum - fib_pow / double(n) / dec.threshold;
        diag.covering_ok = diag.covering_margin <= 0.0;

        for (std::uint32_t x = 0; x < n; ++x)
            diag.good_sup = std::max(diag.good_sup, std::abs(dec.good.at(x, x2)));
        rep.good_sup = std::max(rep.good_sup, diag.good_sup);
        if (!fiber.root_selected) diag.good_bound_ok = diag.good_sup <= rep.good_sup_bound;

        rep.passed = rep.passed && diag.recon_ok && diag.disjoint_ok && diag.dyadic_ok &&
                     diag.mean_ok && diag.atom_norm_ok && diag.covering_ok && diag.good_bound_ok;
        rep.fibers.push_back(std::move(diag));
    }
    return rep;
}

void write_cz_report(std::ostream& out, const CZDecomposition& dec, const CzVerifyReport& rep) {
    out << "czreport n=" << dec.n << " lambda=" << num17(dec.lambda) << " p2=" << num17(dec.p2)
        << " p3prime=" << num17(dec.p3prime) << " threshold=" << num17(dec.threshold) << '\n';
    out << "summary passed=" << (rep.passed ? 1 : 0) << " good_sup=" << num17(rep.good_sup)
        << " good_sup_bound=" << num17(rep.good_sup_bound)
        << " atom_constant=" << num17(rep.atom_constant) << '\n';
    for (std::size_t i = 0; i < dec.fibers.size(); ++i) {
        const CzFiber& fiber = dec.fibers[i];
        out << "fiber x2=" << fiber.x2 << " atoms=" << fiber.atoms.size()
            << " root_selected=" << (fiber.root_selected ? 1 : 0);
        if (i < rep.fibers.size()) {
            const CzFiberDiag& d = rep.fibers[i];
            out << " recon_ok=" << d.recon_ok << " disjoint_ok=" << d.disjoint_ok
                << " dyadic_ok=" << d.dyadic_ok << " mean_ok=" << d.mean_ok
                << " atom_norm_ok=" << d.atom_norm_ok << " covering_ok=" << d.covering_ok
                << " good_bound_ok=" << d.good_bound_ok
                << " max_recon_err=" << num17(d.max_recon_err)
                << " covering_margin=" << num17(d.covering_margin)
                << " good_sup=" << num17(d.good_sup);
        }
        out << '\n';
        for (std::size_t a = 0; a < fiber.atoms.size(); ++a) {
            const CzAtom& atom = fiber.atoms[a];
            double apow = 0.0;
            cplx mean(0.0, 0.0);
            for (const cplx& v : atom.samples) {
                apow += std::pow(std::abs(v), dec.p2);
                mean += v;
            }
            if (!atom.samples.empty()) mean /= double(atom.samples.size());
            const double norm = std::pow(apow / double(dec.n), 1.0 / dec.p2);
            out << "atom x2=" << fiber.x2 << " index=" << a << " offset=" << atom.interval.offset
                << " length=" << atom.interval.length << " norm=" << num17(norm)
                << " mean_abs=" << num17(std::abs(mean))
                << " removed_re=" << num17(atom.removed_mean.real())
                << " removed_im=" << num17(atom.removed_mean.imag()) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Marcinkiewicz interval aggregate.

GridFunction2D marcinkiewicz_function(const std::vector<std::vector<CzInterval>>& intervals_per_fiber,
                                      std::uint32_t n) {
    if (intervals_per_fiber.size() != n)
        throw std::invalid_argument("marcinkiewicz_function: need one interval list per fiber, got " +
                                    std::to_string(intervals_per_fiber.size()) + " for grid " +
                                    std::to_string(n));
    GridFunction2D H(n);
    for (std::uint32_t x2 = 0; x2 < n; ++x2) {
        for (const CzInterval& iv : intervals_per_fiber[x2]) {
            if (iv.length == 0 || iv.offset + iv.length > n)
                throw std::invalid_argument("marcinkiewicz_function: invalid interval at fiber " +
                                            std::to_string(x2));
            const double center = double(iv.offset) + double(iv.length) / 2.0;
            for (std::uint32_t x1 = 0; x1 < n; ++x1) {
                double d = std::abs(double(x1) - center);
                d = std::min(d, double(n) - d);
                const double q = 1.0 + d / double(iv.length);
                H.at(x1, x2) += 1.0 / (q * q);
            }
        }
    }
    return H;
}

GridFunction2D marcinkiewicz_function(const CZDecomposition& dec) {
    std::vector<std::vector<CzInterval>> per_fiber(dec.n);
    for (const CzFiber& fiber : dec.fibers) {
        if (fiber.x2 >= dec.n)
            throw std::invalid_argument("marcinkiewicz_function: fiber index " +
                                        std::to_string(fiber.x2) + " outside grid " +
                                        std::to_string(dec.n));
        for (const CzAtom& atom : fiber.atoms) per_fiber[fiber.x2].push_back(atom.interval);
    }
    return marcinkiewicz_function(per_fiber, dec.n);
}

double marcinkiewicz_constant(const GridFunction2D& H,
                              const std::vector<std::vector<CzInterval>>& intervals_per_fiber,
                              double p2) {
    const std::uint32_t n = H.n();
    if (intervals_per_fiber.size() != n)
        throw std::invalid_argument("marcinkiewicz_constant: need one interval list per fiber, got " +
                                    std::to_string(intervals_per_fiber.size()) + " for grid " +
                                    std::to_string(n));
    if (!(p2 > 0.0))
        throw std::invalid_argument("marcinkiewicz_constant: need p2 > 0, got " + std::to_string(p2));
    double worst = 0.0;
    for (std::uint32_t x2 = 0; x2 < n; ++x2) {
        double total_len = 0.0;
        for (const CzInterval& iv : intervals_per_fiber[x2]) total_len += double(iv.length) / double(n);
        if (total_len == 0.0) continue;
        double hpow = 0.0;
        for (std::uint32_t x1 = 0; x1 < n; ++x1) hpow += std::pow(std::abs(H.at(x1, x2)), p2);
        const double lhs = std::pow(hpow / double(n), 1.0 / p2);
        worst = std::max(worst, lhs / std::pow(total_len, 1.0 / p2));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Operators assembled from cone pieces.

namespace {

std::vector<Symbol2D> piece_symbols(const ConeDecomposition& dec, std::uint32_t n, DcMode dc) {
    std::vector<Symbol2D> out;
    out.reserve(dec.blocks.size() + 1);
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) out.push_back(cone_piece_symbol(dec, i, n));
    if (dc == DcMode::reattach) {
        std::vector<cplx> table(std::size_t(n) * n, cplx(0.0, 0.0));
        table[0] = dec.dc_value;
        out.emplace_back(n, std::move(table));
    }
    return out;
}

void add_samples(GridFunction2D& acc, const GridFunction2D& term) {
    auto a = acc.data();
    auto t = term.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += t[i];
}

} // namespace

GridFunction2D tensor_bilinear_cone(const GridFunction2D& F1, const GridFunction2D& F2,
                                    const ConeDecomposition& dec1, const ConeDecomposition& dec2,
                                    DcMode dc) {
    const std::uint32_t n = F1.n();
    if (F2.n() != n || dec1.n != n || dec2.n != n)
        throw std::invalid_argument("tensor_bilinear_cone: inputs and decompositions must share one grid");
    const std::vector<Symbol2D> p1 = piece_symbols(dec1, n, dc);
    const std::vector<Symbol2D> p2 = piece_symbols(dec2, n, dc);
    GridFunction2D out(n);
    for (const Symbol2D& a : p1)
        for (const Symbol2D& b : p2) add_samples(out, tensor_bilinear(F1, F2, a, b));
    return out;
}

GridFunction2D tripletwist_cone(const GridFunction2D& F1, const GridFunction2D& F2,
                                const GridFunction2D& F3, const ConeDecomposition& dec1,
                                const ConeDecomposition& dec2, const ConeDecomposition& dec3,
                                DcMode dc) {
    const std::uint32_t n = F1.n();
    if (F2.n() != n || F3.n() != n || dec1.n != n || dec2.n != n || dec3.n != n)
        throw std::invalid_argument("tripletwist_cone: inputs and decompositions must share one grid");
    if (n > 16)
        throw std::invalid_argument("tripletwist_cone: the direct triple sum is limited to n <= 16, got n = " +
                                    std::to_string(n));
    const std::vector<Symbol2D> p1 = piece_symbols(dec1, n, dc);
    const std::vector<Symbol2D> p2 = piece_symbols(dec2, n, dc);
    const std::vector<Symbol2D> p3 = piece_symbols(dec3, n, dc);
    GridFunction2D out(n);
    for (const Symbol2D& a : p1)
        for (const Symbol2D& b : p2)
            for (const Symbol2D& c : p3) add_samples(out, tripletwist(F1, F2, F3, a, b, c));
    return out;
}

} // namespace mpfw
