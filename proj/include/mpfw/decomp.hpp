#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mpfw/bumps.hpp"
#include "mpfw/grid.hpp"
#include "mpfw/operators.hpp"

namespace mpfw {

/// Off-grid symbol evaluator at real frequency pairs. Exact closed-form
/// evaluators give the quadrature full accuracy; table-only symbols fall
/// back to bicubic interpolation (see cone_decompose).
using SmoothSymbol2D = std::function<cplx(double, double)>;

enum class Cone { lower, upper };

/// Origin handling when a decomposition is applied as an operator: the cone
/// envelopes vanish at frequency zero, so the reconstructed symbol drops the
/// DC term; reattach restores the original symbol's origin value.
enum class DcMode { annihilate, reattach };

/// Log-log fitted decay slopes of the coefficient magnitudes in each mode
/// index, and the order-2 envelope constant
/// c_two = max |C| (1+|n1|)^2 (1+|n2|)^2.
struct DecayReport {
    double exponent_n1 = 0.0;
    double exponent_n2 = 0.0;
    double c_two = 0.0;
};

/// Coefficients of one (cone, scale) piece: (2M+1)^2 entries, row-major over
/// (n1, n2) in [-M, M]^2 (storage index (n1 + M) * (2M+1) + (n2 + M)).
struct ConeBlock {
    Cone cone = Cone::lower;
    int k = 0;
    std::vector<cplx> c;
};

/// Tunable constants of the cone expansion. The defaults are frozen against
/// the quadrature oracle; box_len must exceed twice the profile support so
/// the envelopes sit strictly inside one period.
struct ConeOptions {
    double box_len = 4.5;     // expansion period in rescaled frequency u
    int oversample = 4;       // quadrature nodes per box unit and per mode
    int node_floor = 389;     // minimum quadrature nodes per axis
    double penalty_power = 4; // mode-growth weight (1+|n|)^p in the solve
    double alpha = 1e-14;     // Tikhonov level gluing the penalty in
    int k_min = 0;
    int k_max = -1;           // -1: widest window with r1 * 2^k below Nyquist
};

/// Double Fourier series of a 2-D symbol split into two cones: for each
/// scale k the lower piece carries envelope phi(u1) psi(u2) and the upper
/// piece psi(u1) phi(2 u2), u = 2^-k zeta, and the piece is expanded in
/// modes e^{2 pi i n u / box_len} = e^{phase_c pi i n u}. Coefficients are
/// the weighted least-squares projection under the squared envelope, so
/// they depend only on the symbol where the envelope is alive.
struct ConeDecomposition {
    BumpProfile profile;
    double phase_c;      // modulation constant, 2 / box_len
    int modes;           // M >= 1
    int k_min;
    int k_max;
    std::uint32_t n;     // grid the symbol was tabulated on
    cplx dc_value;       // original symbol at frequency (0, 0)
    ConeOptions options;
    std::vector<ConeBlock> blocks; // k ascending, lower before upper
    DecayReport decay;
    Symbol2D original;   // retained for residual reports

    const ConeBlock& block(Cone cone, int k) const;
};

/// Residuals of a reconstruction against the original symbol, measured over
/// the covered annulus r1 2^kMin <= |zeta| <= r0 2^kMax.
struct ConeResidual {
    double max_err = 0.0;
    double l2_err = 0.0;
};

/// Expands m into per-(cone, scale) mode coefficients. The table-only
/// overload evaluates m off-grid by bicubic interpolation, which limits the
/// attainable residual for coarsely-resolved symbols; pass an exact
/// evaluator when one exists. modes < 1 is rejected, as is a window whose
/// top scale leaves the frequency box.
ConeDecomposition cone_decompose(const Symbol2D& m, const BumpProfile& profile,
                                 int modes, const ConeOptions& opt = {});
ConeDecomposition cone_decompose(const Symbol2D& m, const BumpProfile& profile,
                                 int modes, const SmoothSymbol2D& eval,
                                 const ConeOptions& opt = {});

/// Reassembles the mode sums times envelopes on the n-grid (n must match
/// the decomposition's grid) and reports annulus residuals against the
/// stored original.
std::pair<Symbol2D, ConeResidual> cone_reconstruct(const ConeDecomposition& dec,
                                                   std::uint32_t n);

/// Reconstruction of a single (cone, scale) piece as a grid symbol: the
/// block's mode sum times its envelope, zero at the origin.
Symbol2D cone_piece_symbol(const ConeDecomposition& dec, std::size_t block_index,
                           std::uint32_t n);

/// Coefficient dump, one row per retained mode: header
/// cone,k,n1,n2,re,im with floats at 17 significant digits.
void write_cone_csv(std::ostream& out, const ConeDecomposition& dec);

/// Bilinear tensor action m1(xi1,eta2) m2(xi2,eta1) assembled from two cone
/// decompositions: sums tensor_bilinear over all piece pairs (bilinearity
/// makes the piece sum equal the reconstructed-symbol action), with the DC
/// term dropped or reattached per mode.
GridFunction2D tensor_bilinear_cone(const GridFunction2D& F1, const GridFunction2D& F2,
                                    const ConeDecomposition& dec1,
                                    const ConeDecomposition& dec2,
                                    DcMode dc = DcMode::annihilate);

/// Trilinear cyclic action assembled from three cone decompositions: sums
/// tripletwist over all piece triples. Grid capped by tripletwist's direct
/// path (n <= 16).
GridFunction2D tripletwist_cone(const GridFunction2D& F1, const GridFunction2D& F2,
                                const GridFunction2D& F3,
                                const ConeDecomposition& dec1,
                                const ConeDecomposition& dec2,
                                const ConeDecomposition& dec3,
                                DcMode dc = DcMode::annihilate);

/// Max modulus of the telescoping defect
///   sum_{k=k0}^{k1} [P_k f Q_k g + Q_k f P_{k-1} g]
///     - (P_{k1} f P_{k1} g - P_{k0-1} f P_{k0-1} g)
/// over the grid, for 1-D sample vectors filtered through the families.
/// famQ must satisfy psi_k = phi_k - phi_{k-1} against famP bit-exactly on
/// the window; mismatched families are rejected.
double telescoping_check(std::span<const cplx> f, std::span<const cplx> g,
                         const DyadicSymbolFamily& famP, const DyadicSymbolFamily& famQ,
                         int k0, int k1);

/// Dyadic interval in cell units along the first coordinate: length a power
/// of two, offset a multiple of the length.
struct CzInterval {
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
};

/// One subtracted atom: samples (F - mean) restricted to its interval.
struct CzAtom {
    CzInterval interval;
    std::vector<cplx> samples;
    cplx removed_mean;
};

/// Atoms of one fiber x2. root_selected marks the degenerate stopping time
/// that fired on the whole fiber (no parent average constrains the mean, so
/// the good-part sup bound is not guaranteed there).
struct CzFiber {
    std::uint32_t x2 = 0;
    std::vector<CzAtom> atoms;
    bool root_selected = false;
};

/// Fiber-wise Calderon-Zygmund decomposition of F at level lambda: per fiber
/// the maximal dyadic intervals where the cell average of |F|^p2 exceeds
/// lambda^p3prime are selected, the mean is split off as an atom, and
/// good = F - sum of atoms.
struct CZDecomposition {
    std::uint32_t n = 0;
    double lambda = 0.0;
    double p2 = 2.0;
    double p3prime = 1.0;
    double threshold = 0.0;  // lambda^p3prime, the |F|^p2 average cut
    GridFunction2D good;
    std::vector<CzFiber> fibers; // one entry per x2
};

/// Runs the stopping time on every fiber. lambda <= 0, p2 outside (1, inf),
/// or p3prime <= 0 are rejected.
CZDecomposition fiberwise_cz(const GridFunction2D& F, double lambda, double p2,
                             double p3prime);

/// Per-fiber verification outcome; constants are reported, not assumed.
struct CzFiberDiag {
    std::uint32_t x2 = 0;
    bool recon_ok = true;       // good + atoms returns F within 1e-12 rel
    bool disjoint_ok = true;
    bool dyadic_ok = true;
    bool mean_ok = true;        // |atom mean| <= 1e-12 ||atom||_inf |I|
    bool atom_norm_ok = true;   // ||a||_p2(I) <= 2^{1+1/p2} thr |I|^{1/p2}
    bool covering_ok = true;    // sum |I| <= lambda^-p3' ||F fiber||_p2^p2
    bool good_bound_ok = true;  // ||good||_inf <= 2^{1/p2} thr (skipped at root)
    int first_bad_atom = -1;
    double max_recon_err = 0.0;
    double covering_margin = 0.0; // lhs - rhs, <= 0 when satisfied
    double good_sup = 0.0;
};

struct CzVerifyReport {
    bool passed = false;
    double good_sup = 0.0;          // max over fibers
    double good_sup_bound = 0.0;    // 2^{1/p2} lambda^{p3'/p2}
    double atom_constant = 0.0;     // max ||a|| / (thr |I|^{1/p2}), vs 2^{1+1/p2}
    std::vector<CzFiberDiag> fibers;
};

/// Structural audit of a decomposition against its source field: exact
/// reconstruction, disjoint dyadic intervals, vanishing atom means, the
/// atom L^p2 bound, the Chebyshev covering bound with constant 1, and the
/// good-part sup bound away from root selections.
CzVerifyReport cz_verify(const CZDecomposition& dec, const GridFunction2D& F);

/// Audit report, one record per fiber: intervals, atom norms, bounds.
void write_cz_report(std::ostream& out, const CZDecomposition& dec,
                     const CzVerifyReport& rep);

/// Marcinkiewicz-type interval aggregate
///   H(x1, x2) = sum_i (1 + dist(x1, center_i) / |I_i|)^-2
/// over the fiber's intervals, with periodic distance in cell units.
/// intervals_per_fiber must have one entry per x2 row.
GridFunction2D marcinkiewicz_function(
    const std::vector<std::vector<CzInterval>>& intervals_per_fiber, std::uint32_t n);
GridFunction2D marcinkiewicz_function(const CZDecomposition& dec);

/// Empirical constant of the companion bound
/// ||H(., x2)||_p2 <= C (sum_i |I_i|)^{1/p2}: the max ratio over fibers
/// with at least one interval.
double marcinkiewicz_constant(const GridFunction2D& H,
                              const std::vector<std::vector<CzInterval>>& intervals_per_fiber,
                              double p2);

} // namespace mpfw
