#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mpfw {

using cplx = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// Complex samples of a function on the unit 2-torus, n x n uniform grid.
/// Row-major storage; entry (i, j) holds F(i/n, j/n), with i the first
/// coordinate. n must be a power of two, at least 8.
class GridFunction2D {
public:
    explicit GridFunction2D(std::uint32_t n);
    GridFunction2D(std::uint32_t n, std::vector<cplx> samples);

    std::uint32_t n() const { return n_; }
    std::size_t size() const { return v_.size(); }

    cplx& at(std::uint32_t i, std::uint32_t j) { return v_[std::size_t(i) * n_ + j]; }
    const cplx& at(std::uint32_t i, std::uint32_t j) const { return v_[std::size_t(i) * n_ + j]; }

    std::span<cplx> data() { return v_; }
    std::span<const cplx> data() const { return v_; }

    /// Scale-sum operators stamp the (kMin, kMax) window they summed over.
    void set_scale_window(int k_min, int k_max) { window_ = {k_min, k_max}; }
    const std::optional<std::pair<int, int>>& scale_window() const { return window_; }

private:
    std::uint32_t n_;
    std::vector<cplx> v_;
    std::optional<std::pair<int, int>> window_;
};

/// Discrete Fourier coefficients of a GridFunction2D, indexed by integer
/// frequencies in [-n/2, n/2)^2. Stored in FFT layout: storage index a
/// along an axis corresponds to frequency a for a < n/2 and a - n otherwise.
class Spectrum2D {
public:
    explicit Spectrum2D(std::uint32_t n);
    Spectrum2D(std::uint32_t n, std::vector<cplx> coeffs);

    std::uint32_t n() const { return n_; }
    std::size_t size() const { return v_.size(); }

    cplx& at(std::uint32_t a, std::uint32_t b) { return v_[std::size_t(a) * n_ + b]; }
    const cplx& at(std::uint32_t a, std::uint32_t b) const { return v_[std::size_t(a) * n_ + b]; }

    /// Access by signed frequency, each component in [-n/2, n/2).
    cplx& at_freq(std::int32_t f1, std::int32_t f2);
    const cplx& at_freq(std::int32_t f1, std::int32_t f2) const;

    /// Signed frequency represented by storage index a along one axis.
    std::int32_t freq_of(std::uint32_t a) const {
        return a < n_ / 2 ? std::int32_t(a) : std::int32_t(a) - std::int32_t(n_);
    }

    std::span<cplx> data() { return v_; }
    std::span<const cplx> data() const { return v_; }

private:
    std::uint32_t n_;
    std::vector<cplx> v_;
};

/// Mixed-norm request: outer Lebesgue exponent over the grid, plus an inner
/// chain of sequence-norm exponents over scale indices, outermost first.
/// Each chain entry is 2 or infinity; at most two entries.
struct MixedNormSpec {
    double outer = 2.0;
    std::vector<double> inner_chain;
};

Spectrum2D forward_transform(const GridFunction2D& F);
GridFunction2D inverse_transform(const Spectrum2D& S);

/// Riemann-sum norm (sum |F|^p * n^-2)^(1/p); max modulus for p = infinity.
double lp_norm(const GridFunction2D& F, double p);

/// sup over lambda of lambda * measure{|F| > lambda}^(1/p), cell measure n^-2.
double weak_lp(const GridFunction2D& F, double p);

/// Pointwise inner sequence norms over the family's scale index, then the
/// outer norm. For a two-entry chain the family is a flattened outer x inner
/// array with the given inner extent; inner_extent 0 means one outer block.
double mixed_norm(std::span<const GridFunction2D> family, const MixedNormSpec& spec,
                  std::size_t inner_extent = 0);

/// Deterministic Gaussian field: independent complex Gaussian coefficients
/// scaled by (1+|xi|)^-decay, generated counter-based from (seed, frequency).
/// With real_output the spectrum is conjugate-symmetrized first.
GridFunction2D random_field(std::uint64_t seed, std::uint32_t n, double decay,
                            bool real_output = false);

namespace detail {

/// Fixed-tree pairwise reduction; result independent of caller threading.
double pairwise_sum(const double* x, std::size_t count);

std::uint64_t mix64(std::uint64_t z);

} // namespace detail

} // namespace mpfw
