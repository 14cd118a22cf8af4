#pragma once

#include <vector>

#include "mpfw/bumps.hpp"
#include "mpfw/grid.hpp"

namespace mpfw {

enum class ProjKind { P, Q };

/// Multiplies every fiber along the chosen axis (1 = first coordinate,
/// 2 = second) by the 1-D symbol in frequency space.
GridFunction2D apply_fiber(const GridFunction2D& F, const Symbol1D& sym, int axis);

/// Same action on an already-transformed function: pointwise multiplication
/// of the 2-D spectrum by sym(xi_axis).
Spectrum2D apply_axis_symbol(const Spectrum2D& S, const Symbol1D& sym, int axis);

/// Low-pass (P, symbol phi_k) or annular (Q, symbol psi_k) projection at
/// scale k of the family, acting along the chosen axis.
GridFunction2D lp_projection(const GridFunction2D& F, const DyadicSymbolFamily& family,
                             ProjKind kind, int k, int axis);

/// Pointwise l2 aggregate over the family's scales of the chosen projection;
/// real-valued, nonnegative.
GridFunction2D square_function(const GridFunction2D& F, const DyadicSymbolFamily& family,
                               ProjKind kind, int axis);

/// Discrete uncentered Hardy-Littlewood maximal function per fiber, over
/// periodic windows of dyadic lengths 1, 2, ..., n. Dominates |F| pointwise.
GridFunction2D hl_maximal_fiber(const GridFunction2D& F, int axis);

/// All projections of one kind, listed in increasing scale order.
std::vector<GridFunction2D> scale_family(const GridFunction2D& F, const DyadicSymbolFamily& family,
                                         ProjKind kind, int axis);

} // namespace mpfw
