#pragma once

#include <string>
#include <variant>

#include "mpfw/bumps.hpp"
#include "mpfw/grid.hpp"

namespace mpfw {

/// Binary container "MPFW1": 5-byte magic, u32 little-endian grid size,
/// u8 flag (0 physical samples, 1 spectrum), then little-endian float64
/// (re, im) pairs, row-major with row = first coordinate. Fields and
/// spectra carry n^2 pairs; 1-D symbols carry n pairs with flag 1.
void write_field(const std::string& path, const GridFunction2D& F);
void write_spectrum(const std::string& path, const Spectrum2D& S);
void write_symbol(const std::string& path, const Symbol1D& sym);

GridFunction2D read_field(const std::string& path);
Spectrum2D read_spectrum(const std::string& path);
Symbol1D read_symbol(const std::string& path);

/// Reads any payload kind, dispatching on the flag byte and payload size.
std::variant<GridFunction2D, Spectrum2D, Symbol1D> read_mpfw(const std::string& path);

} // namespace mpfw
