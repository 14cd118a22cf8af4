#include "mpfw/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mpfw {

namespace {

constexpr char kMagic[5] = {'M', 'P', 'F', 'W', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double x) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

void write_payload(const std::string& path, std::uint32_t n, std::uint8_t flag,
                   std::span<const cplx> payload) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kMagic, 5);
    put_u32(os, n);
    os.put(static_cast<char>(flag));
    for (const auto& z : payload) {
        put_f64(os, z.real());
        put_f64(os, z.imag());
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

struct RawFile {
    std::uint32_t n;
    std::uint8_t flag;
    std::vector<cplx> payload;
};

RawFile read_payload(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, kMagic, 5) != 0)
        throw std::runtime_error("not an MPFW1 file: " + path);
    RawFile rf;
    rf.n = get_u32(is);
    const int flag = is.get();
    if (flag != 0 && flag != 1)
        throw std::runtime_error("MPFW1 flag byte must be 0 or 1 in " + path);
    rf.flag = static_cast<std::uint8_t>(flag);
    if (!is_pow2(rf.n) || rf.n < 8)
        throw std::runtime_error("MPFW1 grid size invalid in " + path);
    // Payload length distinguishes n x n tables from n x 1 symbols.
    while (true) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        if (!is) break;
        rf.payload.emplace_back(re, im);
    }
    const std::size_t count = rf.payload.size();
    if (count != std::size_t(rf.n) * rf.n && !(rf.flag == 1 && count == rf.n))
        throw std::runtime_error("MPFW1 payload of " + std::to_string(count) +
                                 " entries does not match its header in " + path);
    return rf;
}

} // namespace

void write_field(const std::string& path, const GridFunction2D& F) {
    write_payload(path, F.n(), 0, F.data());
}

void write_spectrum(const std::string& path, const Spectrum2D& S) {
    write_payload(path, S.n(), 1, S.data());
}

void write_symbol(const std::string& path, const Symbol1D& sym) {
    write_payload(path, sym.n(), 1, sym.data());
}

GridFunction2D read_field(const std::string& path) {
    RawFile rf = read_payload(path);
    if (rf.flag != 0) throw std::runtime_error("expected physical samples (flag 0) in " + path);
    return GridFunction2D(rf.n, std::move(rf.payload));
}

Spectrum2D read_spectrum(const std::string& path) {
    RawFile rf = read_payload(path);
    if (rf.flag != 1 || rf.payload.size() != std::size_t(rf.n) * rf.n)
        throw std::runtime_error("expected an n x n spectrum (flag 1) in " + path);
    return Spectrum2D(rf.n, std::move(rf.payload));
}

Symbol1D read_symbol(const std::string& path) {
    RawFile rf = read_payload(path);
    if (rf.flag != 1 || rf.payload.size() != rf.n)
        throw std::runtime_error("expected an n x 1 symbol (flag 1) in " + path);
    return Symbol1D(rf.n, std::move(rf.payload));
}

std::variant<GridFunction2D, Spectrum2D, Symbol1D> read_mpfw(const std::string& path) {
    RawFile rf = read_payload(path);
    if (rf.flag == 0) return GridFunction2D(rf.n, std::move(rf.payload));
    if (rf.payload.size() == rf.n) return Symbol1D(rf.n, std::move(rf.payload));
    return Spectrum2D(rf.n, std::move(rf.payload));
}

} // namespace mpfw
