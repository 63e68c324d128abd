#pragma once

// Little-endian primitive encoding shared by the canonical file formats.

#include "gk/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace gk::binary {

static_assert(std::endian::native == std::endian::little, "canonical formats assume a little-endian host");

template <typename T>
inline void write_raw(std::ostream& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.write(buf, sizeof(T));
}

template <typename T>
inline T read_raw(std::istream& in) {
    char buf[sizeof(T)];
    in.read(buf, sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) throw InputError("unexpected end of binary data");
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

inline void write_u8(std::ostream& out, std::uint8_t v) { write_raw(out, v); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_raw(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_raw(out, v); }
inline void write_f32(std::ostream& out, float v) { write_raw(out, v); }
inline void write_f64(std::ostream& out, double v) { write_raw(out, v); }

inline std::uint8_t read_u8(std::istream& in) { return read_raw<std::uint8_t>(in); }
inline std::uint32_t read_u32(std::istream& in) { return read_raw<std::uint32_t>(in); }
inline std::uint64_t read_u64(std::istream& in) { return read_raw<std::uint64_t>(in); }
inline float read_f32(std::istream& in) { return read_raw<float>(in); }
inline double read_f64(std::istream& in) { return read_raw<double>(in); }

}  // namespace gk::binary
