#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "scbf/field.hpp"

namespace scbf {

namespace binary {
// Little-endian encoding independent of host byte order.
void put_u32(std::ostream& os, std::uint32_t v);
void put_i32(std::ostream& os, std::int32_t v);
void put_u64(std::ostream& os, std::uint64_t v);
void put_f64(std::ostream& os, double v);
std::uint32_t get_u32(std::istream& is);
std::int32_t get_i32(std::istream& is);
std::uint64_t get_u64(std::istream& is);
double get_f64(std::istream& is);
}  // namespace binary

inline constexpr std::uint32_t kFieldFormatVersion = 1;

/// "SCBF", version, K_max, mode count, (k1,k2) per mode, then
/// (re û1, im û1, re û2, im û2) per mode.
void write_field(std::ostream& os, const SpectralField& u);
/// Reads one field. With a spectrum given, K_max and the mode list must match.
SpectralField read_field(std::istream& is, SpectrumPtr spectrum = nullptr);

void save_field(const std::filesystem::path& path, const SpectralField& u);
SpectralField load_field(const std::filesystem::path& path, SpectrumPtr spectrum = nullptr);

}  // namespace scbf
