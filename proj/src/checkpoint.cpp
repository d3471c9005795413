#include "scbf/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "scbf/error.hpp"

namespace scbf {

namespace binary {

namespace {

template <std::size_t N>
void put_bytes(std::ostream& os, std::uint64_t v) {
  std::array<char, N> buf;
  for (std::size_t i = 0; i < N; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf.data(), N);
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

template <std::size_t N>
std::uint64_t get_bytes(std::istream& is) {
  std::array<unsigned char, N> buf;
  is.read(reinterpret_cast<char*>(buf.data()), N);
  if (!is) throw Error(ErrorKind::Io, "unexpected end of checkpoint data");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < N; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
  return v;
}

}  // namespace

void put_u32(std::ostream& os, std::uint32_t v) { put_bytes<4>(os, v); }
void put_i32(std::ostream& os, std::int32_t v) { put_bytes<4>(os, static_cast<std::uint32_t>(v)); }
void put_u64(std::ostream& os, std::uint64_t v) { put_bytes<8>(os, v); }
void put_f64(std::ostream& os, double v) { put_bytes<8>(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_bytes<4>(is)); }
std::int32_t get_i32(std::istream& is) { return static_cast<std::int32_t>(get_u32(is)); }
std::uint64_t get_u64(std::istream& is) { return get_bytes<8>(is); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_bytes<8>(is)); }

}  // namespace binary

void write_field(std::ostream& os, const SpectralField& u) {
  os.write("SCBF", 4);
  binary::put_u32(os, kFieldFormatVersion);
  binary::put_u32(os, static_cast<std::uint32_t>(u.k_max()));
  binary::put_u32(os, static_cast<std::uint32_t>(u.size()));
  for (const auto& k : u.spectrum().modes()) {
    binary::put_i32(os, k.k1);
    binary::put_i32(os, k.k2);
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (int c = 0; c < 2; ++c) {
      binary::put_f64(os, u.coeffs()(i, c).real());
      binary::put_f64(os, u.coeffs()(i, c).imag());
    }
  }
}

SpectralField read_field(std::istream& is, SpectrumPtr spectrum) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SCBF", 4) != 0) {
    throw Error(ErrorKind::InvalidInput, "not a field checkpoint (bad magic)");
  }
  const std::uint32_t version = binary::get_u32(is);
  require(version == kFieldFormatVersion, ErrorKind::InvalidInput,
          "unsupported checkpoint version " + std::to_string(version));
  const auto k_max = static_cast<int>(binary::get_u32(is));
  const std::uint32_t count = binary::get_u32(is);
  if (!spectrum) spectrum = build_basis(k_max);
  require(spectrum->k_max() == k_max && spectrum->size() == Eigen::Index(count),
          ErrorKind::ShapeMismatch, "checkpoint K_max/mode count does not match");
  for (Eigen::Index i = 0; i < spectrum->size(); ++i) {
    const WaveVector k{binary::get_i32(is), binary::get_i32(is)};
    require(k == spectrum->mode(i), ErrorKind::InvalidInput, "checkpoint mode ordering differs");
  }
  ModeCoeffs c(spectrum->size(), 2);
  for (Eigen::Index i = 0; i < spectrum->size(); ++i) {
    for (int j = 0; j < 2; ++j) {
      const double re = binary::get_f64(is);
      const double im = binary::get_f64(is);
      c(i, j) = Complex(re, im);
    }
  }
  return SpectralField(std::move(spectrum), std::move(c));
}

void save_field(const std::filesystem::path& path, const SpectralField& u) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_field(os, u);
}

SpectralField load_field(const std::filesystem::path& path, SpectrumPtr spectrum) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorKind::Io, "cannot open " + path.string());
  return read_field(is, std::move(spectrum));
}

}  // namespace scbf
