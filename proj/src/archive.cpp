#include "wgain/archive.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include "wgain/errors.hpp"

namespace wgain {
namespace {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

constexpr char kMagic[8] = {'W', 'G', 'A', 'I', 'N', 'A', 'R', 'R'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw LoadError("truncated archive " + path.string());
  return v;
}

}  // namespace

void write_archive(const std::filesystem::path& path, std::span<const NamedArray> arrays) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IngestionError("cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    const auto n = std::accumulate(a.shape.begin(), a.shape.end(), std::int64_t{1}, std::multiplies<>());
    if (n != static_cast<std::int64_t>(a.data.size()))
      throw ContractError("array '" + a.name + "' data does not match its shape");
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.name.size()));
    os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::int64_t>(os, d);
    os.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  }
  if (!os) throw IngestionError("failed writing " + path.string());
}

std::vector<NamedArray> read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw LoadError(path.string() + " is not an array archive");
  if (get<std::uint32_t>(is, path) != kVersion) throw LoadError("unsupported archive version in " + path.string());
  const auto count = get<std::uint32_t>(is, path);
  std::vector<NamedArray> out(count);
  for (auto& a : out) {
    const auto len = get<std::uint32_t>(is, path);
    a.name.resize(len);
    if (!is.read(a.name.data(), len)) throw LoadError("truncated archive " + path.string());
    const auto nd = get<std::uint32_t>(is, path);
    std::int64_t n = 1;
    for (std::uint32_t i = 0; i < nd; ++i) {
      a.shape.push_back(get<std::int64_t>(is, path));
      if (a.shape.back() < 0) throw LoadError("negative dimension in " + path.string());
      n *= a.shape.back();
    }
    a.data.resize(static_cast<std::size_t>(n));
    if (!is.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(n * sizeof(double))))
      throw LoadError("truncated archive " + path.string());
  }
  return out;
}

std::string sha256_hex(std::span<const std::byte> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_hex(std::span<const double> values) { return sha256_hex(std::as_bytes(values)); }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return sha256_hex(std::as_bytes(std::span<const char>(buf)));
}

}  // namespace wgain
