#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ness/correlation.hpp"
#include "ness/errors.hpp"

namespace ness {
namespace {

constexpr std::array<char, 8> kMagic{'N', 'E', 'S', 'S', 'C', 'O', 'R', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = (bits >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) throw Error("truncated correlation cache file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= U(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    put(out, m.data()[i].real());
    put(out, m.data()[i].imag());
  }
}

void get_matrix(std::istream& in, Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    m.data()[i] = cdouble(re, im);
  }
}

}  // namespace

CorrelationCache::CorrelationCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::uint64_t CorrelationCache::hash(const std::string& key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string CorrelationCache::key(const DisorderRealization& disorder,
                                  const ReservoirFilling& filling,
                                  const QuadratureSpec& quadrature,
                                  int window_halfwidth,
                                  const CorrelationOptions& options) {
  std::string potential_bytes(
      reinterpret_cast<const char*>(disorder.potential.data()),
      sizeof(double) * static_cast<std::size_t>(disorder.potential.size()));
  std::ostringstream k;
  k << "corr-v" << kVersion << "|seed=" << disorder.seed
    << "|W=" << hexfloat(disorder.strength)
    << "|L_C=" << disorder.geometry.wire_length()
    << "|potential=" << hash(potential_bytes) << "|mu+=" << hexfloat(filling.mu_plus())
    << "|mu-=" << hexfloat(filling.mu_minus())
    << "|panels=" << quadrature.panels_per_unit_k
    << "|nodes=" << quadrature.nodes_per_panel
    << "|tol=" << hexfloat(quadrature.tolerance)
    << "|maxref=" << quadrature.max_refinements << "|window=" << window_halfwidth
    << "|bound=" << (options.include_bound_states ? 1 : 0);
  return k.str();
}

std::filesystem::path CorrelationCache::path_for(const std::string& key) const {
  char name[40];
  std::snprintf(name, sizeof name, "corr-%016llx.bin",
                static_cast<unsigned long long>(hash(key)));
  return directory_ / name;
}

std::optional<CorrelationMatrix> CorrelationCache::load(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) return std::nullopt;
  if (get<std::uint32_t>(in) != kVersion) return std::nullopt;
  get<std::uint32_t>(in);
  if (get<std::uint64_t>(in) != hash(key)) return std::nullopt;
  const auto key_length = get<std::uint64_t>(in);
  if (key_length != key.size()) return std::nullopt;
  std::string stored(key_length, '\0');
  in.read(stored.data(), static_cast<std::streamsize>(key_length));
  if (!in || stored != key) return std::nullopt;

  CorrelationMatrix c;
  c.window_halfwidth = static_cast<int>(get<std::int64_t>(in));
  c.bound_states = static_cast<int>(get<std::int64_t>(in));
  const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  if (n != 2 * c.window_halfwidth + 1) return std::nullopt;
  c.values.resize(n, n);
  c.bound_part.resize(n, n);
  get_matrix(in, c.values);
  get_matrix(in, c.bound_part);
  c.provenance = "cache:" + key;
  return c;
}

void CorrelationCache::store(const std::string& key, const CorrelationMatrix& c) const {
  const auto path = path_for(key);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write correlation cache file " + tmp);
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, std::uint32_t{0});
    put(out, hash(key));
    put(out, static_cast<std::uint64_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    put(out, static_cast<std::int64_t>(c.window_halfwidth));
    put(out, static_cast<std::int64_t>(c.bound_states));
    put(out, static_cast<std::uint64_t>(c.values.rows()));
    put_matrix(out, c.values);
    put_matrix(out, c.bound_part);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ness
