#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ness/lattice.hpp"
#include "ness/quadrature.hpp"
#include "ness/scattering.hpp"

namespace ness {

/// C(x, y) = sum over occupied states of phi(x) conj(phi(y)) on the centered
/// window |x|, |y| <= window_halfwidth.
struct CorrelationMatrix {
  int window_halfwidth = 0;
  Eigen::MatrixXcd values;
  /// Rank-one bound-state part already included in `values`.
  Eigen::MatrixXcd bound_part;
  int bound_states = 0;
  std::string provenance;

  cdouble operator()(int x, int y) const {
    return values(x + window_halfwidth, y + window_halfwidth);
  }
  /// Principal block on the centered subsystem A(L).
  Eigen::MatrixXcd subsystem(int L, bool include_bound_states = true) const;
};

struct CorrelationOptions {
  bool include_bound_states = true;
  /// Workers for the per-chunk outer products (result does not depend on it).
  int threads = 1;
};

/// Refinement history of a build.
struct CorrelationDiagnostics {
  int level = 0;
  double last_change = 0.0;
  std::size_t nodes = 0;
};

CorrelationMatrix build_correlation(const DisorderRealization& disorder,
                                    const ReservoirFilling& filling,
                                    const QuadratureSpec& quadrature,
                                    int window_halfwidth,
                                    const CorrelationOptions& options = {},
                                    CorrelationDiagnostics* diagnostics = nullptr);

/// Spectral projector onto energies below mu of the open wire (bound states
/// included) on the centered window: (1/pi) Im of the resolvent integrated
/// over the upper half of a circle through mu. The angle is split into
/// panels halving toward the real axis, each halved `level` times.
Eigen::MatrixXd equilibrium_projector(const DisorderRealization& disorder, double mu,
                                      int window_halfwidth, const QuadratureSpec& quadrature,
                                      int level, int threads = 1);

/// Left-incident states with k_F- < k < k_F+ at one fixed quadrature level.
Eigen::MatrixXcd bias_window_correlation(const DisorderRealization& disorder,
                                         const ReservoirFilling& filling,
                                         const QuadratureSpec& quadrature,
                                         int window_halfwidth, int level, int threads = 1);

/// All occupied scattering states integrated in k at one fixed quadrature
/// level (no refinement, no bound states). An independent route to the
/// continuum part of C.
Eigen::MatrixXcd scattering_correlation(const DisorderRealization& disorder,
                                        const ReservoirFilling& filling,
                                        const QuadratureSpec& quadrature,
                                        int window_halfwidth, int level,
                                        int threads = 1);

/// Closed form of C for the clean wire:
/// (exp(i kF+ d) - exp(-i kF- d)) / (2 pi i d), d = x - y; (kF+ + kF-)/2pi at d = 0.
cdouble clean_kernel(const ReservoirFilling& filling, int x, int y);

/// Binary cache of correlation matrices keyed by a content hash.
///
/// File layout, all little-endian:
///   char[8]  magic "NESSCORR"
///   u32      format version (1)
///   u32      reserved (0)
///   u64      key hash (FNV-1a 64 of the key string)
///   u64      key length, followed by the key bytes
///   i64      window_halfwidth
///   i64      bound_states
///   u64      n (matrix dimension)
///   f64[2n^2] values, column-major (re, im)
///   f64[2n^2] bound_part, column-major (re, im)
class CorrelationCache {
 public:
  explicit CorrelationCache(std::filesystem::path directory);

  static std::string key(const DisorderRealization& disorder,
                         const ReservoirFilling& filling,
                         const QuadratureSpec& quadrature, int window_halfwidth,
                         const CorrelationOptions& options);
  static std::uint64_t hash(const std::string& key);

  std::optional<CorrelationMatrix> load(const std::string& key) const;
  void store(const std::string& key, const CorrelationMatrix& matrix) const;
  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path directory_;
};

/// build_correlation through an optional cache.
CorrelationMatrix cached_correlation(const CorrelationCache* cache,
                                     const DisorderRealization& disorder,
                                     const ReservoirFilling& filling,
                                     const QuadratureSpec& quadrature,
                                     int window_halfwidth,
                                     const CorrelationOptions& options = {});

}  // namespace ness
