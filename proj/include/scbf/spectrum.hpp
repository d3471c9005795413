#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace scbf {

/// Integer wavenumber on the 2π-periodic torus.
struct WaveVector {
  int k1 = 0;
  int k2 = 0;

  constexpr int norm2() const { return k1 * k1 + k2 * k2; }
  constexpr WaveVector operator-() const { return {-k1, -k2}; }
  constexpr auto operator<=>(const WaveVector&) const = default;
};

/// Eigenbasis of the Stokes operator on zero-mean divergence-free fields:
/// every wavevector with 0 < |k|² <= K_max², ordered by eigenvalue |k|² and
/// then lexicographically by (k1, k2).
class StokesSpectrum {
 public:
  explicit StokesSpectrum(int k_max);

  int k_max() const { return k_max_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(modes_.size()); }

  const std::vector<WaveVector>& modes() const { return modes_; }
  const WaveVector& mode(Eigen::Index i) const { return modes_[static_cast<std::size_t>(i)]; }

  /// λ_k = |k|², nondecreasing.
  const Eigen::ArrayXd& eigenvalues() const { return eigenvalues_; }
  double lambda1() const { return eigenvalues_[0]; }
  /// Components of every mode as reals, for vectorized derivatives.
  const Eigen::ArrayXd& k1() const { return k1_; }
  const Eigen::ArrayXd& k2() const { return k2_; }

  /// Position of k in the ordering, or -1 when k is not retained.
  Eigen::Index index_of(const WaveVector& k) const;

  /// Position of -k for the mode at position i.
  Eigen::Index conjugate_index(Eigen::Index i) const { return conjugate_[static_cast<std::size_t>(i)]; }

  /// True for the representative of each {k, -k} pair: k2 > 0, or k2 == 0 and k1 > 0.
  static constexpr bool is_upper_half(const WaveVector& k) {
    return k.k2 > 0 || (k.k2 == 0 && k.k1 > 0);
  }

 private:
  int k_max_;
  std::vector<WaveVector> modes_;
  Eigen::ArrayXd eigenvalues_;
  Eigen::ArrayXd k1_;
  Eigen::ArrayXd k2_;
  std::vector<Eigen::Index> conjugate_;
  std::vector<Eigen::Index> lookup_;  // (2K+1)² table
};

using SpectrumPtr = std::shared_ptr<const StokesSpectrum>;

/// Shared, cached per K_max. Throws invalid-parameter for k_max < 1.
SpectrumPtr build_basis(int k_max);

}  // namespace scbf
