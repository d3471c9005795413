#include "scbf/spectrum.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <string>

#include "scbf/error.hpp"

namespace scbf {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::NeedsLongerHorizon: return "needs-longer-horizon";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

StokesSpectrum::StokesSpectrum(int k_max) : k_max_(k_max) {
  require(k_max >= 1, ErrorKind::InvalidParameter,
          "K_max must be >= 1, got " + std::to_string(k_max));
  const int k2max = k_max * k_max;
  for (int a = -k_max; a <= k_max; ++a) {
    for (int b = -k_max; b <= k_max; ++b) {
      const WaveVector k{a, b};
      if (k.norm2() > 0 && k.norm2() <= k2max) modes_.push_back(k);
    }
  }
  std::sort(modes_.begin(), modes_.end(), [](const WaveVector& x, const WaveVector& y) {
    if (x.norm2() != y.norm2()) return x.norm2() < y.norm2();
    return x < y;
  });

  eigenvalues_.resize(size());
  k1_.resize(size());
  k2_.resize(size());
  const int side = 2 * k_max + 1;
  lookup_.assign(static_cast<std::size_t>(side * side), -1);
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& k = modes_[static_cast<std::size_t>(i)];
    eigenvalues_[i] = static_cast<double>(k.norm2());
    k1_[i] = k.k1;
    k2_[i] = k.k2;
    lookup_[static_cast<std::size_t>((k.k1 + k_max) * side + (k.k2 + k_max))] = i;
  }
  conjugate_.resize(modes_.size());
  for (Eigen::Index i = 0; i < size(); ++i) conjugate_[static_cast<std::size_t>(i)] = index_of(-mode(i));
}

Eigen::Index StokesSpectrum::index_of(const WaveVector& k) const {
  if (k.k1 < -k_max_ || k.k1 > k_max_ || k.k2 < -k_max_ || k.k2 > k_max_) return -1;
  const int side = 2 * k_max_ + 1;
  return lookup_[static_cast<std::size_t>((k.k1 + k_max_) * side + (k.k2 + k_max_))];
}

SpectrumPtr build_basis(int k_max) {
  static std::mutex mutex;
  static std::map<int, SpectrumPtr> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[k_max];
  if (!slot) {
    try {
      slot = std::make_shared<const StokesSpectrum>(k_max);
    } catch (...) {
      cache.erase(k_max);
      throw;
    }
  }
  return slot;
}

}  // namespace scbf
