#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace scbf {

/// Scalar diagnostics of one trajectory, one row per recorded time.
/// h_norm2, v_norm2 and a_norm2 refer to the transformed state v; lr1_norm is
/// ‖v + εz‖^{r+1}_{L^{r+1}}. ledger_residual holds the largest normalized
/// H-energy residual over the steps that ended at this row (0 on row 0).
struct TrajectoryRecord {
  std::vector<double> t;
  std::vector<double> h_norm2;
  std::vector<double> v_norm2;
  std::vector<double> lr1_norm;
  std::vector<double> ledger_residual;
  std::vector<double> a_norm2;
  std::vector<double> z_h2;
  std::vector<double> z_v2;
  std::vector<double> u_h2;
  // Recording stride in steps; 1 means every step.
  int stride = 1;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
  void reserve(std::size_t n);
};

/// t,h_norm2,v_norm2,lr1_norm,ledger_residual with round-trip precision.
void write_csv(std::ostream& os, const TrajectoryRecord& record);
void save_csv(const std::filesystem::path& path, const TrajectoryRecord& record);

}  // namespace scbf
