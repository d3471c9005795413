#include "scbf/record.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "scbf/error.hpp"

namespace scbf {

void TrajectoryRecord::reserve(std::size_t n) {
  for (auto* v : {&t, &h_norm2, &v_norm2, &lr1_norm, &ledger_residual, &a_norm2, &z_h2, &z_v2, &u_h2})
    v->reserve(n);
}

void write_csv(std::ostream& os, const TrajectoryRecord& record) {
  os << "t,h_norm2,v_norm2,lr1_norm,ledger_residual\n";
  char line[160];
  for (std::size_t i = 0; i < record.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", record.t[i], record.h_norm2[i],
                  record.v_norm2[i], record.lr1_norm[i], record.ledger_residual[i]);
    os << line;
  }
}

void save_csv(const std::filesystem::path& path, const TrajectoryRecord& record) {
  std::ofstream os(path);
  require(bool(os), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_csv(os, record);
}

}  // namespace scbf
