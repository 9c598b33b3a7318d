#pragma once

#include "qmoments/moments.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qmoments {

/// Flat record: a header line "n m t", then one line per order holding the
/// row-major entries as "re im" pairs. Numbers use 17 significant digits.
void write_hierarchy_record(std::ostream& out, const MomentHierarchy& h, double t);

struct HierarchyRecord {
  double t = 0.0;
  MomentHierarchy hierarchy;
};

/// Throws std::runtime_error on malformed input.
HierarchyRecord read_hierarchy_record(std::istream& in);

struct TrajectoryPoint {
  double t = 0.0;
  MomentHierarchy hierarchy;
};

/// CSV trajectory. Leading '#' lines carry metadata (key=value pairs,
/// `n` and `m` added when absent); the table has columns t,order,index,re,im
/// where index lists the phase indices of the slots joined by ':' (empty for
/// order 0).
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory,
                          const std::vector<std::pair<std::string, std::string>>& metadata = {});

struct TrajectoryTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<TrajectoryPoint> points;
};

/// Reads a table written by write_trajectory_csv. Requires `n` and `m` metadata.
TrajectoryTable read_trajectory_csv(std::istream& in);

/// Shortest formatting that keeps 17 significant digits.
std::string format_number(double x);

}  // namespace qmoments
