#pragma once

#include "othr/common.hpp"

#include <vector>

namespace othr {

/// Optimal rectangular linear assignment (Hungarian method with potentials).
/// Entries that are not finite are forbidden pairs. Returns, for each row, the
/// assigned column or -1.
[[nodiscard]] std::vector<int> solve_assignment(const MatX& cost);

}  // namespace othr
