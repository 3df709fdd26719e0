#pragma once

#include <cstdint>
#include <vector>

#include "pcz/quality.hpp"

namespace pcz {

struct LeidenParams {
  std::uint64_t seed = 42;
  int max_outer_iters = 100;
  // Refinement randomness: targets are drawn with probability proportional
  // to exp(gain / theta); theta -> 0 degenerates to argmax.
  double theta = 0.01;
  QualityConfig quality;
  double min_gain = 1e-9;  // outer-loop convergence epsilon
};

struct DetectionResult {
  Partition partition;  // canonical labels, every zone flow-connected
  // Quality of the flattened partition after each outer iteration; one extra
  // entry is appended if the final connectivity pass split any zone.
  std::vector<double> quality_trace;
  int iterations = 0;
  std::uint64_t seed_used = 0;
};

// Three-phase Leiden loop (local moving, refinement, aggregation) maximizing
// the configured quality. Deterministic for a fixed (net, params.seed):
// nodes are visited in canonical order (ascending TAZ id) on the first pass
// and via a FIFO queue of affected neighbors afterwards; equal-gain targets
// tie-break to the lowest zone id.
DetectionResult detect(const SpatialNetwork& net, const LeidenParams& params);

// Contracts a partition into a super-node network: inter-zone weights are
// summed, self-loops carry the internal weight (each internal undirected edge
// twice plus member self-loops), distances are flow-weighted means of
// member-pair distances, and population/area are summed.
SpatialNetwork aggregate(const SpatialNetwork& net, const Partition& partition);

}  // namespace pcz
