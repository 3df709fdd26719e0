#pragma once

#include <string>
#include <vector>

#include "pcz/geo.hpp"
#include "pcz/quality.hpp"

namespace pcz {

enum class FragmentKind { EnclaveOneNeighbor, EnclaveMultiNeighbor, Orphan };

const char* to_string(FragmentKind kind);

struct Fragment {
  std::vector<int> members;  // node indices, one polygon-adjacency component
  FragmentKind kind = FragmentKind::Orphan;
  std::vector<int> neighbor_zones;  // polygon-adjacent zones, ascending
  double total_trips = 0.0;         // sum of member strengths
};

// Splits every zone whose members are not polygon-connected into its
// adjacency components. The largest component (by total trips, tie -> area,
// tie -> lowest member id) keeps the original zone id; the rest get fresh
// ids and are flagged as fragments.
struct SplitResult {
  Partition partition;
  std::vector<char> is_fragment;  // per zone of `partition`
};

SplitResult split_components(const Partition& partition, const AdjacencyGraph& adj,
                             const SpatialNetwork& net);

// Classifies one fragment zone against the paper-style rules: a sole
// polygon neighbor is an enclave (rule 1), several neighbors with flow to at
// least one of them is a multi-neighbor enclave (rule 2), and no flow to any
// polygon neighbor is an orphan (rule 3). Throws IslandNoNeighbors when the
// fragment has no polygon neighbors at all.
Fragment classify_fragment(int zone, const Partition& partition,
                           const AdjacencyGraph& adj, const SpatialNetwork& net);

struct RepairRecord {
  std::vector<TazId> fragment;  // member TAZ ids
  std::string rule;             // "enclave-one-neighbor", "enclave-max-gain",
                                // "orphan-smallest-area", "island-untouched"
  int target_zone = -1;         // final zone id, -1 for untouched islands
  double delta_q = 0.0;
  bool negative_gain = false;   // rule-2 fallback fired
};

struct RepairOptions {
  QualityConfig quality;
  double min_zone_km2 = 0.0;  // 0 disables the minimum-area rule
};

struct RepairResult {
  Partition partition;  // canonical labels, fully polygon-contiguous
  std::vector<RepairRecord> log;
};

// Applies the three constraint rules until every zone is polygon-connected
// and meets the minimum-area threshold. Fragments are processed smallest
// first by total trips. Throws NonConvergence if the pass bound (initial
// fragment count + zone count) is exceeded.
RepairResult repair(const Partition& partition, const AdjacencyGraph& adj,
                    const SpatialNetwork& net, const RepairOptions& options);

}  // namespace pcz
