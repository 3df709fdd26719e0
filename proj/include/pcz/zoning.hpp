#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcz/geo.hpp"
#include "pcz/quality.hpp"

namespace pcz {

struct MergeObjective {
  int k_target = 1;
  double lambda_pop = 1.0;
  double lambda_area = 1.0;
  bool exact = false;  // exhaustive search, input must have <= 16 zones
};

struct ZoneStats {
  int zone_id = 0;
  double area_km2 = 0.0;
  std::int64_t population = 0;
  std::int64_t intra_trips = 0;  // both endpoints inside the zone
  std::int64_t total_trips = 0;  // origin OR destination inside the zone
  double cutoff_pct = 0.0;       // 100 * (1 - intra/total)
};

struct ZonePlan {
  Partition partition;
  std::vector<ZoneStats> zones;
  std::int64_t grand_total_trips = 0;
  std::int64_t intra_sum = 0;
  double total_cutoff_pct = 0.0;  // 100 * (1 - intra_sum/grand_total)
  // Filled by the pipeline; 0 when not computed.
  double q_standard = 0.0;
  double q_geographic = 0.0;
};

double cutoff_percentage(std::int64_t intra, std::int64_t total);

// Per-zone trip accounting over directed flows. A trip crossing zones counts
// toward both endpoint zones' totals; the plan-level Sum row uses the grand
// total, matching the published-table convention.
ZonePlan cutoff_stats(const Partition& partition, const SpatialNetwork& net);

struct MergeStep {
  int zone_a = 0;
  int zone_b = 0;
  std::int64_t saved_trips = 0;
  double score = 0.0;
};

// Greedy agglomeration to k zones: each step merges the adjacent zone pair
// maximizing cut-trips saved minus weighted balance penalties (deltas of the
// coefficient of variation of population and area). `exact` enumerates every
// contiguous k-partition instead and minimizes total cut-off plus the
// weighted final imbalances.
ZonePlan merge_to_k(const ZonePlan& plan, const AdjacencyGraph& adj,
                    const SpatialNetwork& net, const MergeObjective& objective,
                    std::vector<MergeStep>* steps = nullptr);

struct PlanComparison {
  ZonePlan ours;
  ZonePlan reference;
  double delta_total_cutoff_points = 0.0;  // reference - ours
};

PlanComparison compare_to_reference(const Partition& ours, const Partition& reference,
                                    const SpatialNetwork& net);

}  // namespace pcz
