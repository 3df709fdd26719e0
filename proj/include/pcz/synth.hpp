#pragma once

#include <cstdint>
#include <vector>

#include "pcz/geo.hpp"
#include "pcz/ingest.hpp"

namespace pcz {

// Desk-scale gravity city over a rows x cols grid of square cells, with a
// planted block structure: flows are drawn with probability proportional to
// pop_i * pop_j / d_ij^beta, boosted by intra_block_multiplier within blocks.
struct SyntheticCitySpec {
  int rows = 20;
  int cols = 20;
  double cell_km = 1.0;
  int block_rows = 2;  // blocks must tile the grid
  int block_cols = 2;
  double beta = 2.0;
  double intra_block_multiplier = 10.0;
  std::int64_t total_trips = 200000;
  std::uint64_t seed = 42;
  LonLat origin{118.5, 31.8};  // south-west corner
  std::int64_t min_population = 2000;
  std::int64_t max_population = 8000;
};

struct SyntheticCity {
  std::vector<Taz> tazs;        // ids 0..rows*cols-1, ascending
  std::vector<int> block_of;    // planted truth, indexed by TAZ id
  FlowMatrix flows;             // integer draws, total == spec.total_trips
  // Generator bookkeeping: directed trips between distinct blocks.
  std::int64_t inter_block_trips = 0;
};

SyntheticCity generate_city(const SyntheticCitySpec& spec);

// Expands the sampled flow matrix into individual trip rows with plausible
// endpoints inside the cells, times, and modes; all rows survive the default
// cleaning rules. Row count equals the flow total exactly.
std::vector<TripRecord> materialize_trips(const SyntheticCity& city,
                                          std::uint64_t seed);

}  // namespace pcz
