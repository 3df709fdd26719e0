#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcz/contiguity.hpp"
#include "pcz/geo.hpp"
#include "pcz/ingest.hpp"
#include "pcz/network.hpp"
#include "pcz/zoning.hpp"

namespace pcz::io {

// ---------- readers ----------

// GeoJSON FeatureCollection with properties id, population, employment,
// area_m2 and Polygon/MultiPolygon geometry. All four properties are
// required; a missing area_m2 is an error (areas are never recomputed).
std::vector<Taz> read_taz_geojson(const std::string& path);

// CSV header: origin_id,dest_id,km
std::vector<DistanceEntry> read_distance_csv(const std::string& path);

// CSV header: origin_id,dest_id,trips
FlowMatrix read_flow_csv(const std::string& path);

// CSV header: taz_id,zone_id
std::vector<std::pair<TazId, int>> read_partition_csv(const std::string& path);
Partition partition_for_network(const std::vector<std::pair<TazId, int>>& rows,
                                const SpatialNetwork& net);

// ---------- writers (write to <path>.tmp, then rename) ----------

void write_text_atomic(const std::string& path, const std::string& content);

void write_flow_csv(const std::string& path, const FlowMatrix& flows);
void write_trip_csv(const std::string& path, const std::vector<TripRecord>& trips);
void write_taz_geojson(const std::string& path, const std::vector<Taz>& tazs);
void write_truth_csv(const std::string& path, const std::vector<Taz>& tazs,
                     const std::vector<int>& block_of);
void write_partition_csv(const std::string& path, const SpatialNetwork& net,
                         const Partition& partition);
// Upper triangle plus diagonal: i,j,weight,distance_km
void write_network_csv(const std::string& path, const SpatialNetwork& net);

struct PlanMeta {
  std::string quality_kind;
  double alpha = 1.0;
  std::string m_convention;
  double distance_floor_km = 0.05;
  std::string intrazonal_rule = "0.5*sqrt(area_m2/pi) km";
  bool drop_self_loops = false;
  std::uint64_t seed = 0;
  int repair_merges = 0;
  int repair_negative_gain_merges = 0;
};

std::string cleaning_report_json(const CleaningReport& report);
std::string zone_plan_json(const ZonePlan& plan, const PlanMeta& meta);
std::string detection_trace_json(const std::vector<double>& trace, int iterations,
                                 std::uint64_t seed);
std::string repair_log_jsonl(const std::vector<RepairRecord>& log);
std::string comparison_json(const PlanComparison& cmp);

// Per-TAZ features carrying zone_id.
void write_zones_geojson(const std::string& path, const std::vector<Taz>& tazs,
                         const SpatialNetwork& net, const Partition& partition);
// Dissolved zone outlines (shared internal edges cancelled and re-stitched).
void write_zone_outlines_geojson(const std::string& path,
                                 const std::vector<Taz>& tazs,
                                 const SpatialNetwork& net,
                                 const Partition& partition);

// ---------- manifest ----------

std::uint64_t fnv1a64_file(const std::string& path);
// inputs: (label, path) pairs; outputs: artifact file names.
std::string manifest_json(const std::vector<std::pair<std::string, std::string>>& inputs,
                          const std::vector<std::string>& outputs);

}  // namespace pcz::io
