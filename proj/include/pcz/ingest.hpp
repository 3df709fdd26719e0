#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pcz/geo.hpp"

namespace pcz {

enum class Mode { FFBS = 0, PublicBike = 1, Metro = 2, Bus = 3 };
constexpr int kModeCount = 4;

const char* mode_name(Mode mode);
std::optional<Mode> parse_mode(const std::string& token);

struct TripRecord {
  Mode mode = Mode::FFBS;
  std::string user_id;
  std::string date;              // YYYY-MM-DD as given
  std::int64_t origin_time_s = 0;  // seconds since local midnight
  std::int64_t dest_time_s = 0;
  LonLat origin_loc;
  LonLat dest_loc;

  // May be negative in raw input; cleaning enforces positive durations.
  std::int64_t duration_s() const { return dest_time_s - origin_time_s; }
};

struct MalformedRow {
  std::size_t line = 0;
  std::string reason;  // "null-field" or "bad-row"
};

struct ParseResult {
  std::vector<TripRecord> records;
  std::vector<MalformedRow> malformed;
  std::int64_t input_rows = 0;  // data rows, excluding the header
  std::int64_t null_field_rows = 0;
  std::int64_t bad_rows = 0;
};

// Trip CSV header (fixed):
//   mode,user_id,date,origin_time,origin_lon,origin_lat,dest_time,dest_lon,dest_lat
// Malformed rows are collected, not fatal. If expected_mode is set, rows with
// a different mode are routed to the malformed list.
ParseResult parse_trips(const std::string& path,
                        std::optional<Mode> expected_mode = std::nullopt);

struct ModeBounds {
  double min_speed_kmh = 0.0;   // exclusive
  double max_speed_kmh = 0.0;   // inclusive
  double min_duration_s = 0.0;  // inclusive
  double max_duration_s = 0.0;  // inclusive
};

struct CleanRules {
  ModeBounds bike{0.0, 35.0, 60.0, 4.0 * 3600.0};      // FFBS + public bike
  ModeBounds transit{0.0, 120.0, 60.0, 6.0 * 3600.0};  // metro + bus
  std::optional<BoundingBox> coordinate_bounds;  // study-area box, pre-buffered

  const ModeBounds& bounds_for(Mode mode) const {
    return (mode == Mode::Metro || mode == Mode::Bus) ? transit : bike;
  }
};

// One report object accumulates counts across the whole pipeline:
// parse fills null_field/bad_rows, clean fills the drop reasons, and
// spatial_join fills unmatched_endpoint.
struct CleaningReport {
  std::int64_t input_rows = 0;
  std::int64_t parsed = 0;
  std::int64_t bad_rows = 0;
  std::int64_t null_field = 0;
  std::int64_t duplicate = 0;
  std::int64_t out_of_bounds = 0;
  std::int64_t speed_anomaly = 0;
  std::int64_t duration_anomaly = 0;
  std::int64_t cleaned = 0;
  std::int64_t unmatched_endpoint = 0;
  std::int64_t matched = 0;

  std::int64_t dropped_in_clean() const {
    return duplicate + out_of_bounds + speed_anomaly + duration_anomaly;
  }
  void absorb_parse(const ParseResult& parse);
};

std::pair<std::vector<TripRecord>, CleaningReport> clean_trips(
    std::vector<TripRecord> records, const CleanRules& rules);

struct JoinedTrip {
  TazId origin = 0;
  TazId dest = 0;
  Mode mode = Mode::FFBS;
};

struct JoinResult {
  std::vector<JoinedTrip> trips;
  std::int64_t unmatched = 0;
};

// Point-in-polygon assignment of both endpoints; boundary ties go to the
// lowest TAZ id. Endpoints outside every TAZ drop the trip.
JoinResult spatial_join(const std::vector<TripRecord>& records,
                        const std::vector<Taz>& tazs);

struct FlowMatrix {
  std::map<std::pair<TazId, TazId>, std::int64_t> flows;  // (origin, dest) -> trips
  std::int64_t total_trips = 0;
  std::array<std::int64_t, kModeCount> by_mode{};

  std::int64_t at(TazId origin, TazId dest) const {
    auto it = flows.find({origin, dest});
    return it == flows.end() ? 0 : it->second;
  }
  void add(TazId origin, TazId dest, std::int64_t trips, std::optional<Mode> mode = std::nullopt);
};

FlowMatrix aggregate_flows(const std::vector<JoinedTrip>& trips);

}  // namespace pcz
