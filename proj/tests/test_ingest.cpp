#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "pcz/ingest.hpp"
#include "pcz/io.hpp"
#include "support/testutil.hpp"

using namespace pcz;

namespace {

constexpr const char* kHeader =
    "mode,user_id,date,origin_time,origin_lon,origin_lat,dest_time,dest_lon,dest_lat\n";

std::string write_trips(const testutil::TempDir& dir, const std::string& body,
                        const std::string& name = "trips.csv") {
  const std::string path = dir.file(name);
  std::ofstream out(path);
  out << kHeader << body;
  return path;
}

Taz square_taz(TazId id, double lon0, double lat0, double size_deg) {
  Taz t;
  t.id = id;
  t.geometry = {{{{lon0, lat0},
                  {lon0 + size_deg, lat0},
                  {lon0 + size_deg, lat0 + size_deg},
                  {lon0, lat0 + size_deg},
                  {lon0, lat0}}}};
  t.centroid = polygon_centroid(t.geometry);
  t.area_m2 = 1e6;
  return t;
}

}  // namespace

TEST_CASE("parse_trips: sample rows with durations, single-digit dates accepted") {
  testutil::TempDir dir("parse");
  const std::string path = write_trips(
      dir,
      "FFBS,Mobike864xxxx,2020-11-10,20:33:23,118.88459,32.08721,20:43:20,118.87801,32.08519\n"
      "Metro,0D401Bxxxx,2019-3-10,16:41:01,118.72796,31.98994,15:27:37,118.75692,31.99289\n");
  const ParseResult result = parse_trips(path);
  REQUIRE(result.records.size() == 2);
  CHECK(result.input_rows == 2);
  CHECK(result.records[0].mode == Mode::FFBS);
  CHECK(result.records[0].duration_s() == 9 * 60 + 57);
  CHECK(result.records[0].date == "2020-11-10");
  // Raw input may carry a destination time before the origin time.
  CHECK(result.records[1].duration_s() < 0);
  CHECK(result.records[1].date == "2019-03-10");
}

TEST_CASE("parse_trips: empty file with header yields empty sequence") {
  testutil::TempDir dir("parse_empty");
  const ParseResult result = parse_trips(write_trips(dir, ""));
  CHECK(result.records.empty());
  CHECK(result.input_rows == 0);
}

TEST_CASE("parse_trips: null fields routed to the malformed list") {
  testutil::TempDir dir("parse_null");
  const std::string path = write_trips(
      dir,
      "FFBS,u1,2020-11-10,08:00:00,118.8,32.0,08:10:00,,\n"
      "Bus,u2,2020-07-10,09:19:12,118.75365,31.95445,09:31:24,118.75655,31.99061\n"
      "what,is,this,row,1,2,3,4,5\n");
  const ParseResult result = parse_trips(path);
  CHECK(result.records.size() == 1);
  CHECK(result.null_field_rows == 1);
  CHECK(result.bad_rows == 1);
  REQUIRE(result.malformed.size() == 2);
  CHECK(result.malformed[0].reason == "null-field");
  CHECK(result.malformed[1].reason == "bad-row");
  // Conservation: rows = parsed + malformed.
  CHECK(result.input_rows ==
        static_cast<std::int64_t>(result.records.size() + result.malformed.size()));
}

TEST_CASE("parse_trips: header mismatch and unreadable file") {
  testutil::TempDir dir("parse_err");
  const std::string path = dir.file("bad.csv");
  {
    std::ofstream out(path);
    out << "mode,user,lon,lat\n";
  }
  CHECK_THROWS_AS(parse_trips(path), Error);
  CHECK_THROWS_AS(parse_trips(dir.file("missing.csv")), Error);
}

TEST_CASE("clean_trips: duplicates collapse and are counted once") {
  TripRecord rec;
  rec.mode = Mode::FFBS;
  rec.user_id = "u1";
  rec.date = "2020-11-10";
  rec.origin_time_s = 8 * 3600;
  rec.dest_time_s = 8 * 3600 + 600;
  rec.origin_loc = {118.80, 32.00};
  rec.dest_loc = {118.81, 32.00};

  auto [kept, report] = clean_trips({rec, rec}, CleanRules{});
  CHECK(kept.size() == 1);
  CHECK(report.duplicate == 1);
  CHECK(report.cleaned == 1);
}

TEST_CASE("clean_trips: speed and duration anomalies use the haversine oracle") {
  CleanRules rules;

  // Bike trip covering ~9.4 km in 7 minutes: oracle speed is ~80 km/h.
  TripRecord fast;
  fast.mode = Mode::FFBS;
  fast.user_id = "u1";
  fast.date = "2020-11-10";
  fast.origin_time_s = 8 * 3600;
  fast.dest_time_s = 8 * 3600 + 420;
  fast.origin_loc = {118.80, 32.00};
  fast.dest_loc = {118.90, 32.00};
  const double oracle_speed =
      haversine_km(fast.origin_loc, fast.dest_loc) / (420.0 / 3600.0);
  CHECK(oracle_speed > 35.0);
  CHECK(oracle_speed == doctest::Approx(80.8).epsilon(0.02));

  // Metro trip exceeding the 6 h transit bound.
  TripRecord slow;
  slow.mode = Mode::Metro;
  slow.user_id = "u2";
  slow.date = "2019-03-10";
  slow.origin_time_s = 6 * 3600;
  slow.dest_time_s = 13 * 3600;  // 7 h
  slow.origin_loc = {118.70, 32.00};
  slow.dest_loc = {118.90, 32.10};

  // The sample metro row whose destination time precedes the origin time.
  TripRecord negative;
  negative.mode = Mode::Metro;
  negative.user_id = "u3";
  negative.date = "2019-03-10";
  negative.origin_time_s = 16 * 3600 + 41 * 60 + 1;
  negative.dest_time_s = 15 * 3600 + 27 * 60 + 37;
  negative.origin_loc = {118.72796, 31.98994};
  negative.dest_loc = {118.75692, 31.99289};

  TripRecord fine;
  fine.mode = Mode::Bus;
  fine.user_id = "u4";
  fine.date = "2020-07-10";
  fine.origin_time_s = 9 * 3600;
  fine.dest_time_s = 9 * 3600 + 720;
  fine.origin_loc = {118.75365, 31.95445};
  fine.dest_loc = {118.75655, 31.99061};

  auto [kept, report] = clean_trips({fast, slow, negative, fine}, rules);
  CHECK(kept.size() == 1);
  CHECK(kept[0].user_id == "u4");
  CHECK(report.speed_anomaly == 1);
  CHECK(report.duration_anomaly == 2);  // the 7 h trip and the negative one
  CHECK(report.parsed == report.cleaned + report.dropped_in_clean());
}

TEST_CASE("clean_trips: coordinate bounds drop out-of-box endpoints") {
  CleanRules rules;
  rules.coordinate_bounds = BoundingBox{118.0, 31.5, 119.0, 32.5};
  TripRecord rec;
  rec.mode = Mode::Bus;
  rec.user_id = "u1";
  rec.date = "2020-07-10";
  rec.origin_time_s = 9 * 3600;
  rec.dest_time_s = 9 * 3600 + 900;
  rec.origin_loc = {121.0, 31.2};  // outside
  rec.dest_loc = {118.5, 32.0};
  auto [kept, report] = clean_trips({rec}, rules);
  CHECK(kept.empty());
  CHECK(report.out_of_bounds == 1);
}

TEST_CASE("spatial_join: centroid hit, boundary tie-break, unmatched point") {
  const Taz t1 = square_taz(1, 118.00, 32.00, 0.01);
  const Taz t2 = square_taz(2, 118.01, 32.00, 0.01);  // shares edge lon=118.01
  const std::vector<Taz> tazs{t1, t2};

  auto trip = [](LonLat o, LonLat d) {
    TripRecord rec;
    rec.mode = Mode::FFBS;
    rec.user_id = "u";
    rec.date = "2020-11-10";
    rec.origin_time_s = 8 * 3600;
    rec.dest_time_s = 8 * 3600 + 300;
    rec.origin_loc = o;
    rec.dest_loc = d;
    return rec;
  };

  const std::vector<TripRecord> records{
      trip(t1.centroid, t2.centroid),
      trip({118.01, 32.005}, t2.centroid),  // origin on the shared boundary
      trip({120.0, 35.0}, t1.centroid),     // origin in the sea
  };
  const JoinResult join = spatial_join(records, tazs);
  REQUIRE(join.trips.size() == 2);
  CHECK(join.trips[0].origin == 1);
  CHECK(join.trips[0].dest == 2);
  CHECK(join.trips[1].origin == 1);  // tie goes to the lower TAZ id
  CHECK(join.unmatched == 1);
}

TEST_CASE("aggregate_flows: hand-counted cells and totals") {
  const std::vector<JoinedTrip> trips{
      {1, 2, Mode::FFBS}, {2, 1, Mode::Metro}, {1, 1, Mode::Bus}};
  const FlowMatrix m = aggregate_flows(trips);
  CHECK(m.at(1, 2) == 1);
  CHECK(m.at(2, 1) == 1);
  CHECK(m.at(1, 1) == 1);
  CHECK(m.total_trips == 3);
  CHECK(m.by_mode[static_cast<int>(Mode::FFBS)] == 1);

  CHECK(aggregate_flows({}).total_trips == 0);

  std::vector<JoinedTrip> repeated(14, {1, 2, Mode::Metro});
  CHECK(aggregate_flows(repeated).at(1, 2) == 14);
}

TEST_CASE("aggregation is order-independent") {
  std::mt19937_64 rng(11);
  std::vector<JoinedTrip> trips;
  for (int i = 0; i < 500; ++i) {
    trips.push_back({static_cast<TazId>(rng() % 7), static_cast<TazId>(rng() % 7),
                     static_cast<Mode>(rng() % 4)});
  }
  const FlowMatrix before = aggregate_flows(trips);
  std::shuffle(trips.begin(), trips.end(), rng);
  const FlowMatrix after = aggregate_flows(trips);
  CHECK(before.flows == after.flows);
  CHECK(before.total_trips == after.total_trips);
  CHECK(before.by_mode == after.by_mode);
}

TEST_CASE("pipeline conservation: parsed = cleaned + dropped, cleaned = matched + unmatched") {
  testutil::TempDir dir("pipeline");
  SyntheticCitySpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.block_rows = 1;
  spec.block_cols = 1;
  spec.total_trips = 400;
  const SyntheticCity city = generate_city(spec);
  std::vector<TripRecord> rows = materialize_trips(city, 99);
  // Poison with one duplicate and one far-away endpoint.
  rows.push_back(rows.front());
  TripRecord sea = rows.front();
  sea.user_id = "sea";
  sea.dest_loc = {118.49, 31.805};  // ~1 km west of the grid, still plausible
  sea.dest_time_s = sea.origin_time_s + 900;
  rows.push_back(sea);

  const std::string path = dir.file("trips.csv");
  io::write_trip_csv(path, rows);

  const ParseResult parsed = parse_trips(path);
  CHECK(parsed.input_rows == static_cast<std::int64_t>(rows.size()));

  CleanRules rules;  // no bbox: the far endpoint must fall out at the join
  auto [cleaned, report] = clean_trips(parsed.records, rules);
  report.absorb_parse(parsed);
  CHECK(report.input_rows == report.parsed + report.bad_rows + report.null_field);
  CHECK(report.parsed == report.cleaned + report.dropped_in_clean());
  CHECK(report.duplicate == 1);

  const JoinResult join = spatial_join(cleaned, city.tazs);
  report.unmatched_endpoint = join.unmatched;
  report.matched = static_cast<std::int64_t>(join.trips.size());
  CHECK(report.cleaned == report.matched + report.unmatched_endpoint);
  CHECK(report.unmatched_endpoint == 1);

  const FlowMatrix flows = aggregate_flows(join.trips);
  CHECK(flows.total_trips == report.matched);
}
