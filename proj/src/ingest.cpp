#include "pcz/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_set>

namespace pcz {

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::FFBS: return "FFBS";
    case Mode::PublicBike: return "PublicBike";
    case Mode::Metro: return "Metro";
    case Mode::Bus: return "Bus";
  }
  return "?";
}

std::optional<Mode> parse_mode(const std::string& token) {
  if (token == "FFBS") return Mode::FFBS;
  if (token == "PublicBike" || token == "Public Bike") return Mode::PublicBike;
  if (token == "Metro") return Mode::Metro;
  if (token == "Bus") return Mode::Bus;
  return std::nullopt;
}

namespace {

constexpr const char* kTripHeader =
    "mode,user_id,date,origin_time,origin_lon,origin_lat,dest_time,dest_lon,dest_lat";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Accepts H:MM:SS or HH:MM:SS; returns seconds since midnight.
bool parse_time_of_day(const std::string& s, std::int64_t& out) {
  int h = 0, m = 0, sec = 0;
  int part = 0, value = 0, digits = 0;
  for (char c : s) {
    if (c == ':') {
      if (digits == 0 || part >= 2) return false;
      if (part == 0) h = value; else m = value;
      ++part;
      value = 0;
      digits = 0;
    } else if (c >= '0' && c <= '9') {
      value = value * 10 + (c - '0');
      if (++digits > 2) return false;
    } else {
      return false;
    }
  }
  if (part != 2 || digits == 0) return false;
  sec = value;
  if (h > 23 || m > 59 || sec > 59) return false;
  out = static_cast<std::int64_t>(h) * 3600 + m * 60 + sec;
  return true;
}

// Accepts YYYY-M-D or YYYY-MM-DD; normalizes to YYYY-MM-DD.
bool parse_date(const std::string& s, std::string& out) {
  int y = 0, m = 0, d = 0;
  int part = 0, value = 0, digits = 0;
  for (char c : s) {
    if (c == '-') {
      if (digits == 0 || part >= 2) return false;
      if (part == 0) y = value; else m = value;
      ++part;
      value = 0;
      digits = 0;
    } else if (c >= '0' && c <= '9') {
      value = value * 10 + (c - '0');
      if (++digits > 4) return false;
    } else {
      return false;
    }
  }
  if (part != 2 || digits == 0) return false;
  d = value;
  if (y < 1900 || y > 2200 || m < 1 || m > 12 || d < 1 || d > 31) return false;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  out = buf;
  return true;
}

}  // namespace

ParseResult parse_trips(const std::string& path, std::optional<Mode> expected_mode) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::UnreadableFile, "cannot open trip file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::HeaderMismatch, "empty trip file: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTripHeader) {
    throw Error(ErrorKind::HeaderMismatch,
                "unexpected trip header in " + path + ": " + line);
  }

  ParseResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++result.input_rows;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 9) {
      result.malformed.push_back({line_no, "bad-row"});
      ++result.bad_rows;
      continue;
    }
    bool has_null = false;
    for (const std::string& field : f) {
      if (field.empty()) has_null = true;
    }
    if (has_null) {
      result.malformed.push_back({line_no, "null-field"});
      ++result.null_field_rows;
      continue;
    }
    TripRecord rec;
    const std::optional<Mode> mode = parse_mode(f[0]);
    bool ok = mode.has_value();
    if (ok && expected_mode.has_value() && *mode != *expected_mode) ok = false;
    if (ok) {
      rec.mode = *mode;
      rec.user_id = f[1];
      ok = parse_date(f[2], rec.date) &&
           parse_time_of_day(f[3], rec.origin_time_s) &&
           parse_double(f[4], rec.origin_loc.lon) &&
           parse_double(f[5], rec.origin_loc.lat) &&
           parse_time_of_day(f[6], rec.dest_time_s) &&
           parse_double(f[7], rec.dest_loc.lon) &&
           parse_double(f[8], rec.dest_loc.lat);
    }
    if (!ok) {
      result.malformed.push_back({line_no, "bad-row"});
      ++result.bad_rows;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

// `parsed` itself is owned by clean_trips (the count of records it saw).
void CleaningReport::absorb_parse(const ParseResult& parse) {
  input_rows += parse.input_rows;
  bad_rows += parse.bad_rows;
  null_field += parse.null_field_rows;
}

std::pair<std::vector<TripRecord>, CleaningReport> clean_trips(
    std::vector<TripRecord> records, const CleanRules& rules) {
  CleaningReport report;
  report.parsed = static_cast<std::int64_t>(records.size());

  std::vector<TripRecord> kept;
  kept.reserve(records.size());
  std::unordered_set<std::string> seen;
  seen.reserve(records.size() * 2);
  std::string key;
  char buf[96];

  for (TripRecord& rec : records) {
    key.assign(mode_name(rec.mode));
    key.push_back('|');
    key.append(rec.user_id);
    key.push_back('|');
    key.append(rec.date);
    std::snprintf(buf, sizeof(buf), "|%lld|%.7f|%.7f",
                  static_cast<long long>(rec.origin_time_s),
                  rec.origin_loc.lon, rec.origin_loc.lat);
    key.append(buf);
    if (!seen.insert(key).second) {
      ++report.duplicate;
      continue;
    }
    if (rules.coordinate_bounds.has_value() &&
        (!rules.coordinate_bounds->contains(rec.origin_loc) ||
         !rules.coordinate_bounds->contains(rec.dest_loc))) {
      ++report.out_of_bounds;
      continue;
    }
    const ModeBounds& b = rules.bounds_for(rec.mode);
    const double duration = static_cast<double>(rec.duration_s());
    if (duration < b.min_duration_s || duration > b.max_duration_s) {
      ++report.duration_anomaly;
      continue;
    }
    const double km = haversine_km(rec.origin_loc, rec.dest_loc);
    const double speed = km / (duration / 3600.0);
    if (speed <= b.min_speed_kmh || speed > b.max_speed_kmh) {
      ++report.speed_anomaly;
      continue;
    }
    kept.push_back(std::move(rec));
  }
  report.cleaned = static_cast<std::int64_t>(kept.size());
  return {std::move(kept), report};
}

namespace {

// Grid index over TAZ bounding boxes for point lookup.
class TazIndex {
 public:
  explicit TazIndex(const std::vector<Taz>& tazs) {
    order_.reserve(tazs.size());
    for (const Taz& t : tazs) order_.push_back(&t);
    std::sort(order_.begin(), order_.end(),
              [](const Taz* a, const Taz* b) { return a->id < b->id; });
    boxes_.reserve(order_.size());
    double max_dim = 0.0;
    for (const Taz* t : order_) {
      BoundingBox box = polygon_bounds(t->geometry);
      max_dim = std::max(max_dim, std::max(box.max_lon - box.min_lon,
                                           box.max_lat - box.min_lat));
      boxes_.push_back(box);
    }
    cell_ = std::max(max_dim, 1e-6);
    for (std::size_t i = 0; i < order_.size(); ++i) {
      const BoundingBox& box = boxes_[i];
      for (long long cx = cell_of(box.min_lon); cx <= cell_of(box.max_lon); ++cx) {
        for (long long cy = cell_of(box.min_lat); cy <= cell_of(box.max_lat); ++cy) {
          grid_[{cx, cy}].push_back(static_cast<int>(i));
        }
      }
    }
  }

  // Lowest TAZ id covering the point, or nullopt.
  std::optional<TazId> locate(LonLat p) const {
    auto it = grid_.find({cell_of(p.lon), cell_of(p.lat)});
    if (it == grid_.end()) return std::nullopt;
    for (int idx : it->second) {  // sorted by id by construction
      const std::size_t i = static_cast<std::size_t>(idx);
      if (!boxes_[i].contains(p)) continue;
      if (covers(order_[i]->geometry, p)) return order_[i]->id;
    }
    return std::nullopt;
  }

 private:
  long long cell_of(double v) const {
    return static_cast<long long>(std::floor(v / cell_));
  }

  std::vector<const Taz*> order_;
  std::vector<BoundingBox> boxes_;
  std::map<std::pair<long long, long long>, std::vector<int>> grid_;
  double cell_ = 1.0;
};

}  // namespace

JoinResult spatial_join(const std::vector<TripRecord>& records,
                        const std::vector<Taz>& tazs) {
  TazIndex index(tazs);
  JoinResult result;
  result.trips.reserve(records.size());
  for (const TripRecord& rec : records) {
    const std::optional<TazId> origin = index.locate(rec.origin_loc);
    const std::optional<TazId> dest = index.locate(rec.dest_loc);
    if (!origin.has_value() || !dest.has_value()) {
      ++result.unmatched;
      continue;
    }
    result.trips.push_back({*origin, *dest, rec.mode});
  }
  return result;
}

void FlowMatrix::add(TazId origin, TazId dest, std::int64_t trips,
                     std::optional<Mode> mode) {
  if (trips <= 0) return;
  flows[{origin, dest}] += trips;
  total_trips += trips;
  if (mode.has_value()) by_mode[static_cast<std::size_t>(*mode)] += trips;
}

FlowMatrix aggregate_flows(const std::vector<JoinedTrip>& trips) {
  FlowMatrix m;
  for (const JoinedTrip& t : trips) {
    m.add(t.origin, t.dest, 1, t.mode);
  }
  return m;
}

}  // namespace pcz
