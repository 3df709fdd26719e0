#include "pcz/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace pcz::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorKind::BadInput, "invalid JSON: " + path);
  }
  return j;
}

Ring parse_ring(const json& coords) {
  Ring ring;
  for (const json& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) {
      throw Error(ErrorKind::InvalidGeometry, "bad coordinate pair");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

PolygonGeom parse_polygon(const json& coords) {
  PolygonGeom poly;
  for (const json& ring : coords) poly.push_back(parse_ring(ring));
  return poly;
}

std::vector<std::string> split_csv_line(const std::string& line) {
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

std::ifstream open_csv(const std::string& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::HeaderMismatch, "empty file: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw Error(ErrorKind::HeaderMismatch,
                "expected header '" + header + "' in " + path);
  }
  return in;
}

std::int64_t to_i64(const std::string& s, const std::string& context) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::BadInput, "bad integer '" + s + "' in " + context);
  }
  return v;
}

double to_f64(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::BadInput, "bad number '" + s + "' in " + context);
  }
  return v;
}

}  // namespace

std::vector<Taz> read_taz_geojson(const std::string& path) {
  const json root = parse_json_file(path);
  if (root.value("type", "") != "FeatureCollection" || !root.contains("features")) {
    throw Error(ErrorKind::BadInput, "not a FeatureCollection: " + path);
  }
  std::vector<Taz> tazs;
  for (const json& feature : root["features"]) {
    if (!feature.contains("properties") || !feature.contains("geometry")) {
      throw Error(ErrorKind::BadInput, "feature missing properties/geometry");
    }
    const json& props = feature["properties"];
    for (const char* key : {"id", "population", "employment", "area_m2"}) {
      if (!props.contains(key)) {
        throw Error(ErrorKind::BadInput,
                    std::string("feature missing required property '") + key + "'");
      }
    }
    Taz taz;
    taz.id = props["id"].get<TazId>();
    taz.population = props["population"].get<std::int64_t>();
    taz.employment = props["employment"].get<std::int64_t>();
    taz.area_m2 = props["area_m2"].get<double>();

    const json& geometry = feature["geometry"];
    const std::string type = geometry.value("type", "");
    if (type == "Polygon") {
      taz.geometry.push_back(parse_polygon(geometry["coordinates"]));
    } else if (type == "MultiPolygon") {
      for (const json& poly : geometry["coordinates"]) {
        taz.geometry.push_back(parse_polygon(poly));
      }
    } else {
      throw Error(ErrorKind::InvalidGeometry,
                  "TAZ " + std::to_string(taz.id) + ": unsupported geometry " + type);
    }
    taz.centroid = polygon_centroid(taz.geometry);
    validate_taz(taz);
    tazs.push_back(std::move(taz));
  }
  std::sort(tazs.begin(), tazs.end(),
            [](const Taz& a, const Taz& b) { return a.id < b.id; });
  return tazs;
}

std::vector<DistanceEntry> read_distance_csv(const std::string& path) {
  std::ifstream in = open_csv(path, "origin_id,dest_id,km");
  std::vector<DistanceEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw Error(ErrorKind::BadInput, "bad row in " + path);
    entries.push_back({to_i64(f[0], path), to_i64(f[1], path), to_f64(f[2], path)});
  }
  return entries;
}

FlowMatrix read_flow_csv(const std::string& path) {
  std::ifstream in = open_csv(path, "origin_id,dest_id,trips");
  FlowMatrix flows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw Error(ErrorKind::BadInput, "bad row in " + path);
    flows.add(to_i64(f[0], path), to_i64(f[1], path), to_i64(f[2], path));
  }
  return flows;
}

std::vector<std::pair<TazId, int>> read_partition_csv(const std::string& path) {
  std::ifstream in = open_csv(path, "taz_id,zone_id");
  std::vector<std::pair<TazId, int>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw Error(ErrorKind::BadInput, "bad row in " + path);
    rows.push_back({to_i64(f[0], path), static_cast<int>(to_i64(f[1], path))});
  }
  return rows;
}

Partition partition_for_network(const std::vector<std::pair<TazId, int>>& rows,
                                const SpatialNetwork& net) {
  std::vector<int> assignment(static_cast<std::size_t>(net.node_count()), -1);
  for (const auto& [id, zone] : rows) {
    assignment[static_cast<std::size_t>(net.index_of(id))] = zone;
  }
  for (int z : assignment) {
    if (z < 0) {
      throw Error(ErrorKind::BadInput, "partition does not cover every TAZ");
    }
  }
  return Partition::from_assignment(std::move(assignment));
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::UnreadableFile, "cannot write: " + tmp);
    out << content;
    if (!out) throw Error(ErrorKind::UnreadableFile, "short write: " + tmp);
  }
  fs::rename(tmp, path);
}

void write_flow_csv(const std::string& path, const FlowMatrix& flows) {
  std::string out = "origin_id,dest_id,trips\n";
  char buf[96];
  for (const auto& [pair, trips] : flows.flows) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld\n",
                  static_cast<long long>(pair.first),
                  static_cast<long long>(pair.second),
                  static_cast<long long>(trips));
    out += buf;
  }
  write_text_atomic(path, out);
}

namespace {

std::string format_time(std::int64_t seconds) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld",
                static_cast<long long>(seconds / 3600),
                static_cast<long long>((seconds / 60) % 60),
                static_cast<long long>(seconds % 60));
  return buf;
}

}  // namespace

void write_trip_csv(const std::string& path, const std::vector<TripRecord>& trips) {
  std::string out =
      "mode,user_id,date,origin_time,origin_lon,origin_lat,dest_time,dest_lon,dest_lat\n";
  char buf[192];
  for (const TripRecord& t : trips) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%.7f,%.7f,%s,%.7f,%.7f\n",
                  mode_name(t.mode), t.user_id.c_str(), t.date.c_str(),
                  format_time(t.origin_time_s).c_str(), t.origin_loc.lon,
                  t.origin_loc.lat, format_time(t.dest_time_s).c_str(),
                  t.dest_loc.lon, t.dest_loc.lat);
    out += buf;
  }
  write_text_atomic(path, out);
}

namespace {

json geometry_to_json(const MultiPolygon& geom) {
  auto ring_json = [](const Ring& ring) {
    json arr = json::array();
    for (const LonLat& p : ring) arr.push_back({p.lon, p.lat});
    return arr;
  };
  auto poly_json = [&](const PolygonGeom& poly) {
    json arr = json::array();
    for (const Ring& ring : poly) arr.push_back(ring_json(ring));
    return arr;
  };
  json g;
  if (geom.size() == 1) {
    g["type"] = "Polygon";
    g["coordinates"] = poly_json(geom[0]);
  } else {
    g["type"] = "MultiPolygon";
    json arr = json::array();
    for (const PolygonGeom& poly : geom) arr.push_back(poly_json(poly));
    g["coordinates"] = arr;
  }
  return g;
}

}  // namespace

void write_taz_geojson(const std::string& path, const std::vector<Taz>& tazs) {
  json features = json::array();
  for (const Taz& t : tazs) {
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"id", t.id},
                       {"population", t.population},
                       {"employment", t.employment},
                       {"area_m2", t.area_m2}};
    f["geometry"] = geometry_to_json(t.geometry);
    features.push_back(std::move(f));
  }
  json root = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  write_text_atomic(path, root.dump(1));
}

void write_truth_csv(const std::string& path, const std::vector<Taz>& tazs,
                     const std::vector<int>& block_of) {
  std::string out = "taz_id,zone_id\n";
  char buf[64];
  for (std::size_t i = 0; i < tazs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%d\n",
                  static_cast<long long>(tazs[i].id), block_of[i]);
    out += buf;
  }
  write_text_atomic(path, out);
}

void write_partition_csv(const std::string& path, const SpatialNetwork& net,
                         const Partition& partition) {
  std::string out = "taz_id,zone_id\n";
  char buf[64];
  for (int i = 0; i < net.node_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%d\n",
                  static_cast<long long>(net.id_of(i)), partition.zone_of(i));
    out += buf;
  }
  write_text_atomic(path, out);
}

void write_network_csv(const std::string& path, const SpatialNetwork& net) {
  std::string out = "i,j,weight,distance_km\n";
  char buf[128];
  for (int i = 0; i < net.node_count(); ++i) {
    if (net.self_weight(i) > 0.0) {
      std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%.6f\n",
                    static_cast<long long>(net.id_of(i)),
                    static_cast<long long>(net.id_of(i)), net.self_weight(i),
                    net.self_distance_km(i));
      out += buf;
    }
    for (const SpatialNetwork::Edge& e : net.edges(i)) {
      if (e.to < i) continue;
      std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%.6f\n",
                    static_cast<long long>(net.id_of(i)),
                    static_cast<long long>(net.id_of(e.to)), e.weight,
                    e.distance_km);
      out += buf;
    }
  }
  write_text_atomic(path, out);
}

std::string cleaning_report_json(const CleaningReport& r) {
  json j = {
      {"input_rows", r.input_rows},
      {"parsed", r.parsed},
      {"malformed", {{"bad_row", r.bad_rows}, {"null_field", r.null_field}}},
      {"dropped",
       {{"duplicate", r.duplicate},
        {"out_of_bounds_coordinate", r.out_of_bounds},
        {"speed_anomaly", r.speed_anomaly},
        {"duration_anomaly", r.duration_anomaly}}},
      {"cleaned", r.cleaned},
      {"unmatched_endpoint", r.unmatched_endpoint},
      {"matched", r.matched},
  };
  return j.dump(1);
}

std::string zone_plan_json(const ZonePlan& plan, const PlanMeta& meta) {
  json zones = json::array();
  for (const ZoneStats& z : plan.zones) {
    zones.push_back({{"zone_id", z.zone_id},
                     {"area_km2", z.area_km2},
                     {"population", z.population},
                     {"intra_trips", z.intra_trips},
                     {"total_trips", z.total_trips},
                     {"cutoff_pct", z.cutoff_pct}});
  }
  json j = {
      {"zone_count", plan.partition.zone_count()},
      {"grand_total_trips", plan.grand_total_trips},
      {"intra_sum", plan.intra_sum},
      {"total_cutoff_pct", plan.total_cutoff_pct},
      {"q_standard", plan.q_standard},
      {"q_geographic", plan.q_geographic},
      {"conventions",
       {{"quality_kind", meta.quality_kind},
        {"alpha", meta.alpha},
        {"m_convention", meta.m_convention},
        {"distance_floor_km", meta.distance_floor_km},
        {"intrazonal_rule", meta.intrazonal_rule},
        {"drop_self_loops", meta.drop_self_loops},
        {"zone_total_convention",
         "total(z) counts trips touching z; crossing trips appear in both "
         "endpoint zones; the Sum row uses the grand total"},
        {"seed", meta.seed}}},
      {"repair",
       {{"merges", meta.repair_merges},
        {"negative_gain_merges", meta.repair_negative_gain_merges}}},
      {"zones", std::move(zones)},
  };
  return j.dump(1);
}

std::string detection_trace_json(const std::vector<double>& trace, int iterations,
                                 std::uint64_t seed) {
  json j = {{"iterations", iterations}, {"seed", seed}, {"quality_trace", trace}};
  return j.dump(1);
}

std::string repair_log_jsonl(const std::vector<RepairRecord>& log) {
  std::string out;
  for (const RepairRecord& r : log) {
    json j = {{"fragment", r.fragment},
              {"rule", r.rule},
              {"target_zone", r.target_zone},
              {"delta_q", r.delta_q},
              {"negative_gain", r.negative_gain}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string comparison_json(const PlanComparison& cmp) {
  auto plan_summary = [](const ZonePlan& plan) {
    return json{{"zone_count", plan.partition.zone_count()},
                {"intra_sum", plan.intra_sum},
                {"grand_total_trips", plan.grand_total_trips},
                {"total_cutoff_pct", plan.total_cutoff_pct}};
  };
  json j = {{"ours", plan_summary(cmp.ours)},
            {"reference", plan_summary(cmp.reference)},
            {"delta_total_cutoff_points", cmp.delta_total_cutoff_points}};
  return j.dump(1);
}

void write_zones_geojson(const std::string& path, const std::vector<Taz>& tazs,
                         const SpatialNetwork& net, const Partition& partition) {
  json features = json::array();
  for (const Taz& t : tazs) {
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"id", t.id},
                       {"zone_id", partition.zone_of(net.index_of(t.id))},
                       {"population", t.population},
                       {"area_m2", t.area_m2}};
    f["geometry"] = geometry_to_json(t.geometry);
    features.push_back(std::move(f));
  }
  json root = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  write_text_atomic(path, root.dump(1));
}

namespace {

// Dissolve by edge cancellation: segments shared by an even number of member
// rings vanish, the rest are stitched back into rings. Vertices are snapped
// to a 1e-9 degree grid, so this expects coincident shared boundaries (grid
// fixtures and clean TAZ layers).
struct QuantPoint {
  long long x = 0, y = 0;
  auto operator<=>(const QuantPoint&) const = default;
};

QuantPoint quantize(LonLat p) {
  return {static_cast<long long>(std::llround(p.lon * 1e9)),
          static_cast<long long>(std::llround(p.lat * 1e9))};
}

LonLat unquantize(QuantPoint q) {
  return {static_cast<double>(q.x) * 1e-9, static_cast<double>(q.y) * 1e-9};
}

std::vector<Ring> dissolve_rings(const std::vector<const Taz*>& members) {
  std::map<std::pair<QuantPoint, QuantPoint>, int> parity;
  for (const Taz* taz : members) {
    for (const PolygonGeom& poly : taz->geometry) {
      for (const Ring& ring : poly) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
          QuantPoint a = quantize(ring[i]);
          QuantPoint b = quantize(ring[i + 1]);
          if (a == b) continue;
          if (b < a) std::swap(a, b);
          ++parity[{a, b}];
        }
      }
    }
  }
  std::map<QuantPoint, std::vector<QuantPoint>> links;
  for (const auto& [seg, count] : parity) {
    if (count % 2 == 0) continue;
    links[seg.first].push_back(seg.second);
    links[seg.second].push_back(seg.first);
  }
  for (auto& [pt, outs] : links) std::sort(outs.begin(), outs.end());

  std::map<std::pair<QuantPoint, QuantPoint>, int> used;
  auto take = [&](QuantPoint a, QuantPoint b) {
    QuantPoint lo = a, hi = b;
    if (hi < lo) std::swap(lo, hi);
    ++used[{lo, hi}];
  };
  auto available = [&](QuantPoint a, QuantPoint b) {
    QuantPoint lo = a, hi = b;
    if (hi < lo) std::swap(lo, hi);
    auto it = used.find({lo, hi});
    return it == used.end() || it->second == 0;
  };

  std::vector<Ring> rings;
  for (const auto& [start, outs] : links) {
    for (const QuantPoint& first : outs) {
      if (!available(start, first)) continue;
      Ring ring;
      ring.push_back(unquantize(start));
      QuantPoint prev = start, cur = first;
      take(prev, cur);
      ring.push_back(unquantize(cur));
      bool closed = false;
      for (std::size_t guard = 0; guard < parity.size() + 2; ++guard) {
        if (cur == start) {
          closed = true;
          break;
        }
        const auto it = links.find(cur);
        if (it == links.end()) break;
        QuantPoint next{};
        bool found = false;
        for (const QuantPoint& cand : it->second) {
          if (cand == prev && it->second.size() > 1) continue;
          if (available(cur, cand)) {
            next = cand;
            found = true;
            break;
          }
        }
        if (!found) break;
        take(cur, next);
        ring.push_back(unquantize(next));
        prev = cur;
        cur = next;
      }
      if (closed && ring.size() >= 4) {
        rings.push_back(std::move(ring));
      }
    }
  }
  return rings;
}

double ring_abs_area(const Ring& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  }
  return std::abs(0.5 * acc);
}

}  // namespace

void write_zone_outlines_geojson(const std::string& path,
                                 const std::vector<Taz>& tazs,
                                 const SpatialNetwork& net,
                                 const Partition& partition) {
  std::vector<std::vector<const Taz*>> zone_members(
      static_cast<std::size_t>(partition.zone_count()));
  for (const Taz& t : tazs) {
    zone_members[static_cast<std::size_t>(partition.zone_of(net.index_of(t.id)))]
        .push_back(&t);
  }
  json features = json::array();
  for (int z = 0; z < partition.zone_count(); ++z) {
    std::vector<Ring> rings = dissolve_rings(zone_members[static_cast<std::size_t>(z)]);
    // Largest ring first; remaining rings nested inside it become holes of
    // a single polygon, others stand alone.
    std::sort(rings.begin(), rings.end(), [](const Ring& a, const Ring& b) {
      return ring_abs_area(a) > ring_abs_area(b);
    });
    MultiPolygon geom;
    for (Ring& ring : rings) {
      bool placed = false;
      for (PolygonGeom& poly : geom) {
        MultiPolygon outer_only{{poly[0]}};
        if (covers(outer_only, ring[0])) {
          poly.push_back(ring);
          placed = true;
          break;
        }
      }
      if (!placed) geom.push_back({std::move(ring)});
    }
    if (geom.empty()) continue;
    std::int64_t population = 0;
    double area_m2 = 0.0;
    for (const Taz* t : zone_members[static_cast<std::size_t>(z)]) {
      population += t->population;
      area_m2 += t->area_m2;
    }
    json f;
    f["type"] = "Feature";
    f["properties"] = {{"zone_id", z},
                       {"member_count",
                        zone_members[static_cast<std::size_t>(z)].size()},
                       {"population", population},
                       {"area_m2", area_m2}};
    f["geometry"] = geometry_to_json(geom);
    features.push_back(std::move(f));
  }
  json root = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  write_text_atomic(path, root.dump(1));
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UnreadableFile, "cannot open: " + path);
  std::uint64_t hash = 1469598103934665603ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (!in) break;
  }
  return hash;
}

std::string manifest_json(
    const std::vector<std::pair<std::string, std::string>>& inputs,
    const std::vector<std::string>& outputs) {
  json in = json::object();
  char hex[32];
  for (const auto& [label, path] : inputs) {
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    in[label] = {{"path", path}, {"fnv1a64", hex}};
  }
  json j = {{"tool", "pczone"},
            {"hash_algorithm", "fnv1a64"},
            {"inputs", std::move(in)},
            {"outputs", outputs}};
  return j.dump(1);
}

}  // namespace pcz::io
