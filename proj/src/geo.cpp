#include "pcz/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

namespace pcz {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::IncompleteMatrix: return "IncompleteMatrix";
    case ErrorKind::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorKind::UnreadableFile: return "UnreadableFile";
    case ErrorKind::HeaderMismatch: return "HeaderMismatch";
    case ErrorKind::MissingDistance: return "MissingDistance";
    case ErrorKind::EmptyNetwork: return "EmptyNetwork";
    case ErrorKind::ZeroDistance: return "ZeroDistance";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::UnknownZone: return "UnknownZone";
    case ErrorKind::IslandNoNeighbors: return "IslandNoNeighbors";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::BadInput: return "BadInput";
  }
  return "Unknown";
}

void BoundingBox::expand(LonLat p) {
  min_lon = std::min(min_lon, p.lon);
  max_lon = std::max(max_lon, p.lon);
  min_lat = std::min(min_lat, p.lat);
  max_lat = std::max(max_lat, p.lat);
}

BoundingBox BoundingBox::buffered_km(double km) const {
  const double dlat = km * 1000.0 / kMetersPerDegree;
  const double mid_lat = 0.5 * (min_lat + max_lat);
  const double cosl = std::max(0.05, std::cos(mid_lat * M_PI / 180.0));
  const double dlon = km * 1000.0 / (kMetersPerDegree * cosl);
  return {min_lon - dlon, min_lat - dlat, max_lon + dlon, max_lat + dlat};
}

double haversine_km(LonLat a, LonLat b) {
  const double to_rad = M_PI / 180.0;
  const double lat1 = a.lat * to_rad, lat2 = b.lat * to_rad;
  const double dlat = (b.lat - a.lat) * to_rad;
  const double dlon = (b.lon - a.lon) * to_rad;
  const double s = std::sin(dlat / 2.0), t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double centroid_distance_km(const Taz& a, const Taz& b) {
  return haversine_km(a.centroid, b.centroid);
}

double intrazonal_distance_km(double area_m2) {
  return 0.5 * std::sqrt(area_m2 / M_PI) / 1000.0;
}

namespace {

// Signed shoelace area of a closed ring, in degree^2. Sign reflects winding.
double ring_signed_area(const Ring& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
  }
  return 0.5 * acc;
}

LonLat ring_centroid(const Ring& ring, double signed_area) {
  if (std::abs(signed_area) < 1e-18) {
    // Degenerate ring: fall back to the vertex mean.
    LonLat mean;
    const std::size_t n = ring.size() > 1 ? ring.size() - 1 : ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      mean.lon += ring[i].lon;
      mean.lat += ring[i].lat;
    }
    mean.lon /= static_cast<double>(n);
    mean.lat /= static_cast<double>(n);
    return mean;
  }
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double cross =
        ring[i].lon * ring[i + 1].lat - ring[i + 1].lon * ring[i].lat;
    cx += (ring[i].lon + ring[i + 1].lon) * cross;
    cy += (ring[i].lat + ring[i + 1].lat) * cross;
  }
  return {cx / (6.0 * signed_area), cy / (6.0 * signed_area)};
}

}  // namespace

LonLat polygon_centroid(const MultiPolygon& geom) {
  double weight_sum = 0.0;
  double lon_acc = 0.0, lat_acc = 0.0;
  for (const PolygonGeom& poly : geom) {
    for (std::size_t r = 0; r < poly.size(); ++r) {
      const double signed_area = ring_signed_area(poly[r]);
      // Outer ring adds, holes subtract, regardless of stored winding.
      const double w = (r == 0) ? std::abs(signed_area) : -std::abs(signed_area);
      const LonLat c = ring_centroid(poly[r], signed_area);
      lon_acc += c.lon * w;
      lat_acc += c.lat * w;
      weight_sum += w;
    }
  }
  if (std::abs(weight_sum) < 1e-18) {
    // All rings degenerate; average outer-ring vertices.
    LonLat mean;
    std::size_t count = 0;
    for (const PolygonGeom& poly : geom) {
      if (poly.empty()) continue;
      for (const LonLat& p : poly[0]) {
        mean.lon += p.lon;
        mean.lat += p.lat;
        ++count;
      }
    }
    if (count == 0) return mean;
    mean.lon /= static_cast<double>(count);
    mean.lat /= static_cast<double>(count);
    return mean;
  }
  return {lon_acc / weight_sum, lat_acc / weight_sum};
}

BoundingBox polygon_bounds(const MultiPolygon& geom) {
  BoundingBox box{std::numeric_limits<double>::max(),
                  std::numeric_limits<double>::max(),
                  std::numeric_limits<double>::lowest(),
                  std::numeric_limits<double>::lowest()};
  for (const PolygonGeom& poly : geom) {
    for (const Ring& ring : poly) {
      for (const LonLat& p : ring) box.expand(p);
    }
  }
  return box;
}

namespace {

constexpr double kOnBoundaryEpsDeg = 1e-9;  // ~0.1 mm

bool point_on_segment(LonLat p, LonLat a, LonLat b) {
  const double dx = b.lon - a.lon, dy = b.lat - a.lat;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double ex = a.lon + t * dx - p.lon;
  const double ey = a.lat + t * dy - p.lat;
  return ex * ex + ey * ey <= kOnBoundaryEpsDeg * kOnBoundaryEpsDeg;
}

}  // namespace

bool covers(const MultiPolygon& geom, LonLat p) {
  for (const PolygonGeom& poly : geom) {
    bool inside = false;
    for (const Ring& ring : poly) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (point_on_segment(p, ring[i], ring[i + 1])) return true;
        const LonLat a = ring[i], b = ring[i + 1];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
          const double x_cross =
              a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
          if (p.lon < x_cross) inside = !inside;
        }
      }
    }
    if (inside) return true;
  }
  return false;
}

void validate_taz(const Taz& taz) {
  const std::string tag = "TAZ " + std::to_string(taz.id);
  if (taz.id < 0) throw Error(ErrorKind::BadInput, tag + ": negative id");
  if (taz.geometry.empty()) {
    throw Error(ErrorKind::InvalidGeometry, tag + ": empty geometry");
  }
  for (const PolygonGeom& poly : taz.geometry) {
    if (poly.empty()) {
      throw Error(ErrorKind::InvalidGeometry, tag + ": polygon with no rings");
    }
    for (const Ring& ring : poly) {
      if (ring.size() < 4) {
        throw Error(ErrorKind::InvalidGeometry, tag + ": ring with < 4 vertices");
      }
      if (std::abs(ring.front().lon - ring.back().lon) > 1e-12 ||
          std::abs(ring.front().lat - ring.back().lat) > 1e-12) {
        throw Error(ErrorKind::InvalidGeometry, tag + ": ring not closed");
      }
      for (const LonLat& p : ring) {
        if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) {
          throw Error(ErrorKind::InvalidGeometry, tag + ": non-finite coordinate");
        }
      }
    }
  }
  if (!(taz.area_m2 > 0.0)) {
    throw Error(ErrorKind::InvalidGeometry, tag + ": area must be > 0");
  }
  if (taz.population < 0 || taz.employment < 0) {
    throw Error(ErrorKind::BadInput, tag + ": negative population/employment");
  }
}

AdjacencyGraph::AdjacencyGraph(std::vector<TazId> ids,
                               std::vector<std::vector<int>> neighbors)
    : ids_(std::move(ids)), neighbors_(std::move(neighbors)) {}

int AdjacencyGraph::index_of(TazId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) {
    throw Error(ErrorKind::UnknownNode,
                "TAZ id not in adjacency graph: " + std::to_string(id));
  }
  return static_cast<int>(it - ids_.begin());
}

bool AdjacencyGraph::adjacent(TazId a, TazId b) const {
  const int i = index_of(a), j = index_of(b);
  const auto& nb = neighbors_[static_cast<std::size_t>(i)];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t AdjacencyGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& nb : neighbors_) total += nb.size();
  return total / 2;
}

namespace {

struct XY {
  double x = 0.0, y = 0.0;
};

struct Segment {
  XY a, b;
  double min_x, min_y, max_x, max_y;
};

double point_seg_d2(XY p, XY a, XY b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  }
  const double ex = a.x + t * dx - p.x;
  const double ey = a.y + t * dy - p.y;
  return ex * ex + ey * ey;
}

double cross(XY o, XY a, XY b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool segments_intersect(XY a, XY b, XY c, XY d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double seg_seg_d2(const Segment& s, const Segment& t) {
  if (segments_intersect(s.a, s.b, t.a, t.b)) return 0.0;
  double best = point_seg_d2(s.a, t.a, t.b);
  best = std::min(best, point_seg_d2(s.b, t.a, t.b));
  best = std::min(best, point_seg_d2(t.a, s.a, s.b));
  best = std::min(best, point_seg_d2(t.b, s.a, s.b));
  return best;
}

struct ProjectedBoundary {
  std::vector<Segment> segments;
  double min_x, min_y, max_x, max_y;
};

ProjectedBoundary project_boundary(const Taz& taz, double cos_ref) {
  ProjectedBoundary out;
  out.min_x = out.min_y = std::numeric_limits<double>::max();
  out.max_x = out.max_y = std::numeric_limits<double>::lowest();
  auto project = [cos_ref](LonLat p) -> XY {
    return {p.lon * kMetersPerDegree * cos_ref, p.lat * kMetersPerDegree};
  };
  for (const PolygonGeom& poly : taz.geometry) {
    for (const Ring& ring : poly) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        Segment seg;
        seg.a = project(ring[i]);
        seg.b = project(ring[i + 1]);
        seg.min_x = std::min(seg.a.x, seg.b.x);
        seg.max_x = std::max(seg.a.x, seg.b.x);
        seg.min_y = std::min(seg.a.y, seg.b.y);
        seg.max_y = std::max(seg.a.y, seg.b.y);
        out.min_x = std::min(out.min_x, seg.min_x);
        out.max_x = std::max(out.max_x, seg.max_x);
        out.min_y = std::min(out.min_y, seg.min_y);
        out.max_y = std::max(out.max_y, seg.max_y);
        out.segments.push_back(seg);
      }
    }
  }
  return out;
}

bool boundaries_within(const ProjectedBoundary& a, const ProjectedBoundary& b,
                       double tol_m) {
  const double tol2 = tol_m * tol_m;
  for (const Segment& s : a.segments) {
    for (const Segment& t : b.segments) {
      if (s.min_x > t.max_x + tol_m || t.min_x > s.max_x + tol_m ||
          s.min_y > t.max_y + tol_m || t.min_y > s.max_y + tol_m) {
        continue;
      }
      if (seg_seg_d2(s, t) <= tol2) return true;
    }
  }
  return false;
}

}  // namespace

AdjacencyGraph build_adjacency(const std::vector<Taz>& tazs, double snap_tol_m) {
  if (snap_tol_m < 0.0) {
    throw Error(ErrorKind::BadInput, "snap tolerance must be >= 0");
  }
  std::vector<const Taz*> sorted;
  sorted.reserve(tazs.size());
  for (const Taz& t : tazs) {
    validate_taz(t);
    sorted.push_back(&t);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Taz* a, const Taz* b) { return a->id < b->id; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i]->id == sorted[i + 1]->id) {
      throw Error(ErrorKind::BadInput,
                  "duplicate TAZ id " + std::to_string(sorted[i]->id));
    }
  }

  const int n = static_cast<int>(sorted.size());
  std::vector<TazId> ids(sorted.size());
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = sorted[static_cast<std::size_t>(i)]->id;

  double lat_acc = 0.0;
  for (const Taz* t : sorted) lat_acc += t->centroid.lat;
  const double ref_lat = n > 0 ? lat_acc / n : 0.0;
  const double cos_ref = std::max(0.05, std::cos(ref_lat * M_PI / 180.0));

  std::vector<ProjectedBoundary> boundaries;
  boundaries.reserve(sorted.size());
  for (const Taz* t : sorted) boundaries.push_back(project_boundary(*t, cos_ref));

  // Candidate pairs via a uniform grid over inflated bounding boxes.
  double cell = 0.0;
  for (const ProjectedBoundary& b : boundaries) {
    cell = std::max(cell, std::max(b.max_x - b.min_x, b.max_y - b.min_y));
  }
  cell = std::max(cell + snap_tol_m, 1.0);
  std::map<std::pair<long long, long long>, std::vector<int>> grid;
  for (int i = 0; i < n; ++i) {
    const ProjectedBoundary& b = boundaries[static_cast<std::size_t>(i)];
    const long long cx0 = static_cast<long long>(std::floor((b.min_x - snap_tol_m) / cell));
    const long long cx1 = static_cast<long long>(std::floor((b.max_x + snap_tol_m) / cell));
    const long long cy0 = static_cast<long long>(std::floor((b.min_y - snap_tol_m) / cell));
    const long long cy1 = static_cast<long long>(std::floor((b.max_y + snap_tol_m) / cell));
    for (long long cx = cx0; cx <= cx1; ++cx) {
      for (long long cy = cy0; cy <= cy1; ++cy) {
        grid[{cx, cy}].push_back(i);
      }
    }
  }

  std::set<std::pair<int, int>> candidates;
  for (const auto& [key, members] : grid) {
    (void)key;
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        candidates.insert({members[a], members[b]});
      }
    }
  }

  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (const auto& [i, j] : candidates) {
    const ProjectedBoundary& a = boundaries[static_cast<std::size_t>(i)];
    const ProjectedBoundary& b = boundaries[static_cast<std::size_t>(j)];
    if (a.min_x > b.max_x + snap_tol_m || b.min_x > a.max_x + snap_tol_m ||
        a.min_y > b.max_y + snap_tol_m || b.min_y > a.max_y + snap_tol_m) {
      continue;
    }
    if (boundaries_within(a, b, snap_tol_m)) {
      neighbors[static_cast<std::size_t>(i)].push_back(j);
      neighbors[static_cast<std::size_t>(j)].push_back(i);
    }
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());
  return AdjacencyGraph(std::move(ids), std::move(neighbors));
}

int DistanceMatrix::index_of(TazId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) {
    throw Error(ErrorKind::MissingDistance,
                "no distance row for TAZ " + std::to_string(id));
  }
  return static_cast<int>(it - ids_.begin());
}

double DistanceMatrix::km(TazId a, TazId b) const {
  return km_at(index_of(a), index_of(b));
}

double DistanceMatrix::km_at(int i, int j) const {
  if (i == j) return diagonal_[static_cast<std::size_t>(i)];
  if (source_ == DistanceSource::UserSupplied) {
    return dense_[static_cast<std::size_t>(i) * ids_.size() + static_cast<std::size_t>(j)];
  }
  const double d = haversine_km(centroids_[static_cast<std::size_t>(i)],
                                centroids_[static_cast<std::size_t>(j)]);
  return std::max(d, config_.floor_km);
}

DistanceMatrix build_distance_matrix(
    const std::vector<Taz>& tazs,
    const std::optional<std::vector<DistanceEntry>>& user_matrix,
    const DistanceConfig& config) {
  DistanceMatrix m;
  m.config_ = config;
  std::vector<const Taz*> sorted;
  sorted.reserve(tazs.size());
  for (const Taz& t : tazs) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](const Taz* a, const Taz* b) { return a->id < b->id; });
  const std::size_t n = sorted.size();
  m.ids_.resize(n);
  m.diagonal_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.ids_[i] = sorted[i]->id;
    m.diagonal_[i] = config.intrazonal_radius
                         ? intrazonal_distance_km(sorted[i]->area_m2)
                         : config.floor_km;
  }

  if (!user_matrix.has_value()) {
    m.source_ = DistanceSource::ComputedCentroid;
    m.centroids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.centroids_[i] = sorted[i]->centroid;
    return m;
  }

  m.source_ = DistanceSource::UserSupplied;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.dense_.assign(n * n, nan);
  for (const DistanceEntry& e : *user_matrix) {
    const int i = m.index_of(e.origin);
    const int j = m.index_of(e.dest);
    if (e.km < 0.0 || !std::isfinite(e.km)) {
      throw Error(ErrorKind::BadInput, "negative or non-finite distance entry");
    }
    if (i == j) {
      m.diagonal_[static_cast<std::size_t>(i)] = e.km;
      continue;
    }
    m.dense_[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = e.km;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double ij = m.dense_[i * n + j];
      double ji = m.dense_[j * n + i];
      if (std::isnan(ij) && std::isnan(ji)) {
        throw Error(ErrorKind::IncompleteMatrix,
                    "user matrix missing pair (" + std::to_string(m.ids_[i]) +
                        ", " + std::to_string(m.ids_[j]) + ")");
      }
      if (!std::isnan(ij) && !std::isnan(ji) && std::abs(ij - ji) > 1e-6) {
        throw Error(ErrorKind::AsymmetricMatrix,
                    "user matrix asymmetric for pair (" +
                        std::to_string(m.ids_[i]) + ", " +
                        std::to_string(m.ids_[j]) + ")");
      }
      const double v = std::max(!std::isnan(ij) ? ij : ji, config.floor_km);
      m.dense_[i * n + j] = v;
      m.dense_[j * n + i] = v;
    }
    m.dense_[i * n + i] = m.diagonal_[i];
  }
  return m;
}

DistanceMatrix make_user_distance_matrix(std::vector<TazId> ids,
                                         std::vector<double> dense,
                                         DistanceConfig config) {
  const std::size_t n = ids.size();
  if (dense.size() != n * n) {
    throw Error(ErrorKind::BadInput, "dense matrix size mismatch");
  }
  if (!std::is_sorted(ids.begin(), ids.end())) {
    throw Error(ErrorKind::BadInput, "ids must be sorted");
  }
  DistanceMatrix m;
  m.ids_ = std::move(ids);
  m.source_ = DistanceSource::UserSupplied;
  m.config_ = config;
  m.diagonal_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.diagonal_[i] = dense[i * n + i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) dense[i * n + j] = std::max(dense[i * n + j], config.floor_km);
    }
  }
  m.dense_ = std::move(dense);
  return m;
}

}  // namespace pcz
