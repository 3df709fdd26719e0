#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pcz/error.hpp"

namespace pcz {

using TazId = std::int64_t;

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

// Rings are closed (front == back). Ring 0 is the outer boundary, any
// further rings are holes. Coordinates are WGS-84 degrees.
using Ring = std::vector<LonLat>;
using PolygonGeom = std::vector<Ring>;
using MultiPolygon = std::vector<PolygonGeom>;

struct BoundingBox {
  double min_lon = 0.0, min_lat = 0.0, max_lon = 0.0, max_lat = 0.0;

  bool contains(LonLat p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat &&
           p.lat <= max_lat;
  }
  void expand(LonLat p);
  BoundingBox buffered_km(double km) const;
};

// Traffic analysis zone. Area comes from the input and is never recomputed;
// the centroid is derived from the geometry on load.
struct Taz {
  TazId id = 0;
  MultiPolygon geometry;
  LonLat centroid;
  double area_m2 = 0.0;
  std::int64_t population = 0;
  std::int64_t employment = 0;
};

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kMetersPerDegree = kEarthRadiusKm * 1000.0 * 3.14159265358979323846 / 180.0;

double haversine_km(LonLat a, LonLat b);
double centroid_distance_km(const Taz& a, const Taz& b);

// Half the equivalent-circle radius, in km. Used as the within-zone distance.
double intrazonal_distance_km(double area_m2);

LonLat polygon_centroid(const MultiPolygon& geom);
BoundingBox polygon_bounds(const MultiPolygon& geom);

// Boundary-inclusive point-in-polygon (even-odd over all rings, so holes are
// excluded and points on any ring count as covered).
bool covers(const MultiPolygon& geom, LonLat p);

// Throws Error(InvalidGeometry) on unparseable/degenerate polygons.
void validate_taz(const Taz& taz);

// Queen contiguity over a fixed TAZ set: two zones are adjacent iff their
// boundaries come within snap_tol meters of each other (shared vertices,
// vertex-on-edge, overlapping edges, and hairline gaps all qualify).
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  AdjacencyGraph(std::vector<TazId> ids, std::vector<std::vector<int>> neighbors);

  int node_count() const { return static_cast<int>(ids_.size()); }
  const std::vector<TazId>& ids() const { return ids_; }
  int index_of(TazId id) const;  // throws UnknownNode
  TazId id_of(int index) const { return ids_[static_cast<std::size_t>(index)]; }
  const std::vector<int>& neighbors(int index) const {
    return neighbors_[static_cast<std::size_t>(index)];
  }
  bool adjacent(TazId a, TazId b) const;
  std::size_t edge_count() const;

 private:
  std::vector<TazId> ids_;  // sorted ascending
  std::vector<std::vector<int>> neighbors_;  // sorted dense indices, no self
};

AdjacencyGraph build_adjacency(const std::vector<Taz>& tazs, double snap_tol_m = 1.0);

enum class DistanceSource { ComputedCentroid, UserSupplied };

struct DistanceConfig {
  double floor_km = 0.05;          // applied to i != j pairs
  bool intrazonal_radius = true;   // d_ii = 0.5*sqrt(area/pi) km; else 0 + floor
};

struct DistanceEntry {
  TazId origin = 0;
  TazId dest = 0;
  double km = 0.0;
};

// Symmetric all-pairs distances over a TAZ set. Centroid mode computes
// great-circle distances lazily; user mode stores the supplied matrix.
class DistanceMatrix {
 public:
  int node_count() const { return static_cast<int>(ids_.size()); }
  const std::vector<TazId>& ids() const { return ids_; }
  int index_of(TazId id) const;  // throws MissingDistance
  TazId id_of(int index) const { return ids_[static_cast<std::size_t>(index)]; }

  double km(TazId a, TazId b) const;
  double km_at(int i, int j) const;  // dense indices
  DistanceSource source() const { return source_; }
  double floor_km() const { return config_.floor_km; }

  friend DistanceMatrix build_distance_matrix(const std::vector<Taz>&,
                                              const std::optional<std::vector<DistanceEntry>>&,
                                              const DistanceConfig&);
  friend DistanceMatrix make_user_distance_matrix(std::vector<TazId>,
                                                  std::vector<double>,
                                                  DistanceConfig);

 private:
  std::vector<TazId> ids_;       // sorted ascending
  DistanceSource source_ = DistanceSource::ComputedCentroid;
  DistanceConfig config_;
  std::vector<LonLat> centroids_;  // centroid mode
  std::vector<double> diagonal_;   // intrazonal distances, both modes
  std::vector<double> dense_;      // user mode, row-major n*n
};

// Computed-centroid distances unless a user matrix is given. A user matrix
// must cover every unordered pair and be symmetric within 1e-6; the diagonal
// is filled from the intrazonal rule when absent.
DistanceMatrix build_distance_matrix(
    const std::vector<Taz>& tazs,
    const std::optional<std::vector<DistanceEntry>>& user_matrix = std::nullopt,
    const DistanceConfig& config = {});

// Test/aggregation helper: wrap an explicit dense matrix (row-major, over
// sorted ids) as a user-supplied DistanceMatrix. Values are floored off the
// diagonal.
DistanceMatrix make_user_distance_matrix(std::vector<TazId> ids,
                                         std::vector<double> dense,
                                         DistanceConfig config = {});

}  // namespace pcz
