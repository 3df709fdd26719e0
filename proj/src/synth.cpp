#include "pcz/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pcz {

namespace {

double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t next_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<std::int64_t>(rng() % span);
}

}  // namespace

SyntheticCity generate_city(const SyntheticCitySpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 || spec.cell_km <= 0.0 ||
      spec.total_trips < 0 || spec.beta < 0.0 ||
      spec.intra_block_multiplier <= 0.0 || spec.min_population < 0 ||
      spec.max_population < spec.min_population) {
    throw Error(ErrorKind::BadInput, "invalid synthetic city spec");
  }
  if (spec.block_rows < 1 || spec.block_cols < 1 ||
      spec.rows % spec.block_rows != 0 || spec.cols % spec.block_cols != 0) {
    throw Error(ErrorKind::BadInput, "blocks must tile the grid");
  }

  std::mt19937_64 rng(spec.seed);
  const int n = spec.rows * spec.cols;
  const double mid_lat = spec.origin.lat +
                         0.5 * spec.rows * spec.cell_km * 1000.0 / kMetersPerDegree;
  const double cos_ref = std::cos(mid_lat * M_PI / 180.0);
  const double dlat = spec.cell_km * 1000.0 / kMetersPerDegree;
  const double dlon = spec.cell_km * 1000.0 / (kMetersPerDegree * cos_ref);
  const int cells_per_block_row = spec.rows / spec.block_rows;
  const int cells_per_block_col = spec.cols / spec.block_cols;

  SyntheticCity city;
  city.tazs.reserve(static_cast<std::size_t>(n));
  city.block_of.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const int id = r * spec.cols + c;
      const double lon0 = spec.origin.lon + c * dlon;
      const double lat0 = spec.origin.lat + r * dlat;
      Taz taz;
      taz.id = id;
      taz.geometry = {{{{lon0, lat0},
                        {lon0 + dlon, lat0},
                        {lon0 + dlon, lat0 + dlat},
                        {lon0, lat0 + dlat},
                        {lon0, lat0}}}};
      taz.centroid = polygon_centroid(taz.geometry);
      taz.area_m2 = spec.cell_km * spec.cell_km * 1e6;
      taz.population = next_int(rng, spec.min_population, spec.max_population);
      taz.employment = next_int(rng, spec.min_population / 4, spec.max_population / 2);
      city.tazs.push_back(std::move(taz));
      city.block_of[static_cast<std::size_t>(id)] =
          (r / cells_per_block_row) * spec.block_cols + (c / cells_per_block_col);
    }
  }

  // Gravity weights over all ordered pairs, diagonal included.
  const DistanceMatrix dist = build_distance_matrix(city.tazs);
  std::vector<double> cumulative;
  cumulative.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pop_i = static_cast<double>(city.tazs[static_cast<std::size_t>(i)].population);
    for (int j = 0; j < n; ++j) {
      const double pop_j = static_cast<double>(city.tazs[static_cast<std::size_t>(j)].population);
      const double d = dist.km_at(i, j);
      double weight = pop_i * pop_j / std::pow(d, spec.beta);
      if (city.block_of[static_cast<std::size_t>(i)] == city.block_of[static_cast<std::size_t>(j)]) {
        weight *= spec.intra_block_multiplier;
      }
      acc += weight;
      cumulative.push_back(acc);
    }
  }
  if (acc <= 0.0) {
    throw Error(ErrorKind::BadInput, "degenerate gravity weights");
  }

  for (std::int64_t t = 0; t < spec.total_trips; ++t) {
    const double r = next_uniform(rng) * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    const std::size_t cell = std::min(
        static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    const int i = static_cast<int>(cell / static_cast<std::size_t>(n));
    const int j = static_cast<int>(cell % static_cast<std::size_t>(n));
    city.flows.add(i, j, 1);
    if (city.block_of[static_cast<std::size_t>(i)] != city.block_of[static_cast<std::size_t>(j)]) {
      ++city.inter_block_trips;
    }
  }
  return city;
}

std::vector<TripRecord> materialize_trips(const SyntheticCity& city,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TripRecord> rows;
  rows.reserve(static_cast<std::size_t>(city.flows.total_trips));

  auto cell_bounds = [&](TazId id) {
    return polygon_bounds(city.tazs[static_cast<std::size_t>(id)].geometry);
  };
  auto point_in = [&](const BoundingBox& box) -> LonLat {
    // Stay off the cell boundary so the spatial join is unambiguous.
    const double fx = 0.05 + 0.9 * next_uniform(rng);
    const double fy = 0.05 + 0.9 * next_uniform(rng);
    return {box.min_lon + fx * (box.max_lon - box.min_lon),
            box.min_lat + fy * (box.max_lat - box.min_lat)};
  };

  static const char* kDays[] = {"2020-11-10", "2020-11-11", "2020-11-12",
                                "2020-11-13", "2020-11-14", "2020-11-15",
                                "2020-11-16"};
  std::int64_t serial = 0;
  char user[32];
  for (const auto& [pair, trips] : city.flows.flows) {
    const BoundingBox origin_box = cell_bounds(pair.first);
    const BoundingBox dest_box = cell_bounds(pair.second);
    for (std::int64_t t = 0; t < trips; ++t) {
      TripRecord rec;
      rec.origin_loc = point_in(origin_box);
      rec.dest_loc = point_in(dest_box);
      double km = haversine_km(rec.origin_loc, rec.dest_loc);
      if (km < 0.01) {
        rec.dest_loc.lon += 0.0002;  // avoid zero-length trips
        km = haversine_km(rec.origin_loc, rec.dest_loc);
      }
      double speed_kmh;
      if (km <= 3.0) {
        rec.mode = (rng() & 1) != 0 ? Mode::FFBS : Mode::PublicBike;
        speed_kmh = 8.0 + 10.0 * next_uniform(rng);
      } else {
        rec.mode = (rng() & 1) != 0 ? Mode::Metro : Mode::Bus;
        speed_kmh = rec.mode == Mode::Metro ? 25.0 + 20.0 * next_uniform(rng)
                                            : 15.0 + 10.0 * next_uniform(rng);
      }
      const std::int64_t duration_s =
          std::max<std::int64_t>(90, static_cast<std::int64_t>(km / speed_kmh * 3600.0));
      rec.date = kDays[rng() % 7];
      rec.origin_time_s = 6 * 3600 + static_cast<std::int64_t>(rng() % (14 * 3600));
      if (rec.origin_time_s + duration_s > 86399) {
        rec.origin_time_s = 86399 - duration_s;  // keep within one day
      }
      rec.dest_time_s = rec.origin_time_s + duration_s;
      std::snprintf(user, sizeof(user), "u%08lld", static_cast<long long>(serial++));
      rec.user_id = user;
      rows.push_back(std::move(rec));
    }
  }
  return rows;
}

}  // namespace pcz
