#include "pcz/zoning.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace pcz {

double cutoff_percentage(std::int64_t intra, std::int64_t total) {
  if (total <= 0) return 0.0;
  return 100.0 * (1.0 - static_cast<double>(intra) / static_cast<double>(total));
}

ZonePlan cutoff_stats(const Partition& partition, const SpatialNetwork& net) {
  if (partition.size() != net.node_count()) {
    throw Error(ErrorKind::BadInput, "partition does not cover the network");
  }
  const int zone_count = partition.zone_count();
  ZonePlan plan;
  plan.partition = partition;
  plan.zones.resize(static_cast<std::size_t>(zone_count));
  for (int z = 0; z < zone_count; ++z) plan.zones[static_cast<std::size_t>(z)].zone_id = z;

  for (int i = 0; i < net.node_count(); ++i) {
    ZoneStats& stats = plan.zones[static_cast<std::size_t>(partition.zone_of(i))];
    stats.population += static_cast<std::int64_t>(net.attributes(i).population);
    stats.area_km2 += net.attributes(i).area_m2 / 1e6;
  }
  for (const DirectedFlow& f : net.directed_flows()) {
    const int zo = partition.zone_of(net.index_of(f.origin));
    const int zd = partition.zone_of(net.index_of(f.dest));
    plan.grand_total_trips += f.trips;
    plan.zones[static_cast<std::size_t>(zo)].total_trips += f.trips;
    if (zo == zd) {
      plan.zones[static_cast<std::size_t>(zo)].intra_trips += f.trips;
      plan.intra_sum += f.trips;
    } else {
      plan.zones[static_cast<std::size_t>(zd)].total_trips += f.trips;
    }
  }
  for (ZoneStats& stats : plan.zones) {
    stats.cutoff_pct = cutoff_percentage(stats.intra_trips, stats.total_trips);
  }
  plan.total_cutoff_pct = cutoff_percentage(plan.intra_sum, plan.grand_total_trips);
  return plan;
}

namespace {

// Zone-level state during agglomeration: adjacency, pairwise trips, and the
// running sums needed for O(1) coefficient-of-variation deltas.
struct MergeState {
  int active = 0;
  std::vector<char> alive;
  std::vector<std::set<int>> adjacent;
  std::map<std::pair<int, int>, std::int64_t> pair_trips;  // (a<b) -> directed both ways
  std::vector<double> population, area;
  double pop_sum = 0.0, pop_sq = 0.0;
  double area_sum = 0.0, area_sq = 0.0;
  std::int64_t grand_total = 0;

  static double cv(double sum, double sq, int n) {
    if (n <= 0 || sum <= 0.0) return 0.0;
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    return std::sqrt(var) / mean;
  }
  double pop_cv() const { return cv(pop_sum, pop_sq, active); }
  double area_cv() const { return cv(area_sum, area_sq, active); }

  double pop_cv_after(int a, int b) const {
    const double sq = pop_sq - population[static_cast<std::size_t>(a)] * population[static_cast<std::size_t>(a)] -
                      population[static_cast<std::size_t>(b)] * population[static_cast<std::size_t>(b)] +
                      (population[static_cast<std::size_t>(a)] + population[static_cast<std::size_t>(b)]) *
                          (population[static_cast<std::size_t>(a)] + population[static_cast<std::size_t>(b)]);
    return cv(pop_sum, sq, active - 1);
  }
  double area_cv_after(int a, int b) const {
    const double sq = area_sq - area[static_cast<std::size_t>(a)] * area[static_cast<std::size_t>(a)] -
                      area[static_cast<std::size_t>(b)] * area[static_cast<std::size_t>(b)] +
                      (area[static_cast<std::size_t>(a)] + area[static_cast<std::size_t>(b)]) *
                          (area[static_cast<std::size_t>(a)] + area[static_cast<std::size_t>(b)]);
    return cv(area_sum, sq, active - 1);
  }

  std::int64_t trips_between(int a, int b) const {
    auto it = pair_trips.find({std::min(a, b), std::max(a, b)});
    return it == pair_trips.end() ? 0 : it->second;
  }

  // Merge b into a.
  void merge(int a, int b) {
    pop_sq += 2.0 * population[static_cast<std::size_t>(a)] * population[static_cast<std::size_t>(b)];
    area_sq += 2.0 * area[static_cast<std::size_t>(a)] * area[static_cast<std::size_t>(b)];
    population[static_cast<std::size_t>(a)] += population[static_cast<std::size_t>(b)];
    area[static_cast<std::size_t>(a)] += area[static_cast<std::size_t>(b)];
    alive[static_cast<std::size_t>(b)] = 0;
    --active;
    for (int nb : adjacent[static_cast<std::size_t>(b)]) {
      adjacent[static_cast<std::size_t>(nb)].erase(b);
      if (nb != a) {
        adjacent[static_cast<std::size_t>(nb)].insert(a);
        adjacent[static_cast<std::size_t>(a)].insert(nb);
      }
    }
    adjacent[static_cast<std::size_t>(b)].clear();
    adjacent[static_cast<std::size_t>(a)].erase(b);
    std::vector<std::pair<int, std::int64_t>> moved;
    for (auto it = pair_trips.begin(); it != pair_trips.end();) {
      if (it->first.first == b || it->first.second == b) {
        const int other = it->first.first == b ? it->first.second : it->first.first;
        if (other != a) moved.push_back({other, it->second});
        it = pair_trips.erase(it);
      } else {
        ++it;
      }
    }
    for (const auto& [other, trips] : moved) {
      pair_trips[{std::min(a, other), std::max(a, other)}] += trips;
    }
  }
};

MergeState make_merge_state(const ZonePlan& plan, const AdjacencyGraph& adj,
                            const SpatialNetwork& net) {
  const Partition& partition = plan.partition;
  const int zone_count = partition.zone_count();
  MergeState state;
  state.active = zone_count;
  state.alive.assign(static_cast<std::size_t>(zone_count), 1);
  state.adjacent.resize(static_cast<std::size_t>(zone_count));
  state.population.assign(static_cast<std::size_t>(zone_count), 0.0);
  state.area.assign(static_cast<std::size_t>(zone_count), 0.0);
  state.grand_total = plan.grand_total_trips;

  for (int i = 0; i < net.node_count(); ++i) {
    const int zi = partition.zone_of(i);
    state.population[static_cast<std::size_t>(zi)] += net.attributes(i).population;
    state.area[static_cast<std::size_t>(zi)] += net.attributes(i).area_m2;
    for (int v : adj.neighbors(i)) {
      const int zv = partition.zone_of(v);
      if (zv != zi) state.adjacent[static_cast<std::size_t>(zi)].insert(zv);
    }
  }
  for (const DirectedFlow& f : net.directed_flows()) {
    const int zo = partition.zone_of(net.index_of(f.origin));
    const int zd = partition.zone_of(net.index_of(f.dest));
    if (zo != zd) state.pair_trips[{std::min(zo, zd), std::max(zo, zd)}] += f.trips;
  }
  for (double& p : state.population) state.pop_sum += p, state.pop_sq += p * p;
  for (double& a : state.area) state.area_sum += a, state.area_sq += a * a;
  return state;
}

int zone_graph_components(const MergeState& state) {
  std::vector<char> visited(state.alive.size(), 0);
  int components = 0;
  std::vector<int> stack;
  for (std::size_t z = 0; z < state.alive.size(); ++z) {
    if (!state.alive[z] || visited[z]) continue;
    ++components;
    stack.assign(1, static_cast<int>(z));
    visited[z] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : state.adjacent[static_cast<std::size_t>(u)]) {
        if (!visited[static_cast<std::size_t>(v)]) {
          visited[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return components;
}

ZonePlan greedy_merge(const ZonePlan& plan, const AdjacencyGraph& adj,
                      const SpatialNetwork& net, const MergeObjective& objective,
                      std::vector<MergeStep>* steps) {
  MergeState state = make_merge_state(plan, adj, net);
  std::vector<int> assignment = plan.partition.assignment();
  std::vector<int> label(static_cast<std::size_t>(plan.partition.zone_count()));
  for (std::size_t z = 0; z < label.size(); ++z) label[z] = static_cast<int>(z);

  while (state.active > objective.k_target) {
    const double pop_cv = state.pop_cv();
    const double area_cv = state.area_cv();
    double best_score = -std::numeric_limits<double>::infinity();
    int best_a = -1, best_b = -1;
    for (std::size_t a = 0; a < state.alive.size(); ++a) {
      if (!state.alive[a]) continue;
      for (int b : state.adjacent[a]) {
        if (b <= static_cast<int>(a)) continue;
        const double saved =
            static_cast<double>(state.trips_between(static_cast<int>(a), b)) /
            std::max<std::int64_t>(state.grand_total, 1);
        const double score =
            saved -
            objective.lambda_pop * (state.pop_cv_after(static_cast<int>(a), b) - pop_cv) -
            objective.lambda_area * (state.area_cv_after(static_cast<int>(a), b) - area_cv);
        if (score > best_score) {
          best_score = score;
          best_a = static_cast<int>(a);
          best_b = b;
        }
      }
    }
    if (best_a < 0) {
      throw Error(ErrorKind::Infeasible,
                  "zone adjacency graph has more components than k_target");
    }
    if (steps != nullptr) {
      steps->push_back({best_a, best_b, state.trips_between(best_a, best_b), best_score});
    }
    state.merge(best_a, best_b);
    for (int& l : label) {
      if (l == best_b) l = best_a;
    }
  }
  for (int& z : assignment) z = label[static_cast<std::size_t>(z)];
  ZonePlan merged = cutoff_stats(Partition::from_assignment(std::move(assignment)), net);
  return merged;
}

// Exhaustive contiguous k-partition search via restricted growth strings.
ZonePlan exact_merge(const ZonePlan& plan, const AdjacencyGraph& adj,
                     const SpatialNetwork& net, const MergeObjective& objective) {
  const int n = plan.partition.zone_count();
  if (n > 16) {
    throw Error(ErrorKind::BadInput, "exact merge supports at most 16 input zones");
  }
  MergeState state = make_merge_state(plan, adj, net);
  const int k = objective.k_target;

  // Bitmask adjacency between input zones.
  std::vector<std::uint32_t> adj_mask(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    for (int b : state.adjacent[static_cast<std::size_t>(a)]) {
      adj_mask[static_cast<std::size_t>(a)] |= 1u << b;
    }
  }
  std::vector<std::vector<std::int64_t>> trips(static_cast<std::size_t>(n),
                                               std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b) trips[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = state.trips_between(a, b);
    }
  }

  auto group_connected = [&](std::uint32_t mask) {
    if (mask == 0) return false;
    const std::uint32_t start = mask & (~mask + 1);
    std::uint32_t visited = start;
    std::uint32_t frontier = start;
    while (frontier != 0) {
      std::uint32_t next = 0;
      std::uint32_t f = frontier;
      while (f != 0) {
        const int z = std::countr_zero(f);
        f &= f - 1;
        next |= adj_mask[static_cast<std::size_t>(z)] & mask & ~visited;
      }
      visited |= next;
      frontier = next;
    }
    return visited == mask;
  };

  std::vector<int> code(static_cast<std::size_t>(n), 0);
  std::vector<int> best_code;
  double best_objective = std::numeric_limits<double>::infinity();

  auto evaluate = [&]() {
    std::vector<std::uint32_t> masks(static_cast<std::size_t>(k), 0);
    for (int z = 0; z < n; ++z) masks[static_cast<std::size_t>(code[static_cast<std::size_t>(z)])] |= 1u << z;
    for (int g = 0; g < k; ++g) {
      if (!group_connected(masks[static_cast<std::size_t>(g)])) return;
    }
    std::int64_t cut = 0;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (code[static_cast<std::size_t>(a)] != code[static_cast<std::size_t>(b)]) {
          cut += trips[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        }
      }
    }
    double pop_sum = 0.0, pop_sq = 0.0, area_sum = 0.0, area_sq = 0.0;
    for (int g = 0; g < k; ++g) {
      double p = 0.0, ar = 0.0;
      std::uint32_t mask = masks[static_cast<std::size_t>(g)];
      while (mask != 0) {
        const int z = std::countr_zero(mask);
        mask &= mask - 1;
        p += state.population[static_cast<std::size_t>(z)];
        ar += state.area[static_cast<std::size_t>(z)];
      }
      pop_sum += p;
      pop_sq += p * p;
      area_sum += ar;
      area_sq += ar * ar;
    }
    const double cut_fraction = static_cast<double>(cut) /
                                std::max<std::int64_t>(state.grand_total, 1);
    const double value = cut_fraction +
                         objective.lambda_pop * MergeState::cv(pop_sum, pop_sq, k) +
                         objective.lambda_area * MergeState::cv(area_sum, area_sq, k);
    if (value < best_objective) {
      best_objective = value;
      best_code = code;
    }
  };

  // Restricted growth strings capped at k blocks, requiring exactly k used.
  auto recurse = [&](auto&& self, int index, int used) -> void {
    if (n - index < k - used) return;  // cannot reach k blocks
    if (index == n) {
      if (used == k) evaluate();
      return;
    }
    const int limit = std::min(used + 1, k);
    for (int g = 0; g < limit; ++g) {
      code[static_cast<std::size_t>(index)] = g;
      self(self, index + 1, std::max(used, g + 1));
    }
  };
  recurse(recurse, 0, 0);

  if (best_code.empty()) {
    throw Error(ErrorKind::Infeasible,
                "no contiguous partition into k_target zones exists");
  }
  std::vector<int> assignment = plan.partition.assignment();
  for (int& z : assignment) z = best_code[static_cast<std::size_t>(z)];
  return cutoff_stats(Partition::from_assignment(std::move(assignment)), net);
}

}  // namespace

ZonePlan merge_to_k(const ZonePlan& plan, const AdjacencyGraph& adj,
                    const SpatialNetwork& net, const MergeObjective& objective,
                    std::vector<MergeStep>* steps) {
  if (objective.k_target < 1) {
    throw Error(ErrorKind::BadInput, "k_target must be >= 1");
  }
  if (objective.k_target > plan.partition.zone_count()) {
    throw Error(ErrorKind::Infeasible,
                "k_target exceeds the current zone count");
  }
  {
    MergeState state = make_merge_state(plan, adj, net);
    if (zone_graph_components(state) > objective.k_target) {
      throw Error(ErrorKind::Infeasible,
                  "zone adjacency graph has more components than k_target");
    }
  }
  if (objective.k_target == plan.partition.zone_count()) {
    return cutoff_stats(plan.partition, net);  // identity
  }
  return objective.exact ? exact_merge(plan, adj, net, objective)
                         : greedy_merge(plan, adj, net, objective, steps);
}

PlanComparison compare_to_reference(const Partition& ours, const Partition& reference,
                                    const SpatialNetwork& net) {
  PlanComparison cmp;
  cmp.ours = cutoff_stats(ours, net);
  cmp.reference = cutoff_stats(reference, net);
  cmp.delta_total_cutoff_points =
      cmp.reference.total_cutoff_pct - cmp.ours.total_cutoff_pct;
  return cmp;
}

}  // namespace pcz
