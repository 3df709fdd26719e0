#include "pcz/contiguity.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace pcz {

const char* to_string(FragmentKind kind) {
  switch (kind) {
    case FragmentKind::EnclaveOneNeighbor: return "enclave-one-neighbor";
    case FragmentKind::EnclaveMultiNeighbor: return "enclave-multi-neighbor";
    case FragmentKind::Orphan: return "orphan";
  }
  return "?";
}

namespace {

void check_universe(const Partition& partition, const AdjacencyGraph& adj,
                    const SpatialNetwork& net) {
  if (partition.size() != adj.node_count() || adj.node_count() != net.node_count() ||
      adj.ids() != net.ids()) {
    throw Error(ErrorKind::BadInput,
                "partition, adjacency, and network must share one TAZ set");
  }
}

// Polygon-adjacency components of one zone's member set, in discovery order
// over ascending member index.
std::vector<std::vector<int>> zone_components(const std::vector<int>& members,
                                              const Partition& partition,
                                              const AdjacencyGraph& adj,
                                              int zone) {
  std::vector<std::vector<int>> components;
  std::set<int> pending(members.begin(), members.end());
  std::vector<int> stack;
  while (!pending.empty()) {
    const int start = *pending.begin();
    pending.erase(pending.begin());
    std::vector<int> component{start};
    stack.assign(1, start);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj.neighbors(u)) {
        if (partition.zone_of(v) != zone) continue;
        auto it = pending.find(v);
        if (it == pending.end()) continue;
        pending.erase(it);
        component.push_back(v);
        stack.push_back(v);
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  return components;
}

double component_trips(const std::vector<int>& members, const SpatialNetwork& net) {
  double acc = 0.0;
  for (int m : members) acc += net.strength(m);
  return acc;
}

double component_area(const std::vector<int>& members, const SpatialNetwork& net) {
  double acc = 0.0;
  for (int m : members) acc += net.attributes(m).area_m2;
  return acc;
}

}  // namespace

SplitResult split_components(const Partition& partition, const AdjacencyGraph& adj,
                             const SpatialNetwork& net) {
  check_universe(partition, adj, net);
  std::vector<int> assignment = partition.assignment();
  int next_zone = partition.zone_count();
  std::vector<char> fragment_label;  // indexed by zone id, grows

  fragment_label.assign(static_cast<std::size_t>(partition.zone_count()), 0);
  const auto zones = partition.members();
  for (int z = 0; z < partition.zone_count(); ++z) {
    auto components = zone_components(zones[static_cast<std::size_t>(z)], partition, adj, z);
    if (components.size() <= 1) continue;
    // Largest by trips, tie -> area, tie -> lowest member id, keeps the id.
    std::size_t keep = 0;
    double best_trips = -1.0, best_area = -1.0;
    for (std::size_t c = 0; c < components.size(); ++c) {
      const double trips = component_trips(components[c], net);
      const double area = component_area(components[c], net);
      if (trips > best_trips ||
          (trips == best_trips && area > best_area) ||
          (trips == best_trips && area == best_area &&
           components[c].front() < components[keep].front())) {
        keep = c;
        best_trips = trips;
        best_area = area;
      }
    }
    for (std::size_t c = 0; c < components.size(); ++c) {
      if (c == keep) continue;
      for (int m : components[c]) assignment[static_cast<std::size_t>(m)] = next_zone;
      fragment_label.push_back(1);
      ++next_zone;
    }
  }

  SplitResult result;
  // Compact while tracking which labels were fragments.
  std::vector<int> remap(static_cast<std::size_t>(next_zone), -1);
  int compacted = 0;
  for (int& z : assignment) {
    if (remap[static_cast<std::size_t>(z)] < 0) remap[static_cast<std::size_t>(z)] = compacted++;
    z = remap[static_cast<std::size_t>(z)];
  }
  result.is_fragment.assign(static_cast<std::size_t>(compacted), 0);
  for (int old = 0; old < next_zone; ++old) {
    const int z = remap[static_cast<std::size_t>(old)];
    if (z >= 0) result.is_fragment[static_cast<std::size_t>(z)] = fragment_label[static_cast<std::size_t>(old)];
  }
  result.partition = Partition::from_assignment(std::move(assignment));
  return result;
}

Fragment classify_fragment(int zone, const Partition& partition,
                           const AdjacencyGraph& adj, const SpatialNetwork& net) {
  check_universe(partition, adj, net);
  if (zone < 0 || zone >= partition.zone_count()) {
    throw Error(ErrorKind::UnknownZone, "fragment zone id out of range");
  }
  Fragment frag;
  for (int i = 0; i < partition.size(); ++i) {
    if (partition.zone_of(i) == zone) frag.members.push_back(i);
  }
  frag.total_trips = component_trips(frag.members, net);

  std::set<int> neighbor_zones;
  bool flow_to_neighbor = false;
  for (int m : frag.members) {
    for (int v : adj.neighbors(m)) {
      const int zv = partition.zone_of(v);
      if (zv != zone) neighbor_zones.insert(zv);
    }
  }
  if (neighbor_zones.empty()) {
    throw Error(ErrorKind::IslandNoNeighbors,
                "fragment has no polygon neighbors (zone " + std::to_string(zone) + ")");
  }
  for (int m : frag.members) {
    for (const SpatialNetwork::Edge& e : net.edges(m)) {
      if (e.weight > 0.0 && neighbor_zones.count(partition.zone_of(e.to)) > 0) {
        flow_to_neighbor = true;
        break;
      }
    }
    if (flow_to_neighbor) break;
  }
  frag.neighbor_zones.assign(neighbor_zones.begin(), neighbor_zones.end());
  if (frag.neighbor_zones.size() == 1) {
    frag.kind = FragmentKind::EnclaveOneNeighbor;
  } else if (flow_to_neighbor) {
    frag.kind = FragmentKind::EnclaveMultiNeighbor;
  } else {
    frag.kind = FragmentKind::Orphan;
  }
  return frag;
}

namespace {

struct PendingFragment {
  int zone = 0;
  double trips = 0.0;
};

}  // namespace

RepairResult repair(const Partition& partition, const AdjacencyGraph& adj,
                    const SpatialNetwork& net, const RepairOptions& options) {
  check_universe(partition, adj, net);
  const double min_area_m2 = options.min_zone_km2 * 1e6;

  RepairResult result;
  Partition current = partition;
  std::set<std::vector<int>> skipped_islands;

  int pass_bound = -1;
  int passes = 0;
  while (true) {
    SplitResult split = split_components(current, adj, net);
    current = std::move(split.partition);

    // Fragment set: split-off components plus zones under the area floor.
    const auto zones = current.members();
    std::vector<PendingFragment> pending;
    for (int z = 0; z < current.zone_count(); ++z) {
      const auto& members = zones[static_cast<std::size_t>(z)];
      bool flagged = split.is_fragment[static_cast<std::size_t>(z)];
      if (!flagged && min_area_m2 > 0.0 && current.zone_count() > 1 &&
          component_area(members, net) < min_area_m2) {
        flagged = true;
      }
      if (flagged && skipped_islands.count(members) == 0) {
        pending.push_back({z, component_trips(members, net)});
      }
    }
    if (pending.empty()) break;

    if (pass_bound < 0) {
      pass_bound = static_cast<int>(pending.size()) + current.zone_count() + 1;
    }
    if (++passes > pass_bound) {
      throw Error(ErrorKind::NonConvergence,
                  "contiguity repair exceeded its pass bound; adjacency graph "
                  "is likely pathological");
    }

    // Smallest fragment first; one merge per pass keeps classification fresh.
    std::sort(pending.begin(), pending.end(),
              [](const PendingFragment& a, const PendingFragment& b) {
                return a.trips != b.trips ? a.trips < b.trips : a.zone < b.zone;
              });
    const int zone = pending.front().zone;

    Fragment frag;
    try {
      frag = classify_fragment(zone, current, adj, net);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::IslandNoNeighbors) throw;
      RepairRecord record;
      for (int m : zones[static_cast<std::size_t>(zone)]) record.fragment.push_back(net.id_of(m));
      record.rule = "island-untouched";
      result.log.push_back(std::move(record));
      skipped_islands.insert(zones[static_cast<std::size_t>(zone)]);
      continue;
    }

    GainEvaluator eval(net, current, options.quality);
    int target = -1;
    std::string rule;
    bool negative = false;
    if (frag.kind == FragmentKind::EnclaveOneNeighbor) {
      target = frag.neighbor_zones.front();
      rule = "enclave-one-neighbor";
    } else if (frag.kind == FragmentKind::EnclaveMultiNeighbor) {
      double best = -std::numeric_limits<double>::infinity();
      for (int candidate : frag.neighbor_zones) {
        const double gain = eval.merge_gain(zone, candidate);
        if (gain > best) {
          best = gain;
          target = candidate;
        }
      }
      negative = best <= 0.0;  // contiguity is mandatory; fallback flagged
      rule = "enclave-max-gain";
    } else {
      double best_area = std::numeric_limits<double>::infinity();
      for (int candidate : frag.neighbor_zones) {
        const double area = component_area(zones[static_cast<std::size_t>(candidate)], net);
        if (area < best_area) {
          best_area = area;
          target = candidate;
        }
      }
      rule = "orphan-smallest-area";
    }

    RepairRecord record;
    for (int m : frag.members) record.fragment.push_back(net.id_of(m));
    record.rule = rule;
    record.delta_q = eval.merge_gain(zone, target);
    record.negative_gain = negative;
    eval.apply_merge(zone, target);
    current = eval.partition();
    current.compact();
    record.target_zone = current.zone_of(net.index_of(record.fragment.front()));
    result.log.push_back(std::move(record));
  }

  current.canonicalize();
  result.partition = std::move(current);
  return result;
}

}  // namespace pcz
