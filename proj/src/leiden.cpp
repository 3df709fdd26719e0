#include "pcz/leiden.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>

namespace pcz {

namespace {

constexpr double kMoveEps = 1e-12;   // minimum gain for a single move
constexpr double kThetaArgmax = 1e-12;

// Working graph for one aggregation level. Edge terms and node factors are
// exact sums of the level-0 quality terms, so the quality of an aggregated
// partition equals the quality of the flattened partition on the original
// network and the trace stays monotone.
struct LevelGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> edges;  // (to, edge term)
  std::vector<double> self_term;  // ordered-pair diagonal sums
  std::vector<double> factor;     // node factor sums
  double two_m = 0.0;
  std::vector<std::vector<int>> members;  // original node indices
};

LevelGraph make_level0(const SpatialNetwork& net, const QualityTerms& terms) {
  LevelGraph g;
  g.n = net.node_count();
  g.two_m = terms.two_m;
  g.edges.resize(static_cast<std::size_t>(g.n));
  g.self_term = terms.self_term;
  g.factor = terms.node_factor;
  g.members.resize(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    g.members[static_cast<std::size_t>(i)] = {i};
    const auto& edges = net.edges(i);
    const auto& row = terms.edge_term[static_cast<std::size_t>(i)];
    auto& out = g.edges[static_cast<std::size_t>(i)];
    out.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      out.push_back({edges[e].to, row[e]});
    }
  }
  return g;
}

double level_quality(const LevelGraph& g, const Partition& p) {
  double internal = 0.0;
  std::vector<double> zone_factor(static_cast<std::size_t>(p.zone_count()), 0.0);
  for (int i = 0; i < g.n; ++i) {
    const int zi = p.zone_of(i);
    zone_factor[static_cast<std::size_t>(zi)] += g.factor[static_cast<std::size_t>(i)];
    internal += g.self_term[static_cast<std::size_t>(i)];
    for (const auto& [to, term] : g.edges[static_cast<std::size_t>(i)]) {
      if (p.zone_of(to) == zi) internal += term;
    }
  }
  double squares = 0.0;
  for (double s : zone_factor) squares += s * s;
  return internal / g.two_m - squares / (g.two_m * g.two_m);
}

// Phase 1: queue-based greedy local moving. Returns true if any node moved.
bool local_move(const LevelGraph& g, Partition& p) {
  std::vector<double> zone_factor(static_cast<std::size_t>(p.zone_count()), 0.0);
  for (int i = 0; i < g.n; ++i) {
    zone_factor[static_cast<std::size_t>(p.zone_of(i))] += g.factor[static_cast<std::size_t>(i)];
  }
  std::deque<int> queue;
  std::vector<char> queued(static_cast<std::size_t>(g.n), 1);
  for (int i = 0; i < g.n; ++i) queue.push_back(i);

  std::vector<double> acc(zone_factor.size(), 0.0);
  std::vector<char> seen(zone_factor.size(), 0);
  std::vector<int> touched;
  const double two_m = g.two_m;
  bool moved_any = false;

  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(u)] = 0;

    const int zu = p.zone_of(u);
    touched.clear();
    for (const auto& [v, term] : g.edges[static_cast<std::size_t>(u)]) {
      const int zv = p.zone_of(v);
      if (!seen[static_cast<std::size_t>(zv)]) {
        seen[static_cast<std::size_t>(zv)] = 1;
        acc[static_cast<std::size_t>(zv)] = 0.0;
        touched.push_back(zv);
      }
      acc[static_cast<std::size_t>(zv)] += term;
    }
    std::sort(touched.begin(), touched.end());

    const double s_u = g.factor[static_cast<std::size_t>(u)];
    const double e_current = seen[static_cast<std::size_t>(zu)] ? acc[static_cast<std::size_t>(zu)] : 0.0;
    const double f_current = zone_factor[static_cast<std::size_t>(zu)];

    double best_gain = kMoveEps;
    int best_zone = zu;
    for (int z : touched) {
      if (z == zu) continue;
      const double gain =
          2.0 / two_m *
          ((acc[static_cast<std::size_t>(z)] - e_current) -
           s_u * (zone_factor[static_cast<std::size_t>(z)] - f_current + s_u) / two_m);
      if (gain > best_gain) {
        best_gain = gain;
        best_zone = z;
      }
    }
    // Leaving for a fresh singleton zone; existing zones win ties.
    const double lone_gain =
        2.0 / two_m * (-e_current - s_u * (s_u - f_current) / two_m);
    bool to_new_zone = false;
    if (lone_gain > best_gain) {
      best_gain = lone_gain;
      to_new_zone = true;
    }

    for (int z : touched) seen[static_cast<std::size_t>(z)] = 0;
    if (seen[static_cast<std::size_t>(zu)]) seen[static_cast<std::size_t>(zu)] = 0;

    if (!to_new_zone && best_zone == zu) continue;

    int target = best_zone;
    if (to_new_zone) {
      target = static_cast<int>(zone_factor.size());
      zone_factor.push_back(0.0);
      acc.push_back(0.0);
      seen.push_back(0);
    }
    zone_factor[static_cast<std::size_t>(zu)] -= s_u;
    zone_factor[static_cast<std::size_t>(target)] += s_u;
    p.set_zone(u, target);
    moved_any = true;
    for (const auto& [v, term] : g.edges[static_cast<std::size_t>(u)]) {
      (void)term;
      if (!queued[static_cast<std::size_t>(v)] && p.zone_of(v) != target) {
        queued[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  return moved_any;
}

double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Phase 2: split each phase-1 zone into well-connected sub-zones. Starts
// from singletons and only merges nodes that are still alone, so every
// refined zone grows by attaching a flow neighbor and stays connected.
Partition refine(const LevelGraph& g, const Partition& phase1,
                 std::mt19937_64& rng, double theta) {
  Partition refined = Partition::singletons(g.n);
  std::vector<double> zone_factor(g.factor);
  std::vector<int> zone_size(static_cast<std::size_t>(g.n), 1);

  std::vector<double> acc(static_cast<std::size_t>(g.n), 0.0);
  std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
  std::vector<int> touched;
  std::vector<std::pair<int, double>> candidates;  // (refined zone, gain)
  const double two_m = g.two_m;

  for (int u = 0; u < g.n; ++u) {
    const int ru = refined.zone_of(u);
    if (zone_size[static_cast<std::size_t>(ru)] != 1) continue;
    const int pu = phase1.zone_of(u);

    touched.clear();
    for (const auto& [v, term] : g.edges[static_cast<std::size_t>(u)]) {
      if (phase1.zone_of(v) != pu) continue;
      const int rv = refined.zone_of(v);
      if (!seen[static_cast<std::size_t>(rv)]) {
        seen[static_cast<std::size_t>(rv)] = 1;
        acc[static_cast<std::size_t>(rv)] = 0.0;
        touched.push_back(rv);
      }
      acc[static_cast<std::size_t>(rv)] += term;
    }
    std::sort(touched.begin(), touched.end());

    const double s_u = g.factor[static_cast<std::size_t>(u)];
    candidates.clear();
    for (int z : touched) {
      seen[static_cast<std::size_t>(z)] = 0;
      if (z == ru) continue;
      const double gain =
          2.0 / two_m *
          (acc[static_cast<std::size_t>(z)] -
           s_u * zone_factor[static_cast<std::size_t>(z)] / two_m);
      if (gain > kMoveEps) candidates.push_back({z, gain});
    }
    if (candidates.empty()) continue;

    int chosen = candidates.front().first;
    if (theta <= kThetaArgmax || candidates.size() == 1) {
      double best = candidates.front().second;
      for (const auto& [z, gain] : candidates) {
        if (gain > best) {
          best = gain;
          chosen = z;
        }
      }
    } else {
      double max_gain = candidates.front().second;
      for (const auto& [z, gain] : candidates) max_gain = std::max(max_gain, gain);
      double total = 0.0;
      for (auto& [z, gain] : candidates) {
        gain = std::exp((gain - max_gain) / theta);  // reuse slot as weight
        total += gain;
      }
      const double r = next_uniform(rng) * total;
      double cum = 0.0;
      chosen = candidates.back().first;
      for (const auto& [z, weight] : candidates) {
        cum += weight;
        if (r < cum) {
          chosen = z;
          break;
        }
      }
    }

    zone_factor[static_cast<std::size_t>(chosen)] += s_u;
    zone_factor[static_cast<std::size_t>(ru)] = 0.0;
    zone_size[static_cast<std::size_t>(chosen)] += 1;
    zone_size[static_cast<std::size_t>(ru)] = 0;
    refined.set_zone(u, chosen);
  }
  return refined;
}

// Phase 3: contract refined zones into super-nodes; the phase-1 partition
// seeds the next level.
void aggregate_level(const LevelGraph& g, const Partition& refined,
                     const Partition& phase1, LevelGraph& out,
                     Partition& init) {
  std::vector<int> remap(static_cast<std::size_t>(g.n), -1);
  std::vector<int> super_of(static_cast<std::size_t>(g.n), -1);
  int count = 0;
  for (int u = 0; u < g.n; ++u) {
    const int rz = refined.zone_of(u);
    if (remap[static_cast<std::size_t>(rz)] < 0) remap[static_cast<std::size_t>(rz)] = count++;
    super_of[static_cast<std::size_t>(u)] = remap[static_cast<std::size_t>(rz)];
  }

  out.n = count;
  out.two_m = g.two_m;
  out.edges.assign(static_cast<std::size_t>(count), {});
  out.self_term.assign(static_cast<std::size_t>(count), 0.0);
  out.factor.assign(static_cast<std::size_t>(count), 0.0);
  out.members.assign(static_cast<std::size_t>(count), {});
  std::vector<int> init_zone(static_cast<std::size_t>(count), 0);

  for (int u = 0; u < g.n; ++u) {
    const int p = super_of[static_cast<std::size_t>(u)];
    out.factor[static_cast<std::size_t>(p)] += g.factor[static_cast<std::size_t>(u)];
    out.self_term[static_cast<std::size_t>(p)] += g.self_term[static_cast<std::size_t>(u)];
    auto& m = out.members[static_cast<std::size_t>(p)];
    m.insert(m.end(), g.members[static_cast<std::size_t>(u)].begin(),
             g.members[static_cast<std::size_t>(u)].end());
    init_zone[static_cast<std::size_t>(p)] = phase1.zone_of(u);
  }
  for (auto& m : out.members) std::sort(m.begin(), m.end());

  std::map<std::pair<int, int>, double> cross;
  for (int u = 0; u < g.n; ++u) {
    const int p = super_of[static_cast<std::size_t>(u)];
    for (const auto& [v, term] : g.edges[static_cast<std::size_t>(u)]) {
      const int q = super_of[static_cast<std::size_t>(v)];
      if (p == q) {
        out.self_term[static_cast<std::size_t>(p)] += term;  // both directions => ordered pairs
      } else if (u < v) {
        cross[{std::min(p, q), std::max(p, q)}] += term;
      }
    }
  }
  for (const auto& [pair, term] : cross) {
    out.edges[static_cast<std::size_t>(pair.first)].push_back({pair.second, term});
    out.edges[static_cast<std::size_t>(pair.second)].push_back({pair.first, term});
  }
  for (auto& row : out.edges) {
    std::sort(row.begin(), row.end());
  }
  init = Partition::from_assignment(std::move(init_zone));
}

void flatten(const LevelGraph& g, const Partition& p, std::vector<int>& out) {
  for (int i = 0; i < g.n; ++i) {
    for (int m : g.members[static_cast<std::size_t>(i)]) {
      out[static_cast<std::size_t>(m)] = p.zone_of(i);
    }
  }
}

// Splits zones that are not connected in the flow graph; splitting a
// disconnected zone always increases every supported quality.
Partition split_disconnected_zones(const SpatialNetwork& net, const Partition& p) {
  const int n = net.node_count();
  std::vector<int> zone(static_cast<std::size_t>(n), -1);
  std::vector<int> stack;
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (zone[static_cast<std::size_t>(i)] >= 0) continue;
    const int original = p.zone_of(i);
    stack.assign(1, i);
    zone[static_cast<std::size_t>(i)] = next;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const SpatialNetwork::Edge& e : net.edges(u)) {
        if (e.weight > 0.0 && p.zone_of(e.to) == original &&
            zone[static_cast<std::size_t>(e.to)] < 0) {
          zone[static_cast<std::size_t>(e.to)] = next;
          stack.push_back(e.to);
        }
      }
    }
    ++next;
  }
  return Partition::from_assignment(std::move(zone));
}

}  // namespace

DetectionResult detect(const SpatialNetwork& net, const LeidenParams& params) {
  if (params.theta < 0.0) throw Error(ErrorKind::BadInput, "theta must be >= 0");
  if (params.max_outer_iters < 1) {
    throw Error(ErrorKind::BadInput, "max_outer_iters must be >= 1");
  }
  const QualityTerms terms = make_quality_terms(net, params.quality);
  const LevelGraph level0 = make_level0(net, terms);
  std::mt19937_64 rng(params.seed);

  DetectionResult result;
  result.seed_used = params.seed;
  std::vector<int> flat(static_cast<std::size_t>(net.node_count()), 0);
  for (int i = 0; i < net.node_count(); ++i) flat[static_cast<std::size_t>(i)] = i;
  double prev_q = 0.0;

  // One outer iteration = a full move/refine/aggregate cascade starting from
  // the current flattened partition; repeated until the gain drops below
  // min_gain or nothing moves at any level.
  for (int iter = 1; iter <= params.max_outer_iters; ++iter) {
    LevelGraph graph = level0;
    Partition part = Partition::from_assignment(flat);
    bool any_moved = false;
    double q = 0.0;
    while (true) {
      any_moved |= local_move(graph, part);
      q = level_quality(graph, part);
      Partition refined = refine(graph, part, rng, params.theta);
      refined.compact();  // drop labels emptied by the merges
      if (refined.zone_count() == graph.n) break;  // nothing left to contract
      LevelGraph next;
      Partition init;
      aggregate_level(graph, refined, part, next, init);
      graph = std::move(next);
      part = std::move(init);
    }
    result.quality_trace.push_back(q);
    flatten(graph, part, flat);
    result.iterations = iter;

    if (!any_moved) break;
    if (iter > 1 && q - prev_q <= params.min_gain) break;
    prev_q = q;
  }

  Partition final_partition = Partition::from_assignment(flat);
  const int zones_before = final_partition.zone_count();
  final_partition = split_disconnected_zones(net, final_partition);
  if (final_partition.zone_count() != zones_before) {
    result.quality_trace.push_back(
        quality(net, final_partition, params.quality));
  }
  final_partition.canonicalize();
  result.partition = std::move(final_partition);
  return result;
}

SpatialNetwork aggregate(const SpatialNetwork& net, const Partition& partition) {
  if (partition.size() != net.node_count()) {
    throw Error(ErrorKind::BadInput, "partition does not cover the network");
  }
  const int zone_count = partition.zone_count();
  const std::size_t z = static_cast<std::size_t>(zone_count);

  std::map<std::pair<TazId, TazId>, std::int64_t> flow_acc;
  for (const DirectedFlow& f : net.directed_flows()) {
    const int zo = partition.zone_of(net.index_of(f.origin));
    const int zd = partition.zone_of(net.index_of(f.dest));
    flow_acc[{zo, zd}] += f.trips;
  }
  std::vector<DirectedFlow> directed;
  directed.reserve(flow_acc.size());
  for (const auto& [pair, trips] : flow_acc) {
    directed.push_back({pair.first, pair.second, trips});
  }

  // Flow-weighted mean distances over contributing member pairs.
  std::vector<double> weighted_d(z * z, 0.0), weight_sum(z * z, 0.0);
  std::vector<double> self_wd(z, 0.0), self_w(z, 0.0);
  for (int i = 0; i < net.node_count(); ++i) {
    const int zi = partition.zone_of(i);
    if (net.self_weight(i) > 0.0) {
      self_wd[static_cast<std::size_t>(zi)] += net.self_weight(i) * net.self_distance_km(i);
      self_w[static_cast<std::size_t>(zi)] += net.self_weight(i);
    }
    for (const SpatialNetwork::Edge& e : net.edges(i)) {
      if (e.to <= i) continue;
      const int zj = partition.zone_of(e.to);
      if (zi == zj) {
        self_wd[static_cast<std::size_t>(zi)] += e.weight * e.distance_km;
        self_w[static_cast<std::size_t>(zi)] += e.weight;
      } else {
        const std::size_t cell = static_cast<std::size_t>(std::min(zi, zj)) * z +
                                 static_cast<std::size_t>(std::max(zi, zj));
        weighted_d[cell] += e.weight * e.distance_km;
        weight_sum[cell] += e.weight;
      }
    }
  }

  std::vector<NodeAttributes> attrs(z);
  std::vector<TazId> ids(z);
  for (int i = 0; i < net.node_count(); ++i) {
    NodeAttributes& a = attrs[static_cast<std::size_t>(partition.zone_of(i))];
    a.population += net.attributes(i).population;
    a.area_m2 += net.attributes(i).area_m2;
  }
  for (int p = 0; p < zone_count; ++p) ids[static_cast<std::size_t>(p)] = p;

  std::vector<double> pair_distances(z * z, 0.0);
  for (std::size_t a = 0; a < z; ++a) {
    for (std::size_t b = a + 1; b < z; ++b) {
      const std::size_t cell = a * z + b;
      const double d = weight_sum[cell] > 0.0 ? weighted_d[cell] / weight_sum[cell] : 0.0;
      pair_distances[cell] = d;
      pair_distances[b * z + a] = d;
    }
  }
  std::vector<double> self_distance(z, 0.0);
  for (std::size_t p = 0; p < z; ++p) {
    self_distance[p] = self_w[p] > 0.0
                           ? self_wd[p] / self_w[p]
                           : intrazonal_distance_km(std::max(attrs[p].area_m2, 1.0));
  }
  return assemble_network(std::move(ids), std::move(directed),
                          std::move(pair_distances), std::move(attrs),
                          std::move(self_distance), net.alpha());
}

}  // namespace pcz
