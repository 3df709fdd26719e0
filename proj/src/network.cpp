#include "pcz/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace pcz {

int SpatialNetwork::index_of(TazId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) {
    throw Error(ErrorKind::UnknownNode,
                "TAZ id not in network: " + std::to_string(id));
  }
  return static_cast<int>(it - ids_.begin());
}

namespace {

double deflate(double weight, double distance_km, double alpha) {
  if (alpha == 0.0) return weight;  // d^0 = 1, deflation disabled
  if (distance_km <= 0.0) {
    throw Error(ErrorKind::ZeroDistance,
                "non-positive distance on a weighted edge");
  }
  return weight / std::pow(distance_km, alpha);
}

}  // namespace

void SpatialNetwork::finalize(double alpha) {
  const std::size_t n = ids_.size();
  alpha_ = alpha;
  strength_.assign(n, 0.0);
  deflated_strength_.assign(n, 0.0);
  distance_sum_.assign(n, 0.0);
  w_.assign(n, 0.0);
  self_deflated_.assign(n, 0.0);
  two_m_ = 0.0;
  two_m_deflated_ = 0.0;
  edge_count_ = 0;

  for (std::size_t i = 0; i < n; ++i) {
    std::sort(edges_[i].begin(), edges_[i].end(),
              [](const Edge& a, const Edge& b) { return a.to < b.to; });
    double k = self_weight_[i];
    double dsum = self_weight_[i] > 0.0 ? self_distance_[i] : 0.0;
    for (Edge& e : edges_[i]) {
      e.deflated = deflate(e.weight, e.distance_km, alpha);
      k += e.weight;
      dsum += e.distance_km;
    }
    if (self_weight_[i] > 0.0) {
      self_deflated_[i] = deflate(self_weight_[i], self_distance_[i], alpha);
    }
    strength_[i] = k;
    distance_sum_[i] = dsum;
    double b = self_deflated_[i];
    for (const Edge& e : edges_[i]) b += e.deflated;
    deflated_strength_[i] = b;
    w_[i] = dsum > 0.0 ? k / dsum : 0.0;
    two_m_ += k;
    two_m_deflated_ += b;
    edge_count_ += edges_[i].size();
  }
  edge_count_ /= 2;
}

SpatialNetwork build_network(const FlowMatrix& flows, const DistanceMatrix& dist,
                             const NetworkConfig& config, const std::vector<Taz>* tazs) {
  if (config.alpha < 0.0) {
    throw Error(ErrorKind::BadInput, "alpha must be >= 0");
  }
  SpatialNetwork net;
  net.ids_ = dist.ids();
  const std::size_t n = net.ids_.size();
  net.edges_.assign(n, {});
  net.self_weight_.assign(n, 0.0);
  net.self_distance_.assign(n, 0.0);
  net.attrs_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    net.self_distance_[i] = dist.km_at(static_cast<int>(i), static_cast<int>(i));
  }
  if (tazs != nullptr) {
    for (const Taz& t : *tazs) {
      const int i = net.index_of(t.id);
      net.attrs_[static_cast<std::size_t>(i)] = {
          static_cast<double>(t.population), t.area_m2};
    }
  }

  // Symmetrize directed flows into the upper triangle, then mirror.
  std::map<std::pair<int, int>, double> acc;
  for (const auto& [pair, trips] : flows.flows) {
    if (trips <= 0) continue;
    const int i = dist.index_of(pair.first);   // MissingDistance if absent
    const int j = dist.index_of(pair.second);
    if (i == j) {
      if (config.drop_self_loops) continue;
      net.self_weight_[static_cast<std::size_t>(i)] += 2.0 * static_cast<double>(trips);
      net.directed_flows_.push_back({pair.first, pair.second, trips});
      net.total_trips_ += trips;
      continue;
    }
    acc[{std::min(i, j), std::max(i, j)}] += static_cast<double>(trips);
    net.directed_flows_.push_back({pair.first, pair.second, trips});
    net.total_trips_ += trips;
  }
  for (const auto& [pair, weight] : acc) {
    const double d = dist.km_at(pair.first, pair.second);
    net.edges_[static_cast<std::size_t>(pair.first)].push_back(
        {pair.second, weight, 0.0, d});
    net.edges_[static_cast<std::size_t>(pair.second)].push_back(
        {pair.first, weight, 0.0, d});
  }
  std::sort(net.directed_flows_.begin(), net.directed_flows_.end(),
            [](const DirectedFlow& a, const DirectedFlow& b) {
              return std::tie(a.origin, a.dest) < std::tie(b.origin, b.dest);
            });
  net.finalize(config.alpha);
  return net;
}

SpatialNetwork assemble_network(std::vector<TazId> ids,
                                std::vector<DirectedFlow> directed,
                                std::vector<double> pair_distances,
                                std::vector<NodeAttributes> attrs,
                                std::vector<double> self_distance,
                                double alpha) {
  const std::size_t n = ids.size();
  if (!std::is_sorted(ids.begin(), ids.end())) {
    throw Error(ErrorKind::BadInput, "network ids must be sorted");
  }
  if (pair_distances.size() != n * n || attrs.size() != n ||
      self_distance.size() != n) {
    throw Error(ErrorKind::BadInput, "assemble_network size mismatch");
  }
  SpatialNetwork net;
  net.ids_ = std::move(ids);
  net.edges_.assign(n, {});
  net.self_weight_.assign(n, 0.0);
  net.self_distance_ = std::move(self_distance);
  net.attrs_ = std::move(attrs);

  auto index_of = [&net](TazId id) { return net.index_of(id); };
  std::map<std::pair<int, int>, double> acc;
  for (const DirectedFlow& f : directed) {
    if (f.trips <= 0) continue;
    const int i = index_of(f.origin);
    const int j = index_of(f.dest);
    if (i == j) {
      net.self_weight_[static_cast<std::size_t>(i)] += 2.0 * static_cast<double>(f.trips);
    } else {
      acc[{std::min(i, j), std::max(i, j)}] += static_cast<double>(f.trips);
    }
    net.total_trips_ += f.trips;
  }
  for (const auto& [pair, weight] : acc) {
    const double d = pair_distances[static_cast<std::size_t>(pair.first) * n +
                                    static_cast<std::size_t>(pair.second)];
    net.edges_[static_cast<std::size_t>(pair.first)].push_back({pair.second, weight, 0.0, d});
    net.edges_[static_cast<std::size_t>(pair.second)].push_back({pair.first, weight, 0.0, d});
  }
  net.directed_flows_ = std::move(directed);
  std::sort(net.directed_flows_.begin(), net.directed_flows_.end(),
            [](const DirectedFlow& a, const DirectedFlow& b) {
              return std::tie(a.origin, a.dest) < std::tie(b.origin, b.dest);
            });
  net.finalize(alpha);
  return net;
}

NetworkSummary network_summary(const SpatialNetwork& net) {
  NetworkSummary s;
  s.nodes = net.node_count();
  s.edges = net.edge_count();
  s.two_m = net.two_m();
  s.total_trips = net.total_trips();
  for (int i = 0; i < net.node_count(); ++i) {
    if (net.isolated(i)) ++s.isolated;
    if (net.self_weight(i) > 0.0) ++s.self_loops;
  }
  return s;
}

}  // namespace pcz
