#include "pcz/quality.hpp"

#include <algorithm>
#include <cmath>

namespace pcz {

const char* to_string(QualityKind kind) {
  return kind == QualityKind::Standard ? "standard" : "geographic";
}

const char* to_string(MConvention convention) {
  return convention == MConvention::RawWeight ? "raw" : "deflated";
}

Partition Partition::singletons(int n) {
  Partition p;
  p.zone_of_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.zone_of_[static_cast<std::size_t>(i)] = i;
  p.zone_count_ = n;
  return p;
}

Partition Partition::from_assignment(std::vector<int> zone_of) {
  Partition p;
  p.zone_of_ = std::move(zone_of);
  for (int z : p.zone_of_) {
    if (z < 0) throw Error(ErrorKind::UnknownZone, "negative zone id");
    p.zone_count_ = std::max(p.zone_count_, z + 1);
  }
  p.compact();
  return p;
}

void Partition::set_zone(int node, int zone) {
  if (node < 0 || node >= size()) {
    throw Error(ErrorKind::UnknownNode, "node index out of range");
  }
  if (zone < 0 || zone > zone_count_) {
    throw Error(ErrorKind::UnknownZone, "zone id out of range");
  }
  if (zone == zone_count_) ++zone_count_;
  zone_of_[static_cast<std::size_t>(node)] = zone;
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(zone_count_));
  for (int i = 0; i < size(); ++i) {
    out[static_cast<std::size_t>(zone_of_[static_cast<std::size_t>(i)])].push_back(i);
  }
  return out;
}

void Partition::compact() {
  std::vector<int> remap(static_cast<std::size_t>(zone_count_), -1);
  int next = 0;
  for (int& z : zone_of_) {
    if (remap[static_cast<std::size_t>(z)] < 0) remap[static_cast<std::size_t>(z)] = next++;
    z = remap[static_cast<std::size_t>(z)];
  }
  zone_count_ = next;
}

void Partition::canonicalize() {
  compact();  // first-seen order over ascending node index == ascending smallest member
}

QualityTerms make_quality_terms(const SpatialNetwork& net, const QualityConfig& cfg) {
  if (cfg.alpha < 0.0) throw Error(ErrorKind::BadInput, "alpha must be >= 0");
  const int n = net.node_count();
  QualityTerms t;
  t.node_factor.resize(static_cast<std::size_t>(n));
  t.self_term.resize(static_cast<std::size_t>(n));
  t.edge_term.resize(static_cast<std::size_t>(n));

  const bool reuse_cached = cfg.kind == QualityKind::Geographic &&
                            cfg.alpha == net.alpha();
  auto deflated = [&](double weight, double d) {
    if (cfg.alpha == 0.0) return weight;
    if (d <= 0.0) {
      throw Error(ErrorKind::ZeroDistance, "zero distance under deflation");
    }
    return weight / std::pow(d, cfg.alpha);
  };

  if (cfg.kind == QualityKind::Standard) {
    t.two_m = net.two_m();
    for (int i = 0; i < n; ++i) {
      t.node_factor[static_cast<std::size_t>(i)] = net.strength(i);
      t.self_term[static_cast<std::size_t>(i)] = net.self_weight(i);
      auto& row = t.edge_term[static_cast<std::size_t>(i)];
      row.reserve(net.edges(i).size());
      for (const SpatialNetwork::Edge& e : net.edges(i)) row.push_back(e.weight);
    }
  } else {
    double two_m_deflated = 0.0;
    for (int i = 0; i < n; ++i) {
      auto& row = t.edge_term[static_cast<std::size_t>(i)];
      row.reserve(net.edges(i).size());
      double b_i = 0.0;
      for (const SpatialNetwork::Edge& e : net.edges(i)) {
        const double b = reuse_cached ? e.deflated : deflated(e.weight, e.distance_km);
        row.push_back(b);
        b_i += b;
      }
      const double self = net.self_weight(i) > 0.0
                              ? (reuse_cached ? net.self_deflated(i)
                                              : deflated(net.self_weight(i),
                                                         net.self_distance_km(i)))
                              : 0.0;
      t.self_term[static_cast<std::size_t>(i)] = self;
      b_i += self;
      two_m_deflated += b_i;
      t.node_factor[static_cast<std::size_t>(i)] =
          cfg.m_convention == MConvention::RawWeight
              ? net.distance_normalized_strength(i)
              : b_i;
    }
    t.two_m = cfg.m_convention == MConvention::RawWeight ? net.two_m()
                                                         : two_m_deflated;
  }
  if (t.two_m <= 0.0) {
    throw Error(ErrorKind::EmptyNetwork, "network has no edge weight (2m = 0)");
  }
  return t;
}

namespace {

void check_partition(const SpatialNetwork& net, const Partition& partition) {
  if (partition.size() != net.node_count()) {
    throw Error(ErrorKind::BadInput, "partition does not cover the network");
  }
}

double quality_from_terms(const SpatialNetwork& net, const QualityTerms& t,
                          const Partition& partition) {
  const int n = net.node_count();
  double internal = 0.0;
  std::vector<double> zone_factor(static_cast<std::size_t>(partition.zone_count()), 0.0);
  for (int i = 0; i < n; ++i) {
    const int zi = partition.zone_of(i);
    zone_factor[static_cast<std::size_t>(zi)] += t.node_factor[static_cast<std::size_t>(i)];
    internal += t.self_term[static_cast<std::size_t>(i)];
    const auto& edges = net.edges(i);
    const auto& terms = t.edge_term[static_cast<std::size_t>(i)];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (partition.zone_of(edges[e].to) == zi) internal += terms[e];
    }
  }
  double square_sum = 0.0;
  for (double s : zone_factor) square_sum += s * s;
  return internal / t.two_m - square_sum / (t.two_m * t.two_m);
}

}  // namespace

double modularity(const SpatialNetwork& net, const Partition& partition) {
  check_partition(net, partition);
  QualityConfig cfg;
  cfg.kind = QualityKind::Standard;
  return quality_from_terms(net, make_quality_terms(net, cfg), partition);
}

double geo_modularity(const SpatialNetwork& net, const Partition& partition,
                      const QualityConfig& cfg) {
  if (cfg.kind != QualityKind::Geographic) {
    throw Error(ErrorKind::BadInput, "geo_modularity requires Geographic kind");
  }
  check_partition(net, partition);
  return quality_from_terms(net, make_quality_terms(net, cfg), partition);
}

double quality(const SpatialNetwork& net, const Partition& partition,
               const QualityConfig& cfg) {
  check_partition(net, partition);
  return quality_from_terms(net, make_quality_terms(net, cfg), partition);
}

GainEvaluator::GainEvaluator(const SpatialNetwork& net, Partition partition,
                             QualityConfig cfg)
    : net_(net), terms_(make_quality_terms(net, cfg)), partition_(std::move(partition)) {
  check_partition(net_, partition_);
  zone_factor_.assign(static_cast<std::size_t>(partition_.zone_count()), 0.0);
  zone_size_.assign(static_cast<std::size_t>(partition_.zone_count()), 0);
  const int n = net_.node_count();
  for (int i = 0; i < n; ++i) {
    const int zi = partition_.zone_of(i);
    zone_factor_[static_cast<std::size_t>(zi)] += terms_.node_factor[static_cast<std::size_t>(i)];
    ++zone_size_[static_cast<std::size_t>(zi)];
    internal_sum_ += terms_.self_term[static_cast<std::size_t>(i)];
    const auto& edges = net_.edges(i);
    const auto& row = terms_.edge_term[static_cast<std::size_t>(i)];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (partition_.zone_of(edges[e].to) == zi) internal_sum_ += row[e];
    }
  }
  for (double s : zone_factor_) factor_square_sum_ += s * s;
}

double GainEvaluator::current_quality() const {
  return internal_sum_ / terms_.two_m -
         factor_square_sum_ / (terms_.two_m * terms_.two_m);
}

void GainEvaluator::check_node(int node) const {
  if (node < 0 || node >= partition_.size()) {
    throw Error(ErrorKind::UnknownNode, "node index out of range");
  }
}

void GainEvaluator::check_zone(int zone) const {
  if (zone == kNewZone) return;
  if (zone < 0 || zone >= static_cast<int>(zone_factor_.size())) {
    throw Error(ErrorKind::UnknownZone, "zone id out of range");
  }
}

double GainEvaluator::edge_sum_to_zone(int node, int zone) const {
  double acc = 0.0;
  const auto& edges = net_.edges(node);
  const auto& row = terms_.edge_term[static_cast<std::size_t>(node)];
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (partition_.zone_of(edges[e].to) == zone) acc += row[e];
  }
  return acc;
}

double GainEvaluator::move_gain(int node, int target_zone) const {
  check_node(node);
  check_zone(target_zone);
  const int current = partition_.zone_of(node);
  if (target_zone == current) return 0.0;
  const double s_v = terms_.node_factor[static_cast<std::size_t>(node)];
  const double e_current = edge_sum_to_zone(node, current);
  const double e_target = target_zone == kNewZone ? 0.0 : edge_sum_to_zone(node, target_zone);
  const double s_current = zone_factor_[static_cast<std::size_t>(current)];
  const double s_target = target_zone == kNewZone ? 0.0
                              : zone_factor_[static_cast<std::size_t>(target_zone)];
  const double two_m = terms_.two_m;
  // Diagonal edge terms travel with the node and cancel.
  return 2.0 / two_m *
         ((e_target - e_current) - s_v * (s_target - s_current + s_v) / two_m);
}

double GainEvaluator::apply_move(int node, int target_zone) {
  const double gain = move_gain(node, target_zone);
  const int current = partition_.zone_of(node);
  if (target_zone == current) return 0.0;
  int target = target_zone;
  if (target == kNewZone) {
    target = static_cast<int>(zone_factor_.size());
    zone_factor_.push_back(0.0);
    zone_size_.push_back(0);
  }
  const double s_v = terms_.node_factor[static_cast<std::size_t>(node)];
  const double e_current = edge_sum_to_zone(node, current);
  const double e_target = edge_sum_to_zone(node, target);
  const double s_current = zone_factor_[static_cast<std::size_t>(current)];
  const double s_target = zone_factor_[static_cast<std::size_t>(target)];

  internal_sum_ += 2.0 * (e_target - e_current);
  factor_square_sum_ += 2.0 * s_v * (s_target - s_current + s_v);
  zone_factor_[static_cast<std::size_t>(current)] -= s_v;
  zone_factor_[static_cast<std::size_t>(target)] += s_v;
  --zone_size_[static_cast<std::size_t>(current)];
  ++zone_size_[static_cast<std::size_t>(target)];
  partition_.set_zone(node, target);
  return gain;
}

double GainEvaluator::merge_gain(int zone_a, int zone_b) const {
  check_zone(zone_a);
  check_zone(zone_b);
  if (zone_a == kNewZone || zone_b == kNewZone) {
    throw Error(ErrorKind::UnknownZone, "cannot merge the sentinel zone");
  }
  if (zone_a == zone_b) return 0.0;
  // Cross edge-term sum between the two zones (each undirected edge once).
  double cross = 0.0;
  const int n = net_.node_count();
  for (int i = 0; i < n; ++i) {
    if (partition_.zone_of(i) != zone_a) continue;
    const auto& edges = net_.edges(i);
    const auto& row = terms_.edge_term[static_cast<std::size_t>(i)];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (partition_.zone_of(edges[e].to) == zone_b) cross += row[e];
    }
  }
  const double sa = zone_factor_[static_cast<std::size_t>(zone_a)];
  const double sb = zone_factor_[static_cast<std::size_t>(zone_b)];
  const double two_m = terms_.two_m;
  return 2.0 / two_m * (cross - sa * sb / two_m);
}

double GainEvaluator::apply_merge(int zone_a, int zone_b) {
  const double gain = merge_gain(zone_a, zone_b);
  if (zone_a == zone_b) return 0.0;
  double cross = 0.0;
  const int n = net_.node_count();
  for (int i = 0; i < n; ++i) {
    if (partition_.zone_of(i) != zone_a) continue;
    const auto& edges = net_.edges(i);
    const auto& row = terms_.edge_term[static_cast<std::size_t>(i)];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (partition_.zone_of(edges[e].to) == zone_b) cross += row[e];
    }
  }
  const double sa = zone_factor_[static_cast<std::size_t>(zone_a)];
  const double sb = zone_factor_[static_cast<std::size_t>(zone_b)];
  internal_sum_ += 2.0 * cross;
  factor_square_sum_ += 2.0 * sa * sb;
  zone_factor_[static_cast<std::size_t>(zone_b)] += sa;
  zone_factor_[static_cast<std::size_t>(zone_a)] = 0.0;
  zone_size_[static_cast<std::size_t>(zone_b)] += zone_size_[static_cast<std::size_t>(zone_a)];
  zone_size_[static_cast<std::size_t>(zone_a)] = 0;
  for (int i = 0; i < n; ++i) {
    if (partition_.zone_of(i) == zone_a) partition_.set_zone(i, zone_b);
  }
  return gain;
}

double move_gain(const SpatialNetwork& net, const Partition& partition,
                 TazId node, int target_zone, const QualityConfig& cfg) {
  GainEvaluator eval(net, partition, cfg);
  return eval.move_gain(net.index_of(node), target_zone);
}

}  // namespace pcz
