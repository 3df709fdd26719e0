#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pcz/geo.hpp"
#include "pcz/ingest.hpp"

namespace pcz {

struct NetworkConfig {
  double alpha = 1.0;          // distance-decay exponent for deflated weights
  bool drop_self_loops = false;  // drop within-TAZ flows entirely
};

struct DirectedFlow {
  TazId origin = 0;
  TazId dest = 0;
  std::int64_t trips = 0;
};

struct NodeAttributes {
  double population = 0.0;
  double area_m2 = 0.0;
};

// Undirected weighted spatial interaction graph over TAZs. Directed flows
// are symmetrized by summation: A[i][j] = f(i->j) + f(j->i) for i != j and
// A[i][i] = 2*f(i->i), so every trip contributes 2 to sum_i k_i.
class SpatialNetwork {
 public:
  struct Edge {
    int to = 0;
    double weight = 0.0;      // A_ij
    double deflated = 0.0;    // A_ij / d_ij^alpha
    double distance_km = 0.0;
  };

  int node_count() const { return static_cast<int>(ids_.size()); }
  const std::vector<TazId>& ids() const { return ids_; }
  int index_of(TazId id) const;  // throws UnknownNode
  TazId id_of(int index) const { return ids_[static_cast<std::size_t>(index)]; }

  const std::vector<Edge>& edges(int index) const {
    return edges_[static_cast<std::size_t>(index)];
  }
  double self_weight(int index) const { return self_weight_[static_cast<std::size_t>(index)]; }
  double self_deflated(int index) const { return self_deflated_[static_cast<std::size_t>(index)]; }
  double self_distance_km(int index) const { return self_distance_[static_cast<std::size_t>(index)]; }

  double strength(int index) const { return strength_[static_cast<std::size_t>(index)]; }
  double deflated_strength(int index) const { return deflated_strength_[static_cast<std::size_t>(index)]; }
  // Sum of distances over incident edges with positive weight (self-loop
  // included when present); 0 for isolated nodes.
  double distance_sum(int index) const { return distance_sum_[static_cast<std::size_t>(index)]; }
  // Eq-style per-node factor k_i / d_i; 0 for isolated nodes.
  double distance_normalized_strength(int index) const {
    return w_[static_cast<std::size_t>(index)];
  }
  bool isolated(int index) const { return strength_[static_cast<std::size_t>(index)] <= 0.0; }

  double two_m() const { return two_m_; }
  double two_m_deflated() const { return two_m_deflated_; }
  double alpha() const { return alpha_; }
  std::size_t edge_count() const { return edge_count_; }

  const NodeAttributes& attributes(int index) const {
    return attrs_[static_cast<std::size_t>(index)];
  }
  const std::vector<DirectedFlow>& directed_flows() const { return directed_flows_; }
  std::int64_t total_trips() const { return total_trips_; }

  friend SpatialNetwork build_network(const FlowMatrix&, const DistanceMatrix&,
                                      const NetworkConfig&, const std::vector<Taz>*);
  friend SpatialNetwork assemble_network(std::vector<TazId>,
                                         std::vector<DirectedFlow>,
                                         std::vector<double>,
                                         std::vector<NodeAttributes>,
                                         std::vector<double>, double);

 private:
  void finalize(double alpha);

  std::vector<TazId> ids_;  // sorted ascending
  std::vector<std::vector<Edge>> edges_;  // sorted by target index, no self
  std::vector<double> self_weight_;
  std::vector<double> self_deflated_;
  std::vector<double> self_distance_;
  std::vector<double> strength_;
  std::vector<double> deflated_strength_;
  std::vector<double> distance_sum_;
  std::vector<double> w_;
  std::vector<NodeAttributes> attrs_;
  std::vector<DirectedFlow> directed_flows_;  // sorted (origin, dest)
  std::int64_t total_trips_ = 0;
  double two_m_ = 0.0;
  double two_m_deflated_ = 0.0;
  double alpha_ = 1.0;
  std::size_t edge_count_ = 0;
};

// Node universe = the distance matrix's TAZ set; flows referencing unknown
// ids raise MissingDistance. Attributes are taken from tazs when given.
SpatialNetwork build_network(const FlowMatrix& flows, const DistanceMatrix& dist,
                             const NetworkConfig& config = {},
                             const std::vector<Taz>* tazs = nullptr);

// Aggregation/test helper: build a network directly from symmetric parts.
// pair_distances is row-major n*n (only entries on flow support are used).
SpatialNetwork assemble_network(std::vector<TazId> ids,
                                std::vector<DirectedFlow> directed,
                                std::vector<double> pair_distances,
                                std::vector<NodeAttributes> attrs,
                                std::vector<double> self_distance,
                                double alpha);

struct NetworkSummary {
  int nodes = 0;
  std::size_t edges = 0;  // undirected, self-loops excluded
  int self_loops = 0;
  double two_m = 0.0;
  std::int64_t total_trips = 0;
  int isolated = 0;
};

NetworkSummary network_summary(const SpatialNetwork& net);

}  // namespace pcz
