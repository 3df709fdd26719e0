#pragma once

#include <vector>

#include "pcz/network.hpp"

namespace pcz {

enum class QualityKind { Standard, Geographic };

// How the geographic variant reads "m":
//   RawWeight     - literal reading: 1/2m and the null term use the raw total
//                   weight, node factors are w_i = k_i / d_i.
//   DeflatedWeight- modularity of the deflated graph: 2m and node factors are
//                   deflated strengths, which restores Q(all-in-one) = 0.
enum class MConvention { RawWeight, DeflatedWeight };

struct QualityConfig {
  QualityKind kind = QualityKind::Geographic;
  double alpha = 1.0;
  MConvention m_convention = MConvention::RawWeight;
};

const char* to_string(QualityKind kind);
const char* to_string(MConvention convention);

// Dense zone assignment over node indices 0..n-1. Zone ids are kept compact
// (0..zone_count-1, every zone nonempty) by compact()/canonicalize().
class Partition {
 public:
  Partition() = default;
  static Partition singletons(int n);
  // Validates totality and compacts labels to 0..Z-1 preserving first-seen order.
  static Partition from_assignment(std::vector<int> zone_of);

  int size() const { return static_cast<int>(zone_of_.size()); }
  int zone_count() const { return zone_count_; }
  int zone_of(int node) const { return zone_of_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& assignment() const { return zone_of_; }

  void set_zone(int node, int zone);  // may grow zone_count; does not compact
  std::vector<std::vector<int>> members() const;  // per zone, ascending nodes

  // Removes empty labels; keeps relative order of surviving labels.
  void compact();
  // Relabels zones by ascending smallest member index (canonical form).
  void canonicalize();

  bool operator==(const Partition& other) const = default;

 private:
  std::vector<int> zone_of_;
  int zone_count_ = 0;
};

// Per-node scoring terms shared by every quality variant:
//   Q = (1/two_m) * sum_{i,j same zone} [edge_term_ij - s_i * s_j / two_m]
// summed over ordered pairs including the diagonal.
struct QualityTerms {
  std::vector<double> node_factor;  // s_i
  std::vector<double> self_term;    // edge term of the (i, i) diagonal
  // edge_term[i][e] aligned with net.edges(i)
  std::vector<std::vector<double>> edge_term;
  double two_m = 0.0;
};

QualityTerms make_quality_terms(const SpatialNetwork& net, const QualityConfig& cfg);

// Eq.-(1) style modularity on the raw weights.
double modularity(const SpatialNetwork& net, const Partition& partition);

// Gravity-deflated modularity; cfg.kind must be Geographic.
double geo_modularity(const SpatialNetwork& net, const Partition& partition,
                      const QualityConfig& cfg);

double quality(const SpatialNetwork& net, const Partition& partition,
               const QualityConfig& cfg);

// Incremental move/merge gains over a live partition, O(degree) per query.
class GainEvaluator {
 public:
  static constexpr int kNewZone = -1;  // "fresh singleton zone" target sentinel

  GainEvaluator(const SpatialNetwork& net, Partition partition, QualityConfig cfg);

  const Partition& partition() const { return partition_; }
  double current_quality() const;

  // Quality change of moving one node into target_zone (or a new singleton).
  double move_gain(int node, int target_zone) const;
  // Applies the move and updates the running sums; returns the realized gain.
  double apply_move(int node, int target_zone);

  // Quality change of merging all of zone_a into zone_b.
  double merge_gain(int zone_a, int zone_b) const;
  double apply_merge(int zone_a, int zone_b);

  double zone_factor_sum(int zone) const { return zone_factor_[static_cast<std::size_t>(zone)]; }
  int zone_size(int zone) const { return zone_size_[static_cast<std::size_t>(zone)]; }

 private:
  void check_node(int node) const;
  void check_zone(int zone) const;
  // Sum of edge terms from node to members of zone (node itself excluded).
  double edge_sum_to_zone(int node, int zone) const;

  const SpatialNetwork& net_;
  QualityTerms terms_;
  Partition partition_;
  std::vector<double> zone_factor_;  // S_z = sum of node factors
  std::vector<int> zone_size_;
  double internal_sum_ = 0.0;  // sum over ordered same-zone pairs of edge terms
  double factor_square_sum_ = 0.0;  // sum_z S_z^2
};

// Convenience wrapper matching the one-shot contract; builds an evaluator.
double move_gain(const SpatialNetwork& net, const Partition& partition,
                 TazId node, int target_zone, const QualityConfig& cfg);

}  // namespace pcz
