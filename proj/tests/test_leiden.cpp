#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pcz/leiden.hpp"
#include "pcz/synth.hpp"
#include "support/testutil.hpp"

using namespace pcz;
using testutil::make_network;
using testutil::partition_of;
using testutil::unit_distances;

namespace {

const QualityConfig kStandard{QualityKind::Standard, 1.0, MConvention::RawWeight};
const QualityConfig kGeoRaw{QualityKind::Geographic, 1.0, MConvention::RawWeight};

SpatialNetwork two_cliques_bridge() {
  std::vector<testutil::FlowSpec> flows;
  for (int base : {0, 5}) {
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) {
        flows.push_back({base + i, base + j, 1});
      }
    }
  }
  flows.push_back({4, 5, 1});  // unit bridge
  return make_network(10, flows, unit_distances(10));
}

LeidenParams standard_params(std::uint64_t seed = 42) {
  LeidenParams params;
  params.seed = seed;
  params.quality = kStandard;
  return params;
}

}  // namespace

TEST_CASE("two 5-cliques joined by a unit edge are recovered exactly") {
  const SpatialNetwork net = two_cliques_bridge();
  const DetectionResult result = detect(net, standard_params());
  CHECK(result.partition.zone_count() == 2);
  for (int i = 1; i < 5; ++i) {
    CHECK(result.partition.zone_of(i) == result.partition.zone_of(0));
    CHECK(result.partition.zone_of(5 + i) == result.partition.zone_of(5));
  }
  CHECK(result.partition.zone_of(0) != result.partition.zone_of(5));

  // Exhaustive search over all 115,975 partitions of 10 nodes confirms the
  // clique split maximizes the quality.
  const auto [best_q, best_code] =
      testutil::best_partition_exhaustive(net, kStandard);
  CHECK(modularity(net, result.partition) == doctest::Approx(best_q).epsilon(1e-12));
  CHECK(testutil::adjusted_rand_index(best_code, result.partition.assignment()) ==
        doctest::Approx(1.0));
}

TEST_CASE("single node with a self-loop forms one zone") {
  const SpatialNetwork net = make_network(1, {{0, 0, 3}}, {0.1});
  const DetectionResult result = detect(net, standard_params());
  CHECK(result.partition.zone_count() == 1);
  CHECK(result.iterations >= 1);
}

TEST_CASE("empty network raises EmptyNetwork") {
  const SpatialNetwork net = make_network(3, {}, unit_distances(3));
  CHECK_THROWS_AS(detect(net, standard_params()), Error);
}

TEST_CASE("fixed seed reproduces bit-identical partitions") {
  std::mt19937_64 rng(500);
  for (int round = 0; round < 5; ++round) {
    testutil::RandomNetworkOptions opt;
    opt.max_nodes = 60;
    opt.ensure_connected = true;
    const SpatialNetwork net = testutil::random_network(rng, opt);
    LeidenParams params = standard_params(1000 + round);
    params.theta = 0.05;  // keep the random branch exercised
    const DetectionResult a = detect(net, params);
    const DetectionResult b = detect(net, params);
    CHECK(a.partition.assignment() == b.partition.assignment());
    CHECK(a.quality_trace == b.quality_trace);
    CHECK(a.seed_used == params.seed);
  }
}

TEST_CASE("quality trace is non-decreasing within min_gain") {
  std::mt19937_64 rng(321);
  for (int round = 0; round < 10; ++round) {
    testutil::RandomNetworkOptions opt;
    opt.max_nodes = 80;
    opt.ensure_connected = true;
    const SpatialNetwork net = testutil::random_network(rng, opt);
    const QualityConfig cfg = (round % 2 == 0) ? kStandard : kGeoRaw;
    LeidenParams params = standard_params(round);
    params.quality = cfg;
    const DetectionResult result = detect(net, params);
    for (std::size_t t = 1; t < result.quality_trace.size(); ++t) {
      CHECK(result.quality_trace[t] >=
            result.quality_trace[t - 1] - params.min_gain);
    }
    // Final trace entry equals the returned partition's quality.
    CHECK(result.quality_trace.back() ==
          doctest::Approx(quality(net, result.partition, cfg)).epsilon(1e-9));
  }
}

TEST_CASE("every detected zone induces a connected flow subgraph") {
  std::mt19937_64 rng(888);
  for (int round = 0; round < 10; ++round) {
    testutil::RandomNetworkOptions opt;
    opt.max_nodes = 100;
    opt.edge_prob = 0.08;
    opt.ensure_connected = round % 2 == 0;  // also exercise disconnected inputs
    const SpatialNetwork net = testutil::random_network(rng, opt);
    LeidenParams params = standard_params(round * 7 + 1);
    params.quality = (round % 2 == 0) ? kGeoRaw : kStandard;
    const DetectionResult result = detect(net, params);
    CHECK(testutil::zones_flow_connected(net, result.partition));
  }
}

TEST_CASE("order-preserving relabeling yields the same zones") {
  std::mt19937_64 rng(246);
  testutil::RandomNetworkOptions opt;
  opt.max_nodes = 40;
  opt.ensure_connected = true;
  const SpatialNetwork net = testutil::random_network(rng, opt);
  const int n = net.node_count();

  // Rebuild with ids scaled by 10 and shifted; canonical order is preserved.
  std::vector<TazId> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = 10 * i + 3;
  std::vector<DirectedFlow> flows;
  for (const DirectedFlow& f : net.directed_flows()) {
    flows.push_back({10 * f.origin + 3, 10 * f.dest + 3, f.trips});
  }
  std::vector<double> dist(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  std::vector<double> self_d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    self_d[static_cast<std::size_t>(i)] = net.self_distance_km(i);
    for (const SpatialNetwork::Edge& e : net.edges(i)) {
      dist[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(e.to)] = e.distance_km;
    }
  }
  std::vector<NodeAttributes> attrs(static_cast<std::size_t>(n));
  const SpatialNetwork relabeled = assemble_network(
      std::move(ids), std::move(flows), std::move(dist), std::move(attrs),
      std::move(self_d), net.alpha());

  const LeidenParams params = standard_params(97);
  const DetectionResult a = detect(net, params);
  const DetectionResult b = detect(relabeled, params);
  CHECK(a.partition.assignment() == b.partition.assignment());
}

TEST_CASE("leiden is at least as good as the naive louvain baseline") {
  std::mt19937_64 rng(1357);
  for (int round = 0; round < 6; ++round) {
    testutil::RandomNetworkOptions opt;
    opt.max_nodes = 60;
    opt.ensure_connected = true;
    const SpatialNetwork net = testutil::random_network(rng, opt);
    const QualityConfig cfg = (round % 2 == 0) ? kStandard : kGeoRaw;
    LeidenParams params = standard_params(round);
    params.quality = cfg;
    const double leiden_q = quality(net, detect(net, params).partition, cfg);
    const double louvain_q =
        quality(net, testutil::louvain_baseline(net, cfg), cfg);
    CHECK(leiden_q >= louvain_q - 0.02);
  }
}

TEST_CASE("aggregate: singleton partition reproduces the network") {
  std::mt19937_64 rng(60);
  const SpatialNetwork net = testutil::random_network(rng);
  const SpatialNetwork agg =
      aggregate(net, Partition::singletons(net.node_count()));
  REQUIRE(agg.node_count() == net.node_count());
  CHECK(agg.two_m() == doctest::Approx(net.two_m()));
  for (int i = 0; i < net.node_count(); ++i) {
    CHECK(agg.strength(i) == doctest::Approx(net.strength(i)));
    CHECK(agg.self_weight(i) == doctest::Approx(net.self_weight(i)));
    REQUIRE(agg.edges(i).size() == net.edges(i).size());
    for (std::size_t e = 0; e < net.edges(i).size(); ++e) {
      CHECK(agg.edges(i)[e].weight == doctest::Approx(net.edges(i)[e].weight));
      CHECK(agg.edges(i)[e].distance_km ==
            doctest::Approx(net.edges(i)[e].distance_km));
    }
  }
}

TEST_CASE("aggregate: two-edge graph contracts to two self-loops") {
  const SpatialNetwork net = testutil::two_edge_network();
  const SpatialNetwork agg = aggregate(net, partition_of({0, 0, 1, 1}));
  REQUIRE(agg.node_count() == 2);
  CHECK(agg.self_weight(0) == doctest::Approx(2.0));
  CHECK(agg.self_weight(1) == doctest::Approx(2.0));
  CHECK(agg.edges(0).empty());
  CHECK(agg.edges(1).empty());
  CHECK(agg.two_m() == doctest::Approx(net.two_m()));
}

TEST_CASE("aggregate: planted blocks carry the generator's inter-block sum") {
  SyntheticCitySpec spec;
  spec.rows = 8;
  spec.cols = 8;
  spec.total_trips = 20000;
  spec.seed = 5;
  const SyntheticCity city = generate_city(spec);
  const DistanceMatrix dist = build_distance_matrix(city.tazs);
  const SpatialNetwork net = build_network(city.flows, dist, {}, &city.tazs);

  Partition truth = partition_of(city.block_of);
  const SpatialNetwork agg = aggregate(net, truth);
  REQUIRE(agg.node_count() == 4);

  double inter_weight = 0.0;
  for (int p = 0; p < agg.node_count(); ++p) {
    for (const SpatialNetwork::Edge& e : agg.edges(p)) {
      if (e.to > p) inter_weight += e.weight;
    }
  }
  CHECK(inter_weight == doctest::Approx(static_cast<double>(city.inter_block_trips)));

  // Population and area roll up.
  double pop = 0.0;
  for (int p = 0; p < agg.node_count(); ++p) pop += agg.attributes(p).population;
  double expected_pop = 0.0;
  for (const Taz& t : city.tazs) expected_pop += static_cast<double>(t.population);
  CHECK(pop == doctest::Approx(expected_pop));

  // Aggregated distances are flow-weighted means, so they sit inside the
  // member-pair distance range.
  for (int p = 0; p < agg.node_count(); ++p) {
    for (const SpatialNetwork::Edge& e : agg.edges(p)) {
      CHECK(e.distance_km > 0.0);
      CHECK(e.distance_km < 30.0);
    }
  }
}

TEST_CASE("planted quadrant city is recovered with geographic quality") {
  // 20x20 grid, 4 quadrant blocks, x10 intra-block boost. The deflated-m
  // convention keeps the all-in-one quality at zero, so the planted blocks
  // are a genuine optimum; a gentle decay keeps the block contrast dominant.
  SyntheticCitySpec spec;
  spec.beta = 0.5;
  spec.total_trips = 100000;
  spec.seed = 11;
  const SyntheticCity city = generate_city(spec);
  const DistanceMatrix dist = build_distance_matrix(city.tazs);
  const SpatialNetwork net = build_network(city.flows, dist, {}, &city.tazs);

  LeidenParams params;
  params.seed = 4;
  params.quality = {QualityKind::Geographic, 1.0, MConvention::DeflatedWeight};
  const DetectionResult result = detect(net, params);
  const double ari = testutil::adjusted_rand_index(result.partition.assignment(),
                                                   city.block_of);
  MESSAGE("zones=", result.partition.zone_count(), " ari=", ari);
  CHECK(ari >= 0.9);
  CHECK(result.partition.zone_count() == 4);
}
