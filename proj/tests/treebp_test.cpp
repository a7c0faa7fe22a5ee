#include <random>

#include "doctest.h"
#include "mbest/oracle.hpp"
#include "mbest/treebp.hpp"
#include "testutil.hpp"

using namespace mbest;
using testutil::make_labeling;

TEST_CASE("tree MAP on the 2-node chain") {
  const auto [labeling, value] = tree_map(testutil::two_node_chain());
  CHECK(labelings_equal(labeling, make_labeling({0, 0})));
  CHECK(value == 0.0);
}

TEST_CASE("tree MAP on a single node") {
  std::vector<Vector> unary(1, Vector(3));
  unary[0] << 3, 1, 2;
  MrfModel model({3}, {}, std::move(unary), {});
  const auto [labeling, value] = tree_map(model);
  CHECK(labelings_equal(labeling, make_labeling({1})));
  CHECK(value == 1.0);
}

TEST_CASE("value-only variant returns the same optimum") {
  std::vector<Vector> single(1, Vector(3));
  single[0] << 3, 1, 2;
  MrfModel one({3}, {}, std::move(single), {});
  CHECK(tree_map_value(one) == 1.0);
  CHECK(tree_map_value(testutil::two_node_chain()) == 0.0);
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    MrfModel model = testutil::random_tree_model(rng, 8, 4);
    CHECK(tree_map_value(model) == tree_map(model).value);
  }
}

TEST_CASE("tree MAP equals exhaustive enumeration on random trees") {
  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> size(1, 10);
  for (int trial = 0; trial < 200; ++trial) {
    MrfModel model = testutil::random_tree_model(rng, size(rng), 4);
    const auto [labeling, value] = tree_map(model);
    const auto truth = oracle::brute_force_mbest(model, 1);
    CHECK(value == truth[0].energy);
    CHECK(energy(model, labeling) == value);  // self-consistency
  }
}

TEST_CASE("tree MAP value lower-bounds every labeling") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    MrfModel model = testutil::random_tree_model(rng, 6, 3);
    const double value = tree_map_value(model);
    for (int k = 0; k < 20; ++k)
      CHECK(value <= energy(model, testutil::random_labeling(rng, model)));
  }
}

TEST_CASE("forests are solved per component") {
  // two disjoint 2-node chains
  std::vector<Vector> unary(4, Vector(2));
  unary[0] << 0, 1;
  unary[1] << 0, 1;
  unary[2] << 2, 0;
  unary[3] << 2, 0;
  Matrix t(2, 2);
  t << 0, 5, 5, 0;
  MrfModel model({2, 2, 2, 2}, {{0, 1}, {2, 3}}, std::move(unary), {t, t});
  const auto [labeling, value] = tree_map(model);
  CHECK(labelings_equal(labeling, make_labeling({0, 0, 1, 1})));
  CHECK(value == 0.0);
}

TEST_CASE("cyclic edge sets are rejected") {
  std::vector<Vector> unary(3, Vector::Zero(2));
  std::vector<Matrix> tables(3, Matrix::Zero(2, 2));
  MrfModel triangle({2, 2, 2}, {{0, 1}, {1, 2}, {0, 2}}, unary, tables);
  CHECK_THROWS_AS(tree_map(triangle), InvalidInput);
  CHECK_THROWS_AS(build_tree_order(triangle), InvalidInput);
}

TEST_CASE("tree order lists children before parents") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    MrfModel model = testutil::random_tree_model(rng, 8, 2);
    const TreeOrder order = build_tree_order(model);
    std::vector<int> position(model.num_nodes());
    for (std::size_t k = 0; k < order.visit_order.size(); ++k)
      position[order.visit_order[k]] = static_cast<int>(k);
    for (int u = 0; u < model.num_nodes(); ++u)
      if (order.parent[u] >= 0) CHECK(position[u] < position[order.parent[u]]);
    CHECK(order.visit_order.size() == static_cast<std::size_t>(model.num_nodes()));
  }
}

TEST_CASE("tree MAP is deterministic across runs") {
  std::mt19937_64 rng(67);
  MrfModel model = testutil::random_tree_model(rng, 9, 4);
  const auto first = tree_map(model);
  for (int k = 0; k < 3; ++k) {
    const auto again = tree_map(model);
    CHECK(labelings_equal(again.labeling, first.labeling));
    CHECK(again.value == first.value);
  }
}

TEST_CASE("ties decode to the smallest label indices") {
  // all-zero energies: every labeling is optimal, so BP must pick all zeros
  std::vector<Vector> unary(3, Vector::Zero(3));
  std::vector<Matrix> tables(2, Matrix::Zero(3, 3));
  MrfModel model({3, 3, 3}, {{0, 1}, {1, 2}}, unary, tables);
  const auto [labeling, value] = tree_map(model);
  CHECK(labelings_equal(labeling, make_labeling({0, 0, 0})));
  CHECK(value == 0.0);
}
