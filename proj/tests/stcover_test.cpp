#include <random>

#include "doctest.h"
#include "mbest/oracle.hpp"
#include "mbest/stcover.hpp"
#include "testutil.hpp"

using namespace mbest;
using testutil::make_labeling;

namespace {

MrfModel zero_chain3() {
  std::vector<Vector> unary(3, Vector::Zero(2));
  std::vector<Matrix> tables(2, Matrix::Zero(2, 2));
  return MrfModel({2, 2, 2}, {{0, 1}, {1, 2}}, unary, tables);
}

MrfModel zero_model(const std::vector<int>& cards,
                    const std::vector<Edge>& edges) {
  std::vector<Vector> unary;
  for (int c : cards) unary.push_back(Vector::Zero(c));
  std::vector<Matrix> tables;
  for (const auto& [i, j] : edges)
    tables.push_back(Matrix::Zero(cards[i], cards[j]));
  return MrfModel(cards, edges, unary, tables);
}

double tree_weight(const SpanningTree& tree, const MrfModel& model,
                   const Vector& weights) {
  double total = 0.0;
  for (const auto& [i, j] : tree.edges) total += weights[model.edge_index(i, j)];
  return total;
}

}  // namespace

TEST_CASE("inequality value is 1 when both labelings coincide") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    MrfModel model = testutil::random_tree_model(rng, 7, 3);
    SpanningTree tree = make_spanning_tree(model.num_nodes(), model.edges());
    Labeling x = testutil::random_labeling(rng, model);
    CHECK(tree_inequality_value(model, x, x, tree) == 1.0);
  }
}

TEST_CASE("inequality value on the 3-node chain") {
  MrfModel chain = zero_chain3();
  SpanningTree tree = make_spanning_tree(3, chain.edges());
  const Labeling x_m = make_labeling({0, 0, 0});
  // differs at the two endpoints: node terms (1-2) at the middle, no edges
  CHECK(tree_inequality_value(chain, make_labeling({1, 0, 1}), x_m, tree) ==
        -1.0);
  // differs only at the middle node: everything cancels
  CHECK(tree_inequality_value(chain, make_labeling({0, 1, 0}), x_m, tree) ==
        0.0);
  // exhaustive: every x != x_m gives value <= 0
  for (const Labeling& x : testutil::all_labelings(chain)) {
    if (labelings_equal(x, x_m)) continue;
    CHECK(tree_inequality_value(chain, x, x_m, tree) <= 0.0);
  }
}

TEST_CASE("inequality separates on all trees of small connected graphs") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 15; ++trial) {
    MrfModel model = testutil::random_connected_model(rng, 5, 3, 0.4);
    const auto trees =
        oracle::enumerate_spanning_trees(model.num_nodes(), model.edges());
    const Labeling x_m = testutil::random_labeling(rng, model);
    for (const auto& tree : trees) {
      CHECK(tree_inequality_value(model, x_m, x_m, tree) == 1.0);
      for (const Labeling& x : testutil::all_labelings(model)) {
        if (labelings_equal(x, x_m)) continue;
        CHECK(tree_inequality_value(model, x, x_m, tree) <= 0.0);
      }
    }
  }
}

TEST_CASE("inequality value rejects trees outside the model") {
  MrfModel chain = zero_chain3();
  SpanningTree foreign = make_spanning_tree(3, {{0, 1}, {0, 2}});
  CHECK_THROWS_AS(tree_inequality_value(chain, make_labeling({0, 0, 0}),
                                        make_labeling({0, 0, 0}), foreign),
                  InvalidInput);
}

TEST_CASE("separation weights on integer labelings") {
  MrfModel chain = zero_chain3();
  const Labeling x_m = make_labeling({0, 0, 0});
  // agree at both endpoints of an edge: 1 - 1 - 1
  CHECK(separation_weights(chain, make_labeling({0, 0, 1}), x_m)[0] == -1.0);
  // disagree at both: 0 - 0 - 0
  CHECK(separation_weights(chain, make_labeling({1, 1, 0}), x_m)[0] == 0.0);
  // agree at one endpoint only: 0 - 1 - 0
  CHECK(separation_weights(chain, make_labeling({0, 1, 1}), x_m)[0] == -1.0);
}

TEST_CASE("integer and indicator separation weights agree") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    MrfModel model = testutil::random_connected_model(rng, 6, 3, 0.4);
    Labeling x = testutil::random_labeling(rng, model);
    Labeling x_m = testutil::random_labeling(rng, model);
    const Vector a = separation_weights(model, x, x_m);
    const Vector b =
        separation_weights(model, FractionalPrimal::indicator(model, x), x_m);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("inequality decomposes into node matches plus edge weights") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    MrfModel model = testutil::random_connected_model(rng, 6, 3, 0.4);
    const auto trees =
        oracle::enumerate_spanning_trees(model.num_nodes(), model.edges());
    Labeling x = testutil::random_labeling(rng, model);
    Labeling x_m = testutil::random_labeling(rng, model);
    const Vector w = separation_weights(model, x, x_m);
    double matches = 0.0;
    for (int i = 0; i < model.num_nodes(); ++i)
      if (x[i] == x_m[i]) matches += 1.0;
    for (const auto& tree : trees)
      CHECK(tree_inequality_value(model, x, x_m, tree) ==
            doctest::Approx(matches + tree_weight(tree, model, w))
                .epsilon(1e-12));
  }
}

TEST_CASE("max-weight spanning tree on the triangle") {
  MrfModel triangle = zero_model({2, 2, 2}, {{0, 1}, {1, 2}, {0, 2}});
  Vector w(3);
  w << 3, 2, 1;  // aligned with the edge list
  SpanningTree tree = max_weight_spanning_tree(3, triangle.edges(), w);
  CHECK(tree.edges == std::vector<Edge>{{0, 1}, {1, 2}});
  CHECK(tree_weight(tree, triangle, w) == 5.0);
}

TEST_CASE("a tree graph is its own maximum spanning tree") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 10; ++trial) {
    MrfModel model = testutil::random_tree_model(rng, 8, 2);
    Vector w(model.num_edges());
    std::normal_distribution<double> gauss;
    for (int e = 0; e < w.size(); ++e) w[e] = gauss(rng);
    SpanningTree tree =
        max_weight_spanning_tree(model.num_nodes(), model.edges(), w);
    SpanningTree whole = make_spanning_tree(model.num_nodes(), model.edges());
    CHECK(tree == whole);
  }
}

TEST_CASE("max-weight spanning tree matches enumeration") {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> size(2, 6);
    MrfModel model = testutil::random_connected_model(rng, size(rng), 2, 0.5);
    Vector w(model.num_edges());
    std::normal_distribution<double> gauss;
    for (int e = 0; e < w.size(); ++e) w[e] = gauss(rng);
    SpanningTree best =
        max_weight_spanning_tree(model.num_nodes(), model.edges(), w);
    const double best_weight = tree_weight(best, model, w);
    for (const auto& tree :
         oracle::enumerate_spanning_trees(model.num_nodes(), model.edges()))
      CHECK(best_weight >= tree_weight(tree, model, w));
  }
}

TEST_CASE("max-weight spanning tree rejects disconnected graphs") {
  MrfModel model = zero_model({2, 2, 2}, {{0, 1}});
  Vector w(1);
  w << 1.0;
  CHECK_THROWS_AS(max_weight_spanning_tree(3, model.edges(), w),
                  InvalidInput);
}

TEST_CASE("zero weights pick the canonical tie-break tree") {
  MrfModel k4 = zero_model(
      {2, 2, 2, 2}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  SpanningTree tree =
      max_weight_spanning_tree(4, k4.edges(), Vector::Zero(6));
  // greedy over lexicographic order: (0,1), (0,2), (0,3)
  CHECK(tree.edges == std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}});
}

TEST_CASE("tree cover on a 3x3 grid is the two-tree decomposition") {
  MrfModel grid = zero_model(
      std::vector<int>(9, 2),
      {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {6, 7}, {7, 8},         // horizontal
       {0, 3}, {3, 6}, {1, 4}, {4, 7}, {2, 5}, {5, 8}});       // vertical
  TreeCover cover = build_tree_cover(grid);
  REQUIRE(cover.trees.size() == 2);
  for (int e = 0; e < grid.num_edges(); ++e) {
    CHECK(cover.edge_multiplicity[e] >= 1);
    CHECK(cover.edge_multiplicity[e] <= 2);
  }
  // first tree holds every horizontal edge, second every vertical edge
  for (const Edge& e : std::vector<Edge>{{0, 1}, {1, 2}, {3, 4}, {4, 5},
                                         {6, 7}, {7, 8}})
    CHECK(std::count(cover.trees[0].edges.begin(), cover.trees[0].edges.end(),
                     e) == 1);
  for (const Edge& e : std::vector<Edge>{{0, 3}, {3, 6}, {1, 4}, {4, 7},
                                         {2, 5}, {5, 8}})
    CHECK(std::count(cover.trees[1].edges.begin(), cover.trees[1].edges.end(),
                     e) == 1);
}

TEST_CASE("tree cover of a path graph is the graph itself") {
  MrfModel path = zero_model({2, 2, 2, 2}, {{0, 1}, {1, 2}, {2, 3}});
  TreeCover cover = build_tree_cover(path);
  REQUIRE(cover.trees.size() == 1);
  CHECK(cover.trees[0].edges == path.edges());
}

TEST_CASE("tree cover of K4 covers every edge with at most 3 trees") {
  MrfModel k4 = zero_model(
      {2, 2, 2, 2}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  TreeCover cover = build_tree_cover(k4);
  CHECK(cover.trees.size() <= 3);
  for (int e = 0; e < k4.num_edges(); ++e)
    CHECK(cover.edge_multiplicity[e] >= 1);
}

TEST_CASE("tree cover rejects disconnected graphs") {
  MrfModel model = zero_model({2, 2, 2}, {{0, 1}});
  CHECK_THROWS_AS(build_tree_cover(model), InvalidInput);
}

TEST_CASE("single-node cover is the degenerate tree") {
  MrfModel model = zero_model({3}, {});
  TreeCover cover = build_tree_cover(model);
  REQUIRE(cover.trees.size() == 1);
  CHECK(cover.trees[0].edges.empty());
  CHECK(cover.trees[0].degrees == std::vector<int>{0});
}

TEST_CASE("split energies halve a doubly-covered edge") {
  MrfModel grid = zero_model(std::vector<int>(4, 2),
                             {{0, 1}, {2, 3}, {0, 2}, {1, 3}});  // 2x2 grid
  // give the shared edges recognizable energies
  std::vector<Vector> unary(4, Vector::Zero(2));
  std::vector<Matrix> tables;
  for (int e = 0; e < 4; ++e) tables.push_back(Matrix::Constant(2, 2, 4.0));
  MrfModel model(std::vector<int>(4, 2), grid.edges(), unary, tables);
  TreeCover cover = build_tree_cover(model);
  SplitEnergies split = split_energies(model, cover);
  for (std::size_t t = 0; t < cover.trees.size(); ++t)
    for (std::size_t k = 0; k < cover.trees[t].edges.size(); ++k) {
      const auto& [i, j] = cover.trees[t].edges[k];
      const int e = model.edge_index(i, j);
      const double expected = 4.0 / cover.edge_multiplicity[e];
      CHECK(split.pairwise[t][k](0, 0) == expected);
    }
}

TEST_CASE("single-tree split is the identity") {
  std::mt19937_64 rng(101);
  MrfModel model = testutil::random_tree_model(rng, 6, 3);
  TreeCover cover = build_tree_cover(model);
  REQUIRE(cover.trees.size() == 1);
  SplitEnergies split = split_energies(model, cover);
  for (int i = 0; i < model.num_nodes(); ++i)
    CHECK(split.unary[0][i] == model.unary(i));
  for (std::size_t k = 0; k < cover.trees[0].edges.size(); ++k) {
    const auto& [i, j] = cover.trees[0].edges[k];
    CHECK(split.pairwise[0][k] == model.pairwise(model.edge_index(i, j)));
  }
}

TEST_CASE("split energies resum to the model") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> size(2, 7);
    MrfModel model = testutil::random_connected_model(rng, size(rng), 3, 0.5);
    TreeCover cover = build_tree_cover(model);
    SplitEnergies split = split_energies(model, cover);

    for (int i = 0; i < model.num_nodes(); ++i) {
      Vector sum = Vector::Zero(model.cardinality(i));
      for (std::size_t t = 0; t < cover.trees.size(); ++t)
        sum += split.unary[t][i];
      CHECK((sum - model.unary(i)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    std::vector<Matrix> edge_sum;
    for (int e = 0; e < model.num_edges(); ++e)
      edge_sum.push_back(Matrix::Zero(model.pairwise(e).rows(),
                                      model.pairwise(e).cols()));
    for (std::size_t t = 0; t < cover.trees.size(); ++t)
      for (std::size_t k = 0; k < cover.trees[t].edges.size(); ++k) {
        const auto& [i, j] = cover.trees[t].edges[k];
        edge_sum[model.edge_index(i, j)] += split.pairwise[t][k];
      }
    for (int e = 0; e < model.num_edges(); ++e)
      CHECK((edge_sum[e] - model.pairwise(e)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("spanning tree validation") {
  CHECK_THROWS_AS(make_spanning_tree(3, {{0, 1}}), InvalidInput);
  CHECK_THROWS_AS(make_spanning_tree(3, {{0, 1}, {0, 1}}), InvalidInput);
  CHECK_THROWS_AS(make_spanning_tree(1, {{0, 0}}), InvalidInput);
  SpanningTree tree = make_spanning_tree(3, {{1, 2}, {0, 1}});
  CHECK(tree.edges == std::vector<Edge>{{0, 1}, {1, 2}});  // sorted
  CHECK(tree.degrees == std::vector<int>{1, 2, 1});
}
