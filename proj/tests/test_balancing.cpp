#include <doctest.h>

#include <netred/balancing.hpp>
#include <netred/io.hpp>

#include "support.hpp"

using namespace netred;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("left null vector of a balanced Laplacian is all ones") {
  const DirectedNetwork net = preset_network("paper6");
  const VectorXd v = left_perron_vector(laplacian(net));
  CHECK((v - VectorXd::Ones(6)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("left null vector of an uneven 2-cycle") {
  // Weights w(1->2) = 2, w(2->1) = 1 give L = [[1, -1], [-2, 2]] under the
  // head-influence convention; the left kernel is spanned by (2, 1).
  const DirectedNetwork net(2, {{0, 1, 2.0}, {1, 0, 1.0}}, MatrixXd::Zero(2, 1),
                            MatrixXd::Zero(1, 2));
  const MatrixXd lap = laplacian(net);
  MatrixXd expect(2, 2);
  expect << 1, -1, -2, 2;
  REQUIRE((lap - expect).cwiseAbs().maxCoeff() == 0.0);

  const VectorXd v = left_perron_vector(lap);
  CHECK(v.sum() == doctest::Approx(2.0));
  CHECK(v(0) / v(1) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK((v.transpose() * lap).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("left null vector on random strong digraphs") {
  for (int seed = 1; seed <= 20; ++seed) {
    const DirectedNetwork net = random_network(10, 8, 300 + seed);
    const MatrixXd lap = laplacian(net);
    const VectorXd v = left_perron_vector(lap);
    CHECK((v.transpose() * lap).cwiseAbs().maxCoeff() <=
          1e-10 * lap.cwiseAbs().maxCoeff());
    CHECK(v.minCoeff() > 0.0);
    CHECK(v.sum() == doctest::Approx(10.0));
  }
}

TEST_CASE("left null vector rejects rank-deficient input") {
  // Two disjoint 2-cycles: the left null space is two-dimensional.
  const DirectedNetwork net(4, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}},
                            MatrixXd::Zero(4, 1), MatrixXd::Zero(1, 4));
  CHECK_THROWS_AS(left_perron_vector(laplacian(net)), ConnectivityError);
}

TEST_CASE("balanced representation of the bundled network is the identity rescaling") {
  const DirectedNetwork net = preset_network("paper6");
  const BalancedRepresentation rep = balanced_representation(net);
  CHECK((rep.masses - VectorXd::Ones(6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((rep.laplacian - laplacian(net)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((rep.input_map - net.input_map()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform directed ring balances to identity masses") {
  std::vector<Edge> edges;
  for (int v = 0; v < 5; ++v) edges.push_back({v, (v + 1) % 5, 1.3});
  const DirectedNetwork ring(5, edges, MatrixXd::Zero(5, 1), MatrixXd::Zero(1, 5));
  const BalancedRepresentation rep = balanced_representation(ring);
  CHECK((rep.masses - VectorXd::Ones(5)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("balanced representation has zero column sums on random digraphs") {
  for (int seed = 1; seed <= 20; ++seed) {
    const DirectedNetwork net = random_network(9, 7, 400 + seed);
    const BalancedRepresentation rep = balanced_representation(net);
    const double scale = rep.laplacian.cwiseAbs().maxCoeff();
    CHECK((Eigen::RowVectorXd::Ones(9) * rep.laplacian).cwiseAbs().maxCoeff() <=
          1e-10 * scale);
    CHECK(rep.laplacian.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK(rep.masses.minCoeff() > 0.0);
  }
}

TEST_CASE("balance is scale invariant; the normalization pins the representative") {
  const DirectedNetwork net = random_network(7, 6, 42);
  const MatrixXd lap = laplacian(net);
  const VectorXd v = left_perron_vector(lap);
  for (double c : {0.1, 3.0, 250.0}) {
    const MatrixXd scaled = (c * v).asDiagonal() * lap;
    CHECK((Eigen::RowVectorXd::Ones(7) * scaled).cwiseAbs().maxCoeff() <=
          1e-9 * scaled.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("balancing an already balanced network returns identity masses exactly") {
  for (int seed = 1; seed <= 10; ++seed) {
    const DirectedNetwork net = random_balanced_network(8, 2, 500 + seed);
    const BalancedRepresentation rep = balanced_representation(net);
    CHECK((rep.masses - VectorXd::Ones(8)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("original and balanced state equations produce the same trajectories") {
  const DirectedNetwork net = random_network(6, 6, 77, 1, 1);
  const BalancedRepresentation rep = balanced_representation(net);
  const MatrixXd a1 = -laplacian(net);
  const MatrixXd b1 = net.input_map();
  const VectorXd inv_m = rep.masses.cwiseInverse();
  const MatrixXd a2 = -(inv_m.asDiagonal() * rep.laplacian);
  const MatrixXd b2 = inv_m.asDiagonal() * rep.input_map;

  auto input = [](double t) { return Eigen::VectorXd::Constant(1, std::sin(t)); };
  const VectorXd x0 = VectorXd::LinSpaced(6, -1.0, 1.0);
  const VectorXd x1 = testsupport::rk4_integrate(a1, b1, x0, 1e-3, 4000, input);
  const VectorXd x2 = testsupport::rk4_integrate(a2, b2, x0, 1e-3, 4000, input);
  CHECK((x1 - x2).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("balancing rejects non-strongly-connected networks") {
  const DirectedNetwork net(3, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}},
                            MatrixXd::Zero(3, 1), MatrixXd::Zero(1, 3));
  CHECK_THROWS_AS(balanced_representation(net), ConnectivityError);
}
