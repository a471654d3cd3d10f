#pragma once

/*
  Weighted simple directed networks with input/output placements, and the
  Laplacian / incidence algebra built on them.

  Orientation convention: an edge (tail u, head v, weight w) means u influences
  v. It contributes +w to L(v,v) and -w to L(v,u); the corresponding incidence
  column carries +1 at v and -1 at u, so that L = B0 * Diag(w) * B^T holds.
*/

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netred/errors.hpp"

namespace netred {

struct Edge {
  int tail = 0;
  int head = 0;
  double weight = 0.0;
};

/// Simple weighted digraph with input gains F (n x p) and output selectors
/// H (q x n). Immutable after construction; construction validates the
/// simple-graph and positive-weight invariants.
class DirectedNetwork {
 public:
  DirectedNetwork(int n, std::vector<Edge> edges, Eigen::MatrixXd input_map,
                  Eigen::MatrixXd output_map);

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int input_count() const { return static_cast<int>(input_map_.cols()); }
  int output_count() const { return static_cast<int>(output_map_.rows()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Eigen::MatrixXd& input_map() const { return input_map_; }
  const Eigen::MatrixXd& output_map() const { return output_map_; }

 private:
  int n_;
  std::vector<Edge> edges_;
  Eigen::MatrixXd input_map_;   // n x p
  Eigen::MatrixXd output_map_;  // q x n
};

/// Incidence factorization L = B0 * Diag(weights) * B^T. Column k corresponds
/// to edges()[k] of the originating network.
struct IncidenceDecomposition {
  Eigen::MatrixXd incidence;      // B, n x m, +1 at head / -1 at tail
  Eigen::MatrixXd incidence_pos;  // B0, negative entries of B zeroed
  Eigen::VectorXd weights;        // w, length m
};

/// Partition of {0..n-1} into r nonempty clusters.
class Clustering {
 public:
  Clustering(std::vector<int> assignment, int cluster_count);

  /// Builds from explicit vertex groups; every vertex must occur exactly once.
  static Clustering from_groups(const std::vector<std::vector<int>>& groups, int n);
  static Clustering identity(int n);
  static Clustering single(int n);

  int vertex_count() const { return static_cast<int>(assignment_.size()); }
  int cluster_count() const { return r_; }
  int cluster_of(int v) const { return assignment_.at(static_cast<size_t>(v)); }
  const std::vector<int>& assignment() const { return assignment_; }
  std::vector<std::vector<int>> groups() const;

 private:
  std::vector<int> assignment_;
  int r_;
};

Eigen::MatrixXd laplacian(const DirectedNetwork& net);

IncidenceDecomposition incidence(const DirectedNetwork& net);

/// True iff every vertex's indegree equals its outdegree within tol
/// (equivalently ||B w||_inf <= tol). Default tol is 1e-9 * max degree.
/// Requires a strongly connected network.
bool is_balanced(const DirectedNetwork& net, std::optional<double> tol = std::nullopt);

bool is_strongly_connected(const DirectedNetwork& net);

/// n x r binary matrix with Pi(v, c) = 1 iff vertex v belongs to cluster c.
Eigen::MatrixXd characteristic_matrix(const Clustering& c);

/// Strong connectivity of an arbitrary arc list over `count` vertices.
bool strongly_connected_arcs(int count, const std::vector<std::pair<int, int>>& arcs);

}  // namespace netred
