#include "netred/graph.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace netred {

DirectedNetwork::DirectedNetwork(int n, std::vector<Edge> edges,
                                 Eigen::MatrixXd input_map,
                                 Eigen::MatrixXd output_map)
    : n_(n),
      edges_(std::move(edges)),
      input_map_(std::move(input_map)),
      output_map_(std::move(output_map)) {
  if (n_ <= 0) {
    throw std::invalid_argument("network must have at least one vertex");
  }
  if (input_map_.rows() != n_) {
    throw std::invalid_argument("input map must have one row per vertex");
  }
  if (output_map_.cols() != n_) {
    throw std::invalid_argument("output map must have one column per vertex");
  }
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.tail < 0 || e.tail >= n_ || e.head < 0 || e.head >= n_) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (e.tail == e.head) {
      throw std::invalid_argument("self-loops are not allowed");
    }
    if (!(e.weight > 0.0)) {
      throw std::invalid_argument("edge weights must be strictly positive");
    }
    if (!seen.insert({e.tail, e.head}).second) {
      throw std::invalid_argument("duplicate edge " + std::to_string(e.tail) +
                                  "->" + std::to_string(e.head));
    }
  }
}

Clustering::Clustering(std::vector<int> assignment, int cluster_count)
    : assignment_(std::move(assignment)), r_(cluster_count) {
  if (r_ <= 0 || assignment_.empty()) {
    throw std::invalid_argument("clustering must be nonempty");
  }
  std::vector<int> sizes(static_cast<size_t>(r_), 0);
  for (int c : assignment_) {
    if (c < 0 || c >= r_) {
      throw std::invalid_argument("cluster id out of range");
    }
    ++sizes[static_cast<size_t>(c)];
  }
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    throw std::invalid_argument("every cluster must be nonempty");
  }
}

Clustering Clustering::from_groups(const std::vector<std::vector<int>>& groups, int n) {
  std::vector<int> assignment(static_cast<size_t>(n), -1);
  for (size_t c = 0; c < groups.size(); ++c) {
    for (int v : groups[c]) {
      if (v < 0 || v >= n) {
        throw std::invalid_argument("cluster member out of range");
      }
      if (assignment[static_cast<size_t>(v)] != -1) {
        throw std::invalid_argument("vertex assigned to more than one cluster");
      }
      assignment[static_cast<size_t>(v)] = static_cast<int>(c);
    }
  }
  if (std::find(assignment.begin(), assignment.end(), -1) != assignment.end()) {
    throw std::invalid_argument("every vertex must belong to a cluster");
  }
  return Clustering(std::move(assignment), static_cast<int>(groups.size()));
}

Clustering Clustering::identity(int n) {
  std::vector<int> assignment(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) assignment[static_cast<size_t>(v)] = v;
  return Clustering(std::move(assignment), n);
}

Clustering Clustering::single(int n) {
  return Clustering(std::vector<int>(static_cast<size_t>(n), 0), 1);
}

std::vector<std::vector<int>> Clustering::groups() const {
  std::vector<std::vector<int>> out(static_cast<size_t>(r_));
  for (size_t v = 0; v < assignment_.size(); ++v) {
    out[static_cast<size_t>(assignment_[v])].push_back(static_cast<int>(v));
  }
  return out;
}

Eigen::MatrixXd laplacian(const DirectedNetwork& net) {
  const int n = net.vertex_count();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : net.edges()) {
    lap(e.head, e.head) += e.weight;
    lap(e.head, e.tail) -= e.weight;
  }
  return lap;
}

IncidenceDecomposition incidence(const DirectedNetwork& net) {
  const int n = net.vertex_count();
  const int m = net.edge_count();
  IncidenceDecomposition dec;
  dec.incidence = Eigen::MatrixXd::Zero(n, m);
  dec.incidence_pos = Eigen::MatrixXd::Zero(n, m);
  dec.weights = Eigen::VectorXd(m);
  for (int k = 0; k < m; ++k) {
    const Edge& e = net.edges()[static_cast<size_t>(k)];
    dec.incidence(e.head, k) = 1.0;
    dec.incidence(e.tail, k) = -1.0;
    dec.incidence_pos(e.head, k) = 1.0;
    dec.weights(k) = e.weight;
  }
  return dec;
}

bool is_balanced(const DirectedNetwork& net, std::optional<double> tol) {
  if (!is_strongly_connected(net)) {
    throw ConnectivityError("balance test requires a strongly connected network");
  }
  const int n = net.vertex_count();
  Eigen::VectorXd in_deg = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd out_deg = Eigen::VectorXd::Zero(n);
  for (const Edge& e : net.edges()) {
    in_deg(e.head) += e.weight;
    out_deg(e.tail) += e.weight;
  }
  double threshold;
  if (tol.has_value()) {
    if (*tol < 0.0) throw std::invalid_argument("tolerance must be nonnegative");
    threshold = *tol;
  } else {
    threshold = 1e-9 * std::max(in_deg.maxCoeff(), out_deg.maxCoeff());
  }
  return (in_deg - out_deg).cwiseAbs().maxCoeff() <= threshold;
}

namespace {

// Reachability of every vertex from `start` along `adj`.
bool covers_all(int n, const std::vector<std::vector<int>>& adj, int start) {
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack{start};
  seen[static_cast<size_t>(start)] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

}  // namespace

bool strongly_connected_arcs(int count, const std::vector<std::pair<int, int>>& arcs) {
  if (count <= 0) return false;
  if (count == 1) return true;
  std::vector<std::vector<int>> fwd(static_cast<size_t>(count));
  std::vector<std::vector<int>> rev(static_cast<size_t>(count));
  for (const auto& [u, v] : arcs) {
    fwd[static_cast<size_t>(u)].push_back(v);
    rev[static_cast<size_t>(v)].push_back(u);
  }
  return covers_all(count, fwd, 0) && covers_all(count, rev, 0);
}

bool is_strongly_connected(const DirectedNetwork& net) {
  std::vector<std::pair<int, int>> arcs;
  arcs.reserve(net.edges().size());
  for (const Edge& e : net.edges()) arcs.emplace_back(e.tail, e.head);
  return strongly_connected_arcs(net.vertex_count(), arcs);
}

Eigen::MatrixXd characteristic_matrix(const Clustering& c) {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(c.vertex_count(), c.cluster_count());
  for (int v = 0; v < c.vertex_count(); ++v) {
    pi(v, c.cluster_of(v)) = 1.0;
  }
  return pi;
}

}  // namespace netred
