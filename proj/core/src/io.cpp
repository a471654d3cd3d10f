#include "netred/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "netred/errors.hpp"

namespace netred {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

json round_matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(round_sig(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json round_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(round_sig(v(i)));
  return out;
}

int checked_vertex(const json& j, int n, const char* what) {
  if (!j.is_number_integer()) throw ParseError(std::string(what) + " must be an integer");
  const int v = j.get<int>();
  if (v < 1 || v > n) {
    throw ParseError(std::string(what) + " " + std::to_string(v) + " out of range 1.." +
                     std::to_string(n));
  }
  return v - 1;
}

}  // namespace

double round_sig(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return std::strtod(buf, nullptr);
}

std::string format_sig(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

DirectedNetwork parse_network(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer()) {
    throw ParseError("graph file must be an object with integer field 'n'");
  }
  const int n = j["n"].get<int>();
  if (n < 1) throw ParseError("'n' must be at least 1");

  std::vector<Edge> edges;
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw ParseError("'edges' must be an array");
    for (const json& e : j["edges"]) {
      if (!e.is_array() || e.size() != 3) {
        throw ParseError("each edge must be [tail, head, weight]");
      }
      Edge edge;
      edge.tail = checked_vertex(e[0], n, "edge tail");
      edge.head = checked_vertex(e[1], n, "edge head");
      if (!e[2].is_number()) throw ParseError("edge weight must be a number");
      edge.weight = e[2].get<double>();
      edges.push_back(edge);
    }
  }

  int p = 0, q = 0;
  if (j.contains("inputs")) {
    for (const json& in : j["inputs"]) {
      if (!in.is_array() || in.size() != 3 || !in[1].is_number_integer()) {
        throw ParseError("each input must be [vertex, channel, gain]");
      }
      p = std::max(p, in[1].get<int>());
    }
  }
  if (j.contains("outputs")) {
    for (const json& out : j["outputs"]) {
      if (!out.is_array() || out.size() != 3 || !out[0].is_number_integer()) {
        throw ParseError("each output must be [channel, vertex, gain]");
      }
      q = std::max(q, out[0].get<int>());
    }
  }
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, p);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q, n);
  if (j.contains("inputs")) {
    for (const json& in : j["inputs"]) {
      const int v = checked_vertex(in[0], n, "input vertex");
      const int c = in[1].get<int>();
      if (c < 1) throw ParseError("input channel must be at least 1");
      if (!in[2].is_number()) throw ParseError("input gain must be a number");
      f(v, c - 1) += in[2].get<double>();
    }
  }
  if (j.contains("outputs")) {
    for (const json& out : j["outputs"]) {
      const int c = out[0].get<int>();
      if (c < 1) throw ParseError("output channel must be at least 1");
      const int v = checked_vertex(out[1], n, "output vertex");
      if (!out[2].is_number()) throw ParseError("output gain must be a number");
      h(c - 1, v) += out[2].get<double>();
    }
  }

  try {
    return DirectedNetwork(n, std::move(edges), std::move(f), std::move(h));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

std::string serialize_network(const DirectedNetwork& net) {
  json j;
  j["n"] = net.vertex_count();
  json edges = json::array();
  for (const Edge& e : net.edges()) {
    edges.push_back(json::array({e.tail + 1, e.head + 1, round_sig(e.weight)}));
  }
  j["edges"] = std::move(edges);
  json inputs = json::array();
  for (int v = 0; v < net.vertex_count(); ++v) {
    for (int c = 0; c < net.input_count(); ++c) {
      if (net.input_map()(v, c) != 0.0) {
        inputs.push_back(json::array({v + 1, c + 1, round_sig(net.input_map()(v, c))}));
      }
    }
  }
  j["inputs"] = std::move(inputs);
  json outputs = json::array();
  for (int c = 0; c < net.output_count(); ++c) {
    for (int v = 0; v < net.vertex_count(); ++v) {
      if (net.output_map()(c, v) != 0.0) {
        outputs.push_back(json::array({c + 1, v + 1, round_sig(net.output_map()(c, v))}));
      }
    }
  }
  j["outputs"] = std::move(outputs);
  return j.dump(2) + "\n";
}

Clustering parse_clustering(const std::string& text, int n) {
  const json j = parse_json(text);
  if (!j.is_array()) throw ParseError("clusters file must be an array of vertex arrays");
  std::vector<std::vector<int>> groups;
  for (const json& g : j) {
    if (!g.is_array() || g.empty()) throw ParseError("each cluster must be a nonempty array");
    std::vector<int>& group = groups.emplace_back();
    for (const json& v : g) group.push_back(checked_vertex(v, n, "cluster member"));
  }
  try {
    return Clustering::from_groups(groups, n);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

std::string serialize_clustering(const Clustering& c) {
  json j = json::array();
  for (const std::vector<int>& group : c.groups()) {
    json g = json::array();
    for (int v : group) g.push_back(v + 1);
    j.push_back(std::move(g));
  }
  return j.dump() + "\n";
}

std::vector<WeightEntry> parse_weights(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_array()) throw ParseError("weights file must be an array of triples");
  std::vector<WeightEntry> entries;
  for (const json& e : j) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number()) {
      throw ParseError("each weight entry must be [tail, head, weight]");
    }
    entries.push_back({e[0].get<int>() - 1, e[1].get<int>() - 1, e[2].get<double>()});
  }
  return entries;
}

std::string serialize_weights(const QuotientModel& q, const Eigen::VectorXd& w) {
  if (w.size() != q.edge_count()) {
    throw std::invalid_argument("serialize_weights: wrong weight dimension");
  }
  json j = json::array();
  for (int k = 0; k < q.edge_count(); ++k) {
    const auto& [tail, head] = q.edge_map[static_cast<size_t>(k)];
    j.push_back(json::array({tail + 1, head + 1, round_sig(w(k))}));
  }
  return j.dump() + "\n";
}

Eigen::VectorXd match_weights(const QuotientModel& q, const std::vector<WeightEntry>& entries) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(q.edge_count(), -1.0);
  std::map<std::pair<int, int>, int> index;
  for (int k = 0; k < q.edge_count(); ++k) {
    index[q.edge_map[static_cast<size_t>(k)]] = k;
  }
  for (const WeightEntry& e : entries) {
    const auto it = index.find({e.tail, e.head});
    if (it == index.end()) {
      throw AdmissibilityError("weight entry " + std::to_string(e.tail + 1) + "->" +
                               std::to_string(e.head + 1) +
                               " does not match a quotient edge");
    }
    if (w(it->second) >= 0.0) {
      throw AdmissibilityError("duplicate weight entry for quotient edge " +
                               std::to_string(e.tail + 1) + "->" +
                               std::to_string(e.head + 1));
    }
    w(it->second) = e.weight;
  }
  if (q.edge_count() > 0 && w.minCoeff() < 0.0) {
    throw AdmissibilityError("weights file does not cover every quotient edge");
  }
  return w;
}

std::string serialize_masses(const Eigen::VectorXd& masses) {
  json j;
  j["masses"] = round_vector(masses);
  return j.dump(2) + "\n";
}

std::string serialize_reduced_model(const Clustering& c, const QuotientModel& q,
                                    const ReducedSystem& sys, const ReductionSummary& summary) {
  json j;
  json clusters = json::array();
  for (const std::vector<int>& group : c.groups()) {
    json g = json::array();
    for (int v : group) g.push_back(v + 1);
    clusters.push_back(std::move(g));
  }
  j["clusters"] = std::move(clusters);
  j["masses"] = round_vector(q.masses);
  j["weights"] = json::parse(serialize_weights(q, sys.weights));
  j["laplacian"] = round_matrix(sys.laplacian);
  j["input_map"] = round_matrix(sys.input_map);
  j["output_map"] = round_matrix(sys.output_map);
  j["summary"] = {{"initial_h2", round_sig(summary.initial_h2)},
                  {"final_h2", round_sig(summary.final_h2)},
                  {"improvement_percent", round_sig(summary.improvement_percent)},
                  {"iterations", summary.iterations},
                  {"status", summary.status}};
  return j.dump(2) + "\n";
}

std::string serialize_trace_csv(const IterationTrace& trace) {
  std::ostringstream out;
  const int mu_count =
      trace.steps.empty() ? 0 : static_cast<int>(trace.steps.front().mu.size());
  out << "iter,objective_trR,h2_error,subproblem_status,elapsed_ms";
  for (int i = 1; i <= mu_count; ++i) out << ",mu_" << i;
  out << "\n";
  for (const IterationRecord& rec : trace.steps) {
    out << rec.iter << ',' << format_sig(rec.objective) << ',' << format_sig(rec.h2_error)
        << ',' << to_string(rec.status) << ',' << format_sig(rec.elapsed_ms);
    for (Eigen::Index i = 0; i < rec.mu.size(); ++i) out << ',' << format_sig(rec.mu(i));
    out << "\n";
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw ParseError("failed writing file: " + path);
}

bool is_preset(const std::string& name) { return name == "paper6"; }

DirectedNetwork preset_network(const std::string& name) {
  if (name != "paper6") {
    throw ParseError("unknown preset '" + name + "'");
  }
  // Six-vertex balanced formation network; single input at vertex 4, single
  // measurement at vertex 1. Edge order fixes the incidence column order.
  std::vector<Edge> edges = {
      {1, 0, 2.0}, {0, 1, 1.0}, {5, 1, 2.0}, {1, 2, 1.0}, {3, 2, 2.0},
      {4, 2, 1.0}, {4, 3, 2.0}, {2, 4, 3.0}, {0, 5, 1.0}, {2, 5, 1.0},
  };
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(6, 1);
  f(3, 0) = 1.0;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, 6);
  h(0, 0) = 1.0;
  return DirectedNetwork(6, std::move(edges), std::move(f), std::move(h));
}

Clustering preset_clustering(const std::string& name) {
  if (name != "paper6") {
    throw ParseError("unknown preset '" + name + "'");
  }
  return Clustering::from_groups({{0, 1}, {2, 3, 4}, {5}}, 6);
}

namespace {

double quantized(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return std::round(dist(rng) * 1000.0) / 1000.0;
}

std::vector<int> sample_distinct(std::mt19937_64& rng, int n, int count) {
  std::vector<int> ids(static_cast<size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(pick(rng))]);
  }
  ids.resize(static_cast<size_t>(count));
  return ids;
}

DirectedNetwork assemble(int n, const std::map<std::pair<int, int>, double>& acc,
                         std::mt19937_64& rng, int inputs, int outputs) {
  std::vector<Edge> edges;
  edges.reserve(acc.size());
  for (const auto& [pair, weight] : acc) {
    edges.push_back({pair.first, pair.second, weight});
  }
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, std::max(inputs, 0));
  for (int c = 0; c < inputs; ++c) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    f(pick(rng), c) = 1.0;
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(std::max(outputs, 0), n);
  for (int c = 0; c < outputs; ++c) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    h(c, pick(rng)) = 1.0;
  }
  return DirectedNetwork(n, std::move(edges), std::move(f), std::move(h));
}

}  // namespace

DirectedNetwork random_balanced_network(int n, int extra_cycles, std::uint64_t seed,
                                        int inputs, int outputs) {
  if (n < 2) throw std::invalid_argument("random network needs at least 2 vertices");
  std::mt19937_64 rng(seed);
  std::map<std::pair<int, int>, double> acc;

  // Union of constant-weight cycles is balanced; the base cycle over all
  // vertices makes the result strongly connected.
  const double base = quantized(rng, 0.5, 1.5);
  for (int v = 0; v < n; ++v) acc[{v, (v + 1) % n}] += base;
  for (int c = 0; c < extra_cycles; ++c) {
    std::uniform_int_distribution<int> len_dist(2, std::min(n, 5));
    const int len = len_dist(rng);
    const std::vector<int> verts = sample_distinct(rng, n, len);
    const double w = quantized(rng, 0.2, 1.0);
    for (int i = 0; i < len; ++i) {
      acc[{verts[static_cast<size_t>(i)], verts[static_cast<size_t>((i + 1) % len)]}] += w;
    }
  }
  return assemble(n, acc, rng, inputs, outputs);
}

DirectedNetwork random_network(int n, int extra_edges, std::uint64_t seed,
                               int inputs, int outputs) {
  if (n < 2) throw std::invalid_argument("random network needs at least 2 vertices");
  std::mt19937_64 rng(seed);
  std::map<std::pair<int, int>, double> acc;
  for (int v = 0; v < n; ++v) acc[{v, (v + 1) % n}] += quantized(rng, 0.2, 2.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int e = 0; e < extra_edges; ++e) {
    const int u = pick(rng);
    int v = pick(rng);
    if (u == v) v = (v + 1) % n;
    acc[{u, v}] += quantized(rng, 0.2, 2.0);
  }
  return assemble(n, acc, rng, inputs, outputs);
}

Clustering random_contiguous_clustering(int n, int r, std::uint64_t seed) {
  if (r < 1 || r > n) throw std::invalid_argument("cluster count out of range");
  std::mt19937_64 rng(seed);
  std::vector<int> cuts = sample_distinct(rng, n - 1, r - 1);
  for (int& c : cuts) ++c;  // cut positions in 1..n-1
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(n);
  std::vector<int> assignment(static_cast<size_t>(n));
  int cluster = 0;
  for (int v = 0; v < n; ++v) {
    if (v >= cuts[static_cast<size_t>(cluster)]) ++cluster;
    assignment[static_cast<size_t>(v)] = cluster;
  }
  return Clustering(std::move(assignment), r);
}

}  // namespace netred
