#pragma once

/*
  File formats (JSON, UTF-8, newline-terminated), bundled presets, and seeded
  random instance generators. Vertex and cluster ids are 1-based on disk and
  0-based in memory. All floating output is printed with 12 significant
  digits for reproducibility.
*/

#include <cstdint>
#include <string>
#include <vector>

#include "netred/graph.hpp"
#include "netred/optimizer.hpp"
#include "netred/reduction.hpp"

namespace netred {

DirectedNetwork parse_network(const std::string& text);
std::string serialize_network(const DirectedNetwork& net);

Clustering parse_clustering(const std::string& text, int n);
std::string serialize_clustering(const Clustering& c);

/// Weights file entry: directed quotient edge between clusters, 1-based ids.
struct WeightEntry {
  int tail = 0;
  int head = 0;
  double weight = 0.0;
};

std::vector<WeightEntry> parse_weights(const std::string& text);
std::string serialize_weights(const QuotientModel& q, const Eigen::VectorXd& w);

/// Orders file entries along the quotient edge map; every quotient edge must
/// be covered exactly once.
Eigen::VectorXd match_weights(const QuotientModel& q, const std::vector<WeightEntry>& entries);

std::string serialize_masses(const Eigen::VectorXd& masses);

struct ReductionSummary {
  double initial_h2 = 0.0;
  double final_h2 = 0.0;
  double improvement_percent = 0.0;
  int iterations = 0;
  std::string status;
};

std::string serialize_reduced_model(const Clustering& c, const QuotientModel& q,
                                    const ReducedSystem& sys, const ReductionSummary& summary);

std::string serialize_trace_csv(const IterationTrace& trace);

// File helpers; unreadable or malformed inputs raise ParseError.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Bundled presets; currently "paper6", the six-vertex formation example.
DirectedNetwork preset_network(const std::string& name);
Clustering preset_clustering(const std::string& name);
bool is_preset(const std::string& name);

DirectedNetwork random_balanced_network(int n, int extra_cycles, std::uint64_t seed,
                                        int inputs = 1, int outputs = 1);
DirectedNetwork random_network(int n, int extra_edges, std::uint64_t seed,
                               int inputs = 1, int outputs = 1);
/// Clusters are contiguous runs of vertex ids, so the quotient inherits the
/// generator's base cycle and stays strongly connected.
Clustering random_contiguous_clustering(int n, int r, std::uint64_t seed);

/// Value rounded to 12 significant digits (the on-disk precision).
double round_sig(double value);
std::string format_sig(double value);

}  // namespace netred
