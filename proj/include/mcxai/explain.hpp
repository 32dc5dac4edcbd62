#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcxai/mcts.hpp"

namespace mcxai {

struct FeatureImportance {
  ActionIndex action = 0;
  std::vector<std::size_t> feature_indices;
  double win_rate = 0.0;
  std::uint64_t visits = 0;
  bool explored = true;  // false for root actions no episode went through
};

struct ExplanationPath {
  std::vector<ActionIndex> actions;
  double win_rate = 0.0;  // mu of the last edge
  bool complete = false;  // ends at a terminal node
  NodeId end = 0;
};

// Root edges by descending win rate, ties by ascending action; unvisited
// root actions are appended last, flagged unexplored.
std::vector<FeatureImportance> root_importance(const SearchTree& tree);

// Win rate of the last edge of `path`. Throws PathNotFoundError if the path
// is not in the tree or any of its edges is unvisited.
double path_importance(const SearchTree& tree, std::span<const ActionIndex> path);

// Every root-to-terminal path in the tree.
std::vector<ExplanationPath> complete_paths(const SearchTree& tree);

// The complete path with the largest last-edge win rate; ties prefer the
// shorter path, then the lexicographically smaller action sequence. Throws
// NoCompletePathError when the tree holds no terminal node.
ExplanationPath best_complete_path(const SearchTree& tree);

// Versioned JSON document; import_json(export_json(t)) reproduces every node
// and edge statistic exactly.
std::string export_json(const SearchTree& tree);
SearchTree import_json(const std::string& text);

// Graphviz digraph. Edges are labelled "a<i> v=<visits> μ=<win rate>",
// terminal nodes are double circles.
std::string export_dot(const SearchTree& tree);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mcxai
