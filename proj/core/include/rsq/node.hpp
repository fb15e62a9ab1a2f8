#pragma once

// Construction trees for bound functions.
//
// Every modulus, rate and counterfunction in rsq is a tree of rule nodes.
// Evaluation interprets the tree, so the tree printed by `explain` and the
// JSON written into reports are the same object that produced the numbers.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace rsq {

class Node;
using NodePtr = std::shared_ptr<const Node>;

/// Opaque leaf evaluator for user-supplied functions.
using CustomFn = std::function<double(std::span<const double>)>;

struct Param {
  std::string name;
  double value;
};

class Node {
 public:
  Node(std::string rule, std::size_t arity, std::vector<Param> params,
       std::vector<NodePtr> children, std::string tag = {},
       std::vector<double> data = {}, CustomFn custom = {});

  const std::string& rule() const noexcept { return rule_; }
  std::size_t arity() const noexcept { return arity_; }
  const std::vector<Param>& params() const noexcept { return params_; }
  const std::vector<NodePtr>& children() const noexcept { return children_; }
  const std::string& tag() const noexcept { return tag_; }
  const std::vector<double>& data() const noexcept { return data_; }
  const CustomFn& custom() const noexcept { return custom_; }

  /// Throws std::out_of_range when the parameter is absent.
  double param(std::string_view name) const;
  bool has_param(std::string_view name) const noexcept;
  const Node& child(std::size_t i) const;

 private:
  std::string rule_;
  std::size_t arity_;
  std::vector<Param> params_;
  std::vector<NodePtr> children_;
  std::string tag_;
  std::vector<double> data_;
  CustomFn custom_;
};

NodePtr make_node(std::string rule, std::size_t arity, std::vector<Param> params,
                  std::vector<NodePtr> children, std::string tag = {},
                  std::vector<double> data = {}, CustomFn custom = {});

/// Collects warnings raised while interpreting a tree (e.g. clamped accuracies).
struct EvalLog {
  std::vector<std::string> warnings;
};

/// Interprets `node` at `args`. `args.size()` must equal `node.arity()`.
/// Unknown rules and custom leaves without an evaluator throw std::logic_error.
double evaluate(const Node& node, std::span<const double> args, EvalLog* log = nullptr);

inline double evaluate(const Node& node, std::initializer_list<double> args,
                       EvalLog* log = nullptr) {
  return evaluate(node, std::span<const double>(args.begin(), args.size()), log);
}

/// True if `rule` has a registered interpreter.
bool is_known_rule(std::string_view rule) noexcept;

/// {"rule", "tag", "arity", "params": {...}, "data": [...], "children": [...]}.
/// Parameter order is preserved so serialization is deterministic.
nlohmann::json to_json(const Node& node);

/// Maps a custom leaf's tag back to its evaluator when rebuilding a tree.
using CustomResolver = std::function<CustomFn(const std::string& tag)>;

/// Rebuilds a tree from `to_json` output. Custom leaves need `resolver`;
/// without one they deserialize but throw on evaluation.
NodePtr node_from_json(const nlohmann::json& j, const CustomResolver& resolver = {});

/// Indented one-node-per-line rendering used by `rsq explain`.
std::string render_tree(const Node& node);

}  // namespace rsq
