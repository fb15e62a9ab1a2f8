#pragma once

// Config-driven experiments: build a family, compute the claimed bounds,
// verify them and write reports.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsq/processes.hpp"
#include "rsq/verify.hpp"

namespace rsq {

/// Config problem; what() is "<path>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct ClaimSpec {
  std::string id;
  nlohmann::json options;  // the claim object as written
  std::size_t line = 0;
};

struct ExperimentConfig {
  nlohmann::json family;
  std::vector<ClaimSpec> claims;
  std::size_t n_paths = 0;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<std::string> output_dir;
  std::size_t emit_traces = 0;  // number of per-path trace CSVs to write
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_paths;
  std::optional<std::size_t> horizon;
  std::optional<unsigned> threads;
  std::optional<std::size_t> emit_traces;
  std::optional<std::string> output_dir;
};

/// Parses and validates; throws ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::string& path = "<config>");
ExperimentConfig load_config(const std::string& path);

/// A claim bound to a family: its provenance tree and how to verify it.
struct PlannedClaim {
  std::string id;
  std::string description;
  NodePtr tree;                // null when the bound is a closed formula without a tree
  std::string bound_text;      // rendered value of the bound
  std::function<VerificationReport(const VerifyOptions&)> run;
};

/// Throws std::invalid_argument when the claim does not apply to the family.
PlannedClaim plan_claim(const ProcessFamily& family, const std::string& id, const nlohmann::json& options);

/// Identifiers and one-line descriptions.
std::vector<std::pair<std::string, std::string>> claim_catalog();

/// Runs every claim of the config in order.
std::vector<VerificationReport> run_claims(const ExperimentConfig& config);

/// `run`: exit 0 when no verdict is fail, 2 on any fail, 1 on config errors.
int run_experiment(const std::string& config_path, const Overrides& overrides, std::ostream& out,
                   std::ostream& err);

/// `explain`: prints the provenance tree of a claim's bound; 1 on unknown ids.
int explain_claim(const std::string& id, const std::optional<std::string>& config_path, std::ostream& out,
                  std::ostream& err);

/// `list-families`
void list_families(std::ostream& out);

/// Family used by explain when no config is given.
nlohmann::json default_family_for(const std::string& claim_id);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "RSQ_OUTPUT_DIR";

}  // namespace rsq
