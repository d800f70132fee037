#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "biv/taxonomy.hpp"

namespace biv {

// Shared lexicons consumed by the analyzers, the claim filters, and the intent
// rules. The lists ship as versioned data (see patterns_manifest_json) and can
// be extended at startup via extend_patterns; they are never shrunk, which is
// what keeps detection monotone under configuration changes.
struct PatternTables {
  // Fragments matched case-insensitively against environment variable names.
  std::vector<std::string> secret_env_fragments;
  // Path fragments identifying credential stores and other sensitive reads.
  std::vector<std::string> secret_path_fragments;
  // Path fragments identifying startup/persistence write targets.
  std::vector<std::string> startup_path_fragments;
  // Imperative agent-control phrases that reclassify metadata values as
  // instructions.
  std::vector<std::string> directive_phrases;
  // Claim-quality keyword lexicons, keyed by capability family.
  std::vector<std::string> credential_keywords;
  std::vector<std::string> code_eval_keywords;
  std::vector<std::string> instruction_keywords;
  // Intent-rule keyword lists.
  std::vector<std::string> ransomware_keywords;
  std::vector<std::string> cryptominer_keywords;
  std::vector<std::string> telemetry_keywords;
  std::vector<std::string> recon_keywords;
};

inline constexpr std::string_view kPatternsVersion = "patterns/v1";

const PatternTables& patterns();

// Appends extra entries (from a config file) to the built-in lists.
void extend_patterns(const PatternTables& extra);

// Restores the built-in lists (test isolation).
void reset_patterns();

bool is_secret_env_name(std::string_view name);

// read-sensitive / read-home / read-project by path shape.
CapabilityId classify_read_path(std::string_view path);

// write-sensitive for startup or credential-store targets, write otherwise.
CapabilityId classify_write_path(std::string_view path);

bool is_persistence_path(std::string_view path);

// True when text contains any lexicon entry, case-insensitively.
bool contains_any_keyword(std::string_view text, const std::vector<std::string>& lexicon);

// Keyword lexicon for a claimed capability, or null when the capability
// carries no keyword-quality requirement.
const std::vector<std::string>* claim_keyword_lexicon(CapabilityId cap);

// Versioned JSON dump of every lexicon above (drift-guarded by tests).
std::string patterns_manifest_json();

}  // namespace biv
