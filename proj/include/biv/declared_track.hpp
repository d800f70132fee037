#pragma once

#include <set>
#include <string>
#include <vector>

#include "biv/semantic_provider.hpp"
#include "biv/skill_loader.hpp"
#include "biv/taxonomy.hpp"

namespace biv {

enum class DeclarationSource { ManifestField, SemanticClaim };
enum class DeclarationConfidence { Deterministic, FilteredClaim };

struct DeclaredCapability {
  CapabilityId capability;
  DeclarationSource source = DeclarationSource::ManifestField;
  // Resolvable manifest field (e.g. "skill.yaml#capabilities[0]") for
  // deterministic entries; the grounded quoted span for semantic claims.
  std::string field_path;
  DeclarationConfidence confidence = DeclarationConfidence::Deterministic;
};

struct DeclaredResult {
  std::set<CapabilityId> set;                     // D(s)
  std::vector<DeclaredCapability> provenance;     // every contributing field/claim
  std::vector<std::string> warnings;
  bool provider_degraded = false;
};

// Deterministic manifest walk: skill.yaml / skill.yml / tool.json fields,
// SKILL.md frontmatter, api.json URL fields.
std::vector<DeclaredCapability> parse_manifest_declarations(const SkillPackage& pkg,
                                                            std::vector<std::string>* warnings);

// Manifest declarations unioned with filtered semantic-provider claims over M.
DeclaredResult declared_set(const SkillPackage& pkg, SemanticProvider& provider);

// Adds a manifest capability-string mapping (config extension).
void extend_declared_mapping(const std::string& manifest_name,
                             const std::vector<CapabilityId>& caps);
void reset_declared_mapping();

}  // namespace biv
