#include "biv/declared_track.hpp"

#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

#include "biv/text.hpp"

namespace biv {

namespace {

using nlohmann::json;

std::map<std::string, std::vector<CapabilityId>> builtin_mapping() {
  return {
      {"http_request", {CapabilityId::NetworkOutboundHttp}},
      {"file_system", {CapabilityId::FileReadProject, CapabilityId::FileWrite}},
      {"file_read", {CapabilityId::FileReadProject}},
      {"file_write", {CapabilityId::FileWrite}},
      {"exec", {CapabilityId::ProcessExec}},
      {"shell", {CapabilityId::ProcessExec}},
  };
}

std::map<std::string, std::vector<CapabilityId>>& mapping_table() {
  static auto table = builtin_mapping();
  return table;
}

// Maps one manifest capability string; falls back to taxonomy names so a
// manifest may declare a capability by its canonical name directly.
std::vector<CapabilityId> map_capability_string(const std::string& raw, const std::string& where,
                                                std::vector<std::string>* warnings) {
  const std::string key = to_lower(raw);
  auto it = mapping_table().find(key);
  if (it != mapping_table().end()) return it->second;
  try {
    return {parse_capability(raw)};
  } catch (const UnknownCapabilityError&) {
    if (warnings) {
      warnings->push_back("unknown manifest capability string \"" + raw + "\" at " + where);
    }
    return {};
  }
}

void walk_structured_fields(const SourceDocument& doc, const YAML::Node& node,
                            const std::string& prefix,
                            std::vector<DeclaredCapability>& out,
                            std::vector<std::string>* warnings) {
  if (!node.IsMap()) return;
  const YAML::Node caps = node["capabilities"];
  if (caps && caps.IsSequence()) {
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (!caps[i].IsScalar()) continue;
      const std::string where = doc.path + "#" + prefix + "capabilities[" + std::to_string(i) + "]";
      for (CapabilityId cap : map_capability_string(caps[i].as<std::string>(), where, warnings)) {
        out.push_back({cap, DeclarationSource::ManifestField, where,
                       DeclarationConfidence::Deterministic});
      }
    }
  }
  const YAML::Node envs = node["requiredEnvVars"];
  if (envs && envs.IsSequence()) {
    for (std::size_t i = 0; i < envs.size(); ++i) {
      if (!envs[i].IsScalar()) continue;
      // Declaring the variable name is not declaring sensitive use: the entry
      // maps to env-access-specific only, whatever the name looks like.
      const std::string where =
          doc.path + "#" + prefix + "requiredEnvVars[" + std::to_string(i) + "]";
      out.push_back({CapabilityId::EnvAccessSpecific, DeclarationSource::ManifestField, where,
                     DeclarationConfidence::Deterministic});
    }
  }
}

// YAML text of a frontmatter span with the --- fences removed.
std::string strip_fences(const std::string& text) {
  std::string out;
  for (const auto& line : split_lines(text)) {
    std::string_view trimmed = line;
    while (!trimmed.empty() && (trimmed.back() == '\r')) trimmed.remove_suffix(1);
    if (trimmed == "---" || trimmed == "...") continue;
    out.append(line);
    out.push_back('\n');
  }
  return out;
}

void collect_json_urls(const SourceDocument& doc, const json& node, const std::string& pointer,
                       std::vector<DeclaredCapability>& out) {
  if (node.is_string()) {
    const std::string& value = node.get_ref<const std::string&>();
    if (value.rfind("http://", 0) == 0 || value.rfind("https://", 0) == 0) {
      out.push_back({CapabilityId::NetworkOutboundHttp, DeclarationSource::ManifestField,
                     doc.path + "#" + (pointer.empty() ? "/" : pointer),
                     DeclarationConfidence::Deterministic});
    }
    return;
  }
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      collect_json_urls(doc, it.value(), pointer + "/" + it.key(), out);
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      collect_json_urls(doc, node[i], pointer + "/" + std::to_string(i), out);
    }
  }
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void extend_declared_mapping(const std::string& manifest_name,
                             const std::vector<CapabilityId>& caps) {
  auto& entry = mapping_table()[to_lower(manifest_name)];
  for (CapabilityId cap : caps) {
    if (std::find(entry.begin(), entry.end(), cap) == entry.end()) entry.push_back(cap);
  }
}

void reset_declared_mapping() { mapping_table() = builtin_mapping(); }

std::vector<DeclaredCapability> parse_manifest_declarations(const SkillPackage& pkg,
                                                            std::vector<std::string>* warnings) {
  std::vector<DeclaredCapability> out;
  for (const SourceDocument& doc : pkg.metadata_docs) {
    const std::string name = to_lower(std::filesystem::path(doc.path).filename().string());
    try {
      if (name == "skill.yaml" || name == "skill.yml") {
        walk_structured_fields(doc, YAML::Load(doc.text), "", out, warnings);
      } else if (name == "tool.json") {
        // Same capability fields as skill.yaml; JSON is a YAML subset, so the
        // YAML walker covers it.
        walk_structured_fields(doc, YAML::Load(doc.text), "", out, warnings);
      } else if (name == "api.json") {
        collect_json_urls(doc, json::parse(doc.text), "", out);
      } else if (ends_with(name, ".md")) {
        // Frontmatter span emitted by the loader.
        walk_structured_fields(doc, YAML::Load(strip_fences(doc.text)), "frontmatter.", out,
                               warnings);
      }
    } catch (const std::exception& e) {
      if (warnings) {
        warnings->push_back("malformed manifest document " + doc.path + ": " + e.what());
      }
    }
  }
  return out;
}

DeclaredResult declared_set(const SkillPackage& pkg, SemanticProvider& provider) {
  DeclaredResult result;
  result.provenance = parse_manifest_declarations(pkg, &result.warnings);

  try {
    if (!pkg.metadata_docs.empty()) {
      const auto raw = provider.extract_claims(pkg.metadata_docs, ClaimKind::Declared);
      for (const SemanticClaim& claim :
           apply_filters(raw, pkg.metadata_docs, &result.warnings)) {
        result.provenance.push_back({claim.capability, DeclarationSource::SemanticClaim,
                                     claim.quoted_span, DeclarationConfidence::FilteredClaim});
      }
    }
  } catch (const std::exception& e) {
    result.provider_degraded = true;
    result.warnings.push_back(std::string("declared track degraded to deterministic-only: ") +
                              e.what());
  }

  for (const DeclaredCapability& entry : result.provenance) result.set.insert(entry.capability);
  return result;
}

}  // namespace biv
