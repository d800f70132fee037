#include "biv/taxonomy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>

#include "biv/text.hpp"

namespace biv {

namespace {

struct CapabilityRow {
  CapabilityId id;
  CapabilityCategory category;
  std::string_view canonical;
  std::string_view short_name;
  std::string_view description;
};

// clang-format off
constexpr std::array<CapabilityRow, kCapabilityCount> kCapabilityTable = {{
    {CapabilityId::NetworkOutboundHttp,     CapabilityCategory::Network,          "NETWORK_OUTBOUND_HTTP",     "outbound-http",            "Outbound HTTP(S) request to an external endpoint"},
    {CapabilityId::NetworkOutboundSocket,   CapabilityCategory::Network,          "NETWORK_OUTBOUND_SOCKET",   "outbound-socket",          "Raw outbound socket connection"},
    {CapabilityId::NetworkInbound,          CapabilityCategory::Network,          "NETWORK_INBOUND",           "inbound",                  "Listening for inbound network connections"},
    {CapabilityId::NetworkDownloadExecute,  CapabilityCategory::Network,          "NETWORK_DOWNLOAD_EXECUTE",  "download-execute",         "Downloading remote content and executing it"},
    {CapabilityId::FileReadProject,         CapabilityCategory::Filesystem,       "FILE_READ_PROJECT",         "read-project",             "Reading files inside the project or working tree"},
    {CapabilityId::FileReadSensitive,       CapabilityCategory::Filesystem,       "FILE_READ_SENSITIVE",       "read-sensitive",           "Reading credential stores or other sensitive paths"},
    {CapabilityId::FileReadHome,            CapabilityCategory::Filesystem,       "FILE_READ_HOME",            "read-home",                "Reading files under the user home directory"},
    {CapabilityId::FileWrite,               CapabilityCategory::Filesystem,       "FILE_WRITE",                "write",                    "Writing or creating files"},
    {CapabilityId::FileWriteSensitive,      CapabilityCategory::Filesystem,       "FILE_WRITE_SENSITIVE",      "write-sensitive",          "Writing to sensitive or startup paths"},
    {CapabilityId::FileEnumerate,           CapabilityCategory::Filesystem,       "FILE_ENUMERATE",            "enumerate",                "Enumerating directory contents"},
    {CapabilityId::FileDelete,              CapabilityCategory::Filesystem,       "FILE_DELETE",               "delete",                   "Deleting files or directories"},
    {CapabilityId::ProcessExec,             CapabilityCategory::ProcessExec,      "PROCESS_EXEC",              "process-exec",             "Spawning an external process"},
    {CapabilityId::ProcessExecShell,        CapabilityCategory::ProcessExec,      "PROCESS_EXEC_SHELL",        "process-exec-shell",       "Executing a command line through a shell"},
    {CapabilityId::CodeEval,                CapabilityCategory::ProcessExec,      "CODE_EVAL",                 "code-eval",                "Evaluating code from a fixed literal"},
    {CapabilityId::CodeEvalDynamic,         CapabilityCategory::ProcessExec,      "CODE_EVAL_DYNAMIC",         "code-eval-dynamic",        "Evaluating dynamically constructed code"},
    {CapabilityId::EnvAccessSpecific,       CapabilityCategory::Environment,      "ENV_ACCESS_SPECIFIC",       "env-access-specific",      "Reading a named environment variable"},
    {CapabilityId::EnvAccessBulk,           CapabilityCategory::Environment,      "ENV_ACCESS_BULK",           "env-access-bulk",          "Reading the environment wholesale"},
    {CapabilityId::EnvAccessSensitive,      CapabilityCategory::Environment,      "ENV_ACCESS_SENSITIVE",      "env-access-sensitive",     "Reading an environment variable that names secret material"},
    {CapabilityId::EncodingBase64,          CapabilityCategory::Encoding,         "ENCODING_BASE64",           "base64",                   "Base64 encoding or decoding"},
    {CapabilityId::EncodingCrypto,          CapabilityCategory::Encoding,         "ENCODING_CRYPTO",           "crypto",                   "Cryptographic transformation of data"},
    {CapabilityId::EncodingCompression,     CapabilityCategory::Encoding,         "ENCODING_COMPRESSION",      "compression",              "Compressing or decompressing data"},
    {CapabilityId::CredentialRead,          CapabilityCategory::Credential,       "CREDENTIAL_READ",           "credential-read",          "Reading stored credentials or keyrings"},
    {CapabilityId::CredentialCreate,        CapabilityCategory::Credential,       "CREDENTIAL_CREATE",         "credential-create",        "Creating or storing credential material"},
    {CapabilityId::CredentialTransmit,      CapabilityCategory::Credential,       "CREDENTIAL_TRANSMIT",       "credential-transmit",      "Transmitting credential material"},
    {CapabilityId::InstructionOverride,     CapabilityCategory::InstructionLevel, "INSTRUCTION_OVERRIDE",      "instruction-override",     "Directives that override agent decision making"},
    {CapabilityId::Concealment,             CapabilityCategory::InstructionLevel, "CONCEALMENT",               "concealment",              "Directives to hide activity from the user"},
    {CapabilityId::IdentityHijack,          CapabilityCategory::InstructionLevel, "IDENTITY_HIJACK",           "identity-hijack",          "Directives that reassign the agent's identity or role"},
    {CapabilityId::SilentExecution,         CapabilityCategory::InstructionLevel, "SILENT_EXECUTION",          "silent-execution",         "Directives to run actions without surfacing them"},
    {CapabilityId::ExfiltrationInstruction, CapabilityCategory::InstructionLevel, "EXFILTRATION_INSTRUCTION",  "exfiltration-instruction", "Directives instructing the agent to send data out"},
}};
// clang-format on

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Network", "Filesystem", "ProcessExec", "Environment", "Encoding", "Credential", "InstructionLevel",
};

constexpr std::array<std::string_view, 4> kTierNames = {"Low", "Medium", "High", "Critical"};

constexpr std::array<std::string_view, 4> kCompoundNames = {
    "ExfiltrationChain", "RceChain", "CodeObfuscation", "DataLineageViolation"};

const CapabilityRow& row_of(CapabilityId cap) {
  return kCapabilityTable[static_cast<std::size_t>(cap)];
}

// Uppercase, '-' treated as '_'.
std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

SeverityTier severity_of(CapabilityId cap) {
  switch (category_of(cap)) {
    case CapabilityCategory::Credential:
    case CapabilityCategory::InstructionLevel:
      return SeverityTier::Critical;
    case CapabilityCategory::Network:
    case CapabilityCategory::ProcessExec:
    case CapabilityCategory::Environment:
      return SeverityTier::High;
    case CapabilityCategory::Filesystem:
    case CapabilityCategory::Encoding:
      return SeverityTier::Medium;
  }
  return SeverityTier::Medium;
}

CapabilityCategory category_of(CapabilityId cap) { return row_of(cap).category; }

SeverityTier severity_of(CompoundCategory cat) {
  return cat == CompoundCategory::DataLineageViolation ? SeverityTier::High : SeverityTier::Critical;
}

std::string_view format_capability(CapabilityId cap) { return row_of(cap).canonical; }
std::string_view short_name(CapabilityId cap) { return row_of(cap).short_name; }
std::string_view describe_capability(CapabilityId cap) { return row_of(cap).description; }

std::string_view format_category(CapabilityCategory cat) {
  return kCategoryNames[static_cast<std::size_t>(cat)];
}

std::string_view format_tier(SeverityTier tier) { return kTierNames[static_cast<std::size_t>(tier)]; }

std::string_view format_compound(CompoundCategory cat) {
  return kCompoundNames[static_cast<std::size_t>(cat)];
}

CapabilityId parse_capability(std::string_view name) {
  const std::string norm = normalize_name(name);
  for (const auto& row : kCapabilityTable) {
    if (norm == row.canonical) return row.id;
    if (norm == normalize_name(row.short_name)) return row.id;
  }
  throw UnknownCapabilityError(std::string(name));
}

SeverityTier parse_tier(std::string_view name) {
  const std::string lower = to_lower(name);
  for (std::size_t i = 0; i < kTierNames.size(); ++i) {
    if (lower == to_lower(kTierNames[i])) return static_cast<SeverityTier>(i);
  }
  throw std::runtime_error("unknown severity tier: \"" + std::string(name) + "\"");
}

std::array<CapabilityId, kCapabilityCount> all_capabilities() {
  std::array<CapabilityId, kCapabilityCount> out{};
  for (std::size_t i = 0; i < kCapabilityCount; ++i) out[i] = static_cast<CapabilityId>(i);
  return out;
}

std::size_t category_size(CapabilityCategory cat) {
  return static_cast<std::size_t>(
      std::count_if(kCapabilityTable.begin(), kCapabilityTable.end(),
                    [&](const CapabilityRow& row) { return row.category == cat; }));
}

std::string taxonomy_manifest_json() {
  nlohmann::ordered_json manifest;
  manifest["version"] = std::string(kTaxonomyVersion);
  nlohmann::ordered_json caps = nlohmann::ordered_json::array();
  for (const auto& row : kCapabilityTable) {
    nlohmann::ordered_json entry;
    entry["name"] = std::string(row.canonical);
    entry["short_name"] = std::string(row.short_name);
    entry["category"] = std::string(format_category(row.category));
    entry["tier"] = std::string(format_tier(severity_of(row.id)));
    entry["description"] = std::string(row.description);
    caps.push_back(std::move(entry));
  }
  manifest["capabilities"] = std::move(caps);
  nlohmann::ordered_json compounds = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kCompoundNames.size(); ++i) {
    auto cat = static_cast<CompoundCategory>(i);
    nlohmann::ordered_json entry;
    entry["name"] = std::string(kCompoundNames[i]);
    entry["tier"] = std::string(format_tier(severity_of(cat)));
    compounds.push_back(std::move(entry));
  }
  manifest["compound_categories"] = std::move(compounds);
  return manifest.dump(2) + "\n";
}

std::string taxonomy_version_hash() {
  static const std::string hash = sha256_hex(taxonomy_manifest_json());
  return hash;
}

void validate_taxonomy_manifest(const std::string& manifest_json) {
  nlohmann::json doc = nlohmann::json::parse(manifest_json);
  if (doc.value("version", "") != kTaxonomyVersion) {
    throw std::runtime_error("taxonomy manifest version mismatch: expected " +
                             std::string(kTaxonomyVersion));
  }
  const auto& caps = doc.at("capabilities");
  if (caps.size() != kCapabilityCount) {
    throw std::runtime_error("taxonomy manifest lists " + std::to_string(caps.size()) +
                             " capabilities, expected 29");
  }
  for (const auto& entry : caps) {
    CapabilityId cap = parse_capability(entry.at("name").get<std::string>());
    if (entry.at("category").get<std::string>() != format_category(category_of(cap))) {
      throw std::runtime_error("taxonomy manifest category mismatch for " +
                               entry.at("name").get<std::string>());
    }
    if (parse_tier(entry.at("tier").get<std::string>()) != severity_of(cap)) {
      throw std::runtime_error("taxonomy manifest tier mismatch for " +
                               entry.at("name").get<std::string>());
    }
  }
}

}  // namespace biv
