#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace biv {

// The fixed 29-capability vocabulary. Order groups capabilities by category;
// category boundaries are encoded in kCapabilityTable.
enum class CapabilityId : std::uint8_t {
  NetworkOutboundHttp,
  NetworkOutboundSocket,
  NetworkInbound,
  NetworkDownloadExecute,
  FileReadProject,
  FileReadSensitive,
  FileReadHome,
  FileWrite,
  FileWriteSensitive,
  FileEnumerate,
  FileDelete,
  ProcessExec,
  ProcessExecShell,
  CodeEval,
  CodeEvalDynamic,
  EnvAccessSpecific,
  EnvAccessBulk,
  EnvAccessSensitive,
  EncodingBase64,
  EncodingCrypto,
  EncodingCompression,
  CredentialRead,
  CredentialCreate,
  CredentialTransmit,
  InstructionOverride,
  Concealment,
  IdentityHijack,
  SilentExecution,
  ExfiltrationInstruction,
};

inline constexpr std::size_t kCapabilityCount = 29;

enum class CapabilityCategory : std::uint8_t {
  Network,
  Filesystem,
  ProcessExec,
  Environment,
  Encoding,
  Credential,
  InstructionLevel,
};

inline constexpr std::size_t kCategoryCount = 7;

// Ordered: comparisons like tier >= SeverityTier::High are meaningful.
// Low stays in the enumeration even though no capability maps to it; the
// veto codomain and intent rule 14 both reference it.
enum class SeverityTier : std::uint8_t {
  Low,
  Medium,
  High,
  Critical,
};

enum class CompoundCategory : std::uint8_t {
  ExfiltrationChain,
  RceChain,
  CodeObfuscation,
  DataLineageViolation,
};

struct UnknownCapabilityError : std::runtime_error {
  explicit UnknownCapabilityError(const std::string& name)
      : std::runtime_error("unknown capability: \"" + name + "\""), offending(name) {}
  std::string offending;
};

SeverityTier severity_of(CapabilityId cap);
CapabilityCategory category_of(CapabilityId cap);
SeverityTier severity_of(CompoundCategory cat);

// Canonical serialized name, e.g. NETWORK_OUTBOUND_HTTP.
std::string_view format_capability(CapabilityId cap);
// Short name as listed per category, e.g. "outbound-http".
std::string_view short_name(CapabilityId cap);
std::string_view describe_capability(CapabilityId cap);

std::string_view format_category(CapabilityCategory cat);
std::string_view format_tier(SeverityTier tier);
std::string_view format_compound(CompoundCategory cat);

// Case-insensitive, hyphen/underscore-equivalent match against the canonical
// name or the short name. Throws UnknownCapabilityError.
CapabilityId parse_capability(std::string_view name);
SeverityTier parse_tier(std::string_view name);

std::array<CapabilityId, kCapabilityCount> all_capabilities();
std::size_t category_size(CapabilityCategory cat);

inline constexpr std::string_view kTaxonomyVersion = "taxonomy/v1";

// Serialized manifest of the taxonomy (name, category, tier, description),
// stable field order. taxonomy_version_hash() is the SHA-256 of this dump.
std::string taxonomy_manifest_json();
std::string taxonomy_version_hash();

// Checks a manifest document against the compiled tables; throws
// std::runtime_error with a diff summary on any mismatch.
void validate_taxonomy_manifest(const std::string& manifest_json);

}  // namespace biv
