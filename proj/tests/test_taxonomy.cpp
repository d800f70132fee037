#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "biv/taxonomy.hpp"

using namespace biv;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("taxonomy has exactly 29 capabilities across 7 categories") {
  const auto caps = all_capabilities();
  CHECK(caps.size() == kCapabilityCount);
  CHECK(kCapabilityCount == 29);

  std::set<CapabilityId> unique(caps.begin(), caps.end());
  CHECK(unique.size() == 29);

  CHECK(category_size(CapabilityCategory::Network) == 4);
  CHECK(category_size(CapabilityCategory::Filesystem) == 7);
  CHECK(category_size(CapabilityCategory::ProcessExec) == 4);
  CHECK(category_size(CapabilityCategory::Environment) == 3);
  CHECK(category_size(CapabilityCategory::Encoding) == 3);
  CHECK(category_size(CapabilityCategory::Credential) == 3);
  CHECK(category_size(CapabilityCategory::InstructionLevel) == 5);

  std::size_t total = 0;
  for (auto cat : {CapabilityCategory::Network, CapabilityCategory::Filesystem,
                   CapabilityCategory::ProcessExec, CapabilityCategory::Environment,
                   CapabilityCategory::Encoding, CapabilityCategory::Credential,
                   CapabilityCategory::InstructionLevel})
    total += category_size(cat);
  CHECK(total == 29);
}

TEST_CASE("severity is a function of category alone") {
  for (CapabilityId cap : all_capabilities()) {
    const SeverityTier tier = severity_of(cap);
    switch (category_of(cap)) {
      case CapabilityCategory::Credential:
      case CapabilityCategory::InstructionLevel:
        CHECK(tier == SeverityTier::Critical);
        break;
      case CapabilityCategory::Network:
      case CapabilityCategory::ProcessExec:
      case CapabilityCategory::Environment:
        CHECK(tier == SeverityTier::High);
        break;
      case CapabilityCategory::Filesystem:
      case CapabilityCategory::Encoding:
        CHECK(tier == SeverityTier::Medium);
        break;
    }
  }
}

TEST_CASE("Low tier is retained but assigned to no capability") {
  for (CapabilityId cap : all_capabilities()) CHECK(severity_of(cap) != SeverityTier::Low);
  CHECK(SeverityTier::Low < SeverityTier::Medium);
  CHECK(parse_tier("Low") == SeverityTier::Low);
}

TEST_CASE("tier ordering supports >= comparisons") {
  CHECK(SeverityTier::Critical > SeverityTier::High);
  CHECK(SeverityTier::High > SeverityTier::Medium);
  CHECK(SeverityTier::Medium > SeverityTier::Low);
}

TEST_CASE("compound categories carry fixed tiers") {
  CHECK(severity_of(CompoundCategory::ExfiltrationChain) == SeverityTier::Critical);
  CHECK(severity_of(CompoundCategory::RceChain) == SeverityTier::Critical);
  CHECK(severity_of(CompoundCategory::CodeObfuscation) == SeverityTier::Critical);
  CHECK(severity_of(CompoundCategory::DataLineageViolation) == SeverityTier::High);
}

TEST_CASE("canonical names round-trip through parse_capability") {
  for (CapabilityId cap : all_capabilities()) {
    CHECK(parse_capability(format_capability(cap)) == cap);
    CHECK(parse_capability(short_name(cap)) == cap);
  }
}

TEST_CASE("parsing is case-insensitive and hyphen/underscore-equivalent") {
  CHECK(parse_capability("network_outbound_http") == CapabilityId::NetworkOutboundHttp);
  CHECK(parse_capability("NETWORK-OUTBOUND-HTTP") == CapabilityId::NetworkOutboundHttp);
  CHECK(parse_capability("outbound-http") == CapabilityId::NetworkOutboundHttp);
  CHECK(parse_capability("OUTBOUND_HTTP") == CapabilityId::NetworkOutboundHttp);
  CHECK(parse_capability("env-access-sensitive") == CapabilityId::EnvAccessSensitive);
  CHECK(parse_capability("exfiltration-instruction") == CapabilityId::ExfiltrationInstruction);
  CHECK_THROWS_AS(parse_capability("network"), UnknownCapabilityError);
  CHECK_THROWS_AS(parse_capability(""), UnknownCapabilityError);
}

TEST_CASE("serialized names are upper-snake-case") {
  for (CapabilityId cap : all_capabilities()) {
    const std::string_view name = format_capability(cap);
    CHECK(!name.empty());
    for (char c : name) {
      const bool ok = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
      CHECK(ok);
    }
  }
  CHECK(format_capability(CapabilityId::NetworkOutboundHttp) == "NETWORK_OUTBOUND_HTTP");
  CHECK(format_capability(CapabilityId::FileReadSensitive) == "FILE_READ_SENSITIVE");
  CHECK(format_capability(CapabilityId::EncodingBase64) == "ENCODING_BASE64");
}

TEST_CASE("manifest JSON is stable and self-validating") {
  const std::string manifest = taxonomy_manifest_json();
  CHECK(manifest == taxonomy_manifest_json());
  CHECK(manifest.find("taxonomy/v1") != std::string::npos);
  CHECK_NOTHROW(validate_taxonomy_manifest(manifest));

  const std::string hash = taxonomy_version_hash();
  CHECK(hash.size() == 64);
  CHECK(hash == taxonomy_version_hash());
}

TEST_CASE("validate_taxonomy_manifest rejects drifted documents") {
  std::string tampered = taxonomy_manifest_json();
  const auto pos = tampered.find("NETWORK_OUTBOUND_HTTP");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 21, "NETWORK_OUTBOUND_HTTQ");
  CHECK_THROWS_AS(validate_taxonomy_manifest(tampered), std::runtime_error);
}

TEST_CASE("committed taxonomy dump matches the compiled tables") {
  const std::string committed = read_file(std::string(BIV_REPO_DIR) + "/data/taxonomy-v1.json");
  CHECK(committed == taxonomy_manifest_json());
  CHECK_NOTHROW(validate_taxonomy_manifest(committed));
}
