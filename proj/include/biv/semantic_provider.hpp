#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "biv/skill_loader.hpp"
#include "biv/taxonomy.hpp"

namespace biv {

enum class ClaimKind { Declared, ActualInstruction };

std::string_view format_claim_kind(ClaimKind k);
ClaimKind parse_claim_kind(std::string_view name);

struct SemanticClaim {
  CapabilityId capability = CapabilityId::NetworkOutboundHttp;
  std::string quoted_span;  // verbatim quote from the source document
  std::string source_doc;   // relative path of the quoted document
  ClaimKind claim_kind = ClaimKind::Declared;
  double raw_confidence = 0.5;
};

struct ProviderUnavailableError : std::runtime_error {
  explicit ProviderUnavailableError(const std::string& why)
      : std::runtime_error("semantic provider unavailable: " + why) {}
};

struct FixtureMissingError : std::runtime_error {
  explicit FixtureMissingError(const std::string& key)
      : std::runtime_error("replay fixture missing entry for key " + key) {}
};

// Judge entry stored in replay fixtures (consumed by the adjudicator).
struct JudgeFixture {
  std::string label;  // "Safe" | "Mal"
  double confidence = 0.5;
  std::string rationale;
};

class SemanticProvider {
 public:
  virtual ~SemanticProvider() = default;
  virtual std::string mode_name() const = 0;
  // Backend-produced claims, pre-filter.
  virtual std::vector<SemanticClaim> extract_claims(const std::vector<SourceDocument>& docs,
                                                    ClaimKind kind) = 0;
  // Judge behavior carried by the provider, when it has one.
  virtual std::optional<JudgeFixture> judge_package(const SkillPackage& pkg) {
    (void)pkg;
    return std::nullopt;
  }
};

class NullProvider final : public SemanticProvider {
 public:
  std::string mode_name() const override { return "null"; }
  std::vector<SemanticClaim> extract_claims(const std::vector<SourceDocument>&,
                                            ClaimKind) override {
    return {};
  }
};

struct ReplayFixture {
  std::map<std::string, std::vector<SemanticClaim>> claims;  // key: claim_set_key
  std::map<std::string, JudgeFixture> judges;                // key: package content hash
};

ReplayFixture load_fixture_file(const std::filesystem::path& file);
void save_fixture_file(const std::filesystem::path& file, const ReplayFixture& fixture);

class ReplayProvider final : public SemanticProvider {
 public:
  explicit ReplayProvider(const std::filesystem::path& fixture_file);
  explicit ReplayProvider(ReplayFixture fixture);

  std::string mode_name() const override { return "replay"; }
  std::vector<SemanticClaim> extract_claims(const std::vector<SourceDocument>& docs,
                                            ClaimKind kind) override;
  std::optional<JudgeFixture> judge_package(const SkillPackage& pkg) override;

 private:
  ReplayFixture fixture_;
};

struct LiveEndpointConfig {
  std::string url;                              // http(s)://host[:port]/path
  std::string token_env = "BIV_PROVIDER_TOKEN"; // secrets only via environment
  std::string template_dir;                     // hash-versioned prompt templates
};

class LiveProvider final : public SemanticProvider {
 public:
  explicit LiveProvider(LiveEndpointConfig config);
  std::string mode_name() const override { return "live"; }
  std::vector<SemanticClaim> extract_claims(const std::vector<SourceDocument>& docs,
                                            ClaimKind kind) override;
  std::optional<JudgeFixture> judge_package(const SkillPackage& pkg) override;

 private:
  LiveEndpointConfig config_;
  std::string template_hash(const std::string& name) const;
};

// Content-hash key for one extract_claims call: the concatenated normalized
// document texts plus the claim kind.
std::string claim_set_key(const std::vector<SourceDocument>& docs, ClaimKind kind);

// The three hallucination-control filters, applied in order:
// taxonomy-echo rejection (batch-level), substring grounding, keyword quality.
std::vector<SemanticClaim> apply_filters(const std::vector<SemanticClaim>& claims,
                                         const std::vector<SourceDocument>& sources,
                                         std::vector<std::string>* rejection_log = nullptr);

}  // namespace biv
