#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "biv/semantic_provider.hpp"
#include "biv/skill_loader.hpp"

// Re-keys authored claim/judge entries into the replay fixture format. Claim
// batches are keyed by the content hash of the documents the provider would
// see; judges by the package content hash. Authored file schema:
//   { "declared_claims": [{capability, quote, doc, confidence}],
//     "instruction_claims": [...],
//     "judge": {label, confidence, rationale} }

namespace {

std::vector<biv::SemanticClaim> read_claims(const nlohmann::json& arr, biv::ClaimKind kind) {
  std::vector<biv::SemanticClaim> claims;
  for (const auto& item : arr) {
    biv::SemanticClaim c;
    c.capability = biv::parse_capability(item.at("capability").get<std::string>());
    c.quoted_span = item.at("quote").get<std::string>();
    c.source_doc = item.value("doc", "");
    c.claim_kind = kind;
    c.raw_confidence = item.value("confidence", 0.5);
    claims.push_back(std::move(c));
  }
  return claims;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"build replay fixtures from authored claims and judge verdicts"};
  std::string skill_dir, authored_path, out_path;
  bool merge = false;
  app.add_option("--skill", skill_dir, "Skill package directory")->required();
  app.add_option("--authored", authored_path, "Authored claims/judge JSON")->required();
  app.add_option("--out", out_path, "Fixture file to write")->required();
  app.add_flag("--merge", merge, "Merge into an existing fixture file");
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(authored_path);
    if (!in) throw std::runtime_error("cannot read " + authored_path);
    const nlohmann::json authored = nlohmann::json::parse(in);

    const biv::SkillPackage pkg = biv::load_package(skill_dir);

    biv::ReplayFixture fixture;
    if (merge && std::filesystem::exists(out_path))
      fixture = biv::load_fixture_file(out_path);

    if (authored.contains("declared_claims") && !pkg.metadata_docs.empty()) {
      const std::string key = biv::claim_set_key(pkg.metadata_docs, biv::ClaimKind::Declared);
      fixture.claims[key] =
          read_claims(authored["declared_claims"], biv::ClaimKind::Declared);
    }
    if (authored.contains("instruction_claims") && !pkg.instruction_docs.empty()) {
      const std::string key =
          biv::claim_set_key(pkg.instruction_docs, biv::ClaimKind::ActualInstruction);
      fixture.claims[key] =
          read_claims(authored["instruction_claims"], biv::ClaimKind::ActualInstruction);
    }
    if (authored.contains("judge")) {
      biv::JudgeFixture j;
      j.label = authored["judge"].at("label").get<std::string>();
      j.confidence = authored["judge"].value("confidence", 0.5);
      j.rationale = authored["judge"].value("rationale", "");
      fixture.judges[biv::package_content_hash(skill_dir)] = std::move(j);
    }

    biv::save_fixture_file(out_path, fixture);
    std::cout << "wrote " << out_path << " (" << fixture.claims.size() << " claim sets, "
              << fixture.judges.size() << " judges)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
