#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "biv/analyzers.hpp"
#include "biv/intent_engine.hpp"
#include "biv/patterns.hpp"
#include "biv/semantic_provider.hpp"
#include "biv/skill_loader.hpp"
#include "biv/taxonomy.hpp"
#include <nlohmann/json.hpp>

using namespace biv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path data_dir() { return fs::path(BIV_REPO_DIR) / "data"; }
fs::path golden_dir() { return fs::path(BIV_TEST_DATA_DIR) / "golden"; }

void check_committed(const std::string& runtime_json, const std::string& file_name) {
  const auto runtime = nlohmann::json::parse(runtime_json);
  const auto committed = nlohmann::json::parse(slurp(data_dir() / file_name));
  CHECK_MESSAGE(runtime == committed,
                file_name << " drifted from the compiled tables; regenerate it");
}

}  // namespace

TEST_CASE("shipped data files match the compiled manifests") {
  check_committed(taxonomy_manifest_json(), "taxonomy-v1.json");
  check_committed(patterns_manifest_json(), "patterns-v1.json");
  check_committed(rules_manifest_json(), "rules-v1.json");
  check_committed(motifs_manifest_json(), "motifs-v1.json");
  check_committed(python_patterns_manifest_json(), "python-v1.json");
  check_committed(jsts_patterns_manifest_json(), "jsts-v1.json");
  check_committed(shell_patterns_manifest_json(), "shell-v1.json");
}

TEST_CASE("taxonomy manifest validates against the compiled tables") {
  validate_taxonomy_manifest(taxonomy_manifest_json());
  validate_taxonomy_manifest(slurp(data_dir() / "taxonomy-v1.json"));

  auto doc = nlohmann::json::parse(taxonomy_manifest_json());
  SUBCASE("version drift is rejected") {
    doc["version"] = "taxonomy/v2";
    CHECK_THROWS_AS(validate_taxonomy_manifest(doc.dump()), std::runtime_error);
  }
  SUBCASE("a dropped capability is rejected") {
    doc["capabilities"].erase(0);
    CHECK_THROWS_AS(validate_taxonomy_manifest(doc.dump()), std::runtime_error);
  }
  SUBCASE("a tier edit is rejected") {
    doc["capabilities"][0]["tier"] = "Low";
    CHECK_THROWS_AS(validate_taxonomy_manifest(doc.dump()), std::runtime_error);
  }
  SUBCASE("a category edit is rejected") {
    doc["capabilities"][0]["category"] = "Filesystem";
    CHECK_THROWS_AS(validate_taxonomy_manifest(doc.dump()), std::runtime_error);
  }
}

TEST_CASE("manifests embed their version strings") {
  CHECK(nlohmann::json::parse(taxonomy_manifest_json())["version"] == "taxonomy/v1");
  CHECK(nlohmann::json::parse(rules_manifest_json())["version"] == "intent-rules/v1");
  CHECK(nlohmann::json::parse(motifs_manifest_json())["version"] == "motifs/v1");
  CHECK(python_patterns_manifest_json().find("py-patterns/v1") != std::string::npos);
  CHECK(jsts_patterns_manifest_json().find("jsts-patterns/v1") != std::string::npos);
  CHECK(shell_patterns_manifest_json().find("shell-patterns/v1") != std::string::npos);
}

TEST_CASE("golden fixture keys are reachable from the committed packages") {
  for (const std::string trace : {"trace1", "trace2", "figure_trace"}) {
    CAPTURE(trace);
    const SkillPackage pkg = load_package(golden_dir() / trace);
    const auto fixtures = nlohmann::json::parse(slurp(golden_dir() / (trace + ".fixtures.json")));

    // Every extract_claims call the scan makes must hit a recorded entry.
    const std::string declared_key = claim_set_key(pkg.metadata_docs, ClaimKind::Declared);
    const std::string instruction_key =
        claim_set_key(pkg.instruction_docs, ClaimKind::ActualInstruction);
    CHECK_MESSAGE(fixtures["claims"].contains(declared_key),
                  "declared-claims key drifted for " << trace << ": " << declared_key);
    CHECK_MESSAGE(fixtures["claims"].contains(instruction_key),
                  "instruction-claims key drifted for " << trace << ": " << instruction_key);

    const std::string judge_key = package_content_hash(golden_dir() / trace);
    CHECK_MESSAGE(fixtures["judges"].contains(judge_key),
                  "judge key drifted for " << trace << ": " << judge_key);
  }
}

TEST_CASE("fixture files round-trip through the loader") {
  for (const std::string trace : {"trace1", "trace2", "figure_trace"}) {
    const fs::path file = golden_dir() / (trace + ".fixtures.json");
    const ReplayFixture fixture = load_fixture_file(file);
    CHECK(!fixture.judges.empty());

    const fs::path copy =
        fs::temp_directory_path() / ("biv_fixture_roundtrip_" + trace + ".json");
    save_fixture_file(copy, fixture);
    const ReplayFixture reloaded = load_fixture_file(copy);
    fs::remove(copy);

    CHECK(reloaded.claims.size() == fixture.claims.size());
    REQUIRE(reloaded.judges.size() == fixture.judges.size());
    for (const auto& [key, judge] : fixture.judges) {
      REQUIRE(reloaded.judges.count(key) == 1);
      CHECK(reloaded.judges.at(key).label == judge.label);
      CHECK(reloaded.judges.at(key).confidence == judge.confidence);
      CHECK(reloaded.judges.at(key).rationale == judge.rationale);
    }
  }
}
