#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "biv/deviation_engine.hpp"

using namespace biv;

namespace {

std::set<CapabilityId> random_subset(std::mt19937& rng) {
  std::uniform_int_distribution<int> coin(0, 3);
  std::set<CapabilityId> out;
  for (CapabilityId cap : all_capabilities())
    if (coin(rng) == 0) out.insert(cap);
  return out;
}

DeclaredResult as_declared(const std::set<CapabilityId>& set) {
  DeclaredResult d;
  d.set = set;
  for (CapabilityId cap : set)
    d.provenance.push_back({cap, DeclarationSource::ManifestField, "skill.yaml#capabilities",
                            DeclarationConfidence::Deterministic});
  return d;
}

ActualResult as_actual(const std::set<CapabilityId>& set) {
  ActualResult a;
  a.set = set;
  for (CapabilityId cap : set) {
    Detection det;
    det.capability = cap;
    det.file = "src/x.py";
    det.line = 3;
    det.evidence = "evidence()";
    det.analyzer = AnalyzerKind::PythonAst;
    det.sites = {Site{"src/x.py", 3}};
    a.detections.push_back(std::move(det));
  }
  return a;
}

FlowChain lineage_chain(CapabilityId source, CapabilityId sink) {
  FlowChain c;
  c.source = source;
  c.sink = sink;
  c.sites = {Site{"src/x.py", 1}, Site{"src/x.py", 2}};
  c.scope = ChainScope::IntraProcedural;
  c.source_class = SourceClass::FileRead;
  return c;
}

}  // namespace

TEST_CASE("U and O match the set-difference oracle over 10000 random pairs") {
  std::mt19937 rng(1337);
  for (int iter = 0; iter < 10000; ++iter) {
    const std::set<CapabilityId> d_set = random_subset(rng);
    const std::set<CapabilityId> a_set = random_subset(rng);
    const EvidenceTuple tuple = build_tuple(as_declared(d_set), as_actual(a_set));

    // Oracle: element-wise membership, computed without set algorithms.
    std::set<CapabilityId> u_expected, o_expected;
    for (CapabilityId cap : all_capabilities()) {
      if (a_set.count(cap) && !d_set.count(cap)) u_expected.insert(cap);
      if (d_set.count(cap) && !a_set.count(cap)) o_expected.insert(cap);
    }
    REQUIRE(under_specified(tuple) == u_expected);
    REQUIRE(over_specified(tuple) == o_expected);
  }
}

TEST_CASE("U and O are disjoint and bounded by their tracks") {
  std::mt19937 rng(7);
  for (int iter = 0; iter < 500; ++iter) {
    const EvidenceTuple tuple =
        build_tuple(as_declared(random_subset(rng)), as_actual(random_subset(rng)));
    const auto u = under_specified(tuple);
    const auto o = over_specified(tuple);
    for (CapabilityId cap : u) {
      CHECK(tuple.actual.count(cap) == 1);
      CHECK(o.count(cap) == 0);
    }
    for (CapabilityId cap : o) CHECK(tuple.declared.count(cap) == 1);
  }
}

TEST_CASE("build_tuple copies both sets, flows, and compound flags") {
  DeclaredResult d = as_declared({CapabilityId::NetworkOutboundHttp});
  ActualResult a = as_actual({CapabilityId::EnvAccessSensitive});
  a.compound.exfil = true;
  FlowChain chain = lineage_chain(CapabilityId::EnvAccessSensitive,
                                  CapabilityId::NetworkOutboundHttp);
  chain.source_class = SourceClass::Environment;
  a.chains.push_back(chain);

  const EvidenceTuple tuple = build_tuple(d, a);
  CHECK(tuple.declared == d.set);
  CHECK(tuple.actual == a.set);
  REQUIRE(tuple.flows.size() == 1);
  CHECK(tuple.compound.exfil);
}

TEST_CASE("lineage flag stands only when the chain source is undeclared") {
  // file-read -> file-write pipeline, lineage-shaped.
  ActualResult a = as_actual({CapabilityId::FileReadProject, CapabilityId::FileWrite});
  a.chains.push_back(lineage_chain(CapabilityId::FileReadProject, CapabilityId::FileWrite));
  a.compound = detect_compound(a.chains, a.detections);
  REQUIRE(a.compound.lineage);

  // Undeclared source: the flag survives tuple refinement.
  const EvidenceTuple undeclared = build_tuple(as_declared({}), a);
  CHECK(undeclared.compound.lineage);

  // Declared source: the pipeline is sanctioned, the flag is cleared.
  const EvidenceTuple declared =
      build_tuple(as_declared({CapabilityId::FileReadProject}), a);
  CHECK(!declared.compound.lineage);

  // Other flags are never touched by the refinement.
  CHECK(declared.compound.exfil == a.compound.exfil);
  CHECK(declared.compound.rce == a.compound.rce);
  CHECK(declared.compound.obfuscation == a.compound.obfuscation);
}

TEST_CASE("deviations order under-specified first, each in taxonomy order") {
  const std::set<CapabilityId> d_set = {CapabilityId::NetworkOutboundHttp,
                                        CapabilityId::FileDelete};
  const std::set<CapabilityId> a_set = {CapabilityId::EnvAccessSensitive,
                                        CapabilityId::EncodingBase64,
                                        CapabilityId::CredentialRead};
  DeclaredResult d = as_declared(d_set);
  ActualResult a = as_actual(a_set);
  SkillPackage pkg;
  const EvidenceTuple tuple = build_tuple(d, a);
  const auto devs = compute_deviations(tuple, d, a, pkg);

  REQUIRE(devs.size() == 5);
  CHECK(devs[0].capability == CapabilityId::EnvAccessSensitive);
  CHECK(devs[0].kind == DeviationKind::UnderSpecified);
  CHECK(devs[1].capability == CapabilityId::EncodingBase64);
  CHECK(devs[2].capability == CapabilityId::CredentialRead);
  CHECK(devs[3].capability == CapabilityId::NetworkOutboundHttp);
  CHECK(devs[3].kind == DeviationKind::OverSpecified);
  CHECK(devs[4].capability == CapabilityId::FileDelete);

  // Deterministic: same inputs, same output.
  const auto again = compute_deviations(tuple, d, a, pkg);
  REQUIRE(again.size() == devs.size());
  for (std::size_t i = 0; i < devs.size(); ++i) {
    CHECK(again[i].capability == devs[i].capability);
    CHECK(again[i].rationale == devs[i].rationale);
  }
}

TEST_CASE("under-specified evidence tiers follow the analyzer kind") {
  DeclaredResult d = as_declared({});
  SkillPackage pkg;

  // Code-analyzer detection: HIGH.
  {
    ActualResult a = as_actual({CapabilityId::ProcessExec});
    const EvidenceTuple tuple = build_tuple(d, a);
    const auto devs = compute_deviations(tuple, d, a, pkg);
    REQUIRE(devs.size() == 1);
    CHECK(devs[0].evidence == EvidenceTier::High);
    CHECK(devs[0].tier == SeverityTier::High);  // risk tier of process-exec
    REQUIRE(!devs[0].sites.empty());
  }

  // Instruction-claim-only detection: MEDIUM.
  {
    ActualResult a;
    a.set = {CapabilityId::ExfiltrationInstruction};
    Detection det;
    det.capability = CapabilityId::ExfiltrationInstruction;
    det.file = "SKILL.md";
    det.line = 9;
    det.analyzer = AnalyzerKind::InstructionClaim;
    det.sites = {Site{"SKILL.md", 9}};
    a.detections.push_back(det);
    const EvidenceTuple tuple = build_tuple(d, a);
    const auto devs = compute_deviations(tuple, d, a, pkg);
    REQUIRE(devs.size() == 1);
    CHECK(devs[0].evidence == EvidenceTier::Medium);
  }

  // Claim grounded only in a lossily-decoded document: LOW.
  {
    SkillPackage lossy_pkg;
    SourceDocument doc;
    doc.path = "SKILL.md";
    doc.modality = Modality::Instruction;
    doc.lossy = true;
    doc.text = "garbled";
    lossy_pkg.instruction_docs.push_back(doc);

    ActualResult a;
    a.set = {CapabilityId::ExfiltrationInstruction};
    Detection det;
    det.capability = CapabilityId::ExfiltrationInstruction;
    det.file = "SKILL.md";
    det.line = 1;
    det.analyzer = AnalyzerKind::InstructionClaim;
    det.sites = {Site{"SKILL.md", 1}};
    a.detections.push_back(det);
    const EvidenceTuple tuple = build_tuple(d, a);
    const auto devs = compute_deviations(tuple, d, a, lossy_pkg);
    REQUIRE(devs.size() == 1);
    CHECK(devs[0].evidence == EvidenceTier::Low);
  }
}

TEST_CASE("over-specified tiers follow the declaration source") {
  ActualResult a = as_actual({});
  SkillPackage pkg;

  // Manifest-field declaration: MEDIUM.
  {
    DeclaredResult d = as_declared({CapabilityId::FileWrite});
    const EvidenceTuple tuple = build_tuple(d, a);
    const auto devs = compute_deviations(tuple, d, a, pkg);
    REQUIRE(devs.size() == 1);
    CHECK(devs[0].kind == DeviationKind::OverSpecified);
    CHECK(devs[0].evidence == EvidenceTier::Medium);
    CHECK(devs[0].rationale.find("never detected") != std::string::npos);
  }

  // Free-text claim declaration: LOW.
  {
    DeclaredResult d;
    d.set = {CapabilityId::FileWrite};
    d.provenance.push_back({CapabilityId::FileWrite, DeclarationSource::SemanticClaim,
                            "writes output files", DeclarationConfidence::FilteredClaim});
    const EvidenceTuple tuple = build_tuple(d, a);
    const auto devs = compute_deviations(tuple, d, a, pkg);
    REQUIRE(devs.size() == 1);
    CHECK(devs[0].evidence == EvidenceTier::Low);
  }
}

TEST_CASE("mixed analyzer and claim evidence keeps the HIGH tier") {
  DeclaredResult d = as_declared({});
  SkillPackage pkg;
  ActualResult a = as_actual({CapabilityId::EnvAccessSensitive});
  Detection claim_det;
  claim_det.capability = CapabilityId::EnvAccessSensitive;
  claim_det.file = "SKILL.md";
  claim_det.line = 4;
  claim_det.analyzer = AnalyzerKind::InstructionClaim;
  claim_det.sites = {Site{"SKILL.md", 4}};
  a.detections.push_back(claim_det);

  const EvidenceTuple tuple = build_tuple(d, a);
  const auto devs = compute_deviations(tuple, d, a, pkg);
  REQUIRE(devs.size() == 1);
  CHECK(devs[0].evidence == EvidenceTier::High);
  CHECK(devs[0].sites.size() == 2);  // union of both detections' sites
}
