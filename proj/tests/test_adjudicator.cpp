#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "biv/adjudicator.hpp"

using namespace biv;

namespace {

class StubJudge final : public Judge {
 public:
  explicit StubJudge(JudgeLabel label, double confidence = 0.8)
      : label_(label), confidence_(confidence) {}
  std::string name() const override { return "stub"; }
  JudgeVerdict judge(const JudgeInput&) override {
    return {label_, confidence_, "stubbed rationale"};
  }

 private:
  JudgeLabel label_;
  double confidence_;
};

class ThrowingJudge final : public Judge {
 public:
  std::string name() const override { return "thrower"; }
  JudgeVerdict judge(const JudgeInput&) override { throw std::runtime_error("backend down"); }
};

bool has_line_containing(const std::vector<std::string>& lines, std::string_view needle) {
  return std::any_of(lines.begin(), lines.end(), [&](const std::string& line) {
    return line.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("judge label formatting and parsing round-trip") {
  CHECK(format_judge_label(JudgeLabel::Safe) == "Safe");
  CHECK(format_judge_label(JudgeLabel::Mal) == "Mal");
  CHECK(parse_judge_label("Mal") == JudgeLabel::Mal);
  CHECK(parse_judge_label("mal") == JudgeLabel::Mal);
  CHECK(parse_judge_label("malicious") == JudgeLabel::Mal);
  CHECK(parse_judge_label("Safe") == JudgeLabel::Safe);
  CHECK(parse_judge_label("benign") == JudgeLabel::Safe);
  CHECK_THROWS_AS(parse_judge_label("suspicious"), std::invalid_argument);
}

TEST_CASE("veto truth table: 16 compound combinations x 8 severity profiles") {
  // Severity representatives drawn from the category->tier map.
  const std::vector<CapabilityId> critical_caps = {CapabilityId::CredentialRead,
                                                   CapabilityId::InstructionOverride};
  const std::vector<CapabilityId> high_caps = {CapabilityId::NetworkOutboundHttp,
                                               CapabilityId::ProcessExec};
  const std::vector<CapabilityId> medium_caps = {CapabilityId::FileWrite,
                                                 CapabilityId::EncodingBase64};
  for (CapabilityId cap : critical_caps) REQUIRE(severity_of(cap) == SeverityTier::Critical);
  for (CapabilityId cap : high_caps) REQUIRE(severity_of(cap) == SeverityTier::High);
  for (CapabilityId cap : medium_caps) REQUIRE(severity_of(cap) == SeverityTier::Medium);

  std::size_t cases = 0;
  for (unsigned compound_bits = 0; compound_bits < 16; ++compound_bits) {
    for (unsigned profile = 0; profile < 8; ++profile) {
      EvidenceTuple tuple;
      tuple.compound.exfil = (compound_bits & 1u) != 0;
      tuple.compound.rce = (compound_bits & 2u) != 0;
      tuple.compound.obfuscation = (compound_bits & 4u) != 0;
      tuple.compound.lineage = (compound_bits & 8u) != 0;

      const bool with_critical = (profile & 1u) != 0;
      const bool with_high = (profile & 2u) != 0;
      const bool with_medium = (profile & 4u) != 0;
      if (with_critical)
        tuple.actual.insert(critical_caps.begin(), critical_caps.end());
      if (with_high) tuple.actual.insert(high_caps.begin(), high_caps.end());
      if (with_medium) tuple.actual.insert(medium_caps.begin(), medium_caps.end());

      const bool expected = tuple.compound.any() && (with_critical || with_high);
      REQUIRE(veto(tuple) == expected);
      ++cases;
    }
  }
  CHECK(cases == 128);
}

TEST_CASE("veto requires the high-tier capability to be undeclared") {
  EvidenceTuple tuple;
  tuple.compound.exfil = true;
  tuple.actual = {CapabilityId::NetworkOutboundHttp, CapabilityId::FileWrite};
  CHECK(veto(tuple));

  // Declaring the only >=High capability clears the veto; the Medium one
  // remaining undeclared is not enough.
  tuple.declared = {CapabilityId::NetworkOutboundHttp};
  CHECK(!veto(tuple));

  // No compound flag, no veto, however severe the undeclared set is.
  EvidenceTuple quiet;
  quiet.actual = {CapabilityId::CredentialRead, CapabilityId::InstructionOverride};
  CHECK(!veto(quiet));
}

TEST_CASE("adjudicate computes label  = veto OR judge and the four paths") {
  EvidenceTuple veto_tuple;
  veto_tuple.compound.exfil = true;
  veto_tuple.actual = {CapabilityId::EnvAccessSensitive};

  EvidenceTuple quiet_tuple;
  quiet_tuple.actual = {CapabilityId::FileWrite};
  quiet_tuple.declared = {CapabilityId::FileWrite};

  JudgeInput veto_input;
  veto_input.tuple = &veto_tuple;
  JudgeInput quiet_input;
  quiet_input.tuple = &quiet_tuple;

  StubJudge mal(JudgeLabel::Mal, 0.9);
  StubJudge safe(JudgeLabel::Safe, 0.7);

  const FinalVerdict agreement = adjudicate(veto_input, mal);
  CHECK(agreement.label == JudgeLabel::Mal);
  CHECK(agreement.veto_fired);
  CHECK(agreement.judge_label == JudgeLabel::Mal);
  CHECK(agreement.path == DecisionPath::Agreement);

  const FinalVerdict override_case = adjudicate(veto_input, safe);
  CHECK(override_case.label == JudgeLabel::Mal);
  CHECK(override_case.veto_fired);
  CHECK(override_case.judge_label == JudgeLabel::Safe);
  CHECK(override_case.path == DecisionPath::VetoOverride);

  const FinalVerdict judge_only = adjudicate(quiet_input, mal);
  CHECK(judge_only.label == JudgeLabel::Mal);
  CHECK(!judge_only.veto_fired);
  CHECK(judge_only.path == DecisionPath::JudgeOnly);

  const FinalVerdict clear = adjudicate(quiet_input, safe);
  CHECK(clear.label == JudgeLabel::Safe);
  CHECK(!clear.veto_fired);
  CHECK(clear.path == DecisionPath::Clear);

  CHECK(format_decision_path(DecisionPath::Agreement) == "agreement");
  CHECK(format_decision_path(DecisionPath::VetoOverride) == "veto-override");
  CHECK(format_decision_path(DecisionPath::JudgeOnly) == "judge-only");
  CHECK(format_decision_path(DecisionPath::Clear) == "clear");
}

TEST_CASE("judge confidence is recorded but never gates the label") {
  EvidenceTuple quiet;
  JudgeInput input;
  input.tuple = &quiet;
  StubJudge timid_mal(JudgeLabel::Mal, 0.01);
  const FinalVerdict v = adjudicate(input, timid_mal);
  CHECK(v.label == JudgeLabel::Mal);
  CHECK(v.path == DecisionPath::JudgeOnly);
  CHECK(v.judge_confidence == doctest::Approx(0.01));
}

TEST_CASE("adjudicate without a tuple throws") {
  JudgeInput input;
  StubJudge judge(JudgeLabel::Safe);
  CHECK_THROWS_AS(adjudicate(input, judge), std::invalid_argument);
}

TEST_CASE("decision path cites chains, undeclared capabilities, and the judge") {
  EvidenceTuple tuple;
  FlowChain chain;
  chain.source = CapabilityId::EnvAccessSensitive;
  chain.transforms = {CapabilityId::EncodingBase64};
  chain.sink = CapabilityId::NetworkOutboundHttp;
  chain.sites = {{"src/post.py", 15}, {"src/post.py", 16}, {"src/post.py", 17}};
  chain.scope = ChainScope::IntraProcedural;
  chain.source_class = SourceClass::Environment;
  REQUIRE(chain_is_exfil(chain));
  tuple.flows = {chain};
  tuple.compound.exfil = true;
  tuple.actual = {CapabilityId::EnvAccessSensitive, CapabilityId::EncodingBase64,
                  CapabilityId::NetworkOutboundHttp};

  JudgeInput input;
  input.tuple = &tuple;
  StubJudge judge(JudgeLabel::Mal);
  const FinalVerdict v = adjudicate(input, judge);
  REQUIRE(v.veto_fired);
  CHECK(has_line_containing(
      v.decision_path,
      "ExfiltrationChain: ENV_ACCESS_SENSITIVE -> ENCODING_BASE64 -> NETWORK_OUTBOUND_HTTP"));
  CHECK(has_line_containing(v.decision_path,
                            "undeclared High-tier capability ENV_ACCESS_SENSITIVE"));
  CHECK(has_line_containing(v.decision_path,
                            "undeclared High-tier capability NETWORK_OUTBOUND_HTTP"));
  REQUIRE(!v.decision_path.empty());
  CHECK(v.decision_path.back().find("judge(stub) = Mal") != std::string::npos);
  CHECK(v.decision_path.back().find("stubbed rationale") != std::string::npos);
}

TEST_CASE("a compound flag without a matching chain still gets a path line") {
  EvidenceTuple tuple;
  tuple.compound.rce = true;  // flag raised with no chain recorded
  tuple.actual = {CapabilityId::ProcessExec};
  JudgeInput input;
  input.tuple = &tuple;
  StubJudge judge(JudgeLabel::Safe);
  const FinalVerdict v = adjudicate(input, judge);
  REQUIRE(v.veto_fired);
  CHECK(has_line_containing(v.decision_path, "RceChain: flag raised"));
}

TEST_CASE("describe_chain renders hops, sites, and scope") {
  FlowChain chain;
  chain.source = CapabilityId::FileReadSensitive;
  chain.sink = CapabilityId::NetworkOutboundHttp;
  chain.sites = {{"scripts/eval.py", 12}, {"scripts/eval.py", 13}};
  chain.scope = ChainScope::IntraProcedural;
  CHECK(describe_chain(chain) ==
        "FILE_READ_SENSITIVE -> NETWORK_OUTBOUND_HTTP @ scripts/eval.py:12..:13 "
        "[intra-procedural]");

  FlowChain bare;
  bare.source = CapabilityId::EnvAccessSensitive;
  bare.transforms = {CapabilityId::EncodingBase64};
  bare.sink = CapabilityId::NetworkOutboundSocket;
  bare.scope = ChainScope::IntraFileCoOccurrence;
  CHECK(describe_chain(bare) ==
        "ENV_ACCESS_SENSITIVE -> ENCODING_BASE64 -> NETWORK_OUTBOUND_SOCKET "
        "[intra-file-co-occurrence]");
}

TEST_CASE("rule fallback judge: Mal only for adversarial intent with HIGH evidence") {
  RuleFallbackJudge judge;
  CHECK(judge.name() == "rule-fallback");

  EvidenceTuple tuple;
  JudgeInput input;
  input.tuple = &tuple;
  CHECK(judge.judge(input).label == JudgeLabel::Safe);  // null dev/intent lists

  Deviation dev;
  dev.capability = CapabilityId::EnvAccessSensitive;
  dev.kind = DeviationKind::UnderSpecified;
  dev.evidence = EvidenceTier::High;
  std::vector<Deviation> devs = {dev};
  std::vector<IntentAssignment> intents = {{IntentLeaf::A1, 9}};
  input.deviations = &devs;
  input.intents = &intents;

  const JudgeVerdict mal = judge.judge(input);
  CHECK(mal.label == JudgeLabel::Mal);
  CHECK(mal.rationale_digest.find("A1") != std::string::npos);
  CHECK(mal.rationale_digest.find("Credential Theft") != std::string::npos);
  CHECK(mal.rationale_digest.find("ENV_ACCESS_SENSITIVE") != std::string::npos);

  // Same intent at MEDIUM evidence -> Safe.
  devs[0].evidence = EvidenceTier::Medium;
  CHECK(judge.judge(input).label == JudgeLabel::Safe);

  // HIGH evidence but benign-branch intent -> Safe.
  devs[0].evidence = EvidenceTier::High;
  intents[0] = {IntentLeaf::G7, 14};
  CHECK(judge.judge(input).label == JudgeLabel::Safe);
}

TEST_CASE("a throwing judge degrades to the rule fallback") {
  EvidenceTuple tuple;
  JudgeInput input;
  input.tuple = &tuple;
  ThrowingJudge judge;
  const FinalVerdict v = adjudicate(input, judge);
  CHECK(v.judge_degraded);
  CHECK(v.judge_label == JudgeLabel::Safe);
  CHECK(v.label == JudgeLabel::Safe);
  CHECK(has_line_containing(v.decision_path, "judge failed (backend down)"));
  CHECK(has_line_containing(v.decision_path, "rule fallback"));
}

TEST_CASE("provider judge replays recorded verdicts and degrades on a miss") {
  const std::filesystem::path pkg_dir =
      std::filesystem::path(BIV_TEST_DATA_DIR) / "golden" / "trace1";
  const SkillPackage pkg = load_package(pkg_dir);

  ReplayProvider replay(std::filesystem::path(BIV_TEST_DATA_DIR) / "golden" /
                        "trace1.fixtures.json");
  ProviderJudge judge(replay);
  CHECK(judge.name() == "replay-judge");

  JudgeInput input;
  EvidenceTuple tuple;
  input.tuple = &tuple;
  input.pkg = &pkg;
  const JudgeVerdict recorded = judge.judge(input);
  CHECK(!judge.degraded());
  CHECK(recorded.label == JudgeLabel::Mal);
  CHECK(recorded.confidence == doctest::Approx(0.91));

  // Empty fixture: no recorded verdict for this package -> rule fallback.
  ReplayProvider empty{ReplayFixture{}};
  ProviderJudge missing(empty);
  const JudgeVerdict fallback = missing.judge(input);
  CHECK(missing.degraded());
  CHECK(fallback.label == JudgeLabel::Safe);
  CHECK(fallback.rationale_digest.find("provider judge unavailable") != std::string::npos);

  const FinalVerdict v = adjudicate(input, missing);
  CHECK(v.judge_degraded);

  // The null provider has no judge behavior at all.
  NullProvider null_provider;
  ProviderJudge null_judge(null_provider);
  CHECK(null_judge.name() == "null-judge");
  null_judge.judge(input);
  CHECK(null_judge.degraded());
}
