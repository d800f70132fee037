#pragma once

#include <memory>
#include <string>
#include <vector>

#include "biv/deviation_engine.hpp"
#include "biv/intent_engine.hpp"
#include "biv/semantic_provider.hpp"

namespace biv {

enum class JudgeLabel { Safe, Mal };

std::string_view format_judge_label(JudgeLabel label);
JudgeLabel parse_judge_label(std::string_view name);  // throws std::invalid_argument

struct JudgeVerdict {
  JudgeLabel label = JudgeLabel::Safe;
  double confidence = 0.5;  // recorded, never gates the binary label
  std::string rationale_digest;
};

// Everything a judge may consult: the tuple, the raw package, and the
// classified deviation list (the eight intent branches inform the judge).
struct JudgeInput {
  const EvidenceTuple* tuple = nullptr;
  const SkillPackage* pkg = nullptr;
  const std::vector<Deviation>* deviations = nullptr;
  const std::vector<IntentAssignment>* intents = nullptr;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string name() const = 0;
  virtual JudgeVerdict judge(const JudgeInput& input) = 0;
};

// Deterministic offline stand-in (not the publication's LLM judge): Mal iff
// some adversarial-branch intent is backed by HIGH evidence.
class RuleFallbackJudge final : public Judge {
 public:
  std::string name() const override { return "rule-fallback"; }
  JudgeVerdict judge(const JudgeInput& input) override;
};

// Replays a recorded judge verdict keyed by package content hash; a missing
// entry degrades to the rule fallback and is flagged on the verdict.
class ProviderJudge final : public Judge {
 public:
  explicit ProviderJudge(SemanticProvider& provider) : provider_(&provider) {}
  std::string name() const override;
  JudgeVerdict judge(const JudgeInput& input) override;
  bool degraded() const { return degraded_; }

 private:
  SemanticProvider* provider_;
  bool degraded_ = false;
};

// Relaxed veto: fires iff a compound flag is set and some undeclared
// capability sits at High or Critical tier. Parameterless.
bool veto(const EvidenceTuple& tuple);

enum class DecisionPath { Agreement, VetoOverride, JudgeOnly, Clear };

std::string_view format_decision_path(DecisionPath path);

struct FinalVerdict {
  JudgeLabel label = JudgeLabel::Safe;  // y^ = V or [judge = Mal]
  bool veto_fired = false;
  JudgeLabel judge_label = JudgeLabel::Safe;
  double judge_confidence = 0.5;
  std::string judge_name;
  DecisionPath path = DecisionPath::Clear;
  std::vector<std::string> decision_path;  // concrete evidence references
  bool judge_degraded = false;             // fallback judge substituted
};

FinalVerdict adjudicate(const JudgeInput& input, Judge& judge);

// Human-readable one-line rendering of a chain (used in decision paths and
// the explain command).
std::string describe_chain(const FlowChain& chain);

}  // namespace biv
