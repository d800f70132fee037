#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "biv/actual_track.hpp"
#include "biv/adjudicator.hpp"
#include "biv/declared_track.hpp"
#include "biv/deviation_engine.hpp"
#include "biv/intent_engine.hpp"
#include "biv/semantic_provider.hpp"
#include "biv/skill_loader.hpp"

namespace biv {

struct ScanConfig {
  std::string provider_mode = "null";  // null | replay | live
  std::filesystem::path fixtures;      // replay fixture file
  std::string live_url;                // live endpoint base URL
  bool parallel_files = false;         // per-file analyzer stage
};

// null -> NullProvider; replay -> ReplayProvider(fixtures); live ->
// LiveProvider(live_url). Throws std::runtime_error on unknown mode.
std::unique_ptr<SemanticProvider> make_provider(const ScanConfig& config);

// null mode gets the deterministic rule fallback; replay/live wrap the
// provider's judge (missing entries degrade to the fallback, flagged).
std::unique_ptr<Judge> make_judge(const ScanConfig& config, SemanticProvider& provider);

// Complete in-memory result for one skill.
struct SkillScan {
  SkillPackage pkg;
  std::string content_hash;
  DeclaredResult declared;
  ActualResult actual;
  EvidenceTuple tuple;
  std::vector<Deviation> deviations;
  std::vector<IntentAssignment> intents;
  std::vector<std::string> motifs;
  TriageTier triage = TriageTier::Clean;
  FinalVerdict verdict;
  std::string provider_mode;
  std::vector<std::string> warnings;  // loader + both tracks + judge degradation
};

SkillScan scan_skill(const std::filesystem::path& dir, SemanticProvider& provider,
                     Judge& judge, bool parallel_files = false);

// True when the directory looks like a single skill package root.
bool is_skill_dir(const std::filesystem::path& dir);

// Skill directories under root (root itself when it is one), sorted by path.
std::vector<std::filesystem::path> enumerate_skill_dirs(const std::filesystem::path& root);

// Serial reference implementation: one provider/judge pair, skills in order.
std::vector<SkillScan> scan_corpus_serial(const std::filesystem::path& root,
                                          const ScanConfig& config);

// OpenMP corpus scan; jobs <= 1 falls back to the serial reference. Output is
// identical to scan_corpus_serial (reports ordered by skill directory).
std::vector<SkillScan> scan_corpus(const std::filesystem::path& root, const ScanConfig& config,
                                   int jobs);

}  // namespace biv
