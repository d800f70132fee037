#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "biv/taxonomy.hpp"

namespace biv::synth {

enum class ChainKind { IntraProcedural, InterProcedural, CoOccurrence };

// Machine ground truth for one planted flow. expected_miss marks dynamic
// dispatch / reflection constructs that static pattern analysis cannot see;
// those are allowed (and expected) to go undetected.
struct GroundTruthChain {
  CapabilityId source;
  CapabilityId sink;
  std::vector<CapabilityId> transforms;  // checked when non-empty
  ChainKind kind = ChainKind::IntraProcedural;
  bool expected_miss = false;
};

struct SynthSkill {
  std::string id;
  std::string template_name;
  std::vector<std::pair<std::string, std::string>> files;  // rel path -> content
  std::vector<GroundTruthChain> chains;
  bool malicious = false;  // planted intent, used as the benchmark label
};

// Deterministic for a given (seed, count): templates cycle with seeded
// identifier/host/path variations.
std::vector<SynthSkill> generate_corpus(std::uint64_t seed, std::size_t count);

void write_corpus(const std::filesystem::path& root, const std::vector<SynthSkill>& corpus);

// labels.tsv rows: "<id>\t<malicious|benign>\tsynthetic"
void write_labels(const std::filesystem::path& file, const std::vector<SynthSkill>& corpus);

}  // namespace biv::synth
