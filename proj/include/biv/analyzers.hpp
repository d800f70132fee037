#pragma once

#include <string>
#include <vector>

#include "biv/actual_track.hpp"
#include "biv/skill_loader.hpp"

namespace biv {

// Per-language deterministic analyzers. Each takes the package's files for its
// language (pointers into SkillPackage::code_files) and returns raw per-site
// detections plus flow chains. `parallel` gates the per-file OpenMP stage; the
// output is identical either way (files are merged in input order).

AnalyzerOutput analyze_python(const std::vector<const SourceDocument*>& files,
                              bool parallel = false);
AnalyzerOutput analyze_jsts(const std::vector<const SourceDocument*>& files,
                            bool parallel = false);
AnalyzerOutput analyze_shell(const std::vector<const SourceDocument*>& files,
                             bool parallel = false);

// Pattern tables as JSON, for the data/ dumps and drift tests.
std::string python_patterns_manifest_json();
std::string jsts_patterns_manifest_json();
std::string shell_patterns_manifest_json();

// Shared by the literal analyzers: within one file's detections, pair the
// first-seen env/file-read source with each network sink, and the first-seen
// network capability with each execute sink.
void add_cooccurrence_chains(const std::vector<Detection>& dets,
                             std::vector<FlowChain>& chains);

}  // namespace biv
