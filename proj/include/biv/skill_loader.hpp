#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "biv/taxonomy.hpp"

namespace biv {

enum class Modality { Metadata, Code, Instruction, Other };

enum class LanguageTag { Python, JavascriptTypescript, Shell, Markdown, Yaml, Json, Other };

std::string_view format_modality(Modality m);
std::string_view format_language(LanguageTag t);

// One content span of one physical file. A file with YAML frontmatter yields
// two documents (metadata head, instruction body) plus one extra instruction
// document per runtime directive found inside metadata values.
struct SourceDocument {
  std::string path;      // relative to the package root
  Modality modality = Modality::Other;
  LanguageTag language_tag = LanguageTag::Other;
  std::string text;      // full span content
  std::size_t start_line = 1;  // 1-based line of the span start in the file
  bool lossy = false;    // invalid bytes were replaced during decode

  // 1-based line in the physical file for a byte offset into text.
  std::size_t line_at(std::size_t offset) const;
};

struct SkillPackage {
  std::string id;
  std::filesystem::path root;
  std::vector<SourceDocument> metadata_docs;    // M
  std::vector<SourceDocument> code_files;       // C
  std::vector<SourceDocument> instruction_docs; // I
  std::vector<SourceDocument> other_files;      // binaries, unclassifiable
  std::vector<std::string> warnings;
};

struct EmptyPackageError : std::runtime_error {
  explicit EmptyPackageError(const std::string& dir)
      : std::runtime_error("package directory contains no files: " + dir) {}
};

struct ModalitySpan {
  Modality modality;
  std::size_t begin = 0;  // byte offsets into the decoded file content
  std::size_t end = 0;
};

// Content-based modality split for one file. Spans of the primary partition
// cover the whole content; directive spans (metadata values carrying runtime
// directives) are emitted additionally and may overlap the metadata span.
std::vector<ModalitySpan> classify_modality(const std::filesystem::path& doc_path,
                                            const std::string& content);

// True when the file name is a recognized structured-manifest source.
bool is_manifest_file(const std::filesystem::path& path);

LanguageTag language_of(const std::filesystem::path& path);

// Decodes bytes as UTF-8, replacing invalid sequences with U+FFFD.
// Sets lossy when any replacement happened.
std::string decode_utf8_lossy(const std::string& bytes, bool& lossy);

SkillPackage load_package(const std::filesystem::path& dir);

// Hash over sorted relative paths and raw file bytes; keys judge fixtures.
std::string package_content_hash(const std::filesystem::path& dir);

}  // namespace biv
