#include "biv/skill_loader.hpp"

#include <yaml-cpp/yaml.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "biv/patterns.hpp"
#include "biv/text.hpp"

namespace fs = std::filesystem;

namespace biv {

namespace {

constexpr std::string_view kCodeExtensions[] = {".py",  ".js",   ".mjs", ".cjs", ".ts",
                                                ".tsx", ".sh",   ".bash", ".zsh"};

constexpr std::string_view kManifestNames[] = {"skill.yaml", "skill.yml", "tool.json", "api.json"};

bool has_code_extension(const fs::path& path) {
  const std::string ext = to_lower(path.extension().string());
  for (auto e : kCodeExtensions) {
    if (ext == e) return true;
  }
  return false;
}

bool looks_binary(const std::string& bytes) {
  const std::size_t probe = std::min<std::size_t>(bytes.size(), 8192);
  return bytes.find('\0') < probe;
}

std::string read_file_bytes(const fs::path& path, bool& ok) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ok = false;
    return {};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  ok = in.good() || in.eof();
  return buf.str();
}

// Byte range of the leading frontmatter block (--- fences inclusive),
// or (0,0) when there is none.
std::pair<std::size_t, std::size_t> frontmatter_range(const std::string& content) {
  if (content.rfind("---", 0) != 0) return {0, 0};
  std::size_t first_eol = content.find('\n');
  if (first_eol == std::string::npos) return {0, 0};
  // The opening fence line must be exactly "---" (ignoring trailing CR).
  std::string_view head(content.data(), first_eol);
  if (!head.empty() && head.back() == '\r') head.remove_suffix(1);
  if (head != "---") return {0, 0};
  std::size_t pos = first_eol + 1;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    std::size_t line_end = eol == std::string::npos ? content.size() : eol;
    std::string_view line(content.data() + pos, line_end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line == "---" || line == "...") {
      return {0, eol == std::string::npos ? content.size() : eol + 1};
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  return {0, 0};
}

// Sentence segments of a metadata span that carry runtime-directive phrases.
std::vector<ModalitySpan> directive_spans(const std::string& content, std::size_t begin,
                                          std::size_t end) {
  std::vector<ModalitySpan> out;
  std::size_t seg_start = begin;
  for (std::size_t i = begin; i <= end; ++i) {
    const bool boundary = i == end || content[i] == '.' || content[i] == '!' ||
                          content[i] == '?' || content[i] == '\n';
    if (!boundary) continue;
    std::size_t seg_end = i < end ? i + 1 : end;
    std::string_view segment(content.data() + seg_start, seg_end - seg_start);
    const auto seg_tokens = ground_tokens(segment);
    if (!seg_tokens.empty()) {
      for (const auto& phrase : patterns().directive_phrases) {
        if (tokens_contain(seg_tokens, ground_tokens(phrase))) {
          out.push_back({Modality::Instruction, seg_start, seg_end});
          break;
        }
      }
    }
    seg_start = seg_end;
  }
  return out;
}

std::string manifest_name_field(const fs::path& root, std::vector<std::string>& warnings) {
  for (auto name : {"skill.yaml", "skill.yml"}) {
    const fs::path p = root / name;
    if (!fs::exists(p)) continue;
    try {
      YAML::Node doc = YAML::LoadFile(p.string());
      if (doc["name"] && doc["name"].IsScalar()) return doc["name"].as<std::string>();
    } catch (const std::exception& e) {
      warnings.push_back(std::string("malformed manifest ") + name + ": " + e.what());
    }
  }
  const fs::path tool = root / "tool.json";
  if (fs::exists(tool)) {
    bool ok = true;
    const std::string bytes = read_file_bytes(tool, ok);
    if (ok) {
      auto doc = nlohmann::json::parse(bytes, nullptr, false);
      if (doc.is_object() && doc.contains("name") && doc["name"].is_string()) {
        return doc["name"].get<std::string>();
      }
    }
  }
  return {};
}

}  // namespace

std::string_view format_modality(Modality m) {
  switch (m) {
    case Modality::Metadata: return "metadata";
    case Modality::Code: return "code";
    case Modality::Instruction: return "instruction";
    case Modality::Other: return "other";
  }
  return "other";
}

std::string_view format_language(LanguageTag t) {
  switch (t) {
    case LanguageTag::Python: return "python";
    case LanguageTag::JavascriptTypescript: return "javascript-typescript";
    case LanguageTag::Shell: return "shell";
    case LanguageTag::Markdown: return "markdown";
    case LanguageTag::Yaml: return "yaml";
    case LanguageTag::Json: return "json";
    case LanguageTag::Other: return "other";
  }
  return "other";
}

std::size_t SourceDocument::line_at(std::size_t offset) const {
  offset = std::min(offset, text.size());
  return start_line + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

bool is_manifest_file(const fs::path& path) {
  const std::string name = to_lower(path.filename().string());
  for (auto m : kManifestNames) {
    if (name == m) return true;
  }
  return false;
}

LanguageTag language_of(const fs::path& path) {
  const std::string ext = to_lower(path.extension().string());
  if (ext == ".py") return LanguageTag::Python;
  if (ext == ".js" || ext == ".mjs" || ext == ".cjs" || ext == ".ts" || ext == ".tsx") {
    return LanguageTag::JavascriptTypescript;
  }
  if (ext == ".sh" || ext == ".bash" || ext == ".zsh") return LanguageTag::Shell;
  if (ext == ".md" || ext == ".markdown") return LanguageTag::Markdown;
  if (ext == ".yaml" || ext == ".yml") return LanguageTag::Yaml;
  if (ext == ".json") return LanguageTag::Json;
  return LanguageTag::Other;
}

std::string decode_utf8_lossy(const std::string& bytes, bool& lossy) {
  lossy = false;
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  const auto bad = [&] {
    lossy = true;
    out += "\xEF\xBF\xBD";  // U+FFFD
  };
  while (i < bytes.size()) {
    const unsigned char c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    if (c < 0x80) {
      out.push_back(bytes[i++]);
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
    } else {
      bad();
      ++i;
      continue;
    }
    if (i + len > bytes.size()) {
      bad();
      ++i;
      continue;
    }
    bool valid = true;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(bytes[i + k]) & 0xC0) != 0x80) valid = false;
    }
    if (!valid) {
      bad();
      ++i;
      continue;
    }
    out.append(bytes, i, len);
    i += len;
  }
  return out;
}

std::vector<ModalitySpan> classify_modality(const fs::path& doc_path, const std::string& content) {
  std::vector<ModalitySpan> spans;
  const LanguageTag lang = language_of(doc_path);

  if (has_code_extension(doc_path)) {
    spans.push_back({Modality::Code, 0, content.size()});
    return spans;
  }
  if (is_manifest_file(doc_path)) {
    spans.push_back({Modality::Metadata, 0, content.size()});
    auto directives = directive_spans(content, 0, content.size());
    spans.insert(spans.end(), directives.begin(), directives.end());
    return spans;
  }
  if (lang == LanguageTag::Markdown) {
    const auto [fm_begin, fm_end] = frontmatter_range(content);
    if (fm_end > fm_begin) {
      spans.push_back({Modality::Metadata, fm_begin, fm_end});
      auto directives = directive_spans(content, fm_begin, fm_end);
      spans.insert(spans.end(), directives.begin(), directives.end());
      if (fm_end < content.size()) {
        spans.push_back({Modality::Instruction, fm_end, content.size()});
      }
    } else {
      spans.push_back({Modality::Instruction, 0, content.size()});
    }
    return spans;
  }
  if (lang == LanguageTag::Yaml || lang == LanguageTag::Json) {
    spans.push_back({Modality::Metadata, 0, content.size()});
    return spans;
  }
  if (lang == LanguageTag::Other) {
    const std::string ext = to_lower(doc_path.extension().string());
    if (ext == ".txt" || ext == ".rst" || ext.empty()) {
      spans.push_back({Modality::Instruction, 0, content.size()});
      return spans;
    }
    spans.push_back({Modality::Other, 0, content.size()});
    return spans;
  }
  spans.push_back({Modality::Other, 0, content.size()});
  return spans;
}

SkillPackage load_package(const fs::path& dir) {
  SkillPackage pkg;
  pkg.root = dir;

  std::vector<fs::path> files;
  if (fs::exists(dir)) {
    for (auto it = fs::recursive_directory_iterator(
             dir, fs::directory_options::skip_permission_denied);
         it != fs::recursive_directory_iterator(); ++it) {
      const fs::path rel = fs::relative(it->path(), dir);
      if (!rel.empty() && rel.begin()->string() == ".git") {
        if (it->is_directory()) it.disable_recursion_pending();
        continue;
      }
      if (it->is_regular_file()) files.push_back(it->path());
    }
  }
  std::sort(files.begin(), files.end(),
            [&](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });
  if (files.empty()) throw EmptyPackageError(dir.string());

  for (const auto& file : files) {
    const std::string rel = fs::relative(file, dir).generic_string();
    bool ok = true;
    const std::string bytes = read_file_bytes(file, ok);
    if (!ok) {
      pkg.warnings.push_back("unreadable file: " + rel);
      continue;
    }
    if (looks_binary(bytes)) {
      SourceDocument doc;
      doc.path = rel;
      doc.modality = Modality::Other;
      doc.language_tag = language_of(file);
      pkg.other_files.push_back(std::move(doc));
      continue;
    }
    bool lossy = false;
    const std::string content = decode_utf8_lossy(bytes, lossy);
    if (lossy) pkg.warnings.push_back("lossy decode (invalid UTF-8 replaced): " + rel);

    for (const ModalitySpan& span : classify_modality(file, content)) {
      SourceDocument doc;
      doc.path = rel;
      doc.modality = span.modality;
      doc.language_tag = language_of(file);
      doc.text = content.substr(span.begin, span.end - span.begin);
      doc.start_line = 1 + static_cast<std::size_t>(
                               std::count(content.begin(), content.begin() + span.begin, '\n'));
      doc.lossy = lossy;
      switch (span.modality) {
        case Modality::Metadata: pkg.metadata_docs.push_back(std::move(doc)); break;
        case Modality::Code: pkg.code_files.push_back(std::move(doc)); break;
        case Modality::Instruction: pkg.instruction_docs.push_back(std::move(doc)); break;
        case Modality::Other: pkg.other_files.push_back(std::move(doc)); break;
      }
    }
  }

  pkg.id = manifest_name_field(dir, pkg.warnings);
  if (pkg.id.empty()) pkg.id = dir.filename().string();
  return pkg;
}

std::string package_content_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(dir, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    const fs::path rel = fs::relative(it->path(), dir);
    if (!rel.empty() && rel.begin()->string() == ".git") {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end(),
            [&](const fs::path& a, const fs::path& b) {
              return fs::relative(a, dir).generic_string() < fs::relative(b, dir).generic_string();
            });
  std::string buffer;
  for (const auto& file : files) {
    bool ok = true;
    const std::string bytes = read_file_bytes(file, ok);
    buffer += fs::relative(file, dir).generic_string();
    buffer.push_back('\0');
    buffer += bytes;
    buffer.push_back('\0');
  }
  return sha256_hex(buffer);
}

}  // namespace biv
