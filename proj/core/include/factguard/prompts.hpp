#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace factguard {

// Prefix of the line that reveals the ground-truth label to a teacher model.
inline constexpr std::string_view kLabelHintMarker = "GROUND-TRUTH LABEL:";

/// Prompt templates with {{name}} placeholders.
///
///   stage1_system  (none)
///   stage1_user    {{duration_s}} {{metadata_text}} {{transcript}} [+ {{label}} when reveals_label]
///   stage2_user    {{observation}}
///   audit          {{prediction}} {{reasoning}} {{evidence}}
struct PromptTemplateSet {
    std::string stage1_system;
    std::string stage1_user;
    std::string stage2_user;
    std::string audit;
    bool reveals_label = false;

    bool operator==(const PromptTemplateSet&) const = default;
};

PromptTemplateSet default_templates();
// Teacher variant for trajectory authoring: stage-1 reveals the label.
PromptTemplateSet teacher_templates();

// Loads stage1_system.txt, stage1_user.txt, stage2_user.txt and audit.txt;
// missing files keep the defaults. Validates the result.
PromptTemplateSet load_templates(const std::filesystem::path& dir, bool reveals_label = false);
void save_templates(const PromptTemplateSet& templates, const std::filesystem::path& dir);

// Throws Error with TEMPLATE_PLACEHOLDER_MISSING (a declared placeholder
// does not occur exactly once) or TEMPLATE_PLACEHOLDER_UNKNOWN.
void validate_templates(const PromptTemplateSet& templates);

std::vector<std::string> placeholders_in(std::string_view text);

// Single pass substitution; values are inserted verbatim and never
// re-scanned. Throws TEMPLATE_PLACEHOLDER_UNKNOWN for unbound names.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& values);

} // namespace factguard
