#pragma once

#include <string_view>

namespace biv {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kReportSchemaVersion = "biv-report/v1";

}  // namespace biv
