#pragma once

#include <string_view>

namespace oodhcn {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kCorpusFormatVersion = 1;
inline constexpr int kLabelFormatVersion = 1;

}  // namespace oodhcn
