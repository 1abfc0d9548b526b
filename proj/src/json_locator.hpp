#pragma once

#include <map>
#include <string>
#include <string_view>

namespace cinempc::detail {

/// Maps the JSON pointer of every value in a well-formed document to the
/// 1-based line where the value starts. Object keys map under their member's
/// pointer too, so an unknown key reports the line it appears on.
std::map<std::string, int> locate_lines(std::string_view document);

/// 1-based line containing byte `offset`.
int line_of_offset(std::string_view document, std::size_t offset);

}  // namespace cinempc::detail
