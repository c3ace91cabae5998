#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace varid {

using ordered_json = nlohmann::ordered_json;

/// Scientific notation with 17 significant digits ("1.0000000000000000e+00").
/// Round-trips every finite double exactly.
std::string format_double(double value);

/// Compact JSON with doubles written by format_double. Key order is kept,
/// so equal inputs give byte-identical output.
std::string dump_canonical(const ordered_json& value);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace varid
