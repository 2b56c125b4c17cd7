#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sunny::csv {

// Comma split without quoting rules; our files never embed commas in fields.
std::vector<std::string> split_fields(std::string_view line);

std::string trim(std::string_view s);

// Whole-field numeric parse; throws ParseError mentioning `where` otherwise.
double parse_number(std::string_view field, const std::string& where);

// Reads a text file into lines (universal newlines); throws ParseError when
// unreadable.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace sunny::csv
