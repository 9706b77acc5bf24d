// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace patalloc {

// Malformed input file or document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view s);

// Shortest decimal representation that round-trips the double.
std::string format_full(double v);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames, so a failed write leaves no
// partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Linear interpolation between order statistics (R type 7). `values` need
// not be sorted. Throws on empty input.
double quantile(std::span<const double> values, double q);

}  // namespace patalloc
