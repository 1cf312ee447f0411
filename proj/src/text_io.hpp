#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdlvae::detail {

std::vector<std::string> split_csv_line(std::string_view line);
// Strict parse of the whole cell; rejects NaN and infinities.
std::optional<double> parse_double(std::string_view cell);
std::vector<std::string> read_lines(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
// Shortest "%.<digits>g" rendering.
std::string format_double(double value, int significant_digits = 9);

}  // namespace mdlvae::detail
