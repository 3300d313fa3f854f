#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace navmine::csv {

/// Quotes a cell when it contains a comma, quote, or newline.
std::string field(std::string_view text);

/// Shortest decimal that round-trips to the same double.
std::string number(double v);

/// Splits one CSV row, honouring double-quoted cells.
std::vector<std::string> split_row(std::string_view line);

}  // namespace navmine::csv
