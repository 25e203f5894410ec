#pragma once

#include <string>

#include "eelink/types.hpp"

namespace eelink {

// Dataset CSV format: header "y,z,x1,...,xq", one row per observation,
// comma-separated, '.' decimal point. z must parse as 0 or 1.
Dataset read_dataset_csv(const std::string& path);
Dataset parse_dataset_csv(const std::string& text);

void write_dataset_csv(const Dataset& d, const std::string& path);
std::string dataset_to_csv(const Dataset& d);

}  // namespace eelink
