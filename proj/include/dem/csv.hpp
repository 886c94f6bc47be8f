#pragma once

#include <string>

namespace dem {

/// Shortest decimal string that round-trips to the same double
/// ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double value);

}  // namespace dem
