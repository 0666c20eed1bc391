// Batch front-end: simulate | bin | estimate | fit | scan | rates | significance.
#pragma once

#include <string>
#include <vector>

namespace ximpact::cli {

int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace ximpact::cli
