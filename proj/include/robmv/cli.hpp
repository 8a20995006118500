#pragma once

#include <ostream>

namespace robmv::cli {

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace robmv::cli
