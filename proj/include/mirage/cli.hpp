#pragma once

namespace mirage::cli {

// Full command line front end. Exit codes: 0 success, 2 user or config
// error, 3 environment or I/O error.
int run(int argc, char** argv);

}  // namespace mirage::cli
