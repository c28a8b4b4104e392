#pragma once

namespace phi4 {

/** command line entry point; returns the process exit code
 *  (0 success, 1 usage/config/domain errors, 2 io errors, 3 inequality violations) */
int cli_main(int argc, char** argv);

}  // namespace phi4
