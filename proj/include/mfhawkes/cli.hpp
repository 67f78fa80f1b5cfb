#ifndef MFHAWKES_CLI_HPP
#define MFHAWKES_CLI_HPP

#include <iosfwd>
#include <string>
#include <string_view>

namespace mfhawkes {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitAssumption = 3,
    kExitNumeric = 4,
    kExitIo = 5,
};

/// Runs the `mfhawkes` command line. Never throws; errors become exit codes
/// with a message on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Git blob object id (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_sha1(std::string_view content);

}  // namespace mfhawkes

#endif  // MFHAWKES_CLI_HPP
