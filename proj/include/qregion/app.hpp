#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace qregion {

/// Entry point of the `qregion` command line tool. Subcommands: extract,
/// importance, measures, match, ablate, report. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs fn(0..count-1) on up to `jobs` threads (0 = hardware concurrency).
/// Exceptions from fn are rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace qregion
