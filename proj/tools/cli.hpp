#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace robusta::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Errors are
/// reported on `err` as a single `ERROR <module>: <message>` line.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat `key = value` lines; `#` starts a comment. Throws robusta::Error
/// (module "cli") on malformed lines.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Pretty-prints CSV as a space-aligned table.
std::string format_table(std::string_view csv);

}  // namespace robusta::cli
