#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clpk/engine.hpp"

namespace clpk {

struct CliOptions {
    std::vector<std::string> files;
    std::optional<std::string> goal;
    bool count = false;
    bool all = false;
    bool canonical = false;
};

// Bindings worth showing plus the delayed goals, one line each.
std::vector<std::string> answer_lines(Engine &e, const Query &q, bool canonical);

// Exit status: 0 success, 1 failure, 2 error. Without a goal the
// queries are read from `in` as a toplevel session.
int run_cli(const CliOptions &opts, std::istream &in, std::ostream &out, std::ostream &err);

// Parses argv and runs; used by the clpk executable.
int cli_main(int argc, char **argv);

} // namespace clpk
