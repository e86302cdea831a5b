// Placeholder entry point; subcommands are wired up in later commits of this
// file as the library lands.
#include <cstdio>

#include "fan/gradcheck.hpp"

int main() {
    auto report = fan::run_gradient_suite();
    for (const auto& c : report.checks)
        std::printf("%-22s %4d points  %d failures  max rel err %.2e\n", c.op.c_str(), c.points,
                    c.failures, c.max_rel_err);
    return report.all_passed() ? 0 : 4;
}
