#include <catch2/catch_amalgamated.hpp>

#include "fan/gradcheck.hpp"

// Finite-difference oracle over every differentiable op, >=5 shapes each.
TEST_CASE("gradient suite: analytic backward matches central differences") {
    auto report = fan::run_gradient_suite(42);
    CHECK(report.checks.size() >= 15);
    for (const auto& c : report.checks) {
        INFO(c.op << ": " << c.points << " points, max rel err " << c.max_rel_err);
        CHECK(c.points > 0);
        CHECK(c.failures == 0);
    }
    for (const auto& c : report.checks)
        WARN(c.op << " max_rel_err=" << c.max_rel_err << " over " << c.points << " points");
}
