#include <catch_amalgamated.hpp>

#include <set>

#include "synlink/gradcheck.hpp"

using namespace synlink;

TEST_CASE("every objective passes the finite-difference check") {
    const GradCheckConfig cfg;
    const auto results = run_gradcheck_suite(cfg);
    std::set<std::string> losses;
    for (const auto& r : results) {
        INFO(r.loss << " seed " << r.seed << " max rel err " << r.max_rel_error);
        losses.insert(r.loss);
        CHECK(r.coords.size() == cfg.coordinates);
        CHECK(r.passed);
        CHECK(r.max_rel_error <= cfg.tolerance);
    }
    CHECK(losses == std::set<std::string>{"cross_entropy", "pairwise", "dpo", "cpo", "simpo"});
    CHECK(results.size() == 5 * cfg.seeds.size());
}

TEST_CASE("a wrong gradient is caught") {
    Parameters at(7, 3);
    at.head_b.setConstant(0.3);
    const LossFunction bad = [](const Parameters& p, Parameters* g) {
        const double loss = p.head_b.squaredNorm();
        if (g) g->head_b += 3.0 * p.head_b;  // should be 2·p
        return loss;
    };
    GradCheckConfig cfg;
    cfg.coordinates = 200;
    const auto r = check_gradient("bad", bad, at, 1, cfg);
    CHECK_FALSE(r.passed);
}
