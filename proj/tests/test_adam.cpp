#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "dts/adam.hpp"
#include "dts/error.hpp"
#include "dts/rng.hpp"
#include "support/test_util.hpp"

using dts::Vec;

namespace {

// One textbook bias-corrected update, scalar form.
struct ScalarAdam {
    double m = 0.0;
    double v = 0.0;
    int t = 0;

    double step(double param, double grad, double lr, double b1 = 0.9, double b2 = 0.999,
                double eps = 1e-8) {
        ++t;
        m = b1 * m + (1.0 - b1) * grad;
        v = b2 * v + (1.0 - b2) * grad * grad;
        const double m_hat = m / (1.0 - std::pow(b1, t));
        const double v_hat = v / (1.0 - std::pow(b2, t));
        return param - lr * m_hat / (std::sqrt(v_hat) + eps);
    }
};

}  // namespace

TEST_CASE("adam leaves parameters untouched on zero gradients") {
    Vec params{1.0, -2.0, 0.5};
    Vec grads(3, 0.0);
    dts::AdamState state(3, 0.1);
    dts::adam_step(params, grads, state);
    CHECK(params[0] == 1.0);
    CHECK(params[1] == -2.0);
    CHECK(params[2] == 0.5);
    CHECK(state.step_count == 1);
}

TEST_CASE("adam single step matches the scalar formula") {
    Vec params{1.0};
    Vec grads{1.0};
    dts::AdamState state(1, 0.1);
    dts::adam_step(params, grads, state);

    ScalarAdam oracle;
    const double want = oracle.step(1.0, 1.0, 0.1);
    CHECK(params[0] == doctest::Approx(want).epsilon(1e-15));
    CHECK(state.step_count == 1);
}

TEST_CASE("adam two steps with constant gradient match two formula applications") {
    Vec params{1.0};
    dts::AdamState state(1, 0.1);
    ScalarAdam oracle;
    double want = 1.0;
    for (int i = 0; i < 2; ++i) {
        Vec grads{1.0};
        dts::adam_step(params, grads, state);
        want = oracle.step(want, 1.0, 0.1);
    }
    CHECK(params[0] == doctest::Approx(want).epsilon(1e-15));
    CHECK(state.step_count == 2);
}

TEST_CASE("adam vector update matches per-coordinate scalar updates") {
    dts::Rng rng(71);
    Vec params = testutil::random_vec(rng, 5);
    const Vec initial = params;
    dts::AdamState state(5, 0.01);
    std::vector<ScalarAdam> oracles(5);
    Vec want = initial;

    for (int step = 0; step < 4; ++step) {
        Vec grads = testutil::random_vec(rng, 5);
        dts::adam_step(params, grads, state);
        for (std::size_t i = 0; i < 5; ++i) want[i] = oracles[i].step(want[i], grads[i], 0.01);
    }
    for (std::size_t i = 0; i < 5; ++i) CHECK(params[i] == doctest::Approx(want[i]).epsilon(1e-14));
    CHECK(state.step_count == 4);
}

TEST_CASE("adam rejects non-finite gradients") {
    Vec params{1.0, 2.0};
    dts::AdamState state(2, 0.1);
    Vec bad{0.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(dts::adam_step(params, bad, state), dts::ValueError);
    Vec inf{std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(dts::adam_step(params, inf, state), dts::ValueError);
}

TEST_CASE("adam rejects mismatched lengths") {
    Vec params{1.0, 2.0};
    Vec grads{1.0};
    dts::AdamState state(2, 0.1);
    CHECK_THROWS_AS(dts::adam_step(params, grads, state), dts::ShapeError);
}

TEST_CASE("adam step direction opposes the gradient sign initially") {
    Vec params{0.0, 0.0};
    Vec grads{2.0, -3.0};
    dts::AdamState state(2, 0.05);
    dts::adam_step(params, grads, state);
    CHECK(params[0] < 0.0);
    CHECK(params[1] > 0.0);
}
