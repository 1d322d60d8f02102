#include <catch2/catch_amalgamated.hpp>

#include "sigtime/core.hpp"

using namespace sigtime;

TEST_CASE("derive_green subtracts red from cycle") {
    CHECK(derive_green(90, 30) == Catch::Approx(60.0));
    CHECK(derive_green(75.5, 41.2) == Catch::Approx(34.3).epsilon(1e-12));
    CHECK_THROWS_AS(derive_green(120, 120), std::domain_error);
    CHECK_THROWS_AS(derive_green(120, 0), std::domain_error);
    CHECK_THROWS_AS(derive_green(90, -3), std::domain_error);
}

TEST_CASE("derive_green round-trips") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double cycle = rng.uniform(30, 180);
        const double red = rng.uniform(1e-6, cycle - 1e-6);
        CHECK(derive_green(cycle, red) + red == Catch::Approx(cycle).epsilon(1e-12));
    }
}

TEST_CASE("classify_direction nearest cardinal with smaller-angle ties") {
    CHECK(classify_direction(0) == Direction::North);
    CHECK(classify_direction(44.9) == Direction::North);
    CHECK(classify_direction(45.0) == Direction::North);
    CHECK(classify_direction(45.1) == Direction::East);
    CHECK(classify_direction(90) == Direction::East);
    CHECK(classify_direction(135.0) == Direction::East);
    CHECK(classify_direction(135.1) == Direction::South);
    CHECK(classify_direction(180) == Direction::South);
    CHECK(classify_direction(225.0) == Direction::South);
    CHECK(classify_direction(225.1) == Direction::West);
    CHECK(classify_direction(270) == Direction::West);
    CHECK(classify_direction(315.0) == Direction::North);
    CHECK(classify_direction(314.9) == Direction::West);
    CHECK(classify_direction(359.9) == Direction::North);
    CHECK_THROWS_AS(classify_direction(360.0), std::domain_error);
    CHECK_THROWS_AS(classify_direction(-0.1), std::domain_error);
}

TEST_CASE("classify_direction partitions the circle into four 90-degree arcs") {
    int counts[4] = {0, 0, 0, 0};
    for (int i = 0; i < 3600; ++i) {
        const double h = i * 0.1;
        counts[static_cast<int>(classify_direction(h))]++;
    }
    CHECK(counts[0] == 900);
    CHECK(counts[1] == 900);
    CHECK(counts[2] == 900);
    CHECK(counts[3] == 900);
}

TEST_CASE("classify_movement from wrapped heading difference") {
    CHECK(classify_movement(0, 0) == Movement::Through);
    CHECK(classify_movement(0, 270) == Movement::Left);   // wrapped difference -90
    CHECK(classify_movement(90, 180) == Movement::Right); // difference +90
    CHECK(classify_movement(350, 10) == Movement::Through);
    CHECK(classify_movement(10, 350) == Movement::Through);
    CHECK(classify_movement(0, 45) == Movement::Right);
    CHECK(classify_movement(0, 315) == Movement::Left);
}

TEST_CASE("classify_movement of an unchanged heading is through") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double h = rng.uniform(0, 360.0 - 1e-9);
        CHECK(classify_movement(h, h) == Movement::Through);
    }
}

TEST_CASE("tod_bin boundaries") {
    CHECK(tod_bin_for_hour(7) == TodBin::AM);
    CHECK(tod_bin_for_hour(16) == TodBin::PM);
    CHECK(tod_bin_for_hour(2) == TodBin::OffPeak);
    CHECK(tod_bin_for_hour(6) == TodBin::AM);
    CHECK(tod_bin_for_hour(9) == TodBin::AM);
    CHECK(tod_bin_for_hour(10) == TodBin::OffPeak);
    CHECK(tod_bin_for_hour(15) == TodBin::PM);
    CHECK(tod_bin_for_hour(18) == TodBin::PM);
    CHECK(tod_bin_for_hour(19) == TodBin::OffPeak);
    CHECK_THROWS_AS(tod_bin_for_hour(24), std::domain_error);
}

TEST_CASE("plan validation enforces red + green == cycle exactly") {
    SignalPlan plan;
    plan.intersection_id = "I1";
    plan.cycle_s = 90;
    plan.phases.push_back({"p1", Direction::North, Movement::Through, 50, 40, 0});
    CHECK_NOTHROW(validate_plan(plan));

    plan.phases.push_back({"p2", Direction::East, Movement::Through, 40, 49, 50});
    CHECK_THROWS_AS(validate_plan(plan), ConfigError);
}

TEST_CASE("hour_of_day wraps at midnight") {
    CHECK(hour_of_day(0.0) == 0);
    CHECK(hour_of_day(3599.9) == 0);
    CHECK(hour_of_day(3600.0) == 1);
    CHECK(hour_of_day(86400.0 + 7200.0) == 2);
}
