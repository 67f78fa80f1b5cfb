#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "mfhawkes/errors.hpp"
#include "mfhawkes/io.hpp"
#include "mfhawkes/parallel.hpp"
#include "mfhawkes/rng.hpp"
#include "mfhawkes/types.hpp"

using namespace mfhawkes;

TEST_CASE("uniform grid divides the horizon") {
    const auto g = TimeGrid::uniform(0.9, 1e-3);
    CHECK(g.steps() == 900);
    CHECK(g.horizon() == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(g.cell_of(0.0) == 0);
    CHECK(g.cell_of(0.0015) == 1);
    CHECK(g.cell_of(0.9) == 899);
}

TEST_CASE("measure flow row statistics") {
    MeasureFlow f(TimeGrid(0.5, 2), 3);
    f(0, 0) = 1.0;
    f(1, 0) = 0.5;
    f(1, 2) = 0.5;
    f(2, 1) = 0.25;
    f(2, 3) = 0.5;
    CHECK(f.mass(1) == 1.0);
    CHECK(f.mean(1) == 1.0);
    CHECK(f.deficit(2) == doctest::Approx(0.25));
    CHECK(f.cdf(1, 1) == 0.5);
    const auto p = f.padded(5);
    CHECK(p.n_max() == 5);
    CHECK(p(1, 2) == 0.5);
    CHECK(p(1, 5) == 0.0);
}

TEST_CASE("tilt field tail applies above n_max") {
    TiltField v(TimeGrid(0.1, 3), 2, -1.5);
    v(1, 0) = 0.3;
    v(1, 2) = 0.7;
    CHECK(v(1, 5) == -1.5);
    CHECK(v.cell_max(1) == 0.7);
    CHECK(v.sup_abs() == 1.5);
    CHECK(v.at(0.15, 2) == 0.7);
    v(0, 0) = -std::numeric_limits<double>::infinity();
    CHECK_FALSE(v.all_finite());
    const auto c = v.clipped(1.0);
    CHECK(c(0, 0) == -1.0);
    CHECK(c(1, 9) == -1.0);
    CHECK(c.all_finite());
}

TEST_CASE("event paths merge in time order") {
    EventPaths p(3, 1.0, 9);
    p.times[0] = {0.5, 0.9};
    p.times[1] = {};
    p.times[2] = {0.1, 0.6, 0.7};
    CHECK(p.total_events() == 5);
    CHECK(p.max_count() == 3);
    const auto m = p.merged();
    REQUIRE(m.size() == 5);
    CHECK(m[0].component == 2);
    CHECK(m[1].time == 0.5);
    CHECK(m[4].time == 0.9);
}

TEST_CASE("csv round trips are exact") {
    EventPaths p(2, 1.0, 42);
    p.times[0] = {0.1234567890123456789, 0.5};
    p.times[1] = {1.0 / 3.0};
    std::stringstream ep;
    write_event_paths(ep, p);
    const auto q = read_event_paths(ep);
    CHECK(q.N == 2);
    CHECK(q.seed == 42);
    CHECK(q.times == p.times);

    MeasureFlow f(TimeGrid(0.1, 2), 2);
    f(0, 0) = 1.0;
    f(1, 0) = 0.7;
    f(1, 1) = 0.3;
    f(2, 0) = 1.0 / 7.0;
    f(2, 2) = 6.0 / 7.0;
    std::stringstream fs;
    write_measure_flow(fs, f);
    const auto g = read_measure_flow(fs);
    CHECK(g.grid() == f.grid());
    CHECK(g.data() == f.data());

    MeanPath m{TimeGrid(0.25, 4), {0.0, 0.1, 0.2, 0.35, 0.5}};
    std::stringstream ms;
    write_mean_path(ms, m);
    const auto n = read_mean_path(ms);
    CHECK(n.values == m.values);
    CHECK(n.grid == m.grid);

    TiltField v(TimeGrid(0.5, 2), 1, 0.25);
    v(0, 0) = std::log(2.0);
    v(1, 1) = -0.125;
    std::stringstream vs;
    write_tilt_field(vs, v);
    const auto w = read_tilt_field(vs);
    CHECK(w.data() == v.data());
    CHECK(w.tail() == 0.25);
    CHECK(w.grid() == v.grid());
}

TEST_CASE("format_double spells non-finite values") {
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("malformed tables are rejected") {
    std::stringstream s("t,x0,x1\n0,1\n");
    CHECK_THROWS_AS(read_measure_flow(s), Error);
    std::stringstream e("N,T,seed\n1,1,0\ncomponent,time\n3,0.5\n");
    CHECK_THROWS_AS(read_event_paths(e), Error);
}

TEST_CASE("replicate streams are deterministic and distinct") {
    auto a = Rng::stream(5, 0);
    auto b = Rng::stream(5, 0);
    auto c = Rng::stream(5, 1);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(a.below(7) < 7);
    }
}

TEST_CASE("run_replicates is independent of thread count") {
    auto fn = [](std::size_t i) {
        auto r = Rng::stream(3, i);
        return r.uniform();
    };
    const auto one = run_replicates(200, 1, fn);
    const auto four = run_replicates(200, 4, fn);
    CHECK(one == four);
}

TEST_CASE("compensated sum keeps small addends") {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) {
        s.add(1.0);
    }
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
}
