#include <cmath>

#include "doctest.h"
#include "sfcorch/compute.hpp"
#include "sfcorch/rng.hpp"

using namespace sfcorch;

namespace {

VnfTask make_task(int type, double cpb, double gbit) {
    VnfTask t;
    t.vnf_type = type;
    t.cycles_per_bit = cpb;
    t.data_volume_gbit = gbit;
    return t;
}

}  // namespace

TEST_CASE("exec_time equals work over effective clock") {
    VnfTask t = make_task(0, 200.0, 0.05);
    TaskAllocation a{2e9, 2.0};
    // 200 cycles/bit * 0.05 Gbit * 1e9 bits = 1e10 cycles over 4e9 Hz
    CHECK(exec_time(t, a) == doctest::Approx(1e10 / 4e9));
    CHECK_THROWS_AS(exec_time(t, TaskAllocation{0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(exec_time(t, TaskAllocation{1e9, 0.0}), std::invalid_argument);
}

TEST_CASE("exec_time randomized against the closed form") {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        VnfTask t = make_task(0, rng.uniform(10.0, 500.0), rng.uniform(0.01, 0.1));
        TaskAllocation a{rng.uniform(1e9, 5e9), rng.uniform(0.5, 4.0)};
        double expect = t.cycles_per_bit * t.data_volume_gbit * 1e9 / (a.clock_hz * a.cores);
        CHECK(exec_time(t, a) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("concurrent_wait is the mean execution time of the admitted set") {
    NodeQueueState s;
    CHECK(concurrent_wait(s.concurrent) == doctest::Approx(0.0));
    s.concurrent.push_back({make_task(0, 100.0, 0.04), {1e9, 1.0}, 0.0});
    s.concurrent.push_back({make_task(1, 300.0, 0.02), {2e9, 1.0}, 0.0});
    double e0 = 100.0 * 0.04 * 1e9 / 1e9;
    double e1 = 300.0 * 0.02 * 1e9 / 2e9;
    CHECK(concurrent_wait(s.concurrent) == doctest::Approx(0.5 * (e0 + e1)));
}

TEST_CASE("queue_delay warm path sums same-type work only") {
    NodeQueueState s;
    s.instantiated_vnfs = {3};
    s.queue.push_back({make_task(3, 100.0, 0.05), {1e9, 1.0}, 0.0});
    s.queue.push_back({make_task(5, 400.0, 0.05), {1e9, 1.0}, 0.0});
    s.queue.push_back({make_task(3, 200.0, 0.05), {2e9, 1.0}, 0.0});
    VnfTask incoming = make_task(3, 50.0, 0.01);
    double same = 100.0 * 0.05 * 1e9 / 1e9 + 200.0 * 0.05 * 1e9 / 2e9;
    CHECK(queue_delay(incoming, s, 0.5) == doctest::Approx(same));
}

TEST_CASE("queue_delay cold path adds cold starts per distinct missing type") {
    NodeQueueState s;
    s.instantiated_vnfs = {1};
    s.queue.push_back({make_task(1, 100.0, 0.05), {1e9, 1.0}, 0.0});   // warm type
    s.queue.push_back({make_task(4, 100.0, 0.05), {1e9, 1.0}, 0.0});   // cold type
    s.queue.push_back({make_task(4, 200.0, 0.05), {1e9, 1.0}, 0.0});   // same cold type
    s.queue.push_back({make_task(6, 100.0, 0.05), {1e9, 1.0}, 0.0});   // another cold type
    VnfTask incoming = make_task(9, 50.0, 0.01);   // not instantiated -> cold
    double whole = (100.0 + 100.0 + 200.0 + 100.0) * 0.05 * 1e9 / 1e9;
    // cold queued types {4, 6}, plus the incoming one -> (2 + 1) cold starts
    CHECK(queue_delay(incoming, s, 0.5) == doctest::Approx(whole + 3.0 * 0.5));
}

TEST_CASE("queue_delay cold path on an empty queue is one cold start") {
    NodeQueueState s;
    VnfTask incoming = make_task(2, 50.0, 0.01);
    CHECK(queue_delay(incoming, s, 0.7) == doctest::Approx(0.7));
    s.instantiated_vnfs = {2};
    CHECK(queue_delay(incoming, s, 0.7) == doctest::Approx(0.0));
}

TEST_CASE("processing_delay equals exec_time with the same allocation") {
    VnfTask t = make_task(0, 120.0, 0.03);
    CHECK(processing_delay(t, 3e9, 2.0) == doctest::Approx(exec_time(t, {3e9, 2.0})));
}

TEST_CASE("total_task_delay is additive") {
    CHECK(total_task_delay(0.1, 0.2, 0.3, 0.4) == doctest::Approx(1.0));
    CHECK(total_task_delay(0, 0, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("sfc_delay aggregates by max or sum") {
    std::vector<double> d = {0.5, 2.0, 1.0};
    CHECK(sfc_delay(d, ChainAggregation::Max) == doctest::Approx(2.0));
    CHECK(sfc_delay(d, ChainAggregation::Sum) == doctest::Approx(3.5));
    CHECK(sfc_delay(d) == doctest::Approx(2.0));
    CHECK_THROWS_AS(sfc_delay({}, ChainAggregation::Max), std::invalid_argument);
}
