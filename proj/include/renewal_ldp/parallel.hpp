#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace renewal_ldp {

/// Worker count from RENEWAL_LDP_WORKERS, else the hardware concurrency.
inline int default_workers() {
    if (const char* env = std::getenv("RENEWAL_LDP_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
        throw DomainError("RENEWAL_LDP_WORKERS must be a positive integer, got '" + std::string(env) + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) carry += (sum - t) + v;
        else carry += (v - t) + sum;
        sum = t;
    }
    void add(const CompensatedSum& other) {
        add(other.sum);
        add(other.carry);
    }
    double value() const { return sum + carry; }
};

/// Splits [0, n) into contiguous chunks, one per worker, runs
/// body(begin, end, acc) on each and merges the accumulators in worker order.
/// Acc needs a default constructor and merge(const Acc&).
template <class Acc, class Body>
Acc parallel_accumulate(std::uint64_t n, int workers, Body&& body) {
    workers = std::max(1, workers);
    if (static_cast<std::uint64_t>(workers) > n) workers = static_cast<int>(std::max<std::uint64_t>(n, 1));
    std::vector<Acc> parts(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&](int w) {
        const std::uint64_t begin = n * w / workers, end = n * (w + 1) / workers;
        try {
            body(begin, end, parts[w]);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    Acc total;
    for (const auto& p : parts) total.merge(p);
    return total;
}

}  // namespace renewal_ldp
