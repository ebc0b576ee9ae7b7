#include "feti_sqp/linalg.hpp"

#include "feti_sqp/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace feti_sqp {

DenseSymmetricSolve::DenseSymmetricSolve(Matrix a) : a_(std::move(a)), ldlt_(a_) {
    if (ldlt_.info() != Eigen::Success) {
        throw FactorizationError("dense LDL^T factorization failed");
    }
    const Vector d = ldlt_.vectorD();
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    for (Index i = 0; i < d.size(); ++i) {
        if (std::abs(d[i]) <= 1e-14 * scale) {
            throw FactorizationError("dense matrix is numerically singular");
        }
    }
}

Vector DenseSymmetricSolve::solve(const Vector& b) const { return ldlt_.solve(b); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FETI_SQP_THREADS")) {
        try {
            const int value = std::stoi(env);
            if (value > 0) return value;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

}  // namespace feti_sqp
