#pragma once

#include "feti_sqp/linalg.hpp"

#include <deque>
#include <memory>

namespace feti_sqp {

struct QnOptions {
    int memory = 50;          ///< maximum number of stored pairs
    double curvature = 1e-8;  ///< pairs need y^T d > curvature * |y| |d|
};

/// Inverse BFGS approximation H^(k)^{-1} built on top of an exact factored
/// base H^(0). Pairs failing the curvature test are skipped, so the operator
/// stays symmetric positive definite whenever the base is.
class QnState final : public LinearSolve {
public:
    struct Pair {
        Vector d;  ///< step
        Vector y;  ///< gradient difference
        double rho = 0.0;  ///< 1 / (y^T d)
    };

    QnState(std::shared_ptr<const LinearSolve> base, QnOptions options = {});

    /// Stores (d, y) if it passes the curvature test; evicts the oldest pair
    /// when full. Returns whether the pair was accepted.
    bool update(const Vector& d, const Vector& y);

    /// Clears all pairs and replaces the base.
    void restart(std::shared_ptr<const LinearSolve> base);

    /// H^(k)^{-1} v by the two-loop recursion around the base solve.
    Vector apply_inverse(const Vector& v) const;

    Index size() const override { return base_->size(); }
    Vector solve(const Vector& v) const override { return apply_inverse(v); }

    int pair_count() const { return static_cast<int>(pairs_.size()); }
    const std::deque<Pair>& pairs() const { return pairs_; }
    const LinearSolve& base() const { return *base_; }
    const QnOptions& options() const { return options_; }

private:
    std::shared_ptr<const LinearSolve> base_;
    QnOptions options_;
    std::deque<Pair> pairs_;
};

/// Convenience wrappers mirroring the operation names.
inline QnState qn_init(std::shared_ptr<const LinearSolve> base, QnOptions options = {}) {
    return QnState(std::move(base), options);
}
inline bool qn_update(QnState& state, const Vector& d, const Vector& y) { return state.update(d, y); }
inline Vector qn_apply_inverse(const QnState& state, const Vector& v) { return state.apply_inverse(v); }
inline void qn_restart(QnState& state, std::shared_ptr<const LinearSolve> base) { state.restart(std::move(base)); }

}  // namespace feti_sqp
