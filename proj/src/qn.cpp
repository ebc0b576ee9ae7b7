#include "feti_sqp/qn.hpp"

#include "feti_sqp/errors.hpp"

#include <vector>

namespace feti_sqp {

QnState::QnState(std::shared_ptr<const LinearSolve> base, QnOptions options)
    : base_(std::move(base)), options_(options) {
    if (!base_) throw ParameterError("quasi-Newton state needs a base factorization");
    if (options_.memory < 0) throw ParameterError("quasi-Newton memory must be nonnegative");
    if (!(options_.curvature > 0.0)) throw ParameterError("curvature threshold must be positive");
}

bool QnState::update(const Vector& d, const Vector& y) {
    if (d.size() != size() || y.size() != size()) throw ParameterError("quasi-Newton pair has wrong size");
    const double yd = y.dot(d);
    if (!(yd > options_.curvature * y.norm() * d.norm())) return false;
    if (options_.memory == 0) return false;
    if (static_cast<int>(pairs_.size()) == options_.memory) pairs_.pop_front();
    pairs_.push_back(Pair{d, y, 1.0 / yd});
    return true;
}

void QnState::restart(std::shared_ptr<const LinearSolve> base) {
    if (!base) throw ParameterError("quasi-Newton restart needs a base factorization");
    base_ = std::move(base);
    pairs_.clear();
}

Vector QnState::apply_inverse(const Vector& v) const {
    if (v.size() != size()) throw ParameterError("quasi-Newton operand has wrong size");
    Vector q = v;
    std::vector<double> alpha(pairs_.size());
    for (std::size_t k = pairs_.size(); k-- > 0;) {
        alpha[k] = pairs_[k].rho * pairs_[k].d.dot(q);
        q -= alpha[k] * pairs_[k].y;
    }
    Vector r = base_->solve(q);
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
        const double beta = pairs_[k].rho * pairs_[k].y.dot(r);
        r += (alpha[k] - beta) * pairs_[k].d;
    }
    return r;
}

}  // namespace feti_sqp
