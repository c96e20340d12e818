#pragma once

#include "grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace mhd {

class LinearSolveFailure : public Error {
public:
    using Error::Error;
};

struct LinearSettings {
    double tol = 1e-12;  // relative residual target
    int max_refinements = 4;
};

struct LinearStats {
    int iterations = 0;  // 1 + iterative refinement sweeps
    double relative_residual = 0.0;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Sparse LU with iterative refinement. Deterministic for fixed input. The
// column ordering is kept while successive matrices share a sparsity pattern.
class LinearSolver {
public:
    explicit LinearSolver(LinearSettings settings = {}) : settings_(settings) {}
    LinearSolver(const SparseMatrix& A, LinearSettings settings) : settings_(settings) { factorize(A); }

    void set_settings(LinearSettings s) { settings_ = s; }

    void factorize(const SparseMatrix& A) {
        A_ = A;
        A_.makeCompressed();
        if (!same_pattern()) {
            lu_.analyzePattern(A_);
            outer_.assign(A_.outerIndexPtr(), A_.outerIndexPtr() + A_.outerSize() + 1);
            inner_.assign(A_.innerIndexPtr(), A_.innerIndexPtr() + A_.nonZeros());
        }
        lu_.factorize(A_);
        if (lu_.info() != Eigen::Success)
            throw LinearSolveFailure("sparse LU factorization failed (singular or ill-conditioned system, n=" +
                                     std::to_string(A_.rows()) + ")");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs, LinearStats* stats = nullptr) const {
        Eigen::VectorXd x = lu_.solve(rhs);
        const double scale = std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
        Eigen::VectorXd r = rhs - A_ * x;
        int it = 1;
        double rel = r.lpNorm<Eigen::Infinity>() / scale;
        while (rel > settings_.tol && it <= settings_.max_refinements) {
            x += lu_.solve(r);
            r = rhs - A_ * x;
            rel = r.lpNorm<Eigen::Infinity>() / scale;
            ++it;
        }
        if (!x.allFinite() || rel > settings_.tol)
            throw LinearSolveFailure("linear solve did not reach relative residual " + std::to_string(settings_.tol) +
                                     " after " + std::to_string(it) + " sweeps (residual " + std::to_string(rel) + ")");
        if (stats) {
            stats->iterations += it;
            stats->relative_residual = std::max(stats->relative_residual, rel);
        }
        return x;
    }

private:
    bool same_pattern() const {
        return !outer_.empty() && outer_.size() == static_cast<std::size_t>(A_.outerSize()) + 1 &&
               inner_.size() == static_cast<std::size_t>(A_.nonZeros()) &&
               std::equal(outer_.begin(), outer_.end(), A_.outerIndexPtr()) &&
               std::equal(inner_.begin(), inner_.end(), A_.innerIndexPtr());
    }

    SparseMatrix A_;
    LinearSettings settings_;
    std::vector<int> outer_, inner_;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

} // namespace mhd
