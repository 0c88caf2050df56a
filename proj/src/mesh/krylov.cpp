#include "nstp/mesh/krylov.hpp"

#include <cmath>
#include <vector>

#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"

namespace nstp {

KrylovResult solve_cg(const LinearMap& op, const FaceField& rhs, const LinearMap& precond,
                      const KrylovOptions& opts) {
    FaceField x(rhs.grid());
    const double bnorm = norm_l2(rhs);
    if (bnorm == 0.0) return {std::move(x), 0, 0.0};

    FaceField r = rhs;
    FaceField z = precond(r);
    FaceField p = z;
    double rz = inner_l2(r, z);
    double rel = 1.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        const FaceField ap = op(p);
        const double pap = inner_l2(p, ap);
        if (pap <= 0.0) {
            // lost curvature at roundoff level: the iterate is as good as it gets
            if (rel <= 1e-10) return {std::move(x), it, rel};
            throw SolverError("CG: operator not positive definite", rel);
        }
        const double alpha = rz / pap;
        x.axpy(alpha, p);
        r.axpy(-alpha, ap);
        rel = norm_l2(r) / bnorm;
        if (rel <= opts.rel_tol) return {std::move(x), it, rel};
        z = precond(r);
        const double rz_new = inner_l2(r, z);
        p *= rz_new / rz;
        p += z;
        rz = rz_new;
    }
    throw SolverError("CG did not converge", rel);
}

KrylovResult solve_gmres(const LinearMap& op, const FaceField& rhs, const LinearMap& precond,
                         const KrylovOptions& opts) {
    FaceField x(rhs.grid());
    const double bnorm = norm_l2(rhs);
    if (bnorm == 0.0) return {std::move(x), 0, 0.0};

    const int m = opts.restart;
    int total = 0;
    double rel = 1.0;
    while (total < opts.max_iter) {
        FaceField r = rhs - op(x);
        double beta = norm_l2(r);
        rel = beta / bnorm;
        if (rel <= opts.rel_tol) return {std::move(x), total, rel};

        std::vector<FaceField> basis;
        std::vector<FaceField> zs;
        basis.reserve(m + 1);
        zs.reserve(m);
        basis.push_back((1.0 / beta) * r);
        // Hessenberg matrix, column-major rows 0..m
        std::vector<std::vector<double>> hess(m, std::vector<double>(m + 1, 0.0));
        std::vector<double> cs(m), sn(m), g(m + 1, 0.0);
        g[0] = beta;

        int k = 0;
        for (; k < m && total < opts.max_iter; ++k, ++total) {
            zs.push_back(precond(basis[k]));
            FaceField w = op(zs[k]);
            // modified Gram-Schmidt, applied twice for stability
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= k; ++i) {
                    const double hik = inner_l2(w, basis[i]);
                    hess[k][i] += hik;
                    w.axpy(-hik, basis[i]);
                }
            }
            const double hnext = norm_l2(w);
            hess[k][k + 1] = hnext;
            for (int i = 0; i < k; ++i) {
                const double a = hess[k][i], b = hess[k][i + 1];
                hess[k][i] = cs[i] * a + sn[i] * b;
                hess[k][i + 1] = -sn[i] * a + cs[i] * b;
            }
            const double a = hess[k][k], b = hess[k][k + 1];
            const double rho = std::hypot(a, b);
            cs[k] = a / rho;
            sn[k] = b / rho;
            hess[k][k] = rho;
            hess[k][k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            rel = std::abs(g[k + 1]) / bnorm;
            if (hnext > 0.0) basis.push_back((1.0 / hnext) * w);
            if (rel <= opts.rel_tol || hnext == 0.0) {
                ++k;
                ++total;
                break;
            }
        }
        // back substitution
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int c = i + 1; c < k; ++c) s -= hess[c][i] * y[c];
            y[i] = s / hess[i][i];
        }
        for (int i = 0; i < k; ++i) x.axpy(y[i], zs[i]);
        if (rel <= opts.rel_tol) {
            // confirm with the true residual
            const double true_rel = norm_l2(rhs - op(x)) / bnorm;
            if (true_rel <= 10.0 * opts.rel_tol) return {std::move(x), total, true_rel};
            rel = true_rel;
        }
    }
    throw SolverError("GMRES did not converge", rel);
}

}  // namespace nstp
