#pragma once

#include "bltail/base.hpp"

namespace bltail {

/// Locally smooth assignment n -> M_n in O(d) with M_n e_d = n, valid on a
/// chart around an anchor point of the sphere. The construction builds the
/// column-orthogonal matrix X_d(n) by induction on dimension and normalizes
/// columns. M_n is chart-dependent: matrices from different charts must never
/// be compared or interpolated.
class RotationField {
public:
    /// Anchor at p (unit). The permutation swaps the largest coordinate of p
    /// into slot 1; the chart is {n : |n_perm[0]| > |p_perm[0]| / 2}.
    explicit RotationField(const Eigen::VectorXd& p) : anchor_(p) {
        const int d = (int)p.size();
        if (std::abs(p.norm() - 1.0) > 1e-10)
            throw std::invalid_argument("RotationField: anchor must be a unit vector");
        int k = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(p[i]) > std::abs(p[k])) k = i;
        swap_index_ = k;
        radius_ = std::abs(p[k]) / 2.0;
        if (radius_ <= 0) throw std::invalid_argument("RotationField: zero anchor coordinate");
    }

    const Eigen::VectorXd& anchor() const { return anchor_; }
    double radius() const { return radius_; }
    int dim() const { return (int)anchor_.size(); }

    bool contains(const Eigen::VectorXd& n) const {
        return std::abs(n[swap_index_]) > radius_;
    }

    /// The unnormalized column-orthogonal matrix X_d(n) in permuted
    /// coordinates (last column is the permuted n).
    Eigen::MatrixXd build_X(const Eigen::VectorXd& n) const {
        if (!contains(n)) throw out_of_chart_error("build_X: direction outside chart");
        return build_X_rec(permute(n));
    }

    /// Normalize the columns of a column-orthogonal X to unit length. The
    /// last column is left untouched (it is the unit direction itself).
    static Eigen::MatrixXd normalize_to_orthogonal(const Eigen::MatrixXd& X) {
        const int d = (int)X.cols();
        Eigen::MatrixXd M = X;
        for (int j = 0; j + 1 < d; ++j) {
            double len = X.col(j).norm();
            if (len < 1e-8) throw solver_error("normalize_to_orthogonal: near-zero column");
            M.col(j) /= len;
        }
        // columns must already be pairwise orthogonal
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (std::abs(M.col(i).dot(M.col(j))) > 1e-9)
                    throw std::invalid_argument("normalize_to_orthogonal: columns not orthogonal");
        return M;
    }

    /// M_n in the original coordinates: M_n^t M_n = I, M_n e_d = n.
    Eigen::MatrixXd matrix(const Eigen::VectorXd& n) const {
        Eigen::MatrixXd M = normalize_to_orthogonal(build_X_rec(permute(n)));
        // undo the coordinate swap on rows
        M.row(0).swap(M.row(swap_index_));
        return M;
    }

private:
    Eigen::VectorXd permute(const Eigen::VectorXd& n) const {
        if ((int)n.size() != dim()) throw std::invalid_argument("rotation: dimension mismatch");
        if (!contains(n)) throw out_of_chart_error("rotation: direction outside chart");
        Eigen::VectorXd m = n;
        std::swap(m[0], m[swap_index_]);
        return m;
    }

    static Eigen::MatrixXd build_X_rec(const Eigen::VectorXd& n) {
        const int d = (int)n.size();
        if (d == 2) {
            Eigen::MatrixXd X(2, 2);
            X << -n[1] / n[0], n[0],
                 1.0,          n[1];
            return X;
        }
        Eigen::MatrixXd Xsub = build_X_rec(n.head(d - 1));
        // A_d solves A_d X_{d-1} = (0,...,0,-n_d)
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d - 1);
        rhs[d - 2] = -n[d - 1];
        Eigen::VectorXd A = Xsub.transpose().partialPivLu().solve(rhs);
        Eigen::MatrixXd X(d, d);
        X.setZero();
        X.block(0, 1, d - 1, d - 1) = Xsub;
        X.block(0, 0, d - 1, 1) = A;
        X(d - 1, 0) = 1.0;
        X(d - 1, d - 1) = n[d - 1];
        return X;
    }

    Eigen::VectorXd anchor_;
    int swap_index_;
    double radius_;
};

/// Chart lookup: the atlas anchored at +-e_k covers directions whose largest
/// coordinate exceeds 1/2; anything else gets a chart anchored at the
/// direction itself. The returned field is the one to use for nearby n.
inline RotationField chart_for(const Eigen::VectorXd& n) {
    const int d = (int)n.size();
    int k = 0;
    for (int i = 1; i < d; ++i)
        if (std::abs(n[i]) > std::abs(n[k])) k = i;
    if (std::abs(n[k]) > 0.5) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
        p[k] = n[k] > 0 ? 1.0 : -1.0;
        return RotationField(p);
    }
    return RotationField(n / n.norm());
}

/// Convenience: M with M e_d = n from the atlas chart containing n.
inline Eigen::MatrixXd rotation_for(const Eigen::VectorXd& n) {
    return chart_for(n).matrix(n);
}

struct SmoothnessProbe {
    double first_diff = 0;   // ||M(n+h t) - M(n-h t)|| / (2h)
    double second_diff = 0;  // ||M(n+h t) - 2 M(n) + M(n-h t)|| / h^2
};

/// Central finite differences of the rotation entries along a tangent
/// direction at n. Steps that leave the chart raise out_of_chart_error.
inline SmoothnessProbe smoothness_probe(const RotationField& field,
                                        const Eigen::VectorXd& n,
                                        const Eigen::VectorXd& tangent,
                                        double h) {
    Eigen::VectorXd t = tangent - tangent.dot(n) * n;
    if (t.norm() < 1e-14) throw std::invalid_argument("smoothness_probe: degenerate tangent");
    t.normalize();
    Eigen::VectorXd np = (n + h * t).normalized();
    Eigen::VectorXd nm = (n - h * t).normalized();
    if (!field.contains(np) || !field.contains(nm) || !field.contains(n))
        throw out_of_chart_error("smoothness_probe: step leaves chart");
    Eigen::MatrixXd Mp = field.matrix(np), M0 = field.matrix(n), Mm = field.matrix(nm);
    SmoothnessProbe r;
    r.first_diff = (Mp - Mm).norm() / (2 * h);
    r.second_diff = (Mp - 2 * M0 + Mm).norm() / (h * h);
    return r;
}

} // namespace bltail
