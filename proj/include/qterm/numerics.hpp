// Copyright 2026 The qterm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qterm/errors.hpp"

namespace qterm {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Thresholds for every zero/rank decision made by the library.
struct Tolerances {
    double norm_tol = 1e-9;
    double herm_tol = 1e-9;
    double psd_tol = 1e-9;
    double trace_tol = 1e-9;
    double ortho_tol = 1e-9;
    double rank_tol = 1e-8;

    void validate() const {
        for (double t : {norm_tol, herm_tol, psd_tol, trace_tol, ortho_tol, rank_tol}) {
            if (!(t > 0) || !std::isfinite(t)) {
                throw ValidationError("tolerances must be finite and strictly positive");
            }
        }
    }
};

/// Linear subspace stored as an ambient x k matrix with orthonormal columns.
struct Subspace {
    Mat basis;

    Subspace() = default;
    explicit Subspace(Mat orthonormal_columns) : basis(std::move(orthonormal_columns)) {
    }

    static Subspace zero(Index d) {
        return Subspace(Mat(d, 0));
    }
    static Subspace full(Index d) {
        return Subspace(Mat::Identity(d, d));
    }

    Index ambient() const {
        return basis.rows();
    }
    Index dim() const {
        return basis.cols();
    }
    Vec vector(Index i) const {
        return basis.col(i);
    }
    Mat projector() const {
        return basis * basis.adjoint();
    }
};

inline Vec ket(Index d, Index i) {
    Vec v = Vec::Zero(d);
    v(i) = 1.0;
    return v;
}

inline Mat outer(const Vec &v) {
    return v * v.adjoint();
}

inline Mat outer(const Vec &a, const Vec &b) {
    return a * b.adjoint();
}

/// |<a|b>|^2 / (|a|^2 |b|^2).
inline double fidelity(const Vec &a, const Vec &b) {
    double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na == 0 || nb == 0) {
        return 0.0;
    }
    return std::norm(a.dot(b)) / (na * nb);
}

inline double max_abs(const Mat &m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Mat &a, const Tolerances &tol = {}) {
    return a.rows() == a.cols() && max_abs(a - a.adjoint()) <= tol.herm_tol;
}

inline void require_square(const Mat &a, const char *what) {
    if (a.rows() != a.cols()) {
        throw ValidationError(std::string(what) + ": matrix is not square");
    }
}

inline void require_hermitian(const Mat &a, const Tolerances &tol, const char *what) {
    require_square(a, what);
    if (!is_hermitian(a, tol)) {
        throw ValidationError(std::string(what) + ": operator is not Hermitian within herm_tol");
    }
}

/// Makes the first entry with modulus above rank_tol real and positive.
inline Vec fix_phase(Vec v, const Tolerances &tol = {}) {
    for (Index i = 0; i < v.size(); ++i) {
        double a = std::abs(v(i));
        if (a > tol.rank_tol) {
            v *= std::conj(v(i)) / a;
            v(i) = cplx(v(i).real(), 0.0);
            break;
        }
    }
    return v;
}

/// Real counterpart of fix_phase: first significant entry made positive.
inline RVec fix_sign(RVec v, const Tolerances &tol = {}) {
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > tol.rank_tol) {
            if (v(i) < 0) {
                v = -v;
            }
            break;
        }
    }
    return v;
}

namespace detail {

// Reduced row echelon form of the rows of `r`, then Gram-Schmidt in row order.
// The result depends only on the row space, so SVD sign and rotation freedom
// never leaks into returned bases.
template <typename MatT>
MatT canonical_rows(MatT r, double pivot_tol) {
    using Scalar = typename MatT::Scalar;
    const Index rows = r.rows(), cols = r.cols();
    Index lead = 0;
    for (Index c = 0; c < cols && lead < rows; ++c) {
        Index p;
        double best = r.col(c).segment(lead, rows - lead).cwiseAbs().maxCoeff(&p);
        if (best <= pivot_tol) {
            continue;
        }
        p += lead;
        r.row(p).swap(r.row(lead));
        Scalar piv = r(lead, c);
        r.row(lead) /= piv;
        for (Index i = 0; i < rows; ++i) {
            if (i != lead && r(i, c) != Scalar(0)) {
                Scalar f = r(i, c);
                r.row(i) -= f * r.row(lead);
            }
        }
        ++lead;
    }
    MatT out(lead, cols);
    Index kept = 0;
    for (Index i = 0; i < lead; ++i) {
        auto v = r.row(i).transpose().eval();
        for (int pass = 0; pass < 2; ++pass) {
            for (Index j = 0; j < kept; ++j) {
                auto q = out.row(j).transpose().eval();
                Scalar c = q.dot(v);
                v -= c * q;
            }
        }
        double n = v.norm();
        if (n <= pivot_tol) {
            continue;
        }
        out.row(kept++) = (v / n).transpose();
    }
    return out.topRows(kept);
}

}  // namespace detail

/// Deterministic orthonormal basis for the column span of an orthonormal `cols`.
inline Mat canonical_basis(const Mat &cols, const Tolerances &tol = {}) {
    if (cols.cols() == 0) {
        return cols;
    }
    Mat rows = detail::canonical_rows<Mat>(cols.transpose(), tol.rank_tol);
    if (rows.rows() != cols.cols()) {
        return cols;  // pivoting lost a direction; keep the input basis
    }
    Mat out = rows.transpose();
    for (Index j = 0; j < out.cols(); ++j) {
        out.col(j) = fix_phase(out.col(j), tol);
    }
    return out;
}

inline RMat canonical_real_basis(const RMat &cols, const Tolerances &tol = {}) {
    if (cols.cols() == 0) {
        return cols;
    }
    RMat rows = detail::canonical_rows<RMat>(cols.transpose(), tol.rank_tol);
    if (rows.rows() != cols.cols()) {
        return cols;
    }
    RMat out = rows.transpose();
    for (Index j = 0; j < out.cols(); ++j) {
        out.col(j) = fix_sign(out.col(j), tol);
    }
    return out;
}

/// Span of eigenvectors whose |eigenvalue| exceeds rank_tol times the spectral radius
/// (absolute rank_tol when the operator is tiny). Ordered by decreasing |eigenvalue|.
inline Subspace support(const Mat &op, const Tolerances &tol = {}) {
    require_hermitian(op, tol, "support");
    const Index d = op.rows();
    if (d == 0) {
        return Subspace::zero(0);
    }
    Mat h = (op + op.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const RVec &ev = es.eigenvalues();
    double radius = ev.cwiseAbs().maxCoeff();
    double cut = radius > tol.rank_tol ? tol.rank_tol * radius : tol.rank_tol;
    std::vector<Index> keep;
    for (Index i = 0; i < d; ++i) {
        if (std::abs(ev(i)) > cut) {
            keep.push_back(i);
        }
    }
    std::stable_sort(keep.begin(), keep.end(),
                     [&](Index a, Index b) { return std::abs(ev(a)) > std::abs(ev(b)); });
    Mat basis(d, static_cast<Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
        basis.col(static_cast<Index>(j)) = fix_phase(es.eigenvectors().col(keep[j]), tol);
    }
    return Subspace(basis);
}

/// Normalized residual of v against the basis, or empty when v is (numerically) inside it.
/// The residual threshold is rank_tol relative to |v|.
inline std::optional<Vec> gram_schmidt_extend(const Subspace &s, const Vec &v,
                                               const Tolerances &tol = {}) {
    if (v.size() != s.ambient()) {
        throw ValidationError("gram_schmidt_extend: dimension mismatch");
    }
    double nv = v.norm();
    if (nv == 0) {
        return std::nullopt;
    }
    Vec r = v;
    for (int pass = 0; pass < 2; ++pass) {
        r -= s.basis * (s.basis.adjoint() * r);
    }
    double nr = r.norm();
    if (nr <= tol.rank_tol * nv) {
        return std::nullopt;
    }
    return fix_phase(r / nr, tol);
}

/// Grows `s` by v when v adds a direction. Returns whether it did.
inline bool extend_in_place(Subspace &s, const Vec &v, const Tolerances &tol = {}) {
    auto r = gram_schmidt_extend(s, v, tol);
    if (!r) {
        return false;
    }
    s.basis.conservativeResize(Eigen::NoChange, s.dim() + 1);
    s.basis.col(s.dim() - 1) = *r;
    return true;
}

/// Orthonormalized span of the columns of `vectors`, in column order.
inline Subspace span_of(const Mat &vectors, const Tolerances &tol = {}) {
    Subspace s = Subspace::zero(vectors.rows());
    for (Index j = 0; j < vectors.cols(); ++j) {
        extend_in_place(s, vectors.col(j), tol);
    }
    return s;
}

inline Subspace span_of(const std::vector<Vec> &vectors, Index d, const Tolerances &tol = {}) {
    Subspace s = Subspace::zero(d);
    for (const auto &v : vectors) {
        extend_in_place(s, v, tol);
    }
    return s;
}

inline Subspace subspace_join(const Subspace &a, const Subspace &b, const Tolerances &tol = {}) {
    if (a.ambient() != b.ambient()) {
        throw ValidationError("subspace_join: ambient dimension mismatch");
    }
    Subspace s = a;
    for (Index j = 0; j < b.dim(); ++j) {
        extend_in_place(s, b.vector(j), tol);
    }
    return s;
}

/// Orthonormal basis of {x : rows * x = 0}, canonicalized.
inline Subspace nullspace(const Mat &rows, Index nvars, const Tolerances &tol = {}) {
    if (rows.rows() == 0) {
        return Subspace::full(nvars);
    }
    if (rows.cols() != nvars) {
        throw ValidationError("nullspace: constraint width does not match variable count");
    }
    if (nvars == 0) {
        return Subspace::zero(0);
    }
    Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullV);
    const RVec &sv = svd.singularValues();
    double cut = tol.rank_tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) {
            ++rank;
        }
    }
    Mat null = svd.matrixV().rightCols(nvars - rank);
    return Subspace(canonical_basis(null, tol));
}

/// Real counterpart: columns form an orthonormal basis of {x : rows * x = 0}.
inline RMat real_nullspace(const RMat &rows, Index nvars, const Tolerances &tol = {}) {
    if (rows.rows() == 0) {
        return RMat::Identity(nvars, nvars);
    }
    if (rows.cols() != nvars) {
        throw ValidationError("real_nullspace: constraint width does not match variable count");
    }
    if (nvars == 0) {
        return RMat(0, 0);
    }
    Eigen::JacobiSVD<RMat> svd(rows, Eigen::ComputeFullV);
    const RVec &sv = svd.singularValues();
    double cut = tol.rank_tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) {
            ++rank;
        }
    }
    RMat null = svd.matrixV().rightCols(nvars - rank);
    return canonical_real_basis(null, tol);
}

inline Subspace orthocomplement(const Subspace &s, const Tolerances &tol = {}) {
    if (s.dim() == 0) {
        return Subspace::full(s.ambient());
    }
    return nullspace(s.basis.adjoint(), s.ambient(), tol);
}

/// Meet of two subspaces: nullspace of the stacked complement projectors.
inline Subspace subspace_intersect(const Subspace &a, const Subspace &b,
                                   const Tolerances &tol = {}) {
    if (a.ambient() != b.ambient()) {
        throw ValidationError("subspace_intersect: ambient dimension mismatch");
    }
    const Index d = a.ambient();
    if (a.dim() == 0 || b.dim() == 0) {
        return Subspace::zero(d);
    }
    Mat stacked(2 * d, d);
    stacked.topRows(d) = Mat::Identity(d, d) - a.projector();
    stacked.bottomRows(d) = Mat::Identity(d, d) - b.projector();
    return nullspace(stacked, d, tol);
}

/// |v - P_s v| <= rank_tol |v|.
inline bool membership(const Vec &v, const Subspace &s, const Tolerances &tol = {}) {
    if (v.size() != s.ambient()) {
        throw ValidationError("membership: dimension mismatch");
    }
    double nv = v.norm();
    if (nv == 0) {
        return true;
    }
    Vec r = v - s.basis * (s.basis.adjoint() * v);
    return r.norm() <= tol.rank_tol * nv;
}

/// Every basis vector of `inner` is a member of `outer_space`.
inline bool contains(const Subspace &outer_space, const Subspace &inner,
                     const Tolerances &tol = {}) {
    for (Index j = 0; j < inner.dim(); ++j) {
        if (!membership(inner.vector(j), outer_space, tol)) {
            return false;
        }
    }
    return true;
}

/// Mutual membership; bases are never compared directly.
inline bool subspace_equal(const Subspace &a, const Subspace &b, const Tolerances &tol = {}) {
    return a.ambient() == b.ambient() && a.dim() == b.dim() && contains(a, b, tol) &&
           contains(b, a, tol);
}

// ---- Hermitian operators as real vectors ------------------------------------
//
// Coordinates, in order: the d diagonal entries; then sqrt2*Re(h_ij) for i<j in
// lexicographic order; then sqrt2*Im(h_ij) in the same order. The map is an
// isometry from the Frobenius inner product to the Euclidean one.

inline Index pair_count(Index d) {
    return d * (d - 1) / 2;
}

inline RVec hermitian_vectorize(const Mat &h) {
    require_square(h, "hermitian_vectorize");
    const Index d = h.rows(), np = pair_count(d);
    RVec v(d * d);
    const double s2 = std::sqrt(2.0);
    for (Index i = 0; i < d; ++i) {
        v(i) = h(i, i).real();
    }
    Index p = 0;
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j, ++p) {
            // Average the two triangles so slightly non-Hermitian input rounds to its Hermitian part.
            cplx hij = (h(i, j) + std::conj(h(j, i))) / 2.0;
            v(d + p) = s2 * hij.real();
            v(d + np + p) = s2 * hij.imag();
        }
    }
    return v;
}

inline Mat hermitian_devectorize(const RVec &v) {
    const Index d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (d * d != v.size()) {
        throw ValidationError("hermitian_devectorize: length is not a perfect square");
    }
    const Index np = pair_count(d);
    const double s2 = std::sqrt(2.0);
    Mat h = Mat::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        h(i, i) = v(i);
    }
    Index p = 0;
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j, ++p) {
            cplx hij(v(d + p) / s2, v(d + np + p) / s2);
            h(i, j) = hij;
            h(j, i) = std::conj(hij);
        }
    }
    return h;
}

/// Real basis of the Hermitian operators supported on s, ordered like the vectorization.
inline std::vector<Mat> hermitian_basis_on(const Subspace &s) {
    const Index k = s.dim();
    const double s2 = std::sqrt(2.0);
    const cplx I(0, 1);
    std::vector<Mat> out;
    out.reserve(static_cast<size_t>(k * k));
    for (Index a = 0; a < k; ++a) {
        out.push_back(outer(s.vector(a)));
    }
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            Mat ab = outer(s.vector(a), s.vector(b));
            out.push_back((ab + ab.adjoint()) / s2);
        }
    }
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            Mat ab = outer(s.vector(a), s.vector(b));
            out.push_back(I * (ab - ab.adjoint()) / s2);
        }
    }
    return out;
}

/// Linearly independent Hermitian operators, kept with an orthonormal copy of
/// their vectorizations for fast independence tests.
class OperatorSpace {
public:
    OperatorSpace() = default;
    explicit OperatorSpace(Index d) : d_(d), vecs_(d * d, 0), q_(d * d, 0) {
    }

    Index ambient() const {
        return d_;
    }
    size_t size() const {
        return basis_.size();
    }
    const std::vector<Mat> &basis() const {
        return basis_;
    }
    /// d^2 x size() matrix of vectorized basis elements.
    const RMat &vectors() const {
        return vecs_;
    }

    /// Component of vec(h) orthogonal to the space, relative to |h|.
    double relative_residual(const Mat &h) const {
        RVec x = hermitian_vectorize(h);
        double nx = x.norm();
        if (nx == 0) {
            return 0.0;
        }
        RVec r = x;
        for (int pass = 0; pass < 2; ++pass) {
            r -= q_ * (q_.transpose() * r);
        }
        return r.norm() / nx;
    }

    bool add_if_independent(const Mat &h, const Tolerances &tol = {}) {
        if (h.rows() != d_ || h.cols() != d_) {
            throw ValidationError("OperatorSpace: operator dimension mismatch");
        }
        RVec x = hermitian_vectorize(h);
        double nx = x.norm();
        if (nx == 0) {
            return false;
        }
        RVec r = x;
        for (int pass = 0; pass < 2; ++pass) {
            r -= q_ * (q_.transpose() * r);
        }
        if (r.norm() <= tol.rank_tol * nx) {
            return false;
        }
        basis_.push_back(h);
        vecs_.conservativeResize(Eigen::NoChange, vecs_.cols() + 1);
        vecs_.col(vecs_.cols() - 1) = x;
        q_.conservativeResize(Eigen::NoChange, q_.cols() + 1);
        q_.col(q_.cols() - 1) = r / r.norm();
        return true;
    }

private:
    Index d_ = 0;
    std::vector<Mat> basis_;
    RMat vecs_;
    RMat q_;
};

struct OperatorExpansion {
    bool member = false;
    RVec coefficients;  // over space.basis(), in order
    double residual = 0.0;  // |vec(h) - sum c_i vec(b_i)|
};

/// Least-squares expansion of h over the space. Member iff residual <= rank_tol |h|.
inline OperatorExpansion operator_membership(const Mat &h, const OperatorSpace &space,
                                             const Tolerances &tol = {}) {
    require_hermitian(h, tol, "operator_membership");
    if (h.rows() != space.ambient()) {
        throw ValidationError("operator_membership: dimension mismatch");
    }
    OperatorExpansion out;
    RVec x = hermitian_vectorize(h);
    if (space.size() == 0) {
        out.coefficients = RVec(0);
        out.residual = x.norm();
    } else {
        out.coefficients = space.vectors().completeOrthogonalDecomposition().solve(x);
        out.residual = (space.vectors() * out.coefficients - x).norm();
    }
    out.member = out.residual <= tol.rank_tol * x.norm();
    return out;
}

}  // namespace qterm
