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

#include <string>
#include <vector>

#include "qterm/model.hpp"

namespace qterm {

/// A pure state reachable from the input, with a finite scheduler that reaches it.
struct ReachGenerator {
    Vec vector;
    Scheduler word;
};

/// Subspace reachable under any scheduler (the join of all reachable supports).
struct ReachSpaceI {
    Subspace basis;
    std::vector<ReachGenerator> generators;
    int chain_depth = 0;
    std::vector<Subspace> chain;  // chain[i] is the space after i expansion rounds
};

/// Span of reachable pure states of the operator-level model, as Hermitian operators.
struct ReachSpaceII {
    std::vector<ReachGenerator> pure_basis;
    OperatorSpace op_space;
    int chain_depth = 0;
    std::vector<size_t> chain_sizes;  // |pure_basis| after each round
};

namespace detail {

inline Vec normalized_image(const Mat &kraus, const Mat &m_true, const Vec &psi,
                            const Tolerances &tol, bool &nonzero) {
    Vec img = kraus * (m_true * psi);
    double n = img.norm();
    nonzero = n > tol.rank_tol;
    if (!nonzero) {
        return img;
    }
    return fix_phase(img / n, tol);
}

}  // namespace detail

/// Least fixedpoint of S_{i+1} = S_i v supp(F(S_i)) over the averaged guarded map.
/// Generators are raw normalized Kraus images, one per dimension increment;
/// only vectors added in the previous round are expanded.
inline ReachSpaceI reachable_space_I(const QuantumMDP &m, const Mat &rho0,
                                     const Tolerances &tol = {}) {
    if (rho0.rows() != m.dim || rho0.cols() != m.dim) {
        throw ValidationError("reachable_space_I: input has wrong dimension");
    }
    if (std::abs(rho0.trace()) <= tol.rank_tol) {
        throw PreconditionError("reachable_space_I: zero-trace input");
    }
    ReachSpaceI r;
    r.basis = Subspace::zero(m.dim);
    Subspace seeds = support(rho0, tol);
    std::vector<size_t> frontier;
    for (Index j = 0; j < seeds.dim(); ++j) {
        if (extend_in_place(r.basis, seeds.vector(j), tol)) {
            r.generators.push_back({seeds.vector(j), {}});
            frontier.push_back(r.generators.size() - 1);
        }
    }
    r.chain.push_back(r.basis);
    while (!frontier.empty() && r.basis.dim() < m.dim) {
        std::vector<size_t> added;
        for (size_t gi : frontier) {
            for (size_t j = 0; j < m.actions.size(); ++j) {
                for (const auto &k : m.dynamics[j].kraus) {
                    bool nonzero = false;
                    Vec img = detail::normalized_image(k, m.meas.m_true, r.generators[gi].vector, tol, nonzero);
                    if (!nonzero || !extend_in_place(r.basis, img, tol)) {
                        continue;
                    }
                    Scheduler w = r.generators[gi].word;
                    w.push_back(m.actions[j]);
                    r.generators.push_back({img, w});
                    added.push_back(r.generators.size() - 1);
                }
            }
        }
        if (added.empty()) {
            break;
        }
        ++r.chain_depth;
        r.chain.push_back(r.basis);
        frontier = std::move(added);
    }
    return r;
}

/// Frontier expansion over the operator-level actions E_{j,k} M_true, keeping
/// states whose outer products are independent of those already kept.
inline ReachSpaceII reachable_space_II(const QuantumMDP &m, const Vec &psi0,
                                       const Tolerances &tol = {}) {
    if (psi0.size() != m.dim) {
        throw ValidationError("reachable_space_II: input has wrong dimension");
    }
    if (std::abs(psi0.norm() - 1.0) > tol.norm_tol) {
        throw ValidationError("reachable_space_II: input state is not normalized");
    }
    ReachSpaceII r;
    r.op_space = OperatorSpace(m.dim);
    Vec v0 = fix_phase(psi0, tol);
    r.op_space.add_if_independent(outer(v0), tol);
    r.pure_basis.push_back({v0, {}});
    r.chain_sizes.push_back(1);
    auto ops = operator_level(m);
    std::vector<size_t> frontier{0};
    while (!frontier.empty()) {
        std::vector<size_t> added;
        for (size_t gi : frontier) {
            for (const auto &op : ops) {
                bool nonzero = false;
                Vec img = detail::normalized_image(op.kraus, m.meas.m_true, r.pure_basis[gi].vector, tol, nonzero);
                if (!nonzero || !r.op_space.add_if_independent(outer(img), tol)) {
                    continue;
                }
                Scheduler w = r.pure_basis[gi].word;
                w.push_back(op.parent);
                r.pure_basis.push_back({img, w});
                added.push_back(r.pure_basis.size() - 1);
            }
        }
        if (added.empty()) {
            break;
        }
        ++r.chain_depth;
        r.chain_sizes.push_back(r.pure_basis.size());
        frontier = std::move(added);
    }
    return r;
}

struct GeneratorTerm {
    cplx coefficient;
    ReachGenerator generator;
    size_t index;  // position in ReachSpaceI::generators
};

/// Writes v over a linearly independent subset of the generators, chosen in
/// discovery order. Terms with |coefficient| <= rank_tol are dropped.
inline std::vector<GeneratorTerm> express_in_generators(const Vec &v, const ReachSpaceI &r,
                                                        const Tolerances &tol = {}) {
    if (v.size() != r.basis.ambient()) {
        throw ValidationError("express_in_generators: dimension mismatch");
    }
    if (!membership(v, r.basis, tol)) {
        throw PreconditionError("express_in_generators: vector is outside the reachable space");
    }
    std::vector<size_t> picked;
    Subspace acc = Subspace::zero(v.size());
    for (size_t i = 0; i < r.generators.size(); ++i) {
        if (extend_in_place(acc, r.generators[i].vector, tol)) {
            picked.push_back(i);
        }
    }
    Mat g(v.size(), static_cast<Index>(picked.size()));
    for (size_t c = 0; c < picked.size(); ++c) {
        g.col(static_cast<Index>(c)) = r.generators[picked[c]].vector;
    }
    Vec coeffs = g.colPivHouseholderQr().solve(v);
    if ((g * coeffs - v).norm() > tol.rank_tol * std::max(1.0, v.norm())) {
        throw InconsistencyError("express_in_generators: reconstruction residual exceeds rank_tol");
    }
    std::vector<GeneratorTerm> out;
    for (size_t c = 0; c < picked.size(); ++c) {
        cplx k = coeffs(static_cast<Index>(c));
        if (std::abs(k) > tol.rank_tol) {
            out.push_back({k, r.generators[picked[c]], picked[c]});
        }
    }
    return out;
}

}  // namespace qterm
