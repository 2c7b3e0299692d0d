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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qterm/model.hpp"

namespace qterm {

/// Node of the derivation tree: pure states that never terminate along `word`.
struct DivNode {
    Scheduler word;
    Subspace space;
    std::vector<std::pair<std::string, size_t>> children;  // action -> node index; zero-dim children omitted
    Scheduler loop;  // nonempty once stabilized: word . loop^omega keeps the whole space
    size_t depth = 0;
    std::optional<size_t> parent;

    bool stabilized() const {
        return !loop.empty();
    }
};

struct DivergenceResult {
    Subspace pd0;
    std::vector<DivNode> nodes;  // nodes[0] is the root when pd0 is nonnull
    std::vector<size_t> leaves;  // stabilized nodes, in discovery order
    std::vector<Index> union_dim_profile;  // dim of the join of node spaces per explored layer
    size_t depth = 0;  // deepest stabilized node

    const DivNode &leaf(size_t i) const {
        return nodes[leaves[i]];
    }
};

/// Kernel of M_false.
inline Subspace pd_zero(const QuantumMDP &m, const Tolerances &tol = {}) {
    return nullspace(m.meas.m_false, m.dim, tol);
}

/// States psi in pd0 whose one-step image under `action` stays in `suffix_space`:
/// <perp_j| F_k |psi> = 0 for every perp_j spanning the complement and every guarded Kraus F_k.
inline Subspace derive_child(const QuantumMDP &m, const std::string &action,
                             const Subspace &suffix_space, const Subspace &pd0,
                             const Tolerances &tol = {}) {
    if (pd0.dim() == 0) {
        return pd0;
    }
    Subspace perp = orthocomplement(suffix_space, tol);
    const auto &kraus = m.dynamics_of(action).kraus;
    Mat rows(perp.dim() * static_cast<Index>(kraus.size()), pd0.dim());
    Index r = 0;
    for (const auto &k : kraus) {
        Mat fk = k * m.meas.m_true * pd0.basis;  // coordinates over pd0
        rows.middleRows(r, perp.dim()) = perp.basis.adjoint() * fk;
        r += perp.dim();
    }
    Subspace coords = nullspace(rows, pd0.dim(), tol);
    Mat vecs = pd0.basis * coords.basis;
    return Subspace(canonical_basis(vecs, tol));
}

/// Breadth-first derivation tree. A node ς stabilizes with loop λ when the
/// spaces of ς.λ^k equal its own for k = 1..d; the images then form an
/// ascending chain that stopped growing, so ς.λ^ω keeps every state of the
/// node alive. λ is found as the word from ς down to a descendant with an
/// equal space; shorter loops (nearer ancestors, earlier actions) win.
/// Descendants of a stabilized node are not explored further.
inline DivergenceResult compute_divergent(const QuantumMDP &m, const Tolerances &tol = {}) {
    DivergenceResult res;
    res.pd0 = pd_zero(m, tol);
    if (res.pd0.dim() == 0) {
        return res;
    }
    // Space of any word, built from its suffix: PDS^{a.w} = derive(a, PDS^w).
    std::map<Scheduler, Subspace> memo;
    memo[{}] = res.pd0;
    std::function<Subspace(const Scheduler &)> space_of = [&](const Scheduler &w) -> Subspace {
        auto it = memo.find(w);
        if (it != memo.end()) {
            return it->second;
        }
        Scheduler suffix(w.begin() + 1, w.end());
        Subspace s = derive_child(m, w.front(), space_of(suffix), res.pd0, tol);
        memo.emplace(w, s);
        return s;
    };
    const size_t d = static_cast<size_t>(m.dim);
    auto keeps = [&](const Scheduler &word, const Scheduler &loop, const Subspace &space) {
        Scheduler w = word;
        for (size_t k = 1; k <= d; ++k) {
            w.insert(w.end(), loop.begin(), loop.end());
            if (!subspace_equal(space_of(w), space, tol)) {
                return false;
            }
        }
        return true;
    };
    auto covered = [&](size_t idx) {
        for (std::optional<size_t> a = res.nodes[idx].parent; a; a = res.nodes[*a].parent) {
            if (res.nodes[*a].stabilized()) {
                return true;
            }
        }
        return false;
    };

    res.nodes.push_back({{}, res.pd0, {}, {}, 0, std::nullopt});
    std::vector<size_t> layer{0};
    // Loops of length up to d are searched below every node.
    const size_t max_layers = 2 * d;
    for (size_t depth = 0; !layer.empty(); ++depth) {
        Subspace joined = Subspace::zero(m.dim);
        for (size_t idx : layer) {
            joined = subspace_join(joined, res.nodes[idx].space, tol);
        }
        res.union_dim_profile.push_back(joined.dim());
        if (depth > max_layers) {
            throw InconsistencyError("compute_divergent: derivation tree did not stabilize within " +
                                     std::to_string(max_layers) + " layers");
        }
        std::vector<size_t> next;
        for (size_t idx : layer) {
            if (covered(idx)) {
                continue;
            }
            for (const auto &a : m.actions) {
                Scheduler w = res.nodes[idx].word;
                w.push_back(a);
                Subspace s = space_of(w);
                if (s.dim() == 0) {
                    continue;
                }
                res.nodes.push_back({w, s, {}, {}, depth + 1, idx});
                size_t child = res.nodes.size() - 1;
                res.nodes[idx].children.emplace_back(a, child);
                // Nearest ancestor first; depth d bounds useful loop lengths.
                for (std::optional<size_t> anc = idx; anc && depth + 1 - res.nodes[*anc].depth <= d;
                     anc = res.nodes[*anc].parent) {
                    DivNode &an = res.nodes[*anc];
                    if (an.stabilized() || an.space.dim() != s.dim()) {
                        continue;
                    }
                    Scheduler loop(w.begin() + static_cast<long>(an.word.size()), w.end());
                    if (subspace_equal(s, an.space, tol) && keeps(an.word, loop, an.space)) {
                        an.loop = loop;
                        res.leaves.push_back(*anc);
                        res.depth = std::max(res.depth, an.depth);
                        break;
                    }
                }
                next.push_back(child);
            }
        }
        layer = std::move(next);
    }
    return res;
}

/// Largest truncated TP over the basis of a stabilized node under word . loop^omega.
inline double divergence_leak(const QuantumMDP &m, const DivNode &node, size_t extra_steps) {
    LassoScheduler s{node.word, node.loop};
    double worst = 0.0;
    for (Index j = 0; j < node.space.dim(); ++j) {
        auto tp = termination_probability_lasso(m, outer(node.space.vector(j)), s,
                                                node.word.size() + extra_steps);
        worst = std::max(worst, tp.lower_bound);
    }
    return worst;
}

/// word . loop^omega, checked over 3d steps past the prefix.
inline LassoScheduler divergence_scheduler(const QuantumMDP &m, const DivNode &node,
                                           const Tolerances &tol = {}) {
    if (!node.stabilized()) {
        throw PreconditionError("divergence_scheduler: node is not stabilized");
    }
    double leak = divergence_leak(m, node, 3 * static_cast<size_t>(m.dim));
    if (leak > tol.rank_tol) {
        throw InconsistencyError("divergence_scheduler: divergent space leaks termination probability " +
                                 std::to_string(leak));
    }
    return LassoScheduler{node.word, node.loop}.canonical();
}

}  // namespace qterm
