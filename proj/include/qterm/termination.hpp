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
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qterm/divergence.hpp"
#include "qterm/reachability.hpp"

namespace qterm {

/// Real basis (as Hermitian operators on s) of the solutions of map(g) = g.
/// Solutions come out in the canonical order of the real nullspace.
inline std::vector<Mat> stationary_solutions(const std::function<Mat(const Mat &)> &map,
                                             const Subspace &s, const Tolerances &tol = {}) {
    if (s.dim() == 0) {
        return {};
    }
    auto basis = hermitian_basis_on(s);
    const Index d = s.ambient();
    RMat a(d * d, static_cast<Index>(basis.size()));
    for (size_t i = 0; i < basis.size(); ++i) {
        a.col(static_cast<Index>(i)) = hermitian_vectorize(map(basis[i]) - basis[i]);
    }
    RMat null = real_nullspace(a, static_cast<Index>(basis.size()), tol);
    std::vector<Mat> out;
    for (Index c = 0; c < null.cols(); ++c) {
        Mat g = Mat::Zero(d, d);
        for (size_t i = 0; i < basis.size(); ++i) {
            g += null(static_cast<Index>(i), c) * basis[i];
        }
        out.push_back(g / g.norm());
    }
    return out;
}

/// |g| = g+ + g- for Hermitian g.
inline Mat hermitian_abs(const Mat &g) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat((g + g.adjoint()) / 2.0));
    const Mat &u = es.eigenvectors();
    return u * es.eigenvalues().cwiseAbs().cast<cplx>().asDiagonal() * u.adjoint();
}

/// A nonzero Hermitian g on s with F_loop(g) = g (unit Frobenius norm), if any.
/// For a trace-nonincreasing CP map the positive and negative parts of a fixed
/// point are fixed too, so the sum of |g| over the solution basis is a positive
/// fixed point whose support joins all solution supports. It is returned when
/// that holds numerically; otherwise the first solution is.
inline std::optional<Mat> fixedpoint_hermitian(const QuantumMDP &m, const Scheduler &loop,
                                               const Subspace &s, const Tolerances &tol = {}) {
    auto map = [&](const Mat &g) { return apply_word(m, loop, g); };
    auto sols = stationary_solutions(map, s, tol);
    if (sols.empty()) {
        return std::nullopt;
    }
    Mat acc = Mat::Zero(s.ambient(), s.ambient());
    for (const auto &g : sols) {
        acc += hermitian_abs(g);
    }
    acc /= acc.norm();
    if (max_abs(map(acc) - acc) <= tol.rank_tol) {
        return acc;
    }
    return sols.front();
}

inline std::optional<Mat> fixedpoint_hermitian(const QuantumMDP &m, const std::string &action,
                                               const Subspace &s, const Tolerances &tol = {}) {
    return fixedpoint_hermitian(m, Scheduler{action}, s, tol);
}

enum class TermStatus { Terminating, Nonterminating };

inline const char *to_string(TermStatus s) {
    return s == TermStatus::Terminating ? "Terminating" : "Nonterminating";
}

/// One attempt of the candidate loop.
struct CandidateRecord {
    size_t generator_index = 0;
    Scheduler generator_word;
    cplx coefficient;
    double reached_trace = 0.0;   // tr F_prefix(|psi_k><psi_k|)
    Index loop_space_dim = 0;     // dim of the reachable space under the loop
    bool has_fixedpoint = false;
    std::optional<LassoTP> validation;
    size_t validation_steps = 0;  // unrolled actions behind `validation`
    bool accepted = false;
};

struct TerminationVerdict {
    TermStatus status = TermStatus::Terminating;
    Index reach_dim = 0;
    size_t leaf_count = 0;

    // Present when nonterminating.
    std::optional<Vec> witness;
    std::optional<size_t> leaf;  // index into DivergenceResult::leaves
    std::optional<LassoScheduler> divergence;  // canonical lasso of the witness leaf

    // Filled by synth_nontermination_scheduler.
    std::vector<GeneratorTerm> expansion;
    std::vector<CandidateRecord> candidates;
    std::optional<LassoScheduler> scheduler;
    std::optional<Mat> certificate;
    Subspace certificate_space;
    double certificate_residual = 0.0;
    std::optional<LassoTP> validation;
    size_t validation_steps = 0;  // steps behind `validation` (25*d unless extended)

    Tolerances tolerances_used;
};

struct NontermOptions {
    std::optional<Vec> witness;          // must lie in the reachable space and a leaf space
    std::vector<size_t> candidate_order;  // indices into the expansion; empty = discovery order
    size_t validation_steps = 0;          // 0 means 25*d
    double validation_margin = 1e-6;      // TP must stay <= 1 - margin
    double plateau_tol = 1e-9;            // gain over the final loop period
    unsigned max_doublings = 8;           // budget may grow to validation_steps * 2^max_doublings
};

namespace detail {

inline void find_witness(TerminationVerdict &v, const ReachSpaceI &reach, const DivergenceResult &div,
                         const std::optional<Vec> &forced, const Tolerances &tol) {
    for (size_t i = 0; i < div.leaves.size(); ++i) {
        const Subspace &space = div.leaf(i).space;
        if (forced) {
            if (membership(*forced, space, tol)) {
                v.witness = fix_phase(forced->normalized(), tol);
                v.leaf = i;
                return;
            }
            continue;
        }
        Subspace meet = subspace_intersect(reach.basis, space, tol);
        if (meet.dim() == 0) {
            continue;
        }
        v.leaf = i;
        // Prefer a generator: it keeps the synthesized prefix short.
        for (const auto &g : reach.generators) {
            if (membership(g.vector, meet, tol)) {
                v.witness = g.vector;
                return;
            }
        }
        v.witness = meet.vector(0);
        return;
    }
    if (forced) {
        throw PreconditionError("forced witness is not in any divergent leaf space");
    }
}

inline TerminationVerdict decide(const ReachSpaceI &reach,
                                 const DivergenceResult &div, const std::optional<Vec> &forced,
                                 const Tolerances &tol) {
    TerminationVerdict v;
    v.tolerances_used = tol;
    v.reach_dim = reach.basis.dim();
    v.leaf_count = div.leaves.size();
    if (forced && !membership(*forced, reach.basis, tol)) {
        throw PreconditionError("forced witness is not in the reachable space");
    }
    find_witness(v, reach, div, forced, tol);
    if (v.witness) {
        v.status = TermStatus::Nonterminating;
        const DivNode &leaf = div.leaf(*v.leaf);
        v.divergence = LassoScheduler{leaf.word, leaf.loop}.canonical();
    }
    return v;
}

}  // namespace detail

/// Nonterminating iff the reachable space meets some divergent leaf space.
inline TerminationVerdict check_termination(const QuantumMDP &m, const Mat &rho0,
                                            const Tolerances &tol = {}) {
    require_density(rho0, m.dim, tol, false, "check_termination");
    auto reach = reachable_space_I(m, rho0, tol);
    auto div = compute_divergent(m, tol);
    return detail::decide(reach, div, std::nullopt, tol);
}

/// Finds a lasso under which rho0 terminates with probability below one, or
/// reports Terminating. Candidates are reachable generators expressing the
/// witness; each is accepted only after the truncated TP check from rho0.
inline TerminationVerdict synth_nontermination_scheduler(const QuantumMDP &m, const Mat &rho0,
                                                         const NontermOptions &opt = {},
                                                         const Tolerances &tol = {}) {
    require_density(rho0, m.dim, tol, false, "synth_nontermination_scheduler");
    auto reach = reachable_space_I(m, rho0, tol);
    auto div = compute_divergent(m, tol);
    TerminationVerdict v = detail::decide(reach, div, opt.witness, tol);
    if (v.status == TermStatus::Terminating) {
        return v;
    }
    const LassoScheduler &sigma = *v.divergence;
    v.expansion = express_in_generators(*v.witness, reach, tol);

    std::vector<size_t> order = opt.candidate_order;
    if (order.empty()) {
        for (size_t k = 0; k < v.expansion.size(); ++k) {
            order.push_back(k);
        }
    }
    v.validation_steps = opt.validation_steps ? opt.validation_steps : 25 * static_cast<size_t>(m.dim);
    QuantumMDP single = loop_model(m, sigma.loop);
    for (size_t k : order) {
        if (k >= v.expansion.size()) {
            throw ValidationError("candidate order names a term outside the expansion");
        }
        const GeneratorTerm &term = v.expansion[k];
        CandidateRecord rec;
        rec.generator_index = term.index;
        rec.generator_word = term.generator.word;
        rec.coefficient = term.coefficient;
        Mat rho = apply_word(m, sigma.prefix, outer(term.generator.vector));
        rec.reached_trace = rho.trace().real();
        if (rec.reached_trace <= tol.rank_tol) {
            v.candidates.push_back(rec);
            continue;
        }
        Mat start = rho / rec.reached_trace;
        Subspace s = reachable_space_I(single, start, tol).basis;
        rec.loop_space_dim = s.dim();
        auto gamma = fixedpoint_hermitian(m, sigma.loop, s, tol);
        rec.has_fixedpoint = gamma.has_value();
        if (!gamma) {
            v.candidates.push_back(rec);
            continue;
        }
        LassoScheduler sched;
        sched.prefix = term.generator.word;
        sched.prefix.insert(sched.prefix.end(), sigma.prefix.begin(), sigma.prefix.end());
        sched.loop = sigma.loop;
        // Mass outside the certified part drains geometrically and may still be
        // moving after the default budget; keep doubling while the bound holds.
        size_t steps = std::max(v.validation_steps, sched.prefix.size());
        const size_t cap = steps << opt.max_doublings;
        LassoTP tp = termination_probability_lasso(m, rho0, sched, steps);
        while (tp.lower_bound <= 1.0 - opt.validation_margin && tp.plateau_delta > opt.plateau_tol &&
               steps < cap) {
            steps *= 2;
            tp = termination_probability_lasso(m, rho0, sched, steps);
        }
        rec.validation = tp;
        rec.validation_steps = steps;
        rec.accepted = tp.lower_bound <= 1.0 - opt.validation_margin && tp.plateau_delta <= opt.plateau_tol;
        v.candidates.push_back(rec);
        if (!rec.accepted) {
            continue;
        }
        v.scheduler = sched;
        v.certificate = *gamma;
        v.certificate_space = s;
        v.certificate_residual = max_abs(apply_word(m, sigma.loop, *gamma) - *gamma);
        v.validation = tp;
        v.validation_steps = steps;
        return v;
    }
    std::ostringstream msg;
    msg << "synth_nontermination_scheduler: no candidate yielded a validated certificate (rank_tol="
        << tol.rank_tol << ", herm_tol=" << tol.herm_tol << ")";
    throw InconsistencyError(msg.str());
}

enum class EvidenceStatus { NonterminatingEvidence, Unknown };

inline const char *to_string(EvidenceStatus s) {
    return s == EvidenceStatus::NonterminatingEvidence ? "NonterminatingEvidence" : "Unknown";
}

/// Restricted check over the operator-level reachable span. Never claims termination.
struct TerminationEvidence {
    EvidenceStatus status = EvidenceStatus::Unknown;
    std::optional<Mat> state;    // |v><v| in both the reachable span and a divergent leaf
    std::optional<size_t> leaf;  // index into DivergenceResult::leaves
    size_t op_space_dim = 0;
};

inline TerminationEvidence check_termination_II(const QuantumMDP &m, const Vec &psi0,
                                                const Tolerances &tol = {}) {
    auto reach = reachable_space_II(m, psi0, tol);
    auto div = compute_divergent(m, tol);
    TerminationEvidence out;
    out.op_space_dim = reach.op_space.size();
    for (size_t i = 0; i < div.leaves.size(); ++i) {
        const Subspace &space = div.leaf(i).space;
        for (Index j = 0; j < space.dim(); ++j) {
            Mat rho = outer(space.vector(j));
            if (operator_membership(rho, reach.op_space, tol).member) {
                out.status = EvidenceStatus::NonterminatingEvidence;
                out.state = rho;
                out.leaf = i;
                return out;
            }
        }
    }
    return out;
}

}  // namespace qterm
