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

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qterm/termination.hpp"

namespace qterm {

struct InvariantSpaceResult {
    std::optional<Subspace> space;
    std::optional<Mat> stationary_solution;  // first canonical solution, unit Frobenius norm
    size_t solution_count = 0;               // dimension of the real solution space
    bool verified = false;
    double max_residual = 0.0;  // worst escape of a Kraus image from the space
};

/// Solves the averaged guarded stationary equation over Hermitian operators on
/// range(M_true). The space is the join of the supports of all independent
/// solutions and is checked to be closed under every Kraus operator.
inline InvariantSpaceResult invariant_space(const QuantumMDP &m, const Tolerances &tol = {}) {
    InvariantSpaceResult out;
    Subspace cont = support(m.meas.m_true, tol);
    if (cont.dim() == 0) {
        return out;
    }
    QuantumMDP avg = average_program(m);
    const SuperOperator &fbar = avg.dynamics.front();
    auto sols = stationary_solutions(
        [&](const Mat &g) { return fbar.apply(m.meas.m_true * g * m.meas.m_true); }, cont, tol);
    out.solution_count = sols.size();
    if (sols.empty()) {
        return out;
    }
    out.stationary_solution = sols.front();
    Subspace space = Subspace::zero(m.dim);
    for (const auto &g : sols) {
        space = subspace_join(space, support(g, tol), tol);
    }
    double worst = 0.0;
    for (Index i = 0; i < space.dim(); ++i) {
        Vec psi = space.vector(i);
        worst = std::max(worst, (psi - cont.basis * (cont.basis.adjoint() * psi)).norm());
        for (const auto &e : m.dynamics) {
            for (const auto &k : e.kraus) {
                Vec img = k * psi;
                worst = std::max(worst, (img - space.basis * (space.basis.adjoint() * img)).norm());
            }
        }
    }
    out.max_residual = worst;
    out.verified = worst <= tol.rank_tol;
    if (!out.verified) {
        std::ostringstream msg;
        msg << "invariant_space: support of the stationary solution is not invariant (max residual "
            << worst << ", rank_tol " << tol.rank_tol << ")";
        throw InconsistencyError(msg.str());
    }
    out.space = space;
    return out;
}

enum class UniversalStatus { UniversallyTerminating, NotUniversal };

inline const char *to_string(UniversalStatus s) {
    return s == UniversalStatus::UniversallyTerminating ? "UniversallyTerminating" : "NotUniversal";
}

struct UniversalVerdict {
    UniversalStatus status = UniversalStatus::UniversallyTerminating;
    InvariantSpaceResult invariant;
    std::optional<Mat> counterexample;  // maximally mixed state on the invariant space
};

inline UniversalVerdict check_universal_termination(const QuantumMDP &m, const Tolerances &tol = {}) {
    UniversalVerdict v;
    v.invariant = invariant_space(m, tol);
    if (v.invariant.space) {
        v.status = UniversalStatus::NotUniversal;
        const Subspace &s = *v.invariant.space;
        v.counterexample = s.projector() / static_cast<double>(s.dim());
    }
    return v;
}

struct UniversalSynthesis {
    LassoScheduler scheduler;       // canonical form, empty prefix
    Scheduler raw_word;             // word as built, before reducing the loop
    std::vector<Vec> chosen_states;  // one per expansion step
    size_t steps = 0;                // oracle budget
    std::vector<double> basis_tp;    // truncated TP per computational-basis input
    double min_one_pass_gain = 0.0;  // min over basis inputs of TP after one loop pass
    bool validated = false;          // every basis input reached the target
};

/// Grows S from range(M_false) one direction at a time: the first action (by
/// index) with a nonzero coupling P_S E_k P_{S^perp} contributes the top right
/// singular direction of its stacked couplings.
inline UniversalSynthesis synth_universal_scheduler(const QuantumMDP &m, const Tolerances &tol = {},
                                                    double target = 0.99) {
    if (invariant_space(m, tol).space) {
        throw PreconditionError("synth_universal_scheduler: model has an invariant space");
    }
    UniversalSynthesis out;
    Subspace s = support(m.meas.m_false, tol);
    const Index budget = m.dim - s.dim();
    while (s.dim() < m.dim) {
        const Mat ps = s.projector();
        const Mat pperp = Mat::Identity(m.dim, m.dim) - ps;
        bool grew = false;
        for (size_t j = 0; j < m.actions.size() && !grew; ++j) {
            const auto &ks = m.dynamics[j].kraus;
            Mat stacked(m.dim * static_cast<Index>(ks.size()), m.dim);
            for (size_t k = 0; k < ks.size(); ++k) {
                stacked.middleRows(static_cast<Index>(k) * m.dim, m.dim) = ps * ks[k] * pperp;
            }
            Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
            if (svd.singularValues()(0) <= tol.rank_tol) {
                continue;
            }
            Vec psi = fix_phase(svd.matrixV().col(0), tol);
            if (!extend_in_place(s, psi, tol)) {
                continue;
            }
            out.raw_word.push_back(m.actions[j]);
            out.chosen_states.push_back(psi);
            grew = true;
        }
        if (!grew) {
            throw InconsistencyError("synth_universal_scheduler: no action extends the terminating region; "
                                     "an invariant space should have been detected");
        }
        if (static_cast<Index>(out.raw_word.size()) > budget) {
            throw InconsistencyError("synth_universal_scheduler: more expansion steps than dimensions");
        }
    }
    if (out.raw_word.empty()) {
        // Everything terminates immediately; any action works as the loop.
        out.raw_word.push_back(m.actions.front());
    }
    out.scheduler = LassoScheduler{{}, out.raw_word}.canonical();
    out.steps = std::max<size_t>(40 * out.raw_word.size(), 120);
    out.validated = true;
    out.min_one_pass_gain = 1.0;
    for (Index i = 0; i < m.dim; ++i) {
        Mat rho = outer(ket(m.dim, i));
        double tp = termination_probability_lasso(m, rho, out.scheduler, out.steps).lower_bound;
        double pass = termination_probability_lasso(m, rho, out.scheduler, out.raw_word.size()).lower_bound;
        out.basis_tp.push_back(tp);
        out.min_one_pass_gain = std::min(out.min_one_pass_gain, pass);
        out.validated = out.validated && tp >= target;
    }
    return out;
}

}  // namespace qterm
