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

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qterm/numerics.hpp"

namespace qterm {

enum class TraceClass { TracePreserving, TraceNonincreasing, Unclassified };

inline const char *to_string(TraceClass c) {
    switch (c) {
        case TraceClass::TracePreserving:
            return "trace-preserving";
        case TraceClass::TraceNonincreasing:
            return "trace-nonincreasing";
        default:
            return "unclassified";
    }
}

/// A quantum operation in Kraus form: rho -> sum_k E_k rho E_k^dagger.
struct SuperOperator {
    std::vector<Mat> kraus;
    TraceClass cls = TraceClass::Unclassified;

    Index dim() const {
        return kraus.empty() ? 0 : kraus.front().rows();
    }

    Mat apply(const Mat &rho) const {
        Mat out = Mat::Zero(rho.rows(), rho.cols());
        for (const auto &e : kraus) {
            out.noalias() += e * rho * e.adjoint();
        }
        return out;
    }

    /// sum_k E_k^dagger E_k
    Mat gram() const {
        Mat g = Mat::Zero(dim(), dim());
        for (const auto &e : kraus) {
            g.noalias() += e.adjoint() * e;
        }
        return g;
    }

    /// Strongest class the Kraus set satisfies.
    TraceClass classify(const Tolerances &tol = {}) const {
        Mat g = gram();
        Index d = dim();
        if (max_abs(g - Mat::Identity(d, d)) <= tol.trace_tol) {
            return TraceClass::TracePreserving;
        }
        Mat slack = Mat::Identity(d, d) - g;
        Eigen::SelfAdjointEigenSolver<Mat> es((slack + slack.adjoint()) / 2.0,
                                              Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() >= -tol.psd_tol) {
            return TraceClass::TraceNonincreasing;
        }
        return TraceClass::Unclassified;
    }

    /// Shape checks plus the declared class. Returns a warning when the Kraus
    /// count exceeds d^2 (allowed, but never needed).
    std::string validate(const Tolerances &tol, const std::string &what) const {
        if (kraus.empty()) {
            throw ValidationError(what + ": empty Kraus list");
        }
        Index d = dim();
        for (const auto &e : kraus) {
            if (e.rows() != d || e.cols() != d) {
                throw ValidationError(what + ": Kraus operators must all be square of equal size");
            }
        }
        TraceClass actual = classify(tol);
        if (cls == TraceClass::TracePreserving && actual != TraceClass::TracePreserving) {
            throw ValidationError(what + ": not trace-preserving within trace_tol");
        }
        if (cls == TraceClass::TraceNonincreasing && actual == TraceClass::Unclassified) {
            throw ValidationError(what + ": not trace-nonincreasing within psd_tol");
        }
        if (static_cast<Index>(kraus.size()) > d * d) {
            return what + ": " + std::to_string(kraus.size()) + " Kraus operators exceed d^2";
        }
        return {};
    }
};

/// Binary projective measurement: m_true continues the loop, m_false terminates it.
struct Measurement {
    Mat m_true;
    Mat m_false;

    void validate(const Tolerances &tol, Index d) const {
        for (const Mat *m : {&m_true, &m_false}) {
            if (m->rows() != d || m->cols() != d) {
                throw ValidationError("measurement: projector has wrong shape");
            }
            if (!is_hermitian(*m, tol)) {
                throw ValidationError("measurement: projector is not Hermitian");
            }
            if (max_abs(*m * *m - *m) > tol.herm_tol) {
                throw ValidationError("measurement: projector is not idempotent");
            }
        }
        if (max_abs(m_true + m_false - Mat::Identity(d, d)) > tol.trace_tol) {
            throw ValidationError("measurement: m_true + m_false != I");
        }
        if (max_abs(m_true * m_false) > tol.trace_tol) {
            throw ValidationError("measurement: projectors are not orthogonal");
        }
    }
};

/// Finite action word; empty is the empty scheduler.
using Scheduler = std::vector<std::string>;

inline std::string word_string(const Scheduler &w, const std::string &sep = " ") {
    if (w.empty()) {
        return "eps";
    }
    std::string s;
    for (size_t i = 0; i < w.size(); ++i) {
        s += (i ? sep : "") + w[i];
    }
    return s;
}

/// prefix . loop^omega
struct LassoScheduler {
    Scheduler prefix;
    Scheduler loop;

    void validate() const {
        if (loop.empty()) {
            throw ValidationError("lasso scheduler needs a nonempty loop");
        }
    }

    /// i-th action (0-based) of the infinite unrolling.
    const std::string &at(size_t i) const {
        if (i < prefix.size()) {
            return prefix[i];
        }
        return loop[(i - prefix.size()) % loop.size()];
    }

    /// Same infinite word with the loop reduced to its primitive root and the
    /// prefix made as short as possible by rotating the loop.
    LassoScheduler canonical() const {
        validate();
        LassoScheduler c = *this;
        const size_t n = c.loop.size();
        for (size_t p = 1; p < n; ++p) {
            if (n % p != 0) {
                continue;
            }
            bool periodic = true;
            for (size_t i = p; i < n && periodic; ++i) {
                periodic = c.loop[i] == c.loop[i - p];
            }
            if (periodic) {
                c.loop.resize(p);
                break;
            }
        }
        while (!c.prefix.empty() && c.prefix.back() == c.loop.back()) {
            c.prefix.pop_back();
            std::rotate(c.loop.rbegin(), c.loop.rbegin() + 1, c.loop.rend());
        }
        return c;
    }

    std::string str() const {
        return word_string(prefix) + " . (" + word_string(loop) + ")^w";
    }

    bool operator==(const LassoScheduler &o) const {
        return prefix == o.prefix && loop == o.loop;
    }
};

/// Flat loop model: actions with trace-preserving dynamics and a termination measurement.
struct QuantumMDP {
    Index dim = 0;
    std::vector<std::string> actions;
    std::vector<SuperOperator> dynamics;  // parallel to actions
    Measurement meas;
    std::map<std::string, Mat> states;  // named inputs (density operators)

    size_t action_index(const std::string &name) const {
        for (size_t j = 0; j < actions.size(); ++j) {
            if (actions[j] == name) {
                return j;
            }
        }
        throw ValidationError("unknown action '" + name + "'");
    }

    const SuperOperator &dynamics_of(const std::string &name) const {
        return dynamics[action_index(name)];
    }

    /// Throws on any structural problem; returns non-fatal warnings.
    std::vector<std::string> validate(const Tolerances &tol = {}) const {
        tol.validate();
        std::vector<std::string> warnings;
        if (dim <= 0) {
            throw ValidationError("model: dimension must be positive");
        }
        if (actions.empty()) {
            throw ValidationError("model: at least one action is required");
        }
        if (actions.size() != dynamics.size()) {
            throw ValidationError("model: every action needs dynamics");
        }
        std::set<std::string> seen;
        for (size_t j = 0; j < actions.size(); ++j) {
            if (!seen.insert(actions[j]).second) {
                throw ValidationError("model: duplicate action '" + actions[j] + "'");
            }
            if (dynamics[j].dim() != dim) {
                throw ValidationError("model: dynamics of '" + actions[j] + "' has wrong dimension");
            }
            SuperOperator so = dynamics[j];
            so.cls = TraceClass::TracePreserving;
            auto w = so.validate(tol, "action '" + actions[j] + "'");
            if (!w.empty()) {
                warnings.push_back(w);
            }
        }
        meas.validate(tol, dim);
        for (const auto &[name, rho] : states) {
            if (rho.rows() != dim || rho.cols() != dim) {
                throw ValidationError("state '" + name + "' has wrong dimension");
            }
        }
        return warnings;
    }
};

/// Checks that rho is a (partial) density operator.
inline void require_density(const Mat &rho, Index d, const Tolerances &tol, bool partial,
                            const char *what) {
    if (rho.rows() != d || rho.cols() != d) {
        throw ValidationError(std::string(what) + ": state has wrong dimension");
    }
    require_hermitian(rho, tol, what);
    Eigen::SelfAdjointEigenSolver<Mat> es((rho + rho.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.psd_tol) {
        throw ValidationError(std::string(what) + ": state is not positive semidefinite");
    }
    double tr = rho.trace().real();
    if (partial ? tr > 1 + tol.trace_tol : std::abs(tr - 1) > tol.trace_tol) {
        throw ValidationError(std::string(what) + (partial ? ": trace exceeds one" : ": trace is not one"));
    }
}

/// One guarded step: E_alpha(M_true rho M_true).
inline Mat apply_F(const QuantumMDP &m, const std::string &action, const Mat &rho) {
    const SuperOperator &e = m.dynamics_of(action);
    Mat guarded = m.meas.m_true * rho * m.meas.m_true;
    return e.apply(guarded);
}

/// F_word(rho); the first action of the word is applied first.
inline Mat apply_word(const QuantumMDP &m, const Scheduler &word, const Mat &rho) {
    Mat cur = rho;
    for (const auto &a : word) {
        cur = apply_F(m, a, cur);
    }
    return cur;
}

/// Accumulated termination probability: sum over i = 0..|word| of tr(M_false F_{word[0..i)}(rho)).
inline double termination_probability(const QuantumMDP &m, const Mat &rho, const Scheduler &word,
                                      const Tolerances &tol = {}, bool strict = true) {
    if (strict) {
        require_density(rho, m.dim, tol, false, "termination_probability");
    }
    double tp = 0.0;
    Mat cur = rho;
    tp += (m.meas.m_false * cur).trace().real();
    for (const auto &a : word) {
        cur = apply_F(m, a, cur);
        tp += (m.meas.m_false * cur).trace().real();
    }
    return tp;
}

struct LassoTP {
    double lower_bound = 0.0;    // TP of the max_steps unrolling
    double plateau_delta = 0.0;  // gain over the last |loop| steps
    std::vector<double> trace;   // trace[i] = TP after i actions, i = 0..max_steps
};

/// Truncated termination probability of prefix . loop^omega.
inline LassoTP termination_probability_lasso(const QuantumMDP &m, const Mat &rho,
                                             const LassoScheduler &s, size_t max_steps) {
    s.validate();
    if (max_steps < s.prefix.size()) {
        throw PreconditionError("lasso TP: max_steps is shorter than the prefix");
    }
    LassoTP out;
    out.trace.reserve(max_steps + 1);
    Mat cur = rho;
    double tp = (m.meas.m_false * cur).trace().real();
    out.trace.push_back(tp);
    for (size_t i = 0; i < max_steps; ++i) {
        cur = apply_F(m, s.at(i), cur);
        tp += (m.meas.m_false * cur).trace().real();
        out.trace.push_back(tp);
    }
    out.lower_bound = tp;
    size_t back = std::min(s.loop.size(), max_steps);
    out.plateau_delta = tp - out.trace[max_steps - back];
    return out;
}

/// Single-action model whose Kraus set is the union of all scaled by 1/sqrt(m).
inline QuantumMDP average_program(const QuantumMDP &m) {
    QuantumMDP avg;
    avg.dim = m.dim;
    avg.meas = m.meas;
    avg.states = m.states;
    if (m.actions.size() == 1) {
        avg.actions = m.actions;
        avg.dynamics = m.dynamics;
        return avg;
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(m.actions.size()));
    SuperOperator so;
    so.cls = TraceClass::TracePreserving;
    for (const auto &e : m.dynamics) {
        for (const auto &k : e.kraus) {
            so.kraus.push_back(scale * k);
        }
    }
    avg.actions = {"avg"};
    avg.dynamics = {so};
    return avg;
}

struct OperatorAction {
    std::string name;    // "<action>.<k>", k 1-based
    std::string parent;  // owning action
    Mat kraus;
};

/// One entry per Kraus operator of every action.
inline std::vector<OperatorAction> operator_level(const QuantumMDP &m) {
    std::vector<OperatorAction> out;
    for (size_t j = 0; j < m.actions.size(); ++j) {
        const auto &ks = m.dynamics[j].kraus;
        for (size_t k = 0; k < ks.size(); ++k) {
            out.push_back({m.actions[j] + "." + std::to_string(k + 1), m.actions[j], ks[k]});
        }
    }
    return out;
}

/// One pass of `loop` as a single action: Kraus operators are the products of
/// the guarded Kraus operators along the word, and the guard is already folded
/// in (m_true = I, m_false = 0).
inline QuantumMDP loop_model(const QuantumMDP &m, const Scheduler &loop) {
    if (loop.empty()) {
        throw ValidationError("loop_model: empty loop");
    }
    std::vector<Mat> ks{Mat::Identity(m.dim, m.dim)};
    for (const auto &a : loop) {
        std::vector<Mat> next;
        for (const auto &k : m.dynamics_of(a).kraus) {
            for (const auto &p : ks) {
                next.push_back(k * m.meas.m_true * p);
            }
        }
        ks = std::move(next);
    }
    QuantumMDP r;
    r.dim = m.dim;
    r.actions = {word_string(loop, ",")};
    r.dynamics = {SuperOperator{ks, TraceClass::TraceNonincreasing}};
    r.meas.m_true = Mat::Identity(m.dim, m.dim);
    r.meas.m_false = Mat::Zero(m.dim, m.dim);
    return r;
}

/// Restriction of m to a single action (the loop of a lasso).
inline QuantumMDP restrict_to(const QuantumMDP &m, const std::string &action) {
    QuantumMDP r;
    r.dim = m.dim;
    r.meas = m.meas;
    r.actions = {action};
    r.dynamics = {m.dynamics_of(action)};
    return r;
}

}  // namespace qterm
