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

// JSON encoding shared by model files, binding files and CLI reports.
// Complex numbers are [re, im] pairs (a bare number is read as real);
// matrices are row-major arrays of rows.

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qterm/program.hpp"
#include "qterm/universal.hpp"

namespace qterm::io {

using json = nlohmann::json;

/// Snaps values below 1e-13 to zero so reports do not depend on rounding noise.
inline double clean(double x) {
    return std::abs(x) < 1e-13 ? 0.0 : x;
}

inline cplx parse_complex(const json &j) {
    if (j.is_number()) {
        return {j.get<double>(), 0.0};
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw ValidationError("expected a number or an [re, im] pair, got " + j.dump());
}

inline Vec parse_vector(const json &j) {
    if (!j.is_array() || j.empty()) {
        throw ValidationError("expected a nonempty array of complex entries");
    }
    Vec v(static_cast<Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Index>(i)) = parse_complex(j[i]);
    }
    return v;
}

inline bool looks_like_matrix(const json &j) {
    return j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() &&
           (j[0][0].is_array() || j[0].size() != 2 || j.size() == 2);
}

inline Mat parse_matrix(const json &j) {
    if (!j.is_array() || j.empty()) {
        throw ValidationError("expected a nonempty array of rows");
    }
    const size_t rows = j.size();
    size_t cols = 0;
    for (size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array()) {
            throw ValidationError("matrix row " + std::to_string(r) + " is not an array");
        }
        if (r == 0) {
            cols = j[r].size();
        } else if (j[r].size() != cols) {
            throw ValidationError("matrix rows have different lengths");
        }
    }
    Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            m(static_cast<Index>(r), static_cast<Index>(c)) = parse_complex(j[r][c]);
        }
    }
    return m;
}

inline json to_json(cplx z) {
    return json::array({clean(z.real()), clean(z.imag())});
}

inline json to_json(const Vec &v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        a.push_back(to_json(v(i)));
    }
    return a;
}

inline json to_json(const Mat &m) {
    json a = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) {
            row.push_back(to_json(m(r, c)));
        }
        a.push_back(row);
    }
    return a;
}

inline json to_json(const Subspace &s) {
    json basis = json::array();
    for (Index j = 0; j < s.dim(); ++j) {
        basis.push_back(to_json(s.vector(j)));
    }
    return {{"dim", s.dim()}, {"ambient", s.ambient()}, {"basis", basis}};
}

inline json to_json(const LassoScheduler &s) {
    return {{"prefix", s.prefix}, {"loop", s.loop}, {"text", s.str()}};
}

inline json to_json(const Tolerances &t) {
    return {{"norm_tol", t.norm_tol},   {"herm_tol", t.herm_tol},   {"psd_tol", t.psd_tol},
            {"trace_tol", t.trace_tol}, {"ortho_tol", t.ortho_tol}, {"rank_tol", t.rank_tol}};
}

inline json to_json(const LassoTP &tp, bool with_trace = false) {
    json j = {{"lower_bound", clean(tp.lower_bound)}, {"plateau_delta", clean(tp.plateau_delta)}};
    if (with_trace) {
        json t = json::array();
        for (double x : tp.trace) {
            t.push_back(clean(x));
        }
        j["trace"] = t;
    }
    return j;
}

/// Overrides tolerances from "key=value" text; unknown keys are errors.
inline void set_tolerance(Tolerances &t, const std::string &kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("tolerance override must look like key=value: " + kv);
    }
    std::string key = kv.substr(0, eq);
    double val;
    try {
        size_t used = 0;
        val = std::stod(kv.substr(eq + 1), &used);
        if (used != kv.size() - eq - 1) {
            throw std::invalid_argument("trailing characters");
        }
    } catch (const std::exception &) {
        throw ValidationError("tolerance value is not a number: " + kv);
    }
    double *slot = key == "norm_tol"    ? &t.norm_tol
                   : key == "herm_tol"  ? &t.herm_tol
                   : key == "psd_tol"   ? &t.psd_tol
                   : key == "trace_tol" ? &t.trace_tol
                   : key == "ortho_tol" ? &t.ortho_tol
                   : key == "rank_tol"  ? &t.rank_tol
                                        : nullptr;
    if (!slot) {
        throw ValidationError("unknown tolerance '" + key + "'");
    }
    *slot = val;
    t.validate();
}

/// A ket (array of entries) becomes its projector; a matrix is taken as is.
inline Mat parse_state(const json &j, Index d) {
    Mat rho;
    if (j.is_array() && !j.empty() && j[0].is_array() && j[0].size() == static_cast<size_t>(d) && d != 2) {
        rho = parse_matrix(j);
    } else if (j.is_array() && j.size() == static_cast<size_t>(d) && j[0].is_array() &&
               j[0].size() == static_cast<size_t>(d) && !j[0][0].is_number()) {
        rho = parse_matrix(j);
    } else {
        Vec v = parse_vector(j);
        if (v.size() != d) {
            throw ValidationError("state vector has wrong length");
        }
        if (v.norm() == 0) {
            throw ValidationError("state vector is zero");
        }
        rho = outer(v.normalized());
    }
    if (rho.rows() != d || rho.cols() != d) {
        throw ValidationError("state matrix has wrong dimension");
    }
    return rho;
}

inline QuantumMDP load_model(const json &j, const Tolerances &tol = {}) {
    try {
        QuantumMDP m;
        m.dim = j.at("dim").get<Index>();
        m.actions = j.at("actions").get<std::vector<std::string>>();
        const json &kraus = j.at("kraus");
        for (const auto &a : m.actions) {
            if (!kraus.contains(a)) {
                throw ValidationError("model: no Kraus operators for action '" + a + "'");
            }
            SuperOperator so;
            so.cls = TraceClass::TracePreserving;
            for (const auto &k : kraus.at(a)) {
                so.kraus.push_back(parse_matrix(k));
            }
            m.dynamics.push_back(so);
        }
        for (auto it = kraus.begin(); it != kraus.end(); ++it) {
            if (std::find(m.actions.begin(), m.actions.end(), it.key()) == m.actions.end()) {
                throw ValidationError("model: Kraus operators for undeclared action '" + it.key() + "'");
            }
        }
        m.meas.m_true = parse_matrix(j.at("measurement").at("m_true"));
        m.meas.m_false = parse_matrix(j.at("measurement").at("m_false"));
        if (j.contains("states")) {
            for (auto it = j["states"].begin(); it != j["states"].end(); ++it) {
                m.states[it.key()] = parse_state(it.value(), m.dim);
            }
        }
        m.validate(tol);
        return m;
    } catch (const json::exception &e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
}

inline json model_to_json(const QuantumMDP &m) {
    json kraus = json::object();
    for (size_t j = 0; j < m.actions.size(); ++j) {
        json list = json::array();
        for (const auto &k : m.dynamics[j].kraus) {
            list.push_back(to_json(k));
        }
        kraus[m.actions[j]] = list;
    }
    json states = json::object();
    for (const auto &[name, rho] : m.states) {
        states[name] = to_json(rho);
    }
    return {{"dim", m.dim},
            {"actions", m.actions},
            {"kraus", kraus},
            {"measurement", {{"m_true", to_json(m.meas.m_true)}, {"m_false", to_json(m.meas.m_false)}}},
            {"states", states}};
}

inline OperatorBindings load_bindings(const json &j, const Tolerances &tol = {}) {
    try {
        OperatorBindings b;
        for (const auto &v : j.at("variables")) {
            b.variables.push_back({v.at("name").get<std::string>(), v.value("dim", Index{2})});
        }
        if (j.contains("unitaries")) {
            for (auto it = j["unitaries"].begin(); it != j["unitaries"].end(); ++it) {
                b.unitaries[it.key()] = parse_matrix(it.value());
            }
        }
        if (j.contains("measurements")) {
            for (auto it = j["measurements"].begin(); it != j["measurements"].end(); ++it) {
                MeasurementBinding mb;
                mb.m_true = parse_matrix(it.value().at("m_true"));
                mb.m_false = parse_matrix(it.value().at("m_false"));
                if (it.value().contains("on")) {
                    mb.on = it.value()["on"].get<std::vector<std::string>>();
                }
                b.measurements[it.key()] = mb;
            }
        }
        b.validate(tol);
        return b;
    } catch (const json::exception &e) {
        throw ValidationError(std::string("bindings file: ") + e.what());
    }
}

inline json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- result encoders ---------------------------------------------------------

inline json generator_json(const ReachGenerator &g) {
    return {{"vector", to_json(g.vector)}, {"word", g.word}};
}

inline json reach_i_json(const ReachSpaceI &r) {
    json gens = json::array(), dims = json::array();
    for (const auto &g : r.generators) {
        gens.push_back(generator_json(g));
    }
    for (const auto &s : r.chain) {
        dims.push_back(s.dim());
    }
    return {{"dim", r.basis.dim()},
            {"chain_depth", r.chain_depth},
            {"chain_dims", dims},
            {"basis", to_json(r.basis)["basis"]},
            {"generators", gens}};
}

inline json reach_ii_json(const ReachSpaceII &r) {
    json gens = json::array();
    for (const auto &g : r.pure_basis) {
        gens.push_back(generator_json(g));
    }
    return {{"dim", r.op_space.size()},
            {"chain_depth", r.chain_depth},
            {"chain_sizes", r.chain_sizes},
            {"pure_basis", gens}};
}

inline json divergence_json(const DivergenceResult &d) {
    json leaves = json::array(), nodes = json::array();
    for (size_t i = 0; i < d.leaves.size(); ++i) {
        const DivNode &n = d.leaf(i);
        leaves.push_back({{"word", n.word},
                          {"loop", n.loop},
                          {"space", to_json(n.space)},
                          {"scheduler", to_json(LassoScheduler{n.word, n.loop}.canonical())}});
    }
    for (const auto &n : d.nodes) {
        nodes.push_back({{"word", n.word}, {"dim", n.space.dim()}, {"stabilized", n.stabilized()}});
    }
    return {{"pd0", to_json(d.pd0)},
            {"leaves", leaves},
            {"nodes", nodes},
            {"union_dim_profile", d.union_dim_profile},
            {"depth", d.depth}};
}

inline json verdict_json(const TerminationVerdict &v) {
    json j = {{"status", to_string(v.status)},
              {"reach_dim", v.reach_dim},
              {"leaf_count", v.leaf_count},
              {"tolerances", to_json(v.tolerances_used)}};
    if (v.witness) {
        j["witness"] = to_json(*v.witness);
        j["divergence_scheduler"] = to_json(*v.divergence);
    }
    if (!v.expansion.empty()) {
        json terms = json::array();
        for (const auto &t : v.expansion) {
            terms.push_back({{"coefficient", to_json(t.coefficient)},
                             {"generator", generator_json(t.generator)}});
        }
        j["expansion"] = terms;
    }
    if (!v.candidates.empty()) {
        json cands = json::array();
        for (const auto &c : v.candidates) {
            json cj = {{"generator_word", c.generator_word},
                       {"reached_trace", clean(c.reached_trace)},
                       {"loop_space_dim", c.loop_space_dim},
                       {"has_fixedpoint", c.has_fixedpoint},
                       {"accepted", c.accepted}};
            if (c.validation) {
                cj["validation"] = to_json(*c.validation);
            }
            cands.push_back(cj);
        }
        j["candidates"] = cands;
    }
    if (v.scheduler) {
        j["scheduler"] = to_json(*v.scheduler);
        j["certificate"] = to_json(*v.certificate);
        j["certificate_space"] = to_json(v.certificate_space);
        j["certificate_residual"] = clean(v.certificate_residual);
        j["validation"] = to_json(*v.validation);
        j["validation"]["steps"] = v.validation_steps;
    }
    return j;
}

inline json universal_json(const UniversalVerdict &v, const UniversalSynthesis *syn) {
    json j = {{"status", to_string(v.status)}, {"solution_count", v.invariant.solution_count}};
    if (v.invariant.space) {
        j["invariant_space"] = to_json(*v.invariant.space);
        j["stationary_solution"] = to_json(*v.invariant.stationary_solution);
        j["verified"] = v.invariant.verified;
        j["counterexample"] = to_json(*v.counterexample);
    }
    if (syn) {
        json table = json::array();
        for (size_t i = 0; i < syn->basis_tp.size(); ++i) {
            table.push_back({{"input", i}, {"tp", clean(syn->basis_tp[i])}});
        }
        json chosen = json::array();
        for (const auto &c : syn->chosen_states) {
            chosen.push_back(to_json(c));
        }
        j["scheduler"] = to_json(syn->scheduler);
        j["raw_word"] = syn->raw_word;
        j["chosen_states"] = chosen;
        j["oracle"] = {{"steps", syn->steps},
                       {"basis_tp", table},
                       {"min_one_pass_gain", clean(syn->min_one_pass_gain)},
                       {"validated", syn->validated}};
    }
    return j;
}

}  // namespace qterm::io
