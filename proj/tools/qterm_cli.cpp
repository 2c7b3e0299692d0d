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

// qterm: command-line front end for the analyses.
//
// Exit codes: 0 success, 2 invalid input, 3 violated precondition,
// 4 nonterm requested but the verdict is Terminating, 5 internal inconsistency.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qterm/io.hpp"
#include "qterm/qterm.hpp"

namespace {

using qterm::io::json;

constexpr const char *kSchema = "qterm.report/1";

struct Request {
    std::string command;
    std::string model_path;
    std::string program_path;
    std::string bindings_path;
    std::string state;
    std::vector<std::string> tolerance_overrides;
    size_t steps = 0;
    std::string out_path;
    bool pretty = false;
    bool timing = false;
    bool eager = false;

    // simulate
    std::string word;
    std::string lasso;

    // nonterm
    std::string witness;
    std::string candidate_order;
};

/// Model plus the optional located form it came from.
struct Loaded {
    qterm::QuantumMDP model;
    std::optional<qterm::LocatedQMDP> located;
};

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        auto b = cur.find_first_not_of(" \t");
        auto e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(cur.substr(b, e - b + 1));
        }
    }
    return out;
}

/// Named profiles or a comma-separated key=value list.
qterm::Tolerances tolerances_from_env() {
    qterm::Tolerances t;
    const char *env = std::getenv("QTERM_TOLERANCES");
    if (!env || !*env) {
        return t;
    }
    std::string v = env;
    if (v == "default") {
        return t;
    }
    if (v == "strict") {
        t.norm_tol = t.herm_tol = t.psd_tol = t.trace_tol = t.ortho_tol = 1e-11;
        t.rank_tol = 1e-10;
        return t;
    }
    if (v == "loose") {
        t.norm_tol = t.herm_tol = t.psd_tol = t.trace_tol = t.ortho_tol = 1e-7;
        t.rank_tol = 1e-6;
        return t;
    }
    for (const auto &kv : split(v, ',')) {
        qterm::io::set_tolerance(t, kv);
    }
    return t;
}

Loaded load(const Request &r, const qterm::Tolerances &tol) {
    const bool has_model = !r.model_path.empty();
    const bool has_program = !r.program_path.empty();
    if (has_model == has_program) {
        throw qterm::ValidationError("give exactly one of --model or --program");
    }
    if (has_model) {
        if (!r.bindings_path.empty()) {
            throw qterm::ValidationError("--bindings only applies to --program");
        }
        return {qterm::io::load_model(qterm::io::read_json_file(r.model_path), tol), std::nullopt};
    }
    if (r.bindings_path.empty()) {
        throw qterm::ValidationError("--program needs --bindings");
    }
    auto bindings = qterm::io::load_bindings(qterm::io::read_json_file(r.bindings_path), tol);
    auto ast = qterm::parse_program(qterm::io::read_text_file(r.program_path), bindings, tol);
    auto located = qterm::compile_to_located(ast);
    located.validate(tol);
    Loaded out{qterm::located_to_flat(located, !r.eager, tol), located};
    out.model.validate(tol);
    return out;
}

/// --state: a model state name, "basis:<i>", or inline JSON (ket or matrix).
/// Program inputs live on the variable space and start at the first location.
qterm::Mat resolve_state(const Request &r, const Loaded &l) {
    if (r.state.empty()) {
        throw qterm::ValidationError("this command needs --state");
    }
    const qterm::Index d = l.located ? l.located->dim : l.model.dim;
    qterm::Mat rho;
    if (r.state.rfind("basis:", 0) == 0) {
        qterm::Index i = -1;
        try {
            i = std::stol(r.state.substr(6));
        } catch (const std::exception &) {
        }
        if (i < 0 || i >= d) {
            throw qterm::ValidationError("basis index out of range in --state " + r.state);
        }
        rho = qterm::outer(qterm::ket(d, i));
    } else if (!r.state.empty() && (r.state[0] == '[' || r.state[0] == '{')) {
        json j;
        try {
            j = json::parse(r.state);
        } catch (const json::parse_error &e) {
            throw qterm::ValidationError(std::string("--state is not valid JSON: ") + e.what());
        }
        rho = qterm::io::parse_state(j, d);
    } else {
        if (l.located) {
            throw qterm::ValidationError("programs have no named states; use basis:<i> or inline JSON");
        }
        auto it = l.model.states.find(r.state);
        if (it == l.model.states.end()) {
            throw qterm::ValidationError("model has no state named '" + r.state + "'");
        }
        rho = it->second;
    }
    if (l.located) {
        rho = qterm::embed_located_state(*l.located, 0, rho);
    }
    return rho;
}

/// The unit vector of a rank-one density operator.
qterm::Vec pure_vector(const qterm::Mat &rho, const qterm::Tolerances &tol) {
    qterm::Subspace s = qterm::support(rho, tol);
    if (s.dim() != 1) {
        throw qterm::PreconditionError("this command needs a pure input state");
    }
    return s.vector(0);
}

json located_json(const qterm::LocatedQMDP &m) {
    json ts = json::array();
    for (const auto &t : m.transitions) {
        ts.push_back({{"source", m.locations[static_cast<size_t>(t.source)]},
                      {"action", t.action},
                      {"target", m.locations[static_cast<size_t>(t.target)]},
                      {"kraus_count", t.op.kraus.size()}});
    }
    return {{"dim", m.dim}, {"locations", m.locations}, {"actions", m.actions}, {"transitions", ts}};
}

json run(const Request &r, const qterm::Tolerances &tol, int &exit_code) {
    using namespace qterm;
    Loaded l = load(r, tol);
    const QuantumMDP &m = l.model;
    json result;
    if (r.command == "reach-i") {
        result = io::reach_i_json(reachable_space_I(m, resolve_state(r, l), tol));
    } else if (r.command == "reach-ii") {
        result = io::reach_ii_json(reachable_space_II(m, pure_vector(resolve_state(r, l), tol), tol));
    } else if (r.command == "divergent") {
        result = io::divergence_json(compute_divergent(m, tol));
    } else if (r.command == "nonterm") {
        Mat rho = resolve_state(r, l);
        NontermOptions opt;
        opt.validation_steps = r.steps;
        if (!r.witness.empty()) {
            json j;
            try {
                j = json::parse(r.witness);
            } catch (const json::parse_error &e) {
                throw ValidationError(std::string("--witness is not valid JSON: ") + e.what());
            }
            opt.witness = io::parse_vector(j);
            if (opt.witness->size() != m.dim) {
                throw ValidationError("--witness has wrong dimension");
            }
        }
        for (const auto &k : split(r.candidate_order, ',')) {
            try {
                opt.candidate_order.push_back(std::stoul(k));
            } catch (const std::exception &) {
                throw ValidationError("--candidate-order must list term indices");
            }
        }
        TerminationVerdict v = synth_nontermination_scheduler(m, rho, opt, tol);
        result = io::verdict_json(v);
        if (v.status == TermStatus::Terminating) {
            exit_code = 4;
        }
    } else if (r.command == "universal") {
        UniversalVerdict v = check_universal_termination(m, tol);
        if (v.status == UniversalStatus::UniversallyTerminating) {
            UniversalSynthesis syn = synth_universal_scheduler(m, tol);
            result = io::universal_json(v, &syn);
        } else {
            result = io::universal_json(v, nullptr);
        }
    } else if (r.command == "simulate") {
        Mat rho = resolve_state(r, l);
        require_density(rho, m.dim, tol, false, "simulate");
        if (r.word.empty() == r.lasso.empty()) {
            throw ValidationError("simulate needs exactly one of --word or --lasso");
        }
        if (!r.word.empty()) {
            Scheduler w = split(r.word, ',');
            for (const auto &a : w) {
                m.action_index(a);
            }
            json trace = json::array();
            for (size_t i = 0; i <= w.size(); ++i) {
                Scheduler pre(w.begin(), w.begin() + static_cast<long>(i));
                trace.push_back(io::clean(termination_probability(m, rho, pre, tol)));
            }
            result = {{"word", w}, {"tp", trace.back()}, {"trace", trace}};
        } else {
            LassoScheduler s;
            auto colon = r.lasso.find(':');
            if (colon == std::string::npos) {
                s.loop = split(r.lasso, ',');
            } else {
                s.prefix = split(r.lasso.substr(0, colon), ',');
                s.loop = split(r.lasso.substr(colon + 1), ',');
            }
            s.validate();
            for (const auto &a : s.prefix) {
                m.action_index(a);
            }
            for (const auto &a : s.loop) {
                m.action_index(a);
            }
            size_t steps = r.steps ? r.steps : 100;
            if (steps < s.prefix.size()) {
                throw ValidationError("--steps is shorter than the lasso prefix");
            }
            result = io::to_json(termination_probability_lasso(m, rho, s, steps), true);
            result["scheduler"] = io::to_json(s);
            result["steps"] = steps;
        }
    } else if (r.command == "compile") {
        if (!l.located) {
            throw ValidationError("compile needs --program and --bindings");
        }
        result = {{"located", located_json(*l.located)}, {"flat", io::model_to_json(m)}, {"lazy", !r.eager}};
    } else {
        throw ValidationError("unknown command '" + r.command + "'");
    }
    return result;
}

json request_echo(const Request &r) {
    json j = {{"command", r.command}};
    if (!r.model_path.empty()) j["model"] = r.model_path;
    if (!r.program_path.empty()) j["program"] = r.program_path;
    if (!r.bindings_path.empty()) j["bindings"] = r.bindings_path;
    if (!r.state.empty()) j["state"] = r.state;
    if (r.steps) j["steps"] = r.steps;
    if (!r.word.empty()) j["word"] = r.word;
    if (!r.lasso.empty()) j["lasso"] = r.lasso;
    if (!r.witness.empty()) j["witness"] = r.witness;
    if (!r.candidate_order.empty()) j["candidate_order"] = r.candidate_order;
    return j;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qterm: termination analysis for nondeterministic quantum loops"};
    app.require_subcommand(1);
    Request req;

    auto common = [&](CLI::App *sub, bool needs_state) {
        sub->add_option("--model", req.model_path, "flat model JSON");
        sub->add_option("--program", req.program_path, "program source");
        sub->add_option("--bindings", req.bindings_path, "operator bindings JSON for --program");
        sub->add_flag("--eager", req.eager, "materialize every location in the flat tuple actions");
        if (needs_state) {
            sub->add_option("--state", req.state, "state name, basis:<i>, or inline JSON ket/matrix");
        }
        sub->add_option("--tolerance", req.tolerance_overrides, "override a tolerance, key=value")
            ->take_all();
        sub->add_option("--out", req.out_path, "write the report here instead of stdout");
        sub->add_flag("--pretty", req.pretty, "indent the JSON report");
        sub->add_flag("--timing", req.timing, "add wall time to the report");
    };
    auto *ri = app.add_subcommand("reach-i", "subspace reachable under any scheduler");
    common(ri, true);
    auto *rii = app.add_subcommand("reach-ii", "operator span of reachable pure states");
    common(rii, true);
    auto *dv = app.add_subcommand("divergent", "derivation tree of never-terminating pure states");
    common(dv, false);
    auto *nt = app.add_subcommand("nonterm", "decide termination and synthesize a nontermination lasso");
    common(nt, true);
    nt->add_option("--steps", req.steps, "validation horizon (default 25*d)");
    nt->add_option("--witness", req.witness, "force the witness vector (JSON array)");
    nt->add_option("--candidate-order", req.candidate_order, "comma-separated expansion term indices");
    auto *un = app.add_subcommand("universal", "invariant space check and universal scheduler");
    common(un, false);
    auto *sm = app.add_subcommand("simulate", "truncated termination probability of a scheduler");
    common(sm, true);
    sm->add_option("--word", req.word, "finite word a,b,c");
    sm->add_option("--lasso", req.lasso, "lasso 'prefix:loop' or 'loop', actions comma-separated");
    sm->add_option("--steps", req.steps, "unrolled actions for --lasso (default 100)");
    auto *cp = app.add_subcommand("compile", "lower a program to located and flat models");
    common(cp, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    req.command = app.get_subcommands().front()->get_name();

    int exit_code = 0;
    json report = {{"schema", kSchema}, {"request", request_echo(req)}};
    try {
        qterm::Tolerances tol = tolerances_from_env();
        for (const auto &kv : req.tolerance_overrides) {
            qterm::io::set_tolerance(tol, kv);
        }
        tol.validate();
        report["tolerances"] = qterm::io::to_json(tol);
        auto t0 = std::chrono::steady_clock::now();
        report["result"] = run(req, tol, exit_code);
        if (req.timing) {
            std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            report["wall_time_s"] = dt.count();
        }
    } catch (const qterm::ParseError &e) {
        std::cerr << "qterm: " << e.what() << "\n";
        return 2;
    } catch (const qterm::ValidationError &e) {
        std::cerr << "qterm: invalid input: " << e.what() << "\n";
        return 2;
    } catch (const qterm::PreconditionError &e) {
        std::cerr << "qterm: precondition failed: " << e.what() << "\n";
        return 3;
    } catch (const qterm::InconsistencyError &e) {
        std::cerr << "qterm: internal inconsistency: " << e.what() << "\n";
        return 5;
    } catch (const std::exception &e) {
        std::cerr << "qterm: internal error: " << e.what() << "\n";
        return 5;
    }

    std::string text = report.dump(req.pretty ? 2 : -1) + "\n";
    if (req.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(req.out_path);
        if (!out) {
            std::cerr << "qterm: cannot write " << req.out_path << "\n";
            return 2;
        }
        out << text;
    }
    return exit_code;
}
