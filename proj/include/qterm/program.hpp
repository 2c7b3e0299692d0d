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

// While-language frontend, located models, and the conversions between
// located and flat models.
//
// Program text, one statement per line (or separated by ';'):
//
//   l1: q := |0>                 reset a register
//   q1,q2 := U[NAME]             apply a bound unitary to registers
//   choice { ... | ... }         nondeterministic choice, one action per branch
//   if M[NAME] { ... }           run the block on the m_true outcome
//   while M[NAME] { ... }        loop while the outcome is m_true
//   skip
//
// Leading "l<k>:" labels are accepted and ignored; locations are always
// assigned in source order. '#' and "//" start comments.

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qterm/model.hpp"

namespace qterm {

struct Register {
    std::string name;
    Index dim = 2;
};

struct MeasurementBinding {
    Mat m_true;
    Mat m_false;
    std::vector<std::string> on;  // registers; empty means all, in declaration order
};

/// Named operators a program may reference.
struct OperatorBindings {
    std::vector<Register> variables;  // tensor order
    std::map<std::string, Mat> unitaries;
    std::map<std::string, MeasurementBinding> measurements;

    Index state_dim() const {
        Index d = 1;
        for (const auto &r : variables) {
            d *= r.dim;
        }
        return d;
    }

    size_t register_index(const std::string &name) const {
        for (size_t i = 0; i < variables.size(); ++i) {
            if (variables[i].name == name) {
                return i;
            }
        }
        throw ValidationError("unknown register '" + name + "'");
    }

    void validate(const Tolerances &tol = {}) const {
        if (variables.empty()) {
            throw ValidationError("bindings: no registers declared");
        }
        for (size_t i = 0; i < variables.size(); ++i) {
            if (variables[i].dim < 1) {
                throw ValidationError("bindings: register '" + variables[i].name + "' needs dim >= 1");
            }
            for (size_t j = 0; j < i; ++j) {
                if (variables[j].name == variables[i].name) {
                    throw ValidationError("bindings: duplicate register '" + variables[i].name + "'");
                }
            }
        }
        for (const auto &[name, u] : unitaries) {
            require_square(u, name.c_str());
        }
        for (const auto &[name, mb] : measurements) {
            Index d = 1;
            if (mb.on.empty()) {
                d = state_dim();
            } else {
                for (const auto &r : mb.on) {
                    d *= variables[register_index(r)].dim;
                }
            }
            Measurement m{mb.m_true, mb.m_false};
            try {
                m.validate(tol, d);
            } catch (const ValidationError &e) {
                throw ValidationError("bindings: measurement '" + name + "': " + e.what());
            }
        }
    }
};

/// Lifts an operator acting on `targets` (in the given order) to the full register space.
inline Mat embed_operator(const OperatorBindings &b, const std::vector<std::string> &targets,
                          const Mat &op) {
    const size_t nv = b.variables.size();
    std::vector<size_t> tidx;
    Index tdim = 1;
    for (const auto &t : targets) {
        tidx.push_back(b.register_index(t));
        tdim *= b.variables[tidx.back()].dim;
    }
    if (op.rows() != tdim || op.cols() != tdim) {
        throw ValidationError("operator size does not match its registers");
    }
    const Index D = b.state_dim();
    std::vector<Index> dims(nv);
    for (size_t i = 0; i < nv; ++i) {
        dims[i] = b.variables[i].dim;
    }
    auto digits = [&](Index x) {
        std::vector<Index> dg(nv);
        for (size_t i = nv; i-- > 0;) {
            dg[i] = x % dims[i];
            x /= dims[i];
        }
        return dg;
    };
    auto target_index = [&](const std::vector<Index> &dg) {
        Index t = 0;
        for (size_t k = 0; k < tidx.size(); ++k) {
            t = t * dims[tidx[k]] + dg[tidx[k]];
        }
        return t;
    };
    std::vector<bool> is_target(nv, false);
    for (auto i : tidx) {
        is_target[i] = true;
    }
    Mat full = Mat::Zero(D, D);
    for (Index r = 0; r < D; ++r) {
        auto dr = digits(r);
        for (Index c = 0; c < D; ++c) {
            auto dc = digits(c);
            bool same_rest = true;
            for (size_t i = 0; i < nv && same_rest; ++i) {
                same_rest = is_target[i] || dr[i] == dc[i];
            }
            if (same_rest) {
                full(r, c) = op(target_index(dr), target_index(dc));
            }
        }
    }
    return full;
}

enum class StmtKind { Skip, Init, Unitary, Choice, If, While };

/// One statement. Statement lists play the role of sequential composition.
struct Stmt {
    StmtKind kind = StmtKind::Skip;
    std::vector<std::string> vars;              // Init, Unitary
    std::string op;                             // Unitary or measurement name
    std::vector<std::vector<Stmt>> branches;    // Choice branches; If/While body is branches[0]
    int line = 0;
    int column = 0;
    Index loc = -1;
};

struct ProgramAST {
    std::vector<Stmt> body;
    OperatorBindings bindings;
    Index n_locations = 0;  // including the end location
    Index n_actions = 1;    // widest choice
};

namespace detail {

enum class Tok { Ident, Ket0, Assign, LBrace, RBrace, Bar, Comma, Sep, LBrack, RBrack, Colon, End };

struct Token {
    Tok kind;
    std::string text;
    int line;
    int column;
};

inline std::vector<Token> lex(const std::string &src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto push = [&](Tok k, std::string t, int l, int c) { out.push_back({k, std::move(t), l, c}); };
    while (i < src.size()) {
        unsigned char ch = static_cast<unsigned char>(src[i]);
        int l = line, c = col;
        if (ch == '\n') {
            push(Tok::Sep, "\\n", l, c);
            ++i;
            ++line;
            col = 1;
            continue;
        }
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            ++i;
            ++col;
            continue;
        }
        if (ch == '#' || (ch == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
            while (i < src.size() && src[i] != '\n') {
                ++i;
            }
            continue;
        }
        if (std::isalpha(ch) || ch == '_' || ch >= 0x80) {
            size_t j = i;
            while (j < src.size()) {
                unsigned char cj = static_cast<unsigned char>(src[j]);
                if (!(std::isalnum(cj) || cj == '_' || cj >= 0x80)) {
                    break;
                }
                ++j;
            }
            push(Tok::Ident, src.substr(i, j - i), l, c);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (ch == '|') {
            if (src.compare(i, 3, "|0>") == 0) {
                push(Tok::Ket0, "|0>", l, c);
                i += 3;
                col += 3;
                continue;
            }
            if (src.compare(i, 5, "|0\xE2\x9F\xA9") == 0) {  // |0 followed by U+27E9
                push(Tok::Ket0, "|0>", l, c);
                i += 5;
                col += 3;
                continue;
            }
            push(Tok::Bar, "|", l, c);
            ++i;
            ++col;
            continue;
        }
        if (ch == ':' && i + 1 < src.size() && src[i + 1] == '=') {
            push(Tok::Assign, ":=", l, c);
            i += 2;
            col += 2;
            continue;
        }
        Tok k;
        switch (ch) {
            case ':': k = Tok::Colon; break;
            case '{': k = Tok::LBrace; break;
            case '}': k = Tok::RBrace; break;
            case ',': k = Tok::Comma; break;
            case ';': k = Tok::Sep; break;
            case '[': k = Tok::LBrack; break;
            case ']': k = Tok::RBrack; break;
            default:
                throw ParseError(l, c, std::string("unexpected character '") + src[i] + "'");
        }
        push(k, std::string(1, src[i]), l, c);
        ++i;
        ++col;
    }
    push(Tok::End, "<end>", line, col);
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {
    }

    std::vector<Stmt> program() {
        auto body = block_body();
        if (peek().kind != Tok::End) {
            fail("unexpected '" + peek().text + "'");
        }
        return body;
    }

private:
    std::vector<Token> t_;
    size_t p_ = 0;

    const Token &peek(size_t ahead = 0) const {
        return t_[std::min(p_ + ahead, t_.size() - 1)];
    }
    const Token &take() {
        const Token &t = t_[p_];
        if (p_ + 1 < t_.size()) {
            ++p_;
        }
        return t;
    }
    [[noreturn]] void fail(const std::string &msg) const {
        throw ParseError(peek().line, peek().column, msg);
    }
    const Token &expect(Tok k, const char *what) {
        if (peek().kind != k) {
            fail(std::string("expected ") + what + ", found '" + peek().text + "'");
        }
        return take();
    }

    // Separators and labels are interchangeable filler between statements.
    void skip_filler() {
        for (;;) {
            if (peek().kind == Tok::Sep) {
                take();
            } else if (peek().kind == Tok::Ident && peek(1).kind == Tok::Colon) {
                take();
                take();
            } else {
                return;
            }
        }
    }

    std::vector<Stmt> block_body() {
        std::vector<Stmt> out;
        skip_filler();
        while (peek().kind != Tok::End && peek().kind != Tok::RBrace && peek().kind != Tok::Bar) {
            out.push_back(statement());
            if (peek().kind != Tok::Sep && peek().kind != Tok::End && peek().kind != Tok::RBrace &&
                peek().kind != Tok::Bar) {
                fail("expected end of statement, found '" + peek().text + "'");
            }
            skip_filler();
        }
        return out;
    }

    std::string bracketed(const char *head) {
        const Token &h = expect(Tok::Ident, head);
        if (h.text != head) {
            throw ParseError(h.line, h.column, std::string("expected '") + head + "[...]'");
        }
        expect(Tok::LBrack, "'['");
        std::string name = expect(Tok::Ident, "operator name").text;
        expect(Tok::RBrack, "']'");
        return name;
    }

    std::vector<Stmt> braced_block() {
        expect(Tok::LBrace, "'{'");
        auto body = block_body();
        expect(Tok::RBrace, "'}'");
        return body;
    }

    Stmt statement() {
        Stmt s;
        s.line = peek().line;
        s.column = peek().column;
        const Token &head = expect(Tok::Ident, "statement");
        if (head.text == "skip") {
            s.kind = StmtKind::Skip;
            return s;
        }
        if (head.text == "choice") {
            s.kind = StmtKind::Choice;
            expect(Tok::LBrace, "'{'");
            s.branches.push_back(block_body());
            while (peek().kind == Tok::Bar) {
                take();
                s.branches.push_back(block_body());
            }
            expect(Tok::RBrace, "'}'");
            return s;
        }
        if (head.text == "if" || head.text == "while") {
            s.kind = head.text == "if" ? StmtKind::If : StmtKind::While;
            s.op = bracketed("M");
            s.branches.push_back(braced_block());
            return s;
        }
        s.vars.push_back(head.text);
        while (peek().kind == Tok::Comma) {
            take();
            s.vars.push_back(expect(Tok::Ident, "register name").text);
        }
        expect(Tok::Assign, "':='");
        if (peek().kind == Tok::Ket0) {
            take();
            if (s.vars.size() != 1) {
                throw ParseError(s.line, s.column, "initialization takes exactly one register");
            }
            s.kind = StmtKind::Init;
            return s;
        }
        s.kind = StmtKind::Unitary;
        s.op = bracketed("U");
        return s;
    }
};

inline void check_statements(const std::vector<Stmt> &body, const OperatorBindings &b,
                             const Tolerances &tol) {
    for (const auto &s : body) {
        auto at = [&](const std::string &msg) { return ParseError(s.line, s.column, msg); };
        for (size_t i = 0; i < s.vars.size(); ++i) {
            try {
                b.register_index(s.vars[i]);
            } catch (const ValidationError &) {
                throw at("unbound register '" + s.vars[i] + "'");
            }
            for (size_t j = 0; j < i; ++j) {
                if (s.vars[j] == s.vars[i]) {
                    throw at("register '" + s.vars[i] + "' listed twice");
                }
            }
        }
        switch (s.kind) {
            case StmtKind::Unitary: {
                auto it = b.unitaries.find(s.op);
                if (it == b.unitaries.end()) {
                    throw at("unbound operator '" + s.op + "'");
                }
                Index d = 1;
                for (const auto &v : s.vars) {
                    d *= b.variables[b.register_index(v)].dim;
                }
                const Mat &u = it->second;
                if (u.rows() != d || u.cols() != d) {
                    throw at("operator '" + s.op + "' does not match the size of its registers");
                }
                if (max_abs(u.adjoint() * u - Mat::Identity(d, d)) > tol.trace_tol) {
                    throw at("operator '" + s.op + "' is not unitary");
                }
                break;
            }
            case StmtKind::If:
            case StmtKind::While:
                if (!b.measurements.count(s.op)) {
                    throw at("unbound measurement '" + s.op + "'");
                }
                break;
            default:
                break;
        }
        for (const auto &br : s.branches) {
            check_statements(br, b, tol);
        }
    }
}

inline void assign_locations(std::vector<Stmt> &body, Index &next, Index &widest) {
    for (auto &s : body) {
        s.loc = next++;
        if (s.kind == StmtKind::Choice) {
            widest = std::max<Index>(widest, static_cast<Index>(s.branches.size()));
        }
        for (auto &br : s.branches) {
            assign_locations(br, next, widest);
        }
    }
}

}  // namespace detail

/// Parses program text and resolves every operator name against the bindings.
inline ProgramAST parse_program(const std::string &source, const OperatorBindings &bindings,
                                const Tolerances &tol = {}) {
    bindings.validate(tol);
    ProgramAST ast;
    ast.bindings = bindings;
    ast.body = detail::Parser(detail::lex(source)).program();
    detail::check_statements(ast.body, bindings, tol);
    Index next = 0, widest = 1;
    detail::assign_locations(ast.body, next, widest);
    ast.n_locations = next + 1;
    ast.n_actions = widest;
    return ast;
}

// ---- located models ---------------------------------------------------------

struct Transition {
    Index source;
    std::string action;
    Index target;
    SuperOperator op;
};

/// Model with classical locations; the last location is the end location.
struct LocatedQMDP {
    Index dim = 0;
    std::vector<std::string> locations;
    std::vector<std::string> actions;
    std::vector<Transition> transitions;

    Index n() const {
        return static_cast<Index>(locations.size());
    }
    Index end_location() const {
        return n() - 1;
    }

    Index location_index(const std::string &name) const {
        for (Index i = 0; i < n(); ++i) {
            if (locations[static_cast<size_t>(i)] == name) {
                return i;
            }
        }
        throw ValidationError("unknown location '" + name + "'");
    }

    std::vector<const Transition *> outgoing(Index loc, const std::string &action) const {
        std::vector<const Transition *> out;
        for (const auto &t : transitions) {
            if (t.source == loc && t.action == action) {
                out.push_back(&t);
            }
        }
        return out;
    }

    /// Every (location, action) pair must be trace-preserving in sum.
    void validate(const Tolerances &tol = {}) const {
        if (n() < 1 || actions.empty() || dim < 1) {
            throw ValidationError("located model: needs locations, actions and a positive dim");
        }
        for (const auto &t : transitions) {
            if (t.source < 0 || t.source >= n() || t.target < 0 || t.target >= n()) {
                throw ValidationError("located model: transition location out of range");
            }
            if (std::find(actions.begin(), actions.end(), t.action) == actions.end()) {
                throw ValidationError("located model: unknown action '" + t.action + "'");
            }
            for (const auto &k : t.op.kraus) {
                if (k.rows() != dim || k.cols() != dim) {
                    throw ValidationError("located model: Kraus operator has wrong shape");
                }
            }
        }
        for (Index l = 0; l < n(); ++l) {
            for (const auto &a : actions) {
                Mat g = Mat::Zero(dim, dim);
                for (const auto *t : outgoing(l, a)) {
                    g += t->op.gram();
                }
                if (max_abs(g - Mat::Identity(dim, dim)) > tol.trace_tol) {
                    throw ValidationError("located model: (" + locations[static_cast<size_t>(l)] +
                                          ", " + a + ") is not trace-preserving");
                }
            }
        }
    }
};

namespace detail {

inline SuperOperator single(Mat k) {
    SuperOperator so;
    so.kraus.push_back(std::move(k));
    return so;
}

struct Lowering {
    const ProgramAST &ast;
    LocatedQMDP &out;

    void every_action(Index src, Index dst, const SuperOperator &op) {
        for (const auto &a : out.actions) {
            out.transitions.push_back({src, a, dst, op});
        }
    }

    Mat measurement_part(const std::string &name, bool outcome) const {
        const auto &mb = ast.bindings.measurements.at(name);
        std::vector<std::string> on = mb.on;
        if (on.empty()) {
            for (const auto &r : ast.bindings.variables) {
                on.push_back(r.name);
            }
        }
        return embed_operator(ast.bindings, on, outcome ? mb.m_true : mb.m_false);
    }

    void lower(const std::vector<Stmt> &body, Index cont) {
        const Index D = out.dim;
        for (size_t i = 0; i < body.size(); ++i) {
            const Stmt &s = body[i];
            Index next = i + 1 < body.size() ? body[i + 1].loc : cont;
            switch (s.kind) {
                case StmtKind::Skip:
                    every_action(s.loc, next, single(Mat::Identity(D, D)));
                    break;
                case StmtKind::Init: {
                    const Index k = ast.bindings.variables[ast.bindings.register_index(s.vars[0])].dim;
                    SuperOperator so;
                    for (Index j = 0; j < k; ++j) {
                        Mat local = Mat::Zero(k, k);
                        local(0, j) = 1.0;  // |0><j|
                        so.kraus.push_back(embed_operator(ast.bindings, s.vars, local));
                    }
                    every_action(s.loc, next, so);
                    break;
                }
                case StmtKind::Unitary:
                    every_action(s.loc, next,
                                 single(embed_operator(ast.bindings, s.vars, ast.bindings.unitaries.at(s.op))));
                    break;
                case StmtKind::Choice: {
                    const size_t k = s.branches.size();
                    for (size_t a = 0; a < out.actions.size(); ++a) {
                        // Actions beyond this choice's arity repeat its last branch.
                        const auto &br = s.branches[std::min(a, k - 1)];
                        Index dst = br.empty() ? next : br.front().loc;
                        out.transitions.push_back({s.loc, out.actions[a], dst, single(Mat::Identity(D, D))});
                    }
                    for (const auto &br : s.branches) {
                        lower(br, next);
                    }
                    break;
                }
                case StmtKind::If:
                case StmtKind::While: {
                    const auto &b = s.branches[0];
                    Index back = s.kind == StmtKind::While ? s.loc : next;
                    Index enter = b.empty() ? back : b.front().loc;
                    every_action(s.loc, enter, single(measurement_part(s.op, true)));
                    every_action(s.loc, next, single(measurement_part(s.op, false)));
                    lower(b, back);
                    break;
                }
            }
        }
    }
};

}  // namespace detail

/// Lowers a program to its located model, one transition group per statement.
inline LocatedQMDP compile_to_located(const ProgramAST &ast) {
    LocatedQMDP out;
    out.dim = ast.bindings.state_dim();
    for (Index i = 0; i < ast.n_locations; ++i) {
        out.locations.push_back("l" + std::to_string(i + 1));
    }
    for (Index j = 0; j < ast.n_actions; ++j) {
        out.actions.push_back("a" + std::to_string(j + 1));
    }
    detail::Lowering low{ast, out};
    low.lower(ast.body, out.end_location());
    low.every_action(out.end_location(), out.end_location(),
                     detail::single(Mat::Identity(out.dim, out.dim)));
    return out;
}

/// One located step. Returns every target reachable from (loc, action) with its
/// (possibly zero) successor state, ordered by target location.
inline std::vector<std::pair<Index, Mat>> step_located(const LocatedQMDP &m, Index loc,
                                                       const Mat &rho, const std::string &action) {
    if (loc < 0 || loc >= m.n()) {
        throw ValidationError("step_located: unknown location");
    }
    if (std::find(m.actions.begin(), m.actions.end(), action) == m.actions.end()) {
        throw ValidationError("step_located: unknown action '" + action + "'");
    }
    std::map<Index, Mat> acc;
    for (const auto *t : m.outgoing(loc, action)) {
        Mat part = t->op.apply(rho);
        auto it = acc.find(t->target);
        if (it == acc.end()) {
            acc.emplace(t->target, part);
        } else {
            it->second += part;
        }
    }
    return {acc.begin(), acc.end()};
}

/// A location is a choice point when its transitions differ between actions.
inline std::vector<Index> choice_locations(const LocatedQMDP &m, const Tolerances &tol = {}) {
    std::vector<Index> out;
    for (Index l = 0; l < m.n(); ++l) {
        auto ref = m.outgoing(l, m.actions.front());
        bool differs = false;
        for (size_t a = 1; a < m.actions.size() && !differs; ++a) {
            auto other = m.outgoing(l, m.actions[a]);
            if (other.size() != ref.size()) {
                differs = true;
                break;
            }
            for (size_t i = 0; i < ref.size() && !differs; ++i) {
                if (other[i]->target != ref[i]->target ||
                    other[i]->op.kraus.size() != ref[i]->op.kraus.size()) {
                    differs = true;
                    break;
                }
                for (size_t k = 0; k < ref[i]->op.kraus.size(); ++k) {
                    if (max_abs(other[i]->op.kraus[k] - ref[i]->op.kraus[k]) > tol.herm_tol) {
                        differs = true;
                        break;
                    }
                }
            }
        }
        if (differs) {
            out.push_back(l);
        }
    }
    return out;
}

/// |loc><loc| (x) rho on the flattened space.
inline Mat embed_located_state(const LocatedQMDP &m, Index loc, const Mat &rho) {
    const Index d = m.dim;
    Mat out = Mat::Zero(m.n() * d, m.n() * d);
    out.block(loc * d, loc * d, d, d) = rho;
    return out;
}

/// Flattens locations into the state space (dimension n*d). Each flat action
/// picks one located action per location; with `lazy`, only choice points get
/// a component and all other locations use the first action.
inline QuantumMDP located_to_flat(const LocatedQMDP &m, bool lazy = true,
                                  const Tolerances &tol = {}) {
    const Index d = m.dim, n = m.n(), D = n * d;
    std::vector<Index> comps;
    if (lazy) {
        comps = choice_locations(m, tol);
    } else {
        for (Index l = 0; l < n; ++l) {
            comps.push_back(l);
        }
    }
    const size_t na = m.actions.size();
    size_t count = 1;
    for (size_t i = 0; i < comps.size(); ++i) {
        if (count > (size_t{1} << 20) / na) {
            throw PreconditionError("located_to_flat: tuple action set is too large");
        }
        count *= na;
    }
    QuantumMDP flat;
    flat.dim = D;
    std::vector<size_t> choice(comps.size(), 0);
    for (size_t t = 0; t < count; ++t) {
        size_t rem = t;
        for (size_t c = comps.size(); c-- > 0;) {
            choice[c] = rem % na;
            rem /= na;
        }
        std::string name;
        for (size_t c = 0; c < comps.size(); ++c) {
            name += (c ? "," : "") + m.actions[choice[c]];
        }
        if (comps.empty()) {
            name = m.actions.front();
        }
        SuperOperator so;
        so.cls = TraceClass::TracePreserving;
        for (Index l = 0; l < n; ++l) {
            size_t a = 0;
            auto it = std::find(comps.begin(), comps.end(), l);
            if (it != comps.end()) {
                a = choice[static_cast<size_t>(it - comps.begin())];
            }
            for (const auto *tr : m.outgoing(l, m.actions[a])) {
                for (const auto &k : tr->op.kraus) {
                    Mat big = Mat::Zero(D, D);
                    big.block(tr->target * d, l * d, d, d) = k;  // |l_target><l| (x) k
                    so.kraus.push_back(std::move(big));
                }
            }
        }
        flat.actions.push_back(name);
        flat.dynamics.push_back(std::move(so));
    }
    flat.meas.m_false = Mat::Zero(D, D);
    flat.meas.m_false.block((n - 1) * d, (n - 1) * d, d, d) = Mat::Identity(d, d);
    flat.meas.m_true = Mat::Identity(D, D) - flat.meas.m_false;
    return flat;
}

/// Two locations: l1 loops under E_j . M_true, l1 -> l2 under M_false, l2 is the end.
inline LocatedQMDP flat_to_located(const QuantumMDP &m) {
    LocatedQMDP out;
    out.dim = m.dim;
    out.locations = {"l1", "l2"};
    out.actions = m.actions;
    for (size_t j = 0; j < m.actions.size(); ++j) {
        SuperOperator stay;
        for (const auto &k : m.dynamics[j].kraus) {
            stay.kraus.push_back(k * m.meas.m_true);
        }
        out.transitions.push_back({0, m.actions[j], 0, stay});
        out.transitions.push_back({0, m.actions[j], 1, detail::single(m.meas.m_false)});
        out.transitions.push_back({1, m.actions[j], 1, detail::single(Mat::Identity(m.dim, m.dim))});
    }
    return out;
}

}  // namespace qterm
