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

// Fixture loading and two-qubit states shared by the test binaries.

#pragma once

#include <cmath>
#include <random>
#include <string>

#include "qterm/io.hpp"
#include "qterm/qterm.hpp"

namespace qtest {

using qterm::cplx;
using qterm::Index;
using qterm::Mat;
using qterm::Vec;

inline std::string fixture(const std::string &name) {
    return std::string(QTERM_FIXTURES) + "/" + name;
}

inline qterm::QuantumMDP load(const std::string &name) {
    return qterm::io::load_model(qterm::io::read_json_file(fixture(name)));
}

inline qterm::OperatorBindings qbf_bindings() {
    return qterm::io::load_bindings(qterm::io::read_json_file(fixture("qbf_bindings.json")));
}

inline std::string qbf_source() {
    return qterm::io::read_text_file(fixture("qbf_program.txt"));
}

// Single-qubit states.
inline Vec q0() {
    return qterm::ket(2, 0);
}
inline Vec q1() {
    return qterm::ket(2, 1);
}
inline Vec qplus() {
    return (q0() + q1()) / std::sqrt(2.0);
}
inline Vec qminus() {
    return (q0() - q1()) / std::sqrt(2.0);
}

inline Vec kron(const Vec &a, const Vec &b) {
    Vec out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

inline Mat kron(const Mat &a, const Mat &b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Vec k2(const Vec &a, const Vec &b) {
    return kron(a, b);
}

/// Both bases span the same space within tol (mutual membership).
inline bool same_span(const qterm::Subspace &a, const qterm::Subspace &b, double tol = 1e-8) {
    qterm::Tolerances t;
    t.rank_tol = tol;
    return qterm::subspace_equal(a, b, t);
}

inline double fid(const Vec &a, const Vec &b) {
    return qterm::fidelity(a.normalized(), b.normalized());
}

inline Vec random_state(std::mt19937_64 &rng, Index d) {
    std::normal_distribution<double> n;
    Vec v(d);
    for (Index i = 0; i < d; ++i) {
        v(i) = cplx(n(rng), n(rng));
    }
    return v.normalized();
}

inline Mat random_matrix(std::mt19937_64 &rng, Index r, Index c) {
    std::normal_distribution<double> n;
    Mat m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) {
            m(i, j) = cplx(n(rng), n(rng));
        }
    }
    return m;
}

inline Mat random_hermitian(std::mt19937_64 &rng, Index d) {
    Mat a = random_matrix(rng, d, d);
    return (a + a.adjoint()) / 2.0;
}

inline Mat random_density(std::mt19937_64 &rng, Index d) {
    Mat a = random_matrix(rng, d, d);
    Mat rho = a * a.adjoint();
    return rho / rho.trace().real();
}

inline Mat random_unitary(std::mt19937_64 &rng, Index d) {
    Eigen::HouseholderQR<Mat> qr(random_matrix(rng, d, d));
    return qr.householderQ() * Mat::Identity(d, d);
}

/// Trace-preserving Kraus set of size k from an isometry split into blocks.
inline std::vector<Mat> random_channel(std::mt19937_64 &rng, Index d, Index k) {
    Mat u = random_unitary(rng, d * k);
    std::vector<Mat> out;
    for (Index i = 0; i < k; ++i) {
        out.push_back(u.block(i * d, 0, d, d));
    }
    return out;
}

/// Random flat model: actions a0.., a random projective termination measurement
/// of rank r (0 <= r < d).
inline qterm::QuantumMDP random_model(std::mt19937_64 &rng, Index d, size_t actions, Index kmax,
                                      Index false_rank) {
    qterm::QuantumMDP m;
    m.dim = d;
    std::uniform_int_distribution<Index> kd(1, kmax);
    for (size_t j = 0; j < actions; ++j) {
        m.actions.push_back("a" + std::to_string(j));
        m.dynamics.push_back({random_channel(rng, d, kd(rng)), qterm::TraceClass::TracePreserving});
    }
    Mat u = random_unitary(rng, d);
    Mat pf = u.leftCols(false_rank) * u.leftCols(false_rank).adjoint();
    m.meas.m_false = pf;
    m.meas.m_true = Mat::Identity(d, d) - pf;
    return m;
}

inline qterm::Scheduler random_word(std::mt19937_64 &rng, const qterm::QuantumMDP &m, size_t len) {
    std::uniform_int_distribution<size_t> pick(0, m.actions.size() - 1);
    qterm::Scheduler w;
    for (size_t i = 0; i < len; ++i) {
        w.push_back(m.actions[pick(rng)]);
    }
    return w;
}

}  // namespace qtest
