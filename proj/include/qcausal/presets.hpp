#pragma once

// Named example pairs used by the command-line tools and the test suite.

#include "matrix.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <string>

namespace qcausal {

inline CMatrix pauli_x_matrix() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline CMatrix pauli_z_matrix() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

// diag(1, w, w^2, ...) with w = exp(2 pi i / d)
inline CMatrix clock_matrix(Index d) {
    if (d < 1) throw std::invalid_argument("clock_matrix: dimension must be positive");
    CMatrix m = CMatrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(d);
        m(k, k) = Complex(std::cos(ang), std::sin(ang));
    }
    return m;
}

// cyclic shift e_k -> e_{k+1 mod d}
inline CMatrix shift_matrix(Index d) {
    if (d < 1) throw std::invalid_argument("shift_matrix: dimension must be positive");
    CMatrix m = CMatrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) m((k + 1) % d, k) = 1.0;
    return m;
}

struct Preset {
    std::string name;
    Index dim = 0;
    std::vector<CMatrix> generators_a, generators_b;
    std::optional<CMatrix> state;  // density matrix, when the preset fixes one
    std::optional<std::array<CMatrix, 4>> chsh_observables;  // A1, A2, B1, B2
};

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names{"tensor-qubits", "qubit-clash", "pauli-chsh", "block-mixed"};
    for (int d = 2; d <= 12; ++d) names.push_back("clock-shift-" + std::to_string(d));
    return names;
}

namespace detail {

inline CMatrix block_diag(const CMatrix& top, const CMatrix& bottom) {
    CMatrix m = CMatrix::Zero(top.rows() + bottom.rows(), top.cols() + bottom.cols());
    m.topLeftCorner(top.rows(), top.cols()) = top;
    m.bottomRightCorner(bottom.rows(), bottom.cols()) = bottom;
    return m;
}

inline CMatrix singlet_density() {
    CVector psi = CVector::Zero(4);
    psi(1) = 1.0 / std::sqrt(2.0);
    psi(2) = -1.0 / std::sqrt(2.0);
    return psi * psi.adjoint();
}

}  // namespace detail

inline Preset preset(const std::string& name) {
    const CMatrix one = CMatrix::Identity(2, 2);
    const CMatrix sz = pauli_z_matrix();
    const CMatrix sx = pauli_x_matrix();

    if (name == "tensor-qubits") {
        Preset p;
        p.name = name;
        p.dim = 4;
        p.generators_a = {kron(sz, one), kron(sx, one)};
        p.generators_b = {kron(one, sz), kron(one, sx)};
        return p;
    }
    if (name == "qubit-clash") {
        Preset p;
        p.name = name;
        p.dim = 2;
        p.generators_a = {sz};
        p.generators_b = {sx};
        return p;
    }
    if (name == "pauli-chsh") {
        Preset p = preset("tensor-qubits");
        p.name = name;
        p.state = detail::singlet_density();
        const double s2 = std::sqrt(2.0);
        p.chsh_observables = {kron(sz, one), kron(sx, one), CMatrix(-kron(one, CMatrix(sz + sx)) / s2),
                              CMatrix(kron(one, CMatrix(sx - sz)) / s2)};
        return p;
    }
    if (name == "block-mixed") {
        // commuting tensor factors on a four-dimensional block, clashing
        // qubit algebras on a two-dimensional one
        Preset p;
        p.name = name;
        p.dim = 6;
        p.generators_a = {detail::block_diag(kron(sz, one), sz),
                          detail::block_diag(kron(sx, one), sz)};
        p.generators_b = {detail::block_diag(kron(one, sz), sx),
                          detail::block_diag(kron(one, sx), sx)};
        return p;
    }
    if (name.rfind("clock-shift-", 0) == 0) {
        const std::string tail = name.substr(12);
        int d = 0;
        try {
            std::size_t used = 0;
            d = std::stoi(tail, &used);
            if (used != tail.size()) d = 0;
        } catch (const std::exception&) {
            d = 0;
        }
        if (d < 2 || d > 12)
            throw std::invalid_argument("preset: clock-shift dimension must be in 2..12");
        Preset p;
        p.name = name;
        p.dim = d;
        p.generators_a = {clock_matrix(d)};
        p.generators_b = {shift_matrix(d)};
        return p;
    }
    throw std::invalid_argument("preset: unknown name '" + name + "'");
}

}  // namespace qcausal
