#pragma once

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>

#include "m2t/autodiff.hpp"

// Differentiable operations on tape values. Every operation records itself on
// the tape of its first operand; mixing tapes is an error. Shapes are checked
// eagerly and mismatches raise DimensionError naming both shapes.

namespace m2t {

inline constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();

/// [m×k]·[k×n] → [m×n]
Var matmul(const Var& a, const Var& b);
/// [m×k]·[n×k]ᵀ → [m×n]; applies a weight stored as [out×in] to row vectors.
Var matmul_nt(const Var& a, const Var& b);
/// [m×k]·[k] → [m]
Var matvec(const Var& w, const Var& x);
/// Σ_{j∈[begin,end)} x_j·M_j for x:[T], M:[T×n] → [n]. Rows outside the
/// range contribute nothing and receive no gradient.
Var vecmat(const Var& x, const Var& m, std::size_t begin = 0, std::size_t end = kAll);

/// Elementwise sum. `b` may also be a scalar, or a row vector [n] added to
/// every row of a matrix [m×n].
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise product; `b` may be a scalar.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
/// min(a, c) elementwise; the gradient passes where a < c.
Var minimum(const Var& a, double c);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);

/// Concatenation. Vectors join along axis 0; matrices along axis 0 (rows)
/// or axis 1 (columns).
Var concat(std::span<const Var> parts, std::size_t axis = 0);
Var concat(std::initializer_list<Var> parts, std::size_t axis = 0);
/// Stack equally sized vectors into a matrix, one per row.
Var stack_rows(std::span<const Var> rows);

/// Numerically stable softmax over the first `valid` entries; the remaining
/// entries are exactly 0 (padding).
Var softmax(const Var& v, std::size_t valid = kAll);
Var log_softmax(const Var& v);
/// −log softmax(logits)[target], fused.
Var nll(const Var& logits, std::size_t target);

Var sum(const Var& a);
Var dot(const Var& a, const Var& b);
/// Row `i` of a matrix as a vector (embedding lookup).
Var row(const Var& m, std::size_t i);
/// Entry `i` of a vector as a scalar.
Var element(const Var& v, std::size_t i);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator+(const Var& a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, const Var& a) { return add_scalar(a, c); }
inline Var operator-(const Var& a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, const Var& a) { return add_scalar(scale(a, -1.0), c); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace m2t
