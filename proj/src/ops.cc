/* Copyright 2026 The bam Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bam/ops.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bam/random.h"

namespace bam {
namespace {

std::string Shape(const Var& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                Shape(a) + " vs " + Shape(b));
  }
}

Graph& G(const Var& v) { return *v.graph(); }

template <typename F, typename D>
Var Unary(const Var& a, F forward, D derivative) {
  Matrix out = a.value().unaryExpr(forward);
  return G(a).Record(std::move(out), {a},
                     [a, derivative](Graph& g, const Matrix& y,
                                     const Matrix& gy) {
                       Matrix d = a.value().binaryExpr(y, derivative);
                       g.Accumulate(a, gy.cwiseProduct(d));
                     });
}

}  // namespace

Var MatMul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("MatMul: " + Shape(a) + " * " + Shape(b));
  }
  Matrix out = a.value() * b.value();
  return G(a).Record(std::move(out), {a, b},
                     [a, b](Graph& g, const Matrix&, const Matrix& gy) {
                       if (g.NeedsGrad(a)) {
                         g.Accumulate(a, gy * b.value().transpose());
                       }
                       if (g.NeedsGrad(b)) {
                         g.Accumulate(b, a.value().transpose() * gy);
                       }
                     });
}

Var MatMulNT(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("MatMulNT: " + Shape(a) + " * " + Shape(b) +
                                "^T");
  }
  Matrix out = a.value() * b.value().transpose();
  return G(a).Record(std::move(out), {a, b},
                     [a, b](Graph& g, const Matrix&, const Matrix& gy) {
                       if (g.NeedsGrad(a)) g.Accumulate(a, gy * b.value());
                       if (g.NeedsGrad(b)) {
                         g.Accumulate(b, gy.transpose() * a.value());
                       }
                     });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Add");
  return G(a).Record(a.value() + b.value(), {a, b},
                     [a, b](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy);
                       g.Accumulate(b, gy);
                     });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Sub");
  return G(a).Record(a.value() - b.value(), {a, b},
                     [a, b](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy);
                       g.Accumulate(b, -gy);
                     });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Mul");
  return G(a).Record(a.value().cwiseProduct(b.value()), {a, b},
                     [a, b](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy.cwiseProduct(b.value()));
                       g.Accumulate(b, gy.cwiseProduct(a.value()));
                     });
}

Var Div(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Div");
  return G(a).Record(
      a.value().cwiseQuotient(b.value()), {a, b},
      [a, b](Graph& g, const Matrix& y, const Matrix& gy) {
        g.Accumulate(a, gy.cwiseQuotient(b.value()));
        if (g.NeedsGrad(b)) {
          g.Accumulate(b, -gy.cwiseProduct(y).cwiseQuotient(b.value()));
        }
      });
}

Var Scale(const Var& a, double s) {
  return G(a).Record(a.value() * s, {a},
                     [a, s](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy * s);
                     });
}

Var AddScalar(const Var& a, double s) {
  return G(a).Record(a.value().array() + s, {a},
                     [a](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy);
                     });
}

Var Neg(const Var& a) { return Scale(a, -1.0); }

Var AddRow(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("AddRow: " + Shape(a) + " + " + Shape(row));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return G(a).Record(std::move(out), {a, row},
                     [a, row](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy);
                       if (g.NeedsGrad(row)) {
                         g.Accumulate(row, gy.colwise().sum());
                       }
                     });
}

Var MulCol(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw std::invalid_argument("MulCol: " + Shape(a) + " * " + Shape(col));
  }
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return G(a).Record(
      std::move(out), {a, col},
      [a, col](Graph& g, const Matrix&, const Matrix& gy) {
        if (g.NeedsGrad(a)) {
          Matrix ga = gy.array().colwise() * col.value().col(0).array();
          g.Accumulate(a, ga);
        }
        if (g.NeedsGrad(col)) {
          g.Accumulate(col, gy.cwiseProduct(a.value()).rowwise().sum());
        }
      });
}

Var BroadcastCol(const Var& col, Eigen::Index cols) {
  if (col.cols() != 1) {
    throw std::invalid_argument("BroadcastCol: expected N x 1, got " +
                                Shape(col));
  }
  Matrix out = col.value().col(0).replicate(1, cols);
  return G(col).Record(std::move(out), {col},
                       [col](Graph& g, const Matrix&, const Matrix& gy) {
                         g.Accumulate(col, gy.rowwise().sum());
                       });
}

Var Relu(const Var& a) {
  return Unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Sigmoid(const Var& a) {
  return Unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Softplus(const Var& a) {
  return Unary(
      a,
      [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var Exp(const Var& a) {
  return Unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var Log(const Var& a) {
  return Unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Abs(const Var& a) {
  return Unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var InverseSigmoid(const Var& a, double eps) {
  return Unary(
      a,
      [eps](double x) {
        const double c = std::clamp(x, eps, 1.0 - eps);
        return std::log(c / (1.0 - c));
      },
      [eps](double x, double) {
        if (x < eps || x > 1.0 - eps) return 0.0;
        return 1.0 / (x * (1.0 - x));
      });
}

Var Minimum(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Minimum");
  Matrix out = a.value().cwiseMin(b.value());
  return G(a).Record(
      std::move(out), {a, b},
      [a, b](Graph& g, const Matrix&, const Matrix& gy) {
        Matrix mask = (a.value().array() <= b.value().array()).cast<double>();
        g.Accumulate(a, gy.cwiseProduct(mask));
        g.Accumulate(b, gy - gy.cwiseProduct(mask));
      });
}

Var Maximum(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Maximum");
  Matrix out = a.value().cwiseMax(b.value());
  return G(a).Record(
      std::move(out), {a, b},
      [a, b](Graph& g, const Matrix&, const Matrix& gy) {
        Matrix mask = (a.value().array() >= b.value().array()).cast<double>();
        g.Accumulate(a, gy.cwiseProduct(mask));
        g.Accumulate(b, gy - gy.cwiseProduct(mask));
      });
}

Var SoftmaxRows(const Var& a) {
  Matrix out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return G(a).Record(
      std::move(out), {a}, [a](Graph& g, const Matrix& y, const Matrix& gy) {
        Eigen::VectorXd dots = gy.cwiseProduct(y).rowwise().sum();
        Matrix ga = y.array() * (gy.array().colwise() - dots.array());
        g.Accumulate(a, ga);
      });
}

Var LogSumExp(const Var& a) {
  const double m = a.value().maxCoeff();
  const double s = (a.value().array() - m).exp().sum();
  Matrix out(1, 1);
  out(0, 0) = m + std::log(s);
  return G(a).Record(std::move(out), {a},
                     [a](Graph& g, const Matrix& y, const Matrix& gy) {
                       Matrix soft = (a.value().array() - y(0, 0)).exp();
                       g.Accumulate(a, soft * gy(0, 0));
                     });
}

Var Sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return G(a).Record(std::move(out), {a},
                     [a](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, Matrix::Constant(a.rows(), a.cols(),
                                                        gy(0, 0)));
                     });
}

Var Mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return Scale(Sum(a), 1.0 / n);
}

Var RowMean(const Var& a) {
  const double n = static_cast<double>(a.cols());
  Matrix out = a.value().rowwise().mean();
  return G(a).Record(std::move(out), {a},
                     [a, n](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy.col(0).replicate(1, a.cols()) / n);
                     });
}

Var RowMax(const Var& a) {
  const Eigen::Index rows = a.rows();
  std::vector<Eigen::Index> arg(rows);
  Matrix out(rows, 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    out(i, 0) = a.value().row(i).maxCoeff(&arg[i]);
  }
  return G(a).Record(std::move(out), {a},
                     [a, arg](Graph& g, const Matrix&, const Matrix& gy) {
                       Matrix ga = Matrix::Zero(a.rows(), a.cols());
                       for (Eigen::Index i = 0; i < a.rows(); ++i) {
                         ga(i, arg[i]) = gy(i, 0);
                       }
                       g.Accumulate(a, ga);
                     });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw std::invalid_argument("ConcatCols: row mismatch " + Shape(p));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return G(parts[0]).Record(
      std::move(out), parts,
      [inputs](Graph& g, const Matrix&, const Matrix& gy) {
        Eigen::Index at = 0;
        for (const Var& p : inputs) {
          g.Accumulate(p, gy.middleCols(at, p.cols()));
          at += p.cols();
        }
      });
}

Var ConcatCols(std::initializer_list<Var> parts) {
  return ConcatCols(std::span<const Var>(parts.begin(), parts.size()));
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw std::invalid_argument("ConcatRows: column mismatch " + Shape(p));
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return G(parts[0]).Record(
      std::move(out), parts,
      [inputs](Graph& g, const Matrix&, const Matrix& gy) {
        Eigen::Index at = 0;
        for (const Var& p : inputs) {
          g.Accumulate(p, gy.middleRows(at, p.rows()));
          at += p.rows();
        }
      });
}

Var SliceCols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("SliceCols: out of range for " + Shape(a));
  }
  Matrix out = a.value().middleCols(start, count);
  return G(a).Record(
      std::move(out), {a},
      [a, start, count](Graph& g, const Matrix&, const Matrix& gy) {
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        ga.middleCols(start, count) = gy;
        g.Accumulate(a, ga);
      });
}

Var GatherRows(const Var& a, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) {
      throw std::invalid_argument("GatherRows: index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return G(a).Record(std::move(out), {a},
                     [a, idx](Graph& g, const Matrix&, const Matrix& gy) {
                       Matrix ga = Matrix::Zero(a.rows(), a.cols());
                       for (size_t i = 0; i < idx.size(); ++i) {
                         ga.row(idx[i]) += gy.row(static_cast<Eigen::Index>(i));
                       }
                       g.Accumulate(a, ga);
                     });
}

Var ShiftRows(const Var& a, int offset) {
  const Eigen::Index n = a.rows();
  Matrix out = Matrix::Zero(n, a.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = i + offset;
    if (src >= 0 && src < n) out.row(i) = a.value().row(src);
  }
  return G(a).Record(std::move(out), {a},
                     [a, offset](Graph& g, const Matrix&, const Matrix& gy) {
                       const Eigen::Index n = a.rows();
                       Matrix ga = Matrix::Zero(n, a.cols());
                       for (Eigen::Index i = 0; i < n; ++i) {
                         const Eigen::Index src = i + offset;
                         if (src >= 0 && src < n) ga.row(src) += gy.row(i);
                       }
                       g.Accumulate(a, ga);
                     });
}

Var InterpolateRows(const Var& memory, const Var& positions) {
  if (positions.cols() != 1) {
    throw std::invalid_argument("InterpolateRows: positions must be Q x 1");
  }
  const Eigen::Index n = memory.rows();
  const Eigen::Index q = positions.rows();
  const double last = static_cast<double>(n - 1);
  std::vector<Eigen::Index> lo(q), hi(q);
  std::vector<double> frac(q);
  std::vector<bool> interior(q);
  Matrix out(q, memory.cols());
  for (Eigen::Index i = 0; i < q; ++i) {
    const double pos = positions.value()(i, 0);
    interior[i] = pos > 0.0 && pos < 1.0 && n > 1;
    const double x = std::clamp(pos, 0.0, 1.0) * last;
    lo[i] = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)),
                                   n - 1);
    hi[i] = std::min<Eigen::Index>(lo[i] + 1, n - 1);
    frac[i] = x - static_cast<double>(lo[i]);
    out.row(i) = (1.0 - frac[i]) * memory.value().row(lo[i]) +
                 frac[i] * memory.value().row(hi[i]);
  }
  return G(memory).Record(
      std::move(out), {memory, positions},
      [memory, positions, lo, hi, frac, interior, last](
          Graph& g, const Matrix&, const Matrix& gy) {
        if (g.NeedsGrad(memory)) {
          Matrix gm = Matrix::Zero(memory.rows(), memory.cols());
          for (size_t i = 0; i < lo.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            gm.row(lo[i]) += (1.0 - frac[i]) * gy.row(r);
            gm.row(hi[i]) += frac[i] * gy.row(r);
          }
          g.Accumulate(memory, gm);
        }
        if (g.NeedsGrad(positions)) {
          Matrix gp = Matrix::Zero(positions.rows(), 1);
          for (size_t i = 0; i < lo.size(); ++i) {
            if (!interior[i]) continue;
            const auto r = static_cast<Eigen::Index>(i);
            gp(r, 0) = last * gy.row(r).dot(memory.value().row(hi[i]) -
                                            memory.value().row(lo[i]));
          }
          g.Accumulate(positions, gp);
        }
      });
}

Var Dropout(const Var& a, double rate, Rng* rng) {
  if (rate <= 0.0 || rng == nullptr) return a;
  const double keep = 1.0 - rate;
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->Uniform() < keep ? 1.0 / keep : 0.0;
  }
  Matrix out = a.value().cwiseProduct(mask);
  return G(a).Record(std::move(out), {a},
                     [a, mask](Graph& g, const Matrix&, const Matrix& gy) {
                       g.Accumulate(a, gy.cwiseProduct(mask));
                     });
}

Var Detach(const Var& a) { return G(a).Constant(a.value()); }

}  // namespace bam
