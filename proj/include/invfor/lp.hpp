#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "invfor/errors.hpp"
#include "invfor/series.hpp"

namespace invfor {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded };

/// Sparse standard-form linear program.  Variables are dense-indexed; rows
/// keep only nonzero coefficients (zeros are dropped on insertion, duplicate
/// indices are merged).
struct LpProblem {
    struct Row {
        std::vector<std::pair<int, double>> coeffs;
        Relation rel = Relation::LessEqual;
        double rhs = 0.0;
    };

    Sense sense = Sense::Minimize;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> objective;
    std::vector<Row> rows;

    int add_variable(double lo, double up, double obj = 0.0) {
        lower.push_back(lo);
        upper.push_back(up);
        objective.push_back(obj);
        return static_cast<int>(lower.size()) - 1;
    }

    void set_objective(int var, double coeff) {
        if (var < 0 || var >= num_variables())
            throw MalformedProblem("set_objective: unknown variable " + std::to_string(var));
        objective[static_cast<std::size_t>(var)] = coeff;
    }

    void add_constraint(std::vector<std::pair<int, double>> coeffs, Relation rel, double rhs) {
        Row row;
        row.rel = rel;
        row.rhs = rhs;
        std::sort(coeffs.begin(), coeffs.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [var, val] : coeffs) {
            if (!row.coeffs.empty() && row.coeffs.back().first == var)
                row.coeffs.back().second += val;
            else
                row.coeffs.emplace_back(var, val);
        }
        std::erase_if(row.coeffs, [](const auto& e) { return e.second == 0.0; });
        rows.push_back(std::move(row));
    }

    int num_variables() const { return static_cast<int>(lower.size()); }
    int num_constraints() const { return static_cast<int>(rows.size()); }

    /// Throws MalformedProblem on NaN data or references to unregistered
    /// variables.  Bound order (lo <= up) is a feasibility question, not a
    /// structural one, and is left to the solver.
    void validate() const {
        const int n = num_variables();
        for (int j = 0; j < n; ++j) {
            const double lo = lower[static_cast<std::size_t>(j)];
            const double up = upper[static_cast<std::size_t>(j)];
            const double ob = objective[static_cast<std::size_t>(j)];
            if (std::isnan(lo) || std::isnan(up) || std::isnan(ob))
                throw MalformedProblem("NaN in bounds/objective of variable " + std::to_string(j));
            if (lo == kInfinity || up == -kInfinity)
                throw MalformedProblem("inverted infinite bound on variable " + std::to_string(j));
            if (std::isinf(ob))
                throw MalformedProblem("infinite objective coefficient on variable " + std::to_string(j));
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& row = rows[i];
            if (!std::isfinite(row.rhs))
                throw MalformedProblem("non-finite rhs in constraint " + std::to_string(i));
            for (const auto& [var, val] : row.coeffs) {
                if (var < 0 || var >= n)
                    throw MalformedProblem("constraint " + std::to_string(i) +
                                           " references unregistered variable " + std::to_string(var));
                if (!std::isfinite(val))
                    throw MalformedProblem("non-finite coefficient in constraint " + std::to_string(i));
            }
        }
    }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> primal;  // per variable; empty unless Optimal
    double objective = 0.0;
    long iterations = 0;
};

struct SolveOptions {
    long max_iterations = 2000000;
    int refactor_interval = 32;
    double feasibility_tol = 1e-9;  // bound snap tolerance
    double dual_tol = 1e-9;         // reduced-cost optimality threshold
};

/// Feasibility certificate for an Optimal solution.
struct LpResiduals {
    double max_bound_violation = 0.0;
    double max_constraint_violation = 0.0;
};

inline LpResiduals residual_report(const LpProblem& p, const LpSolution& s) {
    LpResiduals r;
    for (int j = 0; j < p.num_variables(); ++j) {
        const double x = s.primal[static_cast<std::size_t>(j)];
        const double lo = p.lower[static_cast<std::size_t>(j)];
        const double up = p.upper[static_cast<std::size_t>(j)];
        if (lo > -kInfinity) r.max_bound_violation = std::max(r.max_bound_violation, lo - x);
        if (up < kInfinity) r.max_bound_violation = std::max(r.max_bound_violation, x - up);
    }
    for (const auto& row : p.rows) {
        double act = 0.0;
        for (const auto& [var, val] : row.coeffs) act += val * s.primal[static_cast<std::size_t>(var)];
        double viol = 0.0;
        switch (row.rel) {
            case Relation::LessEqual: viol = act - row.rhs; break;
            case Relation::GreaterEqual: viol = row.rhs - act; break;
            case Relation::Equal: viol = std::abs(act - row.rhs); break;
        }
        r.max_constraint_violation = std::max(r.max_constraint_violation, viol);
    }
    return r;
}

/// Plain-text dump for offline inspection.  Format (one token row per line):
///   invfor-lp 1
///   sense min|max
///   variables <n>
///   v <idx> <lo> <up> <obj>
///   constraints <m>
///   c <idx> le|eq|ge <rhs> <nnz> [<var> <coef>]...
///   end
inline void dump_lp(const LpProblem& p, std::ostream& out) {
    auto num = [](double v) -> std::string {
        if (v == kInfinity) return "inf";
        if (v == -kInfinity) return "-inf";
        return format_double(v);
    };
    out << "invfor-lp 1\n";
    out << "sense " << (p.sense == Sense::Minimize ? "min" : "max") << '\n';
    out << "variables " << p.num_variables() << '\n';
    for (int j = 0; j < p.num_variables(); ++j)
        out << "v " << j << ' ' << num(p.lower[static_cast<std::size_t>(j)]) << ' '
            << num(p.upper[static_cast<std::size_t>(j)]) << ' '
            << num(p.objective[static_cast<std::size_t>(j)]) << '\n';
    out << "constraints " << p.num_constraints() << '\n';
    for (int i = 0; i < p.num_constraints(); ++i) {
        const auto& row = p.rows[static_cast<std::size_t>(i)];
        const char* rel = row.rel == Relation::LessEqual ? "le"
                          : row.rel == Relation::Equal   ? "eq"
                                                         : "ge";
        out << "c " << i << ' ' << rel << ' ' << num(row.rhs) << ' ' << row.coeffs.size();
        for (const auto& [var, val] : row.coeffs) out << ' ' << var << ' ' << num(val);
        out << '\n';
    }
    out << "end\n";
}

namespace detail {

// Dense value array plus an unordered list of (probably) nonzero positions,
// so triangular solves and eta updates touch only the entries they create.
struct IndexedVector {
    std::vector<double> val;
    std::vector<int> idx;
    std::vector<char> mark;

    void resize(int m) {
        val.assign(static_cast<std::size_t>(m), 0.0);
        mark.assign(static_cast<std::size_t>(m), 0);
        idx.clear();
    }
    void clear() {
        for (int i : idx) {
            val[static_cast<std::size_t>(i)] = 0.0;
            mark[static_cast<std::size_t>(i)] = 0;
        }
        idx.clear();
    }
    void touch(int i) {
        if (!mark[static_cast<std::size_t>(i)]) {
            mark[static_cast<std::size_t>(i)] = 1;
            idx.push_back(i);
        }
    }
    void add(int i, double v) {
        touch(i);
        val[static_cast<std::size_t>(i)] += v;
    }
};

// Sparse LU factorization of the basis matrix (Gilbert-Peierls left-looking
// algorithm with partial pivoting by magnitude, lowest row index on ties).
// Columns are factored in ascending-nonzero-count order: unit and singleton
// columns eliminate with no fill, and the few dense coupling columns touch
// only the small submatrix that remains at the end.  L is stored over
// original row indices with an implicit unit diagonal at the pivot row of
// each step; U is stored in step space.  cperm_ maps steps back to slots.
class BasisLU {
public:
    // cols: CSC arrays of the m basis columns over original rows
    void factorize(int m, const std::vector<int>& col_start, const std::vector<int>& row_idx,
                   const std::vector<double>& values) {
        m_ = m;
        Lp_.assign(1, 0);
        Li_.clear();
        Lx_.clear();
        Up_.assign(1, 0);
        Ui_.clear();
        Ux_.clear();
        udiag_.assign(static_cast<std::size_t>(m), 0.0);
        pinv_.assign(static_cast<std::size_t>(m), -1);
        pivot_row_.assign(static_cast<std::size_t>(m), -1);
        work_.resize(m);
        stamp_.assign(static_cast<std::size_t>(m), 0);
        stamp_gen_ = 0;
        topo_.resize(static_cast<std::size_t>(m));
        stack_.resize(static_cast<std::size_t>(m));
        pstack_.resize(static_cast<std::size_t>(m));

        cperm_.resize(static_cast<std::size_t>(m));
        for (int s = 0; s < m; ++s) cperm_[static_cast<std::size_t>(s)] = s;
        std::stable_sort(cperm_.begin(), cperm_.end(), [&](int a, int b) {
            const int na = col_start[static_cast<std::size_t>(a) + 1] - col_start[static_cast<std::size_t>(a)];
            const int nb = col_start[static_cast<std::size_t>(b) + 1] - col_start[static_cast<std::size_t>(b)];
            return na != nb ? na < nb : a < b;
        });
        cperm_inv_.resize(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) cperm_inv_[static_cast<std::size_t>(cperm_[static_cast<std::size_t>(k)])] = k;

        for (int k = 0; k < m; ++k) {
            // sparse solve L * x = B(:,slot) over the partial factor
            const int slot = cperm_[static_cast<std::size_t>(k)];
            const int top = lsolve_pattern(col_start[static_cast<std::size_t>(slot)],
                                           col_start[static_cast<std::size_t>(slot) + 1], row_idx, values);
            // pivot: largest magnitude among rows not yet pivotal
            int ipiv = -1;
            double amax = 0.0;
            for (int p = top; p < m_; ++p) {
                const int i = topo_[static_cast<std::size_t>(p)];
                if (pinv_[static_cast<std::size_t>(i)] >= 0) continue;
                const double a = std::abs(work_.val[static_cast<std::size_t>(i)]);
                if (a > amax || (a == amax && ipiv >= 0 && i < ipiv)) {
                    amax = a;
                    ipiv = i;
                }
            }
            if (ipiv < 0 || amax < 1e-12) throw SolverFailure("singular basis at column " + std::to_string(k));
            const double pivot = work_.val[static_cast<std::size_t>(ipiv)];

            for (int p = top; p < m_; ++p) {
                const int i = topo_[static_cast<std::size_t>(p)];
                const double v = work_.val[static_cast<std::size_t>(i)];
                const int s = pinv_[static_cast<std::size_t>(i)];
                if (s >= 0) {
                    if (v != 0.0) {
                        Ui_.push_back(s);
                        Ux_.push_back(v);
                    }
                } else if (i != ipiv) {
                    if (v != 0.0) {
                        Li_.push_back(i);
                        Lx_.push_back(v / pivot);
                    }
                }
            }
            udiag_[static_cast<std::size_t>(k)] = pivot;
            Up_.push_back(static_cast<int>(Ui_.size()));
            Lp_.push_back(static_cast<int>(Li_.size()));
            pinv_[static_cast<std::size_t>(ipiv)] = k;
            pivot_row_[static_cast<std::size_t>(k)] = ipiv;
            work_.clear();
        }
    }

    // v := B^{-1} v.  Input over original rows, output over slots; the
    // nonzero list is maintained throughout.
    void ftran(IndexedVector& v) const {
        // L-solve with reach-limited traversal
        ++stamp_gen_;
        int top = m_;
        for (int i : v.idx) top = dfs(i, top);
        // values propagate in topological order; result indexed by step
        for (int p = top; p < m_; ++p) {
            const int i = topo_[static_cast<std::size_t>(p)];
            const int s = pinv_[static_cast<std::size_t>(i)];
            const double z = v.val[static_cast<std::size_t>(i)];
            if (z == 0.0) continue;
            for (int q = Lp_[static_cast<std::size_t>(s)]; q < Lp_[static_cast<std::size_t>(s) + 1]; ++q)
                v.add(Li_[static_cast<std::size_t>(q)], -Lx_[static_cast<std::size_t>(q)] * z);
        }
        // gather z (step space) from pivot rows
        scratch_.clear();
        scratch_.reserve(v.idx.size());
        for (int p = top; p < m_; ++p) {
            const int i = topo_[static_cast<std::size_t>(p)];
            scratch_.emplace_back(pinv_[static_cast<std::size_t>(i)], v.val[static_cast<std::size_t>(i)]);
        }
        v.clear();
        int kmax = -1;
        for (const auto& [s, z] : scratch_) {
            if (z != 0.0) {
                v.touch(s);
                v.val[static_cast<std::size_t>(s)] = z;
                kmax = std::max(kmax, s);
            }
        }
        // U backward solve, skipping untouched positions
        for (int k = kmax; k >= 0; --k) {
            double z = v.val[static_cast<std::size_t>(k)];
            if (z == 0.0) continue;
            const double xk = z / udiag_[static_cast<std::size_t>(k)];
            v.val[static_cast<std::size_t>(k)] = xk;
            for (int q = Up_[static_cast<std::size_t>(k)]; q < Up_[static_cast<std::size_t>(k) + 1]; ++q)
                v.add(Ui_[static_cast<std::size_t>(q)], -Ux_[static_cast<std::size_t>(q)] * xk);
        }
        // steps back to slots
        scratch_.clear();
        for (int k : v.idx) {
            const double z = v.val[static_cast<std::size_t>(k)];
            if (z != 0.0) scratch_.emplace_back(cperm_[static_cast<std::size_t>(k)], z);
        }
        v.clear();
        for (const auto& [slot, z] : scratch_) {
            v.touch(slot);
            v.val[static_cast<std::size_t>(slot)] = z;
        }
    }

    // v := B^{-T} v.  Input over slots, output over original rows.
    void btran(IndexedVector& v) const {
        // slots to steps
        scratch_.clear();
        for (int slot : v.idx) {
            const double c = v.val[static_cast<std::size_t>(slot)];
            if (c != 0.0) scratch_.emplace_back(slot, c);
        }
        v.clear();
        for (const auto& [slot, c] : scratch_) {
            const int k = step_of_slot(slot);
            v.touch(k);
            v.val[static_cast<std::size_t>(k)] = c;
        }
        // U^T forward solve: w_k = (c_k - sum_{j<k} U(j,k) w_j) / U(k,k)
        int kmin = m_;
        for (int i : v.idx) kmin = std::min(kmin, i);
        for (int k = kmin; k < m_; ++k) {
            double acc = v.val[static_cast<std::size_t>(k)];
            for (int q = Up_[static_cast<std::size_t>(k)]; q < Up_[static_cast<std::size_t>(k) + 1]; ++q)
                acc -= Ux_[static_cast<std::size_t>(q)] * v.val[static_cast<std::size_t>(Ui_[static_cast<std::size_t>(q)])];
            if (acc != 0.0) {
                v.touch(k);
                v.val[static_cast<std::size_t>(k)] = acc / udiag_[static_cast<std::size_t>(k)];
            } else if (v.mark[static_cast<std::size_t>(k)]) {
                v.val[static_cast<std::size_t>(k)] = 0.0;
            }
        }
        // L^T backward: y[pivot_row_k] = w_k - sum L(i,k) y[i]
        scratch_.clear();
        for (int s = m_ - 1; s >= 0; --s) {
            double acc = v.val[static_cast<std::size_t>(s)];
            bool any = acc != 0.0;
            for (int q = Lp_[static_cast<std::size_t>(s)]; q < Lp_[static_cast<std::size_t>(s) + 1]; ++q) {
                const double yv = work_.val[static_cast<std::size_t>(Li_[static_cast<std::size_t>(q)])];
                if (yv != 0.0) {
                    acc -= Lx_[static_cast<std::size_t>(q)] * yv;
                    any = true;
                }
            }
            if (any && acc != 0.0) {
                const int row = pivot_row_[static_cast<std::size_t>(s)];
                work_.touch(row);
                work_.val[static_cast<std::size_t>(row)] = acc;
                scratch_.emplace_back(row, acc);
            }
        }
        v.clear();
        for (const auto& [row, y] : scratch_) {
            v.touch(row);
            v.val[static_cast<std::size_t>(row)] = y;
        }
        work_.clear();
    }

    int size() const { return m_; }

private:
    int step_of_slot(int slot) const { return cperm_inv_[static_cast<std::size_t>(slot)]; }
    // depth-first search over the L structure from original row i; nodes are
    // placed into topo_[top..m_) in topological order
    int dfs(int i, int top) const {
        if (stamp_[static_cast<std::size_t>(i)] == stamp_gen_) return top;
        int head = 0;
        stack_[0] = i;
        while (head >= 0) {
            const int node = stack_[static_cast<std::size_t>(head)];
            const int s = pinv_[static_cast<std::size_t>(node)];
            if (stamp_[static_cast<std::size_t>(node)] != stamp_gen_) {
                stamp_[static_cast<std::size_t>(node)] = stamp_gen_;
                pstack_[static_cast<std::size_t>(head)] = s < 0 ? 0 : Lp_[static_cast<std::size_t>(s)];
            }
            bool descend = false;
            if (s >= 0) {
                const int pend = Lp_[static_cast<std::size_t>(s) + 1];
                int& p = pstack_[static_cast<std::size_t>(head)];
                while (p < pend) {
                    const int child = Li_[static_cast<std::size_t>(p)];
                    ++p;
                    if (stamp_[static_cast<std::size_t>(child)] != stamp_gen_) {
                        stack_[static_cast<std::size_t>(++head)] = child;
                        descend = true;
                        break;
                    }
                }
            }
            if (!descend) {
                --head;
                topo_[static_cast<std::size_t>(--top)] = node;
            }
        }
        return top;
    }

    // scatter column into work_ and compute the partial L-solve used during
    // factorization; returns topo top
    int lsolve_pattern(int cbegin, int cend, const std::vector<int>& row_idx,
                       const std::vector<double>& values) {
        ++stamp_gen_;
        int top = m_;
        for (int p = cbegin; p < cend; ++p) top = dfs(row_idx[static_cast<std::size_t>(p)], top);
        for (int p = cbegin; p < cend; ++p) {
            work_.touch(row_idx[static_cast<std::size_t>(p)]);
            work_.val[static_cast<std::size_t>(row_idx[static_cast<std::size_t>(p)])] =
                values[static_cast<std::size_t>(p)];
        }
        for (int p = top; p < m_; ++p) {
            const int i = topo_[static_cast<std::size_t>(p)];
            const int s = pinv_[static_cast<std::size_t>(i)];
            if (s < 0) continue;
            const double z = work_.val[static_cast<std::size_t>(i)];
            if (z == 0.0) continue;
            for (int q = Lp_[static_cast<std::size_t>(s)]; q < Lp_[static_cast<std::size_t>(s) + 1]; ++q)
                work_.add(Li_[static_cast<std::size_t>(q)], -Lx_[static_cast<std::size_t>(q)] * z);
        }
        return top;
    }

    int m_ = 0;
    std::vector<int> Lp_, Li_;
    std::vector<double> Lx_;
    std::vector<int> Up_, Ui_;
    std::vector<double> Ux_;
    std::vector<double> udiag_;
    std::vector<int> pinv_;       // original row -> step
    std::vector<int> pivot_row_;  // step -> original row
    std::vector<int> cperm_;      // step -> slot
    std::vector<int> cperm_inv_;  // slot -> step
    mutable IndexedVector work_;
    mutable std::vector<int> stamp_;
    mutable int stamp_gen_ = 0;
    mutable std::vector<int> topo_, stack_, pstack_;
    mutable std::vector<std::pair<int, double>> scratch_;
};

// Bounded-variable two-phase revised simplex.
//
// Standard computational form: one logical column per row (a'x + s = rhs,
// with s ranged by the row relation) plus artificial columns for rows whose
// crash residual no candidate column can absorb.  The basis inverse is kept
// as a sparse LU factorization plus a product-form eta file, refactorized
// periodically.  Reduced costs are maintained and updated from the pivot
// row each iteration; pricing is devex (most attractive weighted reduced
// cost, lowest index on ties) with Bland's rule as the anti-cycling
// fallback, so the pivot sequence is deterministic.
class Simplex {
public:
    Simplex(const LpProblem& p, const SolveOptions& opt) : opt_(opt) {
        p.validate();
        n_struct_ = p.num_variables();
        m_ = p.num_constraints();
        sense_flip_ = p.sense == Sense::Maximize ? -1.0 : 1.0;

        for (int j = 0; j < n_struct_; ++j)
            if (p.lower[static_cast<std::size_t>(j)] > p.upper[static_cast<std::size_t>(j)])
                trivially_infeasible_ = true;

        lo_ = p.lower;
        up_ = p.upper;
        cost_.assign(static_cast<std::size_t>(n_struct_), 0.0);
        for (int j = 0; j < n_struct_; ++j)
            cost_[static_cast<std::size_t>(j)] = sense_flip_ * p.objective[static_cast<std::size_t>(j)];

        // structural columns (CSC), gathered from the row-wise problem
        std::vector<int> nnz_per_col(static_cast<std::size_t>(n_struct_), 0);
        for (const auto& row : p.rows)
            for (const auto& [var, val] : row.coeffs) ++nnz_per_col[static_cast<std::size_t>(var)];
        col_start_.assign(static_cast<std::size_t>(n_struct_) + 1, 0);
        for (int j = 0; j < n_struct_; ++j)
            col_start_[static_cast<std::size_t>(j) + 1] =
                col_start_[static_cast<std::size_t>(j)] + nnz_per_col[static_cast<std::size_t>(j)];
        col_row_.resize(static_cast<std::size_t>(col_start_.back()));
        col_val_.resize(static_cast<std::size_t>(col_start_.back()));
        std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
        rhs_.resize(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            const auto& row = p.rows[static_cast<std::size_t>(i)];
            rhs_[static_cast<std::size_t>(i)] = row.rhs;
            for (const auto& [var, val] : row.coeffs) {
                int& pos = fill[static_cast<std::size_t>(var)];
                col_row_[static_cast<std::size_t>(pos)] = i;
                col_val_[static_cast<std::size_t>(pos)] = val;
                ++pos;
            }
        }

        // logical columns: one unit column per row
        for (int i = 0; i < m_; ++i) {
            col_start_.push_back(col_start_.back() + 1);
            col_row_.push_back(i);
            col_val_.push_back(1.0);
            cost_.push_back(0.0);
            switch (p.rows[static_cast<std::size_t>(i)].rel) {
                case Relation::LessEqual:
                    lo_.push_back(0.0);
                    up_.push_back(kInfinity);
                    break;
                case Relation::GreaterEqual:
                    lo_.push_back(-kInfinity);
                    up_.push_back(0.0);
                    break;
                case Relation::Equal:
                    lo_.push_back(0.0);
                    up_.push_back(0.0);
                    break;
            }
        }
        n_logical_end_ = n_struct_ + m_;

        double rhs_scale = 1.0;
        for (double b : rhs_) rhs_scale = std::max(rhs_scale, std::abs(b));
        infeas_tol_ = 1e-8 * rhs_scale;
    }

    LpSolution run(const LpProblem& p) {
        LpSolution sol;
        if (trivially_infeasible_) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        crash();
        build_row_major();
        if (n_art_ > 0) {
            phase_ = 1;
            if (!iterate()) throw SolverFailure("phase-1 ray (numerical trouble)");
            double art_sum = 0.0;
            for (int j = n_logical_end_; j < total_cols(); ++j)
                art_sum += x_[static_cast<std::size_t>(j)];
            if (art_sum > infeas_tol_) {
                sol.status = LpStatus::Infeasible;
                sol.iterations = iterations_;
                return sol;
            }
            for (int j = n_logical_end_; j < total_cols(); ++j) {
                lo_[static_cast<std::size_t>(j)] = 0.0;
                up_[static_cast<std::size_t>(j)] = 0.0;
                if (vstat_[static_cast<std::size_t>(j)] != kBasic) x_[static_cast<std::size_t>(j)] = 0.0;
            }
        }
        phase_ = 2;
        if (!iterate()) {
            sol.status = LpStatus::Unbounded;
            sol.iterations = iterations_;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.iterations = iterations_;
        sol.primal.assign(x_.begin(), x_.begin() + n_struct_);
        double obj = 0.0;
        for (int j = 0; j < n_struct_; ++j)
            obj += p.objective[static_cast<std::size_t>(j)] * sol.primal[static_cast<std::size_t>(j)];
        sol.objective = obj;
        return sol;
    }

private:
    static constexpr unsigned char kBasic = 0;
    static constexpr unsigned char kAtLower = 1;
    static constexpr unsigned char kAtUpper = 2;
    static constexpr unsigned char kFreeNB = 3;

    int total_cols() const { return static_cast<int>(lo_.size()); }

    double rest_value(int j, unsigned char& stat) const {
        const double lo = lo_[static_cast<std::size_t>(j)];
        const double up = up_[static_cast<std::size_t>(j)];
        if (lo > -kInfinity && up < kInfinity) {
            if (std::abs(lo) <= std::abs(up)) {
                stat = kAtLower;
                return lo;
            }
            stat = kAtUpper;
            return up;
        }
        if (lo > -kInfinity) {
            stat = kAtLower;
            return lo;
        }
        if (up < kInfinity) {
            stat = kAtUpper;
            return up;
        }
        stat = kFreeNB;
        return 0.0;
    }

    // Initial basis: per row prefer a structural column that appears in that
    // row only (value within bounds), then the row's logical, then a fresh
    // artificial.  Rows covered by singletons or logicals start feasible, so
    // phase 1 only has to clean up the remainder.
    void crash() {
        const int n = total_cols();
        x_.assign(static_cast<std::size_t>(n), 0.0);
        vstat_.assign(static_cast<std::size_t>(n), kAtLower);
        for (int j = 0; j < n; ++j) {
            unsigned char st;
            x_[static_cast<std::size_t>(j)] = rest_value(j, st);
            vstat_[static_cast<std::size_t>(j)] = st;
        }

        std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            const double xj = x_[static_cast<std::size_t>(j)];
            if (xj == 0.0) continue;
            for (int k = col_start_[static_cast<std::size_t>(j)]; k < col_start_[static_cast<std::size_t>(j) + 1]; ++k)
                activity[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(k)])] +=
                    col_val_[static_cast<std::size_t>(k)] * xj;
        }

        std::vector<std::vector<std::pair<int, double>>> singletons(static_cast<std::size_t>(m_));
        for (int j = 0; j < n_struct_; ++j) {
            const int nnz = col_start_[static_cast<std::size_t>(j) + 1] - col_start_[static_cast<std::size_t>(j)];
            if (nnz != 1) continue;
            const int k = col_start_[static_cast<std::size_t>(j)];
            const double a = col_val_[static_cast<std::size_t>(k)];
            if (std::abs(a) < 1e-7) continue;
            singletons[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(k)])].emplace_back(j, a);
        }

        basic_var_.assign(static_cast<std::size_t>(m_), -1);
        for (int i = 0; i < m_; ++i) {
            const double r = rhs_[static_cast<std::size_t>(i)] - activity[static_cast<std::size_t>(i)];
            bool placed = false;
            for (const auto& [j, a] : singletons[static_cast<std::size_t>(i)]) {
                if (vstat_[static_cast<std::size_t>(j)] == kBasic) continue;
                const double v = x_[static_cast<std::size_t>(j)] + r / a;
                if (v >= lo_[static_cast<std::size_t>(j)] && v <= up_[static_cast<std::size_t>(j)]) {
                    x_[static_cast<std::size_t>(j)] = v;
                    vstat_[static_cast<std::size_t>(j)] = kBasic;
                    basic_var_[static_cast<std::size_t>(i)] = j;
                    placed = true;
                    break;
                }
            }
            if (placed) continue;
            const int jl = n_struct_ + i;
            if (r >= lo_[static_cast<std::size_t>(jl)] - 1e-12 && r <= up_[static_cast<std::size_t>(jl)] + 1e-12) {
                x_[static_cast<std::size_t>(jl)] = r;
                vstat_[static_cast<std::size_t>(jl)] = kBasic;
                basic_var_[static_cast<std::size_t>(i)] = jl;
                continue;
            }
            const double sigma = r >= 0.0 ? 1.0 : -1.0;
            col_start_.push_back(col_start_.back() + 1);
            col_row_.push_back(i);
            col_val_.push_back(sigma);
            lo_.push_back(0.0);
            up_.push_back(kInfinity);
            cost_.push_back(0.0);
            x_.push_back(std::abs(r));
            vstat_.push_back(kBasic);
            basic_var_[static_cast<std::size_t>(i)] = total_cols() - 1;
            ++n_art_;
        }
    }

    // row-major mirror of all columns, for pivot-row gathers
    void build_row_major() {
        const int n = total_cols();
        std::vector<int> cnt(static_cast<std::size_t>(m_), 0);
        for (int k = 0; k < col_start_[static_cast<std::size_t>(n)]; ++k)
            ++cnt[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(k)])];
        row_start_.assign(static_cast<std::size_t>(m_) + 1, 0);
        for (int i = 0; i < m_; ++i)
            row_start_[static_cast<std::size_t>(i) + 1] = row_start_[static_cast<std::size_t>(i)] + cnt[static_cast<std::size_t>(i)];
        row_col_.resize(static_cast<std::size_t>(row_start_.back()));
        row_val_.resize(static_cast<std::size_t>(row_start_.back()));
        std::vector<int> fill(row_start_.begin(), row_start_.end() - 1);
        for (int j = 0; j < n; ++j) {
            for (int k = col_start_[static_cast<std::size_t>(j)]; k < col_start_[static_cast<std::size_t>(j) + 1]; ++k) {
                const int i = col_row_[static_cast<std::size_t>(k)];
                int& pos = fill[static_cast<std::size_t>(i)];
                row_col_[static_cast<std::size_t>(pos)] = j;
                row_val_[static_cast<std::size_t>(pos)] = col_val_[static_cast<std::size_t>(k)];
                ++pos;
            }
        }
    }

    double phase_cost(int j) const {
        if (phase_ == 1) return j >= n_logical_end_ ? 1.0 : 0.0;
        return cost_[static_cast<std::size_t>(j)];
    }

    void refactor() {
        etas_.clear();
        pivots_since_refactor_ = 0;
        if (m_ > 0) {
            basis_cols_.assign(1, 0);
            basis_rows_.clear();
            basis_vals_.clear();
            for (int i = 0; i < m_; ++i) {
                const int j = basic_var_[static_cast<std::size_t>(i)];
                for (int k = col_start_[static_cast<std::size_t>(j)]; k < col_start_[static_cast<std::size_t>(j) + 1]; ++k) {
                    basis_rows_.push_back(col_row_[static_cast<std::size_t>(k)]);
                    basis_vals_.push_back(col_val_[static_cast<std::size_t>(k)]);
                }
                basis_cols_.push_back(static_cast<int>(basis_rows_.size()));
            }
            lu_.factorize(m_, basis_cols_, basis_rows_, basis_vals_);

            // recompute basic values from scratch to cancel drift
            fvec_.resize(m_);
            fvec_.clear();
            for (int i = 0; i < m_; ++i)
                if (rhs_[static_cast<std::size_t>(i)] != 0.0) {
                    fvec_.touch(i);
                    fvec_.val[static_cast<std::size_t>(i)] = rhs_[static_cast<std::size_t>(i)];
                }
            for (int j = 0; j < total_cols(); ++j) {
                if (vstat_[static_cast<std::size_t>(j)] == kBasic) continue;
                const double xj = x_[static_cast<std::size_t>(j)];
                if (xj == 0.0) continue;
                for (int k = col_start_[static_cast<std::size_t>(j)]; k < col_start_[static_cast<std::size_t>(j) + 1]; ++k)
                    fvec_.add(col_row_[static_cast<std::size_t>(k)], -col_val_[static_cast<std::size_t>(k)] * xj);
            }
            lu_.ftran(fvec_);
            for (int i = 0; i < m_; ++i) x_[static_cast<std::size_t>(basic_var_[static_cast<std::size_t>(i)])] = 0.0;
            for (int i : fvec_.idx)
                x_[static_cast<std::size_t>(basic_var_[static_cast<std::size_t>(i)])] = fvec_.val[static_cast<std::size_t>(i)];
            fvec_.clear();
        }
        recompute_reduced_costs();
    }

    void recompute_reduced_costs() {
        d_.assign(static_cast<std::size_t>(total_cols()), 0.0);
        bvec_.resize(m_);
        bvec_.clear();
        for (int i = 0; i < m_; ++i) {
            const double c = phase_cost(basic_var_[static_cast<std::size_t>(i)]);
            if (c != 0.0) {
                bvec_.touch(i);
                bvec_.val[static_cast<std::size_t>(i)] = c;
            }
        }
        apply_etas_btran(bvec_);
        if (m_ > 0) lu_.btran(bvec_);
        for (int j = 0; j < total_cols(); ++j) {
            if (vstat_[static_cast<std::size_t>(j)] == kBasic) continue;
            double d = phase_cost(j);
            for (int k = col_start_[static_cast<std::size_t>(j)]; k < col_start_[static_cast<std::size_t>(j) + 1]; ++k)
                d -= col_val_[static_cast<std::size_t>(k)] * bvec_.val[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(k)])];
            d_[static_cast<std::size_t>(j)] = d;
        }
        bvec_.clear();
    }

    void apply_etas_ftran(IndexedVector& v) const {
        for (const Eta& e : etas_) {
            const double t = v.val[static_cast<std::size_t>(e.slot)] / e.pivot;
            if (t != 0.0) {
                for (const auto& [i, wv] : e.col)
                    if (i != e.slot) v.add(i, -wv * t);
            }
            if (t != 0.0) v.touch(e.slot);
            v.val[static_cast<std::size_t>(e.slot)] = t;
        }
    }

    void apply_etas_btran(IndexedVector& v) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double acc = v.val[static_cast<std::size_t>(it->slot)];
            for (const auto& [i, wv] : it->col)
                if (i != it->slot) acc -= wv * v.val[static_cast<std::size_t>(i)];
            acc /= it->pivot;
            if (acc != 0.0) v.touch(it->slot);
            v.val[static_cast<std::size_t>(it->slot)] = acc;
        }
    }

    // Entering-variable eligibility under maintained reduced costs.
    // Returns movement direction, or 0 when the column is not attractive.
    double eligible_direction(int j, double dtol) const {
        const unsigned char st = vstat_[static_cast<std::size_t>(j)];
        if (st == kBasic) return 0.0;
        const double lo = lo_[static_cast<std::size_t>(j)];
        const double up = up_[static_cast<std::size_t>(j)];
        if (st != kFreeNB && lo == up) return 0.0;
        const double d = d_[static_cast<std::size_t>(j)];
        if (st == kAtLower) return d < -dtol ? 1.0 : 0.0;
        if (st == kAtUpper) return d > dtol ? -1.0 : 0.0;
        if (std::abs(d) > dtol) return d < 0.0 ? 1.0 : -1.0;
        return 0.0;
    }

    // Returns true on phase optimality, false on an unbounded ray.
    bool iterate() {
        refactor();
        double dual_scale = 1.0;
        for (int j = 0; j < total_cols(); ++j) dual_scale = std::max(dual_scale, std::abs(phase_cost(j)));
        const double dtol = opt_.dual_tol * dual_scale;

        devex_.assign(static_cast<std::size_t>(total_cols()), 1.0);
        bool bland = false;
        long degenerate_streak = 0;
        double bland_entry_obj = 0.0;
        int final_sweeps = 0;

        fvec_.resize(m_);
        rvec_.resize(m_);
        avec_.assign(static_cast<std::size_t>(total_cols()), 0.0);
        touched_.clear();

        for (;;) {
            if (++iterations_ > opt_.max_iterations)
                throw SolverFailure("iteration limit exceeded (" + std::to_string(opt_.max_iterations) + ")");
            if (pivots_since_refactor_ >= opt_.refactor_interval) refactor();

            // pricing over maintained reduced costs
            int enter = -1;
            double enter_dir = 0.0;
            double best_score = 0.0;
            for (int j = 0; j < total_cols(); ++j) {
                const double dir = eligible_direction(j, dtol);
                if (dir == 0.0) continue;
                if (bland) {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                const double d = d_[static_cast<std::size_t>(j)];
                const double score = d * d / devex_[static_cast<std::size_t>(j)];
                if (score > best_score) {
                    best_score = score;
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) {
                // verify against freshly computed reduced costs before
                // declaring optimality
                if (final_sweeps < 2) {
                    ++final_sweeps;
                    refactor();
                    bool any = false;
                    for (int j = 0; j < total_cols() && !any; ++j)
                        any = eligible_direction(j, dtol) != 0.0;
                    if (!any) return true;
                    continue;
                }
                return true;
            }

            // FTRAN: w = B^{-1} a_q
            fvec_.clear();
            for (int k = col_start_[static_cast<std::size_t>(enter)]; k < col_start_[static_cast<std::size_t>(enter) + 1]; ++k) {
                fvec_.touch(col_row_[static_cast<std::size_t>(k)]);
                fvec_.val[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(k)])] =
                    col_val_[static_cast<std::size_t>(k)];
            }
            if (m_ > 0) lu_.ftran(fvec_);
            apply_etas_ftran(fvec_);

            // Harris two-pass ratio test over the nonzeros of w; the
            // entering variable's own bound gap competes as a bound flip.
            // Pass 1 finds the largest step admissible when every basic
            // bound is relaxed by the feasibility tolerance; pass 2 picks,
            // among blockers within that step, the one with the largest
            // pivot magnitude (lowest slot on ties).
            const double gap = up_[static_cast<std::size_t>(enter)] - lo_[static_cast<std::size_t>(enter)];
            const double t_flip = std::isfinite(gap) ? gap : kInfinity;
            const double ftol = opt_.feasibility_tol;
            double t_max = t_flip;
            for (int i : fvec_.idx) {
                const double wi = fvec_.val[static_cast<std::size_t>(i)];
                if (std::abs(wi) <= 1e-11) continue;
                const int bj = basic_var_[static_cast<std::size_t>(i)];
                const double rate = enter_dir * wi;
                double ti;
                if (rate > 0.0) {
                    const double lo = lo_[static_cast<std::size_t>(bj)];
                    if (lo == -kInfinity) continue;
                    ti = (x_[static_cast<std::size_t>(bj)] - lo + ftol) / rate;
                } else {
                    const double up = up_[static_cast<std::size_t>(bj)];
                    if (up == kInfinity) continue;
                    ti = (up - x_[static_cast<std::size_t>(bj)] + ftol) / (-rate);
                }
                if (ti < 0.0) ti = 0.0;
                t_max = std::min(t_max, ti);
            }

            if (t_max == kInfinity) {
                if (phase_ == 1) throw SolverFailure("unbounded phase-1 ray");
                return false;
            }

            int block_slot = -1;
            double block_w = 0.0;
            double t_row = kInfinity;
            bool block_at_lower = false;
            for (int i : fvec_.idx) {
                const double wi = fvec_.val[static_cast<std::size_t>(i)];
                if (std::abs(wi) <= 1e-11) continue;
                const int bj = basic_var_[static_cast<std::size_t>(i)];
                const double rate = enter_dir * wi;
                double ti;
                bool at_lower;
                if (rate > 0.0) {
                    const double lo = lo_[static_cast<std::size_t>(bj)];
                    if (lo == -kInfinity) continue;
                    ti = std::max(0.0, (x_[static_cast<std::size_t>(bj)] - lo) / rate);
                    at_lower = true;
                } else {
                    const double up = up_[static_cast<std::size_t>(bj)];
                    if (up == kInfinity) continue;
                    ti = std::max(0.0, (up - x_[static_cast<std::size_t>(bj)]) / (-rate));
                    at_lower = false;
                }
                if (ti > t_max) continue;
                const double awi = std::abs(wi);
                if (block_slot < 0 || awi > std::abs(block_w) ||
                    (awi == std::abs(block_w) && i < block_slot)) {
                    block_slot = i;
                    block_w = wi;
                    t_row = ti;
                    block_at_lower = at_lower;
                }
            }

            if (block_slot < 0 || t_flip < t_row) {
                // bound flip: entering runs to its opposite bound, basis
                // unchanged, reduced costs unchanged
                const double delta = enter_dir * t_flip;
                x_[static_cast<std::size_t>(enter)] += delta;
                vstat_[static_cast<std::size_t>(enter)] = enter_dir > 0.0 ? kAtUpper : kAtLower;
                for (int i : fvec_.idx) {
                    const double wi = fvec_.val[static_cast<std::size_t>(i)];
                    if (wi != 0.0)
                        x_[static_cast<std::size_t>(basic_var_[static_cast<std::size_t>(i)])] -= delta * wi;
                }
                continue;
            }

            if (std::abs(block_w) < 1e-11) {
                // pivot too small to trust even after Harris selection;
                // rebuild and retry, falling back to Bland's ordering
                refactor();
                if (++small_pivot_rejections_ > 50) {
                    bland = true;
                    bland_entry_obj = current_phase_objective();
                }
                if (small_pivot_rejections_ > 200) throw SolverFailure("persistent tiny pivots");
                continue;
            }
            small_pivot_rejections_ = 0;

            // pivot row: rho = B^{-T} e_p, then alpha_j = rho . a_j by rows
            rvec_.clear();
            rvec_.touch(block_slot);
            rvec_.val[static_cast<std::size_t>(block_slot)] = 1.0;
            apply_etas_btran(rvec_);
            if (m_ > 0) lu_.btran(rvec_);

            touched_.clear();
            for (int i : rvec_.idx) {
                const double rho = rvec_.val[static_cast<std::size_t>(i)];
                if (rho == 0.0) continue;
                for (int k = row_start_[static_cast<std::size_t>(i)]; k < row_start_[static_cast<std::size_t>(i) + 1]; ++k) {
                    const int j = row_col_[static_cast<std::size_t>(k)];
                    if (avec_[static_cast<std::size_t>(j)] == 0.0) touched_.push_back(j);
                    avec_[static_cast<std::size_t>(j)] += rho * row_val_[static_cast<std::size_t>(k)];
                }
            }

            const double alpha_q = fvec_.val[static_cast<std::size_t>(block_slot)];
            const double d_q = d_[static_cast<std::size_t>(enter)];
            const double ratio = d_q / alpha_q;
            const double devex_q = devex_[static_cast<std::size_t>(enter)];

            // apply the step
            const double t = t_row;
            for (int i : fvec_.idx) {
                const double wi = fvec_.val[static_cast<std::size_t>(i)];
                if (wi != 0.0)
                    x_[static_cast<std::size_t>(basic_var_[static_cast<std::size_t>(i)])] -= enter_dir * t * wi;
            }
            const int leave = basic_var_[static_cast<std::size_t>(block_slot)];
            if (block_at_lower) {
                x_[static_cast<std::size_t>(leave)] = lo_[static_cast<std::size_t>(leave)];
                vstat_[static_cast<std::size_t>(leave)] = kAtLower;
            } else {
                x_[static_cast<std::size_t>(leave)] = up_[static_cast<std::size_t>(leave)];
                vstat_[static_cast<std::size_t>(leave)] = kAtUpper;
            }
            x_[static_cast<std::size_t>(enter)] += enter_dir * t;
            vstat_[static_cast<std::size_t>(enter)] = kBasic;
            basic_var_[static_cast<std::size_t>(block_slot)] = enter;

            // reduced-cost and devex weight updates from the pivot row
            for (int j : touched_) {
                const double alpha_j = avec_[static_cast<std::size_t>(j)];
                avec_[static_cast<std::size_t>(j)] = 0.0;
                if (vstat_[static_cast<std::size_t>(j)] == kBasic) continue;
                d_[static_cast<std::size_t>(j)] -= ratio * alpha_j;
                const double cand = (alpha_j / alpha_q) * (alpha_j / alpha_q) * devex_q;
                if (cand > devex_[static_cast<std::size_t>(j)]) devex_[static_cast<std::size_t>(j)] = cand;
            }
            d_[static_cast<std::size_t>(enter)] = 0.0;
            d_[static_cast<std::size_t>(leave)] = -ratio;
            devex_[static_cast<std::size_t>(leave)] = std::max(devex_q / (alpha_q * alpha_q), 1.0);
            if (devex_[static_cast<std::size_t>(leave)] > 1e8)
                devex_.assign(static_cast<std::size_t>(total_cols()), 1.0);

            Eta eta;
            eta.slot = block_slot;
            eta.pivot = alpha_q;
            eta.col.reserve(fvec_.idx.size());
            for (int i : fvec_.idx) {
                const double wi = fvec_.val[static_cast<std::size_t>(i)];
                if (std::abs(wi) > 1e-12) eta.col.emplace_back(i, wi);
            }
            etas_.push_back(std::move(eta));
            ++pivots_since_refactor_;

            if (t <= 1e-9) {
                if (++degenerate_streak > 1000 && !bland) {
                    bland = true;
                    bland_entry_obj = current_phase_objective();
                }
            } else {
                degenerate_streak = 0;
                if (bland && current_phase_objective() < bland_entry_obj - 1e-10 * (1.0 + std::abs(bland_entry_obj)))
                    bland = false;
            }
        }
    }

    double current_phase_objective() const {
        double obj = 0.0;
        for (int j = 0; j < total_cols(); ++j) {
            const double c = phase_cost(j);
            if (c != 0.0) obj += c * x_[static_cast<std::size_t>(j)];
        }
        return obj;
    }

    struct Eta {
        int slot = 0;
        double pivot = 0.0;
        std::vector<std::pair<int, double>> col;
    };

    SolveOptions opt_;
    int n_struct_ = 0;
    int m_ = 0;
    int n_logical_end_ = 0;
    int n_art_ = 0;
    int phase_ = 2;
    double sense_flip_ = 1.0;
    double infeas_tol_ = 1e-8;
    bool trivially_infeasible_ = false;
    long iterations_ = 0;
    int pivots_since_refactor_ = 0;
    int small_pivot_rejections_ = 0;

    std::vector<int> col_start_;
    std::vector<int> col_row_;
    std::vector<double> col_val_;
    std::vector<int> row_start_;
    std::vector<int> row_col_;
    std::vector<double> row_val_;
    std::vector<double> lo_, up_, cost_, rhs_;
    std::vector<unsigned char> vstat_;
    std::vector<double> x_;
    std::vector<double> d_;
    std::vector<double> devex_;
    std::vector<double> avec_;
    std::vector<int> touched_;
    std::vector<int> basic_var_;
    std::vector<Eta> etas_;
    BasisLU lu_;
    IndexedVector fvec_, rvec_, bvec_;
    std::vector<int> basis_cols_;
    std::vector<int> basis_rows_;
    std::vector<double> basis_vals_;
};

}  // namespace detail

/// Exact, deterministic LP solve.  Identical inputs produce identical
/// outputs; safe to call concurrently on distinct problems.
inline LpSolution solve_lp(const LpProblem& p, const SolveOptions& opt = {}) {
    detail::Simplex simplex(p, opt);
    return simplex.run(p);
}

} // namespace invfor
