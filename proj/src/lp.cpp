#include "ammfut/lp.hpp"

#include "ammfut/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace ammfut {

std::size_t LinearProgram::add_variable(std::string label, double lo, double hi, double cost) {
    cost_.push_back(cost);
    lo_.push_back(lo);
    hi_.push_back(hi);
    labels_.push_back(std::move(label));
    return cost_.size() - 1;
}

std::size_t LinearProgram::add_equality(std::vector<Term> terms, double rhs, std::string label) {
    eq_.push_back({std::move(terms), rhs, std::move(label)});
    return eq_.size() - 1;
}

std::size_t LinearProgram::add_inequality(std::vector<Term> terms, double rhs, std::string label) {
    ineq_.push_back({std::move(terms), rhs, std::move(label)});
    return ineq_.size() - 1;
}

double LinearProgram::objective(const std::vector<double>& x) const {
    double v = 0;
    for (std::size_t j = 0; j < cost_.size(); ++j) v += cost_[j] * x[j];
    return v;
}

void LinearProgram::validate() const {
    std::unordered_set<std::string> seen;
    for (std::size_t j = 0; j < cost_.size(); ++j) {
        if (!std::isfinite(cost_[j])) throw std::invalid_argument("non-finite objective coefficient");
        if (std::isnan(lo_[j]) || std::isnan(hi_[j]) || lo_[j] == kInf || hi_[j] == -kInf)
            throw std::invalid_argument("malformed bounds on variable " + std::to_string(j));
        if (!labels_[j].empty() && !seen.insert(labels_[j]).second)
            throw std::invalid_argument("duplicate variable label '" + labels_[j] + "'");
    }
    auto check_rows = [&](const std::vector<Constraint>& rows) {
        for (const auto& row : rows) {
            if (!std::isfinite(row.rhs)) throw std::invalid_argument("non-finite right-hand side");
            for (const auto& term : row.terms) {
                if (term.var >= cost_.size()) throw std::invalid_argument("constraint references unknown variable");
                if (!std::isfinite(term.coef)) throw std::invalid_argument("non-finite constraint coefficient");
            }
        }
    };
    check_rows(eq_);
    check_rows(ineq_);
}

const char* to_string(LpStatus status) {
    switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

namespace {

enum class ColState : unsigned char { Basic, AtLower, AtUpper };

// Tableau simplex over columns x' in [0, ub]. Every row owns an artificial
// column that starts as the identity, so its tableau column is always the
// corresponding column of B^-1 and its reduced cost yields the row dual.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_(rows * cols, 0.0) {}

    double& at(std::size_t i, std::size_t k) { return a_[i * n_ + k]; }
    double at(std::size_t i, std::size_t k) const { return a_[i * n_ + k]; }

    std::size_t m_, n_;
    std::vector<double> a_;
    std::vector<double> ub, cost, d, xb;
    std::vector<std::size_t> basis;
    std::vector<ColState> state;

    double value(std::size_t k) const { return state[k] == ColState::AtUpper ? ub[k] : 0.0; }

    void price() {
        d = cost;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost[basis[i]];
            if (cb == 0) continue;
            for (std::size_t k = 0; k < n_; ++k) d[k] -= cb * at(i, k);
        }
    }

    double objective() const {
        double v = 0;
        for (std::size_t k = 0; k < n_; ++k)
            if (state[k] == ColState::AtUpper) v += cost[k] * ub[k];
        for (std::size_t i = 0; i < m_; ++i) v += cost[basis[i]] * xb[i];
        return v;
    }

    void pivot(std::size_t r, std::size_t q) {
        const double p = at(r, q);
        for (std::size_t k = 0; k < n_; ++k) at(r, k) /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = at(i, q);
            if (f == 0) continue;
            for (std::size_t k = 0; k < n_; ++k) at(i, k) -= f * at(r, k);
            at(i, q) = 0.0;
        }
        const double dq = d[q];
        if (dq != 0) {
            for (std::size_t k = 0; k < n_; ++k) d[k] -= dq * at(r, k);
            d[q] = 0.0;
        }
        state[basis[r]] = ColState::AtLower;  // caller fixes the leaving bound
        basis[r] = q;
        state[q] = ColState::Basic;
    }
};

enum class PhaseResult { Optimal, Unbounded };

struct PhaseOutcome {
    PhaseResult result = PhaseResult::Optimal;
    std::size_t entering = 0;
    int direction = 1;
};

PhaseOutcome run_phase(Tableau& tb, double dual_tol, double pivot_tol, int& iterations, int max_iterations) {
    const std::size_t m = tb.m_, n = tb.n_;
    bool bland = false;
    double best = tb.objective();
    int stall = 0;
    for (;;) {
        std::size_t q = n;
        double score = 0;
        int dir = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (tb.state[k] == ColState::Basic || tb.ub[k] <= 0) continue;
            int kdir = 0;
            if (tb.state[k] == ColState::AtLower && tb.d[k] < -dual_tol) kdir = 1;
            else if (tb.state[k] == ColState::AtUpper && tb.d[k] > dual_tol) kdir = -1;
            if (kdir == 0) continue;
            if (bland) {
                q = k;
                dir = kdir;
                break;
            }
            if (std::abs(tb.d[k]) > score) {
                score = std::abs(tb.d[k]);
                q = k;
                dir = kdir;
            }
        }
        if (q == n) return {};
        if (++iterations > max_iterations)
            throw SolverFailure("simplex iteration limit reached (" + std::to_string(max_iterations) + ")");

        double t = tb.ub[q];
        std::size_t leave = m;
        bool leave_to_upper = false;
        double leave_pivot = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = dir * tb.at(i, q);
            double limit;
            bool to_upper;
            if (a > pivot_tol) {
                limit = std::max(tb.xb[i], 0.0) / a;
                to_upper = false;
            } else if (a < -pivot_tol && tb.ub[tb.basis[i]] < kInf) {
                limit = std::max(tb.ub[tb.basis[i]] - tb.xb[i], 0.0) / -a;
                to_upper = true;
            } else {
                continue;
            }
            bool better;
            if (leave == m) {
                better = limit < t;
            } else {
                const double eps = 1e-12 * std::max(1.0, t);
                const bool tie_wins = bland ? tb.basis[i] < tb.basis[leave] : std::abs(a) > leave_pivot;
                better = limit < t - eps || (limit <= t + eps && tie_wins);
            }
            if (better) {
                t = limit;
                leave = i;
                leave_to_upper = to_upper;
                leave_pivot = std::abs(a);
            }
        }
        if (t == kInf) return {PhaseResult::Unbounded, q, dir};

        for (std::size_t i = 0; i < m; ++i) tb.xb[i] -= dir * t * tb.at(i, q);
        if (leave == m) {
            tb.state[q] = dir > 0 ? ColState::AtUpper : ColState::AtLower;
        } else {
            const double entering_value = dir > 0 ? t : tb.ub[q] - t;
            const std::size_t leaving = tb.basis[leave];
            tb.pivot(leave, q);
            tb.state[leaving] = leave_to_upper ? ColState::AtUpper : ColState::AtLower;
            tb.xb[leave] = entering_value;
        }

        const double obj = tb.objective();
        if (obj < best - 1e-12 * std::max(1.0, std::abs(best))) {
            best = obj;
            stall = 0;
        } else if (++stall > 50) {
            bland = true;
        }
    }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
    lp.validate();
    const std::size_t n = lp.num_vars();
    const std::size_t meq = lp.num_equalities(), min = lp.num_inequalities();
    const std::size_t m = meq + min;
    const auto& lo = lp.lower();
    const auto& hi = lp.upper();

    LpSolution sol;
    for (std::size_t j = 0; j < n; ++j) {
        if (lo[j] > hi[j]) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
    }

    // Structural columns: x_j = offset_j + sum sign_k x'_k.
    std::vector<double> offset(n, 0.0);
    std::vector<std::size_t> col_var;
    std::vector<double> col_sign, col_ub;
    std::vector<std::vector<std::size_t>> var_cols(n);
    for (std::size_t j = 0; j < n; ++j) {
        auto add_col = [&](double sign, double ub) {
            var_cols[j].push_back(col_var.size());
            col_var.push_back(j);
            col_sign.push_back(sign);
            col_ub.push_back(ub);
        };
        if (lo[j] > -kInf) {
            offset[j] = lo[j];
            add_col(1.0, hi[j] - lo[j]);
        } else if (hi[j] < kInf) {
            offset[j] = hi[j];
            add_col(-1.0, kInf);
        } else {
            add_col(1.0, kInf);
            add_col(-1.0, kInf);
        }
    }
    const std::size_t ns = col_var.size();
    const std::size_t slack0 = ns, art0 = ns + min;
    const std::size_t ncols = art0 + m;

    Tableau tb(m, ncols);
    tb.ub.assign(ncols, kInf);
    tb.cost.assign(ncols, 0.0);
    tb.state.assign(ncols, ColState::AtLower);
    tb.basis.resize(m);
    tb.xb.resize(m);
    std::copy(col_ub.begin(), col_ub.end(), tb.ub.begin());

    std::vector<double> row_sign(m, 1.0);
    double rhs_scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Constraint& row = i < meq ? lp.equalities()[i] : lp.inequalities()[i - meq];
        double rhs = row.rhs;
        for (const auto& term : row.terms) {
            rhs -= term.coef * offset[term.var];
            for (std::size_t k : var_cols[term.var]) tb.at(i, k) += term.coef * col_sign[k];
        }
        if (i >= meq) tb.at(i, slack0 + (i - meq)) = 1.0;
        if (rhs < 0) {
            row_sign[i] = -1.0;
            rhs = -rhs;
            for (std::size_t k = 0; k < art0; ++k) tb.at(i, k) = -tb.at(i, k);
        }
        rhs_scale = std::max(rhs_scale, rhs);
        tb.at(i, art0 + i) = 1.0;
        tb.xb[i] = rhs;
        if (i >= meq && row_sign[i] > 0) {
            // The slack is an identity column for this row: start it basic and
            // pin the artificial at zero.
            tb.basis[i] = slack0 + (i - meq);
            tb.state[slack0 + (i - meq)] = ColState::Basic;
            tb.ub[art0 + i] = 0.0;
        } else {
            tb.basis[i] = art0 + i;
            tb.state[art0 + i] = ColState::Basic;
        }
    }

    double cost_scale = 1.0;
    for (double c : lp.cost()) cost_scale = std::max(cost_scale, std::abs(c));
    const double tol = options.tolerance;
    const double pivot_tol = 1e-11;

    // Phase one: minimize the sum of artificials.
    for (std::size_t i = 0; i < m; ++i) tb.cost[art0 + i] = 1.0;
    tb.price();
    int iterations = 0;
    run_phase(tb, tol, pivot_tol, iterations, options.max_iterations);
    double infeasibility = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (tb.basis[i] >= art0) infeasibility += tb.xb[i];
    if (infeasibility > 1e-7 * rhs_scale) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iterations;
        sol.farkas.resize(m);
        for (std::size_t i = 0; i < m; ++i) sol.farkas[i] = row_sign[i] * (1.0 - tb.d[art0 + i]);
        return sol;
    }

    // Drive zero-valued artificials out of the basis where a structural or
    // slack column can replace them; rows where none can are redundant.
    for (std::size_t r = 0; r < m; ++r) {
        if (tb.basis[r] < art0) continue;
        std::size_t best = ncols;
        double mag = 1e-7;
        for (std::size_t k = 0; k < art0; ++k) {
            if (tb.state[k] == ColState::Basic) continue;
            if (std::abs(tb.at(r, k)) > mag) {
                mag = std::abs(tb.at(r, k));
                best = k;
            }
        }
        if (best == ncols) continue;
        // Move the entering column just enough to zero the artificial.
        const double delta = tb.xb[r] / tb.at(r, best);
        const double entering_value = tb.value(best) + delta;
        for (std::size_t i = 0; i < m; ++i)
            if (i != r) tb.xb[i] -= tb.at(i, best) * delta;
        tb.pivot(r, best);
        tb.xb[r] = entering_value;
    }
    for (std::size_t i = 0; i < m; ++i) {
        tb.ub[art0 + i] = 0.0;
        tb.cost[art0 + i] = 0.0;
    }

    // Phase two.
    for (std::size_t k = 0; k < ns; ++k) tb.cost[k] = lp.cost()[col_var[k]] * col_sign[k];
    tb.price();
    const auto outcome = run_phase(tb, tol * cost_scale, pivot_tol, iterations, options.max_iterations);
    sol.iterations = iterations;

    auto column_values = [&] {
        std::vector<double> xc(ncols);
        for (std::size_t k = 0; k < ncols; ++k) xc[k] = tb.value(k);
        for (std::size_t i = 0; i < m; ++i) xc[tb.basis[i]] = tb.xb[i];
        return xc;
    };
    const auto xc = column_values();
    sol.primal.assign(offset.begin(), offset.end());
    for (std::size_t k = 0; k < ns; ++k) sol.primal[col_var[k]] += col_sign[k] * xc[k];
    for (std::size_t j = 0; j < n; ++j) sol.primal[j] = std::clamp(sol.primal[j], lo[j], hi[j]);

    if (outcome.result == PhaseResult::Unbounded) {
        sol.status = LpStatus::Unbounded;
        std::vector<double> dir(ncols, 0.0);
        dir[outcome.entering] = outcome.direction;
        for (std::size_t i = 0; i < m; ++i) dir[tb.basis[i]] = -outcome.direction * tb.at(i, outcome.entering);
        sol.ray.assign(n, 0.0);
        for (std::size_t k = 0; k < ns; ++k) sol.ray[col_var[k]] += col_sign[k] * dir[k];
        return sol;
    }

    sol.status = LpStatus::Optimal;
    sol.obj_value = lp.objective(sol.primal);
    sol.eq_duals.resize(meq);
    sol.ineq_duals.resize(min);
    for (std::size_t i = 0; i < m; ++i) {
        const double y = row_sign[i] * -tb.d[art0 + i];
        if (i < meq) {
            sol.eq_duals[i] = -y;
        } else {
            double mu = -y;
            if (mu < 0 && mu > -tol * cost_scale) mu = 0.0;
            sol.ineq_duals[i - meq] = mu;
        }
    }
    compute_reduced_costs(lp, sol);

    const double dtol = tol * cost_scale;
    for (std::size_t i = 0; i < m && !sol.degenerate; ++i) {
        const std::size_t k = tb.basis[i];
        if (k >= art0) continue;
        const double scale = 1e-9 * std::max(1.0, rhs_scale);
        if (tb.xb[i] <= scale || (tb.ub[k] < kInf && tb.ub[k] - tb.xb[i] <= scale)) sol.degenerate = true;
    }
    for (std::size_t k = 0; k < art0 && !sol.degenerate; ++k)
        if (tb.state[k] != ColState::Basic && tb.ub[k] > 0 && std::abs(tb.d[k]) <= dtol) sol.degenerate = true;
    return sol;
}

void compute_reduced_costs(const LinearProgram& lp, LpSolution& sol) {
    sol.reduced_costs = lp.cost();
    for (std::size_t i = 0; i < lp.num_equalities(); ++i)
        for (const auto& term : lp.equalities()[i].terms) sol.reduced_costs[term.var] += sol.eq_duals[i] * term.coef;
    for (std::size_t i = 0; i < lp.num_inequalities(); ++i)
        for (const auto& term : lp.inequalities()[i].terms)
            sol.reduced_costs[term.var] += sol.ineq_duals[i] * term.coef;
}

KktResiduals kkt_residuals(const LinearProgram& lp, const LpSolution& sol) {
    KktResiduals out;
    const auto& x = sol.primal;
    const auto& lo = lp.lower();
    const auto& hi = lp.upper();
    auto row_activity = [&](const Constraint& row, double& scale) {
        double v = 0;
        scale = std::max(1.0, std::abs(row.rhs));
        for (const auto& term : row.terms) {
            v += term.coef * x[term.var];
            scale = std::max(scale, std::abs(term.coef * x[term.var]));
        }
        return v;
    };
    double dual_value = 0;
    for (std::size_t i = 0; i < lp.num_equalities(); ++i) {
        double scale;
        const auto& row = lp.equalities()[i];
        const double v = row_activity(row, scale);
        out.primal = std::max(out.primal, std::abs(v - row.rhs) / scale);
        dual_value -= sol.eq_duals[i] * row.rhs;
    }
    for (std::size_t i = 0; i < lp.num_inequalities(); ++i) {
        double scale;
        const auto& row = lp.inequalities()[i];
        const double v = row_activity(row, scale);
        const double mu = sol.ineq_duals[i];
        out.primal = std::max(out.primal, std::max(v - row.rhs, 0.0) / scale);
        out.dual = std::max(out.dual, std::max(-mu, 0.0));
        out.complementarity = std::max(out.complementarity, std::abs(mu * (row.rhs - v)) / scale);
        dual_value -= mu * row.rhs;
    }
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        const double scale = std::max(1.0, std::abs(x[j]));
        out.primal = std::max(out.primal, std::max({lo[j] - x[j], x[j] - hi[j], 0.0}) / scale);
        const double d = sol.reduced_costs[j];
        const double cscale = std::max(1.0, std::abs(lp.cost()[j]));
        const bool at_lo = lo[j] > -kInf && x[j] - lo[j] <= 1e-9 * scale;
        const bool at_hi = hi[j] < kInf && hi[j] - x[j] <= 1e-9 * scale;
        double violation = 0;
        if (!at_lo && !at_hi) violation = std::abs(d);
        else if (at_lo && !at_hi) violation = std::max(-d, 0.0);
        else if (at_hi && !at_lo) violation = std::max(d, 0.0);
        out.dual = std::max(out.dual, violation / cscale);
        double gap = kInf;
        if (lo[j] > -kInf) gap = x[j] - lo[j];
        if (hi[j] < kInf) gap = std::min(gap, hi[j] - x[j]);
        if (gap < kInf) out.complementarity = std::max(out.complementarity, std::abs(d) * gap / (cscale * scale));
        if (d > 0 && lo[j] > -kInf) dual_value += d * lo[j];
        else if (d < 0 && hi[j] < kInf) dual_value += d * hi[j];
        else dual_value += d * x[j];
    }
    out.dual_objective = dual_value;
    return out;
}

double optimal_value_derivative(const LpSolution& sol, const LpDerivative& d) {
    if (sol.status != LpStatus::Optimal) throw std::invalid_argument("derivative requires an optimal solution");
    double v = 0;
    for (const auto& term : d.cost) v += term.coef * sol.primal.at(term.var);
    for (const auto& e : d.eq_matrix) v += sol.eq_duals.at(e.row) * e.value * sol.primal.at(e.var);
    for (const auto& e : d.ineq_matrix) v += sol.ineq_duals.at(e.row) * e.value * sol.primal.at(e.var);
    for (const auto& term : d.eq_rhs) v -= sol.eq_duals.at(term.var) * term.coef;
    for (const auto& term : d.ineq_rhs) v -= sol.ineq_duals.at(term.var) * term.coef;
    return v;
}

namespace {

std::string lp_name(const std::string& label, char prefix, std::size_t index) {
    if (label.empty()) return prefix + std::to_string(index);
    std::string out;
    for (char c : label) {
        switch (c) {
        case '[': out += '('; break;
        case ']': out += ')'; break;
        case ' ': out += '_'; break;
        case ':': out += '.'; break;
        default: out += c;
        }
    }
    return out;
}

void write_terms(std::ostream& out, const LinearProgram& lp, const std::vector<Term>& terms) {
    if (terms.empty()) out << " 0 " << lp_name({}, 'x', 0);
    for (const auto& term : terms) {
        out << (term.coef < 0 ? " - " : " + ") << std::abs(term.coef) << ' '
            << lp_name(lp.labels()[term.var], 'x', term.var);
    }
}

}  // namespace

void write_lp_text(std::ostream& out, const LinearProgram& lp) {
    const auto old_precision = out.precision(17);
    out << "Minimize\n obj:";
    std::vector<Term> objective;
    for (std::size_t j = 0; j < lp.num_vars(); ++j)
        if (lp.cost()[j] != 0) objective.push_back({j, lp.cost()[j]});
    write_terms(out, lp, objective);
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < lp.num_equalities(); ++i) {
        const auto& row = lp.equalities()[i];
        out << ' ' << lp_name(row.label, 'e', i) << ':';
        write_terms(out, lp, row.terms);
        out << " = " << row.rhs << '\n';
    }
    for (std::size_t i = 0; i < lp.num_inequalities(); ++i) {
        const auto& row = lp.inequalities()[i];
        out << ' ' << lp_name(row.label, 'g', i) << ':';
        write_terms(out, lp, row.terms);
        out << " <= " << row.rhs << '\n';
    }
    out << "Bounds\n";
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        const auto name = lp_name(lp.labels()[j], 'x', j);
        const double lo = lp.lower()[j], hi = lp.upper()[j];
        if (lo == -kInf && hi == kInf) out << ' ' << name << " free\n";
        else if (lo == -kInf) out << " -inf <= " << name << " <= " << hi << '\n';
        else if (hi == kInf) out << ' ' << name << " >= " << lo << '\n';
        else out << ' ' << lo << " <= " << name << " <= " << hi << '\n';
    }
    out << "End\n";
    out.precision(old_precision);
}

}  // namespace ammfut
