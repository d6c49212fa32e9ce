#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace ammfut {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
    std::size_t var;
    double coef;
};

struct Constraint {
    std::vector<Term> terms;
    double rhs = 0.0;
    std::string label;
};

/// min c'x  s.t.  A x = b,  G x <= h,  lo <= x <= hi.
/// Immutable once handed to the solver; builders own the only mutable copy.
class LinearProgram {
public:
    std::size_t add_variable(std::string label, double lo, double hi, double cost);
    std::size_t add_equality(std::vector<Term> terms, double rhs, std::string label = {});
    std::size_t add_inequality(std::vector<Term> terms, double rhs, std::string label = {});

    std::size_t num_vars() const { return cost_.size(); }
    std::size_t num_equalities() const { return eq_.size(); }
    std::size_t num_inequalities() const { return ineq_.size(); }

    const std::vector<double>& cost() const { return cost_; }
    const std::vector<double>& lower() const { return lo_; }
    const std::vector<double>& upper() const { return hi_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<Constraint>& equalities() const { return eq_; }
    const std::vector<Constraint>& inequalities() const { return ineq_; }

    double objective(const std::vector<double>& x) const;

    /// Checks indices, finiteness and that non-empty labels are unique.
    void validate() const;

private:
    std::vector<double> cost_, lo_, hi_;
    std::vector<std::string> labels_;
    std::vector<Constraint> eq_, ineq_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status);

/// Multiplier signs follow L = c'x + lambda'(Ax - b) + mu'(Gx - h) with mu >= 0,
/// so reduced_costs = c + A'lambda + G'mu.
struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> primal;
    double obj_value = 0.0;
    std::vector<double> eq_duals;
    std::vector<double> ineq_duals;
    std::vector<double> reduced_costs;
    std::vector<double> ray;     // Unbounded: improving direction in x
    std::vector<double> farkas;  // Infeasible: phase-one row multipliers (equalities, then inequalities)
    bool degenerate = false;
    int iterations = 0;
};

struct LpOptions {
    double tolerance = 1e-9;
    int max_iterations = 50000;
};

/// Dense bounded-variable two-phase primal simplex. Throws SolverFailure when
/// the iteration budget runs out.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Recomputes sol.reduced_costs from the primal-independent data c, A, G and
/// the stored multipliers.
void compute_reduced_costs(const LinearProgram& lp, LpSolution& sol);

struct KktResiduals {
    double primal = 0.0;        // max constraint/bound violation
    double dual = 0.0;          // max sign violation of mu and reduced costs
    double complementarity = 0.0;
    double dual_objective = 0.0;
};

/// Residuals scaled by max(1, |entry|) of the quantities involved.
KktResiduals kkt_residuals(const LinearProgram& lp, const LpSolution& sol);

/// Derivative of the problem data with respect to one scalar parameter.
struct LpDerivative {
    struct Entry {
        std::size_t row;
        std::size_t var;
        double value;
    };
    std::vector<Term> cost;        // dc
    std::vector<Term> eq_rhs;      // db, Term::var holds the row
    std::vector<Term> ineq_rhs;    // dh, Term::var holds the row
    std::vector<Entry> eq_matrix;  // dA
    std::vector<Entry> ineq_matrix;// dG
};

/// Envelope-theorem derivative of the optimal value:
/// dc'x + lambda'(dA x - db) + mu'(dG x - dh).
double optimal_value_derivative(const LpSolution& sol, const LpDerivative& d);

/// CPLEX-style LP text for debugging against external solvers.
void write_lp_text(std::ostream& out, const LinearProgram& lp);

}  // namespace ammfut
