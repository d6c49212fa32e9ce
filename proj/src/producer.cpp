#include "ammfut/producer.hpp"

#include "ammfut/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ammfut {

const char* to_string(Anticipation kind) {
    return kind == Anticipation::PriceTaker ? "price_taker" : "cournot_pwl";
}

Anticipation anticipation_from_string(std::string_view name) {
    if (name == "price_taker") return Anticipation::PriceTaker;
    if (name == "cournot_pwl") return Anticipation::CournotPwl;
    throw std::invalid_argument("unknown anticipation mode '" + std::string(name) + "'");
}

namespace {

std::string cell_label(const char* name, std::size_t w, std::size_t t) {
    return std::string(name) + "[" + std::to_string(w) + "][" + std::to_string(t) + "]";
}

void check_shapes(const ScenarioSet& scenarios, const PriceField& prices, const FuturesContract& contract) {
    scenarios.validate();
    if (prices.scenarios() != scenarios.size() || prices.periods() != scenarios.periods())
        throw std::invalid_argument("price field does not match the scenario set");
    contract.validate(scenarios.periods());
}

void init_common(ProducerProgram& prog, ProducerRole role, const ProducerSpec& spec, const ScenarioSet& scenarios,
                 const PriceField& prices, const FuturesContract& contract, const MarketParams& params) {
    const std::size_t W = scenarios.size(), T = scenarios.periods();
    prog.role = role;
    prog.spec = spec;
    prog.params = params;
    prog.probs = scenarios.probs;
    prog.prices = prices;
    prog.contract = contract;
    prog.pro = ScenarioGrid<std::size_t>(W, T);
    prog.sell = ScenarioGrid<std::size_t>(W, T);
    prog.seg_begin = ScenarioGrid<std::size_t>(W, T, kNoRow);
    prog.energy_row = ScenarioGrid<std::size_t>(W, T, kNoRow);
    prog.balance_row = ScenarioGrid<std::size_t>(W, T, kNoRow);
    prog.delivery_row = ScenarioGrid<std::size_t>(W, T, kNoRow);
    prog.seg_sum_row = ScenarioGrid<std::size_t>(W, T, kNoRow);
    prog.loss_constant.assign(W, 0.0);
}

// Adds theta, xi and the loss rows once every cell column carries its loss
// coefficient.
void add_cvar_rows(ProducerProgram& prog) {
    const std::size_t W = prog.scenarios(), T = prog.periods();
    const double alpha = prog.spec.alpha;
    prog.theta = prog.lp.add_variable("theta", -kInf, kInf, 1.0);
    prog.xi.resize(W);
    prog.loss_row.resize(W);
    for (std::size_t w = 0; w < W; ++w)
        prog.xi[w] = prog.lp.add_variable("xi[" + std::to_string(w) + "]", 0.0, kInf, prog.probs[w] / (1.0 - alpha));
    prog.loss_coef.resize(prog.lp.num_vars(), 0.0);
    for (std::size_t w = 0; w < W; ++w) {
        std::vector<Term> terms;
        for (std::size_t t = 0; t < T; ++t) {
            auto push = [&](std::size_t j) {
                if (prog.loss_coef[j] != 0) terms.push_back({j, prog.loss_coef[j]});
            };
            push(prog.pro(w, t));
            push(prog.sell(w, t));
            if (prog.seg_begin(w, t) != kNoRow)
                for (std::size_t k = 0; k < prog.segments; ++k) push(prog.seg_begin(w, t) + k);
        }
        terms.push_back({prog.theta, -1.0});
        terms.push_back({prog.xi[w], -1.0});
        prog.loss_row[w] =
            prog.lp.add_inequality(std::move(terms), -prog.loss_constant[w], "loss[" + std::to_string(w) + "]");
    }
}

void set_loss_coef(ProducerProgram& prog, std::size_t var, double coef) {
    if (prog.loss_coef.size() <= var) prog.loss_coef.resize(var + 1, 0.0);
    prog.loss_coef[var] = coef;
}

}  // namespace

ProducerProgram build_rep2a_program(const ProducerSpec& spec, const ScenarioSet& scenarios, const PriceField& prices,
                                    const FuturesContract& contract, const MarketParams& params) {
    if (spec.kind != ProducerKind::ReP2A) throw std::invalid_argument("build_rep2a_program needs a ReP2A spec");
    spec.validate();
    params.validate();
    check_shapes(scenarios, prices, contract);

    ProducerProgram prog;
    init_common(prog, ProducerRole::ReP2A, spec, scenarios, prices, contract, params);
    prog.energy = scenarios.energy;
    const std::size_t W = scenarios.size(), T = scenarios.periods();
    const double lo = spec.period_lower(params), hi = spec.period_upper(params);
    const double hours = params.hours_per_period;

    for (std::size_t t = 0; t < T; ++t) {
        double available = hi;
        for (std::size_t w = 0; w < W; ++w) available = std::min(available, spec.eta_p2a * scenarios.energy(w, t));
        if (available < lo * (1 - 1e-12))
            throw InfeasibleProgram("renewable energy cannot cover the minimum production in period " +
                                        std::to_string(t),
                                    static_cast<std::ptrdiff_t>(t));
        if (contract.mode == SettlementMode::FixedQuantity && contract.positions[t] > available * (1 + 1e-12))
            throw InfeasibleProgram("fixed-quantity position " + std::to_string(contract.positions[t]) +
                                        " t exceeds the worst-case renewable output " + std::to_string(available) +
                                        " t in period " + std::to_string(t),
                                    static_cast<std::ptrdiff_t>(t));
    }

    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t t = 0; t < T; ++t) {
            const double rho = prices(w, t);
            const std::size_t pro = prog.lp.add_variable(cell_label("pro", w, t), lo, hi, 0.0);
            const std::size_t sell = prog.lp.add_variable(cell_label("sell", w, t), 0.0, kInf, 0.0);
            prog.pro(w, t) = pro;
            prog.sell(w, t) = sell;
            prog.energy_row(w, t) =
                prog.lp.add_inequality({{pro, 1.0}}, spec.eta_p2a * scenarios.energy(w, t), cell_label("energy", w, t));
            prog.balance_row(w, t) = prog.lp.add_inequality({{sell, 1.0}, {pro, -1.0}}, 0.0, cell_label("balance", w, t));
            set_loss_coef(prog, sell, -rho);
            double constant = spec.fixed_cost * hours - contract.payment(t);
            switch (contract.mode) {
            case SettlementMode::None: break;
            case SettlementMode::Share: set_loss_coef(prog, pro, contract.positions[t] * rho); break;
            case SettlementMode::FixedQuantity:
                constant += contract.positions[t] * rho;
                prog.delivery_row(w, t) = prog.lp.add_inequality({{sell, -1.0}}, -contract.positions[t],
                                                                 cell_label("delivery", w, t));
                break;
            }
            prog.loss_constant[w] += constant;
        }
    }
    add_cvar_rows(prog);
    return prog;
}

ScenarioField delivered_tons(const FuturesContract& contract, const ScenarioField& ra_production) {
    ScenarioField out(ra_production.scenarios(), ra_production.periods(), 0.0);
    for (std::size_t w = 0; w < out.scenarios(); ++w)
        for (std::size_t t = 0; t < out.periods(); ++t) out(w, t) = settle_futures(contract, t, ra_production(w, t));
    return out;
}

ProducerProgram build_ga_program(const ProducerSpec& spec, const ScenarioSet& scenarios, const PriceField& prices,
                                 const FuturesContract& contract, const MarketParams& params, const GaInputs& inputs) {
    if (spec.kind != ProducerKind::GA && spec.kind != ProducerKind::NPTP)
        throw std::invalid_argument("build_ga_program needs a GA or NPTP spec");
    spec.validate();
    params.validate();
    check_shapes(scenarios, prices, contract);
    const std::size_t W = scenarios.size(), T = scenarios.periods();
    auto check_field = [&](const ScenarioField& f, const char* name) {
        if (!f.empty() && (f.scenarios() != W || f.periods() != T))
            throw std::invalid_argument(std::string(name) + " does not match the scenario set");
    };
    check_field(inputs.delivered, "delivered");
    check_field(inputs.ra_production, "ra_production");
    check_field(inputs.competitor_sales, "competitor_sales");
    const bool cournot = inputs.anticipation.kind == Anticipation::CournotPwl;
    if (cournot && inputs.competitor_sales.empty())
        throw std::invalid_argument("Cournot anticipation requires competitor sales");
    if (cournot && inputs.anticipation.segments < 1) throw std::invalid_argument("segments must be at least 1");

    ProducerProgram prog;
    init_common(prog, ProducerRole::GA, spec, scenarios, prices, contract, params);
    prog.anticipation = inputs.anticipation;
    prog.delivered = inputs.delivered.empty() ? ScenarioField(W, T, 0.0) : inputs.delivered;
    prog.delivered_rate = ScenarioField(W, T, 0.0);
    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t t = 0; t < T; ++t) {
            if (prog.delivered(w, t) < 0) throw std::invalid_argument("delivered quantities must be non-negative");
            double rate = 0;
            if (contract.mode == SettlementMode::FixedQuantity) {
                rate = 1.0;
            } else if (contract.mode == SettlementMode::Share) {
                if (!inputs.ra_production.empty()) rate = inputs.ra_production(w, t);
                else if (contract.positions[t] > 0) rate = prog.delivered(w, t) / contract.positions[t];
            }
            prog.delivered_rate(w, t) = rate;
        }
    }
    if (cournot) prog.competitor_sales = inputs.competitor_sales;

    const double lo = spec.period_lower(params), hi = spec.period_upper(params);
    const double hours = params.hours_per_period;
    const std::size_t S = cournot ? static_cast<std::size_t>(inputs.anticipation.segments) : 0;
    prog.segments = S;
    const double width = S > 0 ? hi / static_cast<double>(S) : 0.0;

    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t pro = prog.lp.add_variable(cell_label("pro", w, t), lo, hi, 0.0);
            const std::size_t sell = prog.lp.add_variable(cell_label("sell", w, t), 0.0, kInf, 0.0);
            prog.pro(w, t) = pro;
            prog.sell(w, t) = sell;
            prog.balance_row(w, t) = prog.lp.add_inequality({{sell, 1.0}, {pro, -1.0}}, 0.0, cell_label("balance", w, t));
            set_loss_coef(prog, pro, spec.variable_cost);
            const double mf = prog.delivered(w, t);
            double constant = spec.fixed_cost * hours + contract.payment(t);
            if (!cournot) {
                set_loss_coef(prog, sell, -prices(w, t));
                constant -= mf * prices(w, t);
            } else {
                // Revenue (g + M^f)(A - g/k) on own sales g with the rival's
                // sales frozen, replaced by its chords over S equal segments.
                const double k = params.k_am;
                const double A = params.rho_max - prog.competitor_sales(w, t) / k;
                set_loss_coef(prog, sell, 0.0);
                std::vector<Term> link{{sell, -1.0}};
                prog.seg_begin(w, t) = prog.lp.num_vars();
                for (std::size_t s = 0; s < S; ++s) {
                    const double g0 = width * static_cast<double>(s), g1 = g0 + width;
                    const double slope = A - (g0 + g1) / k - mf / k;
                    const std::size_t col = prog.lp.add_variable(
                        cell_label("seg", w, t) + "[" + std::to_string(s) + "]", 0.0, width, 0.0);
                    set_loss_coef(prog, col, -slope);
                    link.push_back({col, 1.0});
                }
                prog.seg_sum_row(w, t) = prog.lp.add_equality(std::move(link), 0.0, cell_label("segsum", w, t));
                constant -= mf * A;
            }
            prog.loss_constant[w] += constant;
        }
    }
    add_cvar_rows(prog);
    return prog;
}

std::vector<double> scenario_losses(const ProducerProgram& program, const std::vector<double>& x) {
    std::vector<double> losses(program.loss_constant);
    for (std::size_t w = 0; w < program.scenarios(); ++w) {
        double sum = 0;
        for (const auto& term : program.lp.inequalities()[program.loss_row[w]].terms) {
            if (term.var == program.theta || term.var == program.xi[w]) continue;
            sum += term.coef * x[term.var];
        }
        losses[w] += sum;
    }
    return losses;
}

namespace {

struct CellRows {
    std::vector<std::size_t> vars, eq_rows, ineq_rows;
};

CellRows cell_rows(const ProducerProgram& prog, std::size_t w, std::size_t t) {
    CellRows cell;
    cell.vars = {prog.pro(w, t), prog.sell(w, t)};
    if (prog.seg_begin(w, t) != kNoRow)
        for (std::size_t k = 0; k < prog.segments; ++k) cell.vars.push_back(prog.seg_begin(w, t) + k);
    for (std::size_t r : {prog.energy_row(w, t), prog.balance_row(w, t), prog.delivery_row(w, t)})
        if (r != kNoRow) cell.ineq_rows.push_back(r);
    if (prog.seg_sum_row(w, t) != kNoRow) cell.eq_rows.push_back(prog.seg_sum_row(w, t));
    return cell;
}

// True when the tail boundary is ambiguous: a scenario carrying tail weight
// ties in loss with one that is not fully in the tail.
bool tail_boundary_tied(const std::vector<double>& losses, const std::vector<double>& probs,
                        const std::vector<double>& weights, double alpha) {
    double scale = 1.0;
    for (double l : losses) scale = std::max(scale, std::abs(l));
    const double tol = 1e-9 * scale;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (weights[i] <= 1e-15) continue;
        for (std::size_t j = 0; j < losses.size(); ++j) {
            if (i == j || probs[j] == 0) continue;
            if (weights[j] >= probs[j] / (1.0 - alpha) * (1 - 1e-12)) continue;
            if (std::abs(losses[i] - losses[j]) <= tol) return true;
        }
    }
    return false;
}

ProducerResult finish(const ProducerProgram& prog, LpSolution sol) {
    ProducerResult res;
    const std::size_t W = prog.scenarios(), T = prog.periods();
    res.production = ScenarioField(W, T);
    res.sales = ScenarioField(W, T);
    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t t = 0; t < T; ++t) {
            res.production(w, t) = sol.primal[prog.pro(w, t)];
            res.sales(w, t) = sol.primal[prog.sell(w, t)];
        }
    }
    res.losses = scenario_losses(prog, sol.primal);
    res.utility = sol.obj_value;
    res.solution = std::move(sol);
    return res;
}

ProducerResult solve_decomposed(const ProducerProgram& prog) {
    const std::size_t W = prog.scenarios(), T = prog.periods();
    const LinearProgram& lp = prog.lp;
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.primal.assign(lp.num_vars(), 0.0);
    sol.eq_duals.assign(lp.num_equalities(), 0.0);
    sol.ineq_duals.assign(lp.num_inequalities(), 0.0);

    struct CellDuals {
        std::vector<std::size_t> eq_rows, ineq_rows;
        std::vector<double> eq, ineq;
        bool degenerate;
    };
    std::vector<CellDuals> cells;
    cells.reserve(W * T);

    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t t = 0; t < T; ++t) {
            const CellRows rows = cell_rows(prog, w, t);
            LinearProgram cell;
            std::vector<std::size_t> local(lp.num_vars(), kNoRow);
            for (std::size_t j : rows.vars)
                local[j] = cell.add_variable({}, lp.lower()[j], lp.upper()[j], prog.loss_coef[j]);
            auto remap = [&](const Constraint& c) {
                std::vector<Term> terms;
                for (const auto& term : c.terms) terms.push_back({local[term.var], term.coef});
                return terms;
            };
            for (std::size_t r : rows.eq_rows) cell.add_equality(remap(lp.equalities()[r]), lp.equalities()[r].rhs);
            for (std::size_t r : rows.ineq_rows)
                cell.add_inequality(remap(lp.inequalities()[r]), lp.inequalities()[r].rhs);

            const LpSolution cs = solve_lp(cell);
            if (cs.status != LpStatus::Optimal)
                throw InfeasibleProgram("producer program infeasible in scenario " + std::to_string(w) + ", period " +
                                            std::to_string(t),
                                        static_cast<std::ptrdiff_t>(t));
            const LpSolution* primal = &cs;
            LpSolution preferred;
            if (cs.degenerate) {
                // Break ties toward higher output with a tiny cost tilt. The
                // tilted optimum is still optimal for the true costs, so it
                // pairs with the untilted multipliers.
                double scale = 0;
                for (std::size_t j : rows.vars) scale = std::max(scale, std::abs(prog.loss_coef[j]));
                const double delta = 1e-9 * (1.0 + scale);
                LinearProgram rebuilt;
                for (std::size_t j : rows.vars)
                    rebuilt.add_variable({}, lp.lower()[j], lp.upper()[j], prog.loss_coef[j] - delta);
                for (const auto& row : cell.equalities()) rebuilt.add_equality(row.terms, row.rhs);
                for (const auto& row : cell.inequalities()) rebuilt.add_inequality(row.terms, row.rhs);
                preferred = solve_lp(rebuilt);
                if (preferred.status == LpStatus::Optimal) primal = &preferred;
            }
            for (std::size_t j : rows.vars) sol.primal[j] = primal->primal[local[j]];
            cells.push_back({rows.eq_rows, rows.ineq_rows, cs.eq_duals, cs.ineq_duals, cs.degenerate});
        }
    }

    const auto losses = scenario_losses(prog, sol.primal);
    const CvarResult risk = cvar(losses, prog.probs, prog.spec.alpha);
    const auto weights = cvar_tail_weights(losses, prog.probs, prog.spec.alpha);
    sol.primal[prog.theta] = risk.theta;
    for (std::size_t w = 0; w < W; ++w) {
        sol.primal[prog.xi[w]] = risk.excess[w];
        sol.ineq_duals[prog.loss_row[w]] = weights[w];
    }
    bool degenerate = tail_boundary_tied(losses, prog.probs, weights, prog.spec.alpha);
    for (std::size_t w = 0; w < W; ++w) {
        for (std::size_t t = 0; t < T; ++t) {
            const CellDuals& c = cells[w * T + t];
            for (std::size_t i = 0; i < c.eq_rows.size(); ++i) sol.eq_duals[c.eq_rows[i]] = weights[w] * c.eq[i];
            for (std::size_t i = 0; i < c.ineq_rows.size(); ++i)
                sol.ineq_duals[c.ineq_rows[i]] = weights[w] * c.ineq[i];
            if (weights[w] > 0 && c.degenerate) degenerate = true;
        }
    }
    sol.obj_value = risk.cvar;
    sol.degenerate = degenerate;
    sol.iterations = static_cast<int>(W * T);
    compute_reduced_costs(lp, sol);
    return finish(prog, std::move(sol));
}

}  // namespace

ProducerResult solve_program(const ProducerProgram& program, SolveRoute route) {
    if (route == SolveRoute::Decomposed) return solve_decomposed(program);
    LpSolution sol = solve_lp(program.lp);
    if (sol.status == LpStatus::Infeasible) throw InfeasibleProgram("producer program infeasible");
    if (sol.status == LpStatus::Unbounded) throw SolverFailure("producer program reported unbounded");
    return finish(program, std::move(sol));
}

LpDerivative program_derivative(const ProducerProgram& prog, ContractParam param, std::size_t t) {
    if (t >= prog.periods()) throw std::out_of_range("period outside the program horizon");
    LpDerivative d;
    const std::size_t W = prog.scenarios();
    const FuturesContract& c = prog.contract;
    if (c.mode == SettlementMode::None) return d;
    const double q = c.positions[t], rho_f = c.prices[t];
    // The loss row reads loss_coef'x - theta - xi <= -loss_constant, so a
    // change in the loss constant enters the rhs with the opposite sign.
    auto constant_change = [&](std::size_t w, double dconst) {
        if (dconst != 0) d.ineq_rhs.push_back({prog.loss_row[w], -dconst});
    };
    for (std::size_t w = 0; w < W; ++w) {
        const double rho = prog.prices(w, t);
        if (prog.role == ProducerRole::ReP2A) {
            if (param == ContractParam::Price) {
                constant_change(w, -q);
            } else if (c.mode == SettlementMode::Share) {
                d.ineq_matrix.push_back({prog.loss_row[w], prog.pro(w, t), rho});
                constant_change(w, -rho_f);
            } else {
                constant_change(w, rho - rho_f);
                d.ineq_rhs.push_back({prog.delivery_row(w, t), -1.0});
            }
        } else {
            if (param == ContractParam::Price) {
                constant_change(w, q);
                continue;
            }
            const double rate = prog.delivered_rate(w, t);
            if (prog.anticipation.kind == Anticipation::PriceTaker) {
                constant_change(w, rho_f - rate * rho);
            } else {
                const double k = prog.params.k_am;
                const double A = prog.params.rho_max - prog.competitor_sales(w, t) / k;
                for (std::size_t s = 0; s < prog.segments; ++s)
                    d.ineq_matrix.push_back({prog.loss_row[w], prog.seg_begin(w, t) + s, rate / k});
                constant_change(w, rho_f - rate * A);
            }
        }
    }
    return d;
}

Sensitivity optimal_value_sensitivity(const ProducerProgram& program, const LpSolution& solution, ContractParam param,
                                      std::size_t t) {
    if (solution.status != LpStatus::Optimal) throw std::invalid_argument("sensitivity requires an optimal solution");
    return {optimal_value_derivative(solution, program_derivative(program, param, t)), solution.degenerate};
}

}  // namespace ammfut
