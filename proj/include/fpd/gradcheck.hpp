#pragma once

#include <cmath>
#include <string>

#include "fpd/loss.hpp"
#include "fpd/model.hpp"

namespace fpd {

struct GradCheckOptions {
    double h = 1e-5;
    double tol = 1e-4;       // max relative error admitted
    double atol = 1e-9;      // absolute differences below this count as equal
    bool check_input = true;
    std::uint64_t rng_seed = 0x9d2c5680;  // dropout masks replay identically per eval
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_diff = 0.0;
    std::size_t coords_checked = 0;
    std::size_t coords_skipped = 0;  // perturbation crossed a relu/pool kink
    bool pass = true;
    std::string worst_coord;
};

// Central-difference verification of every parameter (and optionally input)
// gradient of the scalar BCE loss, in double precision. Coordinates whose
// +/-h evaluations land on different activation patterns sit astride a
// non-differentiable point where the central difference is meaningless;
// they are counted in coords_skipped instead of compared.
inline GradCheckReport finite_diff_check(Model<double>& model, const Tensor<double>& input,
                                         const Tensor<double>& target,
                                         GradCheckOptions opts = {}) {
    auto loss_at = [&](const Tensor<double>& x, std::uint64_t* pattern) -> double {
        Rng rng(opts.rng_seed);
        Tensor<double> p = model.forward(x, Mode::Train, &rng);
        if (pattern != nullptr) *pattern = model.last_pattern();
        double loss = bce_loss(p, target).loss;
        if (!std::isfinite(loss)) raise(ErrorCategory::Numeric, "non-finite loss in gradcheck");
        return loss;
    };

    // Analytic pass.
    Rng rng(opts.rng_seed);
    Tensor<double> p = model.forward(input, Mode::Train, &rng);
    BceResult<double> bce = bce_loss(p, target);
    if (!std::isfinite(bce.loss)) raise(ErrorCategory::Numeric, "non-finite loss in gradcheck");
    model.zero_grad();
    Tensor<double> dinput = model.backward(bce.grad);

    GradCheckReport report;
    auto compare = [&](double analytic, double numeric, const std::string& coord) {
        ++report.coords_checked;
        double diff = std::abs(analytic - numeric);
        report.max_abs_diff = std::max(report.max_abs_diff, diff);
        double rel = diff <= opts.atol
                         ? 0.0
                         : diff / std::max(std::abs(analytic), std::abs(numeric));
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coord = coord;
        }
    };

    auto probe = [&](double* slot, double analytic, const Tensor<double>& x,
                     const std::string& coord) {
        const double saved = *slot;
        std::uint64_t pat_hi = 0, pat_lo = 0;
        *slot = saved + opts.h;
        double f_hi = loss_at(x, &pat_hi);
        *slot = saved - opts.h;
        double f_lo = loss_at(x, &pat_lo);
        *slot = saved;
        if (pat_hi != pat_lo) {
            ++report.coords_skipped;
            return;
        }
        compare(analytic, (f_hi - f_lo) / (2.0 * opts.h), coord);
    };

    for (Parameter<double>* param : model.parameters())
        for (std::size_t i = 0; i < param->value.size(); ++i)
            probe(&param->value[i], param->grad[i], input,
                  param->name + "[" + std::to_string(i) + "]");

    if (opts.check_input) {
        Tensor<double> x = input;
        for (std::size_t i = 0; i < x.size(); ++i)
            probe(&x[i], dinput[i], x, "input[" + std::to_string(i) + "]");
    }

    report.pass = report.max_rel_err < opts.tol;
    return report;
}

}  // namespace fpd
