// Time-convolution operators against the heat kernel and its derivatives,
// realized per Fourier mode by exact exponential integration of
// piecewise-linear-in-time data, plus weighted space-time norms and the
// operator-boundedness diagnostics.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nematic/spectral.hpp"

namespace nematic::duhamel {

/// Fields sampled on a strictly increasing time grid (shared spatial grid).
struct TimeSeriesField {
    std::vector<double> times;
    std::vector<SpectralField> fields;

    TimeSeriesField() = default;
    TimeSeriesField(std::vector<double> ts, std::vector<SpectralField> fs);

    std::size_t steps() const { return times.size(); }
    const Grid& grid() const { return fields.at(0).grid(); }
    int components() const { return fields.at(0).components(); }
    bool uniform(double tol = 1e-12) const;
    void validate() const;
};

/// C f(t) = int_0^t e^{nu (t-s) Lap} f(s) ds  (identity multiplier).
/// Exact for data whose modes are piecewise linear in time.
TimeSeriesField op_C(const TimeSeriesField& f, double diffusivity = 1.0);

/// A f(t) = int_0^t Lap e^{(t-s) Lap} f(s) ds  = Lap (C f).
TimeSeriesField op_A(const TimeSeriesField& f, double diffusivity = 1.0);

/// B f(t) = int_0^t grad e^{(t-s) Lap} f(s) ds = grad (C f); components
/// expand by a factor N, ordered (input component, axis).
TimeSeriesField op_B(const TimeSeriesField& f, double diffusivity = 1.0);

/// || t^w f(t) ||_{L^r_t L^p_x} by trapezoid over the time grid. When the
/// grid starts at t0 > 0, the (0, t0) mass is extrapolated assuming f is
/// bounded near 0 (requires w*r > -1; all lemma hypotheses guarantee it).
/// r may be infinity (sup over positive grid times).
double weighted_norm(const TimeSeriesField& f, double weight_exp, double p, double r);

/// Unweighted L^r_t L^p_x norm (weight_exp = 0).
double lr_lp_norm(const TimeSeriesField& f, double r, double p);

/// The closed-form weight-in-time exponent family for a triple
/// (p1, p2, p3) with 1/p1 = 1/p2 + 1/p3, plus the epsilon-shifted variants.
struct WeightedExponentTable {
    int dim = 2;
    double r = 1.5;
    double p1 = 0, p2 = 0, p3 = 0;
    double epsilon = 0.0;
    double alpha1 = 0, alpha2 = 0;
    double beta1 = 0, beta2 = 0, beta3 = 0, beta4 = 0;
    double gamma1 = 0, gamma2 = 0, gamma3 = 0, gamma4 = 0;

    static WeightedExponentTable make(int dim, double r, double p1, double p3,
                                      double epsilon = 0.0);

    /// Validity of the exponent choice for a given smallness-index p;
    /// returns the violated inequality, or nothing if all hold.
    std::optional<std::string> violated_hypothesis(double p) const;
};

/// The boundedness claims exercised by `verify duhamel`. Identifiers are
/// opaque check names used on the CLI.
enum class BoundednessCheck {
    max_regularity,       // "2.2": A on L^p_t L^q_x
    grad_smoothing,       // "2.3": B from (r1,q1) to (r2,q2)
    kernel_smoothing,     // "2.4": C from (r1,q1) to (r2,q2)
    weighted_max_reg,     // "2.5": A with t^alpha weight
    weighted_kernel,      // "2.6": C with (alpha -> gamma / sup-norm) weights
    weighted_grad,        // "2.7": B with (alpha -> beta / sup-norm) weights
    weighted_kernel_eps,  // "A.1": epsilon-shifted weighted C
    weighted_grad_eps,    // "A.2": epsilon-shifted weighted B
    kernel_to_sup,        // "A.3": C into L^inf_t L^inf_x from t^sigma weight
    grad_to_sup,          // "A.4": B and t^{-1/2} C into L^inf
};

BoundednessCheck parse_check(const std::string& name);
std::string check_name(BoundednessCheck c);

struct BoundRatioRow {
    int trial = 0;
    double input_norm = 0.0;
    double output_norm = 0.0;
    double ratio = 0.0;
};

struct BoundReport {
    BoundednessCheck check{};
    std::string description;
    std::vector<BoundRatioRow> rows;
    double max_ratio = 0.0;
    bool all_finite = true;
};

/// Evaluate one boundedness claim over a family of inputs. Throws
/// std::invalid_argument naming the violated inequality when the exponent
/// configuration does not satisfy the claim's hypotheses.
BoundReport weighted_bound_report(BoundednessCheck check,
                                  const WeightedExponentTable& table,
                                  const std::vector<TimeSeriesField>& family);

/// Deterministic random family of band-limited time series on [0, T].
std::vector<TimeSeriesField> random_family(const Grid& g, int comps, int kmax,
                                           int count, int time_steps, double T,
                                           unsigned seed);

} // namespace nematic::duhamel
