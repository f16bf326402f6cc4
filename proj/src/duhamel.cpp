#include "nematic/duhamel.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nematic::duhamel {

namespace {

using cplx = std::complex<double>;
constexpr double inf = std::numeric_limits<double>::infinity();

// phi1(z) = (1 - e^-z)/z, phi2(z) = (z - 1 + e^-z)/z^2, series below z0.
double phi1(double z) {
    if (z < 1e-4)
        return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
    return (1.0 - std::exp(-z)) / z;
}
double phi2(double z) {
    if (z < 1e-4)
        return 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
    return (z - 1.0 + std::exp(-z)) / (z * z);
}

} // namespace

TimeSeriesField::TimeSeriesField(std::vector<double> ts, std::vector<SpectralField> fs)
    : times(std::move(ts)), fields(std::move(fs)) {
    validate();
}

bool TimeSeriesField::uniform(double tol) const {
    if (times.size() < 3) return true;
    double dt = times[1] - times[0];
    for (std::size_t k = 1; k + 1 < times.size(); ++k)
        if (std::abs((times[k + 1] - times[k]) - dt) > tol * std::max(1.0, dt)) return false;
    return true;
}

void TimeSeriesField::validate() const {
    if (times.empty() || times.size() != fields.size())
        throw std::invalid_argument("TimeSeriesField: empty or mismatched times/fields");
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        if (!(times[k] < times[k + 1]))
            throw std::invalid_argument("TimeSeriesField: times must be strictly increasing");
    for (const auto& f : fields)
        if (!(f.grid() == fields[0].grid()) || f.components() != fields[0].components())
            throw std::invalid_argument("TimeSeriesField: fields must share grid and components");
}

TimeSeriesField op_C(const TimeSeriesField& f, double diffusivity) {
    f.validate();
    const Grid& g = f.grid();
    const std::size_t n = g.size();
    const int nc = f.components();
    const std::size_t K = f.steps();
    const std::size_t stride = static_cast<std::size_t>(nc) * n;

    for (const auto& fl : f.fields) fl.ensure_fourier();

    std::vector<std::vector<cplx>> out(K);
    for (auto& v : out) v.assign(stride, cplx(0.0));

    // per-mode exact integration of piecewise-linear data
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double dt = f.times[k + 1] - f.times[k];
        for (int c = 0; c < nc; ++c) {
            const cplx* fk = f.fields[k].fourier(c);
            const cplx* fk1 = f.fields[k + 1].fourier(c);
            const cplx* prev = out[k].data() + static_cast<std::size_t>(c) * n;
            cplx* next = out[k + 1].data() + static_cast<std::size_t>(c) * n;
            kern::parallel_for(n, [&](std::size_t i) {
                auto ix = g.unflatten(i);
                double k2 = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    double kap = g.wavenumber(ix[a]);
                    k2 += kap * kap;
                }
                const double mu = diffusivity * k2;
                const double z = mu * dt;
                const double E = std::exp(-z);
                const double i1 = dt * phi2(z);
                const double i0m1 = dt * (phi1(z) - phi2(z));
                next[i] = E * prev[i] + i0m1 * fk[i] + i1 * fk1[i];
            });
        }
    }

    std::vector<SpectralField> fields;
    fields.reserve(K);
    for (std::size_t k = 0; k < K; ++k)
        fields.push_back(SpectralField::from_fourier(g, nc, std::move(out[k])));
    return TimeSeriesField(f.times, std::move(fields));
}

TimeSeriesField op_A(const TimeSeriesField& f, double diffusivity) {
    TimeSeriesField c = op_C(f, diffusivity);
    for (auto& fl : c.fields) fl = laplacian(fl);
    return c;
}

TimeSeriesField op_B(const TimeSeriesField& f, double diffusivity) {
    TimeSeriesField c = op_C(f, diffusivity);
    for (auto& fl : c.fields) fl = gradient(fl);
    return c;
}

double weighted_norm(const TimeSeriesField& f, double w, double p, double r) {
    f.validate();
    const std::size_t K = f.steps();
    std::vector<double> lp(K);
    for (std::size_t k = 0; k < K; ++k) lp[k] = lp_norm(f.fields[k], p);

    if (std::isinf(r)) {
        double sup = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double t = f.times[k];
            if (t == 0.0) {
                if (w == 0.0) sup = std::max(sup, lp[k]);
                continue; // w>0: weight vanishes; w<0: sup taken over t>0
            }
            sup = std::max(sup, std::pow(t, w) * lp[k]);
        }
        return sup;
    }

    if (f.times[0] == 0.0 && w < 0.0)
        throw std::invalid_argument("weighted_norm: t0 = 0 with negative weight");

    auto integrand = [&](std::size_t k) {
        double t = f.times[k];
        double tw = t == 0.0 ? (w == 0.0 ? 1.0 : 0.0) : std::pow(t, w);
        return std::pow(tw * lp[k], r);
    };

    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k)
        acc += 0.5 * (f.times[k + 1] - f.times[k]) * (integrand(k) + integrand(k + 1));

    // singular-weight mass on (0, t0), extrapolated with f bounded near 0
    if (f.times[0] > 0.0) {
        double wr = w * r;
        if (wr <= -1.0)
            throw std::invalid_argument(
                "weighted_norm: weight_exp * r <= -1, (0,t0) mass diverges");
        acc += std::pow(lp[0], r) * std::pow(f.times[0], wr + 1.0) / (wr + 1.0);
    }
    return std::pow(acc, 1.0 / r);
}

double lr_lp_norm(const TimeSeriesField& f, double r, double p) {
    return weighted_norm(f, 0.0, p, r);
}

WeightedExponentTable WeightedExponentTable::make(int dim, double r, double p1,
                                                  double p3, double epsilon) {
    WeightedExponentTable t;
    t.dim = dim;
    t.r = r;
    t.p1 = p1;
    t.p3 = p3;
    t.epsilon = epsilon;
    const double inv_p3 = std::isinf(p3) ? 0.0 : 1.0 / p3;
    t.p2 = 1.0 / (1.0 / p1 - inv_p3);
    const double N = dim;
    const double e = epsilon;
    t.alpha1 = 0.5 * (3.0 - N / p1 - e) - 1.0 / (2.0 * r);
    t.alpha2 = 0.5 * (3.0 - N / p1 - e) - 1.0 / r;
    t.beta1 = 0.5 * (2.0 - N / t.p2 - e) - 1.0 / (2.0 * r);
    t.beta2 = 0.5 * (2.0 - N / t.p2 - e);
    t.beta3 = 0.5 * (2.0 - 2.0 * N * inv_p3 - e) - 1.0 / (2.0 * r);
    t.beta4 = 0.5 * (2.0 - 2.0 * N * inv_p3 - e);
    t.gamma1 = 0.5 * (1.0 - N * inv_p3 - e) - 1.0 / (2.0 * r);
    t.gamma2 = 0.5 * (1.0 - N * inv_p3 - e);
    t.gamma3 = 0.5 * (1.0 - N / (3.0 * p1) - e) - 1.0 / (2.0 * r);
    t.gamma4 = 0.5 * (1.0 - N / (3.0 * p1) - e);
    return t;
}

std::optional<std::string> WeightedExponentTable::violated_hypothesis(double p) const {
    const double N = dim;
    std::ostringstream os;
    double lower = std::max(p, N * r / (2.0 * r - 1.0));
    if (!(p1 > lower)) {
        os << "violated: p1 <= max{p, Nr/(2r-1)} = " << lower << " (need p1 > it, p1 = " << p1 << ")";
        return os.str();
    }
    double upper = epsilon > 0.0 ? N / (1.0 - epsilon) : N;
    if (!(p1 < upper)) {
        os << "violated: p1 >= " << (epsilon > 0 ? "N/(1-eps)" : "N") << " = " << upper
           << " (need p1 < it, p1 = " << p1 << ")";
        return os.str();
    }
    double p3min = N * r / (r - 1.0);
    if (!(p3 > p3min)) {
        os << "violated: p3 <= Nr/(r-1) = " << p3min << " (need p3 > it, p3 = " << p3 << ")";
        return os.str();
    }
    const double inv_p3 = std::isinf(p3) ? 0.0 : 1.0 / p3;
    if (std::abs(1.0 / p1 - (1.0 / p2 + inv_p3)) > 1e-12) {
        os << "violated: 1/p1 = 1/p2 + 1/p3 (Hoelder split)";
        return os.str();
    }
    return std::nullopt;
}

BoundednessCheck parse_check(const std::string& name) {
    if (name == "2.2") return BoundednessCheck::max_regularity;
    if (name == "2.3") return BoundednessCheck::grad_smoothing;
    if (name == "2.4") return BoundednessCheck::kernel_smoothing;
    if (name == "2.5") return BoundednessCheck::weighted_max_reg;
    if (name == "2.6") return BoundednessCheck::weighted_kernel;
    if (name == "2.7") return BoundednessCheck::weighted_grad;
    if (name == "A.1") return BoundednessCheck::weighted_kernel_eps;
    if (name == "A.2") return BoundednessCheck::weighted_grad_eps;
    if (name == "A.3") return BoundednessCheck::kernel_to_sup;
    if (name == "A.4") return BoundednessCheck::grad_to_sup;
    throw std::invalid_argument("unknown duhamel check '" + name + "'");
}

std::string check_name(BoundednessCheck c) {
    switch (c) {
        case BoundednessCheck::max_regularity: return "2.2";
        case BoundednessCheck::grad_smoothing: return "2.3";
        case BoundednessCheck::kernel_smoothing: return "2.4";
        case BoundednessCheck::weighted_max_reg: return "2.5";
        case BoundednessCheck::weighted_kernel: return "2.6";
        case BoundednessCheck::weighted_grad: return "2.7";
        case BoundednessCheck::weighted_kernel_eps: return "A.1";
        case BoundednessCheck::weighted_grad_eps: return "A.2";
        case BoundednessCheck::kernel_to_sup: return "A.3";
        case BoundednessCheck::grad_to_sup: return "A.4";
    }
    return "?";
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

struct CheckPlan {
    std::string description;
    // returns {input_norm, output_norm}
    std::function<std::pair<double, double>(const TimeSeriesField&)> eval;
};

CheckPlan make_plan(BoundednessCheck check, const WeightedExponentTable& t) {
    const double N = t.dim;
    const double r = t.r;
    std::ostringstream desc;
    switch (check) {
        case BoundednessCheck::max_regularity: {
            require(r > 1.0 && !std::isinf(r), "violated: 1 < r < inf (maximal regularity)");
            require(t.p1 > 1.0 && !std::isinf(t.p1), "violated: 1 < q < inf (maximal regularity)");
            desc << "A on L^" << r << "_t L^" << t.p1 << "_x";
            double rr = r, q = t.p1;
            return {desc.str(), [rr, q](const TimeSeriesField& f) {
                        return std::make_pair(weighted_norm(f, 0, q, rr),
                                              weighted_norm(op_A(f), 0, q, rr));
                    }};
        }
        case BoundednessCheck::grad_smoothing: {
            // canonical instance: (r, Nr/(3r-2)) -> (2r, Nr/(2r-1))
            double q1 = N * r / (3.0 * r - 2.0), q2 = N * r / (2.0 * r - 1.0);
            double r1 = r, r2 = 2.0 * r;
            require(q1 > 1.0, "violated: q1 = Nr/(3r-2) > 1 (needs r < N/(3-N) for N<3)");
            require(N / 2.0 * (1.0 / q1 - 1.0 / q2) + 0.5 < 1.0,
                    "violated: (N/2)(1/q1-1/q2) + 1/2 < 1");
            require(std::abs(1.0 / r1 + N / 2.0 * (1.0 / q1 - 1.0 / q2) - 0.5 - 1.0 / r2) < 1e-12,
                    "violated: 1/r1 + (N/2)(1/q1-1/q2) = 1/2 + 1/r2");
            desc << "B from L^" << r1 << "L^" << q1 << " to L^" << r2 << "L^" << q2;
            return {desc.str(), [r1, q1, r2, q2](const TimeSeriesField& f) {
                        return std::make_pair(weighted_norm(f, 0, q1, r1),
                                              weighted_norm(op_B(f), 0, q2, r2));
                    }};
        }
        case BoundednessCheck::kernel_smoothing: {
            double q1 = N * r / (3.0 * r - 2.0), q2 = N * r / (r - 1.0);
            double r1 = r, r2 = 2.0 * r;
            require(q1 > 1.0, "violated: q1 = Nr/(3r-2) > 1");
            require(N / 2.0 * (1.0 / q1 - 1.0 / q2) < 1.0, "violated: (N/2)(1/q1-1/q2) < 1");
            require(std::abs(1.0 / r1 + N / 2.0 * (1.0 / q1 - 1.0 / q2) - 1.0 - 1.0 / r2) < 1e-12,
                    "violated: 1/r1 + (N/2)(1/q1-1/q2) = 1 + 1/r2");
            desc << "C from L^" << r1 << "L^" << q1 << " to L^" << r2 << "L^" << q2;
            return {desc.str(), [r1, q1, r2, q2](const TimeSeriesField& f) {
                        return std::make_pair(weighted_norm(f, 0, q1, r1),
                                              weighted_norm(op_C(f), 0, q2, r2));
                    }};
        }
        case BoundednessCheck::weighted_max_reg: {
            double rbar = 2.0 * r, a = t.alpha1, q = t.p1;
            require(a > 0.0 && a < 1.0 - 1.0 / rbar, "violated: alpha in (0, 1 - 1/rbar)");
            desc << "t^" << a << " A on L^" << rbar << "L^" << q;
            return {desc.str(), [a, q, rbar](const TimeSeriesField& f) {
                        return std::make_pair(weighted_norm(f, a, q, rbar),
                                              weighted_norm(op_A(f), a, q, rbar));
                    }};
        }
        case BoundednessCheck::weighted_kernel:
        case BoundednessCheck::weighted_kernel_eps: {
            bool eps = check == BoundednessCheck::weighted_kernel_eps;
            if (eps) require(t.epsilon > 0.0, "violated: epsilon > 0 for the shifted variant");
            double rbar = 2.0 * r, a = t.alpha1, q = t.p1, qt = t.p3;
            double gam = t.gamma1, gbar = t.gamma2;
            double upper = eps ? N / (1.0 - t.epsilon) : N;
            require(q > N / 2.0 && q < upper, "violated: q outside (N/2, " +
                                                   std::string(eps ? "N/(1-eps))" : "N)"));
            require(qt > std::max(N, q), "violated: q_tilde <= max{N, q}");
            require(N / 2.0 * (1.0 / q - (std::isinf(qt) ? 0.0 : 1.0 / qt)) < 1.0,
                    "violated: (N/2)(1/q - 1/q_tilde) < 1");
            require(a + 1.0 / rbar < 1.0, "violated: alpha + 1/rbar < 1");
            bool sup_branch = rbar > 2.0 && q > N * rbar / (2.0 * rbar - 2.0);
            desc << "t^" << a << " L^" << rbar << "L^" << q << " -> t^" << gam << " C in L^"
                 << rbar << "L^" << qt << (sup_branch ? " and sup branch" : "");
            return {desc.str(), [a, q, qt, rbar, gam, gbar, sup_branch](const TimeSeriesField& f) {
                        auto cf = op_C(f);
                        double in = weighted_norm(f, a, q, rbar);
                        double out = weighted_norm(cf, gam, qt, rbar);
                        if (sup_branch)
                            out = std::max(out, weighted_norm(cf, gbar, qt, inf));
                        return std::make_pair(in, out);
                    }};
        }
        case BoundednessCheck::weighted_grad:
        case BoundednessCheck::weighted_grad_eps: {
            bool eps = check == BoundednessCheck::weighted_grad_eps;
            if (eps) require(t.epsilon > 0.0, "violated: epsilon > 0 for the shifted variant");
            double rbar = 2.0 * r, a = t.alpha1, q = t.p1, qb = t.p2;
            double bet = t.beta1, bbar = t.beta2;
            double upper = eps ? N / (1.0 - t.epsilon) : N;
            require(q > N / 2.0 && q < upper, "violated: q outside (N/2, " +
                                                   std::string(eps ? "N/(1-eps))" : "N)"));
            require(qb >= q, "violated: q <= q_bar");
            require(1.0 / q - 1.0 / qb < 1.0 / N, "violated: 1/q - 1/q_bar < 1/N");
            require(a + 1.0 / rbar < 1.0, "violated: alpha + 1/rbar < 1");
            bool sup_branch = rbar > 2.0 && q > N * rbar / (2.0 * rbar - 2.0) &&
                              (N / 2.0 * (1.0 / q - 1.0 / qb) + 0.5) * rbar / (rbar - 1.0) < 1.0;
            desc << "t^" << a << " L^" << rbar << "L^" << q << " -> t^" << bet << " B in L^"
                 << rbar << "L^" << qb << (sup_branch ? " and sup branch" : "");
            return {desc.str(), [a, q, qb, rbar, bet, bbar, sup_branch](const TimeSeriesField& f) {
                        auto bf = op_B(f);
                        double in = weighted_norm(f, a, q, rbar);
                        double out = weighted_norm(bf, bet, qb, rbar);
                        if (sup_branch)
                            out = std::max(out, weighted_norm(bf, bbar, qb, inf));
                        return std::make_pair(in, out);
                    }};
        }
        case BoundednessCheck::kernel_to_sup: {
            double rbar = r, q = t.p3 / 2.0;
            double sigma = 2.0 * t.gamma1; // = 1 - N/(2q) - 1/rbar
            require(!std::isinf(t.p3), "violated: p3 finite for the L^inf kernel bound");
            require(q > N * rbar / (2.0 * rbar - 2.0), "violated: q > N rbar/(2 rbar - 2)");
            desc << "t^" << sigma << " L^" << rbar << "L^" << q << " -> C in L^inf L^inf";
            return {desc.str(), [sigma, q, rbar](const TimeSeriesField& f) {
                        return std::make_pair(weighted_norm(f, sigma, q, rbar),
                                              weighted_norm(op_C(f), 0, inf, inf));
                    }};
        }
        case BoundednessCheck::grad_to_sup: {
            double rbar = 2.0 * r, q = t.p3;
            double sigma = t.gamma1; // = (1 - N/q)/2 - 1/rbar
            require(rbar > 2.0, "violated: rbar > 2");
            require(std::isinf(q) || q > N * rbar / (rbar - 2.0),
                    "violated: q > N rbar/(rbar - 2)");
            desc << "t^" << sigma << " L^" << rbar << "L^" << q
                 << " -> B and t^-1/2 C in L^inf L^inf";
            return {desc.str(), [sigma, q, rbar](const TimeSeriesField& f) {
                        double in = weighted_norm(f, sigma, q, rbar);
                        double out = std::max(weighted_norm(op_B(f), 0, inf, inf),
                                              weighted_norm(op_C(f), -0.5, inf, inf));
                        return std::make_pair(in, out);
                    }};
        }
    }
    throw std::logic_error("unreachable");
}

} // namespace

BoundReport weighted_bound_report(BoundednessCheck check,
                                  const WeightedExponentTable& table,
                                  const std::vector<TimeSeriesField>& family) {
    CheckPlan plan = make_plan(check, table);
    BoundReport rep;
    rep.check = check;
    rep.description = plan.description;
    int trial = 0;
    for (const auto& f : family) {
        auto [in, out] = plan.eval(f);
        BoundRatioRow row;
        row.trial = trial++;
        row.input_norm = in;
        row.output_norm = out;
        row.ratio = in == 0.0 ? 0.0 : out / in;
        if (!std::isfinite(row.ratio)) rep.all_finite = false;
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<TimeSeriesField> random_family(const Grid& g, int comps, int kmax,
                                           int count, int time_steps, double T,
                                           unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<TimeSeriesField> family;
    family.reserve(count);
    for (int trial = 0; trial < count; ++trial) {
        // two random band-limited spatial shapes with smooth time envelopes
        SpectralField g1(g, comps), g2(g, comps);
        for (SpectralField* f : {&g1, &g2})
            for (int c = 0; c < comps; ++c) {
                double* p = f->component_data(c);
                std::fill(p, p + g.size(), 0.0);
                for (int kx = 0; kx <= kmax; ++kx)
                    for (int ky = -kmax; ky <= kmax; ++ky) {
                        if (kx == 0 && ky <= 0) continue;
                        double ca = unif(rng), cb = unif(rng);
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            auto ix = g.unflatten(i);
                            double ph = two_pi / g.length *
                                        (kx * g.coord(ix[0]) + ky * g.coord(ix[1]));
                            p[i] += ca * std::cos(ph) + cb * std::sin(ph);
                        }
                    }
            }
        double w1 = 2.0 * unif(rng), w2 = 2.0 * unif(rng);
        double ph1 = unif(rng), ph2 = unif(rng);
        std::vector<double> times;
        std::vector<SpectralField> fields;
        for (int k = 0; k <= time_steps; ++k) {
            double tk = T * k / time_steps;
            times.push_back(tk);
            double c1 = std::cos(w1 * tk + ph1);
            double c2 = std::sin(w2 * tk + ph2);
            fields.push_back(axpy(c1, g1, scaled(g2, c2)));
        }
        family.emplace_back(std::move(times), std::move(fields));
    }
    return family;
}

} // namespace nematic::duhamel
