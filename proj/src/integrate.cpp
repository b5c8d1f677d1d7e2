#include "chainstab/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "chainstab/region.hpp"

namespace chainstab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr int kMaxRefineDepth = 12;

class HeldStepper {
public:
    HeldStepper(const ControlSystem& sys, const DisturbanceSignal& dist, ConstSpan u, const IntegratorConfig& cfg)
        : sys_(sys), dist_(dist), u_(u.begin(), u.end()), cfg_(cfg), n_(sys.state_dim()),
          d_(sys.disturbance_dim()) {
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &xnew_, &err_}) k->assign(n_, 0.0);
    }

    // Right-hand side inside the piece [piece_start, piece_end): the
    // disturbance is taken as its left limit at the piece end.
    void f(double t, ConstSpan x, MutSpan out) {
        if (d_.size() > 0) {
            if (t >= piece_end_)
                dist_.sample_left_into(piece_end_, d_);
            else
                dist_.sample_into(t, d_);
        }
        sys_.rhs(d_, x, u_, out);
    }

    void begin_piece(double t, ConstSpan x, double piece_end) {
        piece_end_ = piece_end;
        f(t, x, k1_);
    }

    double initial_step(double t, ConstSpan x, double span_len) {
        if (cfg_.initial_step > 0.0) return std::min(cfg_.initial_step, span_len);
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(x[i]);
            d0 += std::pow(x[i] / sc, 2);
            d1 += std::pow(k1_[i] / sc, 2);
        }
        d0 = std::sqrt(d0 / n_);
        d1 = std::sqrt(d1 / n_);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span_len);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h0 * k1_[i];
        f(t + h0, tmp_, k2_);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(x[i]);
            d2 += std::pow((k2_[i] - k1_[i]) / sc, 2);
        }
        d2 = std::sqrt(d2 / n_) / h0;
        const double dmax = std::max(d1, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
        return std::min({100.0 * h0, h1, span_len});
    }

    // One trial step of size h from (t, x). Returns the scaled error norm;
    // on return xnew_ and k7_ hold the candidate state and its slope.
    double attempt(double t, ConstSpan x, double h, double t_new) {
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * a21 * k1_[i];
        f(t + c2 * h, tmp_, k2_);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        f(t + c3 * h, tmp_, k3_);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        f(t + c4 * h, tmp_, k4_);
        for (std::size_t i = 0; i < n_; ++i)
            tmp_[i] = x[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f(t + c5 * h, tmp_, k5_);
        for (std::size_t i = 0; i < n_; ++i)
            tmp_[i] = x[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        f(t_new, tmp_, k6_);
        for (std::size_t i = 0; i < n_; ++i)
            xnew_[i] = x[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
        f(t_new, xnew_, k7_);
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            err_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
            const double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(x[i]), std::abs(xnew_[i]));
            acc += std::pow(err_[i] / sc, 2);
        }
        return std::sqrt(acc / n_);
    }

    // Cubic Hermite interpolant on the accepted step [t, t + h].
    void hermite(double t, double h, ConstSpan x0, double s, MutSpan out) const {
        const double th = (s - t) / h;
        const double th2 = th * th, th3 = th2 * th;
        const double h00 = 2 * th3 - 3 * th2 + 1, h10 = th3 - 2 * th2 + th;
        const double h01 = -2 * th3 + 3 * th2, h11 = th3 - th2;
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = h00 * x0[i] + h10 * h * k1_[i] + h01 * xnew_[i] + h11 * h * k7_[i];
    }

    void refine(DenseSegment& seg, double t, double h, ConstSpan x0, double ta, ConstSpan xa, double tb,
                ConstSpan xb, int depth) const {
        if (depth >= kMaxRefineDepth) return;
        const double tm = 0.5 * (ta + tb);
        if (!(tm > ta && tm < tb)) return;
        Vec xm(n_);
        hermite(t, h, x0, tm, xm);
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double lin = 0.5 * (xa[i] + xb[i]);
            const double tol = 10.0 * (cfg_.abs_tol + cfg_.rel_tol * std::abs(xm[i]));
            worst = std::max(worst, std::abs(xm[i] - lin) / tol);
        }
        if (worst <= 1.0) return;
        refine(seg, t, h, x0, ta, xa, tm, xm, depth + 1);
        seg.append(tm, xm);
        refine(seg, t, h, x0, tm, xm, tb, xb, depth + 1);
    }

    void accept() { std::swap(k1_, k7_); }
    const Vec& xnew() const { return xnew_; }

private:
    const ControlSystem& sys_;
    const DisturbanceSignal& dist_;
    Vec u_;
    const IntegratorConfig& cfg_;
    std::size_t n_;
    Vec d_;
    double piece_end_ = 0.0;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, xnew_, err_;
};

}  // namespace

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("integrator tolerances must be positive");
    if (!(blowup_norm_threshold > 0.0)) throw InvalidArgument("blowup_norm_threshold must be positive");
    if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
    if (initial_step < 0.0) throw InvalidArgument("initial_step must be >= 0");
    if (max_steps == 0) throw InvalidArgument("max_steps must be positive");
}

Vec DenseSegment::state_at(double t) const {
    if (times_.empty()) throw InvalidArgument("state_at on an empty segment");
    if (t <= times_.front()) return Vec(state(0).begin(), state(0).end());
    if (t >= times_.back()) return Vec(final_state().begin(), final_state().end());
    const auto hi = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    Vec x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = (1.0 - w) * state(lo)[i] + w * state(hi)[i];
    return x;
}

void DenseSegment::append(double t, ConstSpan x) {
    times_.push_back(t);
    data_.insert(data_.end(), x.begin(), x.end());
}

FiniteEscape::FiniteEscape(double t, DenseSegment partial)
    : Error("FiniteEscape: |x| exceeded the blow-up threshold at t=" + std::to_string(t)),
      time_(t),
      partial_(std::move(partial)) {}

StepLimitExceeded::StepLimitExceeded(double t, const std::string& why, DenseSegment partial)
    : Error("StepLimitExceeded: " + why + " at t=" + std::to_string(t)), time_(t), partial_(std::move(partial)) {}

DenseSegment integrate_held(const ControlSystem& sys, const DisturbanceSignal& disturbance, ConstSpan x0,
                            ConstSpan u, double t0, double t1, const IntegratorConfig& cfg) {
    cfg.validate();
    const std::size_t n = sys.state_dim();
    if (x0.size() != n) throw DimensionMismatch("x0 has dimension " + std::to_string(x0.size()));
    if (u.size() != sys.control_dim()) throw DimensionMismatch("u has dimension " + std::to_string(u.size()));
    if (disturbance.dim() != sys.disturbance_dim())
        throw DimensionMismatch("disturbance signal dimension differs from the system's");
    if (!sys.control_set().contains(u)) throw ControlOutOfSet("held control outside U = " + sys.control_set().describe());
    if (!(t1 > t0)) throw InvalidArgument("integrate_held needs t1 > t0");

    DenseSegment seg(n, Vec(u.begin(), u.end()));
    seg.append(t0, x0);

    auto pieces = disturbance.breakpoints(t0, t1);
    pieces.push_back(t1);

    HeldStepper stepper(sys, disturbance, u, cfg);
    Vec x(x0.begin(), x0.end());
    double t = t0;
    double h = 0.0;
    std::size_t steps = 0;

    for (double piece_end : pieces) {
        stepper.begin_piece(t, x, piece_end);
        if (h == 0.0) h = stepper.initial_step(t, x, piece_end - t);
        while (t < piece_end) {
            h = std::min(h, cfg.max_step);
            double t_new = t + h;
            if (t + 1.01 * h >= piece_end) {
                h = piece_end - t;
                t_new = piece_end;
            }
            if (h <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
                throw StepLimitExceeded(t, "step size underflow", std::move(seg));
            if (++steps > cfg.max_steps)
                throw StepLimitExceeded(t, "more than " + std::to_string(cfg.max_steps) + " steps", std::move(seg));

            const double err = stepper.attempt(t, x, h, t_new);
            if (!std::isfinite(err) || err > 1.0) {
                const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
                h *= fac;
                continue;
            }
            const Vec& xn = stepper.xnew();
            if (cfg.refine_dense_grid) stepper.refine(seg, t, h, x, t, x, t_new, xn, 0);
            seg.append(t_new, xn);
            x = xn;
            t = t_new;
            stepper.accept();
            if (!all_finite(x) || norm(x) > cfg.blowup_norm_threshold) throw FiniteEscape(t, std::move(seg));
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= fac;
        }
    }
    return seg;
}

std::optional<double> first_hitting_time(const DenseSegment& seg, const Region& region, double resolution) {
    if (seg.empty()) return std::nullopt;
    if (region.contains(seg.state(0))) return seg.start_time();
    for (std::size_t k = 1; k < seg.size(); ++k) {
        if (!region.contains(seg.state(k))) continue;
        double lo = seg.time(k - 1);
        double hi = seg.time(k);
        while (hi - lo > resolution) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (region.contains(seg.state_at(mid)))
                hi = mid;
            else
                lo = mid;
        }
        return hi;
    }
    return std::nullopt;
}

}  // namespace chainstab
