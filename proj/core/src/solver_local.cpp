#include "hyfad/solver_local.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hyfad {

namespace {

// Steps with |d| below this are treated as exact zeros: they change the
// objective by less than rounding noise and committing them only erodes the
// maintained inverse.
constexpr double kStepFloor = 1e-14;
constexpr int kMaxBacktracks = 60;

double eval_quartic(const SurrogateCoeffs& c, double omega, double d) {
    const double c2 = c.rho2 + 0.5 * omega;
    return d * (c.rho1 + d * (c2 + d * (c.rho3 + d * c.rho4)));
}

double eval_cubic(double b3, double b2, double b1, double b0, double x) {
    return ((b3 * x + b2) * x + b1) * x + b0;
}

void newton_polish(double b3, double b2, double b1, double b0, double& x) {
    for (int it = 0; it < 2; ++it) {
        const double f = eval_cubic(b3, b2, b1, b0, x);
        const double fp = (3.0 * b3 * x + 2.0 * b2) * x + b1;
        if (fp == 0.0) return;
        const double step = f / fp;
        if (!std::isfinite(step)) return;
        x -= step;
    }
}

struct RootSet {
    std::array<double, 3> r{};
    int count = 0;
    void add(double x) {
        if (count < 3 && std::isfinite(x)) r[static_cast<std::size_t>(count++)] = x;
    }
};

// Eigenvalues of the companion matrix of the monic cubic
// x^3 + p2 x^2 + p1 x + p0; robust where the closed form loses digits.
RootSet companion_roots(double p2, double p1, double p0) {
    Eigen::Matrix3d comp;
    comp << 0.0, 0.0, -p0,
            1.0, 0.0, -p1,
            0.0, 1.0, -p2;
    Eigen::EigenSolver<Eigen::Matrix3d> es(comp, false);
    RootSet out;
    for (int i = 0; i < 3; ++i) {
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) <= 1e-8 * (1.0 + std::abs(ev.real()))) out.add(ev.real());
    }
    return out;
}

RootSet cubic_real_roots(double b3, double b2, double b1, double b0) {
    const double p2 = b2 / b3;
    const double p1 = b1 / b3;
    const double p0 = b0 / b3;

    // Depressed form t^3 + p t + q with x = t - p2/3.
    const double shift = p2 / 3.0;
    const double p = p1 - p2 * p2 / 3.0;
    const double q = p0 + p2 * (2.0 * p2 * p2 - 9.0 * p1) / 27.0;

    const double disc = -4.0 * p * p * p - 27.0 * q * q;
    const double disc_scale = 4.0 * std::abs(p * p * p) + 27.0 * q * q;

    RootSet out;
    if (disc_scale == 0.0) {
        out.add(-shift);  // triple root
    } else if (std::abs(disc) <= 1e-9 * disc_scale) {
        // Near-repeated roots: Cardano is ill-conditioned here.
        out = companion_roots(p2, p1, p0);
    } else if (disc > 0.0) {
        // Three distinct real roots (p < 0 in this branch).
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double cosphi = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double phi = std::acos(cosphi);
        for (int k = 0; k < 3; ++k)
            out.add(m * std::cos((phi - 2.0 * M_PI * k) / 3.0) - shift);
    } else {
        // One real root; the sign-split keeps the cube root cancellation-free.
        if (q == 0.0) {
            out.add(-shift);
        } else {
            const double r = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
            const double a = -std::copysign(std::cbrt(std::abs(q) / 2.0 + r), q);
            out.add(a - p / (3.0 * a) - shift);
        }
    }
    for (int i = 0; i < out.count; ++i)
        newton_polish(b3, b2, b1, b0, out.r[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

double solve_coordinate(const SurrogateCoeffs& c, double omega, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("solve_coordinate: empty interval");
    if (lo == hi) return lo;

    // Stationary equation q'(d) = b3 d^3 + b2 d^2 + b1 d + b0 = 0.
    const double b0 = c.rho1;
    const double b1 = 2.0 * c.rho2 + omega;
    const double b2 = 3.0 * c.rho3;
    const double b3 = 4.0 * c.rho4;
    const double scale = std::max({std::abs(b0), std::abs(b1), std::abs(b2), std::abs(b3)});

    std::array<double, 6> cand{};
    int n_cand = 0;
    cand[static_cast<std::size_t>(n_cand++)] = lo;
    cand[static_cast<std::size_t>(n_cand++)] = hi;
    // d = 0 competes whenever it is admissible, so flat directions stay put
    // instead of drifting to an endpoint.
    if (lo < 0.0 && hi > 0.0) cand[static_cast<std::size_t>(n_cand++)] = 0.0;

    RootSet roots;
    if (scale > 0.0) {
        if (std::abs(b3) > 1e-13 * scale) {
            roots = cubic_real_roots(b3, b2, b1, b0);
        } else if (std::abs(b2) > 1e-13 * scale) {
            const double disc = b1 * b1 - 4.0 * b2 * b0;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double qq = -0.5 * (b1 + std::copysign(sq, b1));
                roots.add(qq / b2);
                if (qq != 0.0) roots.add(b0 / qq);
            }
        } else if (std::abs(b1) > 1e-13 * scale) {
            roots.add(-b0 / b1);
        }
    }
    const double slack = 1e-9 * (hi - lo + 1.0);
    for (int i = 0; i < roots.count; ++i) {
        const double r = roots.r[static_cast<std::size_t>(i)];
        if (r >= lo - slack && r <= hi + slack)
            cand[static_cast<std::size_t>(n_cand++)] = std::clamp(r, lo, hi);
    }

    double best_q = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_cand; ++i)
        best_q = std::min(best_q, eval_quartic(c, omega, cand[static_cast<std::size_t>(i)]));

    // Near-ties resolve toward the smallest step (then toward the negative
    // one) so the selection is deterministic and minimally perturbing.
    const double tie = 1e-12 * (1.0 + std::abs(best_q));
    double best_d = 0.0;
    bool have = false;
    for (int i = 0; i < n_cand; ++i) {
        const double d = cand[static_cast<std::size_t>(i)];
        if (eval_quartic(c, omega, d) > best_q + tie) continue;
        if (!have || std::abs(d) < std::abs(best_d) ||
            (std::abs(d) == std::abs(best_d) && d < best_d)) {
            best_d = d;
            have = true;
        }
    }
    return best_d;
}

double solve_coordinate(int n, const PrecisionState& state, const LocalModel& model,
                        double lambda_n, double mu, double a_n, double omega) {
    const SurrogateCoeffs c = surrogate_coeffs(n, state, model, lambda_n, mu, a_n);
    return solve_coordinate(c, omega, -state.theta[n], 1.0 - state.theta[n]);
}

namespace {

// Shared adaptive step rule: double omega until the exact change stops being
// an ascent. delta(d) must return the exact objective change for a step d.
template <typename DeltaFn>
double choose_step(const SurrogateCoeffs& c, double lo, double hi, double& omega,
                   bool adaptive, DeltaFn&& delta, double* accepted_delta) {
    double d = solve_coordinate(c, omega, lo, hi);
    if (std::abs(d) < kStepFloor) {
        if (accepted_delta) *accepted_delta = 0.0;
        return 0.0;
    }
    if (!adaptive) {
        if (accepted_delta) *accepted_delta = delta(d);
        return d;
    }
    for (int back = 0; back <= kMaxBacktracks; ++back) {
        const double change = delta(d);
        if (change <= 0.0) {
            if (accepted_delta) *accepted_delta = change;
            return d;
        }
        omega *= 2.0;
        d = solve_coordinate(c, omega, lo, hi);
        if (std::abs(d) < kStepFloor) break;
    }
    if (accepted_delta) *accepted_delta = 0.0;
    return 0.0;
}

std::vector<int> identity_permutation(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    return perm;
}

}  // namespace

Eigen::VectorXd local_solve(PrecisionState& state, const LocalModel& model,
                            const Eigen::VectorXd& a, const Eigen::VectorXd& lambda,
                            double mu, const CdConfig& cfg, RngStream& perm_rng,
                            LocalSolveReport* report) {
    const int N = model.N;
    std::vector<int> perm = identity_permutation(N);
    double omega = cfg.omega;

    double objective = 0.0;
    const bool tracing = report != nullptr && report->record_objective;
    if (tracing) {
        objective = local_objective(state, model, lambda, mu, a);
        report->objective_trace.clear();
        report->objective_trace.push_back(objective);
    }

    int sweeps = 0;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        perm_rng.shuffle(perm);
        double max_step = 0.0;
        for (int n : perm) {
            const CoordinateWork work = prepare_coordinate(state, model, n);
            const SurrogateCoeffs c = coeffs_from_work(work, state, n, lambda[n], mu, a[n]);
            const double lo = -state.theta[n];
            const double hi = 1.0 - state.theta[n];
            double accepted = 0.0;
            const double d = choose_step(
                c, lo, hi, omega, cfg.adaptive_omega,
                [&](double step) {
                    return exact_delta_objective(work, state, n, step, lambda[n], mu, a[n]);
                },
                &accepted);
            if (d != 0.0) {
                const bool incremental = apply_update(state, model, work, n, d);
                if (tracing) {
                    objective = incremental ? objective + accepted
                                            : local_objective(state, model, lambda, mu, a);
                    report->objective_trace.push_back(objective);
                }
                max_step = std::max(max_step, std::abs(d));
            } else if (tracing) {
                report->objective_trace.push_back(objective);
            }
        }
        ++sweeps;
        if ((sweep + 1) % cfg.refresh_period == 0) refactorize(state, model);
        if (max_step < cfg.tol) break;
    }

    if (report) {
        report->sweeps = sweeps;
        report->omega_final = omega;
        report->final_nll = nll(state, model);
    }
    return state.theta;
}

FarFieldEngine::FarFieldEngine(const LocalModel& model, const VectorXcd& y,
                               const Eigen::VectorXd& theta0)
    : model_(&model), theta_(theta0) {
    if (!model.all_far_field())
        throw std::invalid_argument("far-field engine: near-field device present");
    if (y.size() != model.lk()) throw std::invalid_argument("far-field engine: y has wrong length");
    if (theta0.size() != model.N)
        throw std::invalid_argument("far-field engine: theta0 has wrong length");
    gains_.resize(model.N);
    for (int n = 0; n < model.N; ++n) {
        const double sg = model.devices[static_cast<std::size_t>(n)].sqrt_gain;
        gains_[n] = sg * sg;
    }
    yb_.resize(model.L, model.K);
    for (int k = 0; k < model.K; ++k) yb_.col(k) = y.segment(k * model.L, model.L);
    refresh();
}

void FarFieldEngine::refresh() {
    const int L = model_->L;
    MatrixXcd cl = MatrixXcd::Identity(L, L);
    for (int n = 0; n < model_->N; ++n) {
        if (theta_[n] == 0.0) continue;
        const VectorXcd s = model_->S.col(n);
        cl.noalias() += (theta_[n] * gains_[n]) * (s * s.adjoint());
    }
    cl = 0.5 * (cl + cl.adjoint()).eval();
    Eigen::LLT<MatrixXcd> llt(cl);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("far-field engine: block factorization failed");
    cl_inv_ = llt.solve(MatrixXcd::Identity(L, L));
    cl_inv_ = 0.5 * (cl_inv_ + cl_inv_.adjoint()).eval();
    double acc = 0.0;
    for (int i = 0; i < L; ++i) acc += std::log(llt.matrixLLT()(i, i).real());
    logdet_l_ = 2.0 * acc;
    cached_n_ = -1;
}

SurrogateCoeffs FarFieldEngine::raw_coeffs(int n) {
    const VectorXcd s = model_->S.col(n);
    q_.noalias() = cl_inv_ * s;
    u_ = s.dot(q_).real();
    t_ = (q_.adjoint() * yb_).squaredNorm();
    cached_n_ = n;

    const double g = gains_[n];
    SurrogateCoeffs c;
    c.rho1 = g * (model_->K * u_ - t_);
    c.rho2 = g * g * u_ * t_;
    return c;
}

double FarFieldEngine::exact_delta(int n, double d) const {
    if (n != cached_n_) throw std::logic_error("far-field engine: coordinate not prepared");
    const double g = gains_[n];
    const double denom = 1.0 + d * g * u_;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return model_->K * std::log(denom) - d * g * t_ / denom;
}

void FarFieldEngine::commit(int n, double d) {
    if (d == 0.0) return;
    if (n != cached_n_) raw_coeffs(n);
    const double g = gains_[n];
    const double denom = 1.0 + d * g * u_;
    const double target = std::clamp(theta_[n] + d, 0.0, 1.0);
    if (denom <= 0.0) {
        theta_[n] = target;
        refresh();
        return;
    }
    cl_inv_.noalias() -= (d * g / denom) * (q_ * q_.adjoint());
    cl_inv_ = 0.5 * (cl_inv_ + cl_inv_.adjoint()).eval();
    logdet_l_ += std::log(denom);
    theta_[n] = target;
    cached_n_ = -1;
}

double FarFieldEngine::nll() const {
    const MatrixXcd p = cl_inv_ * yb_;
    const double quad = yb_.conjugate().cwiseProduct(p).sum().real();
    return model_->K * logdet_l_ + quad;
}

Eigen::VectorXd far_field_fast_path(const LocalModel& model, const VectorXcd& y,
                                    const Eigen::VectorXd& a, const Eigen::VectorXd& lambda,
                                    double mu, const CdConfig& cfg, RngStream& perm_rng,
                                    LocalSolveReport* report) {
    FarFieldEngine engine(model, y, a);
    const int N = model.N;
    std::vector<int> perm = identity_permutation(N);
    double omega = cfg.omega;

    double objective = 0.0;
    const bool tracing = report != nullptr && report->record_objective;
    auto penalized = [&]() {
        const Eigen::VectorXd diff = engine.theta() - a;
        return engine.nll() + lambda.dot(diff) + 0.5 * mu * diff.squaredNorm();
    };
    if (tracing) {
        objective = penalized();
        report->objective_trace.clear();
        report->objective_trace.push_back(objective);
    }

    int sweeps = 0;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        perm_rng.shuffle(perm);
        double max_step = 0.0;
        for (int n : perm) {
            SurrogateCoeffs c = engine.raw_coeffs(n);
            const double theta_n = engine.theta()[n];
            c.rho1 += lambda[n] + mu * (theta_n - a[n]);
            c.rho2 += 0.5 * mu;
            double accepted = 0.0;
            const double d = choose_step(
                c, -theta_n, 1.0 - theta_n, omega, cfg.adaptive_omega,
                [&](double step) {
                    return engine.exact_delta(n, step) + lambda[n] * step +
                           mu * ((theta_n - a[n]) * step + 0.5 * step * step);
                },
                &accepted);
            if (d != 0.0) {
                engine.commit(n, d);
                max_step = std::max(max_step, std::abs(d));
                if (tracing) {
                    objective += accepted;
                    report->objective_trace.push_back(objective);
                }
            } else if (tracing) {
                report->objective_trace.push_back(objective);
            }
        }
        ++sweeps;
        if ((sweep + 1) % cfg.refresh_period == 0) engine.refresh();
        if (max_step < cfg.tol) break;
    }

    if (report) {
        report->sweeps = sweeps;
        report->omega_final = omega;
        report->final_nll = engine.nll();
    }
    return engine.theta();
}

Eigen::VectorXd mismatched_cd(const VectorXcd& y, const MatrixXcd& S,
                              const Eigen::VectorXd& gains, int K, const CdConfig& cfg,
                              RngStream& perm_rng) {
    const int L = static_cast<int>(S.rows());
    const int N = static_cast<int>(S.cols());
    if (y.size() != static_cast<Eigen::Index>(L) * K)
        throw std::invalid_argument("mismatched_cd: y has wrong length");
    if (gains.size() != N) throw std::invalid_argument("mismatched_cd: gains has wrong length");

    // Across-antenna sample covariance of the L-long blocks.
    MatrixXcd yb(L, K);
    for (int k = 0; k < K; ++k) yb.col(k) = y.segment(k * L, L);
    const MatrixXcd shat = (yb * yb.adjoint()) / static_cast<double>(K);

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(N);
    MatrixXcd cl_inv = MatrixXcd::Identity(L, L);
    auto rebuild = [&]() {
        MatrixXcd cl = MatrixXcd::Identity(L, L);
        for (int n = 0; n < N; ++n) {
            if (theta[n] == 0.0) continue;
            const VectorXcd s = S.col(n);
            cl.noalias() += (theta[n] * gains[n]) * (s * s.adjoint());
        }
        cl = 0.5 * (cl + cl.adjoint()).eval();
        cl_inv = cl.llt().solve(MatrixXcd::Identity(L, L));
        cl_inv = 0.5 * (cl_inv + cl_inv.adjoint()).eval();
    };

    std::vector<int> perm = identity_permutation(N);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        perm_rng.shuffle(perm);
        double max_step = 0.0;
        for (int n : perm) {
            const double g = gains[n];
            const VectorXcd s = S.col(n);
            const VectorXcd q = cl_inv * s;
            const double u = s.dot(q).real();
            const double v = q.dot(shat * q).real();
            // Exact stationary point of the rank-1 coordinate problem.
            double d = (v - u) / (g * u * u);
            d = std::clamp(d, -theta[n], 1.0 - theta[n]);
            if (std::abs(d) < kStepFloor) continue;
            const double denom = 1.0 + d * g * u;
            theta[n] = std::clamp(theta[n] + d, 0.0, 1.0);
            if (denom <= 0.0) {
                rebuild();
            } else {
                cl_inv.noalias() -= (d * g / denom) * (q * q.adjoint());
                cl_inv = 0.5 * (cl_inv + cl_inv.adjoint()).eval();
            }
            max_step = std::max(max_step, std::abs(d));
        }
        if ((sweep + 1) % cfg.refresh_period == 0) rebuild();
        if (max_step < cfg.tol) break;
    }
    return theta;
}

}  // namespace hyfad
