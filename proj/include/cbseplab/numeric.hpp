#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cbsep {

// Compensated (Kahan) accumulator.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

double log_sum_exp(std::span<const double> logs);
double log_binomial(int n, int k);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with `dof` degrees of
// freedom, i.e. P(X > x).
double chi_square_sf(double x, int dof);

struct MeanStderr {
    double mean;
    double stderr_;
    std::size_t count;
};
MeanStderr mean_stderr(std::span<const double> xs);

struct LineFit {
    double slope;
    double intercept;
    double slope_stderr;
};
// Ordinary least squares of y against x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Wilson score interval for a binomial proportion (z = 1.96 by default).
struct Interval {
    double lo;
    double hi;
};
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

// x*log(x) with the 0*log(0) = 0 convention.
double xlogx(double x);

}  // namespace cbsep
