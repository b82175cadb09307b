#include "hpsfde/stats.hpp"

#include <algorithm>

#include "hpsfde/error.hpp"

namespace hpsfde::stats {

MeanVar mean_var(std::span<const double> xs) {
    MeanVar out;
    out.n = xs.size();
    if (xs.empty()) return out;
    CompensatedSum s;
    for (double v : xs) s.add(v);
    out.mean = s.value() / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        CompensatedSum ss;
        for (double v : xs) ss.add((v - out.mean) * (v - out.mean));
        out.variance = ss.value() / static_cast<double>(xs.size() - 1);
    }
    return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "fit inputs differ in length");
    if (x.size() < 2) throw Error(ErrorCode::DegenerateWindow, "fit needs at least two points");
    const auto n = static_cast<double>(x.size());
    CompensatedSum sx, sy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double mx = sx.value() / n;
    const double my = sy.value() / n;
    CompensatedSum sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    if (!(sxx.value() > 0.0)) throw Error(ErrorCode::DegenerateWindow, "fit abscissae are all equal");
    LinearFit fit;
    fit.n = x.size();
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        CompensatedSum ssr;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ssr.add(r * r);
        }
        fit.slope_stderr = std::sqrt(ssr.value() / (n - 2.0) / sxx.value());
    }
    return fit;
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return xs[lo] + w * (xs[hi] - xs[lo]);
}

}  // namespace hpsfde::stats
