#include "hpsfde/markov.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hpsfde/error.hpp"

namespace hpsfde {

GeneratorMatrix::GeneratorMatrix(const std::vector<std::vector<double>>& rates) {
    if (rates.empty()) {
        throw Error(ErrorCode::InvalidArgument, "generator must have at least one state");
    }
    n_ = static_cast<int>(rates.size());
    rates_.reserve(rates.size() * rates.size());
    for (const auto& row : rates) {
        if (static_cast<int>(row.size()) != n_) {
            throw Error(ErrorCode::InvalidArgument, "generator matrix must be square");
        }
        rates_.insert(rates_.end(), row.begin(), row.end());
    }
    for (int i = 1; i <= n_; ++i) {
        double sum = 0.0;
        for (int j = 1; j <= n_; ++j) {
            const double r = rate(i, j);
            if (!std::isfinite(r)) {
                throw Error(ErrorCode::InvalidArgument, "generator entries must be finite");
            }
            if (i != j && r < 0.0) {
                std::ostringstream os;
                os << "gamma_" << i << j << " = " << r << " < 0";
                throw Error(ErrorCode::NegativeOffDiagonal, os.str());
            }
            sum += r;
        }
        if (std::abs(sum) > kRowSumTolerance) {
            std::ostringstream os;
            os << "row " << i << " sums to " << sum;
            throw Error(ErrorCode::RowSumNonZero, os.str());
        }
    }
}

std::size_t GeneratorMatrix::index(int i, int j) const {
    if (i < 1 || i > n_ || j < 1 || j > n_) {
        throw Error(ErrorCode::InvalidArgument, "regime index out of range");
    }
    return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j - 1);
}

std::vector<std::vector<double>> GeneratorMatrix::rows() const {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n_));
    for (int i = 1; i <= n_; ++i) {
        for (int j = 1; j <= n_; ++j) out[static_cast<std::size_t>(i - 1)].push_back(rate(i, j));
    }
    return out;
}

GeneratorMatrix make_generator(const std::vector<std::vector<double>>& rates) {
    return GeneratorMatrix(rates);
}

int RegimePath::state_at(double t) const {
    if (t < t0 || t > T) throw Error(ErrorCode::OutOfDomain, "time outside regime path horizon");
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return states[static_cast<std::size_t>(it - jump_times.begin())];
}

std::vector<double> RegimePath::occupation_fractions(int n_states) const {
    std::vector<double> time_in(static_cast<std::size_t>(n_states), 0.0);
    double left = t0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const double right = k < jump_times.size() ? jump_times[k] : T;
        time_in[static_cast<std::size_t>(states[k] - 1)] += right - left;
        left = right;
    }
    for (auto& v : time_in) v /= (T - t0);
    return time_in;
}

RegimePath sample_regime_path(const GeneratorMatrix& g, int i0, double t0, double T, Engine& engine) {
    if (!(t0 < T)) throw Error(ErrorCode::InvalidArgument, "regime path requires t0 < T");
    if (i0 < 1 || i0 > g.size()) throw Error(ErrorCode::InvalidArgument, "initial regime out of range");

    RegimePath path;
    path.t0 = t0;
    path.T = T;
    path.states.push_back(i0);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int state = i0;
    double t = t0;
    while (true) {
        const double q = g.exit_rate(state);
        if (q <= 0.0) break;  // absorbing
        std::exponential_distribution<double> holding(q);
        t += holding(engine);
        if (t >= T) break;

        // Embedded chain: j with probability gamma_ij / q.
        const double u = unit(engine) * q;
        double acc = 0.0;
        int next = state;
        for (int j = 1; j <= g.size(); ++j) {
            if (j == state) continue;
            acc += g.rate(state, j);
            next = j;
            if (u < acc) break;
        }
        // Rounding at the top of the cumulative sum can land on a zero-rate
        // state; walk back to the last state with positive rate.
        while (g.rate(state, next) <= 0.0 || next == state) --next;

        path.jump_times.push_back(t);
        path.states.push_back(next);
        state = next;
    }
    return path;
}

RegimePath sample_regime_path(const GeneratorMatrix& g, int i0, double t0, double T, std::uint64_t seed) {
    Engine engine = stream_engine(seed, StreamKind::Regime);
    return sample_regime_path(g, i0, t0, T, engine);
}

std::vector<double> stationary_distribution(const GeneratorMatrix& g) {
    const int n = g.size();
    Eigen::MatrixXd gt(n, n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) gt(j - 1, i - 1) = g.rate(i, j);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gt);
    lu.setThreshold(1e-10);
    const auto nullity = static_cast<int>(lu.dimensionOfKernel());
    if (nullity > 1) {
        throw Error(ErrorCode::ReducibleChain,
                    "stationary distribution is not unique (null space dimension " + std::to_string(nullity) + ")");
    }

    // Stack Gamma^T with the normalization row and solve in the least-squares sense.
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = gt;
    a.row(n).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b(n) = 1.0;
    const Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);

    std::vector<double> out(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = std::max(0.0, pi(i));
        total += out[static_cast<std::size_t>(i)];
    }
    for (auto& v : out) v /= total;
    return out;
}

}  // namespace hpsfde
