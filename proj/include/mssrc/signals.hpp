#pragma once

// Test signals: Kuramoto-Sivashinsky chaos, multi-channel sinusoids, and
// spatially correlated Gaussian noise injected at an exact input SNR.

#include "mssrc/error.hpp"
#include "mssrc/time_series.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace mssrc {

/// u_t = -u u_x - u_xx - u_xxxx on a periodic domain.
struct KsParams
{
    double domain_length = 60.0;
    Eigen::Index grid_points = 128;
    double dt = 0.25;
    Eigen::Index n_steps = 10000;
    Eigen::Index transient_steps = 2000;
    Eigen::Index sample_channels = 50;
    /// Scale of the initial condition; 0 starts from the u = 0 fixed point.
    double initial_amplitude = 1.0;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (!(domain_length > 0.0)) throw InvalidArgument("KS domain_length must be positive");
        if (grid_points < 4 || (grid_points & (grid_points - 1)) != 0)
            throw InvalidArgument("KS grid_points must be a power of two >= 4");
        if (!(dt > 0.0)) throw InvalidArgument("KS dt must be positive");
        if (n_steps < 2) throw InvalidArgument("KS n_steps must be at least 2");
        if (transient_steps < 0) throw InvalidArgument("KS transient_steps must be non-negative");
        if (sample_channels < 1 || sample_channels > grid_points)
            throw InvalidArgument("KS sample_channels must lie in [1, grid_points]");
        if (!std::isfinite(initial_amplitude)) throw InvalidArgument("KS initial_amplitude must be finite");
    }
};

struct SinusoidParams
{
    std::vector<double> frequencies;
    std::vector<double> amplitudes;
    std::vector<double> phases;
    double dt = 1.0;
    Eigen::Index n_samples = 10000;

    /// p channels with f dt spread evenly over [0.05, 0.45], unit amplitude,
    /// phases 2 pi k / p.
    static SinusoidParams defaults(Eigen::Index p = 10, Eigen::Index n = 10000, double dt = 1.0)
    {
        SinusoidParams s;
        s.dt = dt;
        s.n_samples = n;
        for (Eigen::Index k = 0; k < p; ++k) {
            const double frac = p > 1 ? static_cast<double>(k) / static_cast<double>(p - 1) : 0.0;
            s.frequencies.push_back((0.05 + 0.4 * frac) / dt);
            s.amplitudes.push_back(1.0);
            s.phases.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(p));
        }
        return s;
    }

    Eigen::Index channels() const { return static_cast<Eigen::Index>(frequencies.size()); }

    void validate() const
    {
        if (frequencies.empty()) throw InvalidArgument("sinusoid needs at least one channel");
        if (amplitudes.size() != frequencies.size() || phases.size() != frequencies.size())
            throw InvalidArgument("sinusoid frequencies, amplitudes and phases must have equal length");
        if (!(dt > 0.0)) throw InvalidArgument("sinusoid dt must be positive");
        if (n_samples < 2) throw InvalidArgument("sinusoid needs at least 2 samples");
        for (std::size_t k = 0; k < frequencies.size(); ++k) {
            if (!(std::abs(frequencies[k]) * dt < 0.5))
                throw InvalidArgument("sinusoid channel " + std::to_string(k + 1) + " violates Nyquist: f*dt = "
                                      + std::to_string(frequencies[k] * dt) + " >= 0.5");
            if (!(amplitudes[k] > 0.0))
                throw InvalidArgument("sinusoid amplitude of channel " + std::to_string(k + 1) + " must be positive");
        }
    }
};

struct NoiseParams
{
    double correlation = 0.5;
    double target_input_snr_db = 0.0;
    std::uint64_t seed = 2;

    void validate() const
    {
        if (!(correlation >= 0.0 && correlation < 1.0)) throw InvalidArgument("noise correlation must lie in [0, 1)");
        if (!std::isfinite(target_input_snr_db)) throw InvalidArgument("target input SNR must be finite");
    }
};

struct NoisySignal
{
    TimeSeriesMatrix noisy;
    TimeSeriesMatrix noise;
    double realized_input_snr_db = 0.0;
    double noise_scale = 0.0;
};

/// Exponential time differencing RK4 integrator for the periodic KS equation
/// (Cox-Matthews scheme, coefficients by contour integration).
class KsIntegrator
{
  public:
    using Complex = std::complex<double>;

    explicit KsIntegrator(const KsParams& params) : params_(params)
    {
        params.validate();
        const auto n = static_cast<std::size_t>(params.grid_points);
        const double h = params.dt;
        wavenumber_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto m = static_cast<double>(j < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n));
            wavenumber_[j] = (j == n / 2) ? 0.0 : 2.0 * std::numbers::pi * m / params.domain_length;
        }

        constexpr int contour_points = 32;
        e_.resize(n);
        e2_.resize(n);
        q_.resize(n);
        f1_.resize(n);
        f2_.resize(n);
        f3_.resize(n);
        nonlinear_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double k = wavenumber_[j];
            const double lin = k * k - k * k * k * k;
            e_[j] = std::exp(h * lin);
            e2_[j] = std::exp(h * lin / 2.0);
            Complex q{}, f1{}, f2{}, f3{};
            for (int m = 1; m <= contour_points; ++m) {
                const Complex r = std::exp(Complex(0.0, std::numbers::pi * (m - 0.5) / contour_points));
                const Complex lr = h * lin + r;
                const Complex ex = std::exp(lr);
                q += (std::exp(lr / 2.0) - 1.0) / lr;
                f1 += (-4.0 - lr + ex * (4.0 - 3.0 * lr + lr * lr)) / (lr * lr * lr);
                f2 += (2.0 + lr + ex * (-2.0 + lr)) / (lr * lr * lr);
                f3 += (-4.0 - 3.0 * lr - lr * lr + ex * (4.0 - lr)) / (lr * lr * lr);
            }
            q_[j] = h * (q / double(contour_points)).real();
            f1_[j] = h * (f1 / double(contour_points)).real();
            f2_[j] = h * (f2 / double(contour_points)).real();
            f3_[j] = h * (f3 / double(contour_points)).real();
            nonlinear_[j] = Complex(0.0, -0.5 * k);
        }
    }

    /// Grid coordinates x_j = j Lx / n.
    std::vector<double> grid() const
    {
        std::vector<double> x(static_cast<std::size_t>(params_.grid_points));
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] = params_.domain_length * static_cast<double>(j) / static_cast<double>(x.size());
        return x;
    }

    void set_state(const std::vector<double>& u)
    {
        if (static_cast<Eigen::Index>(u.size()) != params_.grid_points)
            throw InvalidArgument("KS state has wrong length");
        fft_.fwd(spectrum_, u);
        spectrum_[spectrum_.size() / 2] = 0.0;
    }

    std::vector<double> state()
    {
        std::vector<double> u;
        fft_.inv(u, spectrum_);
        return u;
    }

    void step()
    {
        const std::size_t n = spectrum_.size();
        std::vector<Complex> nv = nonlinear(spectrum_);
        std::vector<Complex> a(n), b(n), c(n);
        for (std::size_t j = 0; j < n; ++j) a[j] = e2_[j] * spectrum_[j] + q_[j] * nv[j];
        std::vector<Complex> na = nonlinear(a);
        for (std::size_t j = 0; j < n; ++j) b[j] = e2_[j] * spectrum_[j] + q_[j] * na[j];
        std::vector<Complex> nb = nonlinear(b);
        for (std::size_t j = 0; j < n; ++j) c[j] = e2_[j] * a[j] + q_[j] * (2.0 * nb[j] - nv[j]);
        std::vector<Complex> nc = nonlinear(c);
        for (std::size_t j = 0; j < n; ++j)
            spectrum_[j] = e_[j] * spectrum_[j] + nv[j] * f1_[j] + 2.0 * (na[j] + nb[j]) * f2_[j] + nc[j] * f3_[j];
    }

  private:
    // -1/2 d/dx (u^2) in Fourier space
    std::vector<Complex> nonlinear(const std::vector<Complex>& v)
    {
        std::vector<double> u;
        fft_.inv(u, v);
        for (auto& value : u) value *= value;
        std::vector<Complex> out;
        fft_.fwd(out, u);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] *= nonlinear_[j];
        return out;
    }

    KsParams params_;
    Eigen::FFT<double> fft_;
    std::vector<double> wavenumber_;
    std::vector<double> e_, e2_, q_, f1_, f2_, f3_;
    std::vector<Complex> nonlinear_;
    std::vector<Complex> spectrum_;
};

/// Channel sample positions: p grid indices spread evenly over n points.
inline std::vector<Eigen::Index> ks_sample_indices(Eigen::Index grid_points, Eigen::Index channels)
{
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < channels; ++k) idx.push_back(k * grid_points / channels);
    return idx;
}

inline TimeSeriesMatrix generate_ks(const KsParams& params)
{
    params.validate();
    KsIntegrator ks(params);

    // cos(2 pi x / Lx) modulated by a smooth seeded perturbation of the low modes
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    constexpr int perturbed_modes = 4;
    std::vector<double> cos_coef(perturbed_modes), sin_coef(perturbed_modes);
    for (int m = 0; m < perturbed_modes; ++m) {
        cos_coef[m] = uniform(rng);
        sin_coef[m] = uniform(rng);
    }
    const auto x = ks.grid();
    std::vector<double> u0(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double phase = 2.0 * std::numbers::pi * x[j] / params.domain_length;
        double perturbation = 0.0;
        for (int m = 0; m < perturbed_modes; ++m)
            perturbation += cos_coef[m] * std::cos((m + 1) * phase) + sin_coef[m] * std::sin((m + 1) * phase);
        u0[j] = params.initial_amplitude * std::cos(phase) * (1.0 + 0.1 * perturbation / perturbed_modes);
    }
    ks.set_state(u0);

    const auto channels = ks_sample_indices(params.grid_points, params.sample_channels);
    TimeSeriesMatrix out(Eigen::MatrixXd(params.n_steps, params.sample_channels), params.dt);

    auto check = [&](const std::vector<double>& u, Eigen::Index step) {
        for (double v : u)
            if (!std::isfinite(v) || std::abs(v) > 1e6)
                throw IntegrationDiverged("KS integration diverged at step " + std::to_string(step)
                                          + " with dt = " + std::to_string(params.dt) + "; reduce dt");
    };

    for (Eigen::Index s = 0; s < params.transient_steps; ++s) {
        ks.step();
        if ((s + 1) % 100 == 0) check(ks.state(), s + 1);
    }
    for (Eigen::Index s = 0; s < params.n_steps; ++s) {
        ks.step();
        const auto u = ks.state();
        check(u, params.transient_steps + s + 1);
        for (Eigen::Index c = 0; c < params.sample_channels; ++c)
            out.values(s, c) = u[static_cast<std::size_t>(channels[static_cast<std::size_t>(c)])];
    }
    return out;
}

/// Row i, channel k: a_k sin(2 pi f_k i dt + phi_k).
inline TimeSeriesMatrix generate_sinusoid(const SinusoidParams& params)
{
    params.validate();
    const Eigen::Index p = params.channels();
    TimeSeriesMatrix out(Eigen::MatrixXd(params.n_samples, p), params.dt);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double omega = 2.0 * std::numbers::pi * params.frequencies[kk] * params.dt;
        for (Eigen::Index i = 0; i < params.n_samples; ++i)
            out.values(i, k) = params.amplitudes[kk] * std::sin(omega * static_cast<double>(i) + params.phases[kk]);
    }
    return out;
}

/// Sigma[j, k] = rho^|j - k|.
inline Eigen::MatrixXd ar1_correlation(Eigen::Index p, double rho)
{
    Eigen::MatrixXd sigma(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < p; ++k) sigma(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
    return sigma;
}

/// Mean over channels with nonzero signal power of 10 log10(signal / noise).
inline double average_channel_snr_db(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noise)
{
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index c = 0; c < clean.cols(); ++c) {
        const double signal = clean.col(c).squaredNorm();
        if (signal == 0.0) continue;
        sum += 10.0 * std::log10(signal / noise.col(c).squaredNorm());
        ++used;
    }
    return used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
}

/// Adds N(0, s^2 Sigma) noise, with s fixed after drawing so the realized
/// average per-channel SNR equals the target exactly.
inline NoisySignal add_correlated_noise(const TimeSeriesMatrix& clean, const NoiseParams& params)
{
    params.validate();
    clean.validate("clean signal");
    const Eigen::Index n = clean.length();
    const Eigen::Index p = clean.channels();
    if (clean.values.squaredNorm() == 0.0)
        throw CannotTargetSnr("clean signal has zero power; an input SNR cannot be targeted");

    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(ar1_correlation(p, params.correlation)).matrixL();
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < p; ++c) z(i, c) = normal(rng);
    Eigen::MatrixXd noise = z * chol.transpose();

    const double unit_snr = average_channel_snr_db(clean.values, noise);
    const double scale = std::pow(10.0, (unit_snr - params.target_input_snr_db) / 20.0);
    noise *= scale;

    NoisySignal out;
    out.noisy = TimeSeriesMatrix(clean.values + noise, clean.dt);
    out.noise = TimeSeriesMatrix(out.noisy.values - clean.values, clean.dt);
    out.realized_input_snr_db = average_channel_snr_db(clean.values, out.noise.values);
    out.noise_scale = scale;
    return out;
}

}  // namespace mssrc
