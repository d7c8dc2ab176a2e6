#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace got {

using ComplexGrid = Eigen::MatrixXcd;

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}

inline void fft_rows_then_cols(ComplexGrid& m, bool inverse) {
    auto& fft = fft_engine();
    std::vector<std::complex<double>> in, out;
    in.resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) in[static_cast<std::size_t>(c)] = m(r, c);
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = out[static_cast<std::size_t>(c)];
    }
    in.resize(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) in[static_cast<std::size_t>(r)] = m(r, c);
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = out[static_cast<std::size_t>(r)];
    }
}

}  // namespace detail

inline ComplexGrid fft2(const Eigen::MatrixXd& x) {
    ComplexGrid m = x.cast<std::complex<double>>();
    detail::fft_rows_then_cols(m, false);
    return m;
}

/// Inverse 2-D DFT (normalized); returns the real part.
inline Eigen::MatrixXd ifft2_real(const ComplexGrid& X) {
    ComplexGrid m = X;
    detail::fft_rows_then_cols(m, true);
    return m.real();
}

}  // namespace got
