#pragma once

// Shared helpers and independent reference implementations for the tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "got/features.hpp"
#include "got/geometry.hpp"
#include "got/image.hpp"

namespace got::oracle {

inline Image random_image(int w, int h, std::mt19937& rng, double lo = 0.0, double hi = 255.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(w, h, 3);
    for (auto& v : img.data()) v = static_cast<float>(u(rng));
    return img;
}

inline BoundingBox random_box(std::mt19937& rng, double extent = 100.0, double min_side = 2.0) {
    std::uniform_real_distribution<double> pos(0.0, extent), side(min_side, 0.5 * extent);
    return {pos(rng), pos(rng), side(rng), side(rng)};
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
/// descending order with matching eigenvector columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
    Eigen::VectorXd vals(n);
    Eigen::MatrixXd vecs(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        vals[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        vecs.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return {vals, vecs};
}

/// Direct O(N^4) 2-D DFT.
inline Eigen::MatrixXcd naive_dft2(const Eigen::MatrixXd& x) {
    const Eigen::Index R = x.rows(), C = x.cols();
    Eigen::MatrixXcd out(R, C);
    for (Eigen::Index u = 0; u < R; ++u)
        for (Eigen::Index v = 0; v < C; ++v) {
            std::complex<double> acc = 0.0;
            for (Eigen::Index r = 0; r < R; ++r)
                for (Eigen::Index c = 0; c < C; ++c) {
                    const double ang = -2.0 * std::numbers::pi *
                                       (static_cast<double>(u * r) / R + static_cast<double>(v * c) / C);
                    acc += x(r, c) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out(u, v) = acc;
        }
    return out;
}

/// Box IoU by counting a fine grid of sample points.
inline double sampled_iou(const BoundingBox& a, const BoundingBox& b, double step) {
    const double x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
    const double x1 = std::max(a.right(), b.right()), y1 = std::max(a.bottom(), b.bottom());
    long inter = 0, uni = 0;
    for (double y = y0 + 0.5 * step; y < y1; y += step)
        for (double x = x0 + 0.5 * step; x < x1; x += step) {
            const bool ia = x >= a.x && x < a.right() && y >= a.y && y < a.bottom();
            const bool ib = x >= b.x && x < b.right() && y >= b.y && y < b.bottom();
            inter += ia && ib;
            uni += ia || ib;
        }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct SaabCheck {
    double color_alignment = 0.0;    // min |<fitted row, reference eigenvector>|
    double spatial_alignment = 0.0;  // min over channels of ||U^T V||_F^2 / 4
    double orthonormality_error = 0.0;
    double energy_error = 0.0;       // relative, color residual energy before/after PQR
};

/// Compare fit_saab on one patch against covariance matrices built here and
/// diagonalized by Jacobi rotations.
inline SaabCheck check_saab(const Image& patch) {
    const PatchGrid grid = decompose_patches(patch);
    const SaabKernels k = fit_saab(grid);
    SaabCheck out;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
    double n = 0;
    for (const Image& b : grid.blocks) {
        double m[3] = {0, 0, 0};
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                for (int c = 0; c < 3; ++c) m[c] += b.at(x, y, c) / 64.0;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                Eigen::Vector3d r(b.at(x, y, 0) - m[0], b.at(x, y, 1) - m[1], b.at(x, y, 2) - m[2]);
                cov += r * r.transpose();
                n += 1;
                const double before = r.squaredNorm(), after = (k.color_basis * r).squaredNorm();
                out.energy_error = std::max(out.energy_error, std::abs(before - after) / std::max(1.0, before));
            }
    }
    cov /= n;
    const auto [cvals, cvecs] = jacobi_eigen(cov);
    out.color_alignment = 1.0;
    for (int i = 0; i < 3; ++i)
        out.color_alignment = std::min(out.color_alignment, std::abs(k.color_basis.row(i).dot(cvecs.col(i))));
    out.orthonormality_error = (k.color_basis * k.color_basis.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();

    const Eigen::Matrix3d basis = cvecs.transpose();
    out.spatial_alignment = 1.0;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<Eigen::VectorXd> samples;
        for (const Image& b : grid.blocks) {
            double m[3] = {0, 0, 0};
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    for (int c = 0; c < 3; ++c) m[c] += b.at(x, y, c) / 64.0;
            Eigen::MatrixXd plane(8, 8);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    Eigen::Vector3d r(b.at(x, y, 0) - m[0], b.at(x, y, 1) - m[1], b.at(x, y, 2) - m[2]);
                    plane(y, x) = basis.row(ch).dot(r);
                }
            for (int wy = 0; wy < 4; ++wy)
                for (int wx = 0; wx < 4; ++wx) {
                    Eigen::VectorXd v(25);
                    for (int y = 0; y < 5; ++y)
                        for (int x = 0; x < 5; ++x) v[y * 5 + x] = plane(wy + y, wx + x);
                    v.array() -= v.mean();
                    samples.push_back(v);
                }
        }
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(25);
        for (const auto& v : samples) mean += v;
        mean /= static_cast<double>(samples.size());
        Eigen::MatrixXd scov = Eigen::MatrixXd::Zero(25, 25);
        for (const auto& v : samples) scov += (v - mean) * (v - mean).transpose();
        scov /= static_cast<double>(samples.size());
        const auto [svals, svecs] = jacobi_eigen(scov);
        Eigen::MatrixXd U(25, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 25; ++j) U(j, i) = k.spatial[ch][i][j];
        const double align = (U.transpose() * svecs.leftCols(4)).squaredNorm() / 4.0;
        out.spatial_alignment = std::min(out.spatial_alignment, align);
        out.orthonormality_error =
            std::max(out.orthonormality_error, (U.transpose() * U - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff());
        for (int i = 0; i < 4; ++i) out.orthonormality_error = std::max(out.orthonormality_error, std::abs(U.col(i).sum()));
    }
    return out;
}

}  // namespace got::oracle

namespace got::oracle {

/// Conjugate gradient on the normal equations of the stacked least-squares
/// problem [I; mu I] x = [p; mu s], with the operator applied matrix-free.
inline Eigen::ArrayXXd iterative_template(const Eigen::ArrayXXd& p, const Eigen::ArrayXXd& s, double mu) {
    const Eigen::Index n = p.size();
    auto A = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd out(2 * n);
        out.head(n) = x;
        out.tail(n) = mu * x;
        return out;
    };
    auto At = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return y.head(n) + mu * y.tail(n); };
    Eigen::VectorXd b(2 * n);
    b.head(n) = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
    b.tail(n) = mu * Eigen::Map<const Eigen::VectorXd>(s.data(), n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = At(b) - At(A(x)), d = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < 200 && rr > 1e-40; ++it) {
        const Eigen::VectorXd q = At(A(d));
        const double alpha = rr / d.dot(q);
        x += alpha * d;
        r -= alpha * q;
        const double rr_new = r.squaredNorm();
        d = r + (rr_new / rr) * d;
        rr = rr_new;
    }
    Eigen::ArrayXXd out(p.rows(), p.cols());
    Eigen::Map<Eigen::VectorXd>(out.data(), n) = x;
    return out;
}

/// Union-find labelling of 4-connected cells; returns component sizes in
/// descending order.
inline std::vector<std::size_t> component_sizes(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    const Eigen::Index rows = mask.rows(), cols = mask.cols();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(rows * cols));
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<Eigen::Index>(i);
    auto find = [&](Eigen::Index a) {
        while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
        return a;
    };
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!mask(r, c)) continue;
            if (r + 1 < rows && mask(r + 1, c)) parent[static_cast<std::size_t>(find(r * cols + c))] = find((r + 1) * cols + c);
            if (c + 1 < cols && mask(r, c + 1)) parent[static_cast<std::size_t>(find(r * cols + c))] = find(r * cols + c + 1);
        }
    std::vector<std::size_t> count(parent.size(), 0);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (mask(r, c)) ++count[static_cast<std::size_t>(find(r * cols + c))];
    std::vector<std::size_t> sizes;
    for (auto v : count)
        if (v) sizes.push_back(v);
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
}

}  // namespace got::oracle
