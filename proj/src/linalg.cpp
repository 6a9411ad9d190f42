#include "drillabc/linalg.hpp"

#include "drillabc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drillabc {

namespace {

// Parlett–Reinsch balancing with radix-2 scalings (exact in floating point).
void balance(Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                a.row(i) *= g;
                a.col(i) *= f;
            }
        }
    }
}

void reduce_to_hessenberg(Eigen::MatrixXd& h) {
    const Eigen::Index n = h.rows();
    Eigen::VectorXd ort = Eigen::VectorXd::Zero(n);
    const Eigen::Index high = n - 1;
    for (Eigen::Index m = 1; m < high; ++m) {
        double scale = 0.0;
        for (Eigen::Index i = m; i <= high; ++i) scale += std::abs(h(i, m - 1));
        if (scale == 0.0) continue;

        double hh = 0.0;
        for (Eigen::Index i = high; i >= m; --i) {
            ort(i) = h(i, m - 1) / scale;
            hh += ort(i) * ort(i);
        }
        double g = std::sqrt(hh);
        if (ort(m) > 0) g = -g;
        hh -= ort(m) * g;
        ort(m) -= g;

        for (Eigen::Index j = m; j < n; ++j) {
            double f = 0.0;
            for (Eigen::Index i = high; i >= m; --i) f += ort(i) * h(i, j);
            f /= hh;
            for (Eigen::Index i = m; i <= high; ++i) h(i, j) -= f * ort(i);
        }
        for (Eigen::Index i = 0; i <= high; ++i) {
            double f = 0.0;
            for (Eigen::Index j = high; j >= m; --j) f += ort(j) * h(i, j);
            f /= hh;
            for (Eigen::Index j = m; j <= high; ++j) h(i, j) -= f * ort(j);
        }
        ort(m) *= scale;
        h(m, m - 1) = scale * g;
    }
    for (Eigen::Index i = 2; i < n; ++i) {
        for (Eigen::Index j = 0; j < i - 1; ++j) h(i, j) = 0.0;
    }
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
std::vector<std::complex<double>> hessenberg_qr(Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));

    double anorm = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
    }

    const long total_cap = 100L * n;
    long total = 0;
    int nn = n - 1;
    int its = 0;
    double t = 0.0;
    while (nn >= 0) {
        int l = nn;
        for (; l > 0; --l) {
            double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
            if (s == 0.0) s = anorm;
            if (std::abs(a(l, l - 1)) <= eps * s) {
                a(l, l - 1) = 0.0;
                break;
            }
        }
        double x = a(nn, nn);
        if (l == nn) {
            w[static_cast<std::size_t>(nn)] = x + t;
            --nn;
            its = 0;
            continue;
        }
        double y = a(nn - 1, nn - 1);
        double ww = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
            const double p = 0.5 * (y - x);
            const double q = p * p + ww;
            double z = std::sqrt(std::abs(q));
            x += t;
            if (q >= 0.0) {
                z = p + sign_of(z, p);
                w[static_cast<std::size_t>(nn - 1)] = w[static_cast<std::size_t>(nn)] = x + z;
                if (z != 0.0) w[static_cast<std::size_t>(nn)] = x - ww / z;
            } else {
                w[static_cast<std::size_t>(nn)] = {x + p, -z};
                w[static_cast<std::size_t>(nn - 1)] = {x + p, z};
            }
            nn -= 2;
            its = 0;
            continue;
        }

        if (++total > total_cap) {
            throw NumericError("QR iteration did not converge within " + std::to_string(total_cap) +
                               " sweeps");
        }
        // Exceptional shift.
        if (its > 0 && its % 10 == 0) {
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            ww = -0.4375 * s * s;
        }
        ++its;

        int m = nn - 2;
        double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
        for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - ww) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
        }
        for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
        }
        for (int k = m; k < nn; ++k) {
            if (k != m) {
                p = a(k, k - 1);
                q = a(k + 1, k - 1);
                r = (k + 1 != nn) ? a(k + 2, k - 1) : 0.0;
                x = std::abs(p) + std::abs(q) + std::abs(r);
                if (x != 0.0) {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
                a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                    p += r * a(k + 2, j);
                    a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                    p += z * a(i, k + 2);
                    a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
            }
        }
    }
    return w;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues_general(const Eigen::MatrixXd& a) {
    if (a.rows() == 0 || a.rows() != a.cols()) {
        throw DomainError("eigenvalues_general: matrix must be square and non-empty");
    }
    if (!a.allFinite()) throw DomainError("eigenvalues_general: non-finite entry");

    Eigen::MatrixXd h = a;
    balance(h);
    reduce_to_hessenberg(h);
    auto w = hessenberg_qr(h);
    std::sort(w.begin(), w.end(), [](const std::complex<double>& l, const std::complex<double>& r) {
        if (l.real() != r.real()) return l.real() > r.real();
        return l.imag() > r.imag();
    });
    return w;
}

double spectral_abscissa(const Eigen::MatrixXd& a) {
    const auto w = eigenvalues_general(a);
    return w.front().real();
}

}  // namespace drillabc
