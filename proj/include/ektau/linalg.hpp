#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ektau {

// Small dense linear algebra for chart computations. Ambient vectors live in
// 3 components (coordinate charts) or 4 components (embedded S^3 chart); the
// unused slot stays zero so the same storage serves both.
struct AVec {
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    int n = 3;

    AVec() = default;
    AVec(double x, double y, double z) : c{x, y, z, 0.0}, n(3) {}
    AVec(double x, double y, double z, double w) : c{x, y, z, w}, n(4) {}

    double& operator[](int i) { return c[static_cast<size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<size_t>(i)]; }

    static AVec zero(int dim) {
        AVec v;
        v.n = dim;
        return v;
    }
};

inline AVec operator+(const AVec& a, const AVec& b) {
    AVec r = a;
    for (int i = 0; i < a.n; ++i) r[i] += b[i];
    return r;
}
inline AVec operator-(const AVec& a, const AVec& b) {
    AVec r = a;
    for (int i = 0; i < a.n; ++i) r[i] -= b[i];
    return r;
}
inline AVec operator*(double s, const AVec& a) {
    AVec r = a;
    for (int i = 0; i < a.n; ++i) r[i] *= s;
    return r;
}
inline AVec& operator+=(AVec& a, const AVec& b) {
    for (int i = 0; i < a.n; ++i) a[i] += b[i];
    return a;
}
inline AVec& operator-=(AVec& a, const AVec& b) {
    for (int i = 0; i < a.n; ++i) a[i] -= b[i];
    return a;
}

inline double edot(const AVec& a, const AVec& b) {
    double s = 0.0;
    for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
    return s;
}
inline double enorm(const AVec& a) { return std::sqrt(edot(a, a)); }

struct Mat2 {
    double m[2][2]{{0, 0}, {0, 0}};
    double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
    double trace() const { return m[0][0] + m[1][1]; }
};

// Solve M x = b for a 2x2 system.
inline std::array<double, 2> solve2(const Mat2& M, double b0, double b1) {
    double d = M.det();
    if (d == 0.0) throw std::runtime_error("solve2: singular 2x2 system");
    return {(b0 * M.m[1][1] - b1 * M.m[0][1]) / d,
            (M.m[0][0] * b1 - M.m[1][0] * b0) / d};
}

struct Mat3 {
    double m[3][3]{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

    static Mat3 identity() {
        Mat3 I;
        I.m[0][0] = I.m[1][1] = I.m[2][2] = 1.0;
        return I;
    }
    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
    Mat3 inverse() const {
        double d = det();
        if (std::abs(d) < 1e-300) throw std::runtime_error("Mat3: singular matrix");
        Mat3 r;
        r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
        r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
        r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
        r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
        r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
        r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
        r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
        r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
        r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
        return r;
    }
};

// General small linear solve with partial pivoting; used for stencil fits.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> A,
                                       std::vector<double> b) {
    const size_t n = A.size();
    for (size_t k = 0; k < n; ++k) {
        size_t piv = k;
        for (size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
        if (std::abs(A[piv][k]) < 1e-300)
            throw std::runtime_error("solve_dense: singular system");
        std::swap(A[k], A[piv]);
        std::swap(b[k], b[piv]);
        for (size_t i = k + 1; i < n; ++i) {
            double f = A[i][k] / A[k][k];
            for (size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t i = n; i-- > 0;) {
        double s = b[i];
        for (size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }
    return x;
}

// Quaternions; used by the Hopf-fibration machinery. Convention: q = w + xi + yj + zk.
struct Quat {
    double w = 0, x = 0, y = 0, z = 0;

    Quat() = default;
    Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    static Quat from_vec(const AVec& v) { return Quat(v[0], v[1], v[2], v[3]); }
    AVec to_vec() const { return AVec(w, x, y, z); }

    Quat conj() const { return Quat(w, -x, -y, -z); }
    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        double s = 1.0 / norm();
        return Quat(w * s, x * s, y * s, z * s);
    }
};

inline Quat operator*(const Quat& a, const Quat& b) {
    return Quat(a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w);
}
inline Quat operator+(const Quat& a, const Quat& b) {
    return Quat(a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z);
}
inline Quat operator-(const Quat& a, const Quat& b) {
    return Quat(a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z);
}
inline Quat operator*(double s, const Quat& a) {
    return Quat(s * a.w, s * a.x, s * a.y, s * a.z);
}

// e^{i t} as a quaternion.
inline Quat quat_exp_i(double t) { return Quat(std::cos(t), std::sin(t), 0.0, 0.0); }

// Deterministic RNG with a portable uniform; identical streams on every
// platform for a fixed seed.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // uniform in [a,b)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

  private:
    std::uint64_t state_;
};

}  // namespace ektau
