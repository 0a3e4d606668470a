#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "squidfd/errors.hpp"
#include "squidfd/geometry.hpp"
#include "squidfd/grid.hpp"

namespace squidfd {

enum class SolveMethod { cg, sor, dense_direct };

inline const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::cg: return "cg";
        case SolveMethod::sor: return "sor";
        case SolveMethod::dense_direct: return "dense";
    }
    return "?";
}

inline SolveMethod parse_method(const std::string& s) {
    if (s == "cg") return SolveMethod::cg;
    if (s == "sor") return SolveMethod::sor;
    if (s == "dense") return SolveMethod::dense_direct;
    throw ConfigError("unknown solver method '" + s + "' (expected cg, sor or dense)");
}

struct SolveReport {
    std::size_t iterations{0};
    double residual_norm{0.0};
    SolveMethod method{SolveMethod::cg};
    double wall_time{0.0};
};

class NoConvergence : public SolverError {
public:
    NoConvergence(const std::string& what, SolveReport r) : SolverError(what), report(r) {}
    SolveReport report;
};

inline std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r);
    return buf;
}

struct SolverOptions {
    SolveMethod method{SolveMethod::cg};
    double tol{1e-10};
    std::size_t max_iter{0};  ///< 0 selects 50 * sqrt(unknowns)
};

/// Compressed sparse row matrix.
struct CsrMatrix {
    std::size_t rows{0};
    std::vector<std::size_t> row_start{0};
    std::vector<std::size_t> col;
    std::vector<double> val;

    [[nodiscard]] double at(std::size_t r, std::size_t c) const {
        for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) {
            if (col[k] == c) return val[k];
        }
        return 0.0;
    }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) s += val[k] * x[col[k]];
            y[r] = s;
        }
    }

    [[nodiscard]] bool structurally_symmetric() const {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) {
                const std::size_t c = col[k];
                bool found = false;
                for (std::size_t q = row_start[c]; q < row_start[c + 1]; ++q) found |= col[q] == r;
                if (!found) return false;
            }
        }
        return true;
    }
};

/// Fixed values for the outer boundary and, optionally, whole conductors.
/// A conductor without a value gets the Neumann surface treatment.
struct DirichletValues {
    double boundary{0.0};
    std::optional<ScalarGrid> boundary_field;  ///< per-node boundary data, overrides `boundary`
    std::optional<double> island;
    std::optional<double> ground;
};

/// Discrete Poisson system over the non-Dirichlet nodes.
///
/// Rows are the finite-volume balance of each node's control volume
/// (the part of its nodal cell outside conductors), divided by h_x*h_y:
/// sum_nb w_nb (u_nb - u_c) = f_c * volume_fraction. Exterior nodes get
/// the plain 5-point stencil. On a flat conductor face the row equals the
/// ghost-reflected stencil scaled by 1/2, so the matrix stays symmetric.
struct LinearSystem {
    GridSpec grid;
    CsrMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::int64_t> node_to_unknown;  ///< -1 for fixed or filled nodes
    std::vector<std::size_t> unknown_to_node;
    std::vector<char> anchored;                 ///< row couples to a Dirichlet node
    ScalarGrid fixed;                           ///< values of Dirichlet nodes
    std::vector<std::size_t> fill_nodes;        ///< Neumann-conductor interior, filled afterwards

    [[nodiscard]] std::size_t unknowns() const { return unknown_to_node.size(); }
};

/// Assemble the Poisson problem lap(u) = rhs_field on the exterior with
/// zero normal derivative on every conductor that has no Dirichlet value.
inline LinearSystem assemble(const NodeMask& mask, const ScalarGrid& rhs_field, const DirichletValues& dirichlet) {
    const GridSpec& g = mask.grid();
    if (!(rhs_field.grid() == g)) throw InconsistentGrids("mask and rhs field use different grids");
    if (dirichlet.boundary_field && !(dirichlet.boundary_field->grid() == g)) {
        throw InconsistentGrids("boundary data uses a different grid");
    }

    LinearSystem sys;
    sys.grid = g;
    sys.fixed = ScalarGrid(g);
    sys.node_to_unknown.assign(g.node_count(), -1);

    const auto conductor_value = [&](ConductorId id) -> std::optional<double> {
        if (id == ConductorId::island) return dirichlet.island;
        if (id == ConductorId::ground) return dirichlet.ground;
        return std::nullopt;
    };

    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t k = g.index(i, j);
            switch (mask.node_class(i, j)) {
                case NodeClass::outer_boundary:
                    sys.fixed(i, j) = dirichlet.boundary_field ? (*dirichlet.boundary_field)(i, j) : dirichlet.boundary;
                    break;
                case NodeClass::exterior:
                    sys.node_to_unknown[k] = static_cast<std::int64_t>(sys.unknown_to_node.size());
                    sys.unknown_to_node.push_back(k);
                    break;
                case NodeClass::conductor_surface:
                case NodeClass::conductor_interior: {
                    const auto v = conductor_value(mask.conductor(i, j));
                    if (v) {
                        sys.fixed(i, j) = *v;
                    } else if (mask.node_class(i, j) == NodeClass::conductor_interior) {
                        sys.fill_nodes.push_back(k);
                    } else {
                        sys.node_to_unknown[k] = static_cast<std::int64_t>(sys.unknown_to_node.size());
                        sys.unknown_to_node.push_back(k);
                    }
                    break;
                }
            }
        }
    }
    if (sys.unknown_to_node.empty()) throw EmptySystem("no unknown nodes to solve for");

    const double ihx2 = 1.0 / (g.hx() * g.hx());
    const double ihy2 = 1.0 / (g.hy() * g.hy());
    const std::size_t n = sys.unknown_to_node.size();
    sys.matrix.rows = n;
    sys.matrix.row_start.assign(1, 0);
    sys.rhs.assign(n, 0.0);
    sys.anchored.assign(n, 0);

    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = sys.unknown_to_node[r];
        const int i = static_cast<int>(k % static_cast<std::size_t>(g.nx()));
        const int j = static_cast<int>(k / static_cast<std::size_t>(g.nx()));
        struct Neighbor {
            int i, j;
            double w;
        };
        const std::array<Neighbor, 4> nbs{{
            {i, j - 1, mask.open_fraction_y(i, j - 1) * ihy2},
            {i - 1, j, mask.open_fraction_x(i - 1, j) * ihx2},
            {i + 1, j, mask.open_fraction_x(i, j) * ihx2},
            {i, j + 1, mask.open_fraction_y(i, j) * ihy2},
        }};
        double diag = 0.0;
        double b = rhs_field(i, j) * mask.volume_fraction(i, j);
        std::vector<std::pair<std::size_t, double>> entries;
        for (const Neighbor& nb : nbs) {
            if (nb.w == 0.0) continue;
            diag -= nb.w;
            const std::int64_t u = sys.node_to_unknown[g.index(nb.i, nb.j)];
            if (u >= 0) {
                entries.emplace_back(static_cast<std::size_t>(u), nb.w);
            } else {
                b -= nb.w * sys.fixed(nb.i, nb.j);
                sys.anchored[r] = 1;
            }
        }
        entries.emplace_back(r, diag);
        std::sort(entries.begin(), entries.end());
        for (auto [c, v] : entries) {
            sys.matrix.col.push_back(c);
            sys.matrix.val.push_back(v);
        }
        sys.matrix.row_start.push_back(sys.matrix.col.size());
        sys.rhs[r] = b;
    }
    return sys;
}

/// Coordinate-format dump: "row col value" lines, a blank line, then the rhs.
inline void dump_system(const LinearSystem& sys, std::ostream& os) {
    os.precision(17);
    for (std::size_t r = 0; r < sys.matrix.rows; ++r) {
        for (std::size_t k = sys.matrix.row_start[r]; k < sys.matrix.row_start[r + 1]; ++k) {
            os << r << ' ' << sys.matrix.col[k] << ' ' << sys.matrix.val[k] << '\n';
        }
    }
    os << '\n';
    for (double b : sys.rhs) os << b << '\n';
}

namespace detail {

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double residual_norm(const CsrMatrix& a, const std::vector<double>& x, const std::vector<double>& b) {
    std::vector<double> ax;
    a.multiply(x, ax);
    double s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) s += (ax[k] - b[k]) * (ax[k] - b[k]);
    return std::sqrt(s);
}

inline void check_anchored(const CsrMatrix& a, const std::vector<char>& anchored) {
    std::vector<char> seen(a.rows, 0);
    std::deque<std::size_t> queue;
    for (std::size_t r = 0; r < a.rows; ++r) {
        if (anchored[r]) {
            seen[r] = 1;
            queue.push_back(r);
        }
    }
    while (!queue.empty()) {
        const std::size_t r = queue.front();
        queue.pop_front();
        for (std::size_t k = a.row_start[r]; k < a.row_start[r + 1]; ++k) {
            if (!seen[a.col[k]]) {
                seen[a.col[k]] = 1;
                queue.push_back(a.col[k]);
            }
        }
    }
    for (char s : seen) {
        if (!s) throw SingularSystem("a group of unknowns has no Dirichlet anchor (pure Neumann component)");
    }
}

/// Jacobi-preconditioned CG on -A, which is symmetric positive definite.
inline SolveReport solve_cg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x, double tol,
                            std::size_t max_iter) {
    const std::size_t n = a.rows;
    SolveReport rep;
    rep.method = SolveMethod::cg;
    const double bnorm = norm2(b);
    const double target = bnorm > 0.0 ? tol * bnorm : tol;
    std::vector<double> inv_diag(n);
    for (std::size_t r = 0; r < n; ++r) inv_diag[r] = 1.0 / -a.at(r, r);

    // The recursive residual drifts away from the true one, so restart
    // from the true residual until that one meets the target as well.
    std::vector<double> ax, res(n), z(n), p(n), q;
    for (;;) {
        a.multiply(x, ax);
        for (std::size_t r = 0; r < n; ++r) res[r] = ax[r] - b[r];  // residual of -A x = -b
        double rnorm = norm2(res);
        if (rnorm <= target || rep.iterations >= max_iter) break;
        for (std::size_t r = 0; r < n; ++r) p[r] = z[r] = inv_diag[r] * res[r];
        double rz = 0.0;
        for (std::size_t r = 0; r < n; ++r) rz += res[r] * z[r];

        while (rnorm > 0.5 * target && rep.iterations < max_iter) {
            a.multiply(p, q);
            double pq = 0.0;
            for (std::size_t r = 0; r < n; ++r) pq -= p[r] * q[r];
            if (!(pq > 0.0)) throw SingularSystem("conjugate gradient breakdown: matrix not definite");
            const double step = rz / pq;
            for (std::size_t r = 0; r < n; ++r) {
                x[r] += step * p[r];
                res[r] += step * q[r];
            }
            ++rep.iterations;
            rnorm = norm2(res);
            double rz_next = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                z[r] = inv_diag[r] * res[r];
                rz_next += res[r] * z[r];
            }
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t r = 0; r < n; ++r) p[r] = z[r] + beta * p[r];
        }
    }
    rep.residual_norm = residual_norm(a, x, b) / (bnorm > 0.0 ? bnorm : 1.0);
    return rep;
}

inline SolveReport solve_sor(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x, double tol,
                             std::size_t max_iter, double omega) {
    SolveReport rep;
    rep.method = SolveMethod::sor;
    const double bnorm = norm2(b);
    const double scale = bnorm > 0.0 ? bnorm : 1.0;
    rep.residual_norm = residual_norm(a, x, b) / scale;
    while (rep.residual_norm > tol && rep.iterations < max_iter) {
        for (int sweep = 0; sweep < 10 && rep.iterations < max_iter; ++sweep, ++rep.iterations) {
            for (std::size_t r = 0; r < a.rows; ++r) {
                double off = 0.0;
                double diag = 0.0;
                for (std::size_t k = a.row_start[r]; k < a.row_start[r + 1]; ++k) {
                    if (a.col[k] == r) {
                        diag = a.val[k];
                    } else {
                        off += a.val[k] * x[a.col[k]];
                    }
                }
                x[r] += omega * ((b[r] - off) / diag - x[r]);
            }
        }
        rep.residual_norm = residual_norm(a, x, b) / scale;
    }
    return rep;
}

inline SolveReport solve_dense(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x) {
    constexpr std::size_t limit = 6000;
    if (a.rows > limit) throw SolverError("dense direct solve limited to 6000 unknowns");
    const auto n = static_cast<Eigen::Index>(a.rows);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t k = a.row_start[r]; k < a.row_start[r + 1]; ++k) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a.col[k])) = -a.val[k];
        }
        rhs(static_cast<Eigen::Index>(r)) = -b[r];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw SingularSystem("dense Cholesky factorization failed");
    const Eigen::VectorXd sol = llt.solve(rhs);
    for (std::size_t r = 0; r < a.rows; ++r) x[r] = sol(static_cast<Eigen::Index>(r));
    SolveReport rep;
    rep.method = SolveMethod::dense_direct;
    rep.iterations = 1;
    const double bnorm = norm2(b);
    rep.residual_norm = residual_norm(a, x, b) / (bnorm > 0.0 ? bnorm : 1.0);
    return rep;
}

inline SolveReport solve_linear(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                                const SolverOptions& opt, double omega) {
    const std::size_t max_iter = opt.max_iter > 0
                                     ? opt.max_iter
                                     : static_cast<std::size_t>(std::ceil(50.0 * std::sqrt(double(a.rows))));
    switch (opt.method) {
        case SolveMethod::cg: return solve_cg(a, b, x, opt.tol, max_iter);
        case SolveMethod::sor: return solve_sor(a, b, x, opt.tol, max_iter, omega);
        case SolveMethod::dense_direct: return solve_dense(a, b, x);
    }
    return {};
}

}  // namespace detail

struct SolveOutput {
    ScalarGrid field;
    SolveReport report;
    /// Conductor-interior nodes of Neumann conductors: harmonic fill only, no physical meaning.
    std::vector<std::size_t> immaterial_nodes;
};

/// Solve an assembled system and expand the result to a full node grid.
/// Neumann-conductor interiors are filled by a Laplace solve with the
/// surface values as Dirichlet data.
inline SolveOutput solve(const LinearSystem& sys, const SolverOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw SolverError("solver tolerance must be positive");
    if (sys.unknowns() == 0) throw EmptySystem("no unknown nodes to solve for");
    const auto t0 = std::chrono::steady_clock::now();
    detail::check_anchored(sys.matrix, sys.anchored);

    const GridSpec& g = sys.grid;
    const double omega = 2.0 / (1.0 + std::sin(M_PI / std::max(g.nx(), g.ny())));
    std::vector<double> x(sys.unknowns(), 0.0);
    SolveReport rep = detail::solve_linear(sys.matrix, sys.rhs, x, opt, omega);

    SolveOutput out{sys.fixed, rep, sys.fill_nodes};
    for (std::size_t r = 0; r < x.size(); ++r) out.field.values()[sys.unknown_to_node[r]] = x[r];

    if (!sys.fill_nodes.empty()) {
        std::vector<std::int64_t> idx(g.node_count(), -1);
        for (std::size_t r = 0; r < sys.fill_nodes.size(); ++r) idx[sys.fill_nodes[r]] = static_cast<std::int64_t>(r);
        CsrMatrix a;
        a.rows = sys.fill_nodes.size();
        std::vector<double> b(a.rows, 0.0);
        const double ihx2 = 1.0 / (g.hx() * g.hx());
        const double ihy2 = 1.0 / (g.hy() * g.hy());
        for (std::size_t r = 0; r < a.rows; ++r) {
            const std::size_t k = sys.fill_nodes[r];
            const int i = static_cast<int>(k % static_cast<std::size_t>(g.nx()));
            const int j = static_cast<int>(k / static_cast<std::size_t>(g.nx()));
            std::vector<std::pair<std::size_t, double>> entries{{r, -2.0 * (ihx2 + ihy2)}};
            const std::array<std::tuple<int, int, double>, 4> nbs{
                {{i, j - 1, ihy2}, {i - 1, j, ihx2}, {i + 1, j, ihx2}, {i, j + 1, ihy2}}};
            for (auto [a_i, a_j, w] : nbs) {
                const std::int64_t u = idx[g.index(a_i, a_j)];
                if (u >= 0) {
                    entries.emplace_back(static_cast<std::size_t>(u), w);
                } else {
                    b[r] -= w * out.field(a_i, a_j);
                }
            }
            std::sort(entries.begin(), entries.end());
            for (auto [c, v] : entries) {
                a.col.push_back(c);
                a.val.push_back(v);
            }
            a.row_start.push_back(a.col.size());
        }
        std::vector<double> fill(a.rows, 0.0);
        SolverOptions fill_opt = opt;
        if (fill_opt.method == SolveMethod::dense_direct && a.rows > 6000) fill_opt.method = SolveMethod::cg;
        const SolveReport fill_rep = detail::solve_linear(a, b, fill, fill_opt, omega);
        if (fill_rep.residual_norm > opt.tol) {
            throw NoConvergence("conductor interior fill did not converge", fill_rep);
        }
        for (std::size_t r = 0; r < a.rows; ++r) out.field.values()[sys.fill_nodes[r]] = fill[r];
    }

    out.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.report.residual_norm > opt.tol) {
        throw NoConvergence("solver stopped after " + std::to_string(out.report.iterations) +
                                " iterations with relative residual " + format_residual(out.report.residual_norm),
                            out.report);
    }
    return out;
}

}  // namespace squidfd
