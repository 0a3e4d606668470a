#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "squidfd/errors.hpp"

namespace squidfd {

/// Uniform rectangular node lattice. Node (i, j) sits at
/// (x_min + i*h_x, y_min + j*h_y) with 0 <= i <= x_divisions.
struct GridSpec {
    double x_min{-1.0};
    double x_max{1.0};
    double y_min{-1.0};
    double y_max{1.0};
    int x_divisions{128};
    int y_divisions{128};

    static constexpr int min_divisions = 8;

    void validate() const {
        if (!(x_max > x_min) || !(y_max > y_min)) {
            throw GeometryError("grid extents must satisfy max > min");
        }
        if (x_divisions < min_divisions || y_divisions < min_divisions) {
            throw GeometryError("grid needs at least 8 divisions per axis");
        }
    }

    [[nodiscard]] double hx() const { return (x_max - x_min) / x_divisions; }
    [[nodiscard]] double hy() const { return (y_max - y_min) / y_divisions; }
    [[nodiscard]] int nx() const { return x_divisions + 1; }
    [[nodiscard]] int ny() const { return y_divisions + 1; }
    [[nodiscard]] std::size_t node_count() const {
        return static_cast<std::size_t>(nx()) * static_cast<std::size_t>(ny());
    }
    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx()) +
               static_cast<std::size_t>(i);
    }
    [[nodiscard]] double x(int i) const { return x_min + i * hx(); }
    [[nodiscard]] double y(int j) const { return y_min + j * hy(); }
    [[nodiscard]] bool contains(int i, int j) const {
        return i >= 0 && j >= 0 && i < nx() && j < ny();
    }
    [[nodiscard]] bool on_boundary(int i, int j) const {
        return i == 0 || j == 0 || i == x_divisions || j == y_divisions;
    }

    /// Grid-line index of coordinate v, if v lies on a grid line (relative tolerance 1e-9 of h).
    [[nodiscard]] std::optional<int> column_of(double v) const { return line_of(v, x_min, hx()); }
    [[nodiscard]] std::optional<int> row_of(double v) const { return line_of(v, y_min, hy()); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    static std::optional<int> line_of(double v, double origin, double h) {
        const double s = (v - origin) / h;
        const double r = std::round(s);
        if (std::abs(s - r) > 1e-9) return std::nullopt;
        return static_cast<int>(r);
    }
};

/// Node-indexed scalar field on a grid, row-major with x varying fastest.
class ScalarGrid {
public:
    ScalarGrid() = default;
    explicit ScalarGrid(GridSpec g, double fill = 0.0)
        : grid_(g), values_(g.node_count(), fill) {}
    ScalarGrid(GridSpec g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
        if (values_.size() != grid_.node_count()) {
            throw InconsistentGrids("value count does not match grid dimensions");
        }
    }

    [[nodiscard]] const GridSpec& grid() const { return grid_; }
    [[nodiscard]] double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }

    [[nodiscard]] bool all_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    ScalarGrid& operator*=(double c) {
        for (double& v : values_) v *= c;
        return *this;
    }
    ScalarGrid& operator+=(const ScalarGrid& other) {
        require_same_grid(other);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
        return *this;
    }
    friend ScalarGrid operator*(double c, ScalarGrid g) { return g *= c; }
    friend ScalarGrid operator+(ScalarGrid a, const ScalarGrid& b) { return a += b; }

    friend bool operator==(const ScalarGrid&, const ScalarGrid&) = default;

    void require_same_grid(const ScalarGrid& other) const {
        if (!(grid_ == other.grid_)) throw InconsistentGrids("scalar grids live on different grids");
    }

private:
    GridSpec grid_{};
    std::vector<double> values_;
};

/// Vector field sampled on nodes, stored as two component grids.
struct VectorGrid {
    ScalarGrid x;
    ScalarGrid y;
};

}  // namespace squidfd
