#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acis {

/// Dense row-major 2D array. Used for frames, summaries, masks and probability maps.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
    Grid(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != checked_size(rows, cols)) {
            throw std::invalid_argument("Grid: data size " + std::to_string(data_.size()) +
                                        " does not match " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int r, int c) noexcept { return data_[index(r, c)]; }
    const T& operator()(int r, int c) const noexcept { return data_[index(r, c)]; }

    bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::span<T> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)}; }
    std::span<const T> row(int r) const noexcept {
        return {data_.data() + index(r, 0), static_cast<std::size_t>(cols_)};
    }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    bool same_shape(const auto& other) const noexcept {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    /// Copy of rows [first, last).
    Grid rows_slice(int first, int last) const {
        if (first < 0 || last > rows_ || first > last) {
            throw std::out_of_range("Grid::rows_slice: bad row range");
        }
        return Grid(last - first, cols_,
                    std::vector<T>(data_.begin() + index(first, 0), data_.begin() + index(last, 0)));
    }

    /// Copy of the window with top-left (top, left) and the given extent.
    Grid crop(int top, int left, int height, int width) const {
        if (top < 0 || left < 0 || height < 0 || width < 0 || top + height > rows_ ||
            left + width > cols_) {
            throw std::out_of_range("Grid::crop: window outside grid");
        }
        Grid out(height, width);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                out(r, c) = (*this)(top + r, left + c);
            }
        }
        return out;
    }

    template <typename U>
    Grid<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out[i] = static_cast<U>(data_[i]);
        }
        return Grid<U>(rows_, cols_, std::move(out));
    }

    bool operator==(const Grid&) const = default;

private:
    static std::size_t checked_size(int rows, int cols) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("Grid: negative dimensions");
        }
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
    std::size_t index(int r, int c) const noexcept {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

/// H×W grid of {0,1}; 1 marks neuron pixels.
using BinaryMask = Grid<std::uint8_t>;
/// 16-bit camera frame.
using Frame = Grid<std::uint16_t>;

/// Pads with `fill` on the bottom/right so both extents are multiples of `divisor`.
template <typename T>
Grid<T> pad_to_multiple(const Grid<T>& grid, int divisor, T fill = T{}) {
    auto up = [divisor](int n) { return (n + divisor - 1) / divisor * divisor; };
    Grid<T> out(up(grid.rows()), up(grid.cols()), fill);
    for (int r = 0; r < grid.rows(); ++r) {
        for (int c = 0; c < grid.cols(); ++c) {
            out(r, c) = grid(r, c);
        }
    }
    return out;
}

}  // namespace acis
