#pragma once

#include <array>
#include <stdexcept>

#include "acis/grid.hpp"

namespace acis {

/// Element of the order-8 symmetry group of the square.
/// Acts on an image as: optional left-right mirror first, then `quarter_turns`
/// counter-clockwise 90 degree rotations (numpy/torch rot90 orientation).
struct Dihedral {
    int quarter_turns = 0;  // 0..3
    bool mirror = false;

    static constexpr Dihedral from_index(int index) { return {index % 4, index >= 4}; }
    constexpr int index() const { return quarter_turns + (mirror ? 4 : 0); }

    constexpr Dihedral inverse() const {
        // A mirror composed with a rotation is a reflection and therefore its own inverse.
        return mirror ? *this : Dihedral{(4 - quarter_turns) % 4, false};
    }

    constexpr bool preserves_shape_of_nonsquare() const { return quarter_turns % 2 == 0; }

    bool operator==(const Dihedral&) const = default;
};

inline constexpr std::array<Dihedral, 8> kDihedralGroup = {
    Dihedral::from_index(0), Dihedral::from_index(1), Dihedral::from_index(2), Dihedral::from_index(3),
    Dihedral::from_index(4), Dihedral::from_index(5), Dihedral::from_index(6), Dihedral::from_index(7)};

/// Subgroup that keeps a non-square image's shape: identity, half turn, mirror, vertical flip.
inline constexpr std::array<Dihedral, 4> kShapePreservingSubgroup = {
    Dihedral{0, false}, Dihedral{2, false}, Dihedral{0, true}, Dihedral{2, true}};

template <typename T>
Grid<T> rotate_ccw(const Grid<T>& in) {
    // out(i, j) = in(j, W-1-i)
    Grid<T> out(in.cols(), in.rows());
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) {
            out(i, j) = in(j, in.cols() - 1 - i);
        }
    }
    return out;
}

template <typename T>
Grid<T> mirror_columns(const Grid<T>& in) {
    Grid<T> out(in.rows(), in.cols());
    for (int r = 0; r < in.rows(); ++r) {
        for (int c = 0; c < in.cols(); ++c) {
            out(r, c) = in(r, in.cols() - 1 - c);
        }
    }
    return out;
}

template <typename T>
Grid<T> apply(Dihedral g, const Grid<T>& in) {
    Grid<T> out = g.mirror ? mirror_columns(in) : in;
    for (int k = 0; k < g.quarter_turns; ++k) {
        out = rotate_ccw(out);
    }
    return out;
}

}  // namespace acis
