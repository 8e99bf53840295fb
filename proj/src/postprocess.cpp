#include "acis/postprocess.hpp"

#include <algorithm>
#include <vector>

#include "acis/errors.hpp"

namespace acis {

BinaryMask binarize(const ProbabilityMap& map, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ValidationError("binarize threshold must lie in (0, 1)");
    }
    BinaryMask mask(map.rows(), map.cols(), 0);
    const auto in = map.values();
    auto out = mask.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = in[i] > threshold ? 1 : 0;
    }
    return mask;
}

RegionList extract_regions(const BinaryMask& mask, int min_size) {
    if (min_size < 0) {
        throw ValidationError("min_size must be non-negative");
    }
    Grid<std::uint8_t> seen(mask.rows(), mask.cols(), 0);
    RegionList regions;
    std::vector<Pixel> stack;
    for (int r = 0; r < mask.rows(); ++r) {
        for (int c = 0; c < mask.cols(); ++c) {
            if (mask(r, c) == 0 || seen(r, c) != 0) {
                continue;
            }
            std::vector<Pixel> component;
            stack.push_back({r, c});
            seen(r, c) = 1;
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                component.push_back(p);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = p.row + dr;
                        const int cc = p.col + dc;
                        if (mask.contains(rr, cc) && mask(rr, cc) != 0 && seen(rr, cc) == 0) {
                            seen(rr, cc) = 1;
                            stack.push_back({rr, cc});
                        }
                    }
                }
            }
            if (static_cast<int>(component.size()) >= min_size && !component.empty()) {
                std::sort(component.begin(), component.end());
                regions.emplace_back(std::move(component));
            }
        }
    }
    return regions;
}

}  // namespace acis
