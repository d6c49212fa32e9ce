#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ammfut {

/// Dense scenario-by-period matrix stored row-major (one row per scenario).
template <class T>
class ScenarioGrid {
public:
    ScenarioGrid() = default;
    ScenarioGrid(std::size_t scenarios, std::size_t periods, T fill = T{})
        : scenarios_(scenarios), periods_(periods), data_(scenarios * periods, fill) {}

    T& operator()(std::size_t w, std::size_t t) { return data_[w * periods_ + t]; }
    const T& operator()(std::size_t w, std::size_t t) const { return data_[w * periods_ + t]; }

    std::size_t scenarios() const { return scenarios_; }
    std::size_t periods() const { return periods_; }
    bool empty() const { return data_.empty(); }

    std::span<T> row(std::size_t w) { return {data_.data() + w * periods_, periods_}; }
    std::span<const T> row(std::size_t w) const { return {data_.data() + w * periods_, periods_}; }

    const std::vector<T>& values() const { return data_; }
    std::vector<T>& values() { return data_; }

    bool operator==(const ScenarioGrid&) const = default;

private:
    std::size_t scenarios_ = 0;
    std::size_t periods_ = 0;
    std::vector<T> data_;
};

using ScenarioField = ScenarioGrid<double>;
using PriceField = ScenarioGrid<double>;

}  // namespace ammfut
