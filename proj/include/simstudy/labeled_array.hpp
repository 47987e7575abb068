#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simstudy/error.hpp"
#include "simstudy/varlist.hpp"

namespace simstudy {

/// Dense N-dimensional array with named dimensions and level labels.
/// Cells are stored in odometer order, first dimension fastest.
template <class T>
class LabeledArray {
public:
    LabeledArray() = default;

    LabeledArray(std::vector<Dim> dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data))
    {
        if (data_.size() != cell_count(dims_))
            throw Error("labeled array: " + std::to_string(data_.size()) + " cells for a shape of " +
                        std::to_string(cell_count(dims_)));
    }

    LabeledArray(std::vector<Dim> dims, const T& fill)
        : dims_(std::move(dims)), data_(cell_count(dims_), fill)
    {
    }

    static std::size_t cell_count(const std::vector<Dim>& dims)
    {
        std::size_t n = 1;
        for (const auto& d : dims) n *= d.size();
        return n;
    }

    const std::vector<Dim>& dims() const { return dims_; }
    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return dims_.size(); }

    std::vector<std::size_t> shape() const
    {
        std::vector<std::size_t> s;
        for (const auto& d : dims_) s.push_back(d.size());
        return s;
    }

    std::vector<std::string> dim_names() const
    {
        std::vector<std::string> s;
        for (const auto& d : dims_) s.push_back(d.name);
        return s;
    }

    bool has_dim(std::string_view name) const
    {
        return std::any_of(dims_.begin(), dims_.end(), [&](const Dim& d) { return d.name == name; });
    }

    std::size_t dim_index(std::string_view name) const
    {
        for (std::size_t k = 0; k < dims_.size(); ++k)
            if (dims_[k].name == name) return k;
        throw Error("no dimension named '" + std::string(name) + "' (have: " + join_names() + ")");
    }

    std::size_t level_index(std::size_t dim, std::string_view label) const
    {
        const auto& lv = dims_.at(dim).levels;
        auto it = std::find(lv.begin(), lv.end(), label);
        if (it == lv.end())
            throw Error("dimension '" + dims_[dim].name + "' has no level '" + std::string(label) + "'");
        return static_cast<std::size_t>(it - lv.begin());
    }

    std::size_t linear(std::span<const std::size_t> idx) const
    {
        std::size_t lin = 0;
        for (std::size_t k = dims_.size(); k-- > 0;) lin = lin * dims_[k].size() + idx[k];
        return lin;
    }

    std::vector<std::size_t> multi(std::size_t lin) const
    {
        std::vector<std::size_t> idx(dims_.size());
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            idx[k] = lin % dims_[k].size();
            lin /= dims_[k].size();
        }
        return idx;
    }

    const T& at(std::span<const std::size_t> idx) const { return data_[linear(idx)]; }
    T& at(std::span<const std::size_t> idx) { return data_[linear(idx)]; }

    /// Fixes `dim` at `label` and drops that dimension.
    LabeledArray slice(std::string_view dim, std::string_view label) const
    {
        const std::size_t k = dim_index(dim);
        const std::size_t l = level_index(k, label);
        std::vector<Dim> nd = dims_;
        nd.erase(nd.begin() + static_cast<std::ptrdiff_t>(k));
        std::vector<T> out;
        out.reserve(data_.size() / dims_[k].size());
        for (std::size_t lin = 0; lin < data_.size(); ++lin)
            if (multi(lin)[k] == l) out.push_back(data_[lin]);
        return LabeledArray(std::move(nd), std::move(out));
    }

    /// Reorders dimensions; `order` must name every dimension once.
    LabeledArray permute(const std::vector<std::string>& order) const
    {
        if (order.size() != dims_.size()) throw Error("permute: expected " + std::to_string(dims_.size()) + " names");
        std::vector<std::size_t> perm;
        std::vector<Dim> nd;
        for (const auto& n : order) {
            perm.push_back(dim_index(n));
            nd.push_back(dims_[perm.back()]);
        }
        std::vector<std::size_t> sorted = perm;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw Error("permute: duplicated dimension name");
        LabeledArray out(nd, std::vector<T>(data_.size()));
        std::vector<std::size_t> src(dims_.size());
        for (std::size_t lin = 0; lin < data_.size(); ++lin) {
            auto dst = out.multi(lin);
            for (std::size_t k = 0; k < perm.size(); ++k) src[perm[k]] = dst[k];
            out.data_[lin] = at(src);
        }
        return out;
    }

    /// Applies `fn` to the cells that share each combination of `keep` dims.
    /// Samples are gathered in storage order.
    template <class Fn>
    auto margin(const std::vector<std::string>& keep, Fn fn) const
        -> LabeledArray<std::invoke_result_t<Fn, const std::vector<T>&>>
    {
        using R = std::invoke_result_t<Fn, const std::vector<T>&>;
        std::vector<std::size_t> kept;
        std::vector<Dim> nd;
        for (const auto& n : keep) {
            kept.push_back(dim_index(n));
            nd.push_back(dims_[kept.back()]);
        }
        const std::size_t ncell = cell_count(nd);
        std::vector<std::vector<T>> groups(ncell);
        std::vector<std::size_t> key(kept.size());
        LabeledArray<char> shape_only(nd, char{});
        for (std::size_t lin = 0; lin < data_.size(); ++lin) {
            auto idx = multi(lin);
            for (std::size_t k = 0; k < kept.size(); ++k) key[k] = idx[kept[k]];
            groups[shape_only.linear(key)].push_back(data_[lin]);
        }
        std::vector<R> out;
        out.reserve(ncell);
        for (const auto& g : groups) out.push_back(fn(g));
        return LabeledArray<R>(std::move(nd), std::move(out));
    }

    template <class Fn>
    auto map(Fn fn) const -> LabeledArray<std::invoke_result_t<Fn, const T&>>
    {
        using R = std::invoke_result_t<Fn, const T&>;
        std::vector<R> out;
        out.reserve(data_.size());
        for (const auto& x : data_) out.push_back(fn(x));
        return LabeledArray<R>(dims_, std::move(out));
    }

    /// Replaces the level labels of one dimension.
    LabeledArray relabel(std::string_view dim, std::vector<std::string> labels) const
    {
        const std::size_t k = dim_index(dim);
        if (labels.size() != dims_[k].size()) throw Error("relabel: wrong number of labels for '" + dims_[k].name + "'");
        LabeledArray out = *this;
        out.dims_[k].levels = std::move(labels);
        return out;
    }

    friend bool operator==(const LabeledArray&, const LabeledArray&) = default;

private:
    std::string join_names() const
    {
        std::string s;
        for (const auto& d : dims_) s += (s.empty() ? "" : ", ") + d.name;
        return s;
    }

    std::vector<Dim> dims_;
    std::vector<T> data_;
};

}  // namespace simstudy
