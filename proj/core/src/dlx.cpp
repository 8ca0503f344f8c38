#include "majorca/dlx.hpp"

#include <algorithm>

#include "majorca/error.hpp"

namespace majorca {

ExactCover::ExactCover(int universe, const std::vector<std::vector<int>>& subsets) {
    // node 0..universe-1: column headers, node universe: root
    header_ = universe;
    const int n = universe + 1;
    left_.resize(n);
    right_.resize(n);
    up_.resize(n);
    down_.resize(n);
    col_.resize(n);
    row_.assign(n, -1);
    size_.assign(universe, 0);
    for (int i = 0; i < n; ++i) {
        left_[i] = (i + n - 1) % n;
        right_[i] = (i + 1) % n;
        up_[i] = down_[i] = col_[i] = i;
    }
    for (std::size_t r = 0; r < subsets.size(); ++r) {
        std::vector<int> items = subsets[r];
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        int first = -1;
        for (int c : items) {
            if (c < 0 || c >= universe) throw Error("exact cover: item outside the universe");
            int x = static_cast<int>(left_.size());
            left_.push_back(x);
            right_.push_back(x);
            col_.push_back(c);
            row_.push_back(static_cast<int>(r));
            up_.push_back(up_[c]);
            down_.push_back(c);
            down_[up_[c]] = x;
            up_[c] = x;
            ++size_[c];
            if (first < 0) {
                first = x;
            } else {
                left_[x] = left_[first];
                right_[x] = first;
                right_[left_[first]] = x;
                left_[first] = x;
            }
        }
    }
}

void ExactCover::cover(int c) {
    right_[left_[c]] = right_[c];
    left_[right_[c]] = left_[c];
    for (int i = down_[c]; i != c; i = down_[i]) {
        for (int j = right_[i]; j != i; j = right_[j]) {
            down_[up_[j]] = down_[j];
            up_[down_[j]] = up_[j];
            --size_[col_[j]];
        }
    }
}

void ExactCover::uncover(int c) {
    for (int i = up_[c]; i != c; i = up_[i]) {
        for (int j = left_[i]; j != i; j = left_[j]) {
            ++size_[col_[j]];
            down_[up_[j]] = j;
            up_[down_[j]] = j;
        }
    }
    right_[left_[c]] = c;
    left_[right_[c]] = c;
}

bool ExactCover::recurse(const std::function<bool(const std::vector<int>&)>& visit) {
    if (right_[header_] == header_) return visit(partial_);
    int c = right_[header_];
    for (int j = right_[c]; j != header_; j = right_[j]) {
        if (size_[j] < size_[c]) c = j;
    }
    if (size_[c] == 0) return true;
    cover(c);
    bool go_on = true;
    for (int r = down_[c]; r != c && go_on; r = down_[r]) {
        partial_.push_back(row_[r]);
        for (int j = right_[r]; j != r; j = right_[j]) cover(col_[j]);
        go_on = recurse(visit);
        for (int j = left_[r]; j != r; j = left_[j]) uncover(col_[j]);
        partial_.pop_back();
    }
    uncover(c);
    return go_on;
}

void ExactCover::search(const std::function<bool(const std::vector<int>&)>& visit) {
    partial_.clear();
    recurse(visit);
}

std::vector<std::vector<int>> exact_covers(int universe, const std::vector<std::vector<int>>& subsets,
                                           std::size_t limit) {
    std::vector<std::vector<int>> out;
    if (limit == 0) return out;
    ExactCover ec(universe, subsets);
    ec.search([&](const std::vector<int>& cover) {
        out.push_back(cover);
        return out.size() < limit;
    });
    return out;
}

} // namespace majorca
