#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace majorca {

/// Exact cover by dancing links. Items are 0..universe-1; each cover is a list
/// of row indices into `subsets`, in the order the search picked them.
class ExactCover {
public:
    ExactCover(int universe, const std::vector<std::vector<int>>& subsets);

    /// Calls `visit` for every cover until it returns false.
    void search(const std::function<bool(const std::vector<int>&)>& visit);

private:
    bool recurse(const std::function<bool(const std::vector<int>&)>& visit);
    void cover(int c);
    void uncover(int c);

    std::vector<int> left_, right_, up_, down_, col_, row_, size_;
    std::vector<int> partial_;
    int header_ = 0;
};

std::vector<std::vector<int>> exact_covers(int universe, const std::vector<std::vector<int>>& subsets,
                                           std::size_t limit = SIZE_MAX);

} // namespace majorca
