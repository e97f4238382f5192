#ifndef BERGMAN_MULTI_INDEX_HPP
#define BERGMAN_MULTI_INDEX_HPP

#include <cstdint>
#include <numeric>
#include <vector>

namespace bergman {

/// Multi-index alpha in N^n.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(int n) : e_(n, 0) {}
    MultiIndex(std::initializer_list<int> v) : e_(v) {}

    static MultiIndex unit(int n, int i) {
        MultiIndex m(n);
        m.e_[i] = 1;
        return m;
    }

    int size() const { return int(e_.size()); }
    int operator[](int i) const { return e_[i]; }
    int& operator[](int i) { return e_[i]; }

    int total() const { return std::accumulate(e_.begin(), e_.end(), 0); }
    bool is_zero() const { return total() == 0; }

    MultiIndex plus(int i, int d = 1) const {
        MultiIndex m(*this);
        m.e_[i] += d;
        return m;
    }

    friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.e_ == b.e_; }
    friend bool operator<(const MultiIndex& a, const MultiIndex& b) { return a.e_ < b.e_; }

    const std::vector<int>& raw() const { return e_; }

private:
    std::vector<int> e_;
};

} // namespace bergman

#endif
