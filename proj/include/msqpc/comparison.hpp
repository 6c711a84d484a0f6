#pragma once

#include <stdexcept>
#include <vector>

#include "msqpc/qudit.hpp"

namespace msqpc {

// Residue modulo d. Carries its modulus so cross-dimension arithmetic is
// rejected instead of silently wrapping.
class ModDigit {
public:
    ModDigit(int value, Dimension d) : value_(value), d_(d) {
        if (value < 0 || value >= d.value()) {
            throw std::domain_error("digit out of range [0, d)");
        }
    }

    int value() const { return value_; }
    Dimension dim() const { return d_; }

private:
    int value_;
    Dimension d_;
};

// Private input digit, restricted to [0, h] with h = (d-1)/2 so that the
// three-way classification below is unambiguous. Out-of-range inputs are
// rejected rather than reduced: wrapping would corrupt comparisons silently.
class PrivateDigit {
public:
    PrivateDigit(int value, Dimension d) : value_(value), d_(d) {
        if (value < 0 || value > d.h()) {
            throw std::domain_error("private digit out of range [0, h]");
        }
    }

    int value() const { return value_; }
    Dimension dim() const { return d_; }

private:
    int value_;
    Dimension d_;
};

enum class Relation : int { Less = -1, Equal = 0, Greater = 1 };

inline Relation negated(Relation r) { return Relation(-int(r)); }

namespace detail {
inline void require_same_dim(Dimension a, Dimension b) {
    if (a != b) throw std::domain_error("modulus mismatch");
}
}  // namespace detail

inline ModDigit mod_add(ModDigit a, ModDigit b) {
    detail::require_same_dim(a.dim(), b.dim());
    return ModDigit((a.value() + b.value()) % a.dim().value(), a.dim());
}

inline ModDigit mod_sub(ModDigit a, ModDigit b) {
    detail::require_same_dim(a.dim(), b.dim());
    const int d = a.dim().value();
    return ModDigit((a.value() - b.value() + d) % d, a.dim());
}

// c = m (+) k (+) p: one-time-pad style masking of the private digit by the
// shared key and the per-run measurement digit.
inline ModDigit encode(ModDigit m, ModDigit k, PrivateDigit p) {
    detail::require_same_dim(m.dim(), k.dim());
    detail::require_same_dim(m.dim(), p.dim());
    return mod_add(mod_add(m, k), ModDigit(p.value(), p.dim()));
}

// f = c (-) m.
inline ModDigit decode(ModDigit c, ModDigit m) { return mod_sub(c, m); }

// R = f_n (-) f_n'.
inline ModDigit pairwise_difference(ModDigit f_n, ModDigit f_other) {
    return mod_sub(f_n, f_other);
}

// Three-way split of R in [0, 2h]: the key and measurement digits cancel,
// leaving R = (p_n - p_n') mod d, which lands in (h, 2h] exactly when
// p_n < p_n'.
inline Relation classify(ModDigit r) {
    const int h = r.dim().h();
    if (r.value() == 0) return Relation::Equal;
    if (r.value() <= h) return Relation::Greater;
    return Relation::Less;
}

// Ground-truth comparator.
inline Relation direct_oracle(PrivateDigit a, PrivateDigit b) {
    detail::require_same_dim(a.dim(), b.dim());
    if (a.value() < b.value()) return Relation::Less;
    if (a.value() > b.value()) return Relation::Greater;
    return Relation::Equal;
}

// N x N relation matrix for one comparison index. Diagonal is Equal;
// antisymmetry (entry(n,n') == -entry(n',n)) is enforced at construction.
class RelationMatrix {
public:
    explicit RelationMatrix(int users)
        : users_(users), entries_(std::size_t(users) * std::size_t(users),
                                  Relation::Equal) {
        if (users < 2) throw std::domain_error("need at least 2 users");
    }

    int users() const { return users_; }

    Relation at(int n, int other) const {
        return entries_[std::size_t(n) * users_ + std::size_t(other)];
    }

    void set_pair(int n, int other, Relation r) {
        entries_[std::size_t(n) * users_ + std::size_t(other)] = r;
        entries_[std::size_t(other) * users_ + std::size_t(n)] = negated(r);
    }

    friend bool operator==(const RelationMatrix& a, const RelationMatrix& b) {
        return a.users_ == b.users_ && a.entries_ == b.entries_;
    }

private:
    int users_;
    std::vector<Relation> entries_;
};

// Full per-index pipeline: encode each user's digit, decode at TP1, form
// pairwise differences and classify. m and p are indexed by user.
inline RelationMatrix compare_pipeline(const std::vector<ModDigit>& m, ModDigit k,
                                       const std::vector<PrivateDigit>& p) {
    if (m.size() != p.size() || m.size() < 2) {
        throw std::domain_error("need one m and one p per user, at least 2 users");
    }
    const int users = int(m.size());
    std::vector<ModDigit> f;
    f.reserve(m.size());
    for (int n = 0; n < users; ++n) {
        f.push_back(decode(encode(m[std::size_t(n)], k, p[std::size_t(n)]),
                           m[std::size_t(n)]));
    }
    RelationMatrix result(users);
    for (int n = 0; n < users; ++n) {
        for (int other = n + 1; other < users; ++other) {
            result.set_pair(n, other,
                            classify(pairwise_difference(f[std::size_t(n)],
                                                         f[std::size_t(other)])));
        }
    }
    return result;
}

}  // namespace msqpc
