#pragma once

#include <cmath>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include <hopir/ranked_list.hpp>

#include "oracle/cases.hpp"

namespace testutil {

/// Same length and scores within `tol` position by position. Ids must agree
/// position by position except inside runs of oracle scores closer than
/// 1e-12, where rounding decides the order and only the id sets must agree.
inline void expect_same_ranking(const hopir::RankedList& got, const oracle::Ranking& want, double tol = 1e-9)
{
    ASSERT_EQ(got.size(), want.size());
    std::size_t i = 0;
    while (i < want.size()) {
        std::size_t j = i + 1;
        while (j < want.size() && std::abs(want[j].second - want[j - 1].second) < 1e-12) {
            ++j;
        }
        std::set<std::string> a;
        std::set<std::string> b;
        for (std::size_t r = i; r < j; ++r) {
            EXPECT_NEAR(got[r].score, want[r].second, tol) << "rank " << r;
            a.insert(got[r].id);
            b.insert(want[r].first);
        }
        EXPECT_EQ(a, b) << "ranks " << i << ".." << j - 1;
        i = j;
    }
}

}  // namespace testutil
