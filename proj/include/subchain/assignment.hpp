// SPDX-License-Identifier: Apache-2.0
//
// subchain: sub-chain beam codebook design for quantized mmWave phased arrays
// Copyright (C) 2026 The subchain authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace subchain
{
    template <typename T>
    using Matrix2D = std::vector<std::vector<T>>;

    template <typename T>
    struct Assignment
    {
        std::vector<std::size_t> perm; // row i -> column perm[i]
        T total{};
    };

    namespace detail
    {
        template <typename T>
        void check_square(const Matrix2D<T> &m)
        {
            for (const auto &row : m)
                if (row.size() != m.size())
                    throw std::invalid_argument("assignment: benefit matrix must be square");
        }

        // Kuhn-Munkres with potentials, O(n^3), minimizing the total cost.
        // Uses 1-based sentinel column 0 for the augmenting path search.
        template <typename T>
        std::vector<std::size_t> hungarian_min(const Matrix2D<T> &cost)
        {
            const std::size_t n = cost.size();
            const T inf = std::numeric_limits<T>::max() / 4;
            std::vector<T> u(n + 1, T{}), v(n + 1, T{}), minv(n + 1);
            std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
            std::vector<char> used(n + 1);
            for (std::size_t i = 1; i <= n; ++i)
            {
                p[0] = i;
                std::size_t j0 = 0;
                std::fill(minv.begin(), minv.end(), inf);
                std::fill(used.begin(), used.end(), 0);
                do
                {
                    used[j0] = 1;
                    const std::size_t i0 = p[j0];
                    T delta = inf;
                    std::size_t j1 = 0;
                    for (std::size_t j = 1; j <= n; ++j)
                    {
                        if (used[j])
                            continue;
                        const T cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                        if (cur < minv[j])
                        {
                            minv[j] = cur;
                            way[j] = j0;
                        }
                        if (minv[j] < delta)
                        {
                            delta = minv[j];
                            j1 = j;
                        }
                    }
                    for (std::size_t j = 0; j <= n; ++j)
                    {
                        if (used[j])
                        {
                            u[p[j]] += delta;
                            v[j] -= delta;
                        }
                        else
                            minv[j] -= delta;
                    }
                    j0 = j1;
                } while (p[j0] != 0);
                do
                {
                    const std::size_t j1 = way[j0];
                    p[j0] = p[j1];
                    j0 = j1;
                } while (j0 != 0);
            }
            std::vector<std::size_t> perm(n);
            for (std::size_t j = 1; j <= n; ++j)
                perm[p[j] - 1] = j - 1;
            return perm;
        }

        template <typename T>
        T optimum_value(const Matrix2D<T> &benefit)
        {
            if (benefit.empty())
                return T{};
            T top = benefit[0][0];
            for (const auto &r : benefit)
                for (T x : r)
                    top = std::max(top, x);
            Matrix2D<T> cost(benefit.size(), std::vector<T>(benefit.size()));
            for (std::size_t i = 0; i < benefit.size(); ++i)
                for (std::size_t j = 0; j < benefit.size(); ++j)
                    cost[i][j] = top - benefit[i][j];
            const auto perm = hungarian_min(cost);
            T total{};
            for (std::size_t i = 0; i < perm.size(); ++i)
                total += benefit[i][perm[i]];
            return total;
        }
    } // namespace detail

    // Exact maximum-total-benefit assignment on an integer benefit matrix. Among all optimal
    // permutations the lexicographically smallest one is returned: rows are fixed one at a time to
    // the smallest column that still admits an optimal completion.
    template <std::integral T>
    Assignment<T> max_weight_assignment(const Matrix2D<T> &benefit)
    {
        detail::check_square(benefit);
        const std::size_t n = benefit.size();
        Assignment<T> out;
        out.perm.resize(n);
        if (n == 0)
            return out;

        const T optimum = detail::optimum_value(benefit);
        std::vector<std::size_t> free_cols(n);
        for (std::size_t j = 0; j < n; ++j)
            free_cols[j] = j;

        T remaining = optimum;
        for (std::size_t i = 0; i < n; ++i)
        {
            bool placed = false;
            for (std::size_t c = 0; c < free_cols.size(); ++c)
            {
                const std::size_t col = free_cols[c];
                // sub-problem: rows i+1.., columns free_cols \ {col}
                Matrix2D<T> sub;
                sub.reserve(n - i - 1);
                for (std::size_t r = i + 1; r < n; ++r)
                {
                    std::vector<T> row;
                    row.reserve(free_cols.size() - 1);
                    for (std::size_t cc = 0; cc < free_cols.size(); ++cc)
                        if (cc != c)
                            row.push_back(benefit[r][free_cols[cc]]);
                    sub.push_back(std::move(row));
                }
                const T rest = detail::optimum_value(sub);
                if (benefit[i][col] + rest == remaining)
                {
                    out.perm[i] = col;
                    remaining = rest;
                    free_cols.erase(free_cols.begin() + static_cast<std::ptrdiff_t>(c));
                    placed = true;
                    break;
                }
            }
            if (!placed)
                throw std::logic_error("max_weight_assignment: no optimal completion found");
        }
        out.total = optimum;
        return out;
    }
} // namespace subchain
