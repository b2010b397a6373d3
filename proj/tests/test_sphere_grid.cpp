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

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace subchain;

namespace
{
    // Nearest-neighbor geodesic distances by brute force.
    std::vector<double> nearest_neighbor(const DirectionGrid &g)
    {
        std::vector<double> nn(g.size(), std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = i + 1; j < g.size(); ++j)
            {
                const double d = geodesic_distance(g[i], g[j]);
                nn[i] = std::min(nn[i], d);
                nn[j] = std::min(nn[j], d);
            }
        return nn;
    }
} // namespace

TEST(FibonacciGrid, SinglePointSitsOnEquator)
{
    const auto g = fibonacci_grid(1);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_DOUBLE_EQ(g[0].theta, std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(g[0].phi, 0.0);
}

TEST(FibonacciGrid, DefaultSizeAndDeterminism)
{
    const auto a = fibonacci_grid(10001);
    const auto b = fibonacci_grid(10001);
    EXPECT_EQ(a.size(), 10001u);
    ASSERT_TRUE(a.same_points(b));
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a[i].theta, b[i].theta);
        EXPECT_EQ(a[i].phi, b[i].phi);
    }
}

TEST(FibonacciGrid, MatchesSpiralFormula)
{
    const std::size_t N = 37;
    const auto g = fibonacci_grid(N);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t i = 0; i < N; ++i)
    {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(N);
        double phi = std::fmod(2.0 * std::numbers::pi * static_cast<double>(i) * gr, 2.0 * std::numbers::pi);
        EXPECT_NEAR(g[i].theta, std::acos(z), 1e-12) << i;
        EXPECT_NEAR(std::cos(g[i].phi), std::cos(phi), 1e-9) << i;
        EXPECT_NEAR(std::sin(g[i].phi), std::sin(phi), 1e-9) << i;
        EXPECT_TRUE(is_valid(g[i]));
    }
}

TEST(FibonacciGrid, MinimumSpacingAtThousandPoints)
{
    const auto nn = nearest_neighbor(fibonacci_grid(1000));
    const double bound = 0.5 * std::sqrt(4.0 * std::numbers::pi / 1000.0);
    EXPECT_GE(*std::min_element(nn.begin(), nn.end()), bound);
}

TEST(FibonacciGrid, NearestNeighborRatioBounded)
{
    for (std::size_t n : {100u, 1000u})
    {
        const auto nn = nearest_neighbor(fibonacci_grid(n));
        const auto [lo, hi] = std::minmax_element(nn.begin(), nn.end());
        EXPECT_LE(*hi / *lo, 2.5) << "n = " << n;
    }
}

TEST(FibonacciGrid, RejectsZero) { EXPECT_THROW(fibonacci_grid(0), std::invalid_argument); }

TEST(Cartesian, AxesAndUnitNorm)
{
    const auto z = cartesian({0.0, 0.0});
    EXPECT_NEAR(z[0], 0.0, 1e-15);
    EXPECT_NEAR(z[1], 0.0, 1e-15);
    EXPECT_NEAR(z[2], 1.0, 1e-15);
    const auto x = cartesian({std::numbers::pi / 2, 0.0});
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_NEAR(x[2], 0.0, 1e-15);
    const auto y = cartesian({std::numbers::pi / 2, std::numbers::pi / 2});
    EXPECT_NEAR(y[0], 0.0, 1e-15);
    EXPECT_NEAR(y[1], 1.0, 1e-15);
    for (const auto &d : fibonacci_grid(2000).points())
        EXPECT_NEAR(std::sqrt(dot(cartesian(d), cartesian(d))), 1.0, 1e-12);
}

TEST(DirectionGrid, RejectsInvalidPoints)
{
    EXPECT_THROW(DirectionGrid(std::vector<Direction>{}), std::invalid_argument);
    EXPECT_THROW(DirectionGrid({{4.0, 0.0}}), std::invalid_argument);
    EXPECT_THROW(DirectionGrid({{1.0, 2.0 * std::numbers::pi}}), std::invalid_argument);
    EXPECT_THROW(DirectionGrid({{1.0, 0.5}, {1.0, 0.5}}), std::invalid_argument);
}

TEST(DirectionGrid, UniformWeights)
{
    const auto g = fibonacci_grid(8);
    EXPECT_DOUBLE_EQ(g.weight(), 1.0 / 8.0);
}

TEST(GridCsv, RoundTripIsExact)
{
    const auto g = fibonacci_grid(257);
    std::stringstream ss;
    write_grid_csv(ss, g);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "index,theta_rad,phi_rad");
    const auto back = read_grid_csv(ss);
    ASSERT_EQ(back.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        EXPECT_EQ(back[i].theta, g[i].theta);
        EXPECT_EQ(back[i].phi, g[i].phi);
    }
}

TEST(GridCsv, RejectsBadIndexAndHeader)
{
    std::stringstream bad_header("idx,theta,phi\n0,1,1\n");
    EXPECT_THROW(read_grid_csv(bad_header), data_error);
    std::stringstream gap("index,theta_rad,phi_rad\n0,1,1\n2,1,2\n");
    EXPECT_THROW(read_grid_csv(gap), data_error);
}
