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

#include <set>

using namespace subchain;

namespace
{
    // Independent brute force over every activation pattern and phase assignment.
    double brute_force(const Eigen::MatrixXcd &q, std::size_t L, std::size_t la, int bits)
    {
        double best = -1.0;
        const std::size_t levels = std::size_t{1} << bits;
        std::vector<std::size_t> mask(L, 0);
        std::fill(mask.end() - static_cast<std::ptrdiff_t>(la), mask.end(), 1);
        std::vector<std::vector<std::size_t>> subsets;
        do
        {
            std::vector<std::size_t> s;
            for (std::size_t l = 0; l < L; ++l)
                if (mask[l])
                    s.push_back(l);
            subsets.push_back(s);
        } while (std::next_permutation(mask.begin(), mask.end()));
        for (const auto &h : subsets)
            for (const auto &v : subsets)
            {
                std::vector<std::size_t> ports = h;
                for (auto e : v)
                    ports.push_back(L + e);
                std::size_t total = 1;
                for (std::size_t i = 0; i < ports.size(); ++i)
                    total *= levels;
                for (std::size_t code = 0; code < total; ++code)
                {
                    std::vector<cplx> w(2 * L, cplx(0, 0));
                    std::size_t c = code;
                    for (auto p : ports)
                    {
                        w[p] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(c % levels) / static_cast<double>(levels));
                        c /= levels;
                    }
                    best = std::max(best, test::quadratic(q, w));
                }
            }
        return best;
    }
} // namespace

TEST(EnumerateActivations, CountsAndOrder)
{
    EXPECT_EQ(enumerate_activations(5, 5).size(), 1u);
    EXPECT_EQ(enumerate_activations(5, 3).size(), 100u);
    const auto p = enumerate_activations(3, 1);
    ASSERT_EQ(p.size(), 9u);
    EXPECT_EQ(std::set<ActivationPattern>(p.begin(), p.end()).size(), 9u);
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    EXPECT_EQ(p.front().h, (std::vector<std::size_t>{0}));
    EXPECT_EQ(p.back().v, (std::vector<std::size_t>{2}));
    for (const auto &a : enumerate_activations(5, 2))
    {
        EXPECT_EQ(a.h.size(), 2u);
        EXPECT_EQ(a.v.size(), 2u);
    }
    EXPECT_THROW(enumerate_activations(3, 0), std::invalid_argument);
    EXPECT_THROW(enumerate_activations(3, 4), std::invalid_argument);
    EXPECT_EQ(binomial(5, 2), 10u);
}

TEST(CyclicAscent, IdentityObjectiveValueIsActiveCount)
{
    const QuadraticObjective obj(Eigen::MatrixXcd::Identity(10, 10));
    for (std::size_t la = 1; la <= 5; ++la)
    {
        const auto pat = enumerate_activations(5, la).front();
        const auto r = cyclic_phase_ascent(obj, pat, 5, 4, 1);
        EXPECT_NEAR(r.objective, 2.0 * static_cast<double>(la), 1e-12);
        EXPECT_EQ(r.beam.active_per_pol(), la);
    }
}

TEST(CyclicAscent, MatchesOracleOnDeskScale)
{
    std::mt19937_64 rng(2024);
    int hits = 0;
    for (int t = 0; t < 100; ++t)
    {
        const QuadraticObjective obj(test::random_psd(3, rng));
        const auto pat = enumerate_activations(3, 2)[static_cast<std::size_t>(t) % 9];
        const auto a = cyclic_phase_ascent(obj, pat, 2, 16, static_cast<std::uint64_t>(t));
        const auto o = exhaustive_oracle(obj, pat, 2);
        EXPECT_LE(a.objective, o.objective * (1 + 1e-12));
        hits += a.objective >= o.objective * (1 - 1e-9);
    }
    EXPECT_GE(hits, 95);
}

TEST(CyclicAscent, FullArrayTraceIsMonotone)
{
    const auto ef = test::small_array(5, 2000);
    Eigen::MatrixXcd q;
    const auto dirs = detail::all_directions(ef);
    std::vector<double> w(dirs.size(), 1.0);
    accumulate_response(ef, dirs, w, q);
    const QuadraticObjective obj(q);
    for (const auto &pat : enumerate_activations(5, 4))
    {
        std::vector<RestartTrace> tr;
        AscentOptions opt;
        const auto r = cyclic_phase_ascent(obj, pat, 5, opt, 99, 0, &tr);
        ASSERT_EQ(tr.size(), 16u);
        for (const auto &t : tr)
        {
            EXPECT_TRUE(t.converged);
            EXPECT_LT(t.sweeps.size(), 200u);
            for (std::size_t i = 1; i < t.updates.size(); ++i)
                EXPECT_GE(t.updates[i], t.updates[i - 1] - 1e-9 * std::abs(t.updates[i - 1]));
        }
        EXPECT_EQ(r.beam.active_per_pol(), 4u);
    }
}

TEST(CyclicAscent, SeedsAreReproducible)
{
    std::mt19937_64 rng(1);
    const QuadraticObjective obj(test::random_psd(4, rng));
    const auto pat = enumerate_activations(4, 3)[5];
    const auto a = cyclic_phase_ascent(obj, pat, 4, 8, 123);
    const auto b = cyclic_phase_ascent(obj, pat, 4, 8, 123);
    EXPECT_EQ(a.beam, b.beam);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_THROW(cyclic_phase_ascent(obj, pat, 4, 0, 1), std::invalid_argument);
}

TEST(QuadraticObjectiveType, HermitianPolicy)
{
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(2, 2);
    q(0, 1) = cplx(1.0, 0.0);
    EXPECT_THROW(QuadraticObjective{q}, std::invalid_argument);
    const QuadraticObjective s(q, HermitianPolicy::symmetrize);
    EXPECT_TRUE(s.symmetrized());
    EXPECT_EQ(s.matrix()(0, 1), cplx(0.5, 0.0));
    EXPECT_THROW(QuadraticObjective(Eigen::MatrixXcd::Identity(3, 3)), std::invalid_argument);
}

TEST(ExhaustiveOracle, PhaseFixingCountsAndGuard)
{
    std::mt19937_64 rng(3);
    const QuadraticObjective obj(test::random_psd(2, rng));
    const auto r = exhaustive_oracle(obj, enumerate_activations(2, 1).front(), 1);
    EXPECT_EQ(r.evaluated, 2u);
    const QuadraticObjective big(test::random_psd(5, rng));
    EXPECT_THROW(exhaustive_oracle(big, enumerate_activations(5, 3).front(), 5), std::invalid_argument);
    EXPECT_EQ(exhaustive_oracle(big, enumerate_activations(5, 2).front(), 3).evaluated, std::size_t{1} << 9);
}

TEST(ExhaustiveOracle, TwoPortQuantizationBound)
{
    std::mt19937_64 rng(4);
    for (int bits = 1; bits <= 5; ++bits)
        for (int t = 0; t < 20; ++t)
        {
            const auto Q = test::random_psd(1, rng);
            const QuadraticObjective obj(Q);
            const auto r = exhaustive_oracle(obj, enumerate_activations(1, 1).front(), bits);
            const double a = Q(0, 0).real(), b = Q(1, 1).real(), c = std::abs(Q(0, 1));
            const double continuous = a + b + 2 * c;
            EXPECT_LE(r.objective, continuous + 1e-12);
            EXPECT_GE(r.objective, a + b + 2 * c * std::cos(std::numbers::pi / std::pow(2.0, bits)) - 1e-12);
        }
}

TEST(SolveOverActivations, MatchesBruteForceAtTinyScale)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t)
    {
        const auto Q = test::random_psd(3, rng);
        const QuadraticObjective obj(Q);
        const auto r = solve_over_activations(obj, 3, 1, 2, 16, static_cast<std::uint64_t>(t));
        EXPECT_NEAR(r.objective, brute_force(Q, 3, 1, 2), 1e-9);
        EXPECT_NEAR(test::quadratic(Q, r.beam.weights()), r.objective, 1e-9);
    }
}

TEST(SolveOverActivations, DominatesEveryPatternAndIsDeterministic)
{
    std::mt19937_64 rng(12);
    const QuadraticObjective obj(test::random_psd(5, rng, 3));
    ActivationSearchOptions one, many;
    one.n_restarts = many.n_restarts = 4;
    many.threads = 4;
    const auto a = solve_over_activations(obj, 5, 3, 3, one, 77);
    const auto b = solve_over_activations(obj, 5, 3, 3, many, 77);
    EXPECT_EQ(a.beam, b.beam);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.pattern_index, b.pattern_index);
    const auto pats = enumerate_activations(5, 3);
    AscentOptions ao;
    ao.n_restarts = 4;
    for (std::size_t p = 0; p < pats.size(); ++p)
        EXPECT_GE(a.objective, cyclic_phase_ascent(obj, pats[p], 3, ao, 77, p).objective);
    EXPECT_EQ(a.beam.active_per_pol(), 3u);
}

TEST(SolveOverActivations, FullActivationIsOneAscent)
{
    std::mt19937_64 rng(13);
    const QuadraticObjective obj(test::random_psd(4, rng));
    const auto a = solve_over_activations(obj, 4, 4, 5, 16, 5);
    const auto b = cyclic_phase_ascent(obj, enumerate_activations(4, 4).front(), 5, 16, 5);
    EXPECT_EQ(a.beam, b.beam);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_THROW(solve_over_activations(obj, 5, 2, 3, 4, 1), std::invalid_argument);
}

TEST(SolveTrace, JsonLinesDump)
{
    std::mt19937_64 rng(14);
    const QuadraticObjective obj(test::random_psd(3, rng));
    std::vector<RestartTrace> tr;
    AscentOptions ao;
    ao.n_restarts = 2;
    cyclic_phase_ascent(obj, enumerate_activations(3, 2).front(), 3, ao, 1, 0, &tr);
    const auto text = ascent_trace_jsonl(tr, 4);
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0, sweeps = 0;
    while (std::getline(is, line))
    {
        const auto j = json::parse(line);
        ++n;
        sweeps += j.at("stage") == "sweep";
        EXPECT_TRUE(j.at("objective").is_number());
    }
    EXPECT_EQ(n, tr[0].updates.size() + tr[1].updates.size() + tr[0].sweeps.size() + tr[1].sweeps.size());
    EXPECT_EQ(sweeps, tr[0].sweeps.size() + tr[1].sweeps.size());
}
