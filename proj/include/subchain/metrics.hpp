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

#include "subchain/assignment.hpp"
#include "subchain/beam.hpp"
#include "subchain/designers.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace subchain
{
    // Fraction of grid directions on which two best-beam maps agree.
    inline double matching_rate(const BestBeamMap &a, const BestBeamMap &b)
    {
        if (a.size() != b.size() || a.size() == 0)
            throw std::invalid_argument("matching_rate: best-beam maps sampled on different grids");
        std::size_t hits = 0;
        for (std::size_t n = 0; n < a.size(); ++n)
            hits += a.index[n] == b.index[n];
        return static_cast<double>(hits) / static_cast<double>(a.size());
    }

    inline double matching_rate(const EFieldSet &ef, const CodebookFamily &fam, std::size_t L1, std::size_t L2)
    {
        const Codebook &a = fam.at(L1);
        const Codebook &b = fam.at(L2);
        if (a.size() != b.size())
            throw std::invalid_argument("matching_rate: levels have different codebook sizes");
        return matching_rate(composite_pattern(ef, a), composite_pattern(ef, b));
    }

    inline std::vector<std::vector<std::size_t>> dominance_sets(const EFieldSet &ef, const Codebook &cb) { return partition_coverage(ef, cb); }

    // |D_{i,1} intersect D_{j,2}| for every beam pair.
    inline Matrix2D<long long> benefit_matrix(const BestBeamMap &a, const BestBeamMap &b, std::size_t n_beams)
    {
        if (a.size() != b.size())
            throw std::invalid_argument("benefit_matrix: best-beam maps sampled on different grids");
        Matrix2D<long long> c(n_beams, std::vector<long long>(n_beams, 0));
        for (std::size_t n = 0; n < a.size(); ++n)
            ++c.at(a.index[n]).at(b.index[n]);
        return c;
    }

    struct RepairResult
    {
        std::vector<std::size_t> perm; // beam i of the first codebook pairs with beam perm[i] of the second
        double identity_rate = 0.0;
        double repaired_rate = 0.0;
        long long total_benefit = 0;
    };

    inline RepairResult repair_pairing(const BestBeamMap &a, const BestBeamMap &b, std::size_t n_beams)
    {
        const auto c = benefit_matrix(a, b, n_beams);
        const auto asg = max_weight_assignment(c);
        RepairResult r;
        r.perm = asg.perm;
        r.total_benefit = asg.total;
        r.identity_rate = matching_rate(a, b);
        r.repaired_rate = static_cast<double>(asg.total) / static_cast<double>(a.size());
        return r;
    }

    // Hungarian re-pairing of cb2's rows against cb1 on coverage-overlap counts.
    // cb2.permuted(result.perm) is the relabeled codebook.
    inline RepairResult repair_pairing(const EFieldSet &ef, const Codebook &cb1, const Codebook &cb2)
    {
        if (cb1.size() != cb2.size())
            throw std::invalid_argument("repair_pairing: codebook sizes differ (" + std::to_string(cb1.size()) + " vs " + std::to_string(cb2.size()) + ")");
        return repair_pairing(composite_pattern(ef, cb1), composite_pattern(ef, cb2), cb1.size());
    }

    inline constexpr double dbi_floor = -60.0;

    inline double to_dbi(double linear) { return linear > 0.0 ? std::max(10.0 * std::log10(linear), dbi_floor) : dbi_floor; }

    // Empirical CDF of composite gain (dBi) over equally weighted grid directions.
    class CoverageCdf
    {
    public:
        CoverageCdf() = default;

        explicit CoverageCdf(std::span<const double> linear_gains)
        {
            if (linear_gains.empty())
                throw std::invalid_argument("CoverageCdf: no samples");
            sorted_.reserve(linear_gains.size());
            for (double g : linear_gains)
                sorted_.push_back(to_dbi(g));
            std::sort(sorted_.begin(), sorted_.end());
        }

        std::size_t size() const { return sorted_.size(); }
        std::span<const double> sorted_dbi() const { return sorted_; }

        // Cumulative fraction at the i-th sorted sample, (i + 1) / N.
        double fraction(std::size_t i) const { return static_cast<double>(i + 1) / static_cast<double>(sorted_.size()); }

        // Nearest-rank percentile, p in [0, 100]: the smallest sample whose cumulative fraction >= p / 100.
        double percentile(double p) const
        {
            if (!(p >= 0.0 && p <= 100.0))
                throw std::invalid_argument("CoverageCdf::percentile: p must be in [0, 100]");
            const double n = static_cast<double>(sorted_.size());
            const double rank = std::ceil(p / 100.0 * n - 1e-9);
            const std::size_t idx = rank < 1.0 ? 0 : std::min(sorted_.size() - 1, static_cast<std::size_t>(rank) - 1);
            return sorted_[idx];
        }

        double median() const { return percentile(50.0); }

    private:
        std::vector<double> sorted_;
    };

    inline CoverageCdf coverage_cdf(const BestBeamMap &m) { return CoverageCdf(m.gains); }

    inline CoverageCdf coverage_cdf(const EFieldSet &ef, const Codebook &cb)
    {
        if (cb.empty())
            throw std::invalid_argument("coverage_cdf: empty codebook");
        return coverage_cdf(composite_pattern(ef, cb));
    }

    // Entry (i, j) = similarity of candidate beam j to reference beam i.
    inline Matrix2D<double> similarity_matrix(const EFieldSet &ef, const Codebook &cb_ref, const Codebook &cb_cand)
    {
        std::vector<std::vector<double>> cand;
        for (const auto &b : cb_cand.beams())
        {
            check_dimensions(ef, b);
            cand.push_back(beam_pattern(ef, b));
        }
        Matrix2D<double> s(cb_ref.size(), std::vector<double>(cb_cand.size(), 0.0));
        for (std::size_t i = 0; i < cb_ref.size(); ++i)
        {
            check_dimensions(ef, cb_ref[i]);
            const auto g = beam_pattern(ef, cb_ref[i]);
            double den = 0.0;
            for (double x : g)
                den += x * x;
            if (!(den > 0.0))
                throw std::domain_error("similarity_matrix: reference beam " + std::to_string(i) + " has an identically zero pattern");
            for (std::size_t j = 0; j < cand.size(); ++j)
                s[i][j] = similarity_score(g, cand[j]);
        }
        return s;
    }

    // Gains of several arrays' codebooks in one concatenated beam index space (array 0 first).
    inline GainTable phone_gain_table(std::span<const EFieldSet> arrays, std::span<const Codebook> codebooks)
    {
        if (arrays.size() != codebooks.size() || arrays.empty())
            throw std::invalid_argument("phone_gain_table: need one codebook per array");
        GainTable t;
        for (std::size_t a = 0; a < arrays.size(); ++a)
        {
            if (a > 0 && !arrays[a].grid().same_points(arrays[0].grid()))
                throw std::invalid_argument("phone_gain_table: arrays are sampled on different grids");
            t = GainTable::concat(t, gain_table(arrays[a], codebooks[a]));
        }
        return t;
    }

    // Pairwise matching rates (identity and Hungarian-repaired) across activation levels.
    struct MatchingReport
    {
        std::vector<std::size_t> levels; // descending
        Matrix2D<double> rate;
        Matrix2D<double> repaired;
        Matrix2D<std::vector<std::size_t>> perm;

        std::size_t slot(std::size_t level) const
        {
            auto it = std::find(levels.begin(), levels.end(), level);
            if (it == levels.end())
                throw std::out_of_range("MatchingReport: level " + std::to_string(level) + " not present");
            return static_cast<std::size_t>(it - levels.begin());
        }

        double p(std::size_t L1, std::size_t L2) const { return rate[slot(L1)][slot(L2)]; }
        double p_repaired(std::size_t L1, std::size_t L2) const { return repaired[slot(L1)][slot(L2)]; }
    };

    inline MatchingReport matching_report(const std::map<std::size_t, BestBeamMap> &maps, std::size_t n_beams)
    {
        MatchingReport r;
        for (auto it = maps.rbegin(); it != maps.rend(); ++it)
            r.levels.push_back(it->first);
        const std::size_t n = r.levels.size();
        r.rate.assign(n, std::vector<double>(n, 0.0));
        r.repaired.assign(n, std::vector<double>(n, 0.0));
        r.perm.assign(n, std::vector<std::vector<std::size_t>>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
            {
                const auto &a = maps.at(r.levels[i]);
                const auto &b = maps.at(r.levels[j]);
                const auto rep = repair_pairing(a, b, n_beams);
                r.rate[i][j] = rep.identity_rate;
                r.repaired[i][j] = rep.repaired_rate;
                r.perm[i][j] = rep.perm;
            }
        return r;
    }

    inline MatchingReport matching_report(const EFieldSet &ef, const CodebookFamily &fam)
    {
        std::map<std::size_t, BestBeamMap> maps;
        for (std::size_t la : fam.levels())
            maps.emplace(la, composite_pattern(ef, fam.at(la)));
        return matching_report(maps, fam.beam_count());
    }
} // namespace subchain
