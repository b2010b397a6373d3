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

#include "subchain/beam.hpp"
#include "subchain/solvers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace subchain
{
    namespace method_tag
    {
        inline constexpr const char *fullchain_kmeans = "fullchain-kmeans";
        inline constexpr const char *greedy = "greedy-init";
        inline constexpr const char *sim_max = "sim-max";
        inline constexpr const char *sc_max = "sc-max";
        inline constexpr const char *bc_sc_max = "bc-sc-max";
    } // namespace method_tag

    struct DesignConfig
    {
        std::size_t K = 7;
        int phase_bits = 5;
        std::size_t L = 5;
        std::size_t l_active = 5;
        std::size_t n_restarts = 16;
        std::uint64_t seed = 0;
        std::size_t kmeans_max_iters = 100;
        double kmeans_tol = 1e-6;
        std::size_t pool_stride = 8; // greedy candidates come from every pool_stride-th grid point
        std::size_t threads = 1;     // 0 = hardware concurrency; results do not depend on it

        void validate() const
        {
            if (K == 0)
                throw config_error("DesignConfig: K must be at least 1");
            if (L == 0 || l_active == 0 || l_active > L)
                throw config_error("DesignConfig: need 1 <= L_A <= L, got L_A = " + std::to_string(l_active) + ", L = " + std::to_string(L));
            if (phase_bits < 1 || phase_bits > max_phase_bits)
                throw config_error("DesignConfig: phase_bits must be in [1, " + std::to_string(max_phase_bits) + "]");
            if (n_restarts == 0)
                throw config_error("DesignConfig: n_restarts must be at least 1");
            if (pool_stride == 0)
                throw config_error("DesignConfig: pool_stride must be at least 1");
            if (!(kmeans_tol >= 0.0) || !std::isfinite(kmeans_tol))
                throw config_error("DesignConfig: kmeans_tol must be a finite non-negative number");
        }

        DesignConfig at_level(std::size_t la) const
        {
            DesignConfig c = *this;
            c.l_active = la;
            return c;
        }

        ActivationSearchOptions search_options() const
        {
            ActivationSearchOptions o;
            o.n_restarts = n_restarts;
            o.threads = threads;
            return o;
        }
    };

    // Seed-splitting keys; sub-seeds are derive_seed(cfg.seed, {key, ...}).
    namespace seed_key
    {
        inline constexpr std::uint64_t pool = 0x504f4f4c;   // "POOL"
        inline constexpr std::uint64_t kmeans = 0x4b4d4e53; // "KMNS"
        inline constexpr std::uint64_t reseed = 0x52534544; // "RSED"
        inline constexpr std::uint64_t row = 0x524f5753;    // "ROWS"
    } // namespace seed_key

    inline void check_design_inputs(const EFieldSet &ef, const DesignConfig &cfg)
    {
        cfg.validate();
        if (ef.n_pol_elements() != cfg.L)
            throw config_error("design: config has L = " + std::to_string(cfg.L) + " but the E-field set has " +
                               std::to_string(ef.n_pol_elements()) + " elements per polarization");
        if (cfg.K > ef.n_points())
            throw config_error("design: K = " + std::to_string(cfg.K) + " exceeds the number of grid directions " + std::to_string(ef.n_points()));
    }

    // P2 objective: mean over the grid of the best beam's gain.
    inline double coverage_objective(const GainTable &t)
    {
        const auto m = best_beam_map(t);
        double s = 0.0;
        for (double g : m.gains)
            s += g;
        return s / static_cast<double>(m.size());
    }

    inline double coverage_objective(const EFieldSet &ef, const Codebook &cb) { return coverage_objective(gain_table(ef, cb)); }

    // Eq. score: sum_n G_n B_n / sum_n G_n^2, with G the reference pattern.
    inline double similarity_score(std::span<const double> reference, std::span<const double> candidate)
    {
        if (reference.size() != candidate.size())
            throw std::invalid_argument("similarity_score: patterns sampled on different grids");
        double num = 0.0, den = 0.0;
        for (std::size_t n = 0; n < reference.size(); ++n)
        {
            num += reference[n] * candidate[n];
            den += reference[n] * reference[n];
        }
        if (!(den > 0.0))
            throw std::domain_error("similarity_score: reference pattern is identically zero");
        return num / den;
    }

    inline double similarity_score(const EFieldSet &ef, const BeamWeights &reference, const BeamWeights &candidate)
    {
        check_dimensions(ef, reference);
        check_dimensions(ef, candidate);
        return similarity_score(beam_pattern(ef, reference), beam_pattern(ef, candidate));
    }

    // Best quantized beam for sum_n weight_n M_n over the listed directions, at cfg.l_active.
    inline SolveResult solve_weighted(const EFieldSet &ef, std::span<const std::size_t> directions, std::span<const double> weights,
                                      const DesignConfig &cfg, std::uint64_t seed)
    {
        Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ef.n_antennas()), static_cast<Eigen::Index>(ef.n_antennas()));
        accumulate_response(ef, directions, weights, q);
        const QuadraticObjective obj(std::move(q));
        return solve_over_activations(obj, cfg.L, cfg.l_active, cfg.phase_bits, cfg.search_options(), seed);
    }

    // Row k of a row-aligned design: solve_weighted with the row's sub-seed.
    inline SolveResult solve_row(const EFieldSet &ef, std::span<const std::size_t> directions, std::span<const double> weights,
                                 const DesignConfig &cfg, std::size_t row)
    {
        return solve_weighted(ef, directions, weights, cfg, derive_seed(cfg.seed, seed_key::row, row));
    }

    namespace detail
    {
        inline std::vector<std::size_t> all_directions(const EFieldSet &ef)
        {
            std::vector<std::size_t> d(ef.n_points());
            for (std::size_t n = 0; n < d.size(); ++n)
                d[n] = n;
            return d;
        }

        // Grid direction with the lowest composite gain among directions that carry any response
        // energy; nullopt if no beam is given or every direction is dead.
        inline std::optional<std::size_t> worst_served(const EFieldSet &ef, std::span<const BeamWeights> beams)
        {
            std::optional<std::size_t> worst;
            double worst_gain = std::numeric_limits<double>::infinity();
            for (std::size_t n = 0; n < ef.n_points(); ++n)
            {
                if (!(ef.response_energy(n) > 0.0))
                    continue;
                double g = 0.0;
                for (const auto &b : beams)
                    g = std::max(g, detail::gain_at(ef.direction_block(n), b.weights()));
                if (g < worst_gain)
                {
                    worst_gain = g;
                    worst = n;
                }
            }
            return worst;
        }

        inline BeamWeights reseed_beam(const EFieldSet &ef, std::span<const BeamWeights> served_by, const DesignConfig &cfg, std::uint64_t seed)
        {
            auto n = worst_served(ef, served_by);
            const std::size_t dir = n.value_or(0);
            const std::size_t d[1] = {dir};
            return solve_weighted(ef, d, {}, cfg, seed).beam;
        }
    } // namespace detail

    // Greedy candidates: the single-direction optimum at every pool_stride-th grid direction with
    // nonzero response (1 restart), duplicates removed, grid order kept.
    inline std::vector<BeamWeights> candidate_pool(const EFieldSet &ef, const DesignConfig &cfg)
    {
        check_design_inputs(ef, cfg);
        DesignConfig one = cfg;
        one.n_restarts = 1;
        std::vector<BeamWeights> pool;
        std::set<std::vector<std::optional<std::size_t>>> seen;
        for (std::size_t n = 0; n < ef.n_points(); n += cfg.pool_stride)
        {
            if (!(ef.response_energy(n) > 0.0))
                continue;
            const std::size_t d[1] = {n};
            auto res = solve_weighted(ef, d, {}, one, derive_seed(cfg.seed, seed_key::pool, n));
            if (seen.insert(res.beam.phase_indices()).second)
                pool.push_back(std::move(res.beam));
        }
        return pool;
    }

    struct GreedyReport
    {
        std::vector<double> objective; // P2 after each addition
        std::vector<std::size_t> chosen;
    };

    // Adds, K times, the pool beam with the largest increase of the P2 objective. Pool order breaks ties.
    inline Codebook greedy_init(const EFieldSet &ef, const DesignConfig &cfg, std::span<const BeamWeights> pool, GreedyReport *report = nullptr)
    {
        check_design_inputs(ef, cfg);
        std::vector<BeamWeights> uniq;
        std::set<std::vector<std::optional<std::size_t>>> seen;
        for (const auto &b : pool)
        {
            check_dimensions(ef, b);
            if (b.active_per_pol() != cfg.l_active || b.phase_bits() != cfg.phase_bits)
                throw std::invalid_argument("greedy_init: pool beam does not match (L_A, b) of the configuration");
            if (seen.insert(b.phase_indices()).second)
                uniq.push_back(b);
        }
        if (uniq.empty())
            throw std::invalid_argument("greedy_init: candidate pool is empty");
        if (uniq.size() < cfg.K)
            throw std::invalid_argument("greedy_init: only " + std::to_string(uniq.size()) + " distinct candidates for K = " + std::to_string(cfg.K));

        std::vector<std::vector<double>> pat;
        pat.reserve(uniq.size());
        for (const auto &b : uniq)
            pat.push_back(beam_pattern(ef, b));

        const std::size_t np = ef.n_points();
        std::vector<double> current(np, 0.0);
        std::vector<char> used(uniq.size(), 0);
        std::vector<BeamWeights> chosen;
        double total = 0.0;
        for (std::size_t step = 0; step < cfg.K; ++step)
        {
            std::size_t arg = uniq.size();
            double best_total = -1.0;
            for (std::size_t c = 0; c < uniq.size(); ++c)
            {
                if (used[c])
                    continue;
                double s = 0.0;
                for (std::size_t n = 0; n < np; ++n)
                    s += std::max(current[n], pat[c][n]);
                if (s > best_total)
                {
                    best_total = s;
                    arg = c;
                }
            }
            used[arg] = 1;
            for (std::size_t n = 0; n < np; ++n)
                current[n] = std::max(current[n], pat[arg][n]);
            total = best_total;
            chosen.push_back(uniq[arg]);
            if (report)
            {
                report->chosen.push_back(arg);
                report->objective.push_back(total / static_cast<double>(np));
            }
        }
        return Codebook(std::move(chosen), cfg.L, cfg.l_active, cfg.phase_bits, method_tag::greedy, cfg.seed);
    }

    struct KMeansReport
    {
        std::vector<double> objective; // P2 of the initial codebook, then after every iteration
        std::size_t iterations = 0;
        std::size_t reseeds = 0;
        std::string stop_reason;
    };

    // Two-step K-Means on the P2 objective at cfg.l_active:
    //   assignment: each direction goes to its best beam;
    //   update: each beam is re-solved on the sum of its region's response matrices, and kept only
    //   if the new beam is better on that region. Empty regions are reseeded toward the worst-served
    //   direction. Stops on an unchanged assignment, relative gain < kmeans_tol, or max iterations.
    inline Codebook kmeans_refine(const EFieldSet &ef, const Codebook &init, const DesignConfig &cfg, const std::string &tag,
                                  KMeansReport *report = nullptr)
    {
        check_design_inputs(ef, cfg);
        if (init.size() != cfg.K || init.l_active() != cfg.l_active || init.phase_bits() != cfg.phase_bits || init.n_pol_elements() != cfg.L)
            throw std::invalid_argument("kmeans_refine: initial codebook does not match the configuration");

        std::vector<BeamWeights> beams(init.beams().begin(), init.beams().end());
        auto make = [&] { return Codebook(beams, cfg.L, cfg.l_active, cfg.phase_bits, tag, cfg.seed); };

        double obj = coverage_objective(ef, make());
        KMeansReport rep;
        rep.objective.push_back(obj);
        std::vector<std::size_t> prev_assign;
        rep.stop_reason = "max-iterations";

        for (std::size_t it = 0; it < cfg.kmeans_max_iters; ++it)
        {
            const auto map = composite_pattern(ef, make());
            if (map.index == prev_assign)
            {
                rep.stop_reason = "assignment-unchanged";
                break;
            }
            const auto regions = partition_from_map(map, cfg.K);

            std::vector<std::size_t> empty;
            for (std::size_t k = 0; k < cfg.K; ++k)
            {
                if (regions[k].empty())
                {
                    empty.push_back(k);
                    continue;
                }
                Eigen::MatrixXcd q;
                accumulate_response(ef, regions[k], {}, q);
                const QuadraticObjective region_obj(std::move(q));
                auto res = solve_over_activations(region_obj, cfg.L, cfg.l_active, cfg.phase_bits, cfg.search_options(),
                                                  derive_seed(cfg.seed, {seed_key::kmeans, it, k}));
                if (res.objective > region_obj.value(beams[k]))
                    beams[k] = std::move(res.beam);
            }
            for (std::size_t e = 0; e < empty.size(); ++e)
            {
                std::vector<BeamWeights> served;
                for (std::size_t k = 0; k < cfg.K; ++k)
                    if (std::find(empty.begin() + static_cast<std::ptrdiff_t>(e), empty.end(), k) == empty.end())
                        served.push_back(beams[k]);
                beams[empty[e]] = detail::reseed_beam(ef, served, cfg, derive_seed(cfg.seed, {seed_key::reseed, it, empty[e]}));
                ++rep.reseeds;
            }

            const double next = coverage_objective(ef, make());
            rep.objective.push_back(next);
            ++rep.iterations;
            const double gain = next - obj;
            obj = next;
            prev_assign = map.index;
            if (gain <= cfg.kmeans_tol * std::abs(obj))
            {
                rep.stop_reason = "tolerance";
                break;
            }
        }
        if (report)
            *report = std::move(rep);
        return make();
    }

    struct KMeansDesign
    {
        Codebook init;
        Codebook codebook;
        GreedyReport greedy;
        KMeansReport kmeans;
    };

    // Full-chain (L_A = L) codebook: greedy initialization followed by K-Means.
    inline KMeansDesign design_fullchain_kmeans(const EFieldSet &ef, const DesignConfig &cfg)
    {
        const DesignConfig full = cfg.at_level(cfg.L);
        check_design_inputs(ef, full);
        KMeansDesign d;
        const auto pool = candidate_pool(ef, full);
        d.init = greedy_init(ef, full, pool, &d.greedy);
        d.codebook = kmeans_refine(ef, d.init, full, method_tag::fullchain_kmeans, &d.kmeans);
        return d;
    }

    // SC-Max: K-Means on P2 under the L_A activation constraint, from the given initial codebook.
    inline Codebook design_scmax(const EFieldSet &ef, const DesignConfig &cfg, const Codebook &init, KMeansReport *report = nullptr)
    {
        return kmeans_refine(ef, init, cfg, method_tag::sc_max, report);
    }

    // SC-Max including its greedy initialization at the target level.
    inline KMeansDesign design_scmax(const EFieldSet &ef, const DesignConfig &cfg)
    {
        check_design_inputs(ef, cfg);
        KMeansDesign d;
        const auto pool = candidate_pool(ef, cfg);
        d.init = greedy_init(ef, cfg, pool, &d.greedy);
        d.codebook = design_scmax(ef, cfg, d.init, &d.kmeans);
        return d;
    }

    inline void check_fullchain(const EFieldSet &ef, const Codebook &fullchain, const DesignConfig &cfg)
    {
        if (fullchain.empty())
            throw std::invalid_argument("full-chain codebook is empty");
        if (fullchain.n_pol_elements() != ef.n_pol_elements())
            throw std::invalid_argument("full-chain codebook does not match the E-field array size");
        if (fullchain.size() != cfg.K)
            throw config_error("full-chain codebook has " + std::to_string(fullchain.size()) + " beams, configuration K = " + std::to_string(cfg.K));
    }

    // Sim-Max: row i maximizes w^H (sum_n G_i(n) M_n) w, G_i the linear pattern of full-chain beam i.
    inline Codebook design_simmax(const EFieldSet &ef, const Codebook &fullchain, const DesignConfig &cfg)
    {
        check_design_inputs(ef, cfg);
        check_fullchain(ef, fullchain, cfg);
        const auto dirs = detail::all_directions(ef);
        std::vector<BeamWeights> out;
        for (std::size_t i = 0; i < fullchain.size(); ++i)
        {
            const auto g = beam_pattern(ef, fullchain[i]);
            out.push_back(solve_row(ef, dirs, g, cfg, i).beam);
        }
        return Codebook(std::move(out), cfg.L, cfg.l_active, cfg.phase_bits, method_tag::sim_max, cfg.seed);
    }

    // BC-SC-Max: row k maximizes w^H (sum_{n in D_k} M_n) w over the full-chain coverage region D_k.
    inline Codebook design_bcscmax(const EFieldSet &ef, const Codebook &fullchain, const DesignConfig &cfg)
    {
        check_design_inputs(ef, cfg);
        check_fullchain(ef, fullchain, cfg);
        const auto regions = partition_coverage(ef, fullchain);
        std::vector<std::optional<BeamWeights>> rows(fullchain.size());
        std::vector<BeamWeights> served;
        for (std::size_t k = 0; k < regions.size(); ++k)
            if (!regions[k].empty())
            {
                rows[k] = solve_row(ef, regions[k], {}, cfg, k).beam;
                served.push_back(*rows[k]);
            }
        for (std::size_t k = 0; k < regions.size(); ++k)
            if (!rows[k])
            {
                rows[k] = detail::reseed_beam(ef, served, cfg, derive_seed(cfg.seed, seed_key::row, k));
                served.push_back(*rows[k]);
            }
        std::vector<BeamWeights> out;
        for (auto &r : rows)
            out.push_back(std::move(*r));
        return Codebook(std::move(out), cfg.L, cfg.l_active, cfg.phase_bits, method_tag::bc_sc_max, cfg.seed);
    }
} // namespace subchain
