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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include "support.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

using namespace subchain;
namespace fs = std::filesystem;

namespace
{
    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    // Violations of non-decreasing order, relative tolerance 1e-9.
    std::size_t monotone_violations(const std::vector<double> &v)
    {
        std::size_t bad = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            bad += v[i] < v[i - 1] - 1e-9 * std::abs(v[i - 1]);
        return bad;
    }

    // Re-runs the validator on a beam's raw weights.
    bool feasible(const BeamWeights &b, std::size_t la, int bits)
    {
        try
        {
            const BeamWeights copy(std::vector<cplx>(b.weights().begin(), b.weights().end()), bits);
            if (copy.active_per_pol() != la || copy.phase_bits() != bits)
                return false;
            for (const cplx &z : b.weights())
                if (z != cplx(0.0, 0.0) && (std::abs(std::abs(z) - 1.0) > 1e-9 || std::abs(std::pow(z, 1 << bits) - 1.0) > 1e-9))
                    return false;
            return true;
        }
        catch (const std::exception &)
        {
            return false;
        }
    }

    // Default-phone runs shared by criteria 2, 8 and 10.
    struct PhoneRuns
    {
        std::map<std::string, RunResult> by_method;
        double seconds = 0.0;
    };

    const PhoneRuns &phone_runs()
    {
        static const PhoneRuns runs = []
        {
            PhoneRuns r;
            const auto t0 = Clock::now();
            for (const char *m : {method_tag::sim_max, method_tag::sc_max, method_tag::bc_sc_max})
            {
                auto cfg = PipelineConfig::default_phone();
                cfg.method = m;
                cfg.design.threads = 0;
                r.by_method.emplace(m, run_design(cfg));
            }
            r.seconds = seconds_since(t0);
            return r;
        }();
        return runs;
    }

    Outcome solver_optimality()
    {
        const auto t0 = Clock::now();
        std::mt19937_64 rng(20260101);
        int hits = 0, exceed = 0;
        for (int t = 0; t < 100; ++t)
        {
            const QuadraticObjective obj(test::random_psd(3, rng));
            const auto pats = enumerate_activations(3, 2);
            const auto &pat = pats[static_cast<std::size_t>(t) % pats.size()];
            const auto a = cyclic_phase_ascent(obj, pat, 2, 16, static_cast<std::uint64_t>(t));
            const auto o = exhaustive_oracle(obj, pat, 2);
            exceed += a.objective > o.objective * (1 + 1e-12) + 1e-12;
            hits += a.objective >= o.objective * (1 - 1e-9);
        }
        const double s = seconds_since(t0);
        return {hits >= 95 && exceed == 0 && s < 5.0, std::to_string(hits) + "/100 optimal, " + std::to_string(exceed) + " above oracle, " + std::to_string(s) + " s"};
    }

    Outcome monotone_ascent()
    {
        std::size_t checked = 0, bad = 0;
        // Solver sweeps on random objectives and on a synthetic-array objective.
        std::mt19937_64 rng(7);
        for (int t = 0; t < 60; ++t)
        {
            const std::size_t L = 2 + static_cast<std::size_t>(t) % 4;
            const QuadraticObjective obj(test::random_psd(L, rng));
            const auto pats = enumerate_activations(L, 1 + static_cast<std::size_t>(t) % L);
            std::vector<RestartTrace> tr;
            AscentOptions ao;
            ao.n_restarts = 8;
            cyclic_phase_ascent(obj, pats[static_cast<std::size_t>(t) % pats.size()], 1 + t % 5, ao, static_cast<std::uint64_t>(t), 0, &tr);
            for (const auto &r : tr)
            {
                bad += monotone_violations(r.updates) + monotone_violations(r.sweeps);
                ++checked;
            }
        }
        // K-Means iterations and greedy additions of every default-phone design.
        for (const auto &[m, run] : phone_runs().by_method)
            for (const auto &d : run.designs)
            {
                bad += monotone_violations(d.fullchain.kmeans.objective) + monotone_violations(d.fullchain.greedy.objective);
                checked += 2;
                for (const auto &[la, k] : d.kmeans)
                {
                    bad += monotone_violations(k.objective);
                    ++checked;
                }
                for (const auto &[la, g] : d.greedy)
                {
                    bad += monotone_violations(g.objective);
                    ++checked;
                }
            }
        return {bad == 0, std::to_string(checked) + " traces, " + std::to_string(bad) + " violations"};
    }

    Outcome similarity_normalization()
    {
        const auto ef = test::small_array(5, 2000);
        std::mt19937_64 rng(3);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t)
        {
            const auto w = test::random_beam(5, 1 + static_cast<std::size_t>(t) % 5, 5, rng);
            worst = std::max(worst, std::abs(similarity_score(ef, w, w) - 1.0));
        }
        return {worst <= 1e-12, "max |s(w,w) - 1| = " + detail::format_double(worst)};
    }

    Outcome matching_identities()
    {
        const auto ef = test::small_array(5, 1001);
        std::mt19937_64 rng(4);
        std::size_t bad = 0;
        for (int t = 0; t < 50; ++t)
        {
            const auto a = test::random_codebook(7, 5, 5, 5, rng);
            const auto b = test::random_codebook(7, 5, 1 + static_cast<std::size_t>(t) % 4, 5, rng);
            const auto ma = composite_pattern(ef, a), mb = composite_pattern(ef, b);
            bad += matching_rate(ma, ma) != 1.0;
            bad += matching_rate(mb, mb) != 1.0;
            bad += matching_rate(ma, mb) != matching_rate(mb, ma);
            const auto r = repair_pairing(ef, a, b);
            bad += r.repaired_rate < r.identity_rate;
        }
        return {bad == 0, "50 pairs, " + std::to_string(bad) + " violations"};
    }

    Outcome hungarian_exactness()
    {
        const auto t0 = Clock::now();
        std::mt19937_64 rng(5);
        std::size_t bad = 0;
        for (int t = 0; t < 200; ++t)
        {
            const std::size_t K = 2 + static_cast<std::size_t>(t) % 7;
            std::uniform_int_distribution<long long> d(0, t % 3 == 0 ? 5 : 10000);
            Matrix2D<long long> b(K, std::vector<long long>(K));
            for (auto &row : b)
                for (auto &x : row)
                    x = d(rng);
            std::vector<std::size_t> p(K);
            std::iota(p.begin(), p.end(), 0);
            long long best = std::numeric_limits<long long>::min();
            do
            {
                long long s = 0;
                for (std::size_t i = 0; i < K; ++i)
                    s += b[i][p[i]];
                best = std::max(best, s);
            } while (std::next_permutation(p.begin(), p.end()));
            const auto a = max_weight_assignment(b);
            long long check = 0;
            for (std::size_t i = 0; i < K; ++i)
                check += b[i][a.perm[i]];
            bad += a.total != best || check != best;
        }
        const double s = seconds_since(t0);
        return {bad == 0 && s < 10.0, "200 matrices, " + std::to_string(bad) + " mismatches, " + std::to_string(s) + " s"};
    }

    Outcome partition_exactness()
    {
        const auto ef = test::small_array(5, 1001);
        std::mt19937_64 rng(6);
        std::size_t bad = 0;
        for (int t = 0; t < 20; ++t)
        {
            const auto cb = test::random_codebook(1 + static_cast<std::size_t>(t) % 8, 5, 1 + static_cast<std::size_t>(t) % 5, 5, rng);
            for (const auto &sets : {partition_coverage(ef, cb), dominance_sets(ef, cb)})
            {
                std::vector<int> seen(ef.n_points(), 0);
                for (const auto &s : sets)
                    for (auto n : s)
                        ++seen[n];
                bad += static_cast<std::size_t>(std::count_if(seen.begin(), seen.end(), [](int c) { return c != 1; }));
            }
        }
        return {bad == 0, "20 codebooks at N_p = 1001, " + std::to_string(bad) + " uncovered or doubly covered directions"};
    }

    Outcome rank_two()
    {
        const auto arrays = build_arrays(PipelineConfig::default_phone().efield);
        double worst = 0.0;
        std::size_t sampled = 0;
        for (const auto &ef : arrays)
            for (std::size_t s = 0; s < 50; ++s)
            {
                const std::size_t n = (s * 9973 + 17) % ef.n_points();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(response_matrix(ef, n));
                const auto ev = es.eigenvalues();
                const double top = ev(ev.size() - 1);
                ++sampled;
                if (top > 0.0)
                    worst = std::max(worst, std::abs(ev(ev.size() - 3)) / top);
            }
        return {worst < 1e-10, std::to_string(sampled) + " directions, max lambda3/lambda1 = " + detail::format_double(worst)};
    }

    Outcome phone_orderings()
    {
        const auto &runs = phone_runs();
        const auto &sim = runs.by_method.at(method_tag::sim_max).metrics;
        const auto &sc = runs.by_method.at(method_tag::sc_max).metrics;
        const auto &bc = runs.by_method.at(method_tag::bc_sc_max).metrics;
        std::ostringstream os;
        bool a = true, b = true, c = true, d = true;
        for (std::size_t la : {4, 3})
            a = a && bc.matching.p(5, la) > sc.matching.p(5, la) && sim.matching.p(5, la) > sc.matching.p(5, la);
        for (std::size_t la : {4, 3, 2, 1})
        {
            b = b && sc.matching.p_repaired(5, la) > sc.matching.p(5, la);
            c = c && bc.cdf.at(la).percentile(20) >= sim.cdf.at(la).percentile(20);
        }
        for (const auto *m : {&sim, &sc, &bc})
            for (std::size_t i = 1; i < m->levels.size(); ++i)
                d = d && m->cdf.at(m->levels[i]).median() <= m->cdf.at(m->levels[i - 1]).median();
        os << "(a) " << (a ? "ok" : "FAIL") << " p(5,4) bc/sim/sc = " << bc.matching.p(5, 4) << "/" << sim.matching.p(5, 4) << "/" << sc.matching.p(5, 4)
           << ", p(5,3) = " << bc.matching.p(5, 3) << "/" << sim.matching.p(5, 3) << "/" << sc.matching.p(5, 3);
        os << "; (b) " << (b ? "ok" : "FAIL") << " sc repaired p(5,4) = " << sc.matching.p_repaired(5, 4);
        os << "; (c) " << (c ? "ok" : "FAIL") << " p20 bc/sim L=4: " << bc.cdf.at(4).percentile(20) << "/" << sim.cdf.at(4).percentile(20)
           << " L=1: " << bc.cdf.at(1).percentile(20) << "/" << sim.cdf.at(1).percentile(20);
        os << "; (d) " << (d ? "ok" : "FAIL") << " bc medians";
        for (std::size_t la : bc.levels)
            os << ' ' << bc.cdf.at(la).median();
        os << "; " << runs.seconds << " s";
        return {a && b && c && d && runs.seconds < 600.0, os.str()};
    }

    Outcome determinism()
    {
        const auto root = test::scratch_dir("acceptance_determinism");
        auto cfg = PipelineConfig::default_phone();
        cfg.method = method_tag::sc_max;
        cfg.design.threads = 0;
        run_design_pipeline(cfg, root / "seed");
        const auto manifest = (root / "seed" / "manifest.json").string();
        run_design_pipeline(load_config(manifest), root / "one");
        auto again = load_config(manifest);
        again.design.threads = 1;
        run_design_pipeline(again, root / "two");
        std::size_t compared = 0, differ = 0;
        for (const auto &e : fs::recursive_directory_iterator(root / "one"))
        {
            if (!e.is_regular_file())
                continue;
            const auto rel = fs::relative(e.path(), root / "one");
            const auto top = rel.begin()->string();
            if (top != "codebooks" && top != "metrics")
                continue;
            ++compared;
            differ += test::slurp(e.path()) != test::slurp(root / "two" / rel);
            differ += test::slurp(e.path()) != test::slurp(root / "seed" / rel);
        }
        fs::remove_all(root);
        return {compared > 0 && differ == 0, std::to_string(compared) + " codebook/metric files, " + std::to_string(differ) + " differences"};
    }

    Outcome constraint_compliance()
    {
        std::size_t beams = 0, bad = 0;
        for (const auto &[m, run] : phone_runs().by_method)
            for (const auto &d : run.designs)
            {
                for (std::size_t la : d.family.levels())
                {
                    const auto &cb = d.family.at(la);
                    for (const auto &b : cb.beams())
                    {
                        ++beams;
                        bad += !feasible(b, la, cb.phase_bits());
                    }
                    // Serialized form must pass the validator too.
                    const auto back = codebook_from_json(json::parse(codebook_to_json(cb).dump()));
                    bad += !(back == cb);
                }
                for (const auto &b : d.fullchain.init.beams())
                {
                    ++beams;
                    bad += !feasible(b, d.fullchain.init.l_active(), d.fullchain.init.phase_bits());
                }
                for (const auto &[la, cb] : d.init)
                    for (const auto &b : cb.beams())
                    {
                        ++beams;
                        bad += !feasible(b, la, cb.phase_bits());
                    }
            }
        return {bad == 0, std::to_string(beams) + " designed beams, " + std::to_string(bad) + " violations"};
    }
} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 solver optimality (L=3, L_A=2, b=2)", solver_optimality},
        {"2 monotone ascent (sweeps, K-Means, greedy)", monotone_ascent},
        {"3 similarity normalization", similarity_normalization},
        {"4 matching-rate identities", matching_identities},
        {"5 Hungarian exactness (K = 2..8)", hungarian_exactness},
        {"6 partition exactness (N_p = 1001)", partition_exactness},
        {"7 rank-2 response matrices", rank_two},
        {"8 qualitative orderings on the default phone", phone_orderings},
        {"9 determinism from manifest", determinism},
        {"10 constraint compliance", constraint_compliance},
    };
    int failed = 0;
    for (const auto &[name, fn] : criteria)
    {
        Outcome o;
        try
        {
            o = fn();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " -- " << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
