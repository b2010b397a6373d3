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
#include "subchain/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace subchain
{
    enum class HermitianPolicy
    {
        reject,
        symmetrize
    };

    // Objective w^H Q w with Q Hermitian PSD, typically a weighted sum of response matrices.
    class QuadraticObjective
    {
    public:
        static constexpr double hermitian_tolerance = 1e-10;

        QuadraticObjective() = default;

        explicit QuadraticObjective(Eigen::MatrixXcd q, HermitianPolicy policy = HermitianPolicy::reject) : q_(std::move(q))
        {
            if (q_.rows() != q_.cols() || q_.rows() == 0 || q_.rows() % 2 != 0)
                throw std::invalid_argument("QuadraticObjective: Q must be square with even dimension 2L");
            if (!q_.allFinite())
                throw std::invalid_argument("QuadraticObjective: Q has non-finite entries");
            const double scale = std::max(q_.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
            const double asym = (q_ - q_.adjoint()).cwiseAbs().maxCoeff();
            if (asym > hermitian_tolerance * scale)
            {
                if (policy == HermitianPolicy::reject)
                    throw std::invalid_argument("QuadraticObjective: Q is not Hermitian (max |Q - Q^H| = " + std::to_string(asym) + ")");
                symmetrized_ = true;
            }
            // Store the exact Hermitian part so w^H Q w is real by construction.
            Eigen::MatrixXcd h = 0.5 * (q_ + q_.adjoint());
            q_ = std::move(h);
        }

        const Eigen::MatrixXcd &matrix() const { return q_; }
        std::size_t dimension() const { return static_cast<std::size_t>(q_.rows()); }
        std::size_t n_pol_elements() const { return dimension() / 2; }
        bool symmetrized() const { return symmetrized_; }

        double value(std::span<const cplx> w) const
        {
            if (w.size() != dimension())
                throw std::invalid_argument("QuadraticObjective::value: dimension mismatch");
            double s = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
            {
                if (w[i] == cplx(0.0, 0.0))
                    continue;
                cplx row(0.0, 0.0);
                for (std::size_t j = 0; j < w.size(); ++j)
                    if (w[j] != cplx(0.0, 0.0))
                        row += q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * w[j];
                s += (std::conj(w[i]) * row).real();
            }
            return s;
        }

        double value(const BeamWeights &w) const { return value(w.weights()); }

    private:
        Eigen::MatrixXcd q_;
        bool symmetrized_ = false;
    };

    // Active element indices (0-based within each polarization).
    struct ActivationPattern
    {
        std::vector<std::size_t> h;
        std::vector<std::size_t> v;

        friend bool operator==(const ActivationPattern &, const ActivationPattern &) = default;
        friend auto operator<=>(const ActivationPattern &, const ActivationPattern &) = default;

        // Port indices into the 2L weight vector.
        std::vector<std::size_t> ports(std::size_t L) const
        {
            std::vector<std::size_t> out(h.begin(), h.end());
            for (std::size_t e : v)
                out.push_back(L + e);
            return out;
        }
    };

    inline std::size_t binomial(std::size_t n, std::size_t k)
    {
        if (k > n)
            return 0;
        std::size_t r = 1;
        for (std::size_t i = 1; i <= k; ++i)
            r = r * (n - k + i) / i;
        return r;
    }

    namespace detail
    {
        inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k)
        {
            std::vector<std::vector<std::size_t>> out;
            std::vector<std::size_t> c(k);
            for (std::size_t i = 0; i < k; ++i)
                c[i] = i;
            while (true)
            {
                out.push_back(c);
                std::size_t i = k;
                while (i > 0 && c[i - 1] == n - k + i - 1)
                    --i;
                if (i == 0)
                    break;
                ++c[i - 1];
                for (std::size_t j = i; j < k; ++j)
                    c[j] = c[j - 1] + 1;
            }
            return out;
        }
    } // namespace detail

    // All C(L, L_A)^2 (H subset, V subset) pairs, lexicographic in (h, v).
    inline std::vector<ActivationPattern> enumerate_activations(std::size_t L, std::size_t l_active)
    {
        if (L == 0 || l_active == 0 || l_active > L)
            throw std::invalid_argument("enumerate_activations: need 1 <= L_A <= L, got L_A = " + std::to_string(l_active) +
                                        ", L = " + std::to_string(L));
        const auto subsets = detail::combinations(L, l_active);
        std::vector<ActivationPattern> out;
        out.reserve(subsets.size() * subsets.size());
        for (const auto &h : subsets)
            for (const auto &v : subsets)
                out.push_back({h, v});
        return out;
    }

    struct SolveResult
    {
        BeamWeights beam;
        double objective = -std::numeric_limits<double>::infinity();
        std::size_t pattern_index = 0;
        std::size_t restart = 0;
        std::size_t sweeps = 0;
        std::size_t evaluated = 0; // exhaustive oracle: number of candidates scored
    };

    // Objective after every accepted or rejected coordinate step, and after every sweep.
    struct RestartTrace
    {
        std::vector<double> updates;
        std::vector<double> sweeps;
        bool converged = false;
    };

    struct AscentOptions
    {
        std::size_t n_restarts = 16;
        std::size_t max_sweeps = 10000;
        HermitianPolicy policy = HermitianPolicy::reject;
    };

    namespace detail
    {
        struct ActiveProblem
        {
            std::vector<std::size_t> ports;
            std::vector<cplx> q; // row-major restriction of Q to the active ports
            std::size_t n = 0;

            cplx at(std::size_t i, std::size_t j) const { return q[i * n + j]; }

            double value(std::span<const cplx> w) const
            {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                {
                    cplx r(0.0, 0.0);
                    for (std::size_t j = 0; j < n; ++j)
                        r += at(i, j) * w[j];
                    s += (std::conj(w[i]) * r).real();
                }
                return s;
            }
        };

        inline ActiveProblem restrict(const QuadraticObjective &obj, const ActivationPattern &pattern)
        {
            const std::size_t L = obj.n_pol_elements();
            if (pattern.h.empty() || pattern.h.size() != pattern.v.size())
                throw std::invalid_argument("activation pattern must activate the same positive number of ports per polarization");
            for (std::size_t e : pattern.h)
                if (e >= L)
                    throw std::invalid_argument("activation pattern index out of range");
            for (std::size_t e : pattern.v)
                if (e >= L)
                    throw std::invalid_argument("activation pattern index out of range");
            ActiveProblem p;
            p.ports = pattern.ports(L);
            p.n = p.ports.size();
            p.q.resize(p.n * p.n);
            const auto &q = obj.matrix();
            for (std::size_t i = 0; i < p.n; ++i)
                for (std::size_t j = 0; j < p.n; ++j)
                    p.q[i * p.n + j] = q(static_cast<Eigen::Index>(p.ports[i]), static_cast<Eigen::Index>(p.ports[j]));
            return p;
        }

        inline BeamWeights expand(const ActiveProblem &p, std::span<const std::size_t> phase, std::size_t dim, int bits)
        {
            std::vector<cplx> w(dim, cplx(0.0, 0.0));
            for (std::size_t i = 0; i < p.n; ++i)
                w[p.ports[i]] = unit_root(phase[i], bits);
            return BeamWeights(std::move(w), bits);
        }
    } // namespace detail

    // Cyclic coordinate ascent over the phases of the active ports, best of n_restarts random
    // starts. Restart r draws its initial phases from derive_seed(seed, pattern_index, r).
    // Coordinate step: with c = sum_{m != l} Q_lm w_m the objective is Q_ll + 2 Re(conj(w_l) c) + const,
    // every root is scored and the best (smallest index among equals) is taken only if it strictly
    // improves on the current phase. A sweep with no change ends the restart.
    inline SolveResult cyclic_phase_ascent(const QuadraticObjective &obj, const ActivationPattern &pattern, int bits, const AscentOptions &opt,
                                           std::uint64_t seed, std::size_t pattern_index = 0, std::vector<RestartTrace> *trace = nullptr)
    {
        check_phase_bits(bits);
        if (opt.n_restarts == 0)
            throw std::invalid_argument("cyclic_phase_ascent: n_restarts must be at least 1");
        if (bits > 30)
            throw std::invalid_argument("cyclic_phase_ascent: phase_bits too large");

        const auto prob = detail::restrict(obj, pattern);
        const auto roots = unit_roots(bits);
        const std::size_t n = prob.n;

        SolveResult best;
        best.pattern_index = pattern_index;
        std::vector<std::size_t> best_phase;
        if (trace)
            trace->assign(opt.n_restarts, {});

        std::vector<std::size_t> phase(n);
        std::vector<cplx> w(n);
        for (std::size_t r = 0; r < opt.n_restarts; ++r)
        {
            SplitMix64 gen(derive_seed(seed, pattern_index, r));
            for (std::size_t i = 0; i < n; ++i)
            {
                phase[i] = static_cast<std::size_t>(gen.next_bits(static_cast<unsigned>(bits)));
                w[i] = roots[phase[i]];
            }

            RestartTrace *tr = trace ? &(*trace)[r] : nullptr;
            if (tr)
                tr->updates.push_back(prob.value(w));

            std::size_t sweeps = 0;
            bool changed = true;
            while (changed && sweeps < opt.max_sweeps)
            {
                changed = false;
                ++sweeps;
                for (std::size_t i = 0; i < n; ++i)
                {
                    cplx c(0.0, 0.0);
                    for (std::size_t j = 0; j < n; ++j)
                        if (j != i)
                            c += prob.at(i, j) * w[j];
                    const double current = (std::conj(w[i]) * c).real();
                    std::size_t arg = 0;
                    double top = -std::numeric_limits<double>::infinity();
                    for (std::size_t p = 0; p < roots.size(); ++p)
                    {
                        const double s = (std::conj(roots[p]) * c).real();
                        if (s > top)
                        {
                            top = s;
                            arg = p;
                        }
                    }
                    if (arg != phase[i] && top - current > 1e-12 * std::abs(c))
                    {
                        phase[i] = arg;
                        w[i] = roots[arg];
                        changed = true;
                    }
                    if (tr)
                        tr->updates.push_back(prob.value(w));
                }
                if (tr)
                    tr->sweeps.push_back(prob.value(w));
            }
            if (tr)
                tr->converged = !changed;

            const double v = prob.value(w);
            if (v > best.objective)
            {
                best.objective = v;
                best.restart = r;
                best.sweeps = sweeps;
                best_phase = phase;
            }
        }

        best.beam = detail::expand(prob, best_phase, obj.dimension(), bits);
        best.objective = obj.value(best.beam);
        return best;
    }

    inline SolveResult cyclic_phase_ascent(const QuadraticObjective &obj, const ActivationPattern &pattern, int bits, std::size_t n_restarts,
                                           std::uint64_t seed, std::vector<RestartTrace> *trace = nullptr)
    {
        AscentOptions opt;
        opt.n_restarts = n_restarts;
        return cyclic_phase_ascent(obj, pattern, bits, opt, seed, 0, trace);
    }

    inline constexpr std::size_t exhaustive_max_exponent = 24;

    // True optimum over all phase assignments of the active ports; the first active port is fixed
    // to phase 0 (the gain is invariant under a common phase).
    inline SolveResult exhaustive_oracle(const QuadraticObjective &obj, const ActivationPattern &pattern, int bits)
    {
        check_phase_bits(bits);
        const std::size_t la = pattern.h.size();
        if (2 * static_cast<std::size_t>(bits) * la > exhaustive_max_exponent)
            throw std::invalid_argument("exhaustive_oracle: search space 2^(2 b L_A) = 2^" + std::to_string(2 * bits * la) + " exceeds 2^" +
                                        std::to_string(exhaustive_max_exponent));
        const auto prob = detail::restrict(obj, pattern);
        const auto roots = unit_roots(bits);
        const std::size_t n = prob.n, levels = roots.size();

        std::vector<std::size_t> phase(n, 0), best_phase(n, 0);
        std::vector<cplx> w(n, roots[0]);
        SolveResult best;
        while (true)
        {
            const double v = prob.value(w);
            ++best.evaluated;
            if (v > best.objective)
            {
                best.objective = v;
                best_phase = phase;
            }
            std::size_t i = 1;
            while (i < n)
            {
                if (++phase[i] < levels)
                {
                    w[i] = roots[phase[i]];
                    break;
                }
                phase[i] = 0;
                w[i] = roots[0];
                ++i;
            }
            if (i >= n)
                break;
        }
        best.beam = detail::expand(prob, best_phase, obj.dimension(), bits);
        best.objective = obj.value(best.beam);
        return best;
    }

    struct ActivationSearchOptions
    {
        std::size_t n_restarts = 16;
        std::size_t max_sweeps = 10000;
        std::size_t threads = 1; // 0 = hardware concurrency
    };

    // Runs cyclic_phase_ascent for every activation pattern and keeps the best (lowest pattern
    // index among equal objectives). Identical results for any thread count.
    inline SolveResult solve_over_activations(const QuadraticObjective &obj, std::size_t L, std::size_t l_active, int bits,
                                              const ActivationSearchOptions &opt, std::uint64_t seed)
    {
        if (obj.n_pol_elements() != L)
            throw std::invalid_argument("solve_over_activations: objective dimension does not match L");
        const auto patterns = enumerate_activations(L, l_active);
        AscentOptions aopt;
        aopt.n_restarts = opt.n_restarts;
        aopt.max_sweeps = opt.max_sweeps;

        std::vector<SolveResult> results(patterns.size());
        std::vector<std::exception_ptr> errors(patterns.size());
        auto work = [&](std::size_t begin, std::size_t stride)
        {
            for (std::size_t p = begin; p < patterns.size(); p += stride)
            {
                try
                {
                    results[p] = cyclic_phase_ascent(obj, patterns[p], bits, aopt, seed, p);
                }
                catch (...)
                {
                    errors[p] = std::current_exception();
                }
            }
        };

        std::size_t threads = opt.threads == 0 ? std::max(1U, std::thread::hardware_concurrency()) : opt.threads;
        threads = std::min(threads, patterns.size());
        if (threads <= 1)
            work(0, 1);
        else
        {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < threads; ++t)
                pool.emplace_back(work, t, threads);
        }
        for (const auto &e : errors)
            if (e)
                std::rethrow_exception(e);

        std::size_t best = 0;
        for (std::size_t p = 1; p < results.size(); ++p)
            if (results[p].objective > results[best].objective)
                best = p;
        return results[best];
    }

    inline SolveResult solve_over_activations(const QuadraticObjective &obj, std::size_t L, std::size_t l_active, int bits, std::size_t n_restarts,
                                              std::uint64_t seed)
    {
        ActivationSearchOptions opt;
        opt.n_restarts = n_restarts;
        return solve_over_activations(obj, L, l_active, bits, opt, seed);
    }
} // namespace subchain
