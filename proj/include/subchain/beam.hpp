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

#include "subchain/efield.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace subchain
{
    inline constexpr int max_phase_bits = 16;

    inline std::size_t phase_levels(int bits) { return std::size_t{1} << bits; }

    inline void check_phase_bits(int bits)
    {
        if (bits < 1 || bits > max_phase_bits)
            throw std::invalid_argument("phase_bits must be in [1, " + std::to_string(max_phase_bits) + "], got " + std::to_string(bits));
    }

    // exp(j 2 pi p / 2^bits), exact for the quarter-turn points.
    inline cplx unit_root(std::size_t p, int bits)
    {
        const std::size_t n = phase_levels(bits);
        p %= n;
        if (4 * p % n == 0)
        {
            switch (4 * p / n)
            {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
            }
        }
        return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(n));
    }

    inline std::vector<cplx> unit_roots(int bits)
    {
        std::vector<cplx> r(phase_levels(bits));
        for (std::size_t p = 0; p < r.size(); ++p)
            r[p] = unit_root(p, bits);
        return r;
    }

    // Index of the 2^bits-th root of unity nearest in angle to z. Exact ties (within 1e-12 of a
    // half step) go to the smaller angle in [0, 2 pi).
    inline std::size_t quantize_phase_index(cplx z, int bits)
    {
        check_phase_bits(bits);
        if (z == cplx(0.0, 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("quantize_phase: z must be finite and nonzero");
        const std::size_t n = phase_levels(bits);
        double a = std::arg(z);
        if (a < 0.0)
            a += 2.0 * std::numbers::pi;
        const double t = a * static_cast<double>(n) / (2.0 * std::numbers::pi);
        double base = std::floor(t);
        const double frac = t - base;
        std::size_t p = static_cast<std::size_t>(base);
        if (frac > 0.5 + 1e-12)
            ++p;
        return p % n;
    }

    inline cplx quantize_phase(cplx z, int bits) { return unit_root(quantize_phase_index(z, bits), bits); }

    // Quantized analog beamforming vector, H-pol ports first then V-pol ports.
    // Every entry is 0 or a 2^b-th root of unity and both halves activate the same number of ports.
    class BeamWeights
    {
    public:
        static constexpr double tolerance = 1e-9;

        BeamWeights() = default;

        BeamWeights(std::vector<cplx> w, int phase_bits) : w_(std::move(w)), bits_(phase_bits)
        {
            check_phase_bits(bits_);
            if (w_.empty() || w_.size() % 2 != 0)
                throw std::invalid_argument("BeamWeights: length must be a positive even number 2L, got " + std::to_string(w_.size()));
            const std::size_t n = phase_levels(bits_);
            for (std::size_t l = 0; l < w_.size(); ++l)
            {
                const cplx z = w_[l];
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                    throw std::invalid_argument("BeamWeights: entry " + std::to_string(l) + " is not finite");
                if (std::abs(z) <= tolerance)
                {
                    w_[l] = cplx(0.0, 0.0);
                    continue;
                }
                const cplx r = unit_root(quantize_phase_index(z, bits_), bits_);
                if (std::abs(z - r) > tolerance)
                    throw std::invalid_argument("BeamWeights: entry " + std::to_string(l) + " is neither 0 nor a " + std::to_string(n) +
                                                "-th root of unity");
            }
            if (active_count(0) != active_count(1))
                throw std::invalid_argument("BeamWeights: H-pol activates " + std::to_string(active_count(0)) + " ports, V-pol " +
                                            std::to_string(active_count(1)));
        }

        // nullopt = port off, otherwise phase index p meaning exp(j 2 pi p / 2^b)
        static BeamWeights from_phase_indices(std::span<const std::optional<std::size_t>> idx, int phase_bits)
        {
            check_phase_bits(phase_bits);
            std::vector<cplx> w(idx.size(), cplx(0.0, 0.0));
            for (std::size_t l = 0; l < idx.size(); ++l)
                if (idx[l])
                {
                    if (*idx[l] >= phase_levels(phase_bits))
                        throw std::invalid_argument("BeamWeights: phase index " + std::to_string(*idx[l]) + " out of range for " +
                                                    std::to_string(phase_bits) + "-bit phase shifters");
                    w[l] = unit_root(*idx[l], phase_bits);
                }
            return BeamWeights(std::move(w), phase_bits);
        }

        std::vector<std::optional<std::size_t>> phase_indices() const
        {
            std::vector<std::optional<std::size_t>> out(w_.size());
            for (std::size_t l = 0; l < w_.size(); ++l)
                if (w_[l] != cplx(0.0, 0.0))
                    out[l] = quantize_phase_index(w_[l], bits_);
            return out;
        }

        std::span<const cplx> weights() const { return w_; }
        cplx operator[](std::size_t l) const { return w_[l]; }
        std::size_t size() const { return w_.size(); }
        std::size_t n_pol_elements() const { return w_.size() / 2; }
        int phase_bits() const { return bits_; }
        bool is_active(std::size_t l) const { return w_[l] != cplx(0.0, 0.0); }

        // Active ports per polarization.
        std::size_t active_per_pol() const { return active_count(0); }

        friend bool operator==(const BeamWeights &a, const BeamWeights &b) { return a.bits_ == b.bits_ && a.phase_indices() == b.phase_indices(); }

    private:
        std::size_t active_count(std::size_t half) const
        {
            const std::size_t L = w_.size() / 2;
            return static_cast<std::size_t>(std::count_if(w_.begin() + static_cast<std::ptrdiff_t>(half * L),
                                                          w_.begin() + static_cast<std::ptrdiff_t>((half + 1) * L),
                                                          [](cplx z) { return z != cplx(0.0, 0.0); }));
        }

        std::vector<cplx> w_;
        int bits_ = 1;
    };

    // Ordered list of K beams sharing (L, L_A, b).
    class Codebook
    {
    public:
        Codebook() = default;

        Codebook(std::vector<BeamWeights> beams, std::size_t n_pol_elements, std::size_t l_active, int phase_bits, std::string method_tag = "",
                 std::uint64_t seed = 0)
            : beams_(std::move(beams)), L_(n_pol_elements), l_active_(l_active), bits_(phase_bits), method_(std::move(method_tag)), seed_(seed)
        {
            check_phase_bits(bits_);
            if (L_ == 0 || l_active_ == 0 || l_active_ > L_)
                throw std::invalid_argument("Codebook: need 1 <= L_A <= L, got L_A = " + std::to_string(l_active_) + ", L = " + std::to_string(L_));
            for (std::size_t k = 0; k < beams_.size(); ++k)
            {
                const auto &b = beams_[k];
                if (b.n_pol_elements() != L_ || b.phase_bits() != bits_ || b.active_per_pol() != l_active_)
                    throw std::invalid_argument("Codebook: beam " + std::to_string(k) + " does not match (L = " + std::to_string(L_) +
                                                ", L_A = " + std::to_string(l_active_) + ", b = " + std::to_string(bits_) + ")");
            }
        }

        std::size_t size() const { return beams_.size(); }
        bool empty() const { return beams_.empty(); }
        const BeamWeights &operator[](std::size_t k) const { return beams_[k]; }
        std::span<const BeamWeights> beams() const { return beams_; }
        std::size_t n_pol_elements() const { return L_; }
        std::size_t l_active() const { return l_active_; }
        int phase_bits() const { return bits_; }
        const std::string &method_tag() const { return method_; }
        std::uint64_t seed() const { return seed_; }

        // Same beams, rows reordered so that new row k is old row perm[k].
        Codebook permuted(std::span<const std::size_t> perm) const
        {
            if (perm.size() != beams_.size())
                throw std::invalid_argument("Codebook::permuted: permutation size mismatch");
            std::vector<BeamWeights> out;
            out.reserve(perm.size());
            for (std::size_t k : perm)
                out.push_back(beams_.at(k));
            return Codebook(std::move(out), L_, l_active_, bits_, method_, seed_);
        }

        friend bool operator==(const Codebook &a, const Codebook &b)
        {
            return a.L_ == b.L_ && a.l_active_ == b.l_active_ && a.bits_ == b.bits_ && a.beams_ == b.beams_;
        }

    private:
        std::vector<BeamWeights> beams_;
        std::size_t L_ = 0;
        std::size_t l_active_ = 0;
        int bits_ = 1;
        std::string method_;
        std::uint64_t seed_ = 0;
    };

    // Codebooks of one array at several activation levels with aligned rows: row k of every level
    // is the same logical beam.
    class CodebookFamily
    {
    public:
        void add(Codebook cb)
        {
            if (cb.empty())
                throw std::invalid_argument("CodebookFamily: codebooks must be non-empty");
            if (!levels_.empty())
            {
                const Codebook &ref = levels_.begin()->second;
                if (cb.size() != ref.size() || cb.n_pol_elements() != ref.n_pol_elements() || cb.phase_bits() != ref.phase_bits())
                    throw std::invalid_argument("CodebookFamily: all levels must share K, L and phase bits");
            }
            const std::size_t la = cb.l_active();
            levels_.insert_or_assign(la, std::move(cb));
        }

        bool has(std::size_t l_active) const { return levels_.contains(l_active); }

        const Codebook &at(std::size_t l_active) const
        {
            auto it = levels_.find(l_active);
            if (it == levels_.end())
                throw std::out_of_range("CodebookFamily: no codebook at activation level " + std::to_string(l_active));
            return it->second;
        }

        std::size_t beam_count() const { return levels_.empty() ? 0 : levels_.begin()->second.size(); }

        // Levels in descending order.
        std::vector<std::size_t> levels() const
        {
            std::vector<std::size_t> out;
            for (auto it = levels_.rbegin(); it != levels_.rend(); ++it)
                out.push_back(it->first);
            return out;
        }

    private:
        std::map<std::size_t, Codebook> levels_;
    };

    inline void check_dimensions(const EFieldSet &ef, const BeamWeights &w)
    {
        if (w.size() != ef.n_antennas())
            throw std::invalid_argument("beam has " + std::to_string(w.size()) + " ports but the E-field set has " + std::to_string(ef.n_antennas()));
    }

    namespace detail
    {
        inline double gain_at(std::span<const cplx> blk, std::span<const cplx> w)
        {
            cplx gt(0.0, 0.0), gp(0.0, 0.0);
            for (std::size_t l = 0; l < w.size(); ++l)
            {
                if (w[l] == cplx(0.0, 0.0))
                    continue;
                const cplx wc = std::conj(w[l]);
                gt += wc * blk[2 * l];
                gp += wc * blk[2 * l + 1];
            }
            return std::norm(gt) + std::norm(gp);
        }
    } // namespace detail

    // B = w^H M w = |w^H e_theta|^2 + |w^H e_phi|^2, linear power.
    inline double beam_gain(const EFieldSet &ef, std::span<const cplx> w, std::size_t direction_index)
    {
        if (w.size() != ef.n_antennas())
            throw std::invalid_argument("beam_gain: weight length " + std::to_string(w.size()) + " != 2L = " + std::to_string(ef.n_antennas()));
        if (direction_index >= ef.n_points())
            throw std::out_of_range("beam_gain: direction index out of range");
        return detail::gain_at(ef.direction_block(direction_index), w);
    }

    inline double beam_gain(const EFieldSet &ef, const BeamWeights &w, std::size_t direction_index)
    {
        return beam_gain(ef, w.weights(), direction_index);
    }

    inline std::vector<double> beam_pattern(const EFieldSet &ef, std::span<const cplx> w)
    {
        if (w.size() != ef.n_antennas())
            throw std::invalid_argument("beam_pattern: weight length " + std::to_string(w.size()) + " != 2L = " + std::to_string(ef.n_antennas()));
        std::vector<double> g(ef.n_points());
        for (std::size_t n = 0; n < g.size(); ++n)
            g[n] = detail::gain_at(ef.direction_block(n), w);
        return g;
    }

    inline std::vector<double> beam_pattern(const EFieldSet &ef, const BeamWeights &w) { return beam_pattern(ef, w.weights()); }

    // Linear gains of K beams over N_p directions, row-major by beam.
    class GainTable
    {
    public:
        GainTable() = default;
        GainTable(std::size_t n_beams, std::size_t n_points) : n_beams_(n_beams), n_points_(n_points), g_(n_beams * n_points, 0.0) {}

        std::size_t n_beams() const { return n_beams_; }
        std::size_t n_points() const { return n_points_; }
        double operator()(std::size_t k, std::size_t n) const { return g_[k * n_points_ + n]; }
        double &operator()(std::size_t k, std::size_t n) { return g_[k * n_points_ + n]; }
        std::span<const double> row(std::size_t k) const { return std::span<const double>(g_).subspan(k * n_points_, n_points_); }
        std::span<double> row(std::size_t k) { return std::span<double>(g_).subspan(k * n_points_, n_points_); }

        void append_row(std::span<const double> r)
        {
            if (n_beams_ == 0 && g_.empty())
                n_points_ = r.size();
            if (r.size() != n_points_)
                throw std::invalid_argument("GainTable: row length mismatch");
            g_.insert(g_.end(), r.begin(), r.end());
            ++n_beams_;
        }

        // Rows of b appended after rows of a (multi-array index space).
        static GainTable concat(const GainTable &a, const GainTable &b)
        {
            if (a.n_beams() == 0)
                return b;
            if (a.n_points() != b.n_points())
                throw std::invalid_argument("GainTable::concat: grids differ");
            GainTable out = a;
            for (std::size_t k = 0; k < b.n_beams(); ++k)
                out.append_row(b.row(k));
            return out;
        }

    private:
        std::size_t n_beams_ = 0;
        std::size_t n_points_ = 0;
        std::vector<double> g_;
    };

    inline GainTable gain_table(const EFieldSet &ef, const Codebook &cb)
    {
        GainTable t(cb.size(), ef.n_points());
        for (std::size_t k = 0; k < cb.size(); ++k)
        {
            check_dimensions(ef, cb[k]);
            const auto w = cb[k].weights();
            auto row = t.row(k);
            for (std::size_t n = 0; n < ef.n_points(); ++n)
                row[n] = detail::gain_at(ef.direction_block(n), w);
        }
        return t;
    }

    // Per-direction composite gain and 0-based best beam index (lowest index wins ties).
    struct BestBeamMap
    {
        std::vector<std::size_t> index;
        std::vector<double> gains;

        std::size_t size() const { return index.size(); }
    };

    inline BestBeamMap best_beam_map(const GainTable &t)
    {
        if (t.n_beams() == 0)
            throw std::invalid_argument("best_beam_map: empty codebook");
        BestBeamMap m{std::vector<std::size_t>(t.n_points(), 0), std::vector<double>(t.row(0).begin(), t.row(0).end())};
        for (std::size_t k = 1; k < t.n_beams(); ++k)
        {
            const auto r = t.row(k);
            for (std::size_t n = 0; n < t.n_points(); ++n)
                if (r[n] > m.gains[n])
                {
                    m.gains[n] = r[n];
                    m.index[n] = k;
                }
        }
        return m;
    }

    inline BestBeamMap composite_pattern(const EFieldSet &ef, const Codebook &cb)
    {
        if (cb.empty())
            throw std::invalid_argument("composite_pattern: empty codebook");
        return best_beam_map(gain_table(ef, cb));
    }

    inline std::vector<std::vector<std::size_t>> partition_from_map(const BestBeamMap &m, std::size_t n_beams)
    {
        std::vector<std::vector<std::size_t>> sets(n_beams);
        for (std::size_t n = 0; n < m.size(); ++n)
            sets.at(m.index[n]).push_back(n);
        return sets;
    }

    // Coverage regions D_k: the grid directions where beam k is the best beam.
    inline std::vector<std::vector<std::size_t>> partition_coverage(const EFieldSet &ef, const Codebook &cb)
    {
        if (cb.empty())
            throw std::invalid_argument("partition_coverage: empty codebook");
        return partition_from_map(composite_pattern(ef, cb), cb.size());
    }
} // namespace subchain
