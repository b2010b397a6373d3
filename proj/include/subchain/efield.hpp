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

#include "subchain/errors.hpp"
#include "subchain/rng.hpp"
#include "subchain/sphere_grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace subchain
{
    using cplx = std::complex<double>;

    // Element positions of one dual-polarized array, in carrier wavelengths.
    // Antenna index l in [0, L) is the H-pol port of element l, index L + l the V-pol port.
    // Positions may be empty when the data was ingested without geometry.
    struct ArrayLayout
    {
        std::size_t n_elements_per_pol = 0;
        std::vector<Vec3> positions;

        ArrayLayout() = default;
        explicit ArrayLayout(std::size_t L, std::vector<Vec3> pos = {}) : n_elements_per_pol(L), positions(std::move(pos))
        {
            validate();
        }

        void validate() const
        {
            if (n_elements_per_pol == 0)
                throw std::invalid_argument("ArrayLayout: at least one element per polarization is required");
            if (!positions.empty() && positions.size() != n_elements_per_pol)
                throw std::invalid_argument("ArrayLayout: expected " + std::to_string(n_elements_per_pol) + " positions, got " +
                                            std::to_string(positions.size()));
            for (const auto &p : positions)
                for (double c : p)
                    if (!std::isfinite(c))
                        throw std::invalid_argument("ArrayLayout: element positions must be finite");
        }
    };

    // Uniform line array of L elements centered on the origin.
    inline ArrayLayout line_array(std::size_t L, double spacing = 0.5, Vec3 axis = {0.0, 1.0, 0.0})
    {
        std::vector<Vec3> pos(L);
        const double center = 0.5 * static_cast<double>(L - 1);
        for (std::size_t i = 0; i < L; ++i)
        {
            const double t = (static_cast<double>(i) - center) * spacing;
            pos[i] = {t * axis[0], t * axis[1], t * axis[2]};
        }
        return ArrayLayout(L, std::move(pos));
    }

    // Far-field response (E_theta, E_phi) of every antenna port in every grid direction.
    // Immutable after construction; storage is the 2L x 2 matrix E per direction, M = E E^H is
    // formed only on request.
    class EFieldSet
    {
    public:
        EFieldSet() = default;

        // responses laid out as [direction][antenna][component], component 0 = E_theta, 1 = E_phi
        EFieldSet(DirectionGrid grid, ArrayLayout layout, std::vector<cplx> responses)
            : grid_(std::move(grid)), layout_(std::move(layout)), data_(std::move(responses))
        {
            layout_.validate();
            const std::size_t expected = grid_.size() * n_antennas() * 2;
            if (data_.size() != expected)
                throw std::invalid_argument("EFieldSet: expected " + std::to_string(expected) + " complex entries (N_p x 2L x 2), got " +
                                            std::to_string(data_.size()));
            for (std::size_t n = 0; n < grid_.size(); ++n)
                for (std::size_t l = 0; l < n_antennas(); ++l)
                    for (std::size_t c = 0; c < 2; ++c)
                    {
                        const cplx v = data_[offset(n, l) + c];
                        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                            throw data_error("EFieldSet: non-finite response at antenna " + std::to_string(l) + ", direction " +
                                             std::to_string(n));
                    }
        }

        const DirectionGrid &grid() const { return grid_; }
        const ArrayLayout &layout() const { return layout_; }
        std::size_t n_points() const { return grid_.size(); }
        std::size_t n_pol_elements() const { return layout_.n_elements_per_pol; }
        std::size_t n_antennas() const { return 2 * layout_.n_elements_per_pol; }

        cplx e_theta(std::size_t n, std::size_t l) const { return data_[offset(n, l)]; }
        cplx e_phi(std::size_t n, std::size_t l) const { return data_[offset(n, l) + 1]; }

        // 2L x 2 interleaved block (E_theta, E_phi per antenna) of direction n
        std::span<const cplx> direction_block(std::size_t n) const
        {
            return std::span<const cplx>(data_).subspan(n * n_antennas() * 2, n_antennas() * 2);
        }

        std::span<const cplx> raw() const { return data_; }

        // trace(M) at direction n, i.e. total received power of all ports
        double response_energy(std::size_t n) const
        {
            double s = 0.0;
            for (const cplx &v : direction_block(n))
                s += std::norm(v);
            return s;
        }

    private:
        std::size_t offset(std::size_t n, std::size_t l) const { return (n * n_antennas() + l) * 2; }

        DirectionGrid grid_;
        ArrayLayout layout_;
        std::vector<cplx> data_;
    };

    // M = E E^H at the given direction.
    inline Eigen::MatrixXcd response_matrix(const EFieldSet &ef, std::size_t direction_index)
    {
        if (direction_index >= ef.n_points())
            throw std::out_of_range("response_matrix: direction index " + std::to_string(direction_index) + " out of range [0, " +
                                    std::to_string(ef.n_points()) + ")");
        const std::size_t na = ef.n_antennas();
        Eigen::MatrixXcd e(na, 2);
        for (std::size_t l = 0; l < na; ++l)
        {
            e(l, 0) = ef.e_theta(direction_index, l);
            e(l, 1) = ef.e_phi(direction_index, l);
        }
        return e * e.adjoint();
    }

    // Adds weight * M_n for every listed direction into q (2L x 2L).
    inline void accumulate_response(const EFieldSet &ef, std::span<const std::size_t> directions, std::span<const double> weights,
                                    Eigen::MatrixXcd &q)
    {
        const std::size_t na = ef.n_antennas();
        if (q.rows() != static_cast<Eigen::Index>(na) || q.cols() != static_cast<Eigen::Index>(na))
            q = Eigen::MatrixXcd::Zero(na, na);
        if (!weights.empty() && weights.size() != directions.size())
            throw std::invalid_argument("accumulate_response: weights must match directions");
        for (std::size_t k = 0; k < directions.size(); ++k)
        {
            const auto blk = ef.direction_block(directions[k]);
            const double wt = weights.empty() ? 1.0 : weights[k];
            if (wt == 0.0)
                continue;
            for (std::size_t i = 0; i < na; ++i)
            {
                const cplx ti = wt * blk[2 * i], pi = wt * blk[2 * i + 1];
                for (std::size_t j = 0; j <= i; ++j)
                {
                    const cplx v = ti * std::conj(blk[2 * j]) + pi * std::conj(blk[2 * j + 1]);
                    q(i, j) += v;
                    if (j != i)
                        q(j, i) += std::conj(v);
                }
            }
        }
    }

    enum class ElementModel
    {
        isotropic,
        patch_cosine
    };

    inline std::string to_string(ElementModel m)
    {
        return m == ElementModel::isotropic ? "isotropic" : "patch_cosine";
    }

    inline ElementModel element_model_from_string(const std::string &s)
    {
        if (s == "isotropic")
            return ElementModel::isotropic;
        if (s == "patch_cosine")
            return ElementModel::patch_cosine;
        throw config_error("unknown element model '" + s + "' (expected isotropic or patch_cosine)");
    }

    // Housing-like per-port irregularity: uniform gain in [-max_gain_db, max_gain_db] and phase in
    // [-max_phase_deg, max_phase_deg], drawn per antenna port.
    struct RippleOptions
    {
        bool enabled = false;
        double max_gain_db = 1.0;
        double max_phase_deg = 10.0;
    };

    // Synthetic dual-polarized array: geometric phase exp(j 2 pi <p, u>) times an element amplitude
    // pattern. H-pol ports radiate into E_phi, V-pol ports into E_theta, no cross-pol.
    inline EFieldSet synthesize_array(const ArrayLayout &layout, const DirectionGrid &grid, ElementModel model, const Direction &boresight,
                                      std::uint64_t seed, const RippleOptions &ripple = {})
    {
        layout.validate();
        if (layout.positions.empty())
            throw std::invalid_argument("synthesize_array: layout must carry element positions");
        if (!is_valid(boresight))
            throw std::invalid_argument("synthesize_array: invalid boresight direction");

        const std::size_t L = layout.n_elements_per_pol, na = 2 * L;
        std::vector<cplx> port_factor(na, cplx(1.0, 0.0));
        if (ripple.enabled)
        {
            SplitMix64 gen(derive_seed(seed, 0x5249'5050'4c45ULL));
            for (std::size_t l = 0; l < na; ++l)
            {
                const double g_db = (2.0 * gen.next_double() - 1.0) * ripple.max_gain_db;
                const double ph = (2.0 * gen.next_double() - 1.0) * deg2rad(ripple.max_phase_deg);
                port_factor[l] = std::polar(std::pow(10.0, g_db / 20.0), ph);
            }
        }

        const Vec3 bs = cartesian(boresight);
        const double two_pi = 2.0 * std::numbers::pi;
        std::vector<cplx> data(grid.size() * na * 2, cplx(0.0, 0.0));
        for (std::size_t n = 0; n < grid.size(); ++n)
        {
            const Vec3 u = cartesian(grid[n]);
            const double amp = model == ElementModel::isotropic ? 1.0 : std::max(0.0, dot(u, bs));
            for (std::size_t e = 0; e < L; ++e)
            {
                const cplx geo = std::polar(amp, two_pi * dot(layout.positions[e], u));
                data[(n * na + e) * 2 + 1] = geo * port_factor[e];         // H-pol -> E_phi
                data[(n * na + L + e) * 2 + 0] = geo * port_factor[L + e]; // V-pol -> E_theta
            }
        }
        return EFieldSet(grid, layout, std::move(data));
    }
} // namespace subchain
