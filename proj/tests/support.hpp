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

// Shared fixtures and independent reference computations for the test suites.

#include "subchain/pipeline.hpp"

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace subchain::test
{
    inline Eigen::MatrixXcd random_psd(std::size_t L, std::mt19937_64 &rng, std::size_t rank = 0)
    {
        const auto dim = static_cast<Eigen::Index>(2 * L);
        const auto r = static_cast<Eigen::Index>(rank == 0 ? 2 * L : rank);
        std::normal_distribution<double> g;
        Eigen::MatrixXcd a(dim, r);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < r; ++j)
                a(i, j) = {g(rng), g(rng)};
        Eigen::MatrixXcd q = a * a.adjoint();
        return 0.5 * (q + q.adjoint());
    }

    // Random responses on a Fibonacci grid; no geometry.
    inline EFieldSet random_efield(std::size_t L, std::size_t n_points, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        std::vector<cplx> data(n_points * 2 * L * 2);
        for (auto &z : data)
            z = {g(rng), g(rng)};
        return EFieldSet(fibonacci_grid(n_points), ArrayLayout(L), std::move(data));
    }

    inline BeamWeights random_beam(std::size_t L, std::size_t la, int bits, std::mt19937_64 &rng)
    {
        std::vector<std::optional<std::size_t>> idx(2 * L);
        std::uniform_int_distribution<std::size_t> ph(0, (std::size_t{1} << bits) - 1);
        for (std::size_t half = 0; half < 2; ++half)
        {
            std::vector<std::size_t> ports(L);
            for (std::size_t l = 0; l < L; ++l)
                ports[l] = l;
            std::shuffle(ports.begin(), ports.end(), rng);
            for (std::size_t k = 0; k < la; ++k)
                idx[half * L + ports[k]] = ph(rng);
        }
        return BeamWeights::from_phase_indices(idx, bits);
    }

    inline Codebook random_codebook(std::size_t K, std::size_t L, std::size_t la, int bits, std::mt19937_64 &rng)
    {
        std::vector<BeamWeights> beams;
        for (std::size_t k = 0; k < K; ++k)
            beams.push_back(random_beam(L, la, bits, rng));
        return Codebook(std::move(beams), L, la, bits, "random");
    }

    inline Eigen::VectorXcd to_eigen(std::span<const cplx> w)
    {
        Eigen::VectorXcd v(static_cast<Eigen::Index>(w.size()));
        for (std::size_t i = 0; i < w.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = w[i];
        return v;
    }

    // w^H M w with M formed explicitly from the stored responses.
    inline double reference_gain(const EFieldSet &ef, std::span<const cplx> w, std::size_t n)
    {
        const auto M = response_matrix(ef, n);
        const auto v = to_eigen(w);
        return (v.adjoint() * M * v)(0, 0).real();
    }

    inline double quadratic(const Eigen::MatrixXcd &q, std::span<const cplx> w)
    {
        const auto v = to_eigen(w);
        return (v.adjoint() * q * v)(0, 0).real();
    }

    // Small two-array phone used by pipeline tests.
    inline PipelineConfig small_phone(std::size_t n_points = 400)
    {
        PipelineConfig c = PipelineConfig::default_phone();
        c.efield.n_points = n_points;
        c.design.K = 3;
        c.design.phase_bits = 3;
        c.design.n_restarts = 4;
        c.design.pool_stride = 4;
        return c;
    }

    inline EFieldSet small_array(std::size_t L = 5, std::size_t n_points = 500, double boresight_phi = 0.0)
    {
        return synthesize_array(line_array(L), fibonacci_grid(n_points), ElementModel::patch_cosine, {std::numbers::pi / 2, boresight_phi}, 1);
    }

    inline std::filesystem::path scratch_dir(const std::string &name)
    {
        const auto p = std::filesystem::temp_directory_path() / ("subchain_test_" + name);
        std::filesystem::remove_all(p);
        std::filesystem::create_directories(p);
        return p;
    }

    inline std::string slurp(const std::filesystem::path &p) { return read_text_file(p.string()); }
} // namespace subchain::test
