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

#include "subchain/codebook_io.hpp"
#include "subchain/designers.hpp"
#include "subchain/efield_io.hpp"
#include "subchain/metrics.hpp"
#include "subchain/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace subchain
{
    struct SyntheticArraySpec
    {
        std::string name;
        std::size_t n_elements = 5;
        double spacing = 0.5; // wavelengths
        Vec3 axis = {0.0, 1.0, 0.0};
        Direction boresight = {std::numbers::pi / 2, 0.0};
        ElementModel model = ElementModel::patch_cosine;
        RippleOptions ripple;
        std::uint64_t seed = 0;
    };

    struct EFieldSource
    {
        enum class Kind
        {
            synthetic,
            file
        };
        Kind kind = Kind::synthetic;
        std::size_t n_points = 10001;
        std::vector<SyntheticArraySpec> synthetic;
        EFieldFormat format = EFieldFormat::csv;
        std::string grid_path;
        std::vector<std::string> files;
    };

    struct EmitFlags
    {
        bool codebooks = true;
        bool metrics = true;
        bool traces = false;
    };

    inline const std::set<std::string> &design_methods()
    {
        static const std::set<std::string> m = {method_tag::sim_max, method_tag::sc_max, method_tag::bc_sc_max};
        return m;
    }

    struct PipelineConfig
    {
        EFieldSource efield;
        DesignConfig design;
        std::string method = method_tag::bc_sc_max;
        std::vector<std::size_t> levels; // empty = L, L-1, ..., 1
        bool repair = true;
        EmitFlags emit;
        std::string output_dir;

        // Two 1x5 dual-polarized arrays, lambda/2 along y, boresights +x and -x; b = 5, K = 7 per array,
        // N_p = 10001, levels 5..1.
        static PipelineConfig default_phone()
        {
            PipelineConfig c;
            SyntheticArraySpec left, right;
            left.name = "array0";
            left.boresight = {std::numbers::pi / 2, 0.0};
            left.seed = 1;
            right.name = "array1";
            right.boresight = {std::numbers::pi / 2, std::numbers::pi};
            right.seed = 2;
            c.efield.synthetic = {left, right};
            c.design.seed = 2026;
            return c;
        }

        // Levels with defaults applied, checked against L.
        std::vector<std::size_t> resolved_levels(std::size_t L) const
        {
            std::vector<std::size_t> lv = levels;
            if (lv.empty())
                for (std::size_t l = L; l >= 1; --l)
                    lv.push_back(l);
            if (!std::is_sorted(lv.begin(), lv.end(), std::greater<>()))
                throw config_error("levels must be sorted in descending order");
            if (std::adjacent_find(lv.begin(), lv.end()) != lv.end())
                throw config_error("levels must not repeat");
            if (lv.front() != L)
                throw config_error("the largest level must equal the array size L = " + std::to_string(L) + " (full chain)");
            if (lv.back() == 0)
                throw config_error("levels must be at least 1");
            return lv;
        }

        void validate() const
        {
            if (!design_methods().contains(method))
                throw config_error("unknown method '" + method + "' (expected sim-max, sc-max or bc-sc-max)");
            if (efield.kind == EFieldSource::Kind::synthetic)
            {
                if (efield.synthetic.empty())
                    throw config_error("synthetic E-field source needs at least one array");
                if (efield.n_points == 0)
                    throw config_error("n_points must be at least 1");
                for (const auto &a : efield.synthetic)
                {
                    if (a.n_elements != efield.synthetic.front().n_elements)
                        throw config_error("all arrays must have the same number of elements");
                    if (a.n_elements == 0)
                        throw config_error("arrays need at least one element");
                    if (!is_valid(a.boresight))
                        throw config_error("array '" + a.name + "': boresight outside theta in [0, 180], phi in [0, 360) degrees");
                    if (!std::isfinite(a.spacing))
                        throw config_error("array '" + a.name + "': spacing must be finite");
                }
            }
            else if (efield.files.empty())
                throw config_error("file E-field source needs at least one array file");
            DesignConfig d = design;
            d.L = std::max<std::size_t>(d.L, 1);
            d.l_active = d.L;
            d.validate();
        }
    };

    namespace detail
    {
        inline void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &where)
        {
            if (!j.is_object())
                throw config_error(where + " must be a JSON object");
            for (auto it = j.begin(); it != j.end(); ++it)
            {
                bool ok = false;
                for (const char *a : allowed)
                    ok = ok || it.key() == a;
                if (!ok)
                    throw config_error(where + ": unknown key '" + it.key() + "'");
            }
        }

        inline std::string resolve_path(const std::string &p, const std::filesystem::path &base)
        {
            if (p.empty())
                return p;
            std::filesystem::path path(p);
            if (path.is_relative() && !base.empty())
                path = base / path;
            return path.lexically_normal().string();
        }

        inline EFieldFormat format_from_string(const std::string &s)
        {
            if (s == "csv")
                return EFieldFormat::csv;
            if (s == "json")
                return EFieldFormat::json;
            throw config_error("unknown E-field format '" + s + "' (expected csv or json)");
        }

        inline std::string to_string(EFieldFormat f) { return f == EFieldFormat::csv ? "csv" : "json"; }
    } // namespace detail

    // Normalized configuration, every knob explicit. output_dir is not part of it.
    inline json config_to_json(const PipelineConfig &c)
    {
        json ef;
        if (c.efield.kind == EFieldSource::Kind::synthetic)
        {
            json arrays = json::array();
            for (const auto &a : c.efield.synthetic)
                arrays.push_back({{"name", a.name},
                                  {"n_elements", a.n_elements},
                                  {"spacing", a.spacing},
                                  {"axis", {a.axis[0], a.axis[1], a.axis[2]}},
                                  {"boresight_deg", {rad2deg(a.boresight.theta), rad2deg(a.boresight.phi)}},
                                  {"element_model", to_string(a.model)},
                                  {"ripple", {{"enabled", a.ripple.enabled}, {"max_gain_db", a.ripple.max_gain_db}, {"max_phase_deg", a.ripple.max_phase_deg}}},
                                  {"seed", a.seed}});
            ef = {{"source", "synthetic"}, {"grid", "fibonacci"}, {"n_points", c.efield.n_points}, {"arrays", std::move(arrays)}};
        }
        else
        {
            ef = {{"source", "file"}, {"format", detail::to_string(c.efield.format)}};
            if (c.efield.format == EFieldFormat::csv)
                ef["grid"] = c.efield.grid_path;
            ef["arrays"] = c.efield.files;
        }
        const auto &d = c.design;
        json design{{"K", d.K},
                    {"phase_bits", d.phase_bits},
                    {"n_restarts", d.n_restarts},
                    {"seed", d.seed},
                    {"kmeans_max_iters", d.kmeans_max_iters},
                    {"kmeans_tol", d.kmeans_tol},
                    {"pool_stride", d.pool_stride}};
        json j{{"efield", std::move(ef)}, {"design", std::move(design)}, {"method", c.method}, {"levels", c.levels}, {"repair", c.repair},
               {"emit", {{"codebooks", c.emit.codebooks}, {"metrics", c.emit.metrics}, {"traces", c.emit.traces}}}};
        return j;
    }

    // Accepts a pipeline config or a run manifest (its "config" member). Relative file paths are
    // resolved against base_dir. Missing keys take the default-phone values.
    inline PipelineConfig config_from_json(const json &in, const std::filesystem::path &base_dir = {})
    {
        const json &j = in.is_object() && in.contains("manifest_version") ? in.at("config") : in;
        PipelineConfig c = PipelineConfig::default_phone();
        try
        {
            detail::check_keys(j, {"efield", "design", "method", "levels", "repair", "emit", "output_dir", "threads"}, "config");
            if (j.contains("efield"))
            {
                const auto &e = j.at("efield");
                detail::check_keys(e, {"source", "grid", "n_points", "arrays", "format"}, "config.efield");
                const std::string source = e.value("source", "synthetic");
                if (source == "synthetic")
                {
                    c.efield.kind = EFieldSource::Kind::synthetic;
                    if (e.contains("grid") && e.at("grid") != "fibonacci")
                        throw config_error("config.efield.grid: synthetic sources use the 'fibonacci' grid");
                    c.efield.n_points = e.value("n_points", c.efield.n_points);
                    if (e.contains("arrays"))
                    {
                        c.efield.synthetic.clear();
                        std::size_t idx = 0;
                        for (const auto &a : e.at("arrays"))
                        {
                            detail::check_keys(a, {"name", "n_elements", "spacing", "axis", "boresight_deg", "element_model", "ripple", "seed"},
                                               "config.efield.arrays[" + std::to_string(idx) + "]");
                            SyntheticArraySpec s;
                            s.name = a.value("name", "array" + std::to_string(idx));
                            s.n_elements = a.value("n_elements", s.n_elements);
                            s.spacing = a.value("spacing", s.spacing);
                            if (a.contains("axis"))
                            {
                                const auto ax = a.at("axis").get<std::vector<double>>();
                                if (ax.size() != 3)
                                    throw config_error("axis must be a 3-vector");
                                s.axis = {ax[0], ax[1], ax[2]};
                            }
                            if (a.contains("boresight_deg"))
                            {
                                const auto b = a.at("boresight_deg").get<std::vector<double>>();
                                if (b.size() != 2)
                                    throw config_error("boresight_deg must be [theta, phi]");
                                s.boresight = {deg2rad(b[0]), deg2rad(b[1])};
                            }
                            if (a.contains("element_model"))
                                s.model = element_model_from_string(a.at("element_model").get<std::string>());
                            if (a.contains("ripple"))
                            {
                                const auto &r = a.at("ripple");
                                if (r.is_boolean())
                                    s.ripple.enabled = r.get<bool>();
                                else
                                {
                                    detail::check_keys(r, {"enabled", "max_gain_db", "max_phase_deg"}, "ripple");
                                    s.ripple.enabled = r.value("enabled", false);
                                    s.ripple.max_gain_db = r.value("max_gain_db", s.ripple.max_gain_db);
                                    s.ripple.max_phase_deg = r.value("max_phase_deg", s.ripple.max_phase_deg);
                                }
                            }
                            s.seed = a.value("seed", static_cast<std::uint64_t>(idx + 1));
                            c.efield.synthetic.push_back(s);
                            ++idx;
                        }
                    }
                }
                else if (source == "file")
                {
                    c.efield.kind = EFieldSource::Kind::file;
                    c.efield.format = detail::format_from_string(e.value("format", "csv"));
                    if (c.efield.format == EFieldFormat::csv)
                    {
                        if (!e.contains("grid"))
                            throw config_error("config.efield: csv sources need a 'grid' file");
                        c.efield.grid_path = detail::resolve_path(e.at("grid").get<std::string>(), base_dir);
                    }
                    c.efield.files.clear();
                    for (const auto &f : e.at("arrays"))
                        c.efield.files.push_back(detail::resolve_path(f.get<std::string>(), base_dir));
                }
                else
                    throw config_error("config.efield.source must be 'synthetic' or 'file'");
            }
            if (j.contains("design"))
            {
                const auto &d = j.at("design");
                detail::check_keys(d, {"K", "phase_bits", "n_restarts", "seed", "kmeans_max_iters", "kmeans_tol", "pool_stride"}, "config.design");
                c.design.K = d.value("K", c.design.K);
                c.design.phase_bits = d.value("phase_bits", c.design.phase_bits);
                c.design.n_restarts = d.value("n_restarts", c.design.n_restarts);
                c.design.seed = d.value("seed", c.design.seed);
                c.design.kmeans_max_iters = d.value("kmeans_max_iters", c.design.kmeans_max_iters);
                c.design.kmeans_tol = d.value("kmeans_tol", c.design.kmeans_tol);
                c.design.pool_stride = d.value("pool_stride", c.design.pool_stride);
            }
            c.method = j.value("method", c.method);
            if (j.contains("levels"))
                c.levels = j.at("levels").get<std::vector<std::size_t>>();
            c.repair = j.value("repair", c.repair);
            if (j.contains("emit"))
            {
                const auto &e = j.at("emit");
                detail::check_keys(e, {"codebooks", "metrics", "traces"}, "config.emit");
                c.emit.codebooks = e.value("codebooks", c.emit.codebooks);
                c.emit.metrics = e.value("metrics", c.emit.metrics);
                c.emit.traces = e.value("traces", c.emit.traces);
            }
            if (j.contains("output_dir"))
                c.output_dir = detail::resolve_path(j.at("output_dir").get<std::string>(), base_dir);
            if (j.contains("threads"))
                c.design.threads = j.at("threads").get<std::size_t>();
        }
        catch (const json::exception &e)
        {
            throw config_error(std::string("config: ") + e.what());
        }
        c.validate();
        return c;
    }

    inline PipelineConfig load_config(const std::string &path)
    {
        json j;
        try
        {
            j = json::parse(read_text_file(path));
        }
        catch (const json::exception &e)
        {
            throw config_error("config '" + path + "' is not valid JSON: " + e.what());
        }
        catch (const data_error &e)
        {
            throw config_error(e.what());
        }
        return config_from_json(j, std::filesystem::path(path).parent_path());
    }

    // One EFieldSet per array, all on the same grid.
    inline std::vector<EFieldSet> build_arrays(const EFieldSource &src)
    {
        std::vector<EFieldSet> out;
        if (src.kind == EFieldSource::Kind::synthetic)
        {
            const auto grid = fibonacci_grid(src.n_points);
            for (const auto &a : src.synthetic)
            {
                const double norm = std::sqrt(dot(a.axis, a.axis));
                if (!(norm > 0.0))
                    throw config_error("array '" + a.name + "': axis must be nonzero");
                const Vec3 axis = {a.axis[0] / norm, a.axis[1] / norm, a.axis[2] / norm};
                out.push_back(synthesize_array(line_array(a.n_elements, a.spacing, axis), grid, a.model, a.boresight, a.seed, a.ripple));
            }
        }
        else
        {
            for (const auto &f : src.files)
                out.push_back(load_efield(f, src.format, src.grid_path));
            for (std::size_t a = 1; a < out.size(); ++a)
            {
                if (!out[a].grid().same_points(out[0].grid()))
                    throw data_error("E-field file '" + src.files[a] + "' is sampled on a different grid than '" + src.files[0] + "'");
                if (out[a].n_pol_elements() != out[0].n_pol_elements())
                    throw data_error("E-field file '" + src.files[a] + "' has a different array size than '" + src.files[0] + "'");
            }
        }
        return out;
    }

    inline constexpr std::uint64_t array_seed_key = 0x41525259; // "ARRY"

    inline std::uint64_t array_seed(std::uint64_t master, std::size_t array_index) { return derive_seed(master, array_seed_key, array_index); }

    struct ArrayDesign
    {
        std::uint64_t seed = 0;
        KMeansDesign fullchain;
        std::map<std::size_t, Codebook> init;         // greedy init per K-Means level (sc-max)
        std::map<std::size_t, KMeansReport> kmeans;   // per sc-max level
        std::map<std::size_t, GreedyReport> greedy;   // per sc-max level
        CodebookFamily family;
    };

    struct MetricsBundle
    {
        std::vector<std::size_t> levels;
        std::size_t n_beams = 0;
        std::map<std::size_t, BestBeamMap> maps; // phone-wide index space
        MatchingReport matching;
        std::map<std::size_t, CoverageCdf> cdf;
        std::vector<std::map<std::size_t, Matrix2D<double>>> similarity; // per array: full chain vs level
    };

    struct RunResult
    {
        PipelineConfig config;
        std::vector<std::size_t> levels;
        std::vector<EFieldSet> arrays;
        std::vector<ArrayDesign> designs;
        MetricsBundle metrics;
    };

    // Metrics over the concatenated beam index space of all arrays.
    inline MetricsBundle evaluate(std::span<const EFieldSet> arrays, std::span<const CodebookFamily> families, const std::vector<std::size_t> &levels)
    {
        if (arrays.size() != families.size() || arrays.empty())
            throw std::invalid_argument("evaluate: need one codebook family per array");
        MetricsBundle m;
        m.levels = levels;
        for (std::size_t la : levels)
        {
            std::vector<Codebook> cbs;
            for (const auto &f : families)
                cbs.push_back(f.at(la));
            m.maps.emplace(la, best_beam_map(phone_gain_table(arrays, cbs)));
            m.cdf.emplace(la, coverage_cdf(m.maps.at(la)));
        }
        for (const auto &f : families)
            m.n_beams += f.beam_count();
        m.matching = matching_report(m.maps, m.n_beams);
        const std::size_t full = levels.front();
        m.similarity.resize(arrays.size());
        for (std::size_t a = 0; a < arrays.size(); ++a)
            for (std::size_t la : levels)
                m.similarity[a].emplace(la, similarity_matrix(arrays[a], families[a].at(full), families[a].at(la)));
        return m;
    }

    // Designs the full family for every array and evaluates it; no files are touched.
    inline RunResult run_design(const PipelineConfig &cfg)
    {
        cfg.validate();
        RunResult r;
        r.config = cfg;
        r.arrays = build_arrays(cfg.efield);
        const std::size_t L = r.arrays.front().n_pol_elements();
        r.levels = cfg.resolved_levels(L);

        for (std::size_t a = 0; a < r.arrays.size(); ++a)
        {
            const EFieldSet &ef = r.arrays[a];
            DesignConfig dc = cfg.design;
            dc.L = L;
            dc.l_active = L;
            dc.seed = array_seed(cfg.design.seed, a);
            check_design_inputs(ef, dc);

            ArrayDesign d;
            d.seed = dc.seed;
            d.fullchain = design_fullchain_kmeans(ef, dc);
            d.family.add(d.fullchain.codebook);
            for (std::size_t la : r.levels)
            {
                if (la == L)
                    continue;
                const DesignConfig lc = dc.at_level(la);
                if (cfg.method == method_tag::sim_max)
                    d.family.add(design_simmax(ef, d.fullchain.codebook, lc));
                else if (cfg.method == method_tag::bc_sc_max)
                    d.family.add(design_bcscmax(ef, d.fullchain.codebook, lc));
                else
                {
                    auto sc = design_scmax(ef, lc);
                    d.init.emplace(la, sc.init);
                    d.kmeans.emplace(la, sc.kmeans);
                    d.greedy.emplace(la, sc.greedy);
                    d.family.add(std::move(sc.codebook));
                }
            }
            r.designs.push_back(std::move(d));
        }

        std::vector<CodebookFamily> fams;
        for (const auto &d : r.designs)
            fams.push_back(d.family);
        r.metrics = evaluate(r.arrays, fams, r.levels);
        return r;
    }

    // Solver convergence dump: one JSON line per coordinate step, tagged with its restart and sweep.
    inline std::string ascent_trace_jsonl(std::span<const RestartTrace> traces, std::size_t n_active)
    {
        std::ostringstream os;
        for (std::size_t r = 0; r < traces.size(); ++r)
        {
            const auto &t = traces[r];
            for (std::size_t s = 0; s < t.sweeps.size(); ++s)
                os << json{{"stage", "sweep"}, {"restart", r}, {"sweep", s + 1}, {"objective", t.sweeps[s]}}.dump() << '\n';
            for (std::size_t u = 0; u < t.updates.size(); ++u)
            {
                const std::size_t sweep = u == 0 ? 0 : (u - 1) / std::max<std::size_t>(n_active, 1) + 1;
                os << json{{"stage", "update"}, {"restart", r}, {"sweep", sweep}, {"step", u}, {"objective", t.updates[u]}}.dump() << '\n';
            }
        }
        return os.str();
    }

    // ---------------------------------------------------------------------------------------------
    // Artifact rendering

    using ArtifactSet = std::vector<std::pair<std::string, std::string>>; // relative path, content

    namespace detail
    {
        inline std::string codebook_name(std::size_t array, std::size_t level, const char *prefix = "")
        {
            return std::string("codebooks/") + prefix + "array" + std::to_string(array) + "_L" + std::to_string(level) + ".json";
        }

        inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

        inline std::string matching_csv(const MetricsBundle &m)
        {
            std::ostringstream os;
            os << "level_1,level_2,matching_rate,repaired_rate\n";
            for (std::size_t i = 0; i < m.levels.size(); ++i)
                for (std::size_t j = 0; j < m.levels.size(); ++j)
                    os << m.levels[i] << ',' << m.levels[j] << ',' << format_double(m.matching.rate[i][j]) << ','
                       << format_double(m.matching.repaired[i][j]) << '\n';
            return os.str();
        }

        inline std::string pairing_csv(const MetricsBundle &m)
        {
            std::ostringstream os;
            os << "level_1,level_2,beam_1,beam_2\n";
            for (std::size_t i = 0; i < m.levels.size(); ++i)
                for (std::size_t j = 0; j < m.levels.size(); ++j)
                    for (std::size_t k = 0; k < m.matching.perm[i][j].size(); ++k)
                        os << m.levels[i] << ',' << m.levels[j] << ',' << (k + 1) << ',' << (m.matching.perm[i][j][k] + 1) << '\n';
            return os.str();
        }

        inline std::string cdf_csv(const CoverageCdf &c)
        {
            std::ostringstream os;
            os << "percentile,gain_dbi\n";
            for (int p = 0; p <= 100; ++p)
                os << p << ',' << format_double(c.percentile(static_cast<double>(p))) << '\n';
            return os.str();
        }

        inline std::string best_beam_csv(const BestBeamMap &m)
        {
            std::ostringstream os;
            os << "direction_index,best_beam,composite_gain\n";
            for (std::size_t n = 0; n < m.size(); ++n)
                os << n << ',' << (m.index[n] + 1) << ',' << format_double(m.gains[n]) << '\n';
            return os.str();
        }

        inline std::string similarity_csv(const Matrix2D<double> &s)
        {
            std::ostringstream os;
            os << "reference_beam";
            const std::size_t cols = s.empty() ? 0 : s.front().size();
            for (std::size_t j = 0; j < cols; ++j)
                os << ",candidate_" << (j + 1);
            os << '\n';
            for (std::size_t i = 0; i < s.size(); ++i)
            {
                os << (i + 1);
                for (double v : s[i])
                    os << ',' << format_double(v);
                os << '\n';
            }
            return os.str();
        }

        inline json kmeans_json(const KMeansReport &k)
        {
            return {{"iterations", k.iterations}, {"reseeds", k.reseeds}, {"stop_reason", k.stop_reason}, {"objective", k.objective}};
        }
    } // namespace detail

    inline ArtifactSet render_metrics(const MetricsBundle &m)
    {
        ArtifactSet out;
        out.emplace_back("metrics/matching.csv", detail::matching_csv(m));
        out.emplace_back("metrics/pairing.csv", detail::pairing_csv(m));
        for (std::size_t la : m.levels)
        {
            out.emplace_back("metrics/cdf_L" + std::to_string(la) + ".csv", detail::cdf_csv(m.cdf.at(la)));
            out.emplace_back("metrics/best_beam_L" + std::to_string(la) + ".csv", detail::best_beam_csv(m.maps.at(la)));
        }
        for (std::size_t a = 0; a < m.similarity.size(); ++a)
            for (std::size_t la : m.levels)
                out.emplace_back("metrics/similarity_array" + std::to_string(a) + "_L" + std::to_string(la) + ".csv",
                                 detail::similarity_csv(m.similarity[a].at(la)));
        return out;
    }

    inline ArtifactSet render_run(const RunResult &r)
    {
        ArtifactSet out;
        json arrays = json::array();
        json inits = json::array();
        for (std::size_t a = 0; a < r.designs.size(); ++a)
        {
            const auto &d = r.designs[a];
            const std::size_t L = r.levels.front();
            if (r.config.emit.codebooks)
            {
                for (std::size_t la : r.levels)
                    out.emplace_back(detail::codebook_name(a, la), detail::dump(codebook_to_json(d.family.at(la))));
                std::ostringstream fam;
                write_family_csv(fam, d.family);
                out.emplace_back("codebooks/family_array" + std::to_string(a) + ".csv", fam.str());
                out.emplace_back(detail::codebook_name(a, L, "init_"), detail::dump(codebook_to_json(d.fullchain.init)));
                inits.push_back(detail::codebook_name(a, L, "init_"));
                for (const auto &[la, cb] : d.init)
                {
                    out.emplace_back(detail::codebook_name(a, la, "init_"), detail::dump(codebook_to_json(cb)));
                    inits.push_back(detail::codebook_name(a, la, "init_"));
                }
            }
            json levels_kmeans = json::object();
            for (const auto &[la, k] : d.kmeans)
                levels_kmeans[std::to_string(la)] = detail::kmeans_json(k);
            arrays.push_back({{"index", a},
                              {"n_pol_elements", r.arrays[a].n_pol_elements()},
                              {"design_seed", d.seed},
                              {"fullchain_kmeans", detail::kmeans_json(d.fullchain.kmeans)},
                              {"fullchain_greedy_objective", d.fullchain.greedy.objective},
                              {"sub_level_kmeans", std::move(levels_kmeans)}});
        }
        if (r.config.emit.metrics)
        {
            for (auto &f : render_metrics(r.metrics))
                if (r.config.repair || f.first != "metrics/pairing.csv")
                    out.push_back(std::move(f));
        }
        if (r.config.emit.traces)
        {
            std::ostringstream tr;
            for (std::size_t a = 0; a < r.designs.size(); ++a)
            {
                const auto &d = r.designs[a];
                auto emit_greedy = [&](std::size_t la, const GreedyReport &g)
                {
                    for (std::size_t s = 0; s < g.objective.size(); ++s)
                        tr << json{{"stage", "greedy"}, {"array", a}, {"level", la}, {"step", s}, {"objective", g.objective[s]}}.dump() << '\n';
                };
                auto emit_kmeans = [&](std::size_t la, const KMeansReport &k)
                {
                    for (std::size_t s = 0; s < k.objective.size(); ++s)
                        tr << json{{"stage", "kmeans"}, {"array", a}, {"level", la}, {"iteration", s}, {"objective", k.objective[s]}}.dump() << '\n';
                };
                emit_greedy(r.levels.front(), d.fullchain.greedy);
                emit_kmeans(r.levels.front(), d.fullchain.kmeans);
                for (const auto &[la, g] : d.greedy)
                    emit_greedy(la, g);
                for (const auto &[la, k] : d.kmeans)
                    emit_kmeans(la, k);
            }
            out.emplace_back("traces.jsonl", tr.str());
        }

        json artifacts = json::array();
        for (const auto &[path, _] : out)
            artifacts.push_back(path);
        const auto &grid = r.arrays.front().grid();
        json manifest{{"manifest_version", 1},
                      {"tool", "subchain"},
                      {"version", version_string},
                      {"config", config_to_json(r.config)},
                      {"levels", r.levels},
                      {"grid", {{"variant", grid.variant()}, {"n_points", grid.size()}}},
                      {"beams_per_array", r.config.design.K},
                      {"arrays", std::move(arrays)},
                      {"init_codebooks", std::move(inits)},
                      {"seed_splitting", "sub_seed = derive_seed(master, keys...) via SplitMix64 finalizer; array seed keys (0x41525259, a)"},
                      {"dbi_floor", dbi_floor},
                      {"artifacts", std::move(artifacts)}};
        out.emplace_back("manifest.json", detail::dump(manifest));
        return out;
    }

    // Error record written to the output directory on failure.
    inline std::string error_record(int exit_code, const std::string &kind, const std::string &message)
    {
        return detail::dump(json{{"error", {{"exit_code", exit_code}, {"kind", kind}, {"message", message}}}});
    }

    inline int exit_code_for(const std::exception_ptr &e, std::string *kind = nullptr, std::string *message = nullptr)
    {
        try
        {
            std::rethrow_exception(e);
        }
        catch (const config_error &x)
        {
            if (kind)
                *kind = "config_error";
            if (message)
                *message = x.what();
            return 2;
        }
        catch (const data_error &x)
        {
            if (kind)
                *kind = "data_error";
            if (message)
                *message = x.what();
            return 3;
        }
        catch (const std::exception &x)
        {
            if (kind)
                *kind = "internal_error";
            if (message)
                *message = x.what();
            return 4;
        }
        catch (...)
        {
            if (kind)
                *kind = "internal_error";
            if (message)
                *message = "unknown exception";
            return 4;
        }
    }

    // Writes every artifact; on any failure removes what was written, leaves error.json and rethrows.
    inline void write_artifacts(const ArtifactSet &files, const std::filesystem::path &out_dir)
    {
        namespace fs = std::filesystem;
        std::vector<fs::path> written;
        try
        {
            fs::create_directories(out_dir);
            fs::remove(out_dir / "error.json");
            for (const auto &[rel, content] : files)
            {
                const fs::path p = out_dir / rel;
                fs::create_directories(p.parent_path());
                std::ofstream f(p, std::ios::binary);
                if (!f)
                    throw data_error("cannot write '" + p.string() + "'");
                written.push_back(p);
                f << content;
                if (!f)
                    throw data_error("failed writing '" + p.string() + "'");
            }
        }
        catch (...)
        {
            std::error_code ec;
            for (const auto &p : written)
                fs::remove(p, ec);
            throw;
        }
    }

    inline void record_failure(const std::filesystem::path &out_dir, const std::exception_ptr &e)
    {
        std::string kind, message;
        const int code = exit_code_for(e, &kind, &message);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        std::ofstream f(out_dir / "error.json", std::ios::binary);
        f << error_record(code, kind, message);
    }

    // design + evaluate + write; fail-fast with error.json in out_dir.
    inline RunResult run_design_pipeline(const PipelineConfig &cfg, const std::filesystem::path &out_dir)
    {
        try
        {
            RunResult r = run_design(cfg);
            write_artifacts(render_run(r), out_dir);
            return r;
        }
        catch (...)
        {
            record_failure(out_dir, std::current_exception());
            throw;
        }
    }

    // ---------------------------------------------------------------------------------------------
    // Reading finished runs

    struct LoadedRun
    {
        std::filesystem::path dir;
        json manifest;
        PipelineConfig config;
        std::vector<std::size_t> levels;
        std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> matching; // (L1, L2) -> (rate, repaired)
        std::map<std::size_t, std::vector<std::pair<int, double>>> cdf;                     // level -> (percentile, dBi)
    };

    namespace detail
    {
        inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path &p, const std::string &expected_header)
        {
            std::istringstream is(read_text_file(p.string()));
            std::string line;
            if (!std::getline(is, line))
                throw data_error("'" + p.string() + "' is empty");
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line != expected_header)
                throw data_error("'" + p.string() + "': expected header '" + expected_header + "'");
            std::vector<std::vector<std::string>> rows;
            while (std::getline(is, line))
            {
                if (line.empty())
                    continue;
                std::vector<std::string> f;
                for (auto sv : split_csv(line))
                    f.emplace_back(sv);
                rows.push_back(std::move(f));
            }
            return rows;
        }
    } // namespace detail

    inline json load_manifest(const std::filesystem::path &run_dir)
    {
        const auto p = run_dir / "manifest.json";
        json m = read_json_file(p.string());
        if (!m.is_object() || !m.contains("manifest_version") || !m.contains("config") || !m.contains("levels"))
            throw data_error("'" + p.string() + "' is not a subchain run manifest");
        return m;
    }

    inline LoadedRun load_run_metrics(const std::filesystem::path &run_dir)
    {
        LoadedRun r;
        r.dir = run_dir;
        r.manifest = load_manifest(run_dir);
        r.config = config_from_json(r.manifest);
        r.levels = r.manifest.at("levels").get<std::vector<std::size_t>>();
        for (const auto &row : detail::read_csv(run_dir / "metrics/matching.csv", "level_1,level_2,matching_rate,repaired_rate"))
        {
            if (row.size() != 4)
                throw data_error("matching.csv: malformed row");
            r.matching[{detail::parse_index(row[0]), detail::parse_index(row[1])}] = {detail::parse_double(row[2]), detail::parse_double(row[3])};
        }
        for (std::size_t la : r.levels)
        {
            auto &c = r.cdf[la];
            for (const auto &row : detail::read_csv(run_dir / ("metrics/cdf_L" + std::to_string(la) + ".csv"), "percentile,gain_dbi"))
            {
                if (row.size() != 2)
                    throw data_error("cdf csv: malformed row");
                c.emplace_back(static_cast<int>(detail::parse_index(row[0])), detail::parse_double(row[1]));
            }
        }
        return r;
    }

    // Codebook families of a finished run, read back from its codebook JSON files.
    inline std::vector<CodebookFamily> load_run_families(const std::filesystem::path &run_dir, const json &manifest)
    {
        const auto levels = manifest.at("levels").get<std::vector<std::size_t>>();
        const std::size_t n_arrays = manifest.at("arrays").size();
        std::vector<CodebookFamily> fams(n_arrays);
        for (std::size_t a = 0; a < n_arrays; ++a)
            for (std::size_t la : levels)
                fams[a].add(codebook_from_json(read_json_file((run_dir / detail::codebook_name(a, la)).string())));
        return fams;
    }

    // Recomputes the metric bundle of a finished run from its codebooks and E-field source.
    inline MetricsBundle run_metrics(const std::filesystem::path &run_dir)
    {
        const json manifest = load_manifest(run_dir);
        const PipelineConfig cfg = config_from_json(manifest);
        const auto arrays = build_arrays(cfg.efield);
        const auto fams = load_run_families(run_dir, manifest);
        if (fams.size() != arrays.size())
            throw data_error("run has " + std::to_string(fams.size()) + " codebook families but the E-field source has " + std::to_string(arrays.size()) +
                             " arrays");
        return evaluate(arrays, fams, manifest.at("levels").get<std::vector<std::size_t>>());
    }

    // Side-by-side matching rates and CDF percentiles of several runs; deltas are against the first run.
    inline ArtifactSet run_compare(const std::vector<std::filesystem::path> &run_dirs)
    {
        if (run_dirs.empty())
            throw config_error("compare: no runs given");
        std::vector<LoadedRun> runs;
        for (const auto &d : run_dirs)
            runs.push_back(load_run_metrics(d));

        const auto &ref = runs.front();
        for (std::size_t i = 1; i < runs.size(); ++i)
        {
            const auto &r = runs[i];
            if (r.manifest.at("grid") != ref.manifest.at("grid"))
                throw data_error("compare: run '" + r.dir.string() + "' uses a different grid");
            if (r.levels != ref.levels)
                throw data_error("compare: run '" + r.dir.string() + "' uses different activation levels");
            if (r.manifest.at("beams_per_array") != ref.manifest.at("beams_per_array") || r.manifest.at("arrays").size() != ref.manifest.at("arrays").size())
                throw data_error("compare: run '" + r.dir.string() + "' uses a different codebook size");
        }

        std::ostringstream mm, cc;
        mm << "level_1,level_2,run,method,matching_rate,repaired_rate,delta_matching_rate,delta_repaired_rate\n";
        cc << "level,percentile,run,method,gain_dbi,delta_gain_dbi\n";
        for (std::size_t la1 : ref.levels)
            for (std::size_t la2 : ref.levels)
                for (std::size_t i = 0; i < runs.size(); ++i)
                {
                    const auto v = runs[i].matching.at({la1, la2});
                    const auto v0 = ref.matching.at({la1, la2});
                    mm << la1 << ',' << la2 << ',' << i << ',' << runs[i].config.method << ',' << detail::format_double(v.first) << ','
                       << detail::format_double(v.second) << ',' << detail::format_double(v.first - v0.first) << ','
                       << detail::format_double(v.second - v0.second) << '\n';
                }
        for (std::size_t la : ref.levels)
        {
            const auto &c0 = ref.cdf.at(la);
            for (std::size_t k = 0; k < c0.size(); ++k)
                for (std::size_t i = 0; i < runs.size(); ++i)
                {
                    const auto &c = runs[i].cdf.at(la);
                    if (c.size() != c0.size() || c[k].first != c0[k].first)
                        throw data_error("compare: CDF percentiles differ between runs");
                    cc << la << ',' << c0[k].first << ',' << i << ',' << runs[i].config.method << ',' << detail::format_double(c[k].second) << ','
                       << detail::format_double(c[k].second - c0[k].second) << '\n';
                }
        }
        json runs_json = json::array();
        for (std::size_t i = 0; i < runs.size(); ++i)
            runs_json.push_back({{"run", i}, {"path", runs[i].dir.string()}, {"method", runs[i].config.method}});
        return {{"compare_matching.csv", mm.str()}, {"compare_cdf.csv", cc.str()}, {"compare_runs.json", detail::dump(json{{"runs", runs_json}})}};
    }
} // namespace subchain
