#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bltv/ant.hpp"
#include "bltv/lti.hpp"
#include "bltv/ltv.hpp"
#include "bltv/signal.hpp"

namespace bltv::io {

// CSV with a `sample_rate=<float>` header line and one sample per line.
// Readers reject NaN/Inf.
void write_signal(const std::filesystem::path& path, const Signal& s);
Signal read_signal(const std::filesystem::path& path);

// CSV matrix with a `p=<int>,n=<int>,sample_rate=<float>` header; the `_std`
// companion (same format) is written when uncertainty is present.
void write_tvir(const std::filesystem::path& path, const TimeVaryingIR& ir);
TimeVaryingIR read_tvir(const std::filesystem::path& path);

// {p, mean[], std[], config, final_loss, trace_downsampled[]}
void write_lti_fit(const std::filesystem::path& path, const LtiFit& fit,
                   int trace_stride = 10);
LtiFit read_lti_fit(const std::filesystem::path& path);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                     std::uint64_t seed);

void write_misfit_map(const std::filesystem::path& path, const MisfitMap& map);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

std::string format_double(double v);

} // namespace bltv::io
