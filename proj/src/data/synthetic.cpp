#include <algorithm>
#include <cmath>
#include <numbers>

#include "rainbench/data.hpp"
#include "rainbench/rng.hpp"

namespace rainbench::data {

std::string region_name(std::size_t index)
{
    static constexpr std::array<std::string_view, 4> names = {"ROC", "BUF", "SYR", "ALB"};
    return index < names.size() ? std::string(names[index]) : "R" + std::to_string(index);
}

namespace {

double round_to(double v, double step) { return std::round(v / step) * step; }

// Magnus-formula relative humidity from air and dew-point temperature in F.
double relative_humidity(double tmpf, double dwpf)
{
    const double t = (tmpf - 32.0) / 1.8;
    const double td = (dwpf - 32.0) / 1.8;
    const double rh = 100.0 * std::exp(17.625 * td / (243.04 + td)) / std::exp(17.625 * t / (243.04 + t));
    return std::clamp(rh, 0.0, 100.0);
}

struct Ar1 {
    double phi;
    double scale;
    double value = 0.0;

    double step(Rng& rng)
    {
        value = phi * value + std::sqrt(1.0 - phi * phi) * rng.normal();
        return scale * value;
    }
};

} // namespace

std::vector<std::vector<WeatherRecord>> generate_synthetic(const SynthOptions& options)
{
    require(options.hours >= 48, ErrorKind::validation, "synthetic data needs at least 48 hours");
    require(options.regions >= 1, ErrorKind::validation, "synthetic data needs at least one region");
    require(options.missing_frac >= 0.0 && options.missing_frac < 1.0, ErrorKind::validation,
            "missing fraction must lie in [0,1)");
    require(options.persistence >= 0.0 && options.persistence < 1.0, ErrorKind::validation,
            "persistence must lie in [0,1)");

    Rng rng(options.seed);
    const Minutes start = options.start != 0 ? options.start : parse_timestamp("2010-01-01 00:00");

    // Shared wetness field; weather drifts west to east, so upstream regions
    // see it a few hours before the primary station.
    static constexpr std::array<int, 4> leads = {0, 2, -1, -3};
    const int max_lead = 3;
    const std::size_t span = options.hours + 2 * max_lead;
    std::vector<double> wetness(span);
    Ar1 shared{options.persistence, 1.0};
    for (std::size_t i = 0; i < 50; ++i) {
        shared.step(rng);
    }
    for (auto& w : wetness) {
        w = shared.step(rng);
    }

    std::vector<std::vector<WeatherRecord>> out(options.regions);
    for (std::size_t region = 0; region < options.regions; ++region) {
        const int lead = region < leads.size() ? leads[region] : -static_cast<int>(region % 4);
        const double offset = 1.5 * static_cast<double>(region);
        Ar1 local_wet{options.persistence, 0.35};
        Ar1 temp_noise{0.9, 3.0};
        Ar1 wind_noise{0.7, 3.0};
        Ar1 pressure_noise{0.98, 0.12};
        double direction = rng.uniform(0.0, 360.0);
        auto& records = out[region];
        records.reserve(options.hours + options.hours / 5);

        for (std::size_t h = 0; h < options.hours; ++h) {
            const auto idx = static_cast<std::size_t>(static_cast<int>(h) + max_lead + lead);
            const double wet = wetness[idx] + local_wet.step(rng);
            const Minutes hour_start = start + static_cast<Minutes>(h) * 60;
            const double day = static_cast<double>(h) / 24.0;
            const double seasonal = std::sin(2.0 * std::numbers::pi * (day - 110.0) / 365.25);
            const double diurnal = std::sin(2.0 * std::numbers::pi * (std::fmod(static_cast<double>(h), 24.0) - 9.0) / 24.0);

            const double tmpf = 48.0 + 22.0 * seasonal + 8.0 * diurnal + temp_noise.step(rng) + offset;
            const double spread = std::max(0.3, 9.0 - 3.5 * wet + options.observation_noise * rng.normal());
            const double dwpf = tmpf - spread;
            direction = std::fmod(direction + 15.0 * rng.normal() + 360.0, 360.0);
            const double sknt = std::max(0.0, 8.0 + 1.5 * wet + wind_noise.step(rng));
            const double alti = 30.0 - 0.12 * wet + pressure_noise.step(rng);
            const double mslp = alti * 33.8639 + 0.4 * rng.normal();
            const double rain = wet > 1.0 ? 0.04 * (wet - 1.0) * (0.6 + 0.8 * rng.uniform()) + 0.012 : 0.0;
            const double vsby = std::clamp(10.0 - 40.0 * rain - 1.2 * std::max(0.0, wet) + 0.5 * rng.normal(), 0.1, 10.0);

            WeatherRecord routine;
            routine.station = region_name(region);
            routine.valid = hour_start + 54;
            routine.set(Feature::tmpf, round_to(tmpf, 0.1));
            routine.set(Feature::dwpf, round_to(dwpf, 0.1));
            routine.set(Feature::relh, round_to(relative_humidity(tmpf, dwpf), 0.01));
            routine.set(Feature::drct, round_to(direction, 10.0) >= 360.0 ? 0.0 : round_to(direction, 10.0));
            routine.set(Feature::sknt, std::round(sknt));
            routine.set(Feature::alti, round_to(alti, 0.01));
            routine.set(Feature::mslp, round_to(mslp, 0.1));
            routine.set(Feature::vsby, round_to(vsby, 0.25));
            routine.set(Feature::p01i, round_to(rain, 0.01));

            // Occasional special observation earlier in the same hour; p01i
            // accumulates, so it reports a partial amount.
            const bool special = rng.uniform() < 0.15;
            if (special) {
                WeatherRecord extra = routine;
                extra.valid = hour_start + 5 + static_cast<Minutes>(rng.below(40));
                extra.set(Feature::tmpf, round_to(tmpf + 0.8 * rng.normal(), 0.1));
                extra.set(Feature::sknt, std::round(std::max(0.0, sknt + rng.normal())));
                extra.set(Feature::p01i, round_to(rain * rng.uniform(), 0.01));
                records.push_back(std::move(extra));
            }

            for (auto& v : routine.values) {
                if (options.missing_frac > 0.0 && rng.uniform() < options.missing_frac) {
                    v.reset();
                }
            }
            const bool drop_hour = !special && options.missing_frac > 0.0 && rng.uniform() < 0.2 * options.missing_frac;
            if (!drop_hour || h == 0 || h + 1 == options.hours) {
                records.push_back(std::move(routine));
            }
        }
    }
    return out;
}

} // namespace rainbench::data
