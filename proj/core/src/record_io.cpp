#include "phbt/errors.hpp"
#include "phbt/trajectories.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string_view>

namespace phbt::trajectories {

namespace {

constexpr std::string_view kHeader = "cycle,detector,t_ns,window";

// Picoseconds as nanoseconds with exactly three decimals, no float round trip.
void append_ns(std::string& out, std::int64_t ps)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(ps / 1000),
                  static_cast<long long>(ps % 1000));
    out += buf;
}

template <class T>
T parse_integer(std::string_view text, std::size_t line, const char* field)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw IoError("record line " + std::to_string(line) + ": bad " + field + " '" +
                      std::string(text) + "'");
    }
    return value;
}

std::int64_t parse_ns(std::string_view text, std::size_t line)
{
    const auto dot = text.find('.');
    if (dot == std::string_view::npos || text.size() - dot - 1 != 3) {
        throw IoError("record line " + std::to_string(line) + ": t_ns needs three decimals");
    }
    const auto whole = parse_integer<std::int64_t>(text.substr(0, dot), line, "t_ns");
    const auto frac = parse_integer<std::int64_t>(text.substr(dot + 1), line, "t_ns");
    return whole * 1000 + frac;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::filesystem::path metadata_path(const std::filesystem::path& csv_path)
{
    auto out = csv_path;
    out.replace_extension(".meta.json");
    return out;
}

void write_record(const ClickRecord& record, const std::filesystem::path& csv_path)
{
    nlohmann::json config;
    try {
        config = nlohmann::json::parse(record.metadata);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("record metadata is not valid JSON: ") + e.what());
    }

    std::string body;
    body.reserve(32 * record.events.size() + 64);
    body += kHeader;
    body += '\n';
    for (const auto& e : record.events) {
        body += std::to_string(e.cycle);
        body += ',';
        body += std::to_string(e.detector);
        body += ',';
        append_ns(body, e.t_ps);
        body += ',';
        body += to_string(e.window);
        body += '\n';
    }

    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot open '" + csv_path.string() + "' for writing");
    csv.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!csv) throw IoError("write failed for '" + csv_path.string() + "'");

    nlohmann::json meta{{"cycles", record.cycles},
                        {"seed", record.seed},
                        {"period_s", record.period},
                        {"config", config}};
    const auto meta_path = metadata_path(csv_path);
    std::ofstream side(meta_path, std::ios::binary | std::ios::trunc);
    if (!side) throw IoError("cannot open '" + meta_path.string() + "' for writing");
    side << meta.dump(2) << '\n';
    if (!side) throw IoError("write failed for '" + meta_path.string() + "'");
}

ClickRecord read_record(const std::filesystem::path& csv_path)
{
    ClickRecord record;
    const auto meta_path = metadata_path(csv_path);
    std::ifstream side(meta_path, std::ios::binary);
    if (!side) throw IoError("missing metadata sidecar '" + meta_path.string() + "'");
    try {
        const auto meta = nlohmann::json::parse(side);
        record.cycles = meta.at("cycles").get<std::uint64_t>();
        record.seed = meta.at("seed").get<std::uint64_t>();
        record.period = meta.at("period_s").get<double>();
        record.metadata = meta.at("config").dump();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad metadata '" + meta_path.string() + "': " + e.what());
    }

    std::ifstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot open '" + csv_path.string() + "'");
    std::string line;
    if (!std::getline(csv, line) || line != kHeader) {
        throw IoError("'" + csv_path.string() + "': expected header " + std::string(kHeader));
    }
    std::size_t number = 1;
    while (std::getline(csv, line)) {
        ++number;
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != 4) {
            throw IoError("record line " + std::to_string(number) + ": expected 4 fields");
        }
        ClickEvent e;
        e.cycle = parse_integer<std::uint64_t>(fields[0], number, "cycle");
        e.detector = parse_integer<int>(fields[1], number, "detector");
        e.t_ps = parse_ns(fields[2], number);
        e.window = window_tag_from_string(std::string(fields[3]));
        record.events.push_back(e);
    }
    record.validate();
    return record;
}

}  // namespace phbt::trajectories
