#include "simstudy/seeding.hpp"

#include <random>
#include <string>

#include "simstudy/error.hpp"

namespace simstudy {

namespace {

std::array<std::uint32_t, 2> split_key(std::uint64_t k)
{
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

}  // namespace

SeedSpec SeedSpec::per_rep_integer(std::vector<std::int64_t> seeds)
{
    SeedSpec s(Kind::PerRepInteger);
    s.integers_ = std::move(seeds);
    return s;
}

SeedSpec SeedSpec::per_rep_stream(std::vector<StreamState> streams)
{
    SeedSpec s(Kind::PerRepStream);
    s.streams_ = std::move(streams);
    return s;
}

bool SeedSpec::deterministic() const
{
    return kind_ != Kind::NoneReseed && kind_ != Kind::Unseeded;
}

void SeedSpec::check(std::size_t n_sim) const
{
    std::size_t len = 0;
    if (kind_ == Kind::PerRepInteger) len = integers_.size();
    else if (kind_ == Kind::PerRepStream) len = streams_.size();
    else return;
    if (len != n_sim)
        throw ConfigError("seed list has " + std::to_string(len) + " entries but n.sim = " + std::to_string(n_sim));
}

Json SeedSpec::to_json() const
{
    Json j;
    switch (kind_) {
    case Kind::NoneReseed: j["kind"] = "none"; break;
    case Kind::Unseeded: j["kind"] = "unseeded"; break;
    case Kind::Seq: j["kind"] = "seq"; break;
    case Kind::PerRepInteger:
        j["kind"] = "integers";
        j["seeds"] = integers_;
        break;
    case Kind::PerRepStream: {
        j["kind"] = "streams";
        Json arr = Json::array();
        for (const auto& s : streams_) arr.push_back(s.to_hex());
        j["streams"] = std::move(arr);
        break;
    }
    }
    return j;
}

SeedSpec SeedSpec::from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ConfigError("seed spec: expected an object with a string 'kind'");
    const auto kind = j["kind"].get<std::string>();
    if (kind == "none") return none_reseed();
    if (kind == "unseeded") return unseeded();
    if (kind == "seq") return seq();
    if (kind == "integers") {
        if (!j.contains("seeds") || !j["seeds"].is_array()) throw ConfigError("seed spec: 'seeds' must be an array");
        std::vector<std::int64_t> v;
        for (const auto& x : j["seeds"]) {
            if (!x.is_number_integer()) throw ConfigError("seed spec: seeds must be integers");
            v.push_back(x.get<std::int64_t>());
        }
        return per_rep_integer(std::move(v));
    }
    if (kind == "streams") {
        if (j.contains("streams")) {
            std::vector<StreamState> v;
            for (const auto& x : j["streams"]) {
                if (!x.is_string()) throw ConfigError("seed spec: streams must be hex strings");
                v.push_back(StreamState::from_hex(x.get<std::string>()));
            }
            return per_rep_stream(std::move(v));
        }
        throw ConfigError("seed spec: 'streams' missing");
    }
    throw ConfigError("seed spec: unknown kind '" + kind + "'");
}

StreamState derive_from_integer(std::int64_t seed)
{
    StreamState s;
    s.key = split_key(splitmix64(static_cast<std::uint64_t>(seed)));
    return s;
}

std::optional<StreamState> seed_for(const SeedSpec& spec, std::size_t rep)
{
    using Kind = SeedSpec::Kind;
    if (rep < 1) throw Error("replication index must be >= 1");
    auto out_of_range = [&](std::size_t n) {
        return Error("replication " + std::to_string(rep) + " out of range 1.." + std::to_string(n));
    };
    switch (spec.kind()) {
    case Kind::NoneReseed:
    case Kind::Unseeded:
        return std::nullopt;
    case Kind::Seq:
        return derive_from_integer(static_cast<std::int64_t>(rep));
    case Kind::PerRepInteger:
        if (rep > spec.integers().size()) throw out_of_range(spec.integers().size());
        return derive_from_integer(spec.integers()[rep - 1]);
    case Kind::PerRepStream:
        if (rep > spec.streams().size()) throw out_of_range(spec.streams().size());
        return spec.streams()[rep - 1];
    }
    return std::nullopt;
}

std::vector<StreamState> derive_streams(std::size_t n_sim, std::span<const std::int64_t> master_seed)
{
    std::uint64_t h = 0x5EED5EED5EED5EEDULL;
    for (auto v : master_seed) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    std::vector<StreamState> out(n_sim);
    for (std::size_t i = 0; i < n_sim; ++i) {
        out[i].key = split_key(h);
        out[i].counter[2] = static_cast<std::uint32_t>(i);
        out[i].counter[3] = static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32);
    }
    return out;
}

StreamState entropy_state()
{
    std::random_device rd;
    StreamState s;
    s.key = {rd(), rd()};
    s.counter[2] = rd();
    s.counter[3] = rd();
    return s;
}

}  // namespace simstudy
