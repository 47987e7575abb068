#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "simstudy/rng.hpp"
#include "simstudy/varlist.hpp"

namespace simstudy {

/// The five seeding disciplines.
///
///  - NoneReseed: the worker's generator is left untouched (seeded once from
///    entropy), results are not reproducible.
///  - Unseeded:   as NoneReseed, but the seed component is never recorded.
///  - PerRepInteger: replication i starts from derive(seeds[i-1]).
///  - PerRepStream:  replication i starts from the stored state streams[i-1].
///  - Seq:        PerRepInteger with seeds 1..n_sim.
class SeedSpec {
public:
    enum class Kind { NoneReseed, Unseeded, PerRepInteger, PerRepStream, Seq };

    static SeedSpec none_reseed() { return SeedSpec(Kind::NoneReseed); }
    static SeedSpec unseeded() { return SeedSpec(Kind::Unseeded); }
    static SeedSpec seq() { return SeedSpec(Kind::Seq); }
    static SeedSpec per_rep_integer(std::vector<std::int64_t> seeds);
    static SeedSpec per_rep_stream(std::vector<StreamState> streams);

    Kind kind() const { return kind_; }
    const std::vector<std::int64_t>& integers() const { return integers_; }
    const std::vector<StreamState>& streams() const { return streams_; }

    /// True for the disciplines that give reproducible results.
    bool deterministic() const;

    /// Throws ConfigError when a per-replication list has the wrong length.
    void check(std::size_t n_sim) const;

    /// Descriptor used by persistence and fingerprints.
    Json to_json() const;
    static SeedSpec from_json(const Json& j);

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;

private:
    explicit SeedSpec(Kind k) : kind_(k) {}

    Kind kind_;
    std::vector<std::int64_t> integers_;
    std::vector<StreamState> streams_;
};

/// Stream for an integer seed: key = splitmix64(seed) split into two words,
/// substream 0, position 0. Part of the persistence compatibility contract.
StreamState derive_from_integer(std::int64_t seed);

/// Starting state for replication `rep` (1-based); nullopt for NoneReseed and
/// Unseeded. Depends only on (spec, rep).
std::optional<StreamState> seed_for(const SeedSpec& spec, std::size_t rep);

/// n_sim disjoint substreams of one key derived from `master_seed`.
std::vector<StreamState> derive_streams(std::size_t n_sim, std::span<const std::int64_t> master_seed);

/// Entropy-seeded state for the non-reproducible disciplines.
StreamState entropy_state();

}  // namespace simstudy
