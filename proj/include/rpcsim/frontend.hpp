/*
 * Copyright 2026 The rpcsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file frontend.hpp
 * @brief Bus subordinate in front of the controller.
 *
 * Multi-id bus transactions are serialized first come, first serve and then
 * handled strictly in order. Each transaction is widened to 32-byte words,
 * split so that no request crosses a page, and write strobes are turned into
 * first/last masks. Sparse strobes become several contiguous writes.
 *
 * Write data is released to the controller only once every beat a request
 * needs sits in the write buffer. Read words are forwarded upstream as soon
 * as they leave the PHY.
 */

#pragma once

#include "rpcsim/controller.hpp"
#include "rpcsim/protocol.hpp"

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace rpcsim {

struct FrontendConfig {
    std::uint32_t data_width_bits = 64;
    std::uint64_t write_buffer_bytes = 8192;
    std::uint64_t read_buffer_bytes = 8192;
    std::uint32_t max_outstanding = 8;  ///< accepted, not yet completed transactions
    std::uint32_t addr_width_bits = 48;

    std::uint32_t beat_bytes() const { return data_width_bits / 8; }
    void validate() const;
};

/// One burst on the upstream bus. `addr` is beat aligned; unaligned accesses
/// are expressed through partial strobes.
struct BusTransaction {
    std::uint64_t id = 0;
    Direction direction = Direction::Read;
    Addr addr = 0;
    std::uint32_t beats = 1;
    std::uint32_t beat_bytes = 8;
    std::vector<std::uint64_t> strobes;  ///< writes: bit i enables byte i of the beat
    std::vector<std::uint8_t> data;      ///< writes: beats × beat_bytes

    std::uint64_t span_bytes() const { return std::uint64_t{beats} * beat_bytes; }
    bool byte_enabled(std::uint64_t offset) const {
        return (strobes[offset / beat_bytes] >> (offset % beat_bytes)) & 1u;
    }
};

/// Throws std::invalid_argument on a malformed transaction.
void validate(const BusTransaction& txn, std::uint32_t addr_width_bits);

struct Arrival {
    Cycle cycle = 0;
    BusTransaction txn;
};

/// Global arrival order; same-cycle ties broken by ascending id, then offer order.
std::vector<BusTransaction> serialize(std::vector<Arrival> arrivals);

/// Half-open byte range [lo, hi).
struct ByteRange {
    Addr lo = 0;
    Addr hi = 0;

    std::uint64_t size() const { return hi - lo; }
    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

/// Word cover of the transaction's full byte span.
WordSpan convert_width(const BusTransaction& txn);

/// Cuts `range` at every multiple of `boundary` (a power of two).
std::vector<ByteRange> split(ByteRange range, std::uint64_t boundary);

/// Maximal runs of strobe-enabled bytes, in address order.
std::vector<ByteRange> strobe_runs(const BusTransaction& txn);

/// First/last masks of a contiguous run confined to one page. For a
/// single-word run the device ANDs the two.
struct EdgeMasks {
    ByteMask first = kFullMask;
    ByteMask last = kFullMask;
    friend bool operator==(const EdgeMasks&, const EdgeMasks&) = default;
};
EdgeMasks edge_masks(std::uint32_t head_offset, std::uint32_t tail_offset);

/// Datapath request covering one contiguous byte run.
DatapathRequest make_request(Direction dir, ByteRange run);

/// Full planning pipeline: runs (writes) or span (reads), split at `boundary`,
/// one request per piece. A write with no enabled byte yields nothing.
std::vector<std::pair<ByteRange, DatapathRequest>> plan_requests(const BusTransaction& txn,
                                                                 std::uint64_t boundary);

/// Transaction finished from the upstream point of view.
struct Completion {
    std::uint64_t id = 0;
    std::uint64_t serial = 0;
    Direction direction = Direction::Read;
    Cycle accept_cycle = 0;
    Cycle complete_cycle = 0;
    std::vector<std::uint8_t> data;  ///< reads: beats × beat_bytes
};

struct BufferOccupancy {
    std::uint64_t write_used = 0;      ///< beats held in the write buffer
    std::uint64_t read_reserved = 0;   ///< credit held by released reads
    std::uint64_t read_held = 0;       ///< received, not yet forwarded
};

class Frontend {
public:
    Frontend(const Profile& profile, FrontendConfig config, Controller& controller);

    Frontend(const Frontend&) = delete;
    Frontend& operator=(const Frontend&) = delete;

    /// Offer a transaction arriving at `now`. Validated immediately.
    void offer(BusTransaction txn, Cycle now);

    /// Consume what the controller produced this cycle.
    void ingest(const ControllerStep& step);

    /// One cycle of serialization, intake, release and forwarding.
    void tick(Cycle now, bool upstream_ready, std::vector<Completion>& done);

    bool idle() const { return ingress_.empty() && queue_.empty() && txns_.empty(); }
    std::size_t queued() const { return ingress_.size() + queue_.size(); }
    const BufferOccupancy& occupancy() const { return occ_; }
    std::uint64_t peak_read_held() const { return peak_read_held_; }
    std::uint64_t split_boundary(Direction d) const { return d == Direction::Read ? read_chunk_ : write_chunk_; }

private:
    struct Piece {
        std::uint64_t tag = 0;
        std::uint64_t serial = 0;
        ByteRange range;
        DatapathRequest req;
        std::uint32_t last_beat = 0;  ///< highest transaction beat the piece needs
        std::uint64_t owned_bytes = 0;
        std::uint32_t words_received = 0;
        bool released = false;
        bool done = false;
    };
    struct Txn {
        BusTransaction txn;
        std::uint64_t serial = 0;
        Cycle accept_cycle = 0;
        WordSpan span;
        std::uint64_t pieces_left = 0;
        std::uint32_t beats_arrived = 0;    ///< writes
        std::uint32_t beats_forwarded = 0;  ///< reads
        std::uint32_t words_freed = 0;      ///< reads
        std::vector<std::int64_t> beat_owner;  ///< writes: owning piece tag or -1
        std::vector<std::uint8_t> word_ready;  ///< reads
        std::vector<std::uint8_t> read_data;
        bool finished = false;
    };

    Txn& txn_at(std::uint64_t serial) { return txns_[serial - txn_base_]; }
    Piece& piece_at(std::uint64_t tag) { return pieces_[tag - piece_base_]; }

    void accept(Cycle now);
    void intake_write_beat();
    void release_piece(Cycle now);
    void forward_read_beat(bool upstream_ready);
    void retire(Cycle now, std::vector<Completion>& done);

    Profile profile_;
    FrontendConfig config_;
    Controller& controller_;
    std::uint64_t read_chunk_;
    std::uint64_t write_chunk_;

    std::vector<Arrival> ingress_;
    std::deque<BusTransaction> queue_;  ///< serialized, not yet accepted
    std::deque<Txn> txns_;
    std::uint64_t txn_base_ = 0;
    std::uint64_t next_serial_ = 0;
    std::deque<Piece> pieces_;
    std::uint64_t piece_base_ = 0;
    std::uint64_t next_tag_ = 0;
    std::uint64_t next_release_ = 0;

    BufferOccupancy occ_;
    std::uint64_t peak_read_held_ = 0;
};

}  // namespace rpcsim
