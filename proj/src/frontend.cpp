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

#include "rpcsim/frontend.hpp"

#include "rpcsim/errors.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <stdexcept>

namespace rpcsim {

void FrontendConfig::validate() const {
    if (data_width_bits < 32 || data_width_bits > 256 || !is_power_of_two(data_width_bits))
        throw ConfigError("frontend.data_width_bits: must be a power of two in [32, 256]");
    if (write_buffer_bytes < std::max<std::uint64_t>(WordGeometry::word_bytes, beat_bytes()))
        throw ConfigError("frontend.write_buffer_bytes: must hold at least one word and one beat");
    if (read_buffer_bytes < WordGeometry::word_bytes)
        throw ConfigError("frontend.read_buffer_bytes: must hold at least one word");
    if (max_outstanding == 0) throw ConfigError("frontend.max_outstanding: must be > 0");
    if (addr_width_bits < 12 || addr_width_bits > 64)
        throw ConfigError("frontend.addr_width_bits: must be in [12, 64]");
}

void validate(const BusTransaction& t, std::uint32_t addr_width_bits) {
    if (t.beats == 0) throw std::invalid_argument("transaction with zero beats");
    if (t.beat_bytes == 0 || t.beat_bytes > 32 || !is_power_of_two(t.beat_bytes))
        throw std::invalid_argument("beat_bytes must be a power of two <= 32");
    if (t.addr % t.beat_bytes != 0) throw std::invalid_argument("transaction address not beat aligned");
    if (addr_width_bits < 64) {
        const Addr limit = Addr{1} << addr_width_bits;
        if (t.addr >= limit || t.span_bytes() > limit - t.addr)
            throw std::invalid_argument("transaction exceeds the address width");
    }
    if (t.direction == Direction::Write) {
        if (t.strobes.size() != t.beats) throw std::invalid_argument("write needs one strobe word per beat");
        if (t.data.size() != t.span_bytes()) throw std::invalid_argument("write payload size mismatch");
        if (t.beat_bytes < 64) {
            const std::uint64_t legal = (std::uint64_t{1} << t.beat_bytes) - 1;
            for (auto s : t.strobes) {
                if (s & ~legal) throw std::invalid_argument("strobe bit beyond beat width");
            }
        }
    }
}

std::vector<BusTransaction> serialize(std::vector<Arrival> arrivals) {
    std::stable_sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return a.cycle != b.cycle ? a.cycle < b.cycle : a.txn.id < b.txn.id;
    });
    std::vector<BusTransaction> out;
    out.reserve(arrivals.size());
    for (auto& a : arrivals) out.push_back(std::move(a.txn));
    return out;
}

WordSpan convert_width(const BusTransaction& txn) { return bytes_to_words(txn.addr, txn.span_bytes()); }

std::vector<ByteRange> split(ByteRange range, std::uint64_t boundary) {
    std::vector<ByteRange> out;
    Addr lo = range.lo;
    while (lo < range.hi) {
        const Addr next = (lo / boundary + 1) * boundary;
        const Addr hi = std::min(next, range.hi);
        out.push_back({lo, hi});
        lo = hi;
    }
    return out;
}

std::vector<ByteRange> strobe_runs(const BusTransaction& txn) {
    std::vector<ByteRange> runs;
    const std::uint64_t n = txn.span_bytes();
    std::uint64_t i = 0;
    while (i < n) {
        if (!txn.byte_enabled(i)) {
            ++i;
            continue;
        }
        const std::uint64_t start = i;
        while (i < n && txn.byte_enabled(i)) ++i;
        runs.push_back({txn.addr + start, txn.addr + i});
    }
    return runs;
}

EdgeMasks edge_masks(std::uint32_t head_offset, std::uint32_t tail_offset) {
    return {kFullMask << head_offset, kFullMask >> (WordGeometry::word_bytes - 1 - tail_offset)};
}

DatapathRequest make_request(Direction dir, ByteRange run) {
    const WordSpan ws = bytes_to_words(run.lo, run.size());
    DatapathRequest r;
    r.direction = dir;
    r.word_addr = ws.first_word_addr;
    r.n_words = ws.n_words;
    if (dir == Direction::Write) {
        const EdgeMasks m = edge_masks(ws.head_offset, ws.tail_offset);
        r.first_mask = m.first;
        r.last_mask = m.last;
    }
    return r;
}

std::vector<std::pair<ByteRange, DatapathRequest>> plan_requests(const BusTransaction& txn, std::uint64_t boundary) {
    std::vector<ByteRange> runs;
    if (txn.direction == Direction::Write) {
        runs = strobe_runs(txn);
    } else {
        runs.push_back({txn.addr, txn.addr + txn.span_bytes()});
    }
    std::vector<std::pair<ByteRange, DatapathRequest>> out;
    for (const ByteRange& run : runs) {
        for (const ByteRange& piece : split(run, boundary)) out.emplace_back(piece, make_request(txn.direction, piece));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Frontend
// ---------------------------------------------------------------------------

namespace {

std::uint64_t chunk_for(std::uint64_t page, std::uint64_t capacity) {
    return std::min<std::uint64_t>(page, std::bit_floor(capacity));
}

}  // namespace

Frontend::Frontend(const Profile& profile, FrontendConfig config, Controller& controller)
    : profile_(profile), config_(config), controller_(controller) {
    config_.validate();
    read_chunk_ = chunk_for(profile_.timing.page_bytes, config_.read_buffer_bytes);
    write_chunk_ = chunk_for(profile_.timing.page_bytes, config_.write_buffer_bytes);
}

void Frontend::offer(BusTransaction txn, Cycle now) {
    validate(txn, config_.addr_width_bits);
    if (txn.beat_bytes > config_.beat_bytes())
        throw std::invalid_argument("beat wider than the configured data width");
    if (txn.addr + txn.span_bytes() > profile_.capacity_bytes())
        throw std::invalid_argument("transaction beyond device capacity");
    ingress_.push_back({now, std::move(txn)});
}

void Frontend::ingest(const ControllerStep& step) {
    if (step.read_word) {
        const RxWord& w = *step.read_word;
        Piece& p = piece_at(w.tag);
        Txn& t = txn_at(p.serial);
        const Addr word_addr = p.req.word_addr + Addr{w.word_index} * WordGeometry::word_bytes;
        const Addr lo = std::max(word_addr, t.txn.addr);
        const Addr hi = std::min(word_addr + WordGeometry::word_bytes, t.txn.addr + t.txn.span_bytes());
        for (Addr a = lo; a < hi; ++a) t.read_data[a - t.txn.addr] = w.data[a - word_addr];
        t.word_ready[(word_addr - t.span.first_word_addr) / WordGeometry::word_bytes] = 1;
        occ_.read_held += WordGeometry::word_bytes;
        peak_read_held_ = std::max(peak_read_held_, occ_.read_held);
        if (++p.words_received == p.req.n_words) {
            p.done = true;
            --t.pieces_left;
        }
    }
    if (step.write_done) {
        Piece& p = piece_at(*step.write_done);
        p.done = true;
        assert(occ_.write_used >= p.owned_bytes);
        occ_.write_used -= p.owned_bytes;
        p.owned_bytes = 0;
        --txn_at(p.serial).pieces_left;
    }
}

void Frontend::tick(Cycle now, bool upstream_ready, std::vector<Completion>& done) {
    if (!ingress_.empty()) {
        for (auto& t : serialize(std::move(ingress_))) queue_.push_back(std::move(t));
        ingress_.clear();
    }
    accept(now);
    intake_write_beat();
    release_piece(now);
    forward_read_beat(upstream_ready);
    retire(now, done);
}

void Frontend::accept(Cycle now) {
    if (queue_.empty() || txns_.size() >= config_.max_outstanding) return;
    Txn t;
    t.txn = std::move(queue_.front());
    queue_.pop_front();
    t.serial = next_serial_++;
    t.accept_cycle = now;
    t.span = convert_width(t.txn);

    const Direction dir = t.txn.direction;
    const auto plan = plan_requests(t.txn, dir == Direction::Read ? read_chunk_ : write_chunk_);
    if (dir == Direction::Write) t.beat_owner.assign(t.txn.beats, -1);
    for (const auto& [range, req] : plan) {
        Piece p;
        p.tag = next_tag_++;
        p.serial = t.serial;
        p.range = range;
        p.req = req;
        p.last_beat = static_cast<std::uint32_t>((range.hi - 1 - t.txn.addr) / t.txn.beat_bytes);
        if (dir == Direction::Write) {
            const auto first_beat = static_cast<std::uint32_t>((range.lo - t.txn.addr) / t.txn.beat_bytes);
            for (std::uint32_t b = first_beat; b <= p.last_beat; ++b) t.beat_owner[b] = static_cast<std::int64_t>(p.tag);
        }
        pieces_.push_back(std::move(p));
    }
    t.pieces_left = plan.size();
    if (dir == Direction::Read) {
        t.word_ready.assign(t.span.n_words, 0);
        t.read_data.assign(t.txn.span_bytes(), 0);
    }
    txns_.push_back(std::move(t));
}

void Frontend::intake_write_beat() {
    for (Txn& t : txns_) {
        if (t.txn.direction != Direction::Write || t.beats_arrived == t.txn.beats) continue;
        const std::uint32_t bb = t.txn.beat_bytes;
        const std::int64_t owner = t.beat_owner[t.beats_arrived];
        if (owner >= 0) {
            if (occ_.write_used + bb > config_.write_buffer_bytes) return;
            occ_.write_used += bb;
            piece_at(static_cast<std::uint64_t>(owner)).owned_bytes += bb;
        }
        ++t.beats_arrived;
        return;
    }
}

void Frontend::release_piece(Cycle now) {
    if (next_release_ == next_tag_ || !controller_.can_accept()) return;
    Piece& p = piece_at(next_release_);
    Txn& t = txn_at(p.serial);
    std::vector<Word> payload;
    if (p.req.direction == Direction::Write) {
        if (t.beats_arrived <= p.last_beat) return;
        payload.resize(p.req.n_words);
        for (std::uint32_t w = 0; w < p.req.n_words; ++w) {
            const Addr base = p.req.word_addr + Addr{w} * WordGeometry::word_bytes;
            for (std::uint32_t i = 0; i < WordGeometry::word_bytes; ++i) {
                const Addr a = base + i;
                const bool inside = a >= t.txn.addr && a < t.txn.addr + t.txn.span_bytes();
                payload[w][i] = inside ? t.txn.data[a - t.txn.addr] : 0;
            }
        }
    } else {
        const std::uint64_t need = std::uint64_t{p.req.n_words} * WordGeometry::word_bytes;
        if (occ_.read_reserved + need > config_.read_buffer_bytes) return;
        occ_.read_reserved += need;
    }
    controller_.push(p.tag, p.req, std::move(payload), now);
    p.released = true;
    ++next_release_;
}

void Frontend::forward_read_beat(bool upstream_ready) {
    if (!upstream_ready) return;
    for (Txn& t : txns_) {
        if (t.txn.direction != Direction::Read || t.beats_forwarded == t.txn.beats) continue;
        constexpr Addr wb = WordGeometry::word_bytes;
        const Addr start = t.txn.addr + Addr{t.beats_forwarded} * t.txn.beat_bytes;
        const Addr end = start + t.txn.beat_bytes;
        const Addr w0 = (start - t.span.first_word_addr) / wb;
        const Addr w1 = (end - 1 - t.span.first_word_addr) / wb;
        for (Addr w = w0; w <= w1; ++w) {
            if (!t.word_ready[w]) return;
        }
        ++t.beats_forwarded;
        const bool last = t.beats_forwarded == t.txn.beats;
        while (t.words_freed < t.span.n_words &&
               (last || t.span.first_word_addr + (Addr{t.words_freed} + 1) * wb <= end)) {
            ++t.words_freed;
            occ_.read_held -= wb;
            occ_.read_reserved -= wb;
        }
        return;
    }
}

void Frontend::retire(Cycle now, std::vector<Completion>& done) {
    bool blocked[2] = {false, false};
    for (Txn& t : txns_) {
        const auto d = static_cast<std::size_t>(t.txn.direction);
        if (t.finished) continue;
        const bool complete = t.txn.direction == Direction::Read
                                  ? t.beats_forwarded == t.txn.beats
                                  : t.beats_arrived == t.txn.beats && t.pieces_left == 0;
        if (!complete || blocked[d]) {
            blocked[d] = true;
            continue;
        }
        t.finished = true;
        Completion c;
        c.id = t.txn.id;
        c.serial = t.serial;
        c.direction = t.txn.direction;
        c.accept_cycle = t.accept_cycle;
        c.complete_cycle = now;
        c.data = std::move(t.read_data);
        done.push_back(std::move(c));
    }
    while (!txns_.empty() && txns_.front().finished) {
        txns_.pop_front();
        ++txn_base_;
    }
    while (!pieces_.empty() && pieces_.front().done) {
        pieces_.pop_front();
        ++piece_base_;
    }
}

}  // namespace rpcsim
