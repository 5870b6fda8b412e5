#include "linksim/covert.hpp"

#include <algorithm>
#include <cmath>

namespace linksim {

uint64_t default_slot_cycles(const LatencyModel& model, const ChannelConfig& cfg) {
    const double busy = model.idle_base_cycles +
                        model.contention_cycles_per_byte * static_cast<double>(cfg.payload_bytes);
    return static_cast<uint64_t>(std::ceil(busy)) * static_cast<uint64_t>(cfg.probes_per_slot);
}

ChannelConfig resolve_channel_config(const ChannelConfig& cfg, const Topology& topo) {
    ChannelConfig r = cfg;
    if (r.preamble_len < 1) {
        throw config_error("preamble_len: must be >= 1");
    }
    if (r.probes_per_slot < 1 || (r.probes_per_slot > 1 && r.probes_per_slot % 2 == 0)) {
        throw config_error("probes_per_slot: must be 1 or an odd count > 1");
    }
    if (r.length_field_bits < 1 || r.length_field_bits > 32) {
        throw config_error("length_field_bits: must be in [1, 32]");
    }
    if (r.payload_bytes == 0) {
        throw config_error("payload_bytes: must be >= 1");
    }
    if (r.probe_bytes == 0) {
        throw config_error("probe_bytes: must be >= 1");
    }
    const LatencyModel& model = topo.latency();
    if (r.slot_cycles == 0) {
        r.slot_cycles = default_slot_cycles(model, r);
    }
    const double rate = topo.links().front().bytes_per_cycle;
    if (nominal_duration_cycles(r.payload_bytes, rate) > r.slot_cycles) {
        throw config_error("payload_bytes: transfer of " +
                           std::to_string(nominal_duration_cycles(r.payload_bytes, rate)) +
                           " cycles does not fit slot_cycles = " +
                           std::to_string(r.slot_cycles));
    }
    const double busy = model.idle_base_cycles +
                        model.contention_cycles_per_byte * static_cast<double>(r.payload_bytes);
    if (r.threshold_cycles <= model.idle_base_cycles || r.threshold_cycles >= busy) {
        throw config_error("threshold_cycles: " + std::to_string(r.threshold_cycles) +
                           " outside (" + std::to_string(model.idle_base_cycles) + ", " +
                           std::to_string(busy) + ")");
    }
    if (!r.use_length_header && r.expected_payload_bits == 0) {
        throw config_error("expected_payload_bits: required when the length header is off");
    }
    return r;
}

BitStream encode_text(std::string_view text) {
    BitStream bits;
    bits.reserve(text.size() * 8);
    for (char c : text) {
        const auto code = static_cast<unsigned char>(c);
        if (code > 0x7F) {
            throw encoding_error("character code " + std::to_string(code) +
                                 " is outside the 7-bit set");
        }
        for (int b = 7; b >= 0; --b) {
            bits.push_back(static_cast<uint8_t>((code >> b) & 1u));
        }
    }
    return bits;
}

std::string decode_bits(const BitStream& bits) {
    if (bits.size() % 8 != 0) {
        throw framing_error("bit count " + std::to_string(bits.size()) +
                            " is not a multiple of 8");
    }
    std::string text;
    text.reserve(bits.size() / 8);
    for (std::size_t i = 0; i < bits.size(); i += 8) {
        unsigned code = 0;
        for (std::size_t b = 0; b < 8; ++b) {
            code = (code << 1) | bits[i + b];
        }
        text.push_back(static_cast<char>(code));
    }
    return text;
}

BitStream build_frame(const BitStream& payload, const ChannelConfig& cfg) {
    BitStream frame;
    if (cfg.use_length_header) {
        const uint64_t limit = 1ull << cfg.length_field_bits;
        if (payload.size() >= limit) {
            throw framing_error("payload of " + std::to_string(payload.size()) +
                                " bits exceeds the " + std::to_string(cfg.length_field_bits) +
                                "-bit length field");
        }
    }
    frame.reserve(static_cast<std::size_t>(cfg.preamble_len) +
                  static_cast<std::size_t>(cfg.length_field_bits) + payload.size());
    for (int i = 0; i < cfg.preamble_len; ++i) {
        frame.push_back(1);
    }
    if (cfg.use_length_header) {
        for (int b = cfg.length_field_bits - 1; b >= 0; --b) {
            frame.push_back(static_cast<uint8_t>((payload.size() >> b) & 1u));
        }
    }
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

void sender_run(Simulator& sim, const ChannelConfig& cfg, const BitStream& frame,
                int src_gpu, int dst_gpu, uint64_t start_slot) {
    const auto link = sim.topology().link_between(src_gpu, dst_gpu);
    if (!link) {
        throw routing_error("no link between GPU " + std::to_string(src_gpu) +
                            " and GPU " + std::to_string(dst_gpu));
    }
    const double rate = sim.topology().links()[*link].bytes_per_cycle;
    if (nominal_duration_cycles(cfg.payload_bytes, rate) > cfg.slot_cycles) {
        throw config_error("payload_bytes: transfer does not fit one slot");
    }
    const uint64_t base = sim.now();
    for (std::size_t k = 0; k < frame.size(); ++k) {
        if (frame[k] == 0) {
            continue;
        }
        TransferRequest req{src_gpu, dst_gpu, cfg.payload_bytes,
                            base + (start_slot + k) * cfg.slot_cycles, "covert-sender"};
        sim.schedule_transfer(req);
    }
}

int classify_sample(int64_t latency_cycles, double threshold_cycles) {
    return static_cast<double>(latency_cycles) > threshold_cycles ? 1 : 0;
}

namespace {

struct SlotDecoder {
    Simulator& sim;
    const ChannelConfig& cfg;
    int src;
    int dst;
    uint64_t base; // simulated time of slot 0

    SlotRecord decode(uint64_t slot) const {
        // Sub-probes go back to back from the slot start so every one of them
        // observes the sender's transfer; spacing is the probe's nominal
        // transfer time.
        const auto link = sim.topology().link_between(src, dst);
        const double rate = sim.topology().links()[*link].bytes_per_cycle;
        const uint64_t spacing = nominal_duration_cycles(cfg.probe_bytes, rate);

        std::vector<int64_t> latencies;
        latencies.reserve(static_cast<std::size_t>(cfg.probes_per_slot));
        int ones = 0;
        for (int j = 0; j < cfg.probes_per_slot; ++j) {
            const uint64_t t = base + slot * cfg.slot_cycles + static_cast<uint64_t>(j) * spacing;
            sim.run_until(t);
            TransferRequest req{src, dst, cfg.probe_bytes, t, "probe"};
            const int64_t latency = sim.probe_latency(req);
            latencies.push_back(latency);
            ones += classify_sample(latency, cfg.threshold_cycles);
        }
        std::sort(latencies.begin(), latencies.end());
        const int bit = ones * 2 > cfg.probes_per_slot ? 1 : 0;
        return SlotRecord{slot, latencies[latencies.size() / 2], bit};
    }
};

} // namespace

ReceiverResult receiver_run(Simulator& sim, const ChannelConfig& cfg, uint64_t max_slots,
                            int src_gpu, int dst_gpu) {
    if (max_slots == 0) {
        throw config_error("max_slots: must be >= 1");
    }
    if (!sim.topology().link_between(src_gpu, dst_gpu)) {
        throw routing_error("no link between GPU " + std::to_string(src_gpu) +
                            " and GPU " + std::to_string(dst_gpu));
    }

    ReceiverResult result;
    SlotDecoder decoder{sim, cfg, src_gpu, dst_gpu, sim.now()};
    uint64_t slot = 0;

    auto next_bit = [&]() -> int {
        SlotRecord rec = decoder.decode(slot);
        result.slots.push_back(rec);
        ++slot;
        return rec.decoded_bit;
    };

    // Frame phase.
    if (cfg.sync == SyncMode::Scan) {
        int run = 0;
        bool found = false;
        while (slot < max_slots) {
            run = next_bit() == 1 ? run + 1 : 0;
            if (run >= cfg.preamble_len) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw sync_timeout_error("no preamble within " + std::to_string(max_slots) +
                                     " slots");
        }
        result.frame_start_slot = slot - static_cast<uint64_t>(cfg.preamble_len);
    } else {
        result.frame_start_slot = cfg.frame_start_slot;
        const uint64_t frame_data_start =
            result.frame_start_slot + static_cast<uint64_t>(cfg.preamble_len);
        while (slot < frame_data_start) {
            next_bit();
        }
    }

    // Payload length: from the header when present, otherwise agreed ahead.
    uint64_t payload_bits = cfg.expected_payload_bits;
    if (cfg.use_length_header) {
        if (slot + static_cast<uint64_t>(cfg.length_field_bits) > max_slots) {
            throw truncation_error("length header does not fit in max_slots");
        }
        uint64_t value = 0;
        for (int b = 0; b < cfg.length_field_bits; ++b) {
            value = (value << 1) | static_cast<uint64_t>(next_bit());
        }
        payload_bits = value;
    }

    if (slot + payload_bits > max_slots) {
        throw truncation_error("decoded length " + std::to_string(payload_bits) +
                               " exceeds the remaining " + std::to_string(max_slots - slot) +
                               " slots");
    }
    result.payload.reserve(payload_bits);
    for (uint64_t i = 0; i < payload_bits; ++i) {
        result.payload.push_back(static_cast<uint8_t>(next_bit()));
    }
    return result;
}

ChannelMetrics compute_metrics(const BitStream& sent, const BitStream& received,
                               uint64_t elapsed_cycles, double clock_hz) {
    if (sent.empty()) {
        throw config_error("sent: empty bit stream");
    }
    if (elapsed_cycles == 0) {
        throw config_error("elapsed_cycles: must be >= 1");
    }
    if (clock_hz <= 0.0) {
        throw config_error("clock_hz: must be > 0");
    }
    ChannelMetrics m;
    m.bits_sent = sent.size();
    const std::size_t common = std::min(sent.size(), received.size());
    for (std::size_t i = 0; i < common; ++i) {
        m.bit_errors += sent[i] != received[i] ? 1 : 0;
    }
    m.bit_errors += static_cast<uint64_t>(
        sent.size() > received.size() ? sent.size() - received.size()
                                      : received.size() - sent.size());
    m.ber = std::min(1.0, static_cast<double>(m.bit_errors) / static_cast<double>(m.bits_sent));
    m.bandwidth_kbps = static_cast<double>(m.bits_sent) * clock_hz /
                       static_cast<double>(elapsed_cycles) / 1000.0;
    return m;
}

} // namespace linksim
