#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "linksim/probe.hpp"
#include "linksim/sim.hpp"

namespace linksim {

// Bits are stored one per element, values 0 or 1, transmission order.
using BitStream = std::vector<uint8_t>;

// How the receiver locks onto the frame. Scan looks for preamble_len
// consecutive decoded 1s; Fixed takes the frame phase from shared config,
// the convention used for bit-error-rate measurement where the payload
// position is agreed out of band.
enum class SyncMode { Scan, Fixed };

struct ChannelConfig {
    uint64_t slot_cycles = 0;      // 0 -> derived from the model, see resolved_slot_cycles
    uint64_t payload_bytes = 1310720;
    uint64_t probe_bytes = 256;
    double threshold_cycles = 55000.0;
    int preamble_len = 4;
    int probes_per_slot = 1;       // odd when > 1; majority vote per slot
    int length_field_bits = 16;
    bool use_length_header = true;
    SyncMode sync = SyncMode::Scan;
    uint64_t frame_start_slot = 0;     // Fixed mode only
    uint64_t expected_payload_bits = 0; // payload length when the header is off
};

// Smallest slot that fits one worst-case busy probe per sample:
// probes_per_slot * (idle_base + coefficient * payload_bytes), rounded up.
uint64_t default_slot_cycles(const LatencyModel& model, const ChannelConfig& cfg);

// cfg with slot_cycles filled in and every channel invariant checked against
// the topology's latency model. Throws config_error naming the field.
ChannelConfig resolve_channel_config(const ChannelConfig& cfg, const Topology& topo);

// Each character maps to its 8-bit code, most significant bit first.
// Characters above 0x7F are rejected.
BitStream encode_text(std::string_view text);

// Inverse of encode_text; input length must be a multiple of 8.
std::string decode_bits(const BitStream& bits);

// preamble_len ones, then (when the header is enabled) the payload bit count
// MSB-first in length_field_bits bits, then the payload.
BitStream build_frame(const BitStream& payload, const ChannelConfig& cfg);

// 1 if the payload transfer for that slot was scheduled (sender side view).
void sender_run(Simulator& sim, const ChannelConfig& cfg, const BitStream& frame,
                int src_gpu = 1, int dst_gpu = 0, uint64_t start_slot = 0);

// 1 iff latency is strictly above the threshold.
int classify_sample(int64_t latency_cycles, double threshold_cycles);

struct SlotRecord {
    uint64_t slot = 0;
    int64_t latency_cycles = 0; // median sub-probe latency when voting
    int decoded_bit = 0;
};

struct ReceiverResult {
    BitStream payload;
    uint64_t frame_start_slot = 0;
    std::vector<SlotRecord> slots;
};

// Probes slot by slot from the current simulated time until the payload is
// fully read. Throws sync_timeout_error when no preamble appears within
// max_slots and truncation_error when the frame cannot fit in max_slots.
ReceiverResult receiver_run(Simulator& sim, const ChannelConfig& cfg, uint64_t max_slots,
                            int src_gpu = 0, int dst_gpu = 1);

struct ChannelMetrics {
    uint64_t bits_sent = 0;
    uint64_t bit_errors = 0;
    double ber = 0.0;
    double bandwidth_kbps = 0.0;
};

// Pairwise comparison; a length mismatch counts the missing bits as errors.
// bandwidth_kbps = bits_sent * clock_hz / elapsed_cycles / 1000.
ChannelMetrics compute_metrics(const BitStream& sent, const BitStream& received,
                               uint64_t elapsed_cycles, double clock_hz);

} // namespace linksim
