#include "imcp/huffman.hpp"

#include <algorithm>
#include <queue>

#include "imcp/wire.hpp"

namespace imcp {

namespace {

struct TreeNode {
    std::uint64_t freq = 0;
    std::uint16_t min_symbol = 0; // deterministic tie-break key
    int left = -1;                // child indices, -1 for leaves
    int right = -1;
    std::uint16_t symbol = 0;
};

struct CodeEntry {
    std::uint8_t symbol = 0;
    std::uint8_t length = 0;
};

std::vector<CodeEntry> build_code_lengths(std::span<const std::uint8_t> data) {
    std::array<std::uint64_t, 256> freq{};
    for (std::uint8_t b : data) ++freq[b];

    std::vector<TreeNode> nodes;
    for (int s = 0; s < 256; ++s)
        if (freq[s] > 0)
            nodes.push_back(TreeNode{freq[s], static_cast<std::uint16_t>(s), -1, -1,
                                     static_cast<std::uint16_t>(s)});

    std::vector<CodeEntry> entries;
    if (nodes.empty()) return entries;
    if (nodes.size() == 1) {
        // Degenerate alphabet: assign a 1-bit code.
        entries.push_back({static_cast<std::uint8_t>(nodes[0].symbol), 1});
        return entries;
    }

    auto cmp = [&nodes](int a, int b) {
        if (nodes[a].freq != nodes[b].freq) return nodes[a].freq > nodes[b].freq;
        return nodes[a].min_symbol > nodes[b].min_symbol;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> queue(cmp);
    const std::size_t leaf_count = nodes.size();
    for (std::size_t i = 0; i < leaf_count; ++i) queue.push(static_cast<int>(i));

    while (queue.size() > 1) {
        const int a = queue.top();
        queue.pop();
        const int b = queue.top();
        queue.pop();
        TreeNode parent;
        parent.freq = nodes[a].freq + nodes[b].freq;
        parent.min_symbol = std::min(nodes[a].min_symbol, nodes[b].min_symbol);
        parent.left = a;
        parent.right = b;
        nodes.push_back(parent);
        queue.push(static_cast<int>(nodes.size() - 1));
    }

    // Depth-first walk assigning depths as code lengths.
    std::vector<std::pair<int, int>> stack{{queue.top(), 0}};
    while (!stack.empty()) {
        auto [idx, depth] = stack.back();
        stack.pop_back();
        const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
        if (n.left < 0) {
            if (depth > 63)
                throw NumericError("Huffman code length exceeds 63 bits");
            entries.push_back(
                {static_cast<std::uint8_t>(n.symbol), static_cast<std::uint8_t>(depth)});
        } else {
            stack.push_back({n.left, depth + 1});
            stack.push_back({n.right, depth + 1});
        }
    }

    // Canonical order: (length, symbol).
    std::sort(entries.begin(), entries.end(), [](const CodeEntry& a, const CodeEntry& b) {
        if (a.length != b.length) return a.length < b.length;
        return a.symbol < b.symbol;
    });
    return entries;
}

// Canonical code assignment over entries already sorted by (length, symbol).
std::vector<std::uint64_t> assign_canonical_codes(const std::vector<CodeEntry>& entries) {
    std::vector<std::uint64_t> codes(entries.size(), 0);
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) code = (code + 1) << (entries[i].length - entries[i - 1].length);
        codes[i] = code;
    }
    return codes;
}

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(std::uint64_t code, int length) { // MSB-first
        for (int i = length - 1; i >= 0; --i) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((code >> i) & 1));
            if (++filled_ == 8) {
                out_.push_back(acc_);
                acc_ = 0;
                filled_ = 0;
            }
        }
    }

    void flush() {
        if (filled_ > 0) {
            out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - filled_)));
            acc_ = 0;
            filled_ = 0;
        }
    }

private:
    std::vector<std::uint8_t>& out_;
    std::uint8_t acc_ = 0;
    int filled_ = 0;
};

} // namespace

std::array<std::uint8_t, 256> huffman_code_lengths(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, 256> lengths{};
    for (const CodeEntry& e : build_code_lengths(data)) lengths[e.symbol] = e.length;
    return lengths;
}

std::vector<std::uint8_t> huffman_encode(std::span<const std::uint8_t> data) {
    if (data.empty()) throw ValidationError("huffman_encode requires non-empty input");

    const std::vector<CodeEntry> entries = build_code_lengths(data);
    const std::vector<std::uint64_t> codes = assign_canonical_codes(entries);

    std::array<std::uint64_t, 256> code_of{};
    std::array<std::uint8_t, 256> len_of{};
    for (std::size_t i = 0; i < entries.size(); ++i) {
        code_of[entries[i].symbol] = codes[i];
        len_of[entries[i].symbol] = entries[i].length;
    }

    std::vector<std::uint8_t> out;
    wire::put_u16be(out, static_cast<std::uint16_t>(entries.size()));
    for (const CodeEntry& e : entries) {
        wire::put_u8(out, e.symbol);
        wire::put_u8(out, e.length);
    }
    wire::put_u64be(out, data.size());

    BitWriter writer(out);
    for (std::uint8_t b : data) writer.put(code_of[b], len_of[b]);
    writer.flush();
    return out;
}

std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t> stream) {
    wire::Reader reader(stream);
    const std::uint16_t symbol_count = reader.u16be("symbol count");
    if (symbol_count == 0 || symbol_count > 256)
        throw DecodeError("corrupt Huffman header: symbol count " + std::to_string(symbol_count));

    std::vector<CodeEntry> entries(symbol_count);
    for (auto& e : entries) {
        e.symbol = reader.u8("code table symbol");
        e.length = reader.u8("code table length");
        if (e.length == 0 || e.length > 63)
            throw DecodeError("corrupt Huffman header: code length " + std::to_string(e.length));
    }
    if (!std::is_sorted(entries.begin(), entries.end(), [](const CodeEntry& a, const CodeEntry& b) {
            if (a.length != b.length) return a.length < b.length;
            return a.symbol < b.symbol;
        }))
        throw DecodeError("corrupt Huffman header: table not in canonical order");

    // Kraft sum must not exceed 1 or canonical assignment overflows.
    {
        std::uint64_t kraft = 0; // in units of 2^-63
        for (const auto& e : entries) {
            const std::uint64_t term = 1ull << (63 - e.length);
            if (term > (1ull << 63) - kraft)
                throw DecodeError("corrupt Huffman header: Kraft inequality violated");
            kraft += term;
        }
    }

    const std::vector<std::uint64_t> codes = assign_canonical_codes(entries);
    const std::uint64_t original_len = reader.u64be("original length");

    // Canonical decode tables: first code value and first entry index per length.
    const int max_len = entries.back().length;
    std::vector<std::uint64_t> first_code(static_cast<std::size_t>(max_len) + 1, 0);
    std::vector<std::size_t> first_index(static_cast<std::size_t>(max_len) + 1, 0);
    std::vector<std::size_t> count_at(static_cast<std::size_t>(max_len) + 1, 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const int len = entries[i].length;
        if (count_at[static_cast<std::size_t>(len)] == 0) {
            first_code[static_cast<std::size_t>(len)] = codes[i];
            first_index[static_cast<std::size_t>(len)] = i;
        }
        ++count_at[static_cast<std::size_t>(len)];
    }

    const std::span<const std::uint8_t> payload =
        reader.bytes(reader.remaining(), "bit payload");

    std::vector<std::uint8_t> out;
    out.reserve(original_len);
    std::uint64_t acc = 0;
    int acc_len = 0;
    std::size_t byte_pos = 0;
    int bit_pos = 0;

    while (out.size() < original_len) {
        if (byte_pos >= payload.size())
            throw DecodeError("truncated Huffman bitstream: decoded " +
                              std::to_string(out.size()) + " of " +
                              std::to_string(original_len) + " symbol(s)");
        const int bit = (payload[byte_pos] >> (7 - bit_pos)) & 1;
        if (++bit_pos == 8) {
            bit_pos = 0;
            ++byte_pos;
        }
        acc = (acc << 1) | static_cast<std::uint64_t>(bit);
        ++acc_len;
        if (acc_len > max_len)
            throw DecodeError("corrupt Huffman bitstream: no code matches");
        if (count_at[static_cast<std::size_t>(acc_len)] > 0) {
            const std::uint64_t base = first_code[static_cast<std::size_t>(acc_len)];
            const std::uint64_t offset = acc - base;
            if (acc >= base && offset < count_at[static_cast<std::size_t>(acc_len)]) {
                out.push_back(entries[first_index[static_cast<std::size_t>(acc_len)] +
                                      static_cast<std::size_t>(offset)]
                                  .symbol);
                acc = 0;
                acc_len = 0;
            }
        }
    }

    // Only sub-byte zero padding may remain after the final symbol.
    const std::size_t consumed = byte_pos + (bit_pos > 0 ? 1 : 0);
    if (payload.size() > consumed)
        throw DecodeError("Huffman stream length mismatch: " +
                          std::to_string(payload.size() - consumed) +
                          " unexpected trailing byte(s)");
    return out;
}

} // namespace imcp
