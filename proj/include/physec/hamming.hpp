#pragma once

#include <cstdint>
#include <stdexcept>

#include "physec/bitvec.hpp"

namespace physec::skg {

// Hamming(7,4) syndrome arithmetic. Bit position i (0-based) carries the
// parity-check column i+1, so a nonzero syndrome value names the flipped
// position directly.
inline constexpr int hamming_block_bits = 7;
inline constexpr int hamming_syndrome_bits = 3;

inline int hamming_syndrome(const BitVec& bits, std::size_t block_offset) {
    int syn = 0;
    for (int i = 0; i < hamming_block_bits; ++i)
        if (bits[block_offset + static_cast<std::size_t>(i)]) syn ^= (i + 1);
    return syn;
}

// Moves a 7-bit block into the coset with the given syndrome by flipping at
// most one bit (minimum-weight coset leader).
inline void hamming_correct_to(BitVec& bits, std::size_t block_offset, int target_syndrome) {
    if (target_syndrome < 0 || target_syndrome > 7)
        throw std::invalid_argument("hamming_correct_to: syndrome outside [0,7]");
    const int diff = hamming_syndrome(bits, block_offset) ^ target_syndrome;
    if (diff != 0) bits.flip(block_offset + static_cast<std::size_t>(diff - 1));
}

} // namespace physec::skg
