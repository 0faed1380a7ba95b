#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace eisgrpo {

/// The judge's four output symbols. Codes are part of the checkpoint format
/// and must not change.
enum class Token : std::uint8_t {
    Think = 0,
    VerdictA = 1,
    VerdictB = 2,
    Eos = 3,
};

inline constexpr std::size_t kVocabSize = 4;

inline constexpr std::array<Token, kVocabSize> kAllTokens = {Token::Think, Token::VerdictA, Token::VerdictB,
                                                             Token::Eos};

constexpr std::size_t code(Token t) { return static_cast<std::size_t>(t); }

constexpr std::string_view token_name(Token t) {
    switch (t) {
        case Token::Think: return "THINK";
        case Token::VerdictA: return "VA";
        case Token::VerdictB: return "VB";
        case Token::Eos: return "EOS";
    }
    return "?";
}

inline std::optional<Token> token_from_code(std::size_t c) {
    if (c >= kVocabSize) return std::nullopt;
    return static_cast<Token>(c);
}

}  // namespace eisgrpo
