#include "eisgrpo/rewards.hpp"

namespace eisgrpo {

Verdict parse_verdict(std::span<const Token> tokens) {
    std::size_t i = 0;
    while (i < tokens.size() && tokens[i] == Token::Think) ++i;
    // Need exactly a verdict then EOS as the final two symbols.
    if (i + 2 != tokens.size()) return Verdict::Unparseable;
    if (tokens[i + 1] != Token::Eos) return Verdict::Unparseable;
    switch (tokens[i]) {
        case Token::VerdictA: return Verdict::A;
        case Token::VerdictB: return Verdict::B;
        default: return Verdict::Unparseable;
    }
}

bool well_formed(std::span<const Token> tokens) { return parse_verdict(tokens) != Verdict::Unparseable; }

double format_reward(std::span<const Token> tokens) {
    return well_formed(tokens) ? kFormatRewardGood : kFormatRewardBad;
}

double judgment_reward(std::span<const Token> tokens, Label gold) {
    const Verdict v = parse_verdict(tokens);
    const Verdict want = gold == Label::A ? Verdict::A : Verdict::B;
    return v == want ? 1.0 : 0.0;
}

RewardBreakdown score_output(std::span<const Token> tokens, Label gold) {
    RewardBreakdown r;
    r.judgment = judgment_reward(tokens, gold);
    r.format = format_reward(tokens);
    r.total = r.judgment + r.format;
    return r;
}

double total_reward(std::span<const Token> tokens, Label gold) { return score_output(tokens, gold).total; }

}  // namespace eisgrpo
