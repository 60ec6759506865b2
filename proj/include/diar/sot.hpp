#pragma once

#include <string>
#include <vector>

namespace diar {

struct Utterance {
    double start = 0.0;
    double end = 0.0;
    std::string speaker;
    std::vector<std::string> tokens;
};

// Serializes time-stamped multi-speaker utterances into one token stream:
// utterances ordered by (start, speaker, input position), their tokens
// concatenated with "<sc>" between consecutive utterances and "<eos>"
// appended at the end.
std::vector<std::string> serialize_sot(const std::vector<Utterance>& utts);

// One utterance per line: <start> <end> <speaker> <token> [<token> ...],
// whitespace separated. Lines starting with '#' are comments; blank lines
// separate groups, each meant to be serialized on its own.
std::vector<std::vector<Utterance>> parse_sot_tsv(const std::string& text);

}  // namespace diar
