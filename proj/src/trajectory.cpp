#include "pmt/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pmt/rng.hpp"

namespace pmt {

std::vector<TrajectorySequence> windowize(const std::vector<LbsRecord>& records,
                                          const TimeSpan& span, const RegionVocabulary& vocab) {
    if (span.end <= span.start || (span.end - span.start) % kWindowSeconds != 0) {
        throw std::invalid_argument("span must be a positive multiple of 30 minutes");
    }
    const int T = static_cast<int>((span.end - span.start) / kWindowSeconds);
    const TokenId missing = vocab.missing_token();

    // Per user and window keep the winning record's (timestamp, input order).
    struct Best {
        int64_t ts;
        size_t order;
        TokenId token;
    };
    std::map<std::string, std::vector<Best>> per_user;

    for (size_t i = 0; i < records.size(); ++i) {
        const LbsRecord& r = records[i];
        if (r.timestamp < span.start || r.timestamp >= span.end) continue;
        auto token = assign_region(r.position, vocab);
        if (!token) continue;  // out of bounds: caller opted to drop
        auto& wins = per_user[r.user_id];
        if (wins.empty()) wins.assign(T, Best{0, 0, missing});
        const int w = static_cast<int>((r.timestamp - span.start) / kWindowSeconds);
        Best& b = wins[w];
        if (b.token == missing || r.timestamp > b.ts || (r.timestamp == b.ts && i > b.order)) {
            b = Best{r.timestamp, i, *token};
        }
    }

    std::vector<TrajectorySequence> out;
    out.reserve(per_user.size());
    for (auto& [user, wins] : per_user) {
        TrajectorySequence seq;
        seq.user_id = user;
        seq.start_epoch = span.start;
        seq.tokens.resize(T);
        for (int w = 0; w < T; ++w) seq.tokens[w] = wins[w].token;
        out.push_back(std::move(seq));
    }
    return out;
}

double temporal_occupancy(const TrajectorySequence& seq, const RegionVocabulary& vocab) {
    if (seq.tokens.empty()) throw std::invalid_argument("empty sequence");
    int known = 0;
    for (TokenId t : seq.tokens) {
        if (vocab.is_region_token(t)) ++known;
    }
    return static_cast<double>(known) / static_cast<double>(seq.tokens.size());
}

std::vector<TrajectorySequence> filter_by_occupancy(const std::vector<TrajectorySequence>& seqs,
                                                    const RegionVocabulary& vocab, double min_occ) {
    std::vector<TrajectorySequence> out;
    for (const auto& s : seqs) {
        if (temporal_occupancy(s, vocab) > min_occ) out.push_back(s);
    }
    return out;
}

std::pair<std::vector<TrajectorySequence>, std::vector<TrajectorySequence>> split_users(
    const std::vector<TrajectorySequence>& seqs, double train_fraction, uint64_t seed) {
    std::vector<size_t> order(seqs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    // Shuffle a user-id-sorted index so the split does not depend on input order.
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return seqs[a].user_id < seqs[b].user_id; });
    Rng rng(sub_seed(seed, "split_users"));
    rng.shuffle(order);

    const size_t n_train =
        static_cast<size_t>(std::lround(train_fraction * static_cast<double>(seqs.size())));
    std::pair<std::vector<TrajectorySequence>, std::vector<TrajectorySequence>> out;
    for (size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(seqs[order[i]]);
    }
    return out;
}

void save_sequences(const std::vector<TrajectorySequence>& seqs, const RegionVocabulary& vocab,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& s : seqs) {
        out << s.user_id << "|" << s.start_epoch << "|";
        for (int t = 0; t < s.length(); ++t) {
            if (t) out << ",";
            out << (s.tokens[t] == vocab.missing_token() ? kMissingFileToken : s.tokens[t]);
        }
        out << "\n";
    }
}

std::vector<TrajectorySequence> load_sequences(const std::string& path,
                                               const RegionVocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<TrajectorySequence> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const size_t p1 = line.find('|');
        const size_t p2 = line.find('|', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": bad sequence line");
        }
        TrajectorySequence seq;
        seq.user_id = line.substr(0, p1);
        seq.start_epoch = std::stoll(line.substr(p1 + 1, p2 - p1 - 1));
        if (seq.start_epoch % kWindowSeconds != 0) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": start_epoch not window-aligned");
        }
        std::stringstream ss(line.substr(p2 + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const long v = std::stol(tok);
            if (v == kMissingFileToken) {
                seq.tokens.push_back(vocab.missing_token());
            } else if (v >= 0 && v < vocab.region_count()) {
                seq.tokens.push_back(static_cast<TokenId>(v));
            } else {
                throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                            ": token out of range: " + tok);
            }
        }
        if (seq.tokens.empty()) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty sequence");
        }
        out.push_back(std::move(seq));
    }
    return out;
}

void save_lbs_csv(const std::vector<LbsRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "user_id,timestamp,x,y\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.position.x, r.position.y);
        out << r.user_id << "," << r.timestamp << "," << buf << "\n";
    }
}

std::vector<LbsRecord> load_lbs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "user_id,timestamp,x,y") {
        throw std::invalid_argument("bad LBS csv header in " + path);
    }
    std::vector<LbsRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string user, ts, x, y;
        if (!std::getline(ss, user, ',') || !std::getline(ss, ts, ',') ||
            !std::getline(ss, x, ',') || !std::getline(ss, y, ',')) {
            throw std::invalid_argument("bad LBS csv row in " + path);
        }
        LbsRecord r;
        r.user_id = user;
        r.timestamp = std::stoll(ts);
        r.position = {std::stod(x), std::stod(y)};
        if (!std::isfinite(r.position.x) || !std::isfinite(r.position.y)) {
            throw std::invalid_argument("non-finite position in " + path);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace pmt
