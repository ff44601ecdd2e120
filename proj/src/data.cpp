#include "ada/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ada/rng.hpp"
#include "binio.hpp"

namespace ada {

namespace {
constexpr char kFeatureMagic[] = "ADAF1";
constexpr std::size_t kMagicLen = 5;
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

const LabelSet::Entry* LabelSet::find(const std::string& video_id) const {
    auto it = index_.find(video_id);
    return it == index_.end() ? nullptr : &entries[it->second];
}

void LabelSet::rebuild_index() {
    index_.clear();
    index_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        index_.emplace(entries[i].video_id, i);
    }
}

// ---------------------------------------------------------------------------
// Feature files
// ---------------------------------------------------------------------------

FrameFeatureSet load_features(const std::string& path, Domain domain) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("load_features: cannot open " + path);
    }
    binio::Reader r(in, path);
    r.expect_magic(kFeatureMagic, kMagicLen);
    const std::uint32_t version = r.read_u32("version");
    if (version != kFeatureVersion) {
        throw FormatError(path + ": unsupported version " +
                          std::to_string(version) + " at byte offset 5");
    }
    const std::uint32_t num_videos = r.read_u32("video count");
    const std::uint32_t d_in = r.read_u32("feature dim");

    FrameFeatureSet set;
    set.feat_dim = d_in;
    set.domain = domain;
    set.videos.reserve(num_videos);
    std::unordered_set<std::string> seen;
    for (std::uint32_t v = 0; v < num_videos; ++v) {
        const std::uint32_t id_len = r.read_u32("id length");
        std::string id = r.read_string(id_len, "video id");
        if (!seen.insert(id).second) {
            throw DataError(path + ": duplicate video id \"" + id + "\"");
        }
        const std::uint32_t t = r.read_u32("frame count");
        if (t == 0) {
            throw DataError(path + ": video \"" + id + "\" has 0 frames");
        }
        Tensor2 frames(t, d_in);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const float f = r.read_f32("frame payload");
            if (std::isnan(f)) {
                throw DataError(path + ": NaN in payload of video \"" + id +
                                "\" at byte offset " +
                                std::to_string(r.offset() - 4));
            }
            frames.data[i] = static_cast<double>(f);
        }
        set.videos.push_back({std::move(id), std::move(frames)});
    }
    if (!r.at_eof()) {
        throw FormatError(path + ": trailing bytes after last video at byte offset " +
                          std::to_string(r.offset()));
    }
    return set;
}

void save_features(const std::string& path, const FrameFeatureSet& set) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("save_features: cannot open " + path + " for writing");
    }
    binio::Writer w(out);
    w.write_bytes(kFeatureMagic, kMagicLen);
    w.write_u32(kFeatureVersion);
    w.write_u32(static_cast<std::uint32_t>(set.videos.size()));
    w.write_u32(static_cast<std::uint32_t>(set.feat_dim));
    for (const auto& video : set.videos) {
        w.write_u32(static_cast<std::uint32_t>(video.id.size()));
        w.write_bytes(video.id.data(), video.id.size());
        w.write_u32(static_cast<std::uint32_t>(video.frames.rows));
        for (double x : video.frames.data) {
            w.write_f32(static_cast<float>(x));
        }
    }
    out.flush();
    if (!out) {
        throw Error("save_features: write to " + path + " failed");
    }
}

// ---------------------------------------------------------------------------
// Label files
// ---------------------------------------------------------------------------

namespace {

std::size_t parse_id_field(const std::string& field, const char* what,
                           std::size_t line_no) {
    if (!field.empty() && field[0] == '-') {
        throw ParseError("line " + std::to_string(line_no) + ": negative " +
                         std::string(what) + " id \"" + field + "\"");
    }
    std::size_t value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || field.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": non-integer " +
                         std::string(what) + " id \"" + field + "\"");
    }
    return value;
}

// "#verbs=<int> nouns=<int>"
bool parse_pragma(const std::string& line, std::size_t& verbs,
                  std::size_t& nouns) {
    constexpr const char* kVerbKey = "#verbs=";
    constexpr const char* kNounKey = " nouns=";
    if (line.rfind(kVerbKey, 0) != 0) return false;
    const std::size_t noun_at = line.find(kNounKey);
    if (noun_at == std::string::npos) return false;
    const std::string vstr = line.substr(7, noun_at - 7);
    const std::string nstr = line.substr(noun_at + 7);
    auto parse = [](const std::string& s, std::size_t& out) {
        const char* b = s.data();
        auto [ptr, ec] = std::from_chars(b, b + s.size(), out);
        return ec == std::errc{} && ptr == b + s.size() && !s.empty();
    };
    return parse(vstr, verbs) && parse(nstr, nouns);
}

}  // namespace

LabelSet load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("load_labels: cannot open " + path);
    }
    LabelSet set;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_verb = 0, max_noun = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && !line.empty() && line[0] == '#') {
            if (!parse_pragma(line, set.num_verbs, set.num_nouns)) {
                throw ParseError("line 1: malformed pragma \"" + line +
                                 "\" (expected \"#verbs=<int> nouns=<int>\")");
            }
            set.from_pragma = true;
            continue;
        }
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                                       : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected \"video_id,verb_id,noun_id\", got \"" +
                             line + "\"");
        }
        LabelSet::Entry e;
        e.video_id = line.substr(0, c1);
        e.verb = parse_id_field(line.substr(c1 + 1, c2 - c1 - 1), "verb", line_no);
        e.noun = parse_id_field(line.substr(c2 + 1), "noun", line_no);
        if (e.video_id.empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": empty video id");
        }
        if (!seen.insert(e.video_id).second) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": duplicate video id \"" + e.video_id + "\"");
        }
        max_verb = std::max(max_verb, e.verb);
        max_noun = std::max(max_noun, e.noun);
        any = true;
        set.entries.push_back(std::move(e));
    }
    if (set.from_pragma) {
        for (const auto& e : set.entries) {
            if (e.verb >= set.num_verbs || e.noun >= set.num_nouns) {
                throw DataError(path + ": label (" + std::to_string(e.verb) + "," +
                                std::to_string(e.noun) +
                                ") exceeds pragma vocab sizes (" +
                                std::to_string(set.num_verbs) + "," +
                                std::to_string(set.num_nouns) + ")");
            }
        }
    } else if (any) {
        set.num_verbs = max_verb + 1;
        set.num_nouns = max_noun + 1;
    }
    set.rebuild_index();
    return set;
}

void save_labels(const std::string& path, const LabelSet& labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("save_labels: cannot open " + path + " for writing");
    }
    if (labels.from_pragma) {
        out << "#verbs=" << labels.num_verbs << " nouns=" << labels.num_nouns
            << "\n";
    }
    for (const auto& e : labels.entries) {
        out << e.video_id << ',' << e.verb << ',' << e.noun << "\n";
    }
    out.flush();
    if (!out) {
        throw Error("save_labels: write to " + path + " failed");
    }
}

// ---------------------------------------------------------------------------
// Co-occurrence
// ---------------------------------------------------------------------------

CooccurrenceMatrix build_cooccurrence(const LabelSet& labels) {
    CooccurrenceMatrix m;
    m.num_verbs = labels.num_verbs;
    m.num_nouns = labels.num_nouns;
    m.counts.assign(m.num_verbs * m.num_nouns, 0);
    for (const auto& e : labels.entries) {
        ++m.at(e.verb, e.noun);
    }
    return m;
}

void save_cooccurrence(const std::string& path, const CooccurrenceMatrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("save_cooccurrence: cannot open " + path + " for writing");
    }
    for (std::size_t v = 0; v < m.num_verbs; ++v) {
        for (std::size_t n = 0; n < m.num_nouns; ++n) {
            if (n) out << '\t';
            out << m.at(v, n);
        }
        out << '\n';
    }
    out.flush();
    if (!out) {
        throw Error("save_cooccurrence: write to " + path + " failed");
    }
}

CooccurrenceMatrix load_cooccurrence(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("load_cooccurrence: cannot open " + path);
    }
    CooccurrenceMatrix m;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::int64_t> row;
    while (std::getline(in, line)) {
        ++line_no;
        row.clear();
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            const std::string cell = line.substr(
                start, tab == std::string::npos ? std::string::npos : tab - start);
            std::int64_t value = 0;
            const char* b = cell.data();
            auto [ptr, ec] = std::from_chars(b, b + cell.size(), value);
            if (ec != std::errc{} || ptr != b + cell.size() || cell.empty()) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": non-integer count \"" + cell + "\"");
            }
            if (value < 0) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": negative count " + std::to_string(value));
            }
            row.push_back(value);
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (line_no == 1) {
            m.num_nouns = row.size();
        } else if (row.size() != m.num_nouns) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(m.num_nouns) + " columns, got " +
                             std::to_string(row.size()));
        }
        m.counts.insert(m.counts.end(), row.begin(), row.end());
        ++m.num_verbs;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
    if (num_verbs == 0 || num_nouns == 0) {
        throw ConfigError("synth: vocab sizes must be positive");
    }
    if (d_in == 0) {
        throw ConfigError("synth: d_in must be positive");
    }
    if (valid_pair_fraction <= 0.0 || valid_pair_fraction > 1.0) {
        throw ConfigError("synth: valid_pair_fraction must be in (0,1], got " +
                          std::to_string(valid_pair_fraction));
    }
    if (action_signal_dim + nuisance_dim > d_in) {
        throw ConfigError("synth: action_signal_dim + nuisance_dim = " +
                          std::to_string(action_signal_dim + nuisance_dim) +
                          " exceeds d_in = " + std::to_string(d_in));
    }
    if (action_signal_dim == 0) {
        throw ConfigError("synth: action_signal_dim must be positive");
    }
    if (min_frames == 0 || min_frames > max_frames) {
        throw ConfigError("synth: frames_per_video range [" +
                          std::to_string(min_frames) + "," +
                          std::to_string(max_frames) + "] is invalid");
    }
    const double want = valid_pair_fraction *
                        static_cast<double>(num_verbs * num_nouns);
    if (static_cast<std::size_t>(std::llround(want)) <
        std::max(num_verbs, num_nouns)) {
        throw ConfigError(
            "synth: valid_pair_fraction too small to cover every verb and noun");
    }
    if (label_noise < 0.0 || label_noise > 1.0) {
        throw ConfigError("synth: label_noise must be in [0,1]");
    }
}

namespace {

struct PairSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<char> grid;  // membership, |V| x |N|
};

PairSet draw_valid_pairs(const SynthConfig& cfg, Rng& rng) {
    const std::size_t v_count = cfg.num_verbs;
    const std::size_t n_count = cfg.num_nouns;
    const std::size_t target = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(
               cfg.valid_pair_fraction * static_cast<double>(v_count * n_count))));

    PairSet out;
    out.grid.assign(v_count * n_count, 0);
    auto add = [&](std::size_t v, std::size_t n) {
        char& cell = out.grid[v * n_count + n];
        if (cell) return false;
        cell = 1;
        out.pairs.emplace_back(v, n);
        return true;
    };

    // Cyclic cover: pairing two shuffled cycles touches every verb and every
    // noun at least once, with no duplicate pairs.
    std::vector<std::size_t> vperm(v_count), nperm(n_count);
    for (std::size_t i = 0; i < v_count; ++i) vperm[i] = i;
    for (std::size_t i = 0; i < n_count; ++i) nperm[i] = i;
    rng.shuffle(vperm);
    rng.shuffle(nperm);
    for (std::size_t i = 0; i < std::max(v_count, n_count); ++i) {
        add(vperm[i % v_count], nperm[i % n_count]);
    }
    while (out.pairs.size() < target) {
        add(rng.below(v_count), rng.below(n_count));
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

double quantize_f32(double x) {
    return static_cast<double>(static_cast<float>(x));
}

}  // namespace

SynthDataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);

    PairSet pairs = draw_valid_pairs(cfg, rng);
    const std::size_t asd = cfg.action_signal_dim;
    const std::size_t nd = cfg.nuisance_dim;

    // Class prototypes live in the action-signal coordinates only.
    Tensor2 verb_proto(cfg.num_verbs, asd);
    for (double& x : verb_proto.data) x = rng.normal();
    Tensor2 noun_proto(cfg.num_nouns, asd);
    for (double& x : noun_proto.data) x = rng.normal();

    // Anisotropic nuisance scales; without them the target rotation would be
    // invisible on isotropic noise.
    Vec nui_scale(nd);
    for (double& s : nui_scale) s = rng.uniform(0.5, 1.5);
    std::vector<double> plane_angle(nd / 2);
    for (double& a : plane_angle) {
        a = cfg.domain_shift_magnitude * rng.uniform(0.5, 1.0);
    }
    Vec offset_dir(nd, 0.0);
    if (nd > 0) {
        double norm2 = 0.0;
        for (double& x : offset_dir) {
            x = rng.normal();
            norm2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : offset_dir) x *= inv;
    }

    auto gen_domain = [&](Domain domain, const char* prefix) {
        SynthDomain out;
        out.features.feat_dim = cfg.d_in;
        out.features.domain = domain;
        out.labels.num_verbs = cfg.num_verbs;
        out.labels.num_nouns = cfg.num_nouns;
        out.labels.from_pragma = true;
        const bool shifted = domain == Domain::Target;

        for (std::size_t s = 0; s < cfg.samples_per_domain; ++s) {
            const auto [verb, noun] = pairs.pairs[rng.below(pairs.pairs.size())];
            const std::size_t t =
                cfg.min_frames + rng.below(cfg.max_frames - cfg.min_frames + 1);
            Tensor2 frames(t, cfg.d_in);
            for (std::size_t r = 0; r < t; ++r) {
                double* row = frames.row(r);
                for (std::size_t j = 0; j < asd; ++j) {
                    row[j] = verb_proto.at(verb, j) + noun_proto.at(noun, j) +
                             cfg.feature_noise * rng.normal();
                }
                Vec z(nd);
                for (std::size_t j = 0; j < nd; ++j) {
                    z[j] = nui_scale[j] * rng.normal();
                }
                if (shifted) {
                    for (std::size_t pl = 0; pl + 1 < nd; pl += 2) {
                        const double c = std::cos(plane_angle[pl / 2]);
                        const double sn = std::sin(plane_angle[pl / 2]);
                        const double z0 = z[pl], z1 = z[pl + 1];
                        z[pl] = c * z0 - sn * z1;
                        z[pl + 1] = sn * z0 + c * z1;
                    }
                    for (std::size_t j = 0; j < nd; ++j) {
                        z[j] += cfg.domain_shift_magnitude * offset_dir[j];
                    }
                }
                for (std::size_t j = 0; j < nd; ++j) row[asd + j] = z[j];
                for (std::size_t j = asd + nd; j < cfg.d_in; ++j) {
                    row[j] = cfg.feature_noise * rng.normal();
                }
                for (std::size_t j = 0; j < cfg.d_in; ++j) {
                    row[j] = quantize_f32(row[j]);
                }
            }

            std::size_t emit_verb = verb, emit_noun = noun;
            if (domain == Domain::Source) {
                const double u = rng.uniform();
                if (u < cfg.label_noise) {
                    const auto [nv, nn] = pairs.pairs[rng.below(pairs.pairs.size())];
                    emit_verb = nv;
                    emit_noun = nn;
                }
            }

            char id[32];
            std::snprintf(id, sizeof(id), "%s-%06zu", prefix, s);
            out.features.videos.push_back({id, std::move(frames)});
            out.labels.entries.push_back({id, emit_verb, emit_noun});
        }
        out.labels.rebuild_index();
        return out;
    };

    SynthDataset data;
    data.source = gen_domain(Domain::Source, "src");
    data.target = gen_domain(Domain::Target, "tgt");
    data.valid_pairs = std::move(pairs.pairs);
    return data;
}

}  // namespace ada
