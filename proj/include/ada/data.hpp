#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ada/tensor.hpp"

namespace ada {

enum class Domain { Source, Target };

struct VideoFeatures {
    std::string id;
    Tensor2 frames;  // T x d_in, T >= 1
};

// Per-video frame feature matrices for one domain.
struct FrameFeatureSet {
    std::vector<VideoFeatures> videos;
    std::size_t feat_dim = 0;
    Domain domain = Domain::Source;
};

struct LabelSet {
    struct Entry {
        std::string video_id;
        std::size_t verb = 0;
        std::size_t noun = 0;
    };

    std::vector<Entry> entries;  // file order
    std::size_t num_verbs = 0;   // |V|
    std::size_t num_nouns = 0;   // |N|
    bool from_pragma = false;    // vocab sizes came from a header pragma

    const Entry* find(const std::string& video_id) const;
    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

// Verb-noun co-occurrence counts plus the mask floor used downstream.
struct CooccurrenceMatrix {
    std::size_t num_verbs = 0;
    std::size_t num_nouns = 0;
    std::vector<std::int64_t> counts;  // row-major |V| x |N|
    double epsilon = 0.01;

    std::int64_t at(std::size_t v, std::size_t n) const {
        return counts[v * num_nouns + n];
    }
    std::int64_t& at(std::size_t v, std::size_t n) {
        return counts[v * num_nouns + n];
    }
};

// Knobs for the synthetic source/target stand-in. Action identity lives in
// the first action_signal_dim coordinates; the domain shift (offset plus
// rotation) is confined to the following nuisance_dim coordinates, so it is
// action-irrelevant by construction.
struct SynthConfig {
    std::size_t num_verbs = 6;
    std::size_t num_nouns = 8;
    double valid_pair_fraction = 0.5;
    std::size_t d_in = 32;
    std::size_t min_frames = 4;
    std::size_t max_frames = 8;
    std::size_t samples_per_domain = 240;
    std::size_t action_signal_dim = 8;
    std::size_t nuisance_dim = 16;
    double domain_shift_magnitude = 3.0;
    double feature_noise = 0.4;
    double label_noise = 0.0;
    std::uint64_t rng_seed = 7;

    void validate() const;  // throws ConfigError
};

struct SynthDomain {
    FrameFeatureSet features;
    LabelSet labels;
};

struct SynthDataset {
    SynthDomain source;
    SynthDomain target;
    std::vector<std::pair<std::size_t, std::size_t>> valid_pairs;
};

// Binary feature file (little-endian): magic "ADAF1", u32 version=1,
// u32 num_videos, u32 d_in, then per video u32 id_len, id bytes, u32 T,
// T x d_in f32 row-major payload. f32 storage is promoted to f64 on load.
FrameFeatureSet load_features(const std::string& path,
                              Domain domain = Domain::Source);
void save_features(const std::string& path, const FrameFeatureSet& set);

// CSV "video_id,verb_id,noun_id" with optional first-line pragma
// "#verbs=<int> nouns=<int>". Without a pragma the vocab sizes are inferred
// as max id + 1.
LabelSet load_labels(const std::string& path);
void save_labels(const std::string& path, const LabelSet& labels);

CooccurrenceMatrix build_cooccurrence(const LabelSet& labels);

// TSV of |V| rows x |N| integer columns.
void save_cooccurrence(const std::string& path, const CooccurrenceMatrix& m);
CooccurrenceMatrix load_cooccurrence(const std::string& path);

// Deterministic synthetic domain-shift generator; a pure function of cfg.
SynthDataset generate_synthetic(const SynthConfig& cfg);

}  // namespace ada
