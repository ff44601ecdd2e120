#include "ada/checkpoint.hpp"

#include <fstream>

#include "binio.hpp"

namespace ada {

namespace {
constexpr char kMagic[] = "ADAM1";
constexpr std::size_t kMagicLen = 5;
}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("save_checkpoint: cannot open " + path + " for writing");
    }
    binio::Writer w(out);
    w.write_bytes(kMagic, kMagicLen);
    const ModelDims d = params.dims();
    w.write_u32(static_cast<std::uint32_t>(d.d_in));
    w.write_u32(static_cast<std::uint32_t>(d.embed_dim));
    w.write_u32(static_cast<std::uint32_t>(d.gcn_depth));
    w.write_u32(static_cast<std::uint32_t>(d.num_verbs));
    w.write_u32(static_cast<std::uint32_t>(d.num_nouns));
    w.write_u32(static_cast<std::uint32_t>(d.disc_hidden));
    params.for_each_array([&w](const double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) w.write_f64(p[i]);
    });
    out.flush();
    if (!out) {
        throw Error("save_checkpoint: write to " + path + " failed");
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("load_checkpoint: cannot open " + path);
    }
    binio::Reader r(in, path);
    r.expect_magic(kMagic, kMagicLen);
    ModelDims d;
    d.d_in = r.read_u32("d_in");
    d.embed_dim = r.read_u32("embed dim");
    d.gcn_depth = r.read_u32("gcn depth");
    d.num_verbs = r.read_u32("verb count");
    d.num_nouns = r.read_u32("noun count");
    d.disc_hidden = r.read_u32("disc hidden");
    ModelParams params = ModelParams::zeros(d);
    params.for_each_array([&r](double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) p[i] = r.read_f64("parameters");
    });
    if (!r.at_eof()) {
        throw FormatError(path + ": trailing bytes after parameters at byte offset " +
                          std::to_string(r.offset()));
    }
    return params;
}

}  // namespace ada
