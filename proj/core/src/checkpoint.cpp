// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>

namespace decalforge {

namespace {

constexpr char kMagic[8] = {'D', 'F', 'S', 'C', 'E', 'N', 'E', '1'};
constexpr char kEnd[8] = {'D', 'F', 'E', 'N', 'D', '0', '0', '1'};

class Writer {
public:
    template <typename T>
    void pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void doubles(const double* p, std::size_t n) {
        pod<std::uint64_t>(n);
        raw(p, n * sizeof(double));
    }
    void vec(const VectorXd& v) { doubles(v.data(), v.size()); }
    void image(const RgbImage& img) {
        pod<std::int32_t>(img.width);
        pod<std::int32_t>(img.height);
        raw(img.pixels.data(), img.pixels.size() * sizeof(Vec3));
    }
    void mlp(const Mlp& m, std::uint64_t seed) {
        pod<std::int32_t>(m.input_dim());
        pod<std::int32_t>(m.hidden_dim());
        pod<std::int32_t>(m.output_dim());
        pod<std::uint64_t>(seed);
        vec(m.params());
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& in) : in_(in) {}

    template <typename T>
    T pod() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void raw(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t count(std::size_t elem_size) {
        const auto n = pod<std::uint64_t>();
        if (elem_size > 0 && n > (in_.size() - pos_) / elem_size) {
            throw ParseError("checkpoint truncated or corrupt (array length exceeds file)");
        }
        return static_cast<std::size_t>(n);
    }
    VectorXd vec() {
        const std::size_t n = count(sizeof(double));
        VectorXd v(static_cast<Eigen::Index>(n));
        raw(v.data(), n * sizeof(double));
        return v;
    }
    int dim(const char* what) {
        const auto v = pod<std::int32_t>();
        if (v < 0 || v > (1 << 24)) {
            throw ParseError(fmt::format("checkpoint has invalid {} {}", what, v));
        }
        return v;
    }
    RgbImage image() {
        const int w = dim("image width");
        const int h = dim("image height");
        need(std::size_t(w) * h * sizeof(Vec3));
        RgbImage img(w, h);
        raw(img.pixels.data(), img.pixels.size() * sizeof(Vec3));
        return img;
    }
    Mlp mlp() {
        const int in = dim("mlp input");
        const int hidden = dim("mlp hidden");
        const int out = dim("mlp output");
        pod<std::uint64_t>();
        Mlp m(in, hidden, out);
        VectorXd p = vec();
        if (p.size() != m.num_params()) {
            throw ParseError("checkpoint network parameter count does not match its shape");
        }
        m.params() = std::move(p);
        return m;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (n > in_.size() - pos_) {
            throw ParseError("checkpoint truncated");
        }
    }

    const std::string& in_;
    std::size_t pos_ = 0;
};

void write_config(Writer& w, const SceneConfig& c) {
    for (int v : {c.texture_resolution, c.env_width, c.env_height, c.env_levels, c.prefilter_spp, c.lut_resolution,
                  c.lut_samples, c.hidden, c.chart.max_iters}) {
        w.pod<std::int32_t>(v);
    }
    w.pod<std::uint8_t>(c.use_lr_net ? 1 : 0);
    for (double v : {c.init_env_radiance, c.init_shadow_logit, c.init_raw_albedo, c.init_raw_roughness,
                     c.init_raw_metalness, c.chart.margin, c.chart.tol}) {
        w.pod<double>(v);
    }
    w.pod<std::uint64_t>(c.seed);
}

SceneConfig read_config(Reader& r) {
    SceneConfig c;
    c.texture_resolution = r.pod<std::int32_t>();
    c.env_width = r.pod<std::int32_t>();
    c.env_height = r.pod<std::int32_t>();
    c.env_levels = r.pod<std::int32_t>();
    c.prefilter_spp = r.pod<std::int32_t>();
    c.lut_resolution = r.pod<std::int32_t>();
    c.lut_samples = r.pod<std::int32_t>();
    c.hidden = r.pod<std::int32_t>();
    c.chart.max_iters = r.pod<std::int32_t>();
    c.use_lr_net = r.pod<std::uint8_t>() != 0;
    c.init_env_radiance = r.pod<double>();
    c.init_shadow_logit = r.pod<double>();
    c.init_raw_albedo = r.pod<double>();
    c.init_raw_roughness = r.pod<double>();
    c.init_raw_metalness = r.pod<double>();
    c.chart.margin = r.pod<double>();
    c.chart.tol = r.pod<double>();
    c.seed = r.pod<std::uint64_t>();
    return c;
}

void write_rgba(Writer& w, const Rgba8Image& img) {
    w.pod<std::int32_t>(img.width);
    w.pod<std::int32_t>(img.height);
    w.raw(img.data.data(), img.data.size());
}

Rgba8Image read_rgba(Reader& r) {
    const int w = r.dim("decal width");
    const int h = r.dim("decal height");
    Rgba8Image img(w, h);
    r.raw(img.data.data(), img.data.size());
    return img;
}

} // namespace

std::string serialize_scene(const Scene& s) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(kCheckpointVersion);
    write_config(w, s.config);

    const auto& verts = s.mesh.vertices();
    const auto& faces = s.mesh.faces();
    const auto& normals = s.mesh.vertex_normals();
    const auto& flags = s.mesh.uv_area_flags();
    w.pod<std::uint64_t>(verts.size());
    w.raw(verts.data(), verts.size() * sizeof(Vec3));
    w.raw(normals.data(), normals.size() * sizeof(Vec3));
    w.pod<std::uint64_t>(faces.size());
    w.raw(faces.data(), faces.size() * sizeof(Face));
    w.raw(flags.data(), flags.size());

    w.pod<std::uint64_t>(s.chart.vertex_uv.size());
    w.raw(s.chart.vertex_uv.data(), s.chart.vertex_uv.size() * sizeof(Vec2));
    w.pod<double>(s.chart.margin);
    w.pod<double>(s.chart.arap_energy);

    w.vec(s.features);
    w.mlp(s.texture_net, s.config.seed);
    w.mlp(s.lr_net, s.config.seed + 1);

    w.image(s.env.raw());
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(s.env.mips().size()));
    for (const auto& m : s.env.mips()) {
        w.image(m);
    }
    const auto lut = s.env.lut_ptr();
    w.pod<std::int32_t>(lut ? lut->resolution() : 0);
    if (lut) {
        w.raw(lut->table().data(), lut->table().size() * sizeof(Vec2));
    }

    w.pod<std::uint8_t>(s.texture ? 1 : 0);
    if (s.texture) {
        w.image(*s.texture);
    }

    w.pod<std::uint64_t>(s.roughness_override.size());
    for (const auto& o : s.roughness_override) {
        w.pod<std::uint8_t>(o ? 1 : 0);
        w.pod<double>(o.value_or(0.0));
    }

    w.pod<std::uint64_t>(s.edits.size());
    for (const auto& e : s.edits) {
        w.pod<std::uint8_t>(static_cast<std::uint8_t>(e.kind));
        w.pod<std::int32_t>(e.id);
        w.raw(e.anchors.data(), sizeof(e.anchors));
        write_rgba(w, e.image);
        w.pod<std::uint8_t>(e.value ? 1 : 0);
        w.pod<double>(e.value.value_or(0.0));
    }
    w.pod<std::int32_t>(s.next_edit_id);
    w.raw(kEnd, sizeof(kEnd));
    return w.take();
}

Scene deserialize_scene(const std::string& bytes) {
    Reader r(bytes);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw ParseError("not a decalforge checkpoint (bad magic)");
    }
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ParseError(fmt::format("unsupported checkpoint version {} (expected {})", version, kCheckpointVersion));
    }
    Scene s;
    s.config = read_config(r);

    const std::size_t nv = r.count(2 * sizeof(Vec3));
    std::vector<Vec3> verts(nv);
    std::vector<Vec3> normals(nv);
    r.raw(verts.data(), nv * sizeof(Vec3));
    r.raw(normals.data(), nv * sizeof(Vec3));
    const std::size_t nf = r.count(sizeof(Face) + 1);
    std::vector<Face> faces(nf);
    std::vector<std::uint8_t> flags(nf);
    r.raw(faces.data(), nf * sizeof(Face));
    r.raw(flags.data(), nf);
    s.mesh = TriMesh::from_arrays(std::move(verts), std::move(faces), std::move(normals)).with_uv_area(flags);
    if (s.mesh.num_vertices() != static_cast<int>(nv) || s.mesh.num_faces() != static_cast<int>(nf)) {
        throw ParseError("checkpoint mesh did not survive validation unchanged");
    }

    const std::size_t nuv = r.count(sizeof(Vec2));
    if (nuv != nv) {
        throw ParseError("checkpoint chart does not match the mesh");
    }
    s.chart.vertex_uv.resize(nuv);
    r.raw(s.chart.vertex_uv.data(), nuv * sizeof(Vec2));
    s.chart.margin = r.pod<double>();
    s.chart.arap_energy = r.pod<double>();

    s.features = r.vec();
    if (s.features.size() != Eigen::Index(nv) * VertexFeatures::kStride) {
        throw ParseError("checkpoint feature count does not match the mesh");
    }
    s.texture_net = r.mlp();
    s.lr_net = r.mlp();

    RgbImage raw = r.image();
    s.env = EnvLight(raw.width, raw.height, 1.0);
    s.env.raw() = std::move(raw);
    const auto nmips = r.pod<std::uint32_t>();
    if (nmips > 64) {
        throw ParseError("checkpoint has an implausible mip count");
    }
    std::vector<RgbImage> mips;
    for (std::uint32_t k = 0; k < nmips; ++k) {
        mips.push_back(r.image());
    }
    const int lut_res = r.dim("LUT resolution");
    std::shared_ptr<const BrdfLut> lut;
    if (lut_res > 0) {
        std::vector<Vec2> table(std::size_t(lut_res) * lut_res);
        r.raw(table.data(), table.size() * sizeof(Vec2));
        lut = std::make_shared<const BrdfLut>(BrdfLut::from_table(lut_res, std::move(table)));
    }
    if (!mips.empty() && lut) {
        s.env.restore(std::move(mips), lut);
    }

    if (r.pod<std::uint8_t>() != 0) {
        s.texture = std::make_shared<const RgbImage>(r.image());
    }

    const std::size_t no = r.count(1 + sizeof(double));
    if (no != nv) {
        throw ParseError("checkpoint override count does not match the mesh");
    }
    s.roughness_override.resize(no);
    for (auto& o : s.roughness_override) {
        const bool has = r.pod<std::uint8_t>() != 0;
        const double v = r.pod<double>();
        if (has) {
            o = v;
        }
    }

    const std::size_t ne = r.count(1);
    for (std::size_t i = 0; i < ne; ++i) {
        EditRecord e;
        const auto kind = r.pod<std::uint8_t>();
        if (kind > static_cast<std::uint8_t>(EditRecord::Kind::Revert)) {
            throw ParseError(fmt::format("checkpoint edit {} has unknown kind {}", i, kind));
        }
        e.kind = static_cast<EditRecord::Kind>(kind);
        e.id = r.pod<std::int32_t>();
        r.raw(e.anchors.data(), sizeof(e.anchors));
        e.image = read_rgba(r);
        const bool has = r.pod<std::uint8_t>() != 0;
        const double v = r.pod<double>();
        if (has) {
            e.value = v;
        }
        s.edits.push_back(std::move(e));
    }
    s.next_edit_id = r.pod<std::int32_t>();
    char end[8];
    r.raw(end, sizeof(end));
    if (std::memcmp(end, kEnd, sizeof(end)) != 0 || !r.done()) {
        throw ParseError("checkpoint trailer missing or corrupt");
    }
    return s;
}

void save_checkpoint(const Scene& scene, const std::filesystem::path& path) {
    const std::string bytes = serialize_scene(scene);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError(fmt::format("cannot write checkpoint {}", path.string()));
        }
    }
    std::filesystem::rename(tmp, path);
}

Scene load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(fmt::format("cannot read checkpoint {}", path.string()));
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        return deserialize_scene(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

} // namespace decalforge
