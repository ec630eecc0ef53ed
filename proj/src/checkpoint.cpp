#include "absa/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "absa/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian; big-endian hosts need byte swapping");

namespace absa {

using nlohmann::json;

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void raw(const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    const std::string& data() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    std::uint64_t offset() const { return off_; }
    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        std::uint32_t v;
        std::memcpy(&v, take(4), 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        std::memcpy(&v, take(8), 8);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        return std::string(take(n), n);
    }
    const char* take(std::uint64_t n) {
        if (off_ + n > data_.size())
            throw FormatError("checkpoint " + path_ + ": truncated", off_);
        const char* p = data_.data() + off_;
        off_ += n;
        return p;
    }
    void expect_end() {
        if (off_ != data_.size())
            throw FormatError("checkpoint " + path_ + ": trailing bytes", off_);
    }

private:
    std::string data_;
    std::string path_;
    std::uint64_t off_ = 0;
};

json provenance_to_json(const std::vector<StageProvenance>& prov) {
    json arr = json::array();
    for (const auto& p : prov)
        arr.push_back({{"name", p.name},
                       {"data_hash", p.data_hash},
                       {"config_hash", p.config_hash},
                       {"seed", p.seed}});
    return arr;
}

std::vector<StageProvenance> provenance_from_json(const json& arr) {
    std::vector<StageProvenance> out;
    for (const auto& p : arr) {
        StageProvenance sp;
        sp.name = p.at("name").get<std::string>();
        sp.data_hash = p.at("data_hash").get<std::string>();
        sp.config_hash = p.at("config_hash").get<std::string>();
        sp.seed = p.at("seed").get<std::uint64_t>();
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    Writer w;
    w.raw(Checkpoint::magic, 8);
    w.u32(cp.format_version);
    w.u32(static_cast<std::uint32_t>(cp.tensors.size()));

    std::uint64_t offset = 0;
    for (const auto& [name, t] : cp.tensors) {
        w.str(name);
        w.u8(0);  // dtype f64
        w.u32(static_cast<std::uint32_t>(t.shape().size()));
        for (std::size_t d : t.shape()) w.u64(d);
        std::uint64_t bytes = t.size() * sizeof(double);
        w.u64(offset);
        w.u64(bytes);
        offset += bytes;
    }
    w.u64(offset);
    for (const auto& [name, t] : cp.tensors) w.raw(t.data(), t.size() * sizeof(double));

    json blob;
    blob["vocabulary"] = {{"tokens", cp.vocab_tokens}, {"freqs", cp.vocab_freqs}};
    blob["model_config"] = cp.model_config;
    blob["provenance"] = provenance_to_json(cp.provenance);
    blob["metrics"] = cp.metrics;
    std::string js = blob.dump();
    w.u64(js.size());
    w.raw(js.data(), js.size());

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write checkpoint: " + tmp);
        out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
        if (!out) throw ConfigError("short write on checkpoint: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ConfigError("cannot move checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path);

    const char* m = r.take(8);
    if (std::memcmp(m, Checkpoint::magic, 8) != 0)
        throw FormatError("checkpoint " + path + ": bad magic", 0);
    Checkpoint cp;
    cp.format_version = r.u32();
    if (cp.format_version > Checkpoint::supported_version)
        throw FormatError("checkpoint " + path + ": version " +
                              std::to_string(cp.format_version) + " exceeds supported " +
                              std::to_string(Checkpoint::supported_version),
                          8);

    struct Entry {
        std::string name;
        Shape shape;
        std::uint64_t offset, bytes;
    };
    std::uint32_t count = r.u32();
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.name = r.str();
        std::uint8_t dtype = r.u8();
        if (dtype != 0)
            throw FormatError("checkpoint " + path + ": unknown dtype " + std::to_string(dtype),
                              r.offset() - 1);
        std::uint32_t ndim = r.u32();
        for (std::uint32_t d = 0; d < ndim; ++d)
            e.shape.push_back(static_cast<std::size_t>(r.u64()));
        e.offset = r.u64();
        e.bytes = r.u64();
        entries.push_back(std::move(e));
    }
    std::uint64_t payload_size = r.u64();
    std::uint64_t payload_at = r.offset();
    const char* payload = r.take(payload_size);
    for (auto& e : entries) {
        std::size_t n = 1;
        for (std::size_t d : e.shape) n *= d;
        if (e.bytes != n * sizeof(double) || e.offset + e.bytes > payload_size)
            throw FormatError("checkpoint " + path + ": tensor '" + e.name +
                                  "' has inconsistent manifest entry",
                              payload_at + e.offset);
        std::vector<double> values(n);
        std::memcpy(values.data(), payload + e.offset, e.bytes);
        cp.tensors.emplace_back(e.name, Tensor(e.shape, std::move(values)));
    }

    std::uint64_t json_len = r.u64();
    std::uint64_t json_at = r.offset();
    std::string js(r.take(json_len), json_len);
    r.expect_end();
    json blob;
    try {
        blob = json::parse(js);
    } catch (const json::exception& e) {
        throw FormatError("checkpoint " + path + ": bad JSON blob: " + e.what(), json_at);
    }
    try {
        cp.vocab_tokens = blob.at("vocabulary").at("tokens").get<std::vector<std::string>>();
        cp.vocab_freqs = blob.at("vocabulary").at("freqs").get<std::vector<std::uint64_t>>();
        cp.model_config = blob.at("model_config");
        cp.provenance = provenance_from_json(blob.at("provenance"));
        cp.metrics = blob.at("metrics");
    } catch (const json::exception& e) {
        throw FormatError("checkpoint " + path + ": blob missing fields: " + e.what(), json_at);
    }
    return cp;
}

Checkpoint make_checkpoint(const Model& model, const Vocabulary& vocab,
                           std::vector<StageProvenance> provenance, nlohmann::json metrics) {
    Checkpoint cp;
    for (const auto& [name, var] : model.named_parameters())
        cp.tensors.emplace_back(name, var.value());
    cp.vocab_tokens = vocab.tokens();
    cp.vocab_freqs = vocab.freqs();
    const EncoderConfig& e = model.encoder().config();
    cp.model_config = {
        {"vocab_size", e.vocab_size},
        {"embed_dim", e.embed_dim},
        {"hidden_dim", e.hidden_dim},
        {"num_layers", e.num_layers},
        {"weight_drop_p", e.weight_drop_p},
        {"embed_drop_p", e.embed_drop_p},
        {"variational_drop_p", e.variational_drop_p},
        {"tie_decoder", e.tie_decoder},
        {"head",
         {{"kind", to_string(model.head().kind)},
          {"n_classes", model.head().n_classes},
          {"hidden", model.head().hidden}}},
    };
    cp.provenance = std::move(provenance);
    cp.metrics = std::move(metrics);
    return cp;
}

Vocabulary vocab_from_checkpoint(const Checkpoint& cp) {
    return Vocabulary::from_tokens(cp.vocab_tokens, cp.vocab_freqs);
}

EncoderConfig encoder_config_from_checkpoint(const Checkpoint& cp) {
    const json& c = cp.model_config;
    EncoderConfig e;
    try {
        e.vocab_size = c.at("vocab_size").get<std::size_t>();
        e.embed_dim = c.at("embed_dim").get<std::size_t>();
        e.hidden_dim = c.at("hidden_dim").get<std::size_t>();
        e.num_layers = c.at("num_layers").get<std::size_t>();
        e.weight_drop_p = c.at("weight_drop_p").get<double>();
        e.embed_drop_p = c.at("embed_drop_p").get<double>();
        e.variational_drop_p = c.at("variational_drop_p").get<double>();
        e.tie_decoder = c.at("tie_decoder").get<bool>();
    } catch (const json::exception& ex) {
        throw ValidationError(std::string("checkpoint model_config incomplete: ") + ex.what());
    }
    return e;
}

HeadSpec head_spec_from_checkpoint(const Checkpoint& cp) {
    const json& h = cp.model_config.at("head");
    HeadSpec spec;
    spec.kind = head_kind_from_string(h.at("kind").get<std::string>());
    spec.n_classes = h.at("n_classes").get<int>();
    spec.hidden = h.at("hidden").get<std::size_t>();
    return spec;
}

Model model_from_checkpoint(const Checkpoint& cp) {
    EncoderConfig cfg = encoder_config_from_checkpoint(cp);
    HeadSpec head = head_spec_from_checkpoint(cp);
    Model model(cfg, head, /*seed=*/0);
    auto named = model.named_parameters();
    std::vector<ad::Var> params;
    for (const auto& [name, var] : named) {
        const Tensor* t = cp.find(name);
        if (!t) throw ValidationError("checkpoint missing tensor '" + name + "'");
        if (t->shape() != var.shape())
            throw ValidationError("checkpoint tensor '" + name + "' has shape " +
                                  shape_str(t->shape()) + ", expected " +
                                  shape_str(var.shape()));
        params.push_back(ad::leaf(*t, true));
    }
    model.set_parameters(params);
    return model;
}

}  // namespace absa
