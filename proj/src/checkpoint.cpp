#include "qlm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qlm {

namespace {

constexpr char kMagic[8] = {'Q', 'L', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
  public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <typename U>
    void uint(U v) {
        unsigned char buf[sizeof(U)];
        for (std::size_t k = 0; k < sizeof(U); ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
        out_.write(reinterpret_cast<const char*>(buf), sizeof(U));
    }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        uint(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void tensor(const std::string& name, const CMatd& m, bool complex) {
        str(name);
        uint(static_cast<std::uint8_t>(complex ? 1 : 0));
        uint(static_cast<std::uint64_t>(m.rows()));
        uint(static_cast<std::uint64_t>(m.cols()));
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                f64(m(i, j).real());
                if (complex) f64(m(i, j).imag());
            }
        }
    }

  private:
    std::ostream& out_;
};

class Reader {
  public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
    }
    template <typename U>
    U uint() {
        unsigned char buf[sizeof(U)];
        bytes(reinterpret_cast<char*>(buf), sizeof(U));
        U v = 0;
        for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(buf[k]) << (8 * k);
        return v;
    }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
    std::string str() {
        const auto n = uint<std::uint32_t>();
        if (n > (1u << 30)) fail("implausible string length");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    [[noreturn]] void fail(const std::string& why) const {
        throw DataError("checkpoint " + source_ + ": " + why);
    }

  private:
    std::istream& in_;
    std::string source_;
};

CMatd real_block(const Eigen::MatrixXd& m) { return m.cast<std::complex<double>>(); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint '" + tmp.string() + "'");
        Writer w(out);
        out.write(kMagic, sizeof kMagic);
        w.uint(kVersion);

        const ModelParams& p = ckpt.params;
        std::vector<std::pair<std::string, std::string>> meta = describe(p.config);
        for (std::size_t k = 0; k < p.pipelines.size(); ++k) {
            meta.emplace_back("pipeline." + std::to_string(k) + ".n", std::to_string(p.pipelines[k].n));
        }
        for (const auto& [k, v] : ckpt.meta) meta.emplace_back("meta." + k, v);
        w.uint(static_cast<std::uint32_t>(meta.size()));
        for (const auto& [k, v] : meta) {
            w.str(k);
            w.str(v);
        }

        w.uint(static_cast<std::uint32_t>(ckpt.vocab.size()));
        for (const auto& tok : ckpt.vocab.tokens()) w.str(tok);

        std::uint32_t n_tensors = 2 + static_cast<std::uint32_t>(ckpt.extras.size());
        for (const auto& pipe : p.pipelines) n_tensors += 1 + static_cast<std::uint32_t>(pipe.ee.weights.size());
        w.uint(n_tensors);
        w.tensor("embedding.amplitudes", real_block(p.embedding.amplitudes), false);
        w.tensor("embedding.phases", real_block(p.embedding.phases), false);
        const bool cplx = p.config.complex_valued();
        for (std::size_t k = 0; k < p.pipelines.size(); ++k) {
            const std::string base = "pipeline." + std::to_string(k);
            for (std::size_t l = 0; l < p.pipelines[k].ee.weights.size(); ++l) {
                w.tensor(base + ".ee." + std::to_string(l), p.pipelines[k].ee.weights[l], cplx);
            }
            w.tensor(base + ".bank", p.pipelines[k].bank.vectors, cplx);
        }
        for (const auto& [name, m] : ckpt.extras) w.tensor("extra." + name, m, true);
        if (!out) throw DataError("failed writing checkpoint '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
    Reader r(in, path.string());

    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("bad magic");
    const auto version = r.uint<std::uint32_t>();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));

    Checkpoint ck;
    std::map<int, int> pipe_n;
    const auto n_meta = r.uint<std::uint32_t>();
    for (std::uint32_t k = 0; k < n_meta; ++k) {
        const std::string key = r.str();
        const std::string value = r.str();
        if (key.starts_with("meta.")) {
            ck.meta[key.substr(5)] = value;
        } else if (key.starts_with("pipeline.")) {
            const auto dot = key.find('.', 9);
            pipe_n[std::stoi(key.substr(9, dot - 9))] = std::stoi(value);
        } else if (!apply_setting(ck.params.config, key, value)) {
            r.fail("unknown meta key '" + key + "'");
        }
    }

    const auto n_vocab = r.uint<std::uint32_t>();
    std::vector<std::string> tokens;
    for (std::uint32_t k = 0; k < n_vocab; ++k) tokens.push_back(r.str());
    if (tokens.size() >= 2) tokens.erase(tokens.begin(), tokens.begin() + 2);
    ck.vocab = Vocabulary::from_tokens(std::move(tokens));

    ModelParams& p = ck.params;
    p.pipelines.resize(pipe_n.size());
    for (const auto& [k, n] : pipe_n) {
        if (k < 0 || static_cast<std::size_t>(k) >= p.pipelines.size()) r.fail("bad pipeline index");
        p.pipelines[static_cast<std::size_t>(k)].n = n;
        p.pipelines[static_cast<std::size_t>(k)].ee.n = n;
        p.pipelines[static_cast<std::size_t>(k)].ee.word_dim = p.config.dim;
    }

    const auto n_tensors = r.uint<std::uint32_t>();
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
        const std::string name = r.str();
        const bool cplx = r.uint<std::uint8_t>() == 1;
        const auto rows = static_cast<Index>(r.uint<std::uint64_t>());
        const auto cols = static_cast<Index>(r.uint<std::uint64_t>());
        if (rows < 0 || cols < 0 || rows * cols > (Index{1} << 32)) r.fail("implausible tensor shape");
        CMatd m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                const double re = r.f64();
                const double im = cplx ? r.f64() : 0.0;
                m(i, j) = {re, im};
            }
        }
        if (name == "embedding.amplitudes") {
            p.embedding.amplitudes = m.real();
        } else if (name == "embedding.phases") {
            p.embedding.phases = m.real();
        } else if (name.starts_with("pipeline.")) {
            const auto dot = name.find('.', 9);
            const auto k = static_cast<std::size_t>(std::stoi(name.substr(9, dot - 9)));
            if (k >= p.pipelines.size()) r.fail("tensor for unknown pipeline: " + name);
            const std::string rest = name.substr(dot + 1);
            if (rest == "bank") {
                p.pipelines[k].bank.vectors = std::move(m);
            } else if (rest.starts_with("ee.")) {
                const auto l = static_cast<std::size_t>(std::stoi(rest.substr(3)));
                auto& ws = p.pipelines[k].ee.weights;
                if (ws.size() <= l) ws.resize(l + 1);
                ws[l] = std::move(m);
            } else {
                r.fail("unknown tensor '" + name + "'");
            }
        } else if (name.starts_with("extra.")) {
            ck.extras[name.substr(6)] = std::move(m);
        } else {
            r.fail("unknown tensor '" + name + "'");
        }
    }
    p.config.validate();
    if (p.embedding.amplitudes.rows() != p.config.vocab_size) r.fail("embedding rows differ from vocab_size");
    return ck;
}

}  // namespace qlm
