// Command-line front end: fit codebooks, encode/decode images or raw
// feature files, report stream stats.

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "xq/codec_io.hpp"
#include "xq/hierarchy.hpp"
#include "xq/image.hpp"
#include "xq/training.hpp"

namespace fs = std::filesystem;
using namespace xq;

namespace {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("XQ_LOG");
        if (env == nullptr) {
            return LogLevel::kError;
        }
        std::string v = env;
        if (v == "debug") {
            return LogLevel::kDebug;
        }
        if (v == "info") {
            return LogLevel::kInfo;
        }
        return LogLevel::kError;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) {
        std::cerr << "[info] " << msg << "\n";
    }
}

struct SampleSet {
    int count = 0;
    int dim = 0;
    int side = 0;  // 0 when the samples carry no spatial arrangement
    std::vector<double> data;
};

std::map<std::string, std::string> read_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open sidecar " + path);
    }
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

SampleSet load_raw_samples(const std::string& path) {
    auto meta = read_meta(path + ".meta");
    if (!meta.count("count") || !meta.count("dim")) {
        throw FormatError("sidecar " + path +
                          ".meta must define count= and dim=");
    }
    SampleSet s;
    s.count = std::stoi(meta["count"]);
    s.dim = std::stoi(meta["dim"]);
    if (meta.count("side")) {
        s.side = std::stoi(meta["side"]);
    }
    if (s.count < 1 || s.dim < 1) {
        throw FormatError("sidecar declares non-positive count or dim");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    size_t expected = static_cast<size_t>(s.count) * s.dim * 4;
    if (bytes.size() != expected) {
        throw FormatError("raw sample file " + path + " holds " +
                          std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected));
    }
    s.data.reserve(static_cast<size_t>(s.count) * s.dim);
    for (size_t i = 0; i < bytes.size(); i += 4) {
        uint32_t u = 0;
        for (int b = 0; b < 4; ++b) {
            u |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[i + b]))
                 << (8 * b);
        }
        s.data.push_back(static_cast<double>(std::bit_cast<float>(u)));
    }
    return s;
}

void store_raw_samples(const std::string& path, const SampleSet& s) {
    std::string bytes;
    bytes.reserve(static_cast<size_t>(s.count) * s.dim * 4);
    for (double v : s.data) {
        uint32_t u = std::bit_cast<uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) {
            bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
        }
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp + " for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError("write failure on " + tmp);
        }
    }
    fs::rename(tmp, path);
    std::ostringstream meta;
    meta << "count=" << s.count << "\ndim=" << s.dim << "\n";
    if (s.side > 0) {
        meta << "side=" << s.side << "\n";
    }
    std::ofstream metaout(path + ".meta", std::ios::trunc);
    if (!metaout) {
        throw IoError("cannot open " + path + ".meta for writing");
    }
    metaout << meta.str();
}

SampleSet grid_to_samples(const FeatureGrid& g) {
    SampleSet s;
    s.count = g.positions();
    s.dim = g.dim();
    s.side = g.height() == g.width() ? g.height() : 0;
    s.data = g.data();
    return s;
}

SampleSet load_fit_input(const std::string& input, int patch_side) {
    fs::path p(input);
    if (fs::is_directory(p)) {
        SampleSet all;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.path().extension() == ".png") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw IoError("directory " + input + " holds no .png files");
        }
        for (const fs::path& f : files) {
            FeatureGrid g = patchify(read_png(f.string()), patch_side);
            if (all.count == 0) {
                all.dim = g.dim();
            } else if (all.dim != g.dim()) {
                throw ShapeError("inconsistent patch dims across images");
            }
            all.count += g.positions();
            all.data.insert(all.data.end(), g.data().begin(),
                            g.data().end());
        }
        return all;
    }
    if (p.extension() == ".png") {
        return grid_to_samples(patchify(read_png(input), patch_side));
    }
    return load_raw_samples(input);
}

std::vector<std::string> branch_codebook_paths(const std::string& out,
                                               int branches) {
    if (branches == 1) {
        return {out};
    }
    fs::path p(out);
    std::string stem = (p.parent_path() / p.stem()).string();
    std::string ext = p.extension().string();
    std::vector<std::string> paths;
    for (int b = 0; b < branches; ++b) {
        paths.push_back(stem + ".b" + std::to_string(b) + ext);
    }
    return paths;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    for (const std::string& s : split_list(csv)) {
        out.push_back(std::stoi(s));
    }
    return out;
}

ScaleSchedule default_schedule(int side, int steps) {
    std::vector<int> sides(steps);
    for (int i = 0; i < steps; ++i) {
        int shift = steps - 1 - i;
        sides[i] = shift >= 31 ? 1 : std::max(1, side >> shift);
    }
    return ScaleSchedule(std::move(sides));
}

HierarchySpec build_spec(const std::string& variant,
                         const std::string& schedule_csv, double gamma,
                         int side) {
    HierarchySpec spec = parse_variant(variant);
    spec.blend_filter = BlendFilter::box(gamma);
    if (!schedule_csv.empty()) {
        spec.schedule = ScaleSchedule(parse_int_list(schedule_csv));
    } else if (spec.multiscale && side > 0) {
        spec.schedule = default_schedule(side, spec.residual_steps);
    }
    return spec;
}

std::vector<Codebook> load_codebooks(const std::string& csv) {
    std::vector<Codebook> cbs;
    for (const std::string& path : split_list(csv)) {
        cbs.push_back(read_codebook(path));
    }
    return cbs;
}

// --- fit -----------------------------------------------------------------

// Per-vector residual pass: collects the step inputs the shared codebook
// will actually see, so the refit covers small-norm residuals too.
std::vector<double> collect_residual_pool(std::span<const double> samples,
                                          int count, int dim,
                                          const Codebook& cb, int steps) {
    std::vector<double> pool(samples.begin(), samples.end());
    std::vector<double> r(dim);
    for (int i = 0; i < count; ++i) {
        auto s = samples.subspan(static_cast<size_t>(i) * dim,
                                 static_cast<size_t>(dim));
        std::copy(s.begin(), s.end(), r.begin());
        for (int step = 1; step < steps; ++step) {
            QuantizedVector q = vq_quantize(r, cb);
            for (int c = 0; c < dim; ++c) {
                r[c] -= q.vector[c];
            }
            pool.insert(pool.end(), r.begin(), r.end());
        }
    }
    return pool;
}

int cmd_fit(const std::string& input, const std::string& variant,
            int codebook_size, int iters, uint64_t seed,
            const std::string& out, int patch_side, int dim_flag) {
    SampleSet samples = load_fit_input(input, patch_side);
    if (dim_flag > 0 && dim_flag != samples.dim) {
        throw ConfigError("--dim " + std::to_string(dim_flag) +
                          " does not match input dim " +
                          std::to_string(samples.dim));
    }
    HierarchySpec spec = parse_variant(variant);
    if (spec.leaf != LeafKind::VQ) {
        throw ConfigError("variant " + variant +
                          " uses a binary leaf; no codebook to fit");
    }
    const int P = spec.product_branches;
    ProductConfig pq = ProductConfig::equal_split(samples.dim, P);
    const int dp = pq.branch_dims.front();

    // Deterministic 90/10 split: every 10th sample is held out.
    std::vector<double> train, held;
    int train_count = 0, held_count = 0;
    for (int i = 0; i < samples.count; ++i) {
        auto row = std::span<const double>(samples.data)
                           .subspan(static_cast<size_t>(i) * samples.dim,
                                    static_cast<size_t>(samples.dim));
        if (i % 10 == 9) {
            held.insert(held.end(), row.begin(), row.end());
            ++held_count;
        } else {
            train.insert(train.end(), row.begin(), row.end());
            ++train_count;
        }
    }
    if (train_count < codebook_size) {
        throw ValueError("training sample count " +
                         std::to_string(train_count) +
                         " is smaller than requested codebook size " +
                         std::to_string(codebook_size));
    }

    Rng rng(seed);
    std::vector<std::string> paths = branch_codebook_paths(out, P);
    for (int b = 0; b < P; ++b) {
        // Channel slice for this branch.
        std::vector<double> branch_train;
        branch_train.reserve(static_cast<size_t>(train_count) * dp);
        for (int i = 0; i < train_count; ++i) {
            const double* row = train.data() +
                                static_cast<size_t>(i) * samples.dim + b * dp;
            branch_train.insert(branch_train.end(), row, row + dp);
        }
        KMeansResult km = kmeans_fit(branch_train, train_count, dp,
                                     codebook_size, iters, rng);
        if (spec.residual_steps > 1) {
            std::vector<double> pool = collect_residual_pool(
                    branch_train, train_count, dp, km.codebook,
                    spec.residual_steps);
            int pool_count = static_cast<int>(pool.size() / dp);
            log_info("branch " + std::to_string(b) + ": refitting on " +
                     std::to_string(pool_count) + " residual-pooled samples");
            km = kmeans_fit(pool, pool_count, dp, codebook_size, iters, rng);
        }
        write_codebook(paths[b], km.codebook);

        double held_obj = 0.0;
        UtilizationTracker tracker(static_cast<uint64_t>(codebook_size));
        for (int i = 0; i < held_count; ++i) {
            std::span<const double> row{held.data() +
                                                static_cast<size_t>(i) *
                                                        samples.dim +
                                                b * dp,
                                        static_cast<size_t>(dp)};
            QuantizedVector q = vq_quantize(row, km.codebook);
            held_obj += q.sq_error;
            tracker.record(q.code);
        }
        std::cout << "branch=" << b << " codebook=" << paths[b]
                  << " objective=" << km.objective.back();
        if (held_count > 0) {
            std::cout << " heldout_objective=" << held_obj / held_count
                      << " heldout_utilization=" << tracker.utilization();
        }
        std::cout << "\n";
    }
    return 0;
}

// --- encode --------------------------------------------------------------

FeatureGrid load_encode_input(const std::string& image,
                              const std::string& features, int patch_side,
                              Image* original) {
    if (!image.empty()) {
        Image img = read_png(image);
        if (original != nullptr) {
            *original = img;
        }
        return patchify(img, patch_side);
    }
    SampleSet s = load_raw_samples(features);
    int side = s.side;
    if (side == 0) {
        side = static_cast<int>(std::lround(std::sqrt(s.count)));
        if (side * side != s.count) {
            throw ConfigError("feature count " + std::to_string(s.count) +
                              " is not a square; add side= to the sidecar");
        }
    }
    if (side * side != s.count) {
        throw ConfigError("sidecar side " + std::to_string(side) +
                          " inconsistent with count " +
                          std::to_string(s.count));
    }
    return {side, side, s.dim, std::move(s.data)};
}

int cmd_encode(const std::string& image, const std::string& features,
               const std::string& variant, const std::string& codebooks_csv,
               const std::string& schedule_csv, const std::string& out,
               int patch_side, double gamma, bool training, uint64_t seed) {
    Image original;
    FeatureGrid g = load_encode_input(image, features, patch_side,
                                      image.empty() ? nullptr : &original);
    HierarchySpec spec = build_spec(variant, schedule_csv, gamma, g.height());
    std::vector<Codebook> cbs = load_codebooks(codebooks_csv);
    Rng rng(seed);
    QuantOutcome outcome = hier_encode(g, spec, cbs, training, rng);

    std::cout << "variant=" << format_variant(spec)
              << " side=" << g.height() << " dim=" << g.dim()
              << " active_steps=" << outcome.active_steps << "\n";
    // Per-step refinement report: error left after each partial sum.
    {
        std::vector<int> dims = branch_dims(spec, cbs, g.dim());
        BlendFilter filter = spec.multiscale ? spec.blend_filter
                                             : BlendFilter::identity();
        FeatureGrid recon;
        for (int i = 0; i < outcome.active_steps; ++i) {
            std::vector<FeatureGrid> parts;
            for (int b = 0; b < spec.product_branches; ++b) {
                const Codebook* cb =
                        spec.leaf == LeafKind::VQ ? &cbs[b] : nullptr;
                const CodeGrid& cg = outcome.branches[b].steps[i];
                FeatureGrid step(cg.height, cg.width, dims[b]);
                for (int pos = 0; pos < cg.positions(); ++pos) {
                    std::vector<double> v = leaf_lookup(spec.leaf, dims[b],
                                                        cb, cg.codes[pos]);
                    auto dst = step.vector(pos);
                    std::copy(v.begin(), v.end(), dst.begin());
                }
                parts.push_back(blend(resample(step, g.height()), filter));
            }
            recon = i == 0 ? pq_join(parts)
                           : grid_add(recon, pq_join(parts));
            std::cout << "step=" << i + 1 << " mse=" << mse(g, recon) << "\n";
        }
    }
    std::cout << "total_sq_error=" << outcome.total_sq_error
              << " recon_mse=" << outcome.recon_mse
              << " bits=" << outcome.total_bits << "\n";
    if (!image.empty()) {
        Image recon = unpatchify(outcome.quantized, patch_side);
        double p = psnr(original, recon);
        if (std::isinf(p)) {
            std::cout << "psnr=inf\n";
        } else {
            std::cout << "psnr=" << p << "\n";
        }
    }
    write_stream(out, make_stream(spec, g.height(), outcome));
    return 0;
}

// --- decode --------------------------------------------------------------

int cmd_decode(const std::string& stream_path,
               const std::string& codebooks_csv, const std::string& out,
               int patch_side, double gamma, bool raw, int dim_flag,
               const std::string& reference) {
    CodeStream stream = read_stream(stream_path);
    HierarchySpec spec = parse_variant(stream.variant);
    spec.blend_filter = BlendFilter::box(gamma);
    spec.schedule = ScaleSchedule(
            std::vector<int>(stream.schedule.begin(), stream.schedule.end()));
    std::vector<Codebook> cbs = load_codebooks(codebooks_csv);
    int dim = dim_flag;
    if (spec.leaf == LeafKind::VQ) {
        dim = 0;
        for (const Codebook& cb : cbs) {
            dim += cb.dim();
        }
    } else if (dim <= 0) {
        dim = raw ? 0 : 3 * patch_side * patch_side;
    }
    if (dim <= 0) {
        throw ConfigError("--dim is required for raw LFQ/BSQ decode");
    }
    FeatureGrid g = hier_decode(stream.codes, spec, cbs, stream.side, dim);
    if (raw) {
        store_raw_samples(out, grid_to_samples(g));
    } else {
        Image img = unpatchify(g, patch_side);
        write_png(out, img);
        if (!reference.empty()) {
            double p = psnr(read_png(reference), img);
            if (std::isinf(p)) {
                std::cout << "psnr=inf\n";
            } else {
                std::cout << "psnr=" << p << "\n";
            }
        }
    }
    return 0;
}

// --- stats ---------------------------------------------------------------

int cmd_stats(const std::string& stream_path,
              const std::string& codebooks_csv, int dim_flag,
              const std::string& csv_out) {
    CodeStream stream = read_stream(stream_path);
    HierarchySpec spec = parse_variant(stream.variant);
    std::vector<Codebook> cbs = load_codebooks(codebooks_csv);
    int dim = dim_flag;
    if (spec.leaf == LeafKind::VQ) {
        dim = 0;
        for (const Codebook& cb : cbs) {
            dim += cb.dim();
        }
    } else if (dim <= 0) {
        throw ConfigError("--dim is required for LFQ/BSQ stats");
    }
    std::vector<int> dims = branch_dims(spec, cbs, dim);

    int64_t tokens = 0;
    for (int i = 0; i < stream.active_steps; ++i) {
        tokens += static_cast<int64_t>(stream.schedule[i]) *
                  stream.schedule[i];
    }
    tokens *= stream.branches;

    std::cout << "variant=" << stream.variant << "\n";
    std::cout << "side=" << stream.side << "\n";
    std::cout << "branches=" << static_cast<int>(stream.branches) << "\n";
    std::cout << "steps=" << stream.schedule.size() << "\n";
    std::cout << "active_steps=" << static_cast<int>(stream.active_steps)
              << "\n";
    std::cout << "tokens=" << tokens << "\n";
    std::cout << "bits=" << stream_bits(stream, spec, cbs, dim) << "\n";

    uint64_t used_total = 0, size_total = 0;
    std::ostringstream csv;
    csv << "branch,step,code,count\n";
    for (int b = 0; b < stream.branches; ++b) {
        const Codebook* cb = spec.leaf == LeafKind::VQ ? &cbs[b] : nullptr;
        uint64_t J = leaf_codebook_size(spec.leaf, dims[b], cb);
        UtilizationTracker tracker(J);
        for (int i = 0; i < stream.active_steps; ++i) {
            std::map<uint32_t, uint64_t> hist;
            for (uint32_t code : stream.codes[b].steps[i].codes) {
                if (code >= J) {
                    throw ValueError("code " + std::to_string(code) +
                                     " out of range for codebook size " +
                                     std::to_string(J));
                }
                tracker.record(code);
                ++hist[code];
            }
            std::cout << "hist.branch" << b << ".step" << i << "=";
            bool first = true;
            for (const auto& [code, count] : hist) {
                if (!first) {
                    std::cout << " ";
                }
                std::cout << code << ":" << count;
                first = false;
                csv << b << "," << i << "," << code << "," << count << "\n";
            }
            std::cout << "\n";
        }
        uint64_t used = 0;
        for (uint64_t j = 0; j < J; ++j) {
            if (tracker.hits(static_cast<uint32_t>(j)) > 0) {
                ++used;
            }
        }
        used_total += used;
        size_total += J;
        std::cout << "utilization.branch" << b << "="
                  << tracker.utilization() << "\n";
    }
    std::cout << "utilization="
              << static_cast<double>(used_total) /
                         static_cast<double>(size_total)
              << "\n";
    if (!csv_out.empty()) {
        std::ofstream out(csv_out, std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + csv_out + " for writing");
        }
        out << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xqtool: hierarchical vector-quantization codec"};
    app.require_subcommand(1);

    std::string input, variant = "XQ-V", out, image, features, codebooks;
    std::string schedule, stream, reference, csv_out;
    int codebook_size = 256, iters = 50, patch = 8, dim = 0;
    uint64_t seed = 0;
    double gamma = 0.5;
    bool training = false, raw = false;

    CLI::App* fit = app.add_subcommand("fit", "learn VQ codebooks offline");
    fit->add_option("--input", input,
                    "raw sample file, PNG file or PNG directory")
            ->required();
    fit->add_option("--variant", variant, "variant name (default XQ-V)");
    fit->add_option("--codebook-size", codebook_size, "codewords per branch");
    fit->add_option("--iters", iters, "Lloyd iterations");
    fit->add_option("--seed", seed, "RNG seed");
    fit->add_option("--patch", patch, "patch side for image input");
    fit->add_option("--dim", dim, "expected sample dim (checked)");
    fit->add_option("--out", out, "output codebook path")->required();

    CLI::App* enc = app.add_subcommand("encode", "encode an image or features");
    enc->add_option("--image", image, "input PNG");
    enc->add_option("--features", features, "raw feature grid file");
    enc->add_option("--variant", variant, "variant name")->required();
    enc->add_option("--codebooks", codebooks,
                    "comma-separated codebook files (VQ variants)");
    enc->add_option("--schedule", schedule,
                    "comma-separated per-step resolutions");
    enc->add_option("--patch", patch, "patch side for image input");
    enc->add_option("--gamma", gamma, "multi-scale blend gamma");
    enc->add_flag("--training", training, "enable quantizer dropout");
    enc->add_option("--seed", seed, "RNG seed for dropout");
    enc->add_option("--out", out, "output stream path")->required();

    CLI::App* dec = app.add_subcommand("decode", "decode a stream");
    dec->add_option("--stream", stream, "input stream file")->required();
    dec->add_option("--codebooks", codebooks, "comma-separated codebook files");
    dec->add_option("--patch", patch, "patch side for image output");
    dec->add_option("--gamma", gamma, "multi-scale blend gamma");
    dec->add_flag("--raw", raw, "write raw features instead of a PNG");
    dec->add_option("--dim", dim, "feature dim (LFQ/BSQ raw decode)");
    dec->add_option("--reference", reference, "PNG to report PSNR against");
    dec->add_option("--out", out, "output path")->required();

    CLI::App* st = app.add_subcommand("stats", "report stream statistics");
    st->add_option("--stream", stream, "input stream file")->required();
    st->add_option("--codebooks", codebooks, "comma-separated codebook files");
    st->add_option("--dim", dim, "feature dim (LFQ/BSQ)");
    st->add_option("--csv", csv_out, "write histogram CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (fit->parsed()) {
            return cmd_fit(input, variant, codebook_size, iters, seed, out,
                           patch, dim);
        }
        if (enc->parsed()) {
            if (image.empty() == features.empty()) {
                std::cerr << "encode needs exactly one of --image/--features\n";
                return 2;
            }
            return cmd_encode(image, features, variant, codebooks, schedule,
                              out, patch, gamma, training, seed);
        }
        if (dec->parsed()) {
            return cmd_decode(stream, codebooks, out, patch, gamma, raw, dim,
                              reference);
        }
        if (st->parsed()) {
            return cmd_stats(stream, codebooks, dim, csv_out);
        }
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
